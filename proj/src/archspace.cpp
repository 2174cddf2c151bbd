#include "unetsearch/archspace.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace unetsearch {

std::string_view unit_name(Unit unit) {
  switch (unit) {
    case Unit::kConv3x3: return "Conv3x3";
    case Unit::kConv5x5: return "Conv5x5";
    case Unit::kInstanceNorm: return "InstanceNorm";
    case Unit::kReLU: return "ReLU";
    case Unit::kMish: return "Mish";
  }
  return "?";
}

int OpSequence::kernel() const {
  for (auto u : units) {
    if (u == Unit::kConv3x3) return 3;
    if (u == Unit::kConv5x5) return 5;
  }
  return 0;
}

bool OpSequence::has_instance_norm() const {
  return std::find(units.begin(), units.end(), Unit::kInstanceNorm) != units.end();
}

bool OpSequence::pre_activation() const {
  return !units.empty() &&
         (units.back() == Unit::kConv3x3 || units.back() == Unit::kConv5x5);
}

std::string OpSequence::describe() const {
  std::string out;
  for (auto u : units) {
    if (!out.empty()) out += " -> ";
    out += unit_name(u);
  }
  return out;
}

const std::array<OpSequence, 16>& op_table() {
  using enum Unit;
  static const std::array<OpSequence, 16> table = {{
      {0, {kConv3x3, kReLU}},
      {1, {kConv3x3, kMish}},
      {2, {kConv3x3, kInstanceNorm, kReLU}},
      {3, {kConv3x3, kInstanceNorm, kMish}},
      {4, {kConv5x5, kReLU}},
      {5, {kConv5x5, kMish}},
      {6, {kConv5x5, kInstanceNorm, kReLU}},
      {7, {kConv5x5, kInstanceNorm, kMish}},
      {8, {kReLU, kConv3x3}},
      {9, {kMish, kConv3x3}},
      {10, {kInstanceNorm, kReLU, kConv3x3}},
      {11, {kInstanceNorm, kMish, kConv3x3}},
      {12, {kReLU, kConv5x5}},
      {13, {kMish, kConv5x5}},
      {14, {kInstanceNorm, kReLU, kConv5x5}},
      {15, {kInstanceNorm, kMish, kConv5x5}},
  }};
  return table;
}

BlockGraph decode_block(const BlockGene& gene, const SearchSpaceConfig& space) {
  const int k = space.max_nodes;
  if (gene.conn_bits.size() != static_cast<std::size_t>(space.conn_gene_bits())) {
    throw std::invalid_argument("decode_block: connection gene length mismatch");
  }

  // Bit n of has_pred / has_succ marks node n+1.
  std::uint32_t has_pred = 0;
  std::uint32_t has_succ = 0;
  BlockGraph graph;
  graph.op_id = gene.op_id;
  graph.max_nodes = k;
  for (int to = 2; to <= k; ++to) {
    for (int from = 1; from < to; ++from) {
      if (!gene.connected(from, to)) continue;
      graph.edges.push_back({from, to});
      has_succ |= 1u << (from - 1);
      has_pred |= 1u << (to - 1);
    }
  }
  std::sort(graph.edges.begin(), graph.edges.end());

  // Isolated nodes carry no edges, so dropping them never isolates another
  // node: a single pass reaches the fixpoint.
  for (int node = 1; node <= k; ++node) {
    const std::uint32_t bit = 1u << (node - 1);
    if (!((has_pred | has_succ) & bit)) continue;
    graph.active_nodes.push_back(node);
    if (!(has_pred & bit)) graph.input_targets.push_back(node);
    if (!(has_succ & bit)) graph.output_sources.push_back(node);
  }
  return graph;
}

std::string block_name(int genome_index, int stages) {
  if (genome_index < stages) return "e" + std::to_string(genome_index);
  return "d" + std::to_string(genome_index - stages);
}

int block_stage(int genome_index, int stages) {
  if (genome_index < stages) return genome_index;
  return stages - 2 - (genome_index - stages);
}

const Block& ArchitectureIR::block(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw std::out_of_range("no block named " + std::string(name));
}

ArchitectureIR decode_genotype(const Genotype& genotype, const SearchSpaceConfig& space) {
  space.validate();
  if (genotype.size() != static_cast<std::size_t>(space.genome_length()) ||
      genotype.max_nodes() != space.max_nodes) {
    throw std::invalid_argument("decode_genotype: genome does not match search space");
  }

  const int s = space.stages;
  ArchitectureIR ir;
  ir.stages = s;
  ir.channels = space.channels;
  ir.in_channels = space.in_channels;
  ir.max_nodes = space.max_nodes;

  for (int i = 0; i < space.num_blocks(); ++i) {
    Block block;
    block.name = block_name(i, s);
    block.kind = i < s ? BlockKind::kEncoder : BlockKind::kDecoder;
    block.stage = block_stage(i, s);
    block.graph = decode_block(genotype.block(i), space);
    ir.blocks.push_back(std::move(block));
  }

  for (int i = 0; i + 1 < s; ++i) {
    ir.downsamples.push_back({block_name(i, s), i, i + 1});
  }
  for (int j = 0; j + 1 < s; ++j) {
    const std::string decoder = block_name(s + j, s);
    const int stage = block_stage(s + j, s);
    ir.upsamples.push_back({decoder, stage + 1, stage});
    ir.skips.push_back({block_name(stage, s), decoder, stage});
  }

  ir.stem = {block_name(0, s), space.in_channels, space.channels};
  ir.head = {space.channels, 1};
  return ir;
}

namespace {

void validate_graph(const Block& block, int max_nodes, std::vector<std::string>& out) {
  const auto& g = block.graph;
  auto report = [&](const std::string& what) { out.push_back(block.name + ": " + what); };

  if (g.op_id < 0 || g.op_id > 15) report("op id out of range");
  if (g.max_nodes != max_nodes) report("max_nodes differs from architecture");

  std::set<int> active;
  for (int n : g.active_nodes) {
    if (n < 1 || n > max_nodes) report("active node " + std::to_string(n) + " out of range");
    if (!active.insert(n).second) report("duplicate active node " + std::to_string(n));
  }

  std::set<int> has_pred;
  std::set<int> has_succ;
  std::set<Edge> seen;
  for (const auto& e : g.edges) {
    const std::string tag = "edge (" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
    if (e.from >= e.to) report(tag + " does not go from lower to higher index");
    if (!active.contains(e.from) || !active.contains(e.to)) {
      report(tag + " touches a pruned node");
    }
    if (!seen.insert(e).second) report("duplicate " + tag);
    has_succ.insert(e.from);
    has_pred.insert(e.to);
  }

  std::vector<int> expect_inputs;
  std::vector<int> expect_outputs;
  for (int n : active) {
    if (!has_pred.contains(n)) expect_inputs.push_back(n);
    if (!has_succ.contains(n)) expect_outputs.push_back(n);
    if (!has_pred.contains(n) && !has_succ.contains(n)) {
      report("node " + std::to_string(n) + " is isolated but not pruned");
    }
  }
  auto sorted = [](std::vector<int> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted(g.input_targets) != expect_inputs) {
    report("input targets are not exactly the active nodes without a predecessor");
  }
  if (sorted(g.output_sources) != expect_outputs) {
    report("output sources are not exactly the active nodes without a successor");
  }
}

}  // namespace

std::vector<std::string> validate(const ArchitectureIR& ir) {
  std::vector<std::string> out;
  const int s = ir.stages;
  if (s < 1) {
    out.push_back("architecture must have at least one stage");
    return out;
  }
  if (ir.channels < 1) out.push_back("channel width must be positive");
  if (ir.in_channels < 1) out.push_back("input channels must be positive");
  if (ir.max_nodes < 1 || ir.max_nodes > SearchSpaceConfig::kMaxSupportedNodes) {
    out.push_back("max_nodes out of range");
  }

  const int expected_blocks = 2 * s - 1;
  if (static_cast<int>(ir.blocks.size()) != expected_blocks) {
    out.push_back("expected " + std::to_string(expected_blocks) + " blocks, found " +
                  std::to_string(ir.blocks.size()));
  }
  for (int i = 0; i < std::min<int>(expected_blocks, static_cast<int>(ir.blocks.size())); ++i) {
    const auto& b = ir.blocks[static_cast<std::size_t>(i)];
    const auto kind = i < s ? BlockKind::kEncoder : BlockKind::kDecoder;
    if (b.name != block_name(i, s) || b.kind != kind || b.stage != block_stage(i, s)) {
      out.push_back("block " + std::to_string(i) + " should be " + block_name(i, s) +
                    " at stage S" + std::to_string(block_stage(i, s)));
    }
    validate_graph(b, ir.max_nodes, out);
  }

  std::vector<Resample> down;
  std::vector<Resample> up;
  std::vector<SkipConnection> skips;
  for (int i = 0; i + 1 < s; ++i) down.push_back({block_name(i, s), i, i + 1});
  for (int j = 0; j + 1 < s; ++j) {
    const int stage = block_stage(s + j, s);
    up.push_back({block_name(s + j, s), stage + 1, stage});
  }
  for (int stage = 0; stage + 1 < s; ++stage) {
    skips.push_back({block_name(stage, s), block_name(2 * s - 2 - stage, s), stage});
  }

  auto check_set = [&](const auto& expected, const auto& actual, const std::string& what,
                       auto&& label) {
    for (const auto& item : expected) {
      if (std::find(actual.begin(), actual.end(), item) == actual.end()) {
        out.push_back("missing " + what + " " + label(item));
      }
    }
    for (const auto& item : actual) {
      if (std::find(expected.begin(), expected.end(), item) == expected.end()) {
        out.push_back("unexpected " + what + " " + label(item));
      }
    }
    if (actual.size() != expected.size()) {
      out.push_back(what + " count is " + std::to_string(actual.size()) + ", expected " +
                    std::to_string(expected.size()));
    }
  };
  auto resample_label = [](const Resample& r) {
    return r.block + " S" + std::to_string(r.from_stage) + "->S" + std::to_string(r.to_stage);
  };
  check_set(down, ir.downsamples, "downsample", resample_label);
  check_set(up, ir.upsamples, "upsample", resample_label);
  check_set(skips, ir.skips, "skip connection", [](const SkipConnection& k) {
    return "at stage S" + std::to_string(k.stage) + " (" + k.from + " -> " + k.to + ")";
  });

  if (ir.stem.block != block_name(0, s) || ir.stem.in_channels != ir.in_channels ||
      ir.stem.out_channels != ir.channels) {
    out.push_back("stem must map e0 input from image channels to the network width");
  }
  if (ir.head.in_channels != ir.channels || ir.head.out_channels != 1) {
    out.push_back("head must be a 1x1 convolution from the network width to 1 channel");
  }
  return out;
}

ReferenceUNet reference_unet() { return ReferenceUNet{}; }

}  // namespace unetsearch
