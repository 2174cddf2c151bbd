#include "unetsearch/ir_json.hpp"

#include "unetsearch/errors.hpp"

namespace unetsearch {

using nlohmann::json;

namespace {

constexpr const char* kDownsampleKind = "maxpool2x2";
constexpr const char* kUpsampleKind = "conv_transpose2x2";
constexpr const char* kFusion = "add";
constexpr const char* kHeadActivation = "sigmoid";

json resample_json(const Resample& r, const char* block_key, const char* kind) {
  return {{block_key, r.block}, {"from_stage", r.from_stage}, {"to_stage", r.to_stage},
          {"kind", kind}};
}

template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError(std::string("IR document: missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("IR document: bad field '") + key + "': " + e.what());
  }
}

void expect_kind(const json& obj, const char* key, const char* value) {
  if (field<std::string>(obj, key) != value) {
    throw ParseError(std::string("IR document: unsupported ") + key + " '" +
                     obj.at(key).get<std::string>() + "'");
  }
}

}  // namespace

json ir_to_json(const ArchitectureIR& ir) {
  json blocks = json::array();
  for (const auto& b : ir.blocks) {
    json edges = json::array();
    for (const auto& e : b.graph.edges) edges.push_back({e.from, e.to});
    json units = json::array();
    for (auto u : b.graph.op().units) units.push_back(unit_name(u));
    blocks.push_back({
        {"name", b.name},
        {"kind", b.kind == BlockKind::kEncoder ? "encoder" : "decoder"},
        {"stage", b.stage},
        {"op_id", b.graph.op_id},
        {"op", units},
        {"active_nodes", b.graph.active_nodes},
        {"edges", edges},
        {"input_targets", b.graph.input_targets},
        {"output_sources", b.graph.output_sources},
    });
  }

  json down = json::array();
  for (const auto& r : ir.downsamples) down.push_back(resample_json(r, "after", kDownsampleKind));
  json up = json::array();
  for (const auto& r : ir.upsamples) up.push_back(resample_json(r, "before", kUpsampleKind));
  json skips = json::array();
  for (const auto& k : ir.skips) {
    skips.push_back({{"from", k.from}, {"to", k.to}, {"stage", k.stage}, {"fusion", kFusion}});
  }

  return {
      {"schema", kArchIrSchema},
      {"stages", ir.stages},
      {"channels", ir.channels},
      {"in_channels", ir.in_channels},
      {"max_nodes", ir.max_nodes},
      {"node_fusion", kFusion},
      {"pad_to_multiple", ir.spatial_multiple()},
      {"stem", {{"block", ir.stem.block}, {"node", "input"},
                {"in_channels", ir.stem.in_channels}, {"out_channels", ir.stem.out_channels}}},
      {"head", {{"kind", "conv1x1"}, {"in_channels", ir.head.in_channels},
                {"out_channels", ir.head.out_channels}, {"activation", kHeadActivation}}},
      {"blocks", blocks},
      {"downsample", down},
      {"upsample", up},
      {"skips", skips},
  };
}

namespace {

ArchitectureIR parse_ir(const json& doc) {
  if (field<std::string>(doc, "schema") != kArchIrSchema) {
    throw ParseError("IR document: unsupported schema '" + doc.at("schema").get<std::string>() + "'");
  }
  expect_kind(doc, "node_fusion", kFusion);

  ArchitectureIR ir;
  ir.stages = field<int>(doc, "stages");
  ir.channels = field<int>(doc, "channels");
  ir.in_channels = field<int>(doc, "in_channels");
  ir.max_nodes = field<int>(doc, "max_nodes");

  const json stem = field<json>(doc, "stem");
  ir.stem = {field<std::string>(stem, "block"), field<int>(stem, "in_channels"),
             field<int>(stem, "out_channels")};
  const json head = field<json>(doc, "head");
  expect_kind(head, "kind", "conv1x1");
  expect_kind(head, "activation", kHeadActivation);
  ir.head = {field<int>(head, "in_channels"), field<int>(head, "out_channels")};

  for (const auto& b : field<json>(doc, "blocks")) {
    Block block;
    block.name = field<std::string>(b, "name");
    const auto kind = field<std::string>(b, "kind");
    if (kind != "encoder" && kind != "decoder") throw ParseError("IR document: bad block kind");
    block.kind = kind == "encoder" ? BlockKind::kEncoder : BlockKind::kDecoder;
    block.stage = field<int>(b, "stage");
    block.graph.op_id = field<int>(b, "op_id");
    if (block.graph.op_id < 0 || block.graph.op_id > 15) {
      throw ParseError("IR document: op_id out of range");
    }
    block.graph.max_nodes = ir.max_nodes;
    block.graph.active_nodes = field<std::vector<int>>(b, "active_nodes");
    for (const auto& e : field<json>(b, "edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("IR document: bad edge");
      block.graph.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    block.graph.input_targets = field<std::vector<int>>(b, "input_targets");
    block.graph.output_sources = field<std::vector<int>>(b, "output_sources");
    ir.blocks.push_back(std::move(block));
  }

  for (const auto& r : field<json>(doc, "downsample")) {
    expect_kind(r, "kind", kDownsampleKind);
    ir.downsamples.push_back(
        {field<std::string>(r, "after"), field<int>(r, "from_stage"), field<int>(r, "to_stage")});
  }
  for (const auto& r : field<json>(doc, "upsample")) {
    expect_kind(r, "kind", kUpsampleKind);
    ir.upsamples.push_back(
        {field<std::string>(r, "before"), field<int>(r, "from_stage"), field<int>(r, "to_stage")});
  }
  for (const auto& k : field<json>(doc, "skips")) {
    expect_kind(k, "fusion", kFusion);
    ir.skips.push_back(
        {field<std::string>(k, "from"), field<std::string>(k, "to"), field<int>(k, "stage")});
  }
  return ir;
}

}  // namespace

ArchitectureIR ir_from_json(const json& doc) {
  try {
    return parse_ir(doc);
  } catch (const json::exception& e) {
    throw ParseError(std::string("IR document: ") + e.what());
  }
}

}  // namespace unetsearch
