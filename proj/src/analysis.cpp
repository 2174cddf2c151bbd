#include "unetsearch/analysis.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "unetsearch/errors.hpp"

namespace unetsearch {

namespace {

constexpr std::uint64_t kBytesPerParam = 4;

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }

void require_valid(const ArchitectureIR& ir) {
  const auto violations = validate(ir);
  if (!violations.empty()) {
    throw InvalidArchitecture("invalid architecture: " + violations.front());
  }
}

void emit_node(std::vector<Layer>& out, const OpSequence& op, const std::string& site,
               int in_channels, int channels, int stage) {
  const int k = op.kernel();
  if (op.pre_activation()) {
    if (op.has_instance_norm()) {
      out.push_back({LayerKind::kInstanceNorm, site, 0, in_channels, in_channels, stage});
    }
    out.push_back({LayerKind::kConv, site, k, in_channels, channels, stage});
  } else {
    out.push_back({LayerKind::kConv, site, k, in_channels, channels, stage});
    if (op.has_instance_norm()) {
      out.push_back({LayerKind::kInstanceNorm, site, 0, channels, channels, stage});
    }
  }
}

}  // namespace

InputShape parse_input_shape(const std::string& text) {
  InputShape shape;
  std::vector<int> dims;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('x', start);
    const auto token = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (token.empty() || !std::all_of(token.begin(), token.end(), ::isdigit) || token.size() > 9) {
      throw ConfigError("input shape must look like CxHxW, got '" + text + "'");
    }
    dims.push_back(std::stoi(token));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (dims.size() != 3) throw ConfigError("input shape must look like CxHxW, got '" + text + "'");
  shape = {dims[0], dims[1], dims[2]};
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
    throw ConfigError("input dimensions must be positive");
  }
  return shape;
}

std::vector<Layer> lower(const ArchitectureIR& ir, int channels, int in_channels) {
  require_valid(ir);
  if (channels < 1) throw ConfigError("channels must be >= 1");
  if (in_channels < 1) throw ConfigError("input channels must be >= 1");

  std::vector<Layer> layers;
  for (const auto& block : ir.blocks) {
    const auto& op = block.graph.op();
    const int stage = block.stage;
    const int block_in = block.name == ir.stem.block ? in_channels : channels;
    emit_node(layers, op, block.name + ".input", block_in, channels, stage);
    for (int node : block.graph.active_nodes) {
      emit_node(layers, op, block.name + ".node" + std::to_string(node), channels, channels, stage);
    }
    emit_node(layers, op, block.name + ".output", channels, channels, stage);
  }
  for (const auto& up : ir.upsamples) {
    layers.push_back({LayerKind::kTransposedConv, up.block + ".upsample", 2, channels, channels,
                      up.from_stage});
  }
  layers.push_back({LayerKind::kConv, "head", 1, channels, ir.head.out_channels, 0});
  return layers;
}

std::uint64_t layer_params(const Layer& layer) {
  switch (layer.kind) {
    case LayerKind::kConv:
    case LayerKind::kTransposedConv:
      return u64(layer.kernel) * u64(layer.kernel) * u64(layer.in_channels) *
                 u64(layer.out_channels) +
             u64(layer.out_channels);
    case LayerKind::kInstanceNorm:
      return 2 * u64(layer.out_channels);
  }
  return 0;
}

std::uint64_t count_params(const ArchitectureIR& ir, int channels, int in_channels) {
  const auto layers = lower(ir, channels, in_channels);
  return std::accumulate(layers.begin(), layers.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const Layer& l) { return acc + layer_params(l); });
}

std::uint64_t count_params(const ArchitectureIR& ir) {
  return count_params(ir, ir.channels, ir.in_channels);
}

InputShape padded_shape(InputShape input, int multiple) {
  auto up = [multiple](int v) { return (v + multiple - 1) / multiple * multiple; };
  return {input.channels, up(input.height), up(input.width)};
}

std::uint64_t count_macs(const ArchitectureIR& ir, int channels, InputShape input) {
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw ConfigError("input dimensions must be positive");
  }
  const auto padded = padded_shape(input, ir.spatial_multiple());
  std::uint64_t macs = 0;
  for (const auto& layer : lower(ir, channels, input.channels)) {
    if (layer.kind == LayerKind::kInstanceNorm) continue;
    const std::uint64_t pixels =
        u64(padded.height >> layer.stage) * u64(padded.width >> layer.stage);
    // A transposed conv scatters one kxk patch per input pixel, an ordinary
    // conv gathers one per output pixel.
    macs += u64(layer.kernel) * u64(layer.kernel) * u64(layer.in_channels) *
            u64(layer.out_channels) * pixels;
  }
  return macs;
}

CostReport analyze(const ArchitectureIR& ir, int channels, InputShape input) {
  CostReport report;
  report.params = count_params(ir, channels, input.channels);
  report.macs = count_macs(ir, channels, input);
  report.model_size_bytes = report.params * kBytesPerParam;
  report.input = input;
  report.padded_input = padded_shape(input, ir.spatial_multiple());
  return report;
}

std::uint64_t count_params(const ReferenceUNet& net) {
  auto conv = [](int k, int in, int out) {
    return u64(k) * u64(k) * u64(in) * u64(out) + u64(out);
  };
  std::uint64_t params = 0;
  int in = net.in_channels;
  for (int level = 0; level <= net.depth; ++level) {
    const int w = net.width(level);
    for (int i = 0; i < net.convs_per_block; ++i) {
      params += conv(3, i == 0 ? in : w, w);
    }
    in = w;
  }
  for (int level = net.depth - 1; level >= 0; --level) {
    const int w = net.width(level);
    params += conv(2, net.width(level + 1), w);
    for (int i = 0; i < net.convs_per_block; ++i) {
      params += conv(3, i == 0 ? 2 * w : w, w);
    }
  }
  params += conv(1, net.width(0), net.out_channels);
  return params;
}

std::uint64_t count_macs(const ReferenceUNet& net, InputShape input) {
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw ConfigError("input dimensions must be positive");
  }
  const int shrink = net.valid_padding ? 2 : 0;
  int h = input.height;
  int w = input.width;
  if (!net.valid_padding) {
    const auto padded = padded_shape(input, 1 << net.depth);
    h = padded.height;
    w = padded.width;
  }

  std::uint64_t macs = 0;
  auto conv = [&](int k, int in, int out) {
    h -= shrink;
    w -= shrink;
    if (h < 1 || w < 1) throw ConfigError("input too small for the reference U-Net");
    macs += u64(k) * u64(k) * u64(in) * u64(out) * u64(h) * u64(w);
  };

  int in = input.channels;
  for (int level = 0; level <= net.depth; ++level) {
    const int width = net.width(level);
    for (int i = 0; i < net.convs_per_block; ++i) conv(3, i == 0 ? in : width, width);
    in = width;
    if (level < net.depth) {
      h /= 2;
      w /= 2;
    }
  }
  for (int level = net.depth - 1; level >= 0; --level) {
    const int width = net.width(level);
    macs += 4 * u64(net.width(level + 1)) * u64(width) * u64(h) * u64(w);
    h *= 2;
    w *= 2;
    for (int i = 0; i < net.convs_per_block; ++i) conv(3, i == 0 ? 2 * width : width, width);
  }
  macs += u64(net.width(0)) * u64(net.out_channels) * u64(h) * u64(w);
  return macs;
}

CostReport analyze(const ReferenceUNet& net, InputShape input) {
  if (input.channels != net.in_channels) {
    throw ConfigError("reference U-Net expects " + std::to_string(net.in_channels) +
                      " input channels");
  }
  CostReport report;
  report.params = count_params(net);
  report.macs = count_macs(net, input);
  report.model_size_bytes = report.params * kBytesPerParam;
  report.input = input;
  report.padded_input = net.valid_padding ? input : padded_shape(input, 1 << net.depth);
  return report;
}

OpHistogram population_op_histogram(std::span<const Individual> population, std::size_t top_k) {
  if (population.empty()) throw std::invalid_argument("histogram: empty population");
  if (top_k > population.size()) {
    throw std::invalid_argument("histogram: top_k exceeds population size");
  }
  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& fa = population[a].fitness;
    const auto& fb = population[b].fitness;
    if (fa.has_value() != fb.has_value()) return fa.has_value();
    return fa.has_value() && *fa > *fb;
  });

  OpHistogram histogram{};
  for (std::size_t i = 0; i < top_k; ++i) {
    const auto& g = population[order[i]].genotype;
    for (int b = 0; b < g.num_blocks(); ++b) {
      ++histogram[static_cast<std::size_t>(g.block(b).op_id)];
    }
  }
  return histogram;
}

}  // namespace unetsearch
