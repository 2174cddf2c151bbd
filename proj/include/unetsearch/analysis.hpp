#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unetsearch/archspace.hpp"
#include "unetsearch/population.hpp"

namespace unetsearch {

struct InputShape {
  int channels = 3;
  int height = 0;
  int width = 0;

  bool operator==(const InputShape&) const = default;
};

/// Parses "CxHxW", e.g. "3x565x584". Throws ConfigError.
InputShape parse_input_shape(const std::string& text);

/// Model cost for one forward pass. `macs` counts multiply-accumulates of
/// convolutions only; model size assumes 4-byte weights.
struct CostReport {
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::uint64_t model_size_bytes = 0;
  InputShape input;
  InputShape padded_input;
};

enum class LayerKind { kConv, kTransposedConv, kInstanceNorm };

/// One parameterized layer of a lowered architecture. Convolutions run at
/// `stage` (the input stage for transposed convolutions); instance norms
/// have in_channels == out_channels and kernel 0.
struct Layer {
  LayerKind kind = LayerKind::kConv;
  std::string site;
  int kernel = 0;
  int in_channels = 0;
  int out_channels = 0;
  int stage = 0;
};

/// Flattens every weighted layer of `ir` at width `channels`, with the stem
/// reading `in_channels` image channels. Throws InvalidArchitecture.
std::vector<Layer> lower(const ArchitectureIR& ir, int channels, int in_channels);

std::uint64_t layer_params(const Layer& layer);

std::uint64_t count_params(const ArchitectureIR& ir, int channels, int in_channels);
std::uint64_t count_params(const ArchitectureIR& ir);

/// MACs at `input` after zero-padding height/width up to the architecture's
/// spatial multiple.
std::uint64_t count_macs(const ArchitectureIR& ir, int channels, InputShape input);

InputShape padded_shape(InputShape input, int multiple);

CostReport analyze(const ArchitectureIR& ir, int channels, InputShape input);

std::uint64_t count_params(const ReferenceUNet& net);
std::uint64_t count_macs(const ReferenceUNet& net, InputShape input);
CostReport analyze(const ReferenceUNet& net, InputShape input);

using OpHistogram = std::array<std::size_t, 16>;

/// Op-id counts over every block gene of the `top_k` fittest individuals
/// (ties keep population order; unevaluated individuals rank last).
/// Throws std::invalid_argument if the population is empty or too small.
OpHistogram population_op_histogram(std::span<const Individual> population,
                                    std::size_t top_k);

}  // namespace unetsearch
