#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "unetsearch/genome.hpp"

namespace unetsearch {

enum class Unit { kConv3x3, kConv5x5, kInstanceNorm, kReLU, kMish };

std::string_view unit_name(Unit unit);

/// One row of the node operation table. Every sequence holds exactly one
/// convolution; sequences whose convolution comes last are pre-activation.
struct OpSequence {
  int id = 0;
  std::vector<Unit> units;

  int kernel() const;
  bool has_instance_norm() const;
  /// Normalization/activation run before the convolution.
  bool pre_activation() const;
  std::string describe() const;

  bool operator==(const OpSequence&) const = default;
};

/// The 16 operation sequences, indexed by op id.
const std::array<OpSequence, 16>& op_table();

struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Decoded block DAG over intermediate nodes 1..max_nodes.
///
/// The block's default input node feeds `input_targets` and the default
/// output node sums `output_sources`. With no active nodes the block is the
/// chain input node -> output node. Every node (including the two default
/// nodes) runs the block's operation sequence.
struct BlockGraph {
  int op_id = 0;
  int max_nodes = 0;
  std::vector<int> active_nodes;
  std::vector<Edge> edges;
  std::vector<int> input_targets;
  std::vector<int> output_sources;

  bool degenerate() const { return active_nodes.empty(); }
  const OpSequence& op() const { return op_table()[static_cast<std::size_t>(op_id)]; }

  bool operator==(const BlockGraph&) const = default;
};

BlockGraph decode_block(const BlockGene& gene, const SearchSpaceConfig& space);

enum class BlockKind { kEncoder, kDecoder };

struct Block {
  std::string name;
  BlockKind kind = BlockKind::kEncoder;
  int stage = 0;
  BlockGraph graph;

  bool operator==(const Block&) const = default;
};

/// 2x2 max-pool (downsample, after `block`) or 2x2 stride-2 transposed
/// convolution c -> c (upsample, before `block`).
struct Resample {
  std::string block;
  int from_stage = 0;
  int to_stage = 0;

  bool operator==(const Resample&) const = default;
};

/// Element-wise addition of an encoder block's output into the upsampled
/// decoder features at `stage`.
struct SkipConnection {
  std::string from;
  std::string to;
  int stage = 0;

  bool operator==(const SkipConnection&) const = default;
};

/// The e0 input node adapts image channels to the network width.
struct Stem {
  std::string block;
  int in_channels = 0;
  int out_channels = 0;

  bool operator==(const Stem&) const = default;
};

/// 1x1 convolution followed by the logistic function.
struct Head {
  int in_channels = 0;
  int out_channels = 1;

  bool operator==(const Head&) const = default;
};

/// A decoded architecture: per-block DAGs wired into the fixed U-shaped
/// backbone. Spatial dimensions halve per stage; inputs are zero-padded to a
/// multiple of `spatial_multiple()` and the output is cropped back.
struct ArchitectureIR {
  int stages = 0;
  int channels = 0;
  int in_channels = 0;
  int max_nodes = 0;
  std::vector<Block> blocks;
  std::vector<Resample> downsamples;
  std::vector<Resample> upsamples;
  std::vector<SkipConnection> skips;
  Stem stem;
  Head head;

  int spatial_multiple() const { return 1 << (stages - 1); }
  const Block& block(std::string_view name) const;

  bool operator==(const ArchitectureIR&) const = default;
};

/// "e0".."e{S-1}" for encoder indices, then "d0".."d{S-2}".
std::string block_name(int genome_index, int stages);

/// Encoder block e_i sits at stage i; decoder block d_j at stage S-2-j.
int block_stage(int genome_index, int stages);

ArchitectureIR decode_genotype(const Genotype& genotype, const SearchSpaceConfig& space);

/// All invariant violations of `ir`; empty when valid.
std::vector<std::string> validate(const ArchitectureIR& ir);

/// The conventional U-Net used as the accounting baseline: widths double
/// from `base_width` per stage, two 3x3 conv + ReLU per block, 2x2 max-pool
/// down, 2x2 transposed conv up (halving width), concatenation fusion and a
/// final 1x1 conv. Convolutions are unpadded, as in the original network.
struct ReferenceUNet {
  int in_channels = 3;
  int out_channels = 1;
  int base_width = 64;
  int depth = 4;
  int convs_per_block = 2;
  bool valid_padding = true;

  int width(int level) const { return base_width << level; }
  int deepest_width() const { return width(depth); }
};

ReferenceUNet reference_unet();

}  // namespace unetsearch
