#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unetsearch/rng.hpp"

namespace unetsearch {

/// Geometry of the U-shaped search space.
///
/// A backbone with `stages` stages has `stages` encoder blocks and
/// `stages - 1` decoder blocks. Each block gene is a 4-bit operation id
/// followed by one connection bit per ordered node pair (i < j) among
/// `max_nodes` intermediate nodes.
struct SearchSpaceConfig {
  static constexpr int kOpGeneBits = 4;
  static constexpr int kMaxSupportedNodes = 16;

  int stages = 4;
  int max_nodes = 5;
  int channels = 20;
  int in_channels = 3;

  int num_blocks() const { return 2 * stages - 1; }
  int conn_gene_bits() const { return max_nodes * (max_nodes - 1) / 2; }
  int block_gene_bits() const { return kOpGeneBits + conn_gene_bits(); }
  int genome_length() const { return num_blocks() * block_gene_bits(); }

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool operator==(const SearchSpaceConfig&) const = default;
};

/// Position of the connection bit for the edge node `from` -> node `to`
/// (1-based, from < to) inside a connection gene. Pairs are enumerated
/// (1,2), (1,3), (2,3), (1,4), (2,4), (3,4), ...
constexpr int connection_bit_index(int from, int to) {
  return (to - 1) * (to - 2) / 2 + (from - 1);
}

struct BlockGene {
  int op_id = 0;
  std::vector<std::uint8_t> conn_bits;

  bool connected(int from, int to) const {
    return conn_bits[static_cast<std::size_t>(connection_bit_index(from, to))] != 0;
  }

  bool operator==(const BlockGene&) const = default;
};

/// Fixed-length bitstring genotype. Immutable value type.
///
/// Layout: blocks e0..e(S-1) then d0..d(S-2); each block is
/// [op id, 4 bits, most significant first][connection bits].
class Genotype {
 public:
  Genotype() = default;

  /// Takes ownership of `bits` (each 0 or 1); throws ParseError when the
  /// length does not match `space`.
  Genotype(const SearchSpaceConfig& space, std::vector<std::uint8_t> bits);

  static Genotype from_blocks(const SearchSpaceConfig& space,
                              std::span<const BlockGene> blocks);

  std::size_t size() const { return bits_.size(); }
  std::span<const std::uint8_t> bits() const { return bits_; }
  bool bit(std::size_t i) const { return bits_[i] != 0; }

  int num_blocks() const { return num_blocks_; }
  int max_nodes() const { return max_nodes_; }
  BlockGene block(int index) const;

  /// Same geometry, different bits. Throws ParseError on a length mismatch.
  Genotype with_bits(std::vector<std::uint8_t> bits) const;

  std::size_t count_ones() const;
  Genotype complement() const;

  /// Canonical text form: genome_length characters of '0'/'1'.
  std::string to_string() const;

  bool operator==(const Genotype&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
  int num_blocks_ = 0;
  int max_nodes_ = 0;
};

/// Every bit independently uniform; deterministic in `seed`.
Genotype random_genotype(std::uint64_t seed, const SearchSpaceConfig& space);
Genotype random_genotype(Rng& rng, const SearchSpaceConfig& space);

/// Inverse of Genotype::to_string. Throws ParseError on wrong length or
/// characters other than '0'/'1'.
Genotype parse_genotype(std::string_view text, const SearchSpaceConfig& space);

/// Differing bits divided by genome length. Throws std::invalid_argument on
/// mismatched lengths.
double normalized_hamming(const Genotype& a, const Genotype& b);

}  // namespace unetsearch
