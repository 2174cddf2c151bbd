#include "unetsearch/genome.hpp"

#include <algorithm>
#include <stdexcept>

#include "unetsearch/errors.hpp"

namespace unetsearch {

void SearchSpaceConfig::validate() const {
  if (stages < 1) throw ConfigError("search space: stages must be >= 1");
  if (max_nodes < 1 || max_nodes > kMaxSupportedNodes) {
    throw ConfigError("search space: max_nodes must be in [1, " +
                      std::to_string(kMaxSupportedNodes) + "]");
  }
  if (channels < 1) throw ConfigError("search space: channels must be >= 1");
  if (in_channels < 1) {
    throw ConfigError("search space: in_channels must be >= 1");
  }
}

Genotype::Genotype(const SearchSpaceConfig& space, std::vector<std::uint8_t> bits)
    : bits_(std::move(bits)),
      num_blocks_(space.num_blocks()),
      max_nodes_(space.max_nodes) {
  if (bits_.size() != static_cast<std::size_t>(space.genome_length())) {
    throw ParseError("genome has " + std::to_string(bits_.size()) +
                     " bits, expected " + std::to_string(space.genome_length()));
  }
  for (auto b : bits_) {
    if (b > 1) throw ParseError("genome bits must be 0 or 1");
  }
}

Genotype Genotype::from_blocks(const SearchSpaceConfig& space,
                               std::span<const BlockGene> blocks) {
  if (blocks.size() != static_cast<std::size_t>(space.num_blocks())) {
    throw ParseError("expected " + std::to_string(space.num_blocks()) +
                     " block genes, got " + std::to_string(blocks.size()));
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(static_cast<std::size_t>(space.genome_length()));
  for (const auto& block : blocks) {
    if (block.op_id < 0 || block.op_id > 15) {
      throw ParseError("op id out of range: " + std::to_string(block.op_id));
    }
    if (block.conn_bits.size() != static_cast<std::size_t>(space.conn_gene_bits())) {
      throw ParseError("connection gene has wrong length");
    }
    for (int shift = SearchSpaceConfig::kOpGeneBits - 1; shift >= 0; --shift) {
      bits.push_back(static_cast<std::uint8_t>((block.op_id >> shift) & 1));
    }
    bits.insert(bits.end(), block.conn_bits.begin(), block.conn_bits.end());
  }
  return Genotype(space, std::move(bits));
}

BlockGene Genotype::block(int index) const {
  if (index < 0 || index >= num_blocks_) {
    throw std::out_of_range("block index out of range");
  }
  const std::size_t conn = static_cast<std::size_t>(max_nodes_ * (max_nodes_ - 1) / 2);
  const std::size_t stride = SearchSpaceConfig::kOpGeneBits + conn;
  const auto first = bits_.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(index));

  BlockGene gene;
  for (int i = 0; i < SearchSpaceConfig::kOpGeneBits; ++i) {
    gene.op_id = (gene.op_id << 1) | first[i];
  }
  gene.conn_bits.assign(first + SearchSpaceConfig::kOpGeneBits,
                        first + static_cast<std::ptrdiff_t>(stride));
  return gene;
}

Genotype Genotype::with_bits(std::vector<std::uint8_t> bits) const {
  if (bits.size() != bits_.size()) throw ParseError("with_bits: length mismatch");
  for (auto b : bits) {
    if (b > 1) throw ParseError("genome bits must be 0 or 1");
  }
  Genotype out = *this;
  out.bits_ = std::move(bits);
  return out;
}

std::size_t Genotype::count_ones() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

Genotype Genotype::complement() const {
  Genotype out = *this;
  for (auto& b : out.bits_) b ^= 1;
  return out;
}

std::string Genotype::to_string() const {
  std::string text(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) text[i] = '1';
  }
  return text;
}

Genotype random_genotype(Rng& rng, const SearchSpaceConfig& space) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(space.genome_length()));
  for (auto& b : bits) b = rng.bit() ? 1 : 0;
  return Genotype(space, std::move(bits));
}

Genotype random_genotype(std::uint64_t seed, const SearchSpaceConfig& space) {
  Rng rng(seed);
  return random_genotype(rng, space);
}

Genotype parse_genotype(std::string_view text, const SearchSpaceConfig& space) {
  if (text.size() != static_cast<std::size_t>(space.genome_length())) {
    throw ParseError("genome text has length " + std::to_string(text.size()) +
                     ", expected " + std::to_string(space.genome_length()));
  }
  std::vector<std::uint8_t> bits(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '0' && text[i] != '1') {
      throw ParseError("illegal character in genome at position " +
                       std::to_string(i));
    }
    bits[i] = text[i] == '1' ? 1 : 0;
  }
  return Genotype(space, std::move(bits));
}

double normalized_hamming(const Genotype& a, const Genotype& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("normalized_hamming: genome lengths differ");
  }
  if (a.size() == 0) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a.bit(i) != b.bit(i);
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

}  // namespace unetsearch
