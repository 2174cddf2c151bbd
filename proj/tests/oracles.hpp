// Independent reference computations for the tests. Nothing here calls the
// code under test beyond the genome accessors.
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "unetsearch/genome.hpp"
#include "unetsearch/population.hpp"

namespace oracle {

struct PrunedBlock {
  std::set<int> active;
  std::set<std::pair<int, int>> edges;
  std::set<int> inputs;
  std::set<int> outputs;
};

/// Reads pairs in (1,2), (1,3), (2,3), (1,4), ... order, then repeatedly
/// drops nodes touching no remaining edge until nothing changes.
inline PrunedBlock prune(const std::vector<std::uint8_t>& conn, int k) {
  std::set<std::pair<int, int>> edges;
  int bit = 0;
  for (int to = 2; to <= k; ++to) {
    for (int from = 1; from < to; ++from) {
      if (conn[static_cast<std::size_t>(bit++)]) edges.insert({from, to});
    }
  }
  std::set<int> alive;
  for (int v = 1; v <= k; ++v) alive.insert(v);
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = alive.begin(); it != alive.end();) {
      const int v = *it;
      const bool touched = std::any_of(edges.begin(), edges.end(), [&](const auto& e) {
        return (e.first == v && alive.count(e.second)) || (e.second == v && alive.count(e.first));
      });
      if (!touched) {
        it = alive.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  PrunedBlock out;
  out.active = alive;
  for (const auto& e : edges) {
    if (alive.count(e.first) && alive.count(e.second)) out.edges.insert(e);
  }
  for (int v : alive) {
    bool pred = false, succ = false;
    for (const auto& e : out.edges) {
      pred |= e.second == v;
      succ |= e.first == v;
    }
    if (!pred) out.inputs.insert(v);
    if (!succ) out.outputs.insert(v);
  }
  return out;
}

/// Kernel, pre-activation flag and InstanceNorm flag of an op id, read off
/// the operation table row by row.
struct OpFacts {
  int kernel;
  bool pre;
  bool norm;
};

inline OpFacts op_facts(int id) {
  static const std::map<int, OpFacts> table = {
      {0, {3, false, false}},  {1, {3, false, false}},  {2, {3, false, true}},
      {3, {3, false, true}},   {4, {5, false, false}},  {5, {5, false, false}},
      {6, {5, false, true}},   {7, {5, false, true}},   {8, {3, true, false}},
      {9, {3, true, false}},   {10, {3, true, true}},   {11, {3, true, true}},
      {12, {5, true, false}},  {13, {5, true, false}},  {14, {5, true, true}},
      {15, {5, true, true}}};
  return table.at(id);
}

/// Parameters of the decoded network computed straight from the genome:
/// per block (2 + active nodes) convolutions, one 3 -> c, the rest c -> c,
/// InstanceNorm affine terms on the conv input (pre-activation) or output,
/// three 2x2 transposed convolutions and a 1x1 head.
inline std::uint64_t params(const unetsearch::Genotype& g, int c, int image_channels = 3) {
  std::uint64_t total = 0;
  const std::uint64_t C = static_cast<std::uint64_t>(c);
  for (int b = 0; b < g.num_blocks(); ++b) {
    const auto gene = g.block(b);
    const auto facts = op_facts(gene.op_id);
    const std::uint64_t kk = static_cast<std::uint64_t>(facts.kernel * facts.kernel);
    const auto nodes = 2 + prune(gene.conn_bits, g.max_nodes()).active.size();
    for (std::size_t n = 0; n < nodes; ++n) {
      const std::uint64_t cin = (b == 0 && n == 0) ? static_cast<std::uint64_t>(image_channels) : C;
      total += kk * cin * C + C;
      if (facts.norm) total += 2 * (facts.pre ? cin : C);
    }
  }
  const int decoders = g.num_blocks() / 2;
  total += static_cast<std::uint64_t>(decoders) * (4 * C * C + C);
  total += C + 1;
  return total;
}

/// MACs with H and W padded to a multiple of 8; a block at stage s sees
/// (H/2^s) x (W/2^s) pixels, a transposed conv does k^2 Cin Cout work per
/// input pixel, the head runs at full resolution.
inline std::uint64_t macs(const unetsearch::Genotype& g, int c, int height, int width,
                          int image_channels = 3) {
  const int stages = (g.num_blocks() + 1) / 2;
  const int multiple = 1 << (stages - 1);
  const std::uint64_t H = static_cast<std::uint64_t>((height + multiple - 1) / multiple * multiple);
  const std::uint64_t W = static_cast<std::uint64_t>((width + multiple - 1) / multiple * multiple);
  auto pixels = [&](int s) { return (H >> s) * (W >> s); };
  const std::uint64_t C = static_cast<std::uint64_t>(c);
  std::uint64_t total = 0;
  for (int b = 0; b < g.num_blocks(); ++b) {
    const int stage = b < stages ? b : (2 * stages - 2 - b);
    const auto gene = g.block(b);
    const auto facts = op_facts(gene.op_id);
    const std::uint64_t kk = static_cast<std::uint64_t>(facts.kernel * facts.kernel);
    const auto nodes = 2 + prune(gene.conn_bits, g.max_nodes()).active.size();
    for (std::size_t n = 0; n < nodes; ++n) {
      const std::uint64_t cin = (b == 0 && n == 0) ? static_cast<std::uint64_t>(image_channels) : C;
      total += kk * cin * C * pixels(stage);
    }
  }
  for (int s = 1; s < stages; ++s) total += 4 * C * C * pixels(s);
  total += C * pixels(0);
  return total;
}

inline unetsearch::Individual individual(unetsearch::IndividualId id, unetsearch::Genotype g,
                                         double fitness) {
  unetsearch::Individual ind;
  ind.id = id;
  ind.genotype = std::move(g);
  ind.fitness = fitness;
  return ind;
}

inline unetsearch::Genotype filled(const unetsearch::SearchSpaceConfig& space, std::uint8_t bit) {
  return {space, std::vector<std::uint8_t>(static_cast<std::size_t>(space.genome_length()), bit)};
}

/// Genome whose blocks all use `op_id` and have no connections.
inline unetsearch::Genotype uniform_op(const unetsearch::SearchSpaceConfig& space, int op_id) {
  std::vector<std::uint8_t> bits;
  for (int b = 0; b < space.num_blocks(); ++b) {
    for (int i = 3; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((op_id >> i) & 1));
    bits.insert(bits.end(), static_cast<std::size_t>(space.conn_gene_bits()), 0);
  }
  return {space, std::move(bits)};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::mt19937_64 salt(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("unetsearch-" + name + "-" + std::to_string(salt() % 1000000007));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
