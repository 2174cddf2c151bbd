#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "unetsearch/genome.hpp"

namespace unetsearch {

using IndividualId = std::uint64_t;

/// A genotype with its cached fitness (higher is better) and provenance.
struct Individual {
  IndividualId id = 0;
  Genotype genotype;
  std::optional<double> fitness;
  int born = 0;
  std::vector<IndividualId> parents;

  bool evaluated() const { return fitness.has_value(); }

  bool operator==(const Individual&) const = default;
};

using Population = std::vector<Individual>;

}  // namespace unetsearch
