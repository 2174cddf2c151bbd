#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "unetsearch/genome.hpp"
#include "unetsearch/population.hpp"
#include "unetsearch/rng.hpp"

namespace unetsearch {

enum class SelectionStrategy { kElitistPlusTournament, kTopN, kElitist1 };

/// Where the tournament fill of environmental selection draws from once the
/// elites are removed: the combined parent+offspring pool, or the parents.
enum class TournamentPool { kCombined, kParents };

std::string_view to_string(SelectionStrategy s);
SelectionStrategy parse_selection_strategy(std::string_view text);
std::string_view to_string(TournamentPool p);
TournamentPool parse_tournament_pool(std::string_view text);

struct EvolutionConfig {
  int population_size = 20;
  int generations = 50;
  double crossover_prob = 0.9;
  double mutation_prob = 0.7;
  double bit_flip_prob = 0.05;
  double diff_threshold = 0.2;
  int elite_size = 5;
  int crossover_points = 10;
  int max_reselect = 10;
  SelectionStrategy strategy = SelectionStrategy::kElitistPlusTournament;
  TournamentPool tournament_pool = TournamentPool::kCombined;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate(const SearchSpaceConfig& space) const;

  bool operator==(const EvolutionConfig&) const = default;
};

/// Two distinct members drawn uniformly; the fitter wins, ties are a coin
/// flip. A single-member pool returns that member. Throws
/// std::invalid_argument on an empty pool or unevaluated member.
const Individual& binary_tournament(std::span<const Individual> pool, Rng& rng);

/// What one crossover call did, for the run log.
struct CrossoverRecord {
  IndividualId parent1 = 0;
  IndividualId parent2 = 0;
  double diff = 0.0;
  int draws = 0;
  bool any_exceeded = false;
  bool crossed = false;
  std::vector<int> points;

  bool operator==(const CrossoverRecord&) const = default;
};

struct CrossoverResult {
  Genotype first;
  Genotype second;
  CrossoverRecord record;
};

/// Swaps a[p0:p1), a[p2:p3), ... with b; `points` is sorted and even-sized.
std::pair<Genotype, Genotype> exchange_segments(const Genotype& a, const Genotype& b,
                                                std::span<const int> points);

/// Parents are re-drawn by binary tournament (at most max_reselect draws)
/// until their normalized Hamming distance exceeds diff_threshold, else the
/// last pair is kept. With probability crossover_prob, crossover_points
/// distinct sorted cut points are paired into segments and exchanged.
CrossoverResult difference_guided_crossover(std::span<const Individual> population,
                                            const EvolutionConfig& config, Rng& rng);

/// With probability mutation_prob, flips each bit with probability
/// bit_flip_prob.
Genotype mutate(const Genotype& genotype, const EvolutionConfig& config, Rng& rng);

/// Builds the next population of exactly population_size individuals from
/// parents and offspring according to config.strategy. Elite extraction is
/// a stable sort on fitness (parents before offspring on ties).
Population environmental_select(std::span<const Individual> parents,
                                std::span<const Individual> offspring,
                                const EvolutionConfig& config, Rng& rng);

/// Index of the fittest individual (first one on ties).
std::size_t best_index(std::span<const Individual> population);

}  // namespace unetsearch
