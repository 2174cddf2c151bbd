#include "unetsearch/evolution.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "unetsearch/errors.hpp"

namespace unetsearch {

std::string_view to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::kElitistPlusTournament: return "elitist_plus_tournament";
    case SelectionStrategy::kTopN: return "top_n";
    case SelectionStrategy::kElitist1: return "elitist_1";
  }
  return "?";
}

SelectionStrategy parse_selection_strategy(std::string_view text) {
  for (auto s : {SelectionStrategy::kElitistPlusTournament, SelectionStrategy::kTopN,
                 SelectionStrategy::kElitist1}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("unknown selection strategy '" + std::string(text) + "'");
}

std::string_view to_string(TournamentPool p) {
  return p == TournamentPool::kCombined ? "combined" : "parents";
}

TournamentPool parse_tournament_pool(std::string_view text) {
  if (text == "combined") return TournamentPool::kCombined;
  if (text == "parents") return TournamentPool::kParents;
  throw ConfigError("unknown tournament pool '" + std::string(text) + "'");
}

void EvolutionConfig::validate(const SearchSpaceConfig& space) const {
  auto probability = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError(std::string(name) + " must be in [0, 1]");
    }
  };
  probability(crossover_prob, "crossover_prob");
  probability(mutation_prob, "mutation_prob");
  probability(bit_flip_prob, "bit_flip_prob");
  probability(diff_threshold, "diff_threshold");
  if (population_size < 1) throw ConfigError("population_size must be >= 1");
  if (generations < 0) throw ConfigError("generations must be >= 0");
  if (elite_size < 0 || elite_size > population_size) {
    throw ConfigError("elite_size must be in [0, population_size]");
  }
  if (crossover_points < 0 || crossover_points % 2 != 0 ||
      crossover_points > space.genome_length()) {
    throw ConfigError("crossover_points must be even and <= genome length");
  }
  if (max_reselect < 1) throw ConfigError("max_reselect must be >= 1");
}

namespace {

double fitness_of(const Individual& ind) {
  if (!ind.fitness) {
    throw std::invalid_argument("individual " + std::to_string(ind.id) + " is not evaluated");
  }
  return *ind.fitness;
}

/// Indices sorted by descending fitness, ties in input order.
std::vector<std::size_t> rank(std::span<const Individual> pool) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitness_of(pool[a]) > fitness_of(pool[b]);
  });
  return order;
}

}  // namespace

const Individual& binary_tournament(std::span<const Individual> pool, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("binary_tournament: empty pool");
  if (pool.size() == 1) {
    fitness_of(pool[0]);
    return pool[0];
  }
  const std::size_t i = rng.below(pool.size());
  std::size_t j = rng.below(pool.size() - 1);
  if (j >= i) ++j;
  const double fi = fitness_of(pool[i]);
  const double fj = fitness_of(pool[j]);
  if (fi > fj) return pool[i];
  if (fj > fi) return pool[j];
  return rng.bit() ? pool[i] : pool[j];
}

std::pair<Genotype, Genotype> exchange_segments(const Genotype& a, const Genotype& b,
                                                std::span<const int> points) {
  if (a.size() != b.size()) throw std::invalid_argument("exchange_segments: length mismatch");
  if (points.size() % 2 != 0) throw std::invalid_argument("exchange_segments: odd point count");
  std::vector<std::uint8_t> x(a.bits().begin(), a.bits().end());
  std::vector<std::uint8_t> y(b.bits().begin(), b.bits().end());
  for (std::size_t k = 0; k + 1 < points.size(); k += 2) {
    const auto begin = static_cast<std::size_t>(points[k]);
    const auto end = static_cast<std::size_t>(points[k + 1]);
    if (begin > end || end > x.size()) {
      throw std::invalid_argument("exchange_segments: bad segment");
    }
    std::swap_ranges(x.begin() + static_cast<std::ptrdiff_t>(begin),
                     x.begin() + static_cast<std::ptrdiff_t>(end),
                     y.begin() + static_cast<std::ptrdiff_t>(begin));
  }
  return {a.with_bits(std::move(x)), b.with_bits(std::move(y))};
}

CrossoverResult difference_guided_crossover(std::span<const Individual> population,
                                            const EvolutionConfig& config, Rng& rng) {
  const Individual* p1 = nullptr;
  const Individual* p2 = nullptr;
  CrossoverRecord record;
  for (int draw = 1; draw <= config.max_reselect; ++draw) {
    p1 = &binary_tournament(population, rng);
    p2 = &binary_tournament(population, rng);
    record.draws = draw;
    record.diff = normalized_hamming(p1->genotype, p2->genotype);
    if (record.diff > config.diff_threshold) {
      record.any_exceeded = true;
      break;
    }
  }
  record.parent1 = p1->id;
  record.parent2 = p2->id;

  if (rng.uniform01() >= config.crossover_prob) {
    return {p1->genotype, p2->genotype, record};
  }

  // Partial Fisher-Yates: the first crossover_points slots become a uniform
  // sample of distinct positions.
  std::vector<int> positions(p1->genotype.size());
  std::iota(positions.begin(), positions.end(), 0);
  const auto count = static_cast<std::size_t>(config.crossover_points);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(positions.size() - i);
    std::swap(positions[i], positions[j]);
  }
  positions.resize(count);
  std::sort(positions.begin(), positions.end());

  auto [o1, o2] = exchange_segments(p1->genotype, p2->genotype, positions);
  record.crossed = true;
  record.points = std::move(positions);
  return {std::move(o1), std::move(o2), std::move(record)};
}

Genotype mutate(const Genotype& genotype, const EvolutionConfig& config, Rng& rng) {
  if (!rng.bernoulli(config.mutation_prob)) return genotype;
  std::vector<std::uint8_t> bits(genotype.bits().begin(), genotype.bits().end());
  for (auto& b : bits) {
    if (rng.bernoulli(config.bit_flip_prob)) b ^= 1;
  }
  return genotype.with_bits(std::move(bits));
}

Population environmental_select(std::span<const Individual> parents,
                                std::span<const Individual> offspring,
                                const EvolutionConfig& config, Rng& rng) {
  const auto n = static_cast<std::size_t>(config.population_size);
  if (parents.size() != n) {
    throw std::invalid_argument("environmental_select: expected " + std::to_string(n) +
                                " parents, got " + std::to_string(parents.size()));
  }

  Population pool(parents.begin(), parents.end());
  pool.insert(pool.end(), offspring.begin(), offspring.end());
  const auto order = rank(pool);  // also rejects unevaluated individuals

  Population next;
  next.reserve(n);
  if (config.strategy == SelectionStrategy::kTopN) {
    for (std::size_t i = 0; i < n; ++i) next.push_back(pool[order[i]]);
    return next;
  }

  const std::size_t elites = std::min(
      config.strategy == SelectionStrategy::kElitist1 ? std::size_t{1}
                                                      : static_cast<std::size_t>(config.elite_size),
      n);
  std::vector<bool> is_elite(pool.size(), false);
  for (std::size_t i = 0; i < elites; ++i) {
    is_elite[order[i]] = true;
    next.push_back(pool[order[i]]);
  }

  Population remaining;
  const std::size_t limit =
      config.tournament_pool == TournamentPool::kParents ? parents.size() : pool.size();
  for (std::size_t i = 0; i < limit; ++i) {
    if (!is_elite[i]) remaining.push_back(pool[i]);
  }
  while (next.size() < n) {
    if (remaining.empty()) {
      throw std::invalid_argument("environmental_select: tournament pool is empty");
    }
    next.push_back(binary_tournament(remaining, rng));
  }
  return next;
}

std::size_t best_index(std::span<const Individual> population) {
  if (population.empty()) throw std::invalid_argument("best_index: empty population");
  std::size_t best = 0;
  for (std::size_t i = 1; i < population.size(); ++i) {
    if (fitness_of(population[i]) > fitness_of(population[best])) best = i;
  }
  return best;
}

}  // namespace unetsearch
