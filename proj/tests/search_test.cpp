#include <doctest.h>

#include <fstream>
#include <map>

#include "oracles.hpp"
#include "unetsearch/errors.hpp"
#include "unetsearch/search.hpp"

using namespace unetsearch;

namespace {

EvolutionConfig small_config(std::uint64_t seed) {
  EvolutionConfig cfg;
  cfg.population_size = 10;
  cfg.generations = 8;
  cfg.seed = seed;
  return cfg;
}

std::vector<std::string> lines_of(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CountingFailure : public Evaluator {
 public:
  explicit CountingFailure(Evaluator& inner, int fail_on_call) : inner_(inner), fail_on_(fail_on_call) {}
  std::string identity() const override { return inner_.identity(); }
  std::vector<FitnessResponse> evaluate(std::span<const FitnessRequest> requests,
                                        int parallelism) override {
    if (++calls_ == fail_on_) {
      std::vector<FitnessResponse> out;
      for (const auto& r : requests) out.push_back(FitnessResponse::failure(r.request_id, "down"));
      return out;
    }
    return inner_.evaluate(requests, parallelism);
  }

 private:
  Evaluator& inner_;
  int fail_on_;
  int calls_ = 0;
};

}  // namespace

TEST_CASE("evolve structure and provenance") {
  const SearchSpaceConfig space;
  auto evaluator = make_onemax_evaluator(oracle::filled(space, 1), space);
  const auto log = evolve(small_config(3), space, *evaluator);
  REQUIRE(log.generations.size() == 9);
  CHECK(log.complete());
  CHECK(log.header.evaluator == evaluator->identity());

  std::map<IndividualId, Individual> seen;
  double previous_best = -1.0;
  for (const auto& g : log.generations) {
    CHECK(g.population.size() == 10);
    CHECK(g.origins.size() == 10);
    CHECK(g.best_fitness >= previous_best);
    previous_best = g.best_fitness;
    if (g.generation == 0) {
      CHECK(g.offspring.empty());
      for (auto o : g.origins) CHECK(o == SelectionOrigin::kInitial);
    } else {
      CHECK(g.offspring.size() == 10);
      CHECK(g.crossovers.size() == 5);
      CHECK(g.evaluation.dispatched + g.evaluation.cache_hits == 10);
      for (const auto& child : g.offspring) {
        CHECK(child.born == g.generation);
        CHECK(child.parents.size() == 2);
        for (auto p : child.parents) CHECK(seen.count(p) == 1);
      }
    }
    for (const auto& ind : g.offspring) seen[ind.id] = ind;
    // Every survivor already existed: either a logged parent or an offspring.
    for (const auto& ind : g.population) {
      if (g.generation == 0) {
        seen[ind.id] = ind;
        continue;
      }
      REQUIRE(seen.count(ind.id) == 1);
      CHECK(seen[ind.id].genotype == ind.genotype);
      CHECK(seen[ind.id].fitness == ind.fitness);
    }
    for (const auto& ind : g.population) CHECK(*ind.fitness == onemax_fitness(ind.genotype, oracle::filled(space, 1)));
  }
}

TEST_CASE("same seed gives an identical log; different seed does not") {
  const SearchSpaceConfig space;
  auto e1 = make_onemax_evaluator(oracle::filled(space, 1), space);
  auto e2 = make_onemax_evaluator(oracle::filled(space, 1), space);
  const auto a = evolve(small_config(5), space, *e1);
  const auto b = evolve(small_config(5), space, *e2);
  CHECK(a == b);
  CHECK(evolve(small_config(6), space, *e1) != a);
}

TEST_CASE("run directory round trip and resume") {
  const SearchSpaceConfig space;
  const auto dir = oracle::scratch_dir("resume");
  auto evaluator = make_arch_proxy_evaluator(space);
  const auto reference = evolve(small_config(9), space, *evaluator);

  SearchOptions options;
  options.run_dir = dir / "run";
  options.stop_after = 3;
  const auto partial = evolve(small_config(9), space, *evaluator, options);
  CHECK(partial.generations.size() == 4);
  CHECK_FALSE(partial.complete());
  CHECK(read_run_log(dir / "run" / kRunLogFile) == partial);

  SUBCASE("resume finishes identically") {
    auto fresh = make_arch_proxy_evaluator(space);
    const auto resumed = resume(dir / "run", *fresh);
    CHECK(resumed == reference);
    CHECK(read_run_log(dir / "run" / kRunLogFile) == reference);
    // Generations 0..3 are replayed from disk; only later work is dispatched.
    std::size_t later = 0;
    for (int g = 4; g <= 8; ++g) later += reference.generations[static_cast<std::size_t>(g)].evaluation.dispatched;
    CHECK(fresh->calls() == later);
    SUBCASE("resume of a complete run is a no-op") {
      const auto before = lines_of(dir / "run" / kRunLogFile);
      auto third = make_arch_proxy_evaluator(space);
      CHECK(resume(dir / "run", *third) == reference);
      CHECK(third->calls() == 0);
      CHECK(lines_of(dir / "run" / kRunLogFile) == before);
    }
  }
  SUBCASE("resume checks the evaluator identity") {
    auto other = make_onemax_evaluator(oracle::filled(space, 1), space);
    CHECK_THROWS_AS(resume(dir / "run", *other), RunLogError);
  }
  SUBCASE("a fresh evolve refuses an occupied directory") {
    CHECK_THROWS_AS(evolve(small_config(9), space, *evaluator, options), RunLogError);
  }
  SUBCASE("corrupted log") {
    auto lines = lines_of(dir / "run" / kRunLogFile);
    lines[2] = lines[2].substr(0, lines[2].size() / 2);
    std::ofstream out(dir / "run" / kRunLogFile, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
    out.close();
    CHECK_THROWS_AS(read_run_log(dir / "run" / kRunLogFile), RunLogError);
    CHECK_THROWS_AS(resume(dir / "run", *evaluator), RunLogError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("an evaluator failure checkpoints at the last full generation") {
  const SearchSpaceConfig space;
  const auto dir = oracle::scratch_dir("failure");
  auto inner = make_onemax_evaluator(oracle::filled(space, 1), space);
  const auto reference = evolve(small_config(4), space, *inner);

  CountingFailure flaky(*inner, 4);  // generation 3 fails
  SearchOptions options;
  options.run_dir = dir;
  CHECK_THROWS_AS(evolve(small_config(4), space, flaky, options), EvaluationError);
  CHECK(read_run_log(dir / kRunLogFile).generations.size() == 3);

  auto healthy = make_onemax_evaluator(oracle::filled(space, 1), space);
  CHECK(resume(dir, *healthy) == reference);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run log JSON round trip") {
  const SearchSpaceConfig space;
  auto evaluator = make_onemax_evaluator(oracle::filled(space, 1), space);
  const auto log = evolve(small_config(1), space, *evaluator);
  CHECK(header_from_json(nlohmann::json::parse(to_json(log.header).dump())) == log.header);
  for (const auto& g : log.generations) {
    CHECK(generation_from_json(nlohmann::json::parse(to_json(g).dump()), space) == g);
  }
  CHECK_THROWS_AS(header_from_json(nlohmann::json{{"type", "generation"}}), RunLogError);
}
