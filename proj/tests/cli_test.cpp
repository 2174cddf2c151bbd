#include <doctest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "unetsearch/cli.hpp"
#include "unetsearch/ir_json.hpp"
#include "unetsearch/run_log.hpp"
#include "unetsearch/search.hpp"

using namespace unetsearch;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "unetsearch");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path write_config(const std::filesystem::path& dir, const json& doc) {
  const auto path = dir / "config.in.json";
  std::ofstream(path) << doc.dump();
  return path;
}

const std::string kZeros(98, '0');

}  // namespace

TEST_CASE("decode") {
  const auto r = run({"decode", kZeros});
  CHECK(r.code == kExitOk);
  std::size_t degenerate = 0;
  for (auto pos = r.out.find("degenerate"); pos != std::string::npos;
       pos = r.out.find("degenerate", pos + 1)) {
    ++degenerate;
  }
  CHECK(degenerate == 7);
  CHECK(r.out.find("validation: ok") != std::string::npos);

  CHECK(run({"decode", random_genotype(4, {}).to_string()}).out.find("validation: ok") !=
        std::string::npos);
  const auto bad = run({"decode", "0101"});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("length") != std::string::npos);
}

TEST_CASE("analyze") {
  SUBCASE("baseline") {
    const auto r = run({"analyze", "--baseline", "unet", "--input", "3x565x584"});
    REQUIRE(r.code == kExitOk);
    const auto doc = json::parse(r.out);
    CHECK(doc.at("params").get<double>() == doctest::Approx(31.03e6).epsilon(0.02));
    CHECK(doc.at("macs").get<double>() == doctest::Approx(142e9).epsilon(0.05));
  }
  SUBCASE("width scaling") {
    const auto genome = random_genotype(8, {}).to_string();
    const auto a = json::parse(run({"analyze", genome, "--channels", "20"}).out);
    const auto b = json::parse(run({"analyze", genome, "--channels", "40"}).out);
    const double ratio = b.at("params").get<double>() / a.at("params").get<double>();
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
    CHECK(a.at("params") == oracle::params(random_genotype(8, {}), 20));
  }
  SUBCASE("table") {
    const auto r = run({"analyze", "--baseline", "unet", "--table"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("31.03 M") != std::string::npos);
  }
  SUBCASE("errors") {
    CHECK(run({"analyze", kZeros, "--channels", "0"}).code == kExitUsage);
    CHECK(run({"analyze", kZeros, "--input", "3x5"}).code == kExitUsage);
    CHECK(run({"analyze"}).code == kExitUsage);
    CHECK(run({"analyze", "--baseline", "vgg"}).code == kExitUsage);
  }
}

TEST_CASE("export") {
  const SearchSpaceConfig space;
  const auto g = random_genotype(12, space);
  const auto r = run({"export", g.to_string(), "--format", "json"});
  REQUIRE(r.code == kExitOk);
  CHECK(ir_from_json(json::parse(r.out)) == decode_genotype(g, space));
  CHECK(run({"export", g.to_string(), "--format", "yaml"}).code == kExitUsage);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"search", "--strategy", "roulette"}).code == kExitUsage);
  CHECK(run({"search", "--evaluator", "magic"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("search and resume") {
  const auto dir = oracle::scratch_dir("cli");
  const auto config = write_config(dir, {{"population_size", 8}, {"generations", 6}});

  SUBCASE("onemax run") {
    const auto r = run({"search", "--config", config.string(), "--seed", "1", "--out",
                        (dir / "run").string(), "--evaluator", "onemax"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("generation 6 best") != std::string::npos);
    const auto log = read_run_log(dir / "run" / kRunLogFile);
    CHECK(log.complete());
    CHECK(log.generations.back().best_fitness >= log.generations.front().best_fitness);
    CHECK(std::filesystem::exists(dir / "run" / "config.json"));
    CHECK(std::filesystem::exists(dir / "run" / "top5.txt"));
    CHECK(std::filesystem::exists(dir / "run" / "rank1.ir.json"));

    const auto again = run({"resume", (dir / "run").string()});
    CHECK(again.code == kExitOk);
    CHECK(read_run_log(dir / "run" / kRunLogFile) == log);

    // A second search into the same directory is refused.
    CHECK(run({"search", "--seed", "1", "--out", (dir / "run").string()}).code == kExitRuntime);
  }
  SUBCASE("strategy flag overrides the file") {
    const auto r = run({"search", "--config", config.string(), "--seed", "2", "--out",
                        (dir / "top").string(), "--strategy", "top_n"});
    REQUIRE(r.code == kExitOk);
    const auto log = read_run_log(dir / "top" / kRunLogFile);
    CHECK(log.header.evolution.strategy == SelectionStrategy::kTopN);
    CHECK(log.header.evolution.seed == 2);
  }
  SUBCASE("invalid config") {
    const auto bad = write_config(dir, {{"crossover_prob", 1.5}});
    const auto r = run({"search", "--config", bad.string(), "--seed", "1"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("crossover_prob") != std::string::npos);
    const auto unknown = write_config(dir, {{"mutation_rate", 0.5}});
    CHECK(run({"search", "--config", unknown.string()}).code == kExitUsage);
  }
  SUBCASE("external stub accounting") {
    const std::string evaluator = std::string("external:") + UNETSEARCH_STUB_WORKER + " --check-ir";
    const auto r = run({"search", "--config", config.string(), "--seed", "3", "--out",
                        (dir / "ext").string(), "--evaluator", evaluator});
    REQUIRE(r.code == kExitOk);
    const auto log = read_run_log(dir / "ext" / kRunLogFile);
    std::size_t dispatched = 0, hits = 0;
    for (const auto& g : log.generations) {
      dispatched += g.evaluation.dispatched;
      hits += g.evaluation.cache_hits;
    }
    CHECK(dispatched + hits == 8 * 7);
    std::ifstream cache(dir / "ext" / kCacheFile);
    std::size_t cached = 0;
    for (std::string line; std::getline(cache, line);) ++cached;
    CHECK(cached == dispatched);
    const auto ones = [](const std::string& s) {
      return static_cast<double>(std::count(s.begin(), s.end(), '1')) / 98.0;
    };
    for (const auto& ind : log.generations.back().population) {
      CHECK(*ind.fitness == ones(ind.genotype.to_string()));
    }
  }
  SUBCASE("failing worker exits with a runtime error") {
    const std::string evaluator = std::string("external:") + UNETSEARCH_STUB_WORKER + " --error";
    const auto r = run({"search", "--config", config.string(), "--seed", "3", "--out",
                        (dir / "fail").string(), "--evaluator", evaluator});
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find("failed") != std::string::npos);
  }
  SUBCASE("resume errors") {
    CHECK(run({"resume", (dir / "missing").string()}).code == kExitUsage);
    std::filesystem::create_directories(dir / "broken");
    std::ofstream(dir / "broken" / "config.json") << "{}";
    std::ofstream(dir / "broken" / kRunLogFile) << "{\"type\":\"header\"\n";
    CHECK(run({"resume", (dir / "broken").string()}).code == kExitRuntime);
  }
  std::filesystem::remove_all(dir);
}
