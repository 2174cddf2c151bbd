#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "unetsearch/genome.hpp"
#include "unetsearch/population.hpp"

namespace unetsearch {

inline constexpr const char* kFitnessRequestSchema = "unetsearch.fitness_request/1";
inline constexpr const char* kFitnessResponseSchema = "unetsearch.fitness_response/1";

/// One evaluation job sent to a worker. `arch_ir` is decode(genome) in the
/// IR document format; `eval_config` is passed through untouched.
struct FitnessRequest {
  std::uint64_t request_id = 0;
  std::string genome;
  nlohmann::json arch_ir;
  nlohmann::json eval_config = nlohmann::json::object();
};

enum class ResponseStatus { kOk, kError };

struct FitnessResponse {
  std::uint64_t request_id = 0;
  ResponseStatus status = ResponseStatus::kOk;
  double fitness = 0.0;
  nlohmann::json metrics = nlohmann::json::object();
  std::string message;

  bool ok() const { return status == ResponseStatus::kOk; }

  static FitnessResponse success(std::uint64_t id, double fitness);
  static FitnessResponse failure(std::uint64_t id, std::string message);
};

nlohmann::json to_json(const FitnessRequest& request);
FitnessRequest request_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const FitnessResponse& response);

/// Parses one response line. Throws ProtocolError on invalid JSON, a wrong
/// schema tag, a missing request_id, or an ok status without a fitness in
/// [0, 1].
FitnessResponse parse_response(std::string_view line);

/// Message asking a worker to exit with status 0.
nlohmann::json shutdown_message();

/// Fitness source. Implementations return exactly one response per request,
/// in request order; a request that could not be evaluated comes back with
/// status error.
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  /// Stable name; part of the fitness cache key and recorded in run logs.
  virtual std::string identity() const = 0;

  virtual std::vector<FitnessResponse> evaluate(std::span<const FitnessRequest> requests,
                                                int parallelism) = 0;
};

/// In-process evaluator over a pure function of the genotype.
class SurrogateEvaluator : public Evaluator {
 public:
  using Function = std::function<double(const Genotype&)>;

  SurrogateEvaluator(std::string identity, SearchSpaceConfig space, Function function);

  std::string identity() const override { return identity_; }
  std::vector<FitnessResponse> evaluate(std::span<const FitnessRequest> requests,
                                        int parallelism) override;

  /// Number of requests evaluated so far.
  std::size_t calls() const { return calls_; }

 private:
  std::string identity_;
  SearchSpaceConfig space_;
  Function function_;
  std::size_t calls_ = 0;
};

/// 1 - normalized Hamming distance to `target`.
double onemax_fitness(const Genotype& genotype, const Genotype& target);

inline constexpr double kArchProxyNodeWeight = 0.5;
inline constexpr double kArchProxyOpWeight = 0.5;
inline constexpr int kArchProxyFavoredOp = 11;

/// 0.5 * (active intermediate nodes / (blocks * max_nodes))
///   + 0.5 * (fraction of blocks using op 11), computed on the decoded
/// architecture.
double arch_proxy_fitness(const Genotype& genotype, const SearchSpaceConfig& space);

std::unique_ptr<SurrogateEvaluator> make_onemax_evaluator(const Genotype& target,
                                                          const SearchSpaceConfig& space);
std::unique_ptr<SurrogateEvaluator> make_arch_proxy_evaluator(const SearchSpaceConfig& space);

/// Fitness memo keyed by (evaluator identity, canonical genome). Concurrent
/// lookups share a lock; inserts are serialized and, once a file is
/// attached, appended to it as JSON lines.
class FitnessCache {
 public:
  FitnessCache() = default;

  /// Loads existing entries from `path` (if present) and appends every later
  /// insert there. Throws RunLogError on a corrupted cache file.
  void attach(const std::filesystem::path& path);

  std::optional<double> lookup(std::string_view evaluator, std::string_view genome) const;
  void insert(std::string_view evaluator, std::string_view genome, double fitness);
  std::size_t size() const;

 private:
  static std::string key(std::string_view evaluator, std::string_view genome);

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, double> entries_;
  std::ofstream file_;
};

struct EvaluationContext {
  SearchSpaceConfig space;
  nlohmann::json eval_config = nlohmann::json::object();
  int parallelism = 1;
  std::uint64_t next_request_id = 1;
};

struct EvaluationSummary {
  std::size_t dispatched = 0;
  std::size_t cache_hits = 0;

  bool operator==(const EvaluationSummary&) const = default;
};

/// Fills in every missing fitness. The cache is consulted first and each
/// distinct uncached genome is dispatched once; results merge by index, so
/// the outcome does not depend on completion order. If any request fails,
/// throws EvaluationError and leaves both the population and the cache
/// untouched.
EvaluationSummary evaluate_population(Population& population, Evaluator& evaluator,
                                      FitnessCache& cache, EvaluationContext& context);

}  // namespace unetsearch
