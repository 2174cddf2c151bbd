#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include <json.hpp>

#include "unetsearch/evolution.hpp"
#include "unetsearch/fitness.hpp"
#include "unetsearch/run_log.hpp"

namespace unetsearch {

struct SearchOptions {
  /// When set, the run log and fitness cache are persisted here.
  std::optional<std::filesystem::path> run_dir;
  int parallelism = 1;
  nlohmann::json eval_config = nlohmann::json::object();
  /// Stop (as if interrupted) once this generation has been logged.
  std::optional<int> stop_after;
  std::function<void(const GenerationRecord&)> on_generation;
};

inline constexpr const char* kRunLogFile = "runlog.jsonl";
inline constexpr const char* kCacheFile = "cache.jsonl";

/// Generational loop: random initial population, then per generation
/// offspring by difference-guided crossover and mutation, evaluation, and
/// environmental selection. Generation t draws only from Rng(seed, t), so
/// the same seed and evaluator reproduce the run exactly.
///
/// An EvaluationError leaves the run directory at the last complete
/// generation, from which resume() continues.
RunLog evolve(const EvolutionConfig& config, const SearchSpaceConfig& space,
              Evaluator& evaluator, const SearchOptions& options = {});

/// Continues the run stored in `run_dir`. A complete run is returned as is.
/// Throws RunLogError on a corrupted log or an evaluator whose identity
/// differs from the logged one.
RunLog resume(const std::filesystem::path& run_dir, Evaluator& evaluator,
              const SearchOptions& options = {});

}  // namespace unetsearch
