#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "unetsearch/evolution.hpp"
#include "unetsearch/fitness.hpp"
#include "unetsearch/genome.hpp"

namespace unetsearch {

/// How fitness is computed for a search. `kind` is one of "onemax",
/// "arch-proxy" or "external".
struct EvaluatorSettings {
  std::string kind = "onemax";
  std::string command;
  /// OneMax target genome; all ones when unset.
  std::optional<std::string> onemax_target;
  int parallelism = 1;
  double timeout_seconds = 24 * 3600.0;
  int max_in_flight_per_worker = 1;
  nlohmann::json eval_config = nlohmann::json::object();

  /// "onemax", "arch-proxy" or "external:<command>".
  void apply_flag(const std::string& flag);
};

/// Contents of a search config file. Missing keys keep their defaults,
/// unknown keys are rejected.
struct SearchConfig {
  EvolutionConfig evolution;
  SearchSpaceConfig space;
  EvaluatorSettings evaluator;

  void validate() const;
};

nlohmann::json to_json(const EvolutionConfig& config);
nlohmann::json to_json(const SearchSpaceConfig& config);
nlohmann::json to_json(const EvaluatorSettings& settings);
nlohmann::json to_json(const SearchConfig& config);

/// Throw ConfigError on unknown keys or ill-typed values.
EvolutionConfig evolution_config_from_json(const nlohmann::json& doc, EvolutionConfig base = {});
SearchSpaceConfig search_space_from_json(const nlohmann::json& doc, SearchSpaceConfig base = {});
EvaluatorSettings evaluator_settings_from_json(const nlohmann::json& doc,
                                               EvaluatorSettings base = {});
SearchConfig search_config_from_json(const nlohmann::json& doc);

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSettings& settings,
                                          const SearchSpaceConfig& space);

}  // namespace unetsearch
