#include "unetsearch/config_json.hpp"

#include <chrono>
#include <set>

#include "unetsearch/errors.hpp"
#include "unetsearch/external_evaluator.hpp"

namespace unetsearch {

using nlohmann::json;

namespace {

void reject_unknown(const json& doc, const std::set<std::string>& known, const char* where) {
  if (!doc.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  const auto& v = doc.at(key);
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned()) {
        throw ConfigError(std::string(key) + " must be non-negative");
      }
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(std::string(key) + " must be a string");
  }
  out = v.get<T>();
}

}  // namespace

void EvaluatorSettings::apply_flag(const std::string& flag) {
  constexpr std::string_view kExternal = "external:";
  if (flag == "onemax" || flag == "arch-proxy") {
    kind = flag;
    command.clear();
  } else if (flag.starts_with(kExternal) && flag.size() > kExternal.size()) {
    kind = "external";
    command = flag.substr(kExternal.size());
  } else {
    throw ConfigError("unknown evaluator '" + flag +
                      "' (expected onemax, arch-proxy or external:<command>)");
  }
}

void SearchConfig::validate() const {
  space.validate();
  evolution.validate(space);
  if (evaluator.kind != "onemax" && evaluator.kind != "arch-proxy" &&
      evaluator.kind != "external") {
    throw ConfigError("evaluator.kind must be onemax, arch-proxy or external");
  }
  if (evaluator.kind == "external" && evaluator.command.empty()) {
    throw ConfigError("external evaluator needs a command");
  }
  if (evaluator.parallelism < 1) throw ConfigError("evaluator.parallelism must be >= 1");
  if (!(evaluator.timeout_seconds > 0)) throw ConfigError("evaluator.timeout_seconds must be > 0");
  if (evaluator.max_in_flight_per_worker < 1) {
    throw ConfigError("evaluator.max_in_flight_per_worker must be >= 1");
  }
  if (evaluator.onemax_target) parse_genotype(*evaluator.onemax_target, space);
}

json to_json(const EvolutionConfig& c) {
  return {{"population_size", c.population_size},
          {"generations", c.generations},
          {"crossover_prob", c.crossover_prob},
          {"mutation_prob", c.mutation_prob},
          {"bit_flip_prob", c.bit_flip_prob},
          {"diff_threshold", c.diff_threshold},
          {"elite_size", c.elite_size},
          {"crossover_points", c.crossover_points},
          {"max_reselect", c.max_reselect},
          {"selection_strategy", to_string(c.strategy)},
          {"tournament_pool", to_string(c.tournament_pool)},
          {"seed", c.seed}};
}

json to_json(const SearchSpaceConfig& c) {
  return {{"stages", c.stages},
          {"max_nodes", c.max_nodes},
          {"channels", c.channels},
          {"in_channels", c.in_channels}};
}

json to_json(const EvaluatorSettings& s) {
  json doc = {{"kind", s.kind},
              {"parallelism", s.parallelism},
              {"timeout_seconds", s.timeout_seconds},
              {"max_in_flight_per_worker", s.max_in_flight_per_worker},
              {"eval_config", s.eval_config}};
  if (!s.command.empty()) doc["command"] = s.command;
  if (s.onemax_target) doc["onemax_target"] = *s.onemax_target;
  return doc;
}

json to_json(const SearchConfig& c) {
  json doc = to_json(c.evolution);
  doc["search_space"] = to_json(c.space);
  doc["evaluator"] = to_json(c.evaluator);
  return doc;
}

EvolutionConfig evolution_config_from_json(const json& doc, EvolutionConfig c) {
  reject_unknown(doc,
                 {"population_size", "generations", "crossover_prob", "mutation_prob",
                  "bit_flip_prob", "diff_threshold", "elite_size", "crossover_points",
                  "max_reselect", "selection_strategy", "tournament_pool", "seed",
                  "search_space", "evaluator"},
                 "config");
  read(doc, "population_size", c.population_size);
  read(doc, "generations", c.generations);
  read(doc, "crossover_prob", c.crossover_prob);
  read(doc, "mutation_prob", c.mutation_prob);
  read(doc, "bit_flip_prob", c.bit_flip_prob);
  read(doc, "diff_threshold", c.diff_threshold);
  read(doc, "elite_size", c.elite_size);
  read(doc, "crossover_points", c.crossover_points);
  read(doc, "max_reselect", c.max_reselect);
  read(doc, "seed", c.seed);
  std::string text;
  if (doc.contains("selection_strategy")) {
    read(doc, "selection_strategy", text);
    c.strategy = parse_selection_strategy(text);
  }
  if (doc.contains("tournament_pool")) {
    read(doc, "tournament_pool", text);
    c.tournament_pool = parse_tournament_pool(text);
  }
  return c;
}

SearchSpaceConfig search_space_from_json(const json& doc, SearchSpaceConfig c) {
  reject_unknown(doc, {"stages", "max_nodes", "channels", "in_channels"}, "search_space");
  read(doc, "stages", c.stages);
  read(doc, "max_nodes", c.max_nodes);
  read(doc, "channels", c.channels);
  read(doc, "in_channels", c.in_channels);
  return c;
}

EvaluatorSettings evaluator_settings_from_json(const json& doc, EvaluatorSettings s) {
  reject_unknown(doc,
                 {"kind", "command", "onemax_target", "parallelism", "timeout_seconds",
                  "max_in_flight_per_worker", "eval_config"},
                 "evaluator");
  read(doc, "kind", s.kind);
  read(doc, "command", s.command);
  if (doc.contains("onemax_target")) {
    std::string target;
    read(doc, "onemax_target", target);
    s.onemax_target = target;
  }
  read(doc, "parallelism", s.parallelism);
  read(doc, "timeout_seconds", s.timeout_seconds);
  read(doc, "max_in_flight_per_worker", s.max_in_flight_per_worker);
  if (doc.contains("eval_config")) {
    if (!doc["eval_config"].is_object()) throw ConfigError("eval_config must be an object");
    s.eval_config = doc["eval_config"];
  }
  return s;
}

SearchConfig search_config_from_json(const json& doc) {
  SearchConfig c;
  c.evolution = evolution_config_from_json(doc);
  if (doc.contains("search_space")) c.space = search_space_from_json(doc["search_space"]);
  if (doc.contains("evaluator")) c.evaluator = evaluator_settings_from_json(doc["evaluator"]);
  return c;
}

std::unique_ptr<Evaluator> make_evaluator(const EvaluatorSettings& settings,
                                          const SearchSpaceConfig& space) {
  if (settings.kind == "onemax") {
    std::vector<std::uint8_t> ones(static_cast<std::size_t>(space.genome_length()), 1);
    const Genotype target = settings.onemax_target
                                ? parse_genotype(*settings.onemax_target, space)
                                : Genotype(space, std::move(ones));
    return make_onemax_evaluator(target, space);
  }
  if (settings.kind == "arch-proxy") return make_arch_proxy_evaluator(space);
  if (settings.kind == "external") {
    ExternalEvaluatorOptions options;
    options.timeout = std::chrono::milliseconds(
        static_cast<std::int64_t>(settings.timeout_seconds * 1000.0));
    options.max_in_flight_per_worker = settings.max_in_flight_per_worker;
    return std::make_unique<ExternalEvaluator>(settings.command, options);
  }
  throw ConfigError("unknown evaluator kind '" + settings.kind + "'");
}

}  // namespace unetsearch
