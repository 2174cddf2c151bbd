#include "unetsearch/fitness.hpp"

#include <mutex>
#include <unordered_set>

#include "unetsearch/archspace.hpp"
#include "unetsearch/errors.hpp"
#include "unetsearch/ir_json.hpp"

namespace unetsearch {

using nlohmann::json;

FitnessResponse FitnessResponse::success(std::uint64_t id, double fitness) {
  FitnessResponse r;
  r.request_id = id;
  r.fitness = fitness;
  return r;
}

FitnessResponse FitnessResponse::failure(std::uint64_t id, std::string message) {
  FitnessResponse r;
  r.request_id = id;
  r.status = ResponseStatus::kError;
  r.message = std::move(message);
  return r;
}

json to_json(const FitnessRequest& request) {
  return {{"schema", kFitnessRequestSchema},
          {"type", "evaluate"},
          {"request_id", request.request_id},
          {"genome", request.genome},
          {"arch_ir", request.arch_ir},
          {"eval_config", request.eval_config}};
}

FitnessRequest request_from_json(const json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kFitnessRequestSchema) {
      throw ParseError("unsupported request schema");
    }
    FitnessRequest r;
    r.request_id = doc.at("request_id").get<std::uint64_t>();
    r.genome = doc.at("genome").get<std::string>();
    r.arch_ir = doc.at("arch_ir");
    r.eval_config = doc.value("eval_config", json::object());
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed fitness request: ") + e.what());
  }
}

json to_json(const FitnessResponse& response) {
  json doc = {{"schema", kFitnessResponseSchema}, {"request_id", response.request_id}};
  if (response.ok()) {
    doc["status"] = "ok";
    doc["fitness"] = response.fitness;
    doc["metrics"] = response.metrics;
  } else {
    doc["status"] = "error";
    doc["message"] = response.message;
  }
  return doc;
}

FitnessResponse parse_response(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("response is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ProtocolError("response is not a JSON object");
    if (doc.value("schema", std::string(kFitnessResponseSchema)) != kFitnessResponseSchema) {
      throw ProtocolError("unsupported response schema");
    }
    if (!doc.contains("request_id") || !doc["request_id"].is_number_unsigned()) {
      throw ProtocolError("response lacks a request_id");
    }
    FitnessResponse r;
    r.request_id = doc["request_id"].get<std::uint64_t>();
    const auto status = doc.value("status", std::string());
    if (status == "ok") {
      if (!doc.contains("fitness") || !doc["fitness"].is_number()) {
        throw ProtocolError("ok response lacks a numeric fitness");
      }
      r.fitness = doc["fitness"].get<double>();
      if (!(r.fitness >= 0.0 && r.fitness <= 1.0)) {
        throw ProtocolError("fitness outside [0, 1]");
      }
      if (doc.contains("metrics")) r.metrics = doc["metrics"];
    } else if (status == "error") {
      r.status = ResponseStatus::kError;
      r.message = doc.value("message", std::string("worker reported an error"));
    } else {
      throw ProtocolError("response status must be 'ok' or 'error'");
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
}

json shutdown_message() { return {{"schema", kFitnessRequestSchema}, {"type", "shutdown"}}; }

SurrogateEvaluator::SurrogateEvaluator(std::string identity, SearchSpaceConfig space,
                                       Function function)
    : identity_(std::move(identity)), space_(space), function_(std::move(function)) {}

std::vector<FitnessResponse> SurrogateEvaluator::evaluate(std::span<const FitnessRequest> requests,
                                                          int /*parallelism*/) {
  std::vector<FitnessResponse> out;
  out.reserve(requests.size());
  for (const auto& request : requests) {
    ++calls_;
    try {
      out.push_back(FitnessResponse::success(request.request_id,
                                             function_(parse_genotype(request.genome, space_))));
    } catch (const std::exception& e) {
      out.push_back(FitnessResponse::failure(request.request_id, e.what()));
    }
  }
  return out;
}

double onemax_fitness(const Genotype& genotype, const Genotype& target) {
  return 1.0 - normalized_hamming(genotype, target);
}

double arch_proxy_fitness(const Genotype& genotype, const SearchSpaceConfig& space) {
  const auto ir = decode_genotype(genotype, space);
  std::size_t active = 0;
  std::size_t favored = 0;
  for (const auto& block : ir.blocks) {
    active += block.graph.active_nodes.size();
    favored += block.graph.op_id == kArchProxyFavoredOp;
  }
  const double blocks = static_cast<double>(ir.blocks.size());
  return kArchProxyNodeWeight * static_cast<double>(active) / (blocks * space.max_nodes) +
         kArchProxyOpWeight * static_cast<double>(favored) / blocks;
}

std::unique_ptr<SurrogateEvaluator> make_onemax_evaluator(const Genotype& target,
                                                          const SearchSpaceConfig& space) {
  return std::make_unique<SurrogateEvaluator>(
      "onemax:" + target.to_string(), space,
      [target](const Genotype& g) { return onemax_fitness(g, target); });
}

std::unique_ptr<SurrogateEvaluator> make_arch_proxy_evaluator(const SearchSpaceConfig& space) {
  return std::make_unique<SurrogateEvaluator>(
      "arch-proxy", space, [space](const Genotype& g) { return arch_proxy_fitness(g, space); });
}

std::string FitnessCache::key(std::string_view evaluator, std::string_view genome) {
  std::string k(evaluator);
  k += '\n';
  k += genome;
  return k;
}

void FitnessCache::attach(const std::filesystem::path& path) {
  std::unique_lock lock(mutex_);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (line.empty()) continue;
      try {
        const auto doc = json::parse(line);
        entries_[key(doc.at("evaluator").get<std::string>(), doc.at("genome").get<std::string>())] =
            doc.at("fitness").get<double>();
      } catch (const json::exception& e) {
        throw RunLogError(path.string() + ":" + std::to_string(number) +
                          ": corrupted cache entry: " + e.what());
      }
    }
  }
  file_.close();
  file_.open(path, std::ios::app);
  if (!file_) throw RunLogError("cannot open cache file " + path.string());
}

std::optional<double> FitnessCache::lookup(std::string_view evaluator,
                                           std::string_view genome) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key(evaluator, genome));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FitnessCache::insert(std::string_view evaluator, std::string_view genome, double fitness) {
  std::unique_lock lock(mutex_);
  const auto [it, inserted] = entries_.emplace(key(evaluator, genome), fitness);
  if (!inserted) return;
  if (file_.is_open()) {
    file_ << json{{"evaluator", evaluator}, {"genome", genome}, {"fitness", fitness}}.dump()
          << '\n';
    file_.flush();
  }
}

std::size_t FitnessCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

EvaluationSummary evaluate_population(Population& population, Evaluator& evaluator,
                                      FitnessCache& cache, EvaluationContext& context) {
  const std::string identity = evaluator.identity();
  EvaluationSummary summary;

  std::vector<std::optional<double>> known(population.size());
  std::vector<FitnessRequest> requests;
  std::unordered_map<std::string, std::size_t> request_of_genome;
  std::vector<std::size_t> pending;  // population index -> waits on a request

  for (std::size_t i = 0; i < population.size(); ++i) {
    const auto& ind = population[i];
    if (ind.fitness) continue;
    const std::string genome = ind.genotype.to_string();
    if (auto hit = cache.lookup(identity, genome)) {
      known[i] = *hit;
      ++summary.cache_hits;
      continue;
    }
    pending.push_back(i);
    if (request_of_genome.contains(genome)) {
      ++summary.cache_hits;
      continue;
    }
    FitnessRequest request;
    request.request_id = context.next_request_id + requests.size();
    request.genome = genome;
    request.arch_ir = ir_to_json(decode_genotype(ind.genotype, context.space));
    request.eval_config = context.eval_config;
    request_of_genome.emplace(genome, requests.size());
    requests.push_back(std::move(request));
  }

  std::vector<FitnessResponse> responses;
  if (!requests.empty()) {
    responses = evaluator.evaluate(requests, std::max(1, context.parallelism));
    if (responses.size() != requests.size()) {
      throw EvaluationError("evaluator returned " + std::to_string(responses.size()) +
                            " responses for " + std::to_string(requests.size()) + " requests");
    }
  }

  std::string failures;
  std::size_t failed = 0;
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const auto& response = responses[r];
    if (response.request_id != requests[r].request_id) {
      throw EvaluationError("evaluator returned responses out of request order");
    }
    if (!response.ok()) {
      ++failed;
      if (failures.size() < 512) {
        failures += "\n  request " + std::to_string(response.request_id) + ": " + response.message;
      }
    }
  }
  if (failed > 0) {
    throw EvaluationError(std::to_string(failed) + " of " + std::to_string(requests.size()) +
                          " evaluations failed; generation aborted" + failures);
  }

  for (std::size_t r = 0; r < requests.size(); ++r) {
    cache.insert(identity, requests[r].genome, responses[r].fitness);
  }
  for (std::size_t i : pending) {
    const auto r = request_of_genome.at(population[i].genotype.to_string());
    known[i] = responses[r].fitness;
  }
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (known[i]) population[i].fitness = *known[i];
  }

  context.next_request_id += requests.size();
  summary.dispatched = requests.size();
  return summary;
}

}  // namespace unetsearch
