#include "unetsearch/run_log.hpp"

#include "unetsearch/config_json.hpp"
#include "unetsearch/errors.hpp"

namespace unetsearch {

using nlohmann::json;

std::string_view to_string(SelectionOrigin origin) {
  switch (origin) {
    case SelectionOrigin::kInitial: return "initial";
    case SelectionOrigin::kElite: return "elite";
    case SelectionOrigin::kTournament: return "tournament";
    case SelectionOrigin::kTopN: return "top_n";
  }
  return "?";
}

namespace {

SelectionOrigin parse_origin(const std::string& text) {
  for (auto o : {SelectionOrigin::kInitial, SelectionOrigin::kElite, SelectionOrigin::kTournament,
                 SelectionOrigin::kTopN}) {
    if (text == to_string(o)) return o;
  }
  throw RunLogError("unknown selection origin '" + text + "'");
}

json individual_json(const Individual& ind) {
  return {{"id", ind.id},
          {"genome", ind.genotype.to_string()},
          {"fitness", ind.fitness ? json(*ind.fitness) : json(nullptr)},
          {"born", ind.born},
          {"parents", ind.parents}};
}

Individual individual_from_json(const json& doc, const SearchSpaceConfig& space) {
  Individual ind;
  ind.id = doc.at("id").get<IndividualId>();
  ind.genotype = parse_genotype(doc.at("genome").get<std::string>(), space);
  if (!doc.at("fitness").is_null()) ind.fitness = doc.at("fitness").get<double>();
  ind.born = doc.at("born").get<int>();
  ind.parents = doc.at("parents").get<std::vector<IndividualId>>();
  return ind;
}

json population_json(const Population& population) {
  json out = json::array();
  for (const auto& ind : population) out.push_back(individual_json(ind));
  return out;
}

Population population_from_json(const json& doc, const SearchSpaceConfig& space) {
  Population out;
  for (const auto& item : doc) out.push_back(individual_from_json(item, space));
  return out;
}

}  // namespace

const Individual& RunLog::best() const {
  if (generations.empty()) throw RunLogError("run log has no generations");
  const auto& population = generations.back().population;
  return population[best_index(population)];
}

json to_json(const RunHeader& header) {
  return {{"type", "header"},
          {"schema", kRunLogSchema},
          {"evolution", to_json(header.evolution)},
          {"search_space", to_json(header.space)},
          {"evaluator", header.evaluator}};
}

RunHeader header_from_json(const json& doc, const SearchSpaceConfig& fallback) {
  if (doc.value("type", "") != "header") throw RunLogError("first record is not a header");
  if (doc.value("schema", "") != kRunLogSchema) throw RunLogError("unsupported run log schema");
  RunHeader header;
  header.evolution = evolution_config_from_json(doc.at("evolution"));
  header.space = search_space_from_json(doc.at("search_space"), fallback);
  header.evaluator = doc.at("evaluator").get<std::string>();
  return header;
}

json to_json(const GenerationRecord& r) {
  json origins = json::array();
  for (auto o : r.origins) origins.push_back(to_string(o));
  json crossovers = json::array();
  for (const auto& c : r.crossovers) {
    crossovers.push_back({{"parent1", c.parent1},
                          {"parent2", c.parent2},
                          {"diff", c.diff},
                          {"draws", c.draws},
                          {"any_exceeded", c.any_exceeded},
                          {"crossed", c.crossed},
                          {"points", c.points}});
  }
  return {{"type", "generation"},
          {"generation", r.generation},
          {"population", population_json(r.population)},
          {"origins", origins},
          {"offspring", population_json(r.offspring)},
          {"crossovers", crossovers},
          {"evaluation", {{"dispatched", r.evaluation.dispatched},
                          {"cache_hits", r.evaluation.cache_hits}}},
          {"best", {{"id", r.best_id}, {"fitness", r.best_fitness}}},
          {"next_id", r.next_id},
          {"next_request_id", r.next_request_id}};
}

GenerationRecord generation_from_json(const json& doc, const SearchSpaceConfig& space) {
  if (doc.value("type", "") != "generation") throw RunLogError("expected a generation record");
  GenerationRecord r;
  r.generation = doc.at("generation").get<int>();
  r.population = population_from_json(doc.at("population"), space);
  for (const auto& o : doc.at("origins")) r.origins.push_back(parse_origin(o.get<std::string>()));
  r.offspring = population_from_json(doc.at("offspring"), space);
  for (const auto& c : doc.at("crossovers")) {
    CrossoverRecord rec;
    rec.parent1 = c.at("parent1").get<IndividualId>();
    rec.parent2 = c.at("parent2").get<IndividualId>();
    rec.diff = c.at("diff").get<double>();
    rec.draws = c.at("draws").get<int>();
    rec.any_exceeded = c.at("any_exceeded").get<bool>();
    rec.crossed = c.at("crossed").get<bool>();
    rec.points = c.at("points").get<std::vector<int>>();
    r.crossovers.push_back(std::move(rec));
  }
  r.evaluation.dispatched = doc.at("evaluation").at("dispatched").get<std::size_t>();
  r.evaluation.cache_hits = doc.at("evaluation").at("cache_hits").get<std::size_t>();
  r.best_id = doc.at("best").at("id").get<IndividualId>();
  r.best_fitness = doc.at("best").at("fitness").get<double>();
  r.next_id = doc.at("next_id").get<IndividualId>();
  r.next_request_id = doc.at("next_request_id").get<std::uint64_t>();
  if (r.origins.size() != r.population.size()) {
    throw RunLogError("generation " + std::to_string(r.generation) +
                      ": origins do not match population");
  }
  for (const auto& ind : r.population) {
    if (!ind.fitness) throw RunLogError("logged population contains an unevaluated individual");
  }
  return r;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path)
    : out_(path, std::ios::app), path_(path) {
  if (!out_) throw RunLogError("cannot open run log " + path.string());
}

void RunLogWriter::write(const RunHeader& header) {
  out_ << to_json(header).dump() << '\n';
  out_.flush();
  if (!out_) throw RunLogError("write failed: " + path_.string());
}

void RunLogWriter::write(const GenerationRecord& record) {
  out_ << to_json(record).dump() << '\n';
  out_.flush();
  if (!out_) throw RunLogError("write failed: " + path_.string());
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RunLogError("cannot read run log " + path.string());

  RunLog log;
  bool have_header = false;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(number) + ": ";
    try {
      const auto doc = json::parse(line);
      if (!have_header) {
        log.header = header_from_json(doc);
        have_header = true;
        continue;
      }
      auto record = generation_from_json(doc, log.header.space);
      if (record.generation != static_cast<int>(log.generations.size())) {
        throw RunLogError("generation " + std::to_string(record.generation) + " out of sequence");
      }
      log.generations.push_back(std::move(record));
    } catch (const RunLogError& e) {
      throw RunLogError(where + e.what());
    } catch (const std::exception& e) {
      throw RunLogError(where + "corrupted record: " + e.what());
    }
  }
  if (!have_header) throw RunLogError(path.string() + ": empty run log");
  if (static_cast<int>(log.generations.size()) > log.header.evolution.generations + 1) {
    throw RunLogError(path.string() + ": more generations than configured");
  }
  return log;
}

}  // namespace unetsearch
