#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "unetsearch/evolution.hpp"
#include "unetsearch/fitness.hpp"
#include "unetsearch/population.hpp"

namespace unetsearch {

inline constexpr const char* kRunLogSchema = "unetsearch.run_log/1";

enum class SelectionOrigin { kInitial, kElite, kTournament, kTopN };

std::string_view to_string(SelectionOrigin origin);

struct RunHeader {
  EvolutionConfig evolution;
  SearchSpaceConfig space;
  std::string evaluator;

  bool operator==(const RunHeader&) const = default;
};

/// Everything that happened in one generation. Generation 0 holds the
/// evaluated initial population and no offspring.
struct GenerationRecord {
  int generation = 0;
  Population population;
  std::vector<SelectionOrigin> origins;
  Population offspring;
  std::vector<CrossoverRecord> crossovers;
  EvaluationSummary evaluation;
  IndividualId best_id = 0;
  double best_fitness = 0.0;
  IndividualId next_id = 0;
  std::uint64_t next_request_id = 1;

  bool operator==(const GenerationRecord&) const = default;
};

/// Append-only record of a search. With the seed it is enough to resume.
struct RunLog {
  RunHeader header;
  std::vector<GenerationRecord> generations;

  bool complete() const {
    return !generations.empty() && generations.back().generation == header.evolution.generations;
  }
  /// Best individual of the latest generation.
  const Individual& best() const;

  bool operator==(const RunLog&) const = default;
};

nlohmann::json to_json(const RunHeader& header);
RunHeader header_from_json(const nlohmann::json& doc, const SearchSpaceConfig& fallback = {});
nlohmann::json to_json(const GenerationRecord& record);
GenerationRecord generation_from_json(const nlohmann::json& doc, const SearchSpaceConfig& space);

/// Writes one JSON document per line and flushes after each.
class RunLogWriter {
 public:
  /// Opens `path` for appending.
  explicit RunLogWriter(const std::filesystem::path& path);

  void write(const RunHeader& header);
  void write(const GenerationRecord& record);

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

/// Throws RunLogError if the file is missing, unparsable or inconsistent.
RunLog read_run_log(const std::filesystem::path& path);

}  // namespace unetsearch
