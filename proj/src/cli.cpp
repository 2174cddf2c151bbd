#include "unetsearch/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "unetsearch/analysis.hpp"
#include "unetsearch/archspace.hpp"
#include "unetsearch/config_json.hpp"
#include "unetsearch/errors.hpp"
#include "unetsearch/ir_json.hpp"
#include "unetsearch/search.hpp"

namespace unetsearch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kConfigSnapshot = "config.json";
constexpr const char* kTopGenomes = "top5.txt";
constexpr std::size_t kTopCount = 5;

SearchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return search_config_from_json(doc);
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw RunLogError("cannot write " + path.string());
}

/// Writes the fittest individuals of the final generation as top5.txt plus
/// one IR document each.
void export_top(const RunLog& log, const fs::path& dir, std::ostream& out) {
  const auto& population = log.generations.back().population;
  std::vector<std::size_t> order(population.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *population[a].fitness > *population[b].fitness;
  });
  order.resize(std::min(order.size(), kTopCount));

  std::ofstream list(dir / kTopGenomes);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& ind = population[order[rank]];
    list << rank + 1 << ' ' << ind.id << ' ' << std::setprecision(17) << *ind.fitness << ' '
         << ind.genotype.to_string() << '\n';
    const auto ir = decode_genotype(ind.genotype, log.header.space);
    write_json(dir / ("rank" + std::to_string(rank + 1) + ".ir.json"), ir_to_json(ir));
  }
  if (!list) throw RunLogError("cannot write " + (dir / kTopGenomes).string());
  out << "exported top " << order.size() << " to " << dir.string() << '\n';
}

SearchOptions search_options(const SearchConfig& config, std::ostream& out) {
  SearchOptions options;
  options.parallelism = config.evaluator.parallelism;
  options.eval_config = config.evaluator.eval_config;
  options.on_generation = [&out](const GenerationRecord& r) {
    out << "generation " << r.generation << " best " << std::fixed << std::setprecision(6)
        << r.best_fitness << " id " << r.best_id << " evaluated " << r.evaluation.dispatched
        << " cached " << r.evaluation.cache_hits << '\n'
        << std::defaultfloat;
  };
  return options;
}

int cmd_search(const std::string& config_path, std::optional<std::uint64_t> seed,
               const std::string& out_dir, const std::string& evaluator_flag,
               const std::string& strategy_flag, std::ostream& out) {
  SearchConfig config = config_path.empty() ? SearchConfig{} : load_config(config_path);
  if (seed) config.evolution.seed = *seed;
  if (!evaluator_flag.empty()) config.evaluator.apply_flag(evaluator_flag);
  if (!strategy_flag.empty()) config.evolution.strategy = parse_selection_strategy(strategy_flag);
  config.validate();

  SearchOptions options = search_options(config, out);
  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    if (fs::exists(dir / kRunLogFile)) {
      throw RunLogError(dir.string() + " already holds a run; use resume");
    }
    fs::create_directories(dir);
    write_json(dir / kConfigSnapshot, to_json(config));
    options.run_dir = dir;
  }

  auto evaluator = make_evaluator(config.evaluator, config.space);
  const RunLog log = evolve(config.evolution, config.space, *evaluator, options);
  out << "best " << std::setprecision(17) << log.best().fitness.value() << ' '
      << log.best().genotype.to_string() << '\n';
  if (options.run_dir) export_top(log, *options.run_dir, out);
  return kExitOk;
}

int cmd_resume(const std::string& run_dir, std::ostream& out) {
  const fs::path dir(run_dir);
  const SearchConfig config = load_config((dir / kConfigSnapshot).string());
  config.validate();
  SearchOptions options = search_options(config, out);
  auto evaluator = make_evaluator(config.evaluator, config.space);
  const RunLog log = resume(dir, *evaluator, options);
  out << "best " << std::setprecision(17) << log.best().fitness.value() << ' '
      << log.best().genotype.to_string() << '\n';
  export_top(log, dir, out);
  return kExitOk;
}

std::string join(const std::vector<int>& values) {
  std::string text;
  for (int v : values) text += (text.empty() ? "" : " ") + std::to_string(v);
  return text.empty() ? "-" : text;
}

int cmd_decode(const std::string& genome, std::ostream& out) {
  const SearchSpaceConfig space;
  const auto genotype = parse_genotype(genome, space);
  const auto ir = decode_genotype(genotype, space);
  for (const auto& block : ir.blocks) {
    const auto& g = block.graph;
    out << block.name << " stage " << block.stage << " op " << g.op_id << " ["
        << g.op().describe() << "]";
    if (g.degenerate()) {
      out << " degenerate: input -> output\n";
      continue;
    }
    out << "\n  nodes: " << join(g.active_nodes) << "\n  edges:";
    if (g.edges.empty()) out << " -";
    for (const auto& e : g.edges) out << ' ' << e.from << "->" << e.to;
    out << "\n  from input: " << join(g.input_targets)
        << "\n  to output: " << join(g.output_sources) << '\n';
  }
  const auto problems = validate(ir);
  if (problems.empty()) {
    out << "validation: ok\n";
    return kExitOk;
  }
  for (const auto& p : problems) out << "validation: " << p << '\n';
  return kExitRuntime;
}

json report_json(const std::string& model, const CostReport& r) {
  auto shape = [](const InputShape& s) {
    return json{{"channels", s.channels}, {"height", s.height}, {"width", s.width}};
  };
  return {{"model", model},
          {"params", r.params},
          {"macs", r.macs},
          {"model_size_bytes", r.model_size_bytes},
          {"input", shape(r.input)},
          {"padded_input", shape(r.padded_input)}};
}

void print_table(const std::string& model, const CostReport& r, std::ostream& out) {
  char row[160];
  std::snprintf(row, sizeof row, "%-12s %12s %12s %12s\n", "Method", "Model Size", "Params",
                "MACs");
  out << row;
  std::snprintf(row, sizeof row, "%-12s %9.1f MB %10.2f M %10.2f B\n", model.c_str(),
                static_cast<double>(r.model_size_bytes) / 1e6,
                static_cast<double>(r.params) / 1e6, static_cast<double>(r.macs) / 1e9);
  out << row;
}

int cmd_analyze(const std::string& genome, int channels, const std::string& input,
                const std::string& baseline, bool table, std::ostream& out) {
  const InputShape shape = parse_input_shape(input);
  CostReport report;
  std::string model;
  if (!baseline.empty()) {
    if (baseline != "unet") throw ConfigError("unknown baseline '" + baseline + "'");
    if (!genome.empty()) throw ConfigError("give either a genome or --baseline, not both");
    auto net = reference_unet();
    net.in_channels = shape.channels;
    report = analyze(net, shape);
    model = "U-Net";
  } else {
    if (genome.empty()) throw ConfigError("analyze needs a genome or --baseline unet");
    if (channels < 1) throw ConfigError("--channels must be >= 1");
    const SearchSpaceConfig space;
    const auto ir = decode_genotype(parse_genotype(genome, space), space);
    report = analyze(ir, channels, shape);
    model = "genome";
  }
  if (table) {
    print_table(model, report, out);
  } else {
    out << report_json(model, report).dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_export(const std::string& genome, const std::string& format, std::ostream& out) {
  if (format != "json") throw ConfigError("unknown export format '" + format + "'");
  const SearchSpaceConfig space;
  out << ir_to_json(decode_genotype(parse_genotype(genome, space), space)).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolutionary search over U-shaped segmentation architectures"};
  app.require_subcommand(1);

  std::string config_path, out_dir, evaluator_flag, strategy_flag;
  std::optional<std::uint64_t> seed;
  auto* search = app.add_subcommand("search", "Run the genetic search");
  search->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  search->add_option("--seed", seed, "RNG seed (overrides the config)");
  search->add_option("--out", out_dir, "Run directory for the log, cache and exports");
  search->add_option("--evaluator", evaluator_flag, "onemax, arch-proxy or external:<cmd>");
  search->add_option("--strategy", strategy_flag, "elitist_plus_tournament, top_n or elitist_1");

  std::string genome;
  auto* decode = app.add_subcommand("decode", "Print the decoded block graphs of a genome");
  decode->add_option("genome", genome, "Genome bitstring")->required();

  int channels = 20;
  std::string input = "3x565x584", baseline;
  bool table = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "Parameter and MAC count");
  analyze_cmd->add_option("genome", genome, "Genome bitstring");
  analyze_cmd->add_option("--channels", channels, "Channel width c")->capture_default_str();
  analyze_cmd->add_option("--input", input, "Input shape CxHxW")->capture_default_str();
  analyze_cmd->add_option("--baseline", baseline, "Reference model instead of a genome: unet");
  analyze_cmd->add_flag("--table", table, "Human-readable table instead of JSON");

  std::string format = "json";
  auto* export_cmd = app.add_subcommand("export", "Write the architecture IR of a genome");
  export_cmd->add_option("genome", genome, "Genome bitstring")->required();
  export_cmd->add_option("--format", format, "Output format")->capture_default_str();

  std::string run_dir;
  auto* resume_cmd = app.add_subcommand("resume", "Continue an interrupted search");
  resume_cmd->add_option("run_dir", run_dir, "Run directory")->required()->check(
      CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*search) return cmd_search(config_path, seed, out_dir, evaluator_flag, strategy_flag, out);
    if (*decode) return cmd_decode(genome, out);
    if (*analyze_cmd) return cmd_analyze(genome, channels, input, baseline, table, out);
    if (*export_cmd) return cmd_export(genome, format, out);
    if (*resume_cmd) return cmd_resume(run_dir, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace unetsearch
