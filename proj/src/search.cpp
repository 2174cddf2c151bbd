#include "unetsearch/search.hpp"

#include "unetsearch/errors.hpp"

namespace unetsearch {

namespace {

struct Engine {
  const EvolutionConfig& config;
  const SearchSpaceConfig& space;
  Evaluator& evaluator;
  const SearchOptions& options;
  FitnessCache cache;
  std::optional<RunLogWriter> writer;
  RunLog log;

  Engine(const EvolutionConfig& c, const SearchSpaceConfig& s, Evaluator& e,
         const SearchOptions& o)
      : config(c), space(s), evaluator(e), options(o) {}

  EvaluationContext context(std::uint64_t next_request_id) const {
    EvaluationContext ctx;
    ctx.space = space;
    ctx.eval_config = options.eval_config;
    ctx.parallelism = options.parallelism;
    ctx.next_request_id = next_request_id;
    return ctx;
  }

  /// Logs the record; returns false when the caller should stop.
  bool commit(GenerationRecord record) {
    const auto best = best_index(record.population);
    record.best_id = record.population[best].id;
    record.best_fitness = *record.population[best].fitness;
    if (writer) writer->write(record);
    if (options.on_generation) options.on_generation(record);
    log.generations.push_back(std::move(record));
    return !(options.stop_after && log.generations.back().generation >= *options.stop_after);
  }

  bool initialize() {
    Rng rng(config.seed, 0);
    GenerationRecord record;
    for (int i = 0; i < config.population_size; ++i) {
      Individual ind;
      ind.id = static_cast<IndividualId>(i);
      ind.genotype = random_genotype(rng, space);
      record.population.push_back(std::move(ind));
    }
    auto ctx = context(1);
    record.evaluation = evaluate_population(record.population, evaluator, cache, ctx);
    record.origins.assign(record.population.size(), SelectionOrigin::kInitial);
    record.next_id = static_cast<IndividualId>(config.population_size);
    record.next_request_id = ctx.next_request_id;
    return commit(std::move(record));
  }

  bool step(int generation) {
    const GenerationRecord& previous = log.generations.back();
    Rng rng(config.seed, static_cast<std::uint64_t>(generation));
    IndividualId next_id = previous.next_id;

    GenerationRecord record;
    record.generation = generation;
    const auto n = static_cast<std::size_t>(config.population_size);
    while (record.offspring.size() < n) {
      auto cross = difference_guided_crossover(previous.population, config, rng);
      for (Genotype* child : {&cross.first, &cross.second}) {
        Individual ind;
        ind.id = next_id++;
        ind.genotype = mutate(*child, config, rng);
        ind.born = generation;
        ind.parents = {cross.record.parent1, cross.record.parent2};
        record.offspring.push_back(std::move(ind));
      }
      record.crossovers.push_back(std::move(cross.record));
    }
    record.offspring.resize(n);

    auto ctx = context(previous.next_request_id);
    record.evaluation = evaluate_population(record.offspring, evaluator, cache, ctx);

    record.population = environmental_select(previous.population, record.offspring, config, rng);
    if (config.strategy == SelectionStrategy::kTopN) {
      record.origins.assign(n, SelectionOrigin::kTopN);
    } else {
      const std::size_t elites =
          config.strategy == SelectionStrategy::kElitist1
              ? 1
              : static_cast<std::size_t>(config.elite_size);
      for (std::size_t i = 0; i < n; ++i) {
        record.origins.push_back(i < elites ? SelectionOrigin::kElite
                                            : SelectionOrigin::kTournament);
      }
    }
    record.next_id = next_id;
    record.next_request_id = ctx.next_request_id;
    return commit(std::move(record));
  }

  void run() {
    bool go = log.generations.empty() ? initialize() : true;
    for (int t = static_cast<int>(log.generations.size()); go && t <= config.generations; ++t) {
      go = step(t);
    }
  }
};

void open_run_dir(Engine& engine, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  engine.cache.attach(dir / kCacheFile);
  engine.writer.emplace(dir / kRunLogFile);
}

}  // namespace

RunLog evolve(const EvolutionConfig& config, const SearchSpaceConfig& space,
              Evaluator& evaluator, const SearchOptions& options) {
  space.validate();
  config.validate(space);

  Engine engine(config, space, evaluator, options);
  engine.log.header = {config, space, evaluator.identity()};
  if (options.run_dir) {
    if (std::filesystem::exists(*options.run_dir / kRunLogFile)) {
      throw RunLogError("run directory " + options.run_dir->string() +
                        " already holds a run; use resume");
    }
    open_run_dir(engine, *options.run_dir);
    engine.writer->write(engine.log.header);
  }
  engine.run();
  return std::move(engine.log);
}

RunLog resume(const std::filesystem::path& run_dir, Evaluator& evaluator,
              const SearchOptions& options) {
  RunLog existing = read_run_log(run_dir / kRunLogFile);
  if (existing.header.evaluator != evaluator.identity()) {
    throw RunLogError("run was logged with evaluator '" + existing.header.evaluator +
                      "', not '" + evaluator.identity() + "'");
  }
  if (existing.complete()) return existing;

  const EvolutionConfig config = existing.header.evolution;
  const SearchSpaceConfig space = existing.header.space;
  space.validate();
  config.validate(space);

  SearchOptions opts = options;
  opts.run_dir = run_dir;
  Engine engine(config, space, evaluator, opts);
  open_run_dir(engine, run_dir);
  engine.log = std::move(existing);
  engine.run();
  return std::move(engine.log);
}

}  // namespace unetsearch
