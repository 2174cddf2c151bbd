#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "unetsearch/fitness.hpp"

namespace unetsearch {

struct ExternalEvaluatorOptions {
  /// Per-request limit, measured from when the request is handed to a
  /// worker. The default leaves room for a full 130-epoch training run.
  std::chrono::milliseconds timeout = std::chrono::hours(24);
  /// Requests a single worker may hold at once. Training workers run one
  /// job at a time; larger values let pipelining workers answer out of order.
  int max_in_flight_per_worker = 1;
  /// Grace period for a worker to exit after the shutdown message.
  std::chrono::milliseconds shutdown_grace = std::chrono::seconds(5);
};

/// Evaluator backed by worker processes spawned with `/bin/sh -c command`.
///
/// Each request is one JSON line on the worker's stdin; each response one
/// JSON line on its stdout, matched back by request_id. Up to `parallelism`
/// workers run at once. A worker that crashes, times out or writes a
/// malformed line is killed; its in-flight requests are retried once on a
/// fresh worker and reported as failed on the second fault. A response with
/// status error is final.
///
/// Installs SIG_IGN for SIGPIPE so a dying worker cannot kill the engine.
class ExternalEvaluator : public Evaluator {
 public:
  explicit ExternalEvaluator(std::string command, ExternalEvaluatorOptions options = {});
  ~ExternalEvaluator() override;

  ExternalEvaluator(const ExternalEvaluator&) = delete;
  ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

  std::string identity() const override { return "external:" + command_; }
  std::vector<FitnessResponse> evaluate(std::span<const FitnessRequest> requests,
                                        int parallelism) override;

  /// Request lines written to workers, retries included.
  std::size_t dispatched() const { return dispatched_; }
  std::size_t workers_spawned() const { return workers_spawned_; }

  /// Sends the shutdown message to every worker and reaps them.
  void shutdown();

 private:
  struct Worker;

  std::unique_ptr<Worker> spawn();
  void retire(Worker& worker, bool graceful);

  std::string command_;
  ExternalEvaluatorOptions options_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::size_t dispatched_ = 0;
  std::size_t workers_spawned_ = 0;
};

}  // namespace unetsearch
