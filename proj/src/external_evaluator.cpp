#include "unetsearch/external_evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <deque>
#include <map>
#include <optional>
#include <thread>

#include "unetsearch/errors.hpp"

extern char** environ;

namespace unetsearch {

namespace {

using Clock = std::chrono::steady_clock;

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

struct ExternalEvaluator::Worker {
  struct InFlight {
    std::size_t index;
    Clock::time_point deadline;
  };

  pid_t pid = -1;
  int in_fd = -1;   // worker's stdin
  int out_fd = -1;  // worker's stdout
  std::string write_buffer;
  std::string read_buffer;
  std::deque<std::size_t> pinned;  // retries that must run on this worker
  std::map<std::uint64_t, InFlight> in_flight;
  std::optional<std::string> fault;

  ~Worker() {
    close_fd(in_fd);
    close_fd(out_fd);
  }

  void flush() {
    while (!write_buffer.empty() && !fault) {
      const auto n = ::write(in_fd, write_buffer.data(), write_buffer.size());
      if (n > 0) {
        write_buffer.erase(0, static_cast<std::size_t>(n));
      } else if (n < 0 && errno == EINTR) {
        continue;
      } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        return;
      } else {
        fault = std::string("write to worker failed: ") + std::strerror(errno);
      }
    }
  }

  /// Appends whatever is readable; returns false on end of stream.
  bool fill() {
    char chunk[65536];
    for (;;) {
      const auto n = ::read(out_fd, chunk, sizeof chunk);
      if (n > 0) {
        read_buffer.append(chunk, static_cast<std::size_t>(n));
      } else if (n == 0) {
        return false;
      } else if (errno == EINTR) {
        continue;
      } else if (errno == EAGAIN || errno == EWOULDBLOCK) {
        return true;
      } else {
        fault = std::string("read from worker failed: ") + std::strerror(errno);
        return true;
      }
    }
  }
};

ExternalEvaluator::ExternalEvaluator(std::string command, ExternalEvaluatorOptions options)
    : command_(std::move(command)), options_(options) {
  if (command_.empty()) throw ConfigError("external evaluator: empty command");
  if (options_.max_in_flight_per_worker < 1) {
    throw ConfigError("external evaluator: max_in_flight_per_worker must be >= 1");
  }
  struct sigaction ignore {};
  ignore.sa_handler = SIG_IGN;
  ::sigaction(SIGPIPE, &ignore, nullptr);
}

ExternalEvaluator::~ExternalEvaluator() { shutdown(); }

std::unique_ptr<ExternalEvaluator::Worker> ExternalEvaluator::spawn() {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw EvaluationError(std::string("pipe: ") + std::strerror(errno));
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw EvaluationError(std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);

  const std::string shell = "/bin/sh";
  std::vector<char*> argv = {const_cast<char*>("sh"), const_cast<char*>("-c"),
                             const_cast<char*>(command_.c_str()), nullptr};
  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, shell.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(to_child[0]);
  ::close(from_child[1]);
  if (rc != 0) {
    ::close(to_child[1]);
    ::close(from_child[0]);
    throw EvaluationError("cannot spawn worker '" + command_ + "': " + std::strerror(rc));
  }

  auto worker = std::make_unique<Worker>();
  worker->pid = pid;
  worker->in_fd = to_child[1];
  worker->out_fd = from_child[0];
  set_nonblocking(worker->in_fd);
  set_nonblocking(worker->out_fd);
  ++workers_spawned_;
  return worker;
}

void ExternalEvaluator::retire(Worker& worker, bool graceful) {
  if (worker.pid < 0) return;
  if (graceful && !worker.fault) {
    worker.write_buffer += shutdown_message().dump() + "\n";
    worker.flush();
    close_fd(worker.in_fd);
    const auto give_up = Clock::now() + options_.shutdown_grace;
    while (Clock::now() < give_up) {
      if (::waitpid(worker.pid, nullptr, WNOHANG) == worker.pid) {
        worker.pid = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }
  if (worker.pid >= 0) {
    ::kill(worker.pid, SIGKILL);
    ::waitpid(worker.pid, nullptr, 0);
    worker.pid = -1;
  }
  close_fd(worker.in_fd);
  close_fd(worker.out_fd);
}

void ExternalEvaluator::shutdown() {
  for (auto& worker : workers_) retire(*worker, true);
  workers_.clear();
}

std::vector<FitnessResponse> ExternalEvaluator::evaluate(std::span<const FitnessRequest> requests,
                                                         int parallelism) {
  const std::size_t n = requests.size();
  std::vector<std::optional<FitnessResponse>> results(n);
  std::vector<int> faults(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) queue.push_back(i);
  std::size_t remaining = n;

  const std::size_t pool_size =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, parallelism)), std::max<std::size_t>(n, 1));
  const auto max_in_flight = static_cast<std::size_t>(options_.max_in_flight_per_worker);

  auto send = [&](Worker& w, std::size_t index) {
    const auto& request = requests[index];
    w.write_buffer += to_json(request).dump() + "\n";
    w.in_flight[request.request_id] = {index, Clock::now() + options_.timeout};
    ++dispatched_;
  };

  auto assign = [&](Worker& w) {
    while (w.in_flight.size() < max_in_flight) {
      std::deque<std::size_t>& source = !w.pinned.empty() ? w.pinned : queue;
      if (source.empty()) break;
      send(w, source.front());
      source.pop_front();
    }
    w.flush();
  };

  while (remaining > 0) {
    for (auto& w : workers_) assign(*w);
    while (!queue.empty() && workers_.size() < pool_size) {
      workers_.push_back(spawn());
      assign(*workers_.back());
    }

    std::vector<pollfd> fds;
    std::vector<std::pair<std::size_t, bool>> owners;  // worker index, is stdin
    auto deadline = Clock::time_point::max();
    for (std::size_t k = 0; k < workers_.size(); ++k) {
      auto& w = *workers_[k];
      if (w.fault) continue;
      fds.push_back({w.out_fd, POLLIN, 0});
      owners.emplace_back(k, false);
      if (!w.write_buffer.empty()) {
        fds.push_back({w.in_fd, POLLOUT, 0});
        owners.emplace_back(k, true);
      }
      for (const auto& [id, f] : w.in_flight) deadline = std::min(deadline, f.deadline);
    }

    int timeout_ms = 1000;
    if (deadline != Clock::time_point::max()) {
      const auto left =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(left + 1, 0, 1000));
    }
    if (!fds.empty() && ::poll(fds.data(), fds.size(), timeout_ms) < 0 && errno != EINTR) {
      throw EvaluationError(std::string("poll: ") + std::strerror(errno));
    }

    for (std::size_t p = 0; p < fds.size(); ++p) {
      auto& w = *workers_[owners[p].first];
      if (w.fault || fds[p].revents == 0) continue;
      if (owners[p].second) {
        if (fds[p].revents & (POLLERR | POLLHUP)) {
          w.fault = "worker closed its input";
        } else {
          w.flush();
        }
        continue;
      }
      const bool open = w.fill();
      std::size_t eol;
      while (!w.fault && (eol = w.read_buffer.find('\n')) != std::string::npos) {
        const std::string line = w.read_buffer.substr(0, eol);
        w.read_buffer.erase(0, eol + 1);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          auto response = parse_response(line);
          const auto it = w.in_flight.find(response.request_id);
          if (it == w.in_flight.end()) {
            w.fault = "response for unknown request_id " + std::to_string(response.request_id);
            break;
          }
          results[it->second.index] = std::move(response);
          --remaining;
          w.in_flight.erase(it);
        } catch (const ProtocolError& e) {
          w.fault = std::string("protocol error: ") + e.what();
        }
      }
      if (!open && !w.fault) w.fault = "worker exited";
    }

    const auto now = Clock::now();
    for (auto& w : workers_) {
      for (const auto& [id, f] : w->in_flight) {
        if (!w->fault && now >= f.deadline) {
          w->fault = "request " + std::to_string(id) + " timed out";
        }
      }
    }

    std::vector<std::unique_ptr<Worker>> replacements;
    for (auto& slot : workers_) {
      if (!slot->fault) continue;
      const std::string reason = *slot->fault;
      std::deque<std::size_t> retry;
      for (const auto& [id, f] : slot->in_flight) {
        if (++faults[f.index] >= 2) {
          results[f.index] = FitnessResponse::failure(id, reason + " (after retry)");
          --remaining;
        } else {
          retry.push_back(f.index);
        }
      }
      retry.insert(retry.end(), slot->pinned.begin(), slot->pinned.end());
      retire(*slot, false);
      slot.reset();
      // Retries go to a fresh worker; an idle worker that died is dropped
      // and respawned only when queued work needs it.
      if (!retry.empty()) {
        replacements.push_back(spawn());
        replacements.back()->pinned = std::move(retry);
      }
    }
    std::erase(workers_, nullptr);
    for (auto& w : replacements) workers_.push_back(std::move(w));
  }

  std::vector<FitnessResponse> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace unetsearch
