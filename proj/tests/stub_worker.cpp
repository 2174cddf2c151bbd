// Test double for an external fitness worker. Scores a genome by its
// fraction of ones and speaks the JSON-lines protocol on stdin/stdout.
//
//   --shuffle k          answer buffered requests in reverse order, k at a time
//   --error              answer every request with status error
//   --malformed-once F   first request (while F is absent) gets a garbage line
//   --crash-once F       first request (while F is absent) exits with status 3
//   --hang               never answer
//   --check-ir           reject requests whose arch_ir differs from decode(genome)
//   --log F              append every received genome to F

#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unetsearch/archspace.hpp"
#include "unetsearch/fitness.hpp"
#include "unetsearch/ir_json.hpp"

using nlohmann::json;

namespace {

struct Options {
  int shuffle = 1;
  bool error = false;
  std::string malformed_once;
  std::string crash_once;
  bool hang = false;
  bool check_ir = false;
  std::string log;
};

bool claim_once(const std::string& marker) {
  if (marker.empty() || std::filesystem::exists(marker)) return false;
  std::ofstream(marker) << "1\n";
  return true;
}

void emit(const std::string& line) {
  std::fwrite(line.data(), 1, line.size(), stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

json answer(const json& request, const Options& opt) {
  const auto id = request.at("request_id").get<std::uint64_t>();
  const auto genome = request.at("genome").get<std::string>();
  json response = {{"schema", unetsearch::kFitnessResponseSchema}, {"request_id", id}};
  if (opt.error) {
    response["status"] = "error";
    response["message"] = "stub configured to fail";
    return response;
  }
  if (opt.check_ir) {
    const unetsearch::SearchSpaceConfig space;
    const auto expected =
        unetsearch::decode_genotype(unetsearch::parse_genotype(genome, space), space);
    if (unetsearch::ir_from_json(request.at("arch_ir")) != expected) {
      response["status"] = "error";
      response["message"] = "arch_ir does not match genome";
      return response;
    }
  }
  const auto ones = std::count(genome.begin(), genome.end(), '1');
  response["status"] = "ok";
  response["fitness"] = static_cast<double>(ones) / static_cast<double>(genome.size());
  response["metrics"] = {{"ones", ones}};
  return response;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"stub fitness worker"};
  app.add_option("--shuffle", opt.shuffle)->check(CLI::PositiveNumber);
  app.add_flag("--error", opt.error);
  app.add_option("--malformed-once", opt.malformed_once);
  app.add_option("--crash-once", opt.crash_once);
  app.add_flag("--hang", opt.hang);
  app.add_flag("--check-ir", opt.check_ir);
  app.add_option("--log", opt.log);
  CLI11_PARSE(app, argc, argv);

  std::string pending;
  std::vector<json> held;
  auto flush_held = [&] {
    std::reverse(held.begin(), held.end());
    for (const auto& r : held) emit(r.dump());
    held.clear();
  };

  char buffer[65536];
  for (;;) {
    pollfd pfd{STDIN_FILENO, POLLIN, 0};
    // Answer what is buffered once the requester pauses.
    const int ready = ::poll(&pfd, 1, held.empty() ? -1 : 20);
    if (ready == 0) {
      flush_held();
      continue;
    }
    const ssize_t n = ::read(STDIN_FILENO, buffer, sizeof buffer);
    if (n <= 0) {
      flush_held();
      return 0;
    }
    pending.append(buffer, static_cast<std::size_t>(n));
    std::size_t newline;
    while ((newline = pending.find('\n')) != std::string::npos) {
      const std::string line = pending.substr(0, newline);
      pending.erase(0, newline + 1);
      if (line.empty()) continue;
      const json request = json::parse(line);
      if (request.value("type", "") == "shutdown") {
        flush_held();
        return 0;
      }
      if (!opt.log.empty()) std::ofstream(opt.log, std::ios::app) << request.at("genome").get<std::string>() << '\n';
      if (opt.hang) continue;
      if (claim_once(opt.crash_once)) return 3;
      if (claim_once(opt.malformed_once)) {
        emit("{not json");
        continue;
      }
      held.push_back(answer(request, opt));
      if (static_cast<int>(held.size()) >= opt.shuffle) flush_held();
    }
  }
}
