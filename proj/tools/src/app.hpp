#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace mmeval {
class Transport;
}

namespace mmeval::cli {

enum ExitCode : int { kSuccess = 0, kPartialFailure = 1, kConfigError = 2 };

// Test seam: replaces the HTTP transport used by `score`.
struct Hooks {
  std::shared_ptr<Transport> transport;
};

int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks = {});

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err, const Hooks& hooks);
int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace mmeval::cli
