#pragma once

#include <optional>
#include <string>

#include "sharpnerf/cli/config.hpp"

namespace sharpnerf::cli {

struct CommandFlags {
  std::string out = "out";
  bool disable_awp = false;
  bool disable_kernel = false;
  bool baseline_naive = false;
  std::optional<std::size_t> iters;
  std::optional<std::uint64_t> seed;
};

void cmd_synth(const RunConfig& cfg, const CommandFlags& flags);
void cmd_train(const RunConfig& cfg, const CommandFlags& flags);
void cmd_render(const RunConfig& cfg, const CommandFlags& flags);
void cmd_eval(const RunConfig& cfg, const CommandFlags& flags);
void cmd_inspect_kernel(const RunConfig& cfg, const CommandFlags& flags);

// Exit codes: 0 ok, 1 user error, 2 numeric failure, 3 internal invariant.
int run_command(const std::string& command, const RunConfig& cfg, const CommandFlags& flags);

}  // namespace sharpnerf::cli
