#include <string>

#include "CLI11.hpp"
#include "sharpnerf/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"sharpnerf: sharp radiance fields from blurred captures"};
  app.require_subcommand(1);

  std::string config_path;
  sharpnerf::cli::CommandFlags flags;
  std::uint64_t seed_value = 0;
  std::size_t iters_value = 0;

  std::vector<CLI::App*> subs;
  for (const char* name : {"synth", "train", "render", "eval", "inspect-kernel"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key=value run configuration file");
    sub->add_option("--out", flags.out, "output directory")->capture_default_str();
    auto* seed_opt = sub->add_option("--seed", seed_value, "override the config seed");
    auto* iters_opt = sub->add_option("--iters", iters_value, "steps to run this invocation");
    sub->add_flag("--disable-awp", flags.disable_awp,
                  "train with the rigid kernel only (no per-pixel weights)");
    sub->add_flag("--disable-kernel", flags.disable_kernel, "train the plain two-pass field");
    std::function<void()> finalize = [&, seed_opt, iters_opt] {
      if (seed_opt->count()) flags.seed = seed_value;
      if (iters_opt->count()) flags.iters = iters_value;
    };
    sub->parse_complete_callback(finalize);
    if (std::string(name) == "eval") {
      std::string baseline;
      sub->add_option("--baseline", baseline, "evaluate the 'naive' baseline checkpoint")
          ->check(CLI::IsMember({"naive"}))
          ->each([&flags](const std::string&) { flags.baseline_naive = true; });
    }
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  sharpnerf::cli::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = sharpnerf::cli::parse_config_file(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  return sharpnerf::cli::run_command(command, cfg, flags);
}
