#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nrmpp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mixture models with repulsive and clustered atom locations"};
  app.require_subcommand(1);
  std::string config_path, out_dir, trace_path;
  long seed = -1;
  int chains = 1;
  bool print_config = false;
  std::vector<std::string> overrides;

  const std::pair<const char*, const char*> commands[] = {
      {"fit", "run the posterior sampler on a dataset"},
      {"prior-analysis", "joint law of K_n and the distinct values on a grid"},
      {"simulate", "draw a dataset from the prior mixture"},
      {"summarize", "recompute summaries from a saved trace"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "key=value override, repeatable");
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
    if (std::string(name) == "fit") sub->add_option("--chains", chains, "independent chains run in parallel");
    if (std::string(name) == "summarize") sub->add_option("--trace", trace_path, "trace.ndjson to summarize");
  }
  app.add_flag_callback("--version", [] {
    std::cout << nrmpp::version_string() << '\n';
    std::exit(0);
  });

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  nrmpp::Config cfg = nrmpp::Config::defaults();
  try {
    if (!config_path.empty()) cfg.load_file(config_path);
    cfg.apply_env();
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (!out_dir.empty()) cfg.set("output.dir", out_dir);
    if (chains == 1 && command == "fit") chains = static_cast<int>(cfg.get_long("chain.chains"));
  } catch (const std::exception& e) {
    std::cerr << "nrmpp: config error: " << e.what() << '\n';
    return 2;
  }
  if (print_config) {
    std::cout << cfg.dump();
    return 0;
  }
  return nrmpp::run(command, cfg, chains, trace_path);
}
