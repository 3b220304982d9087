// percolab: command-line experiment runner.
//
//   percolab run <config|manifest.json> [--seed N] [--workers N] [--out DIR]
//   percolab <kind> --seed N [--key value ...]
//
// Subcommand flags are config keys with '_' spelled '-'.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "percolab/cli/experiments.hpp"

namespace {

std::string dashed(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return key;
}

struct Common {
  std::string seed, workers, out;

  void add(CLI::App* sub, bool seed_required) {
    auto* s = sub->add_option("--seed", seed, "64-bit seed");
    if (seed_required) s->required();
    sub->add_option("--workers", workers, "worker threads (default 1)");
    sub->add_option("--out", out, "output directory (default results)");
  }
  void apply(percolab::cli::Config& cfg) const {
    if (!seed.empty()) cfg.set("seed", seed);
    if (!workers.empty()) cfg.set("workers", workers);
    if (!out.empty()) cfg.set("out", out);
  }
};

int report(const percolab::cli::RunReport& r) {
  std::cout << r.manifest.string() << '\n';
  for (const auto& e : r.body["errors"]) std::cerr << "error: " << e["message"].get<std::string>() << '\n';
  if (r.body["verdicts"].contains("pass") && !r.body["verdicts"]["pass"].get<bool>())
    std::cerr << "oracle comparison failed\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace percolab::cli;
  CLI::App app{"Bond percolation experiments on nonamenable graphs"};
  app.require_subcommand(1);

  std::string config_path;
  Common run_common;
  auto* run = app.add_subcommand("run", "run a config file or re-run a manifest's config");
  run->add_option("config", config_path, "config or manifest.json")->required();
  run_common.add(run, false);

  std::map<std::string, Common> common;
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [kind, fn] : experiment_table()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    common[kind].add(sub, true);
    for (const auto& key : experiment_keys(kind)) sub->add_option("--" + dashed(key), values[kind][key]);
    subs[kind] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) {
      auto cfg = Config::load(config_path);
      run_common.apply(cfg);
      return report(run_experiment(cfg));
    }
    for (const auto& [kind, sub] : subs) {
      if (!sub->parsed()) continue;
      Config cfg("command line");
      cfg.set("kind", kind);
      for (const auto& [key, value] : values[kind])
        if (sub->get_option("--" + dashed(key))->count() > 0) cfg.set(key, value);
      common[kind].apply(cfg);
      return report(run_experiment(cfg));
    }
  } catch (const percolab::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const percolab::AddressError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const percolab::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
