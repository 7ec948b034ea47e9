#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vip/common.hpp"
#include "vip/experiment.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::string resume;
};

vip::ExperimentConfig load_config(const CliOptions& opt) {
  vip::ExperimentConfig cfg = vip::ExperimentConfig::load(opt.config_path);
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.seed_set = true;
  }
  if (opt.out) cfg.out_dir = *opt.out;
  if (opt.threads) cfg.train.threads = *opt.threads;
  cfg.validate();
  return cfg;
}

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
  cmd->add_option("--config", opt.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--seed", opt.seed, "override the config seed");
  cmd->add_option("--out", opt.out, "override the output directory");
  cmd->add_option("--threads", opt.threads, "training worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational inverse-problem toolkit"};
  app.require_subcommand(1);

  CliOptions opt;
  CLI::App* synth = app.add_subcommand("synth", "write the ground-truth image set");
  CLI::App* measure = app.add_subcommand("measure", "simulate noisy measurements");
  CLI::App* train = app.add_subcommand("train", "joint generator/posterior training");
  CLI::App* recon = app.add_subcommand("reconstruct", "posterior-mean reconstructions + metrics");
  CLI::App* baseline = app.add_subcommand("baseline", "TV and single-fit decoder baselines");
  CLI::App* select = app.add_subcommand("select", "two-class model selection");
  CLI::App* report = app.add_subcommand("report", "recompute metrics from artifacts");
  CLI::App* run = app.add_subcommand("run", "full pipeline for the configured experiment");
  for (CLI::App* cmd : {synth, measure, train, recon, baseline, select, report, run}) {
    add_common_flags(cmd, opt);
  }
  train->add_option("--resume", opt.resume, "checkpoint file to continue from");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const vip::ExperimentConfig cfg = load_config(opt);
    if (synth->parsed()) {
      vip::stage_synth(cfg);
    } else if (measure->parsed()) {
      vip::stage_measure(cfg);
    } else if (train->parsed()) {
      std::optional<std::filesystem::path> resume;
      if (!opt.resume.empty()) resume = opt.resume;
      vip::stage_train(cfg, resume);
    } else if (recon->parsed()) {
      vip::stage_reconstruct(cfg);
    } else if (baseline->parsed()) {
      vip::stage_baseline(cfg);
    } else if (select->parsed()) {
      vip::stage_select(cfg);
    } else if (report->parsed()) {
      vip::stage_report(cfg);
    } else {
      return vip::run_experiment(cfg);
    }
    return 0;
  } catch (const vip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const vip::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
