// evtrust: run, sweep and compare decentralized evidential-trust experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evtrust/config.hpp"
#include "evtrust/errors.hpp"
#include "evtrust/orchestrator.hpp"
#include "evtrust/results.hpp"

namespace {

using evtrust::ExperimentConfig;
using evtrust::ExperimentResult;
namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed) {
  ExperimentConfig config = evtrust::load_config(path);
  if (seed) config.master_seed = *seed;
  return config;
}

ExperimentResult execute(const ExperimentConfig& config, unsigned threads, bool verbose) {
  evtrust::RunOptions options;
  options.threads = threads;
  if (verbose) {
    options.on_round = [](const evtrust::RoundMetrics& m) {
      std::fprintf(stderr, "round %3d  mean_acc %.4f  std_acc %.4f\n", m.round, m.mean_accuracy,
                   m.std_accuracy);
    };
  }
  return evtrust::run_experiment(config, options);
}

std::string peak_text(const ExperimentResult& r) {
  return r.summary.rounds_to_peak ? std::to_string(*r.summary.rounds_to_peak) : "-";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized federated learning with evidential trust-aware aggregation"};
  app.require_subcommand(1);

  unsigned threads = 1;
  bool verbose = false;
  app.add_option("--threads", threads, "Worker threads for per-node work (results do not depend on it)")
      ->check(CLI::Range(1u, 1024u));
  app.add_flag("-v,--verbose", verbose, "Print per-round accuracy to stderr");

  // run
  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_out;
  run->add_option("--config", run_config, "Experiment config (YAML or JSON)")->required();
  run->add_option("--seed", run_seed, "Override master_seed");
  run->add_option("--out", run_out, "Override the output directory");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a parameter");
  std::string sweep_config, sweep_param, sweep_values;
  std::optional<std::uint64_t> sweep_seed;
  std::optional<std::string> sweep_out;
  sweep->add_option("--config", sweep_config, "Base experiment config")->required();
  sweep->add_option("--param", sweep_param, "Dotted key, e.g. aggregator.self_weight")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--seed", sweep_seed, "Override master_seed");
  sweep->add_option("--out", sweep_out, "Override the output directory");

  // compare
  auto* compare = app.add_subcommand("compare", "Run two configs and report their differences");
  std::string compare_configs;
  std::optional<std::uint64_t> compare_seed;
  std::optional<std::string> compare_out;
  compare->add_option("--configs", compare_configs, "Two configs: F1,F2")->required();
  compare->add_option("--seed", compare_seed, "Override master_seed in both");
  compare->add_option("--out", compare_out, "Write compare.json and both runs' outputs here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig config = load(run_config, run_seed);
      if (run_out) config.output = *run_out;
      const ExperimentResult result = execute(config, threads, verbose);
      const auto files = evtrust::emit_results(result, config.output);
      std::printf("final mean_acc %.4f  std_acc %.4f  rounds_to_peak %s\n",
                  result.summary.mean_accuracy, result.summary.std_accuracy,
                  peak_text(result).c_str());
      std::printf("wrote %s\n", files.metrics.parent_path().string().c_str());
      return 0;
    }

    if (sweep->parsed()) {
      const ExperimentConfig base = load(sweep_config, sweep_seed);
      const fs::path out_root = sweep_out ? fs::path(*sweep_out) : fs::path(base.output);
      const auto values = split_list(sweep_values);
      if (values.empty()) throw evtrust::ValidationError("--values is empty");

      std::ostringstream table;
      table << sweep_param << ",final_mean_acc,final_std_acc,rounds_to_peak\n";
      std::printf("%-24s %14s %13s %15s\n", sweep_param.c_str(), "final_mean_acc", "final_std_acc",
                  "rounds_to_peak");
      for (const auto& value : values) {
        ExperimentConfig config = evtrust::override_config(base, sweep_param, value);
        config.output = (out_root / (sweep_param + "=" + value)).string();
        const ExperimentResult result = execute(config, threads, verbose);
        evtrust::emit_results(result, config.output);
        std::printf("%-24s %14.4f %13.4f %15s\n", value.c_str(), result.summary.mean_accuracy,
                    result.summary.std_accuracy, peak_text(result).c_str());
        table << value << ',' << nlohmann::json(result.summary.mean_accuracy).dump() << ','
              << nlohmann::json(result.summary.std_accuracy).dump() << ',' << peak_text(result)
              << '\n';
      }
      fs::create_directories(out_root);
      std::ofstream(out_root / "sweep.csv") << table.str();
      return 0;
    }

    if (compare->parsed()) {
      const auto paths = split_list(compare_configs);
      if (paths.size() != 2) throw evtrust::ValidationError("--configs needs exactly two files");
      std::vector<ExperimentResult> results;
      for (std::size_t i = 0; i < 2; ++i) {
        ExperimentConfig config = load(paths[i], compare_seed);
        if (compare_out) config.output = (fs::path(*compare_out) / ("run" + std::to_string(i + 1))).string();
        results.push_back(execute(config, threads, verbose));
        if (compare_out) evtrust::emit_results(results.back(), config.output);
      }
      const auto& a = results[0];
      const auto& b = results[1];
      const double gap = evtrust::degradation(a, b);
      for (std::size_t i = 0; i < 2; ++i) {
        std::printf("%s: aggregator %s  final mean_acc %.4f  std_acc %.4f  rounds_to_peak %s\n",
                    paths[i].c_str(), evtrust::to_string(results[i].config.aggregator.kind).c_str(),
                    results[i].summary.mean_accuracy, results[i].summary.std_accuracy,
                    peak_text(results[i]).c_str());
      }
      std::printf("degradation (first - second): %.2f pp\n", gap);
      nlohmann::json report = {
          {"configs", paths},
          {"final_mean_acc", {a.summary.mean_accuracy, b.summary.mean_accuracy}},
          {"final_std_acc", {a.summary.std_accuracy, b.summary.std_accuracy}},
          {"rounds_to_peak",
           {a.summary.rounds_to_peak.value_or(0), b.summary.rounds_to_peak.value_or(0)}},
          {"degradation_pp", gap},
          {"rounds_to_peak_delta",
           a.summary.rounds_to_peak.value_or(0) - b.summary.rounds_to_peak.value_or(0)}};
      if (a.summary.rounds_to_peak && b.summary.rounds_to_peak) {
        std::printf("rounds_to_peak delta (first - second): %d\n",
                    *a.summary.rounds_to_peak - *b.summary.rounds_to_peak);
      }
      if (compare_out) {
        fs::create_directories(*compare_out);
        std::ofstream(fs::path(*compare_out) / "compare.json") << report.dump(2) << '\n';
      }
      return 0;
    }
  } catch (const evtrust::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
