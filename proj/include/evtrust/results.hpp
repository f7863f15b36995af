#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evtrust/orchestrator.hpp"

namespace evtrust {

/// One metrics.jsonl line (no trailing newline):
/// {"round", "mean_acc", "std_acc", "per_node_acc", "trust_reports"}.
std::string metrics_record(const RoundMetrics& metrics);

/// summary.json body: the config echo plus the final summary.
std::string summary_document(const ExperimentResult& result);

/// accuracy.csv body: header "round,mean_acc,std_acc" then one row per round.
std::string accuracy_table(const ExperimentResult& result);

struct EmittedFiles {
  std::filesystem::path metrics;
  std::filesystem::path summary;
  std::filesystem::path accuracy;
};

/// Writes metrics.jsonl, summary.json and accuracy.csv into out_dir (created
/// if needed). Throws IoError naming the path on failure.
EmittedFiles emit_results(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace evtrust
