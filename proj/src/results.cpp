#include "evtrust/results.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evtrust/errors.hpp"

namespace evtrust {

using json = nlohmann::json;

namespace {

json report_json(const TrustReport& report) {
  json neighbors = json::array();
  for (const auto& n : report.neighbors) {
    neighbors.push_back({{"id", n.neighbor},
                         {"mean_vacuity", n.mean_vacuity},
                         {"accuracy", n.accuracy},
                         {"raw_trust", n.raw_trust},
                         {"smoothed_trust", n.smoothed_trust},
                         {"accepted", n.accepted},
                         {"weight", n.weight}});
  }
  return {{"node", report.node}, {"threshold", report.threshold}, {"neighbors", neighbors}};
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << body;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::string metrics_record(const RoundMetrics& metrics) {
  json reports = json::array();
  for (const auto& report : metrics.trust_reports) reports.push_back(report_json(report));
  json record = {{"round", metrics.round},
                 {"mean_acc", metrics.mean_accuracy},
                 {"std_acc", metrics.std_accuracy},
                 {"per_node_acc", metrics.per_node_accuracy},
                 {"trust_reports", reports}};
  return record.dump();
}

std::string summary_document(const ExperimentResult& result) {
  json summary = {
      {"config", json::parse(serialize_config(result.config))},
      {"rounds", result.history.size()},
      {"initial_mean_acc", result.initial.mean_accuracy},
      {"final",
       {{"mean_acc", result.summary.mean_accuracy},
        {"std_acc", result.summary.std_accuracy},
        {"rounds_to_peak",
         result.summary.rounds_to_peak ? json(*result.summary.rounds_to_peak) : json(nullptr)}}}};
  return summary.dump(2) + "\n";
}

std::string accuracy_table(const ExperimentResult& result) {
  std::ostringstream out;
  out << "round,mean_acc,std_acc\n";
  for (const auto& m : result.history) {
    // json number formatting: shortest round-trip representation
    out << m.round << ',' << json(m.mean_accuracy).dump() << ',' << json(m.std_accuracy).dump()
        << '\n';
  }
  return out.str();
}

EmittedFiles emit_results(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  EmittedFiles files{out_dir / "metrics.jsonl", out_dir / "summary.json", out_dir / "accuracy.csv"};
  std::string lines;
  for (const auto& m : result.history) lines += metrics_record(m) + "\n";
  write_file(files.metrics, lines);
  write_file(files.summary, summary_document(result));
  write_file(files.accuracy, accuracy_table(result));
  return files;
}

}  // namespace evtrust
