#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evtrust/aggregation.hpp"
#include "evtrust/data.hpp"
#include "evtrust/mlp.hpp"

namespace evtrust {

struct SyntheticDatasetConfig {
  int num_classes = 6;
  int dim = 12;
  int samples_per_class = 200;
  double separation = 4.0;
  double noise_sigma = 1.0;

  bool operator==(const SyntheticDatasetConfig&) const = default;
};

struct CsvDatasetConfig {
  std::string path;
  std::variant<std::string, int> label_column = std::string("label");
  std::optional<std::variant<std::string, int>> subject_column;
  bool header = true;

  bool operator==(const CsvDatasetConfig&) const = default;
};

struct DatasetConfig {
  std::variant<SyntheticDatasetConfig, CsvDatasetConfig> source;
  bool standardize = true;

  bool operator==(const DatasetConfig&) const = default;
};

struct PartitionConfig {
  PartitionMode mode = PartitionMode::kDirichlet;
  double concentration = 0.5;
  int min_per_node = 20;
  std::vector<std::vector<int>> groups;  // label_groups mode only
  SplitFractions split;

  bool operator==(const PartitionConfig&) const = default;
};

enum class TopologyKind { kRing, kFullyConnected, kErdosRenyi, kKRegular };

struct TopologyConfig {
  TopologyKind kind = TopologyKind::kFullyConnected;
  int nodes = 8;
  double p = 0.3;  // erdos_renyi
  int k = 4;       // k_regular

  bool operator==(const TopologyConfig&) const = default;
};

enum class AggregatorKind { kEvidentialTrust, kFedAvg, kLocal };

struct AggregatorConfig {
  AggregatorKind kind = AggregatorKind::kEvidentialTrust;
  TrustParams trust;

  bool operator==(const AggregatorConfig&) const = default;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  PartitionConfig partition;
  TopologyConfig topology;
  AggregatorConfig aggregator;
  TrainConfig training;
  int rounds = 30;
  std::vector<int> hidden = {64, 32};
  std::uint64_t master_seed = 0;
  std::string output = "results";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses YAML or JSON (JSON when the first non-blank character is '{').
/// Missing keys take their defaults; unknown keys and out-of-range values
/// raise ValidationError naming the dotted key; malformed text raises
/// ParseError with the line number.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig load_config(const std::string& path);

/// Checks every cross-field constraint; throws ValidationError.
void validate_config(const ExperimentConfig& config);

/// Full config (defaults included) as pretty-printed JSON text.
std::string serialize_config(const ExperimentConfig& config);

/// Returns `config` with one dotted key (e.g. "aggregator.self_weight")
/// replaced by `value`, which is read as a YAML scalar. Re-validates.
ExperimentConfig override_config(const ExperimentConfig& config, const std::string& dotted_key,
                                 const std::string& value);

std::string to_string(PartitionMode mode);
std::string to_string(TopologyKind kind);
std::string to_string(AggregatorKind kind);

}  // namespace evtrust
