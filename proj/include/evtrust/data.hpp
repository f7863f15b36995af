#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "evtrust/mlp.hpp"

namespace evtrust {

using IndexList = std::vector<std::size_t>;

/// Feature matrix with dense labels in [0, num_classes).
struct Dataset {
  Eigen::MatrixXd features;  // samples x dim
  std::vector<int> labels;
  std::optional<std::vector<std::int64_t>> subject_ids;
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }

  /// Column-layout copy of the selected samples, ready for the network.
  LabeledBatch gather(std::span<const std::size_t> indices) const;

  /// Throws InputError on label/feature inconsistencies.
  void validate() const;
};

/// Isotropic Gaussian blobs. Class c is centred at (separation / sqrt 2) * e_c,
/// so every pair of centres sits exactly `separation` apart. Requires dim >= num_classes.
Dataset synth_blobs(int num_classes, int dim, int samples_per_class, double separation,
                    double noise_sigma, std::uint64_t seed);

struct CsvOptions {
  /// Column holding the label, by header name or zero-based position.
  std::variant<std::string, int> label_column = 0;
  std::optional<std::variant<std::string, int>> subject_column;
  bool has_header = true;
};

/// Reads one sample per row. Every column that is not the label or the
/// subject becomes a feature. Labels are remapped to dense ids in sorted order.
Dataset load_csv(const std::string& path, const CsvOptions& options);

/// Same as load_csv on in-memory text.
Dataset parse_csv(const std::string& text, const CsvOptions& options);

/// Global per-feature z-score (population std, floored at 1e-8).
Dataset standardize(const Dataset& dataset);

enum class PartitionMode { kDirichlet, kBySubject, kLabelGroups, kIid };

/// Per-class Dirichlet(concentration) proportions across nodes; the whole
/// draw is repeated with a new sub-seed (up to 100 times) while any node
/// holds fewer than min_per_node samples.
std::vector<IndexList> partition_dirichlet(const Dataset& dataset, std::size_t n_nodes,
                                           double concentration, std::size_t min_per_node,
                                           std::uint64_t seed);

/// Sorted subjects dealt round-robin to nodes.
std::vector<IndexList> partition_by_subject(const Dataset& dataset, std::size_t n_nodes);

/// Node i joins group i mod groups.size(); each group's classes are shuffled
/// and dealt evenly among the group's nodes. Groups must cover every class once.
std::vector<IndexList> partition_label_groups(const Dataset& dataset, std::size_t n_nodes,
                                              const std::vector<std::vector<int>>& groups,
                                              std::uint64_t seed);

/// Uniform random split into near-equal shares.
std::vector<IndexList> partition_iid(const Dataset& dataset, std::size_t n_nodes,
                                     std::uint64_t seed);

struct SplitFractions {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;

  bool operator==(const SplitFractions&) const = default;
};

struct NodeData {
  IndexList train;
  IndexList val;
  IndexList test;
};

/// Seeded shuffle followed by contiguous train/val/test slices.
NodeData split_node(const IndexList& indices, const SplitFractions& fractions,
                    std::uint64_t seed);

/// Number of classes holding at least `min_share` of the given samples.
std::size_t effective_class_count(const Dataset& dataset, const IndexList& indices,
                                  double min_share = 0.05);

/// Per-class fractions of the given samples.
std::vector<double> class_proportions(const Dataset& dataset, const IndexList& indices);

}  // namespace evtrust
