#include "evtrust/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "evtrust/errors.hpp"
#include "evtrust/seed.hpp"

namespace evtrust {

LabeledBatch Dataset::gather(std::span<const std::size_t> indices) const {
  LabeledBatch batch;
  batch.inputs.resize(features.cols(), static_cast<Eigen::Index>(indices.size()));
  batch.labels.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t row = indices[j];
    if (row >= size()) throw InputError("sample index " + std::to_string(row) + " out of range");
    batch.inputs.col(static_cast<Eigen::Index>(j)) =
        features.row(static_cast<Eigen::Index>(row)).transpose();
    batch.labels.push_back(labels[row]);
  }
  return batch;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw InputError("feature rows and labels differ in count");
  }
  if (subject_ids && subject_ids->size() != labels.size()) {
    throw InputError("subject ids and labels differ in count");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw InputError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(num_classes) + ")");
    }
  }
  if (!features.allFinite()) throw InputError("dataset contains non-finite features");
}

Dataset synth_blobs(int num_classes, int dim, int samples_per_class, double separation,
                    double noise_sigma, std::uint64_t seed) {
  if (num_classes <= 0 || dim <= 0 || samples_per_class <= 0) {
    throw ConfigError("synth_blobs: class count, dim and samples per class must be positive");
  }
  if (dim < num_classes) {
    throw ConfigError("synth_blobs: dim (" + std::to_string(dim) +
                      ") must be at least the class count (" + std::to_string(num_classes) + ")");
  }
  if (!(separation > 0.0)) throw ConfigError("synth_blobs: separation must be > 0");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synth_blobs: noise_sigma must be >= 0");

  const double offset = separation / std::sqrt(2.0);
  const auto total = static_cast<Eigen::Index>(num_classes) * samples_per_class;
  Dataset data;
  data.num_classes = num_classes;
  data.features.resize(total, dim);
  data.labels.reserve(static_cast<std::size_t>(total));

  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::Index row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int s = 0; s < samples_per_class; ++s, ++row) {
      for (int d = 0; d < dim; ++d) {
        const double center = (d == c) ? offset : 0.0;
        data.features(row, d) = center + noise_sigma * noise(rng);
      }
      data.labels.push_back(c);
    }
  }
  return data;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

double parse_real(std::string_view cell, std::size_t line_no, std::size_t column) {
  std::string_view text = cell;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("csv row " + std::to_string(line_no) + ", column " + std::to_string(column) +
                     ": not a number: '" + std::string(cell) + "'");
  }
  return value;
}

std::size_t resolve_column(const std::variant<std::string, int>& column,
                           const std::vector<std::string>& header, std::size_t width,
                           const char* what) {
  if (const int* index = std::get_if<int>(&column)) {
    if (*index < 0 || static_cast<std::size_t>(*index) >= width) {
      throw ParseError(std::string(what) + " column index " + std::to_string(*index) +
                       " outside the " + std::to_string(width) + " columns");
    }
    return static_cast<std::size_t>(*index);
  }
  const auto& name = std::get<std::string>(column);
  if (header.empty()) {
    throw ParseError(std::string(what) + " column '" + name +
                     "' given by name but the file has no header row");
  }
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw ParseError("missing " + std::string(what) + " column '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  std::size_t width = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto cells = split_row(view);
    if (options.has_header && header.empty() && rows.empty()) {
      for (auto cell : cells) header.emplace_back(cell);
      width = header.size();
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError("csv row " + std::to_string(line_no) + ": expected " +
                       std::to_string(width) + " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_real(cells[c], line_no, c);
    rows.push_back(std::move(values));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw ParseError("csv contains no data rows");

  const std::size_t label_col = resolve_column(options.label_column, header, width, "label");
  std::optional<std::size_t> subject_col;
  if (options.subject_column) {
    subject_col = resolve_column(*options.subject_column, header, width, "subject");
    if (*subject_col == label_col) throw ParseError("label and subject columns coincide");
  }

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < width; ++c) {
    if (c != label_col && (!subject_col || c != *subject_col)) feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw ParseError("csv has no feature columns");

  auto integral = [&](double v, std::size_t r, const char* what) {
    if (!std::isfinite(v) || std::floor(v) != v) {
      throw ParseError("csv row " + std::to_string(row_lines[r]) + ": " + what +
                       " must be an integer, got " + std::to_string(v));
    }
    return static_cast<std::int64_t>(v);
  };

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(feature_cols.size()));
  std::vector<std::int64_t> raw_labels(rows.size());
  if (subject_col) data.subject_ids.emplace(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
          rows[r][feature_cols[f]];
    }
    raw_labels[r] = integral(rows[r][label_col], r, "label");
    if (subject_col) (*data.subject_ids)[r] = integral(rows[r][*subject_col], r, "subject id");
  }

  std::set<std::int64_t> distinct(raw_labels.begin(), raw_labels.end());
  std::map<std::int64_t, int> dense;
  for (std::int64_t label : distinct) dense.emplace(label, static_cast<int>(dense.size()));
  data.labels.reserve(rows.size());
  for (std::int64_t label : raw_labels) data.labels.push_back(dense.at(label));
  data.num_classes = static_cast<int>(dense.size());
  return data;
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open csv file '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  try {
    return parse_csv(buffer.str(), options);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Dataset standardize(const Dataset& dataset) {
  if (dataset.size() < 2) throw InputError("standardize needs at least two samples");
  constexpr double kStdFloor = 1e-8;
  Dataset out = dataset;
  const auto n = static_cast<double>(dataset.size());
  for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
    auto column = out.features.col(c);
    const double mean = column.sum() / n;
    column.array() -= mean;
    const double stddev = std::sqrt(column.squaredNorm() / n);
    column /= std::max(stddev, kStdFloor);
  }
  return out;
}

namespace {

std::vector<IndexList> class_buckets(const Dataset& dataset) {
  std::vector<IndexList> buckets(static_cast<std::size_t>(dataset.num_classes));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    buckets[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
  }
  return buckets;
}

void sort_lists(std::vector<IndexList>& lists) {
  for (auto& list : lists) std::sort(list.begin(), list.end());
}

std::vector<double> dirichlet_draw(std::size_t n, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& v : p) {
    v = gamma(rng);
    sum += v;
  }
  if (!(sum > 0.0)) {
    // Every draw underflowed: fall back to the vertex the distribution concentrates on.
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::fill(p.begin(), p.end(), 0.0);
    p[pick(rng)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace

std::vector<IndexList> partition_dirichlet(const Dataset& dataset, std::size_t n_nodes,
                                           double concentration, std::size_t min_per_node,
                                           std::uint64_t seed) {
  if (n_nodes < 2) throw ConfigError("partition_dirichlet needs at least 2 nodes");
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw ConfigError("partition_dirichlet: concentration must be > 0");
  }
  constexpr int kMaxAttempts = 100;
  const auto buckets = class_buckets(dataset);
  std::size_t worst_node = 0;
  std::size_t worst_count = 0;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(seed, seed_tag::kAttempt, static_cast<std::uint64_t>(attempt)));
    std::vector<IndexList> nodes(n_nodes);
    for (const auto& bucket : buckets) {
      IndexList shuffled = bucket;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      const auto proportions = dirichlet_draw(n_nodes, concentration, rng);
      double cumulative = 0.0;
      std::size_t begin = 0;
      for (std::size_t node = 0; node < n_nodes; ++node) {
        cumulative += proportions[node];
        std::size_t end = (node + 1 == n_nodes)
                              ? shuffled.size()
                              : std::min(shuffled.size(), static_cast<std::size_t>(std::floor(
                                                              cumulative * shuffled.size())));
        end = std::max(end, begin);
        nodes[node].insert(nodes[node].end(), shuffled.begin() + static_cast<std::ptrdiff_t>(begin),
                           shuffled.begin() + static_cast<std::ptrdiff_t>(end));
        begin = end;
      }
    }
    const auto smallest = std::min_element(nodes.begin(), nodes.end(),
                                           [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (smallest->size() >= min_per_node) {
      sort_lists(nodes);
      return nodes;
    }
    worst_node = static_cast<std::size_t>(smallest - nodes.begin());
    worst_count = smallest->size();
  }
  throw PartitionError("partition_dirichlet: node " + std::to_string(worst_node) + " received " +
                       std::to_string(worst_count) + " samples (< " +
                       std::to_string(min_per_node) + ") on every one of " +
                       std::to_string(kMaxAttempts) + " draws");
}

std::vector<IndexList> partition_by_subject(const Dataset& dataset, std::size_t n_nodes) {
  if (!dataset.subject_ids) throw ConfigError("partition_by_subject: dataset has no subject ids");
  if (n_nodes == 0) throw ConfigError("partition_by_subject: need at least one node");
  const std::set<std::int64_t> subjects(dataset.subject_ids->begin(), dataset.subject_ids->end());
  if (subjects.size() < n_nodes) {
    throw ConfigError("partition_by_subject: " + std::to_string(subjects.size()) +
                      " subjects cannot cover " + std::to_string(n_nodes) + " nodes");
  }
  std::map<std::int64_t, std::size_t> owner;
  for (std::int64_t subject : subjects) owner.emplace(subject, owner.size() % n_nodes);
  std::vector<IndexList> nodes(n_nodes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    nodes[owner.at((*dataset.subject_ids)[i])].push_back(i);
  }
  return nodes;
}

std::vector<IndexList> partition_label_groups(const Dataset& dataset, std::size_t n_nodes,
                                              const std::vector<std::vector<int>>& groups,
                                              std::uint64_t seed) {
  if (groups.empty()) throw ConfigError("partition_label_groups: no groups given");
  if (n_nodes < groups.size()) {
    throw ConfigError("partition_label_groups: " + std::to_string(groups.size()) +
                      " groups need at least as many nodes");
  }
  std::vector<int> owner(static_cast<std::size_t>(dataset.num_classes), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ConfigError("partition_label_groups: group " + std::to_string(g) + " is empty");
    for (int c : groups[g]) {
      if (c < 0 || c >= dataset.num_classes) {
        throw ConfigError("partition_label_groups: class " + std::to_string(c) + " out of range");
      }
      if (owner[static_cast<std::size_t>(c)] != -1) {
        throw ConfigError("partition_label_groups: class " + std::to_string(c) + " appears twice");
      }
      owner[static_cast<std::size_t>(c)] = static_cast<int>(g);
    }
  }
  for (std::size_t c = 0; c < owner.size(); ++c) {
    if (owner[c] == -1) {
      throw ConfigError("partition_label_groups: class " + std::to_string(c) + " is in no group");
    }
  }

  Rng rng(seed);
  std::vector<IndexList> nodes(n_nodes);
  const auto buckets = class_buckets(dataset);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    IndexList pool;
    for (int c : groups[g]) {
      const auto& bucket = buckets[static_cast<std::size_t>(c)];
      pool.insert(pool.end(), bucket.begin(), bucket.end());
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    IndexList members;
    for (std::size_t node = g; node < n_nodes; node += groups.size()) members.push_back(node);
    for (std::size_t i = 0; i < pool.size(); ++i) nodes[members[i % members.size()]].push_back(pool[i]);
  }
  sort_lists(nodes);
  return nodes;
}

std::vector<IndexList> partition_iid(const Dataset& dataset, std::size_t n_nodes,
                                     std::uint64_t seed) {
  if (n_nodes == 0) throw ConfigError("partition_iid: need at least one node");
  IndexList all(dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<IndexList> nodes(n_nodes);
  for (std::size_t i = 0; i < all.size(); ++i) nodes[i % n_nodes].push_back(all[i]);
  sort_lists(nodes);
  return nodes;
}

NodeData split_node(const IndexList& indices, const SplitFractions& fractions,
                    std::uint64_t seed) {
  if (!(fractions.train > 0.0 && fractions.val > 0.0 && fractions.test > 0.0)) {
    throw SplitError("split fractions must all be positive");
  }
  if (std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw SplitError("split fractions must sum to 1");
  }
  const std::size_t n = indices.size();
  const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(fractions.val * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw SplitError("cannot split " + std::to_string(n) +
                     " samples into non-empty train/val/test parts");
  }
  IndexList shuffled = indices;
  Rng rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  NodeData out;
  const auto b = shuffled.begin();
  out.train.assign(b, b + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(b + static_cast<std::ptrdiff_t>(n_train), b + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(b + static_cast<std::ptrdiff_t>(n_train + n_val), shuffled.end());
  return out;
}

std::vector<double> class_proportions(const Dataset& dataset, const IndexList& indices) {
  std::vector<double> share(static_cast<std::size_t>(dataset.num_classes), 0.0);
  if (indices.empty()) return share;
  for (std::size_t i : indices) share[static_cast<std::size_t>(dataset.labels.at(i))] += 1.0;
  for (auto& s : share) s /= static_cast<double>(indices.size());
  return share;
}

std::size_t effective_class_count(const Dataset& dataset, const IndexList& indices,
                                  double min_share) {
  const auto share = class_proportions(dataset, indices);
  return static_cast<std::size_t>(
      std::count_if(share.begin(), share.end(), [&](double s) { return s > 0.0 && s >= min_share; }));
}

}  // namespace evtrust
