#include "evtrust/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "evtrust/errors.hpp"

namespace evtrust {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Text -> json

json yaml_scalar(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted: always a string
  if (text.empty() || text == "~" || text == "null" || text == "Null" || text == "NULL") {
    return nullptr;
  }
  if (text == "true" || text == "True" || text == "TRUE") return true;
  if (text == "false" || text == "False" || text == "FALSE") return false;

  std::string_view view = text;
  if (!view.empty() && view.front() == '+') view.remove_prefix(1);
  const char* begin = view.data();
  const char* end = view.data() + view.size();
  if (view.find_first_of(".eE") == std::string_view::npos) {
    std::int64_t as_int = 0;
    if (auto [ptr, ec] = std::from_chars(begin, end, as_int); ec == std::errc() && ptr == end) {
      return as_int;
    }
    std::uint64_t as_uint = 0;
    if (auto [ptr, ec] = std::from_chars(begin, end, as_uint); ec == std::errc() && ptr == end) {
      return as_uint;
    }
  }
  double as_double = 0.0;
  if (auto [ptr, ec] = std::from_chars(begin, end, as_double); ec == std::errc() && ptr == end) {
    return as_double;
  }
  return text;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return yaml_scalar(node);
    case YAML::NodeType::Sequence: {
      json array = json::array();
      for (const auto& item : node) array.push_back(yaml_to_json(item));
      return array;
    }
    case YAML::NodeType::Map: {
      json object = json::object();
      for (const auto& item : node) {
        const std::string key = item.first.as<std::string>();
        if (object.contains(key)) {
          throw ParseError("line " + std::to_string(item.first.Mark().line + 1) +
                           ": duplicate key '" + key + "'");
        }
        object[key] = yaml_to_json(item.second);
      }
      return object;
    }
  }
  return nullptr;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

json text_to_json(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError("JSON syntax error at line " + std::to_string(line_of_offset(text, e.byte)) +
                       ": " + e.what());
    }
  }
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError("YAML syntax error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("YAML error: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Strict readers

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Section {
 public:
  Section(json node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_.is_null()) node_ = json::object();
    if (!node_.is_object()) throw ValidationError(label() + " must be a mapping");
  }

  bool has(const std::string& key) const {
    return node_.contains(key) && !node_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string key_path(const std::string& key) const { return join(path_, key); }

  double real(const std::string& key, double fallback) {
    if (!has(key)) return mark(key), fallback;
    const json& v = raw(key);
    if (!v.is_number()) throw ValidationError(key_path(key) + " must be a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return mark(key), fallback;
    const json& v = raw(key);
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
        std::abs(v.get<double>()) < 9.0e15) {
      return static_cast<std::int64_t>(v.get<double>());
    }
    throw ValidationError(key_path(key) + " must be an integer");
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return mark(key), fallback;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ValidationError(key_path(key) + " must be a non-negative integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return mark(key), fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ValidationError(key_path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return mark(key), fallback;
    const json& v = raw(key);
    if (!v.is_string()) throw ValidationError(key_path(key) + " must be a string");
    return v.get<std::string>();
  }

  std::string required_text(const std::string& key) {
    if (!has(key)) throw ValidationError(key_path(key) + " is required");
    return text(key, "");
  }

  // Rejects any key that no reader asked for.
  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.contains(item.key())) {
        throw ValidationError("unknown key '" + key_path(item.key()) + "'");
      }
    }
  }

 private:
  std::string label() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  void mark(const std::string& key) { seen_.insert(key); }

  json node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Enum>
Enum parse_enum(const std::string& value, const std::string& key,
                std::initializer_list<std::pair<const char*, Enum>> options) {
  std::string allowed;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  throw ValidationError(key + " must be one of {" + allowed + "}, got '" + value + "'");
}

std::variant<std::string, int> column_ref(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return static_cast<int>(v.get<std::int64_t>());
  throw ValidationError(key + " must be a column name or index");
}

json column_json(const std::variant<std::string, int>& column) {
  return std::visit([](const auto& v) { return json(v); }, column);
}

DatasetConfig read_dataset(const json& node) {
  Section s(node, "dataset");
  DatasetConfig out;
  const std::string kind = s.text("kind", "synthetic");
  out.standardize = s.boolean("standardize", true);
  if (kind == "synthetic") {
    SyntheticDatasetConfig synth;
    synth.num_classes = static_cast<int>(s.integer("num_classes", synth.num_classes));
    synth.dim = static_cast<int>(s.integer("dim", synth.dim));
    synth.samples_per_class = static_cast<int>(s.integer("samples_per_class", synth.samples_per_class));
    synth.separation = s.real("separation", synth.separation);
    synth.noise_sigma = s.real("noise_sigma", synth.noise_sigma);
    out.source = synth;
  } else if (kind == "csv") {
    CsvDatasetConfig csv;
    csv.path = s.required_text("path");
    if (s.has("label_column")) csv.label_column = column_ref(s.raw("label_column"), s.key_path("label_column"));
    if (s.has("subject_column")) {
      csv.subject_column = column_ref(s.raw("subject_column"), s.key_path("subject_column"));
    } else {
      s.boolean("subject_column", false);  // an explicit null is allowed
    }
    csv.header = s.boolean("header", true);
    out.source = csv;
  } else {
    throw ValidationError("dataset.kind must be one of {synthetic, csv}, got '" + kind + "'");
  }
  s.finish();
  return out;
}

PartitionConfig read_partition(const json& node) {
  Section s(node, "partition");
  PartitionConfig out;
  out.mode = parse_enum<PartitionMode>(s.text("mode", "dirichlet"), "partition.mode",
                                       {{"dirichlet", PartitionMode::kDirichlet},
                                        {"by_subject", PartitionMode::kBySubject},
                                        {"label_groups", PartitionMode::kLabelGroups},
                                        {"iid", PartitionMode::kIid}});
  out.concentration = s.real("concentration", out.concentration);
  out.min_per_node = static_cast<int>(s.integer("min_per_node", out.min_per_node));
  if (s.has("groups")) {
    const json& groups = s.raw("groups");
    if (!groups.is_array()) throw ValidationError("partition.groups must be a list of class lists");
    for (const auto& group : groups) {
      if (!group.is_array()) throw ValidationError("partition.groups must be a list of class lists");
      std::vector<int> classes;
      for (const auto& c : group) {
        if (!c.is_number_integer()) throw ValidationError("partition.groups entries must be integers");
        classes.push_back(static_cast<int>(c.get<std::int64_t>()));
      }
      out.groups.push_back(std::move(classes));
    }
  } else {
    s.boolean("groups", false);
  }
  if (s.has("split")) {
    Section split(s.raw("split"), "partition.split");
    out.split.train = split.real("train", out.split.train);
    out.split.val = split.real("val", out.split.val);
    out.split.test = split.real("test", out.split.test);
    split.finish();
  } else {
    s.boolean("split", false);
  }
  s.finish();
  return out;
}

TopologyConfig read_topology(const json& node) {
  Section s(node, "topology");
  TopologyConfig out;
  out.kind = parse_enum<TopologyKind>(s.text("kind", "fully_connected"), "topology.kind",
                                      {{"ring", TopologyKind::kRing},
                                       {"fully_connected", TopologyKind::kFullyConnected},
                                       {"erdos_renyi", TopologyKind::kErdosRenyi},
                                       {"k_regular", TopologyKind::kKRegular}});
  out.nodes = static_cast<int>(s.integer("nodes", out.nodes));
  out.p = s.real("p", out.p);
  out.k = static_cast<int>(s.integer("k", out.k));
  s.finish();
  return out;
}

AggregatorConfig read_aggregator(const json& node) {
  Section s(node, "aggregator");
  AggregatorConfig out;
  out.kind = parse_enum<AggregatorKind>(s.text("kind", "evidential_trust"), "aggregator.kind",
                                        {{"evidential_trust", AggregatorKind::kEvidentialTrust},
                                         {"fedavg", AggregatorKind::kFedAvg},
                                         {"local", AggregatorKind::kLocal}});
  TrustParams& t = out.trust;
  t.accuracy_weight = s.real("accuracy_weight", t.accuracy_weight);
  t.uncertainty_threshold = s.real("uncertainty_threshold", t.uncertainty_threshold);
  t.initial_min_trust = s.real("initial_min_trust", t.initial_min_trust);
  t.tighten_depth = s.real("tighten_depth", t.tighten_depth);
  t.tighten_rate = s.real("tighten_rate", t.tighten_rate);
  t.ema_enabled = s.boolean("ema", t.ema_enabled);
  t.ema_momentum = s.real("ema_momentum", t.ema_momentum);
  t.self_weight = s.real("self_weight", t.self_weight);
  t.max_eval_samples = static_cast<int>(s.integer("max_eval_samples", t.max_eval_samples));
  s.finish();
  return out;
}

ExperimentConfig from_json(const json& root) {
  Section s(root, "");
  ExperimentConfig config;
  for (const char* required : {"dataset", "topology", "aggregator"}) {
    if (!s.has(required)) throw ValidationError(std::string(required) + " section is required");
  }
  config.dataset = read_dataset(s.raw("dataset"));
  config.topology = read_topology(s.raw("topology"));
  config.aggregator = read_aggregator(s.raw("aggregator"));
  config.partition = read_partition(s.has("partition") ? s.raw("partition") : json());
  if (!s.has("partition")) s.boolean("partition", false);

  {
    Section t(s.has("training") ? s.raw("training") : json(), "training");
    if (!s.has("training")) s.boolean("training", false);
    TrainConfig& tc = config.training;
    tc.learning_rate = t.real("learning_rate", tc.learning_rate);
    tc.batch_size = static_cast<int>(t.integer("batch_size", tc.batch_size));
    tc.local_epochs = static_cast<int>(t.integer("local_epochs", tc.local_epochs));
    tc.lambda_max = t.real("lambda_max", tc.lambda_max);
    tc.logit_clamp = t.real("logit_clamp", tc.logit_clamp);
    config.rounds = static_cast<int>(t.integer("rounds", config.rounds));
    t.finish();
  }
  {
    Section m(s.has("model") ? s.raw("model") : json(), "model");
    if (!s.has("model")) s.boolean("model", false);
    if (m.has("hidden")) {
      const json& hidden = m.raw("hidden");
      if (!hidden.is_array()) throw ValidationError("model.hidden must be a list of layer widths");
      config.hidden.clear();
      for (const auto& w : hidden) {
        if (!w.is_number_integer()) throw ValidationError("model.hidden entries must be integers");
        config.hidden.push_back(static_cast<int>(w.get<std::int64_t>()));
      }
    } else {
      m.boolean("hidden", false);
    }
    m.finish();
  }
  config.master_seed = s.unsigned_integer("master_seed", config.master_seed);
  config.output = s.text("output", config.output);
  s.finish();
  validate_config(config);
  return config;
}

// ---------------------------------------------------------------------------
// Config -> json

json to_json(const ExperimentConfig& c) {
  json root;
  json dataset;
  if (const auto* synth = std::get_if<SyntheticDatasetConfig>(&c.dataset.source)) {
    dataset = {{"kind", "synthetic"},
               {"num_classes", synth->num_classes},
               {"dim", synth->dim},
               {"samples_per_class", synth->samples_per_class},
               {"separation", synth->separation},
               {"noise_sigma", synth->noise_sigma}};
  } else {
    const auto& csv = std::get<CsvDatasetConfig>(c.dataset.source);
    dataset = {{"kind", "csv"},
               {"path", csv.path},
               {"label_column", column_json(csv.label_column)},
               {"header", csv.header}};
    dataset["subject_column"] = csv.subject_column ? column_json(*csv.subject_column) : json(nullptr);
  }
  dataset["standardize"] = c.dataset.standardize;
  root["dataset"] = dataset;

  root["partition"] = {{"mode", to_string(c.partition.mode)},
                       {"concentration", c.partition.concentration},
                       {"min_per_node", c.partition.min_per_node},
                       {"groups", c.partition.groups},
                       {"split",
                        {{"train", c.partition.split.train},
                         {"val", c.partition.split.val},
                         {"test", c.partition.split.test}}}};
  root["topology"] = {{"kind", to_string(c.topology.kind)},
                      {"nodes", c.topology.nodes},
                      {"p", c.topology.p},
                      {"k", c.topology.k}};
  const TrustParams& t = c.aggregator.trust;
  root["aggregator"] = {{"kind", to_string(c.aggregator.kind)},
                        {"accuracy_weight", t.accuracy_weight},
                        {"uncertainty_threshold", t.uncertainty_threshold},
                        {"initial_min_trust", t.initial_min_trust},
                        {"tighten_depth", t.tighten_depth},
                        {"tighten_rate", t.tighten_rate},
                        {"ema", t.ema_enabled},
                        {"ema_momentum", t.ema_momentum},
                        {"self_weight", t.self_weight},
                        {"max_eval_samples", t.max_eval_samples}};
  root["training"] = {{"learning_rate", c.training.learning_rate},
                      {"batch_size", c.training.batch_size},
                      {"local_epochs", c.training.local_epochs},
                      {"lambda_max", c.training.lambda_max},
                      {"logit_clamp", c.training.logit_clamp},
                      {"rounds", c.rounds}};
  root["model"] = {{"hidden", c.hidden}};
  root["master_seed"] = c.master_seed;
  root["output"] = c.output;
  return root;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

std::string to_string(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::kDirichlet: return "dirichlet";
    case PartitionMode::kBySubject: return "by_subject";
    case PartitionMode::kLabelGroups: return "label_groups";
    case PartitionMode::kIid: return "iid";
  }
  return "unknown";
}

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kFullyConnected: return "fully_connected";
    case TopologyKind::kErdosRenyi: return "erdos_renyi";
    case TopologyKind::kKRegular: return "k_regular";
  }
  return "unknown";
}

std::string to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kEvidentialTrust: return "evidential_trust";
    case AggregatorKind::kFedAvg: return "fedavg";
    case AggregatorKind::kLocal: return "local";
  }
  return "unknown";
}

void validate_config(const ExperimentConfig& c) {
  if (const auto* synth = std::get_if<SyntheticDatasetConfig>(&c.dataset.source)) {
    require(synth->num_classes >= 2, "dataset.num_classes must be >= 2");
    require(synth->dim >= synth->num_classes, "dataset.dim must be >= dataset.num_classes");
    require(synth->samples_per_class >= 1, "dataset.samples_per_class must be >= 1");
    require(synth->separation > 0.0, "dataset.separation must be > 0");
    require(synth->noise_sigma >= 0.0, "dataset.noise_sigma must be >= 0");
  } else {
    require(!std::get<CsvDatasetConfig>(c.dataset.source).path.empty(), "dataset.path must not be empty");
  }

  const PartitionConfig& p = c.partition;
  if (p.mode == PartitionMode::kDirichlet) {
    require(p.concentration > 0.0 && std::isfinite(p.concentration),
            "partition.concentration must be > 0");
  }
  require(p.min_per_node >= 1, "partition.min_per_node must be >= 1");
  if (p.mode == PartitionMode::kLabelGroups) {
    require(!p.groups.empty(), "partition.groups is required for mode label_groups");
  }
  require(p.split.train > 0.0 && p.split.val > 0.0 && p.split.test > 0.0,
          "partition.split fractions must all be > 0");
  require(std::abs(p.split.train + p.split.val + p.split.test - 1.0) <= 1e-9,
          "partition.split fractions must sum to 1");

  const TopologyConfig& topo = c.topology;
  switch (topo.kind) {
    case TopologyKind::kRing:
      require(topo.nodes >= 3, "topology.nodes must be >= 3 for a ring");
      break;
    case TopologyKind::kFullyConnected:
      require(topo.nodes >= 2, "topology.nodes must be >= 2");
      break;
    case TopologyKind::kErdosRenyi:
      require(topo.nodes >= 2, "topology.nodes must be >= 2");
      require(topo.p > 0.0 && topo.p <= 1.0, "topology.p must be in (0, 1]");
      break;
    case TopologyKind::kKRegular:
      require(topo.k >= 2 && topo.k < topo.nodes, "topology.k must satisfy 2 <= k < nodes");
      require((topo.nodes * topo.k) % 2 == 0, "topology.nodes * topology.k must be even");
      break;
  }

  try {
    c.aggregator.trust.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("aggregator.") + e.what());
  }
  try {
    c.training.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("training.") + e.what());
  }
  require(c.rounds >= 0, "training.rounds must be >= 0");
  for (int width : c.hidden) require(width > 0, "model.hidden widths must be positive");
}

ExperimentConfig parse_config(const std::string& text) { return from_json(text_to_json(text)); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& config) { return to_json(config).dump(2); }

ExperimentConfig override_config(const ExperimentConfig& config, const std::string& dotted_key,
                                 const std::string& value) {
  json root = to_json(config);
  json* node = &root;
  std::stringstream path(dotted_key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  if (parts.empty()) throw ValidationError("empty override key");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object()) {
      throw ValidationError("unknown key '" + dotted_key + "'");
    }
    node = &(*node)[parts[i]];
  }
  if (!node->contains(parts.back())) throw ValidationError("unknown key '" + dotted_key + "'");
  json parsed;
  try {
    parsed = yaml_to_json(YAML::Load(value));
  } catch (const YAML::Exception& e) {
    throw ParseError("cannot read override value '" + value + "': " + e.what());
  }
  (*node)[parts.back()] = parsed;
  return from_json(root);
}

}  // namespace evtrust
