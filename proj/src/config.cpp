#include "adadecay/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace adadecay {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": cannot parse '" + value +
                                "' as a number");
  }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key " + key + ": cannot parse '" + value +
                                "' as a non-negative integer");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key " + key + ": cannot parse '" + value +
                                "' as an unsigned integer");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key " + key + ": cannot parse '" + value +
                              "' as a boolean");
}

const std::string& require(const KeyValues& kv, const std::string& key,
                           const std::string& context) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    throw std::invalid_argument(context + ": missing required key: " + key);
  }
  return it->second;
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    seeds.push_back(parse_u64("seed list", trim(item)));
  }
  if (seeds.empty()) throw std::invalid_argument("seed list: empty");
  return seeds;
}

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> values;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    values.push_back(parse_double("value list", trim(item)));
  }
  if (values.empty()) throw std::invalid_argument("value list: empty");
  return values;
}

ExperimentConfig config_from_keys(const KeyValues& kv) {
  ExperimentConfig c;

  static const std::map<std::string, int> known = {
      {"dataset", 0},       {"train_images", 0},  {"train_labels", 0},
      {"test_images", 0},   {"test_labels", 0},   {"train_subset", 0},
      {"blob_classes", 0},  {"blob_train_per_class", 0}, {"blob_test_per_class", 0},
      {"blob_dim", 0},      {"blob_spread", 0},   {"blob_image_hw", 0},
      {"blob_seed", 0},     {"model", 0},         {"hidden_width", 0},
      {"conv1", 0},         {"conv2", 0},         {"fc", 0},
      {"dropout", 0},       {"per_tensor_groups", 0}, {"optimizer", 0},
      {"momentum", 0},      {"rho", 0},           {"beta1", 0},
      {"beta2", 0},         {"eps", 0},           {"policy", 0},
      {"alpha", 0},         {"lambda", 0},        {"coupled_decay", 0},
      {"lr_schedule", 0},   {"eta_start", 0},     {"eta_end", 0},
      {"lr_steepness", 0},  {"lr_rate", 0},       {"lr_period", 0},
      {"epochs", 0},        {"batch_size", 0},    {"seeds", 0},
      {"out_dir", 0}};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }

  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  // Dataset.
  if (const auto* v = get("dataset")) {
    if (*v == "idx") {
      c.dataset.source = DatasetSpec::Source::Idx;
    } else if (*v == "blobs") {
      c.dataset.source = DatasetSpec::Source::Blobs;
    } else {
      throw std::invalid_argument("config key dataset: expected idx or blobs, got '" + *v + "'");
    }
  }
  if (c.dataset.source == DatasetSpec::Source::Idx) {
    c.dataset.train_images = require(kv, "train_images", "idx dataset");
    c.dataset.train_labels = require(kv, "train_labels", "idx dataset");
    c.dataset.test_images = require(kv, "test_images", "idx dataset");
    c.dataset.test_labels = require(kv, "test_labels", "idx dataset");
  }
  if (const auto* v = get("train_subset")) c.dataset.train_subset = parse_size("train_subset", *v);
  if (const auto* v = get("blob_classes")) c.dataset.blob_classes = parse_size("blob_classes", *v);
  if (const auto* v = get("blob_train_per_class")) {
    c.dataset.blob_train_per_class = parse_size("blob_train_per_class", *v);
  }
  if (const auto* v = get("blob_test_per_class")) {
    c.dataset.blob_test_per_class = parse_size("blob_test_per_class", *v);
  }
  if (const auto* v = get("blob_dim")) c.dataset.blob_dim = parse_size("blob_dim", *v);
  if (const auto* v = get("blob_spread")) c.dataset.blob_spread = parse_double("blob_spread", *v);
  if (const auto* v = get("blob_image_hw")) {
    c.dataset.blob_image_hw = parse_size("blob_image_hw", *v);
  }
  if (const auto* v = get("blob_seed")) c.dataset.blob_seed = parse_u64("blob_seed", *v);

  // Model.
  if (const auto* v = get("model")) c.model = *v;
  if (const auto* v = get("hidden_width")) c.sizes.hidden_width = parse_size("hidden_width", *v);
  if (const auto* v = get("conv1")) c.sizes.conv1 = parse_size("conv1", *v);
  if (const auto* v = get("conv2")) c.sizes.conv2 = parse_size("conv2", *v);
  if (const auto* v = get("fc")) c.sizes.fc = parse_size("fc", *v);
  if (const auto* v = get("dropout")) c.sizes.dropout_p = parse_double("dropout", *v);
  if (const auto* v = get("per_tensor_groups")) {
    c.sizes.per_tensor_groups = parse_bool("per_tensor_groups", *v);
  }

  // Optimizer.
  double momentum = 0.9, rho = 0.95, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (const auto* v = get("momentum")) momentum = parse_double("momentum", *v);
  if (const auto* v = get("rho")) rho = parse_double("rho", *v);
  if (const auto* v = get("beta1")) beta1 = parse_double("beta1", *v);
  if (const auto* v = get("beta2")) beta2 = parse_double("beta2", *v);
  if (const auto* v = get("eps")) eps = parse_double("eps", *v);
  std::string opt_name = "sgd";
  if (const auto* v = get("optimizer")) opt_name = *v;
  if (opt_name == "sgd") {
    c.optimizer = OptimizerKind::sgd(momentum);
  } else if (opt_name == "rmsprop") {
    c.optimizer = OptimizerKind::rmsprop(rho, eps);
  } else if (opt_name == "adam") {
    c.optimizer = OptimizerKind::adam(beta1, beta2, eps);
  } else {
    throw std::invalid_argument("config key optimizer: expected sgd, rmsprop, or adam, got '" +
                                opt_name + "'");
  }

  // Decay policy.
  double alpha = 4.0;
  if (const auto* v = get("alpha")) alpha = parse_double("alpha", *v);
  std::string policy_name = "constant";
  if (const auto* v = get("policy")) policy_name = *v;
  if (policy_name == "none") {
    c.policy = DecayPolicy::none();
  } else if (policy_name == "constant") {
    c.policy = DecayPolicy::constant();
  } else if (policy_name == "adadecay") {
    c.policy = DecayPolicy::adadecay(alpha);
  } else if (policy_name == "randomized") {
    c.policy = DecayPolicy::randomized(alpha);
  } else {
    throw std::invalid_argument(
        "config key policy: expected none, constant, adadecay, or randomized, got '" +
        policy_name + "'");
  }
  if (const auto* v = get("lambda")) c.lambda = parse_double("lambda", *v);
  if (const auto* v = get("coupled_decay")) c.coupled_decay = parse_bool("coupled_decay", *v);

  // Learning-rate schedule.
  double eta_start = 0.1, eta_end = 0.001, steepness = 10.0, rate = 1.0;
  std::size_t period = 1;
  if (const auto* v = get("eta_start")) eta_start = parse_double("eta_start", *v);
  if (const auto* v = get("eta_end")) eta_end = parse_double("eta_end", *v);
  if (const auto* v = get("lr_steepness")) steepness = parse_double("lr_steepness", *v);
  if (const auto* v = get("lr_rate")) rate = parse_double("lr_rate", *v);
  if (const auto* v = get("lr_period")) period = parse_size("lr_period", *v);
  std::string lr_name = "sigmoid_anneal";
  if (const auto* v = get("lr_schedule")) lr_name = *v;
  if (lr_name == "constant") {
    c.lr = LrSchedule::constant(eta_start);
  } else if (lr_name == "sigmoid_anneal") {
    c.lr = LrSchedule::sigmoid_anneal(eta_start, eta_end, steepness);
  } else if (lr_name == "exponential") {
    c.lr = LrSchedule::exponential(eta_start, rate);
  } else if (lr_name == "staircase") {
    c.lr = LrSchedule::staircase(eta_start, rate, period);
  } else {
    throw std::invalid_argument(
        "config key lr_schedule: expected constant, sigmoid_anneal, exponential, or "
        "staircase, got '" +
        lr_name + "'");
  }

  // Run shape.
  if (const auto* v = get("epochs")) c.epochs = parse_size("epochs", *v);
  if (const auto* v = get("batch_size")) c.batch_size = parse_size("batch_size", *v);
  if (const auto* v = get("seeds")) c.seeds = parse_seed_list(*v);
  if (const auto* v = get("out_dir")) c.out_dir = *v;

  c.validate();
  return c;
}

}  // namespace adadecay
