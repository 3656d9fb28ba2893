#include "adadecay/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "adadecay/metrics.hpp"
#include "json.hpp"

namespace adadecay {
namespace {

using ordered_json = nlohmann::ordered_json;

// Shortest decimal form that parses back to the same double; byte-stable
// across runs and thread counts.
std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, ptr);
}

std::string source_name(DatasetSpec::Source s) {
  return s == DatasetSpec::Source::Idx ? "idx" : "blobs";
}

DatasetSpec::Source source_from_name(const std::string& s) {
  if (s == "idx") return DatasetSpec::Source::Idx;
  if (s == "blobs") return DatasetSpec::Source::Blobs;
  throw std::invalid_argument("unknown dataset source: " + s);
}

std::string policy_kind_name(DecayPolicy::Kind k) {
  switch (k) {
    case DecayPolicy::Kind::None: return "none";
    case DecayPolicy::Kind::Constant: return "constant";
    case DecayPolicy::Kind::AdaDecay: return "adadecay";
    case DecayPolicy::Kind::Randomized: return "randomized";
  }
  throw std::logic_error("unreachable");
}

DecayPolicy::Kind policy_kind_from_name(const std::string& s) {
  if (s == "none") return DecayPolicy::Kind::None;
  if (s == "constant") return DecayPolicy::Kind::Constant;
  if (s == "adadecay") return DecayPolicy::Kind::AdaDecay;
  if (s == "randomized") return DecayPolicy::Kind::Randomized;
  throw std::invalid_argument("unknown decay policy: " + s);
}

std::string lr_kind_name(LrSchedule::Kind k) {
  switch (k) {
    case LrSchedule::Kind::Constant: return "constant";
    case LrSchedule::Kind::SigmoidAnneal: return "sigmoid_anneal";
    case LrSchedule::Kind::Exponential: return "exponential";
    case LrSchedule::Kind::Staircase: return "staircase";
  }
  throw std::logic_error("unreachable");
}

LrSchedule::Kind lr_kind_from_name(const std::string& s) {
  if (s == "constant") return LrSchedule::Kind::Constant;
  if (s == "sigmoid_anneal") return LrSchedule::Kind::SigmoidAnneal;
  if (s == "exponential") return LrSchedule::Kind::Exponential;
  if (s == "staircase") return LrSchedule::Kind::Staircase;
  throw std::invalid_argument("unknown lr schedule: " + s);
}

std::string optimizer_kind_name(OptimizerKind::Kind k) {
  switch (k) {
    case OptimizerKind::Kind::Sgd: return "sgd";
    case OptimizerKind::Kind::Rmsprop: return "rmsprop";
    case OptimizerKind::Kind::Adam: return "adam";
  }
  throw std::logic_error("unreachable");
}

OptimizerKind::Kind optimizer_kind_from_name(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Kind::Sgd;
  if (s == "rmsprop") return OptimizerKind::Kind::Rmsprop;
  if (s == "adam") return OptimizerKind::Kind::Adam;
  throw std::invalid_argument("unknown optimizer: " + s);
}

ordered_json dataset_to_json(const DatasetSpec& d) {
  return ordered_json{{"source", source_name(d.source)},
                      {"train_images", d.train_images},
                      {"train_labels", d.train_labels},
                      {"test_images", d.test_images},
                      {"test_labels", d.test_labels},
                      {"blob_classes", d.blob_classes},
                      {"blob_train_per_class", d.blob_train_per_class},
                      {"blob_test_per_class", d.blob_test_per_class},
                      {"blob_dim", d.blob_dim},
                      {"blob_spread", d.blob_spread},
                      {"blob_image_hw", d.blob_image_hw},
                      {"blob_seed", d.blob_seed},
                      {"train_subset", d.train_subset}};
}

DatasetSpec dataset_from_json(const ordered_json& j) {
  DatasetSpec d;
  d.source = source_from_name(j.at("source").get<std::string>());
  d.train_images = j.at("train_images").get<std::string>();
  d.train_labels = j.at("train_labels").get<std::string>();
  d.test_images = j.at("test_images").get<std::string>();
  d.test_labels = j.at("test_labels").get<std::string>();
  d.blob_classes = j.at("blob_classes").get<std::size_t>();
  d.blob_train_per_class = j.at("blob_train_per_class").get<std::size_t>();
  d.blob_test_per_class = j.at("blob_test_per_class").get<std::size_t>();
  d.blob_dim = j.at("blob_dim").get<std::size_t>();
  d.blob_spread = j.at("blob_spread").get<double>();
  d.blob_image_hw = j.at("blob_image_hw").get<std::size_t>();
  d.blob_seed = j.at("blob_seed").get<std::uint64_t>();
  d.train_subset = j.at("train_subset").get<std::size_t>();
  return d;
}

ordered_json policy_to_json(const DecayPolicy& p) {
  return ordered_json{{"kind", policy_kind_name(p.kind)}, {"alpha", p.alpha}};
}

DecayPolicy policy_from_json(const ordered_json& j) {
  DecayPolicy p;
  p.kind = policy_kind_from_name(j.at("kind").get<std::string>());
  p.alpha = j.at("alpha").get<double>();
  return p;
}

ordered_json config_to_json(const ExperimentConfig& c) {
  return ordered_json{
      {"dataset", dataset_to_json(c.dataset)},
      {"model", c.model},
      {"sizes",
       {{"hidden_width", c.sizes.hidden_width},
        {"conv1", c.sizes.conv1},
        {"conv2", c.sizes.conv2},
        {"fc", c.sizes.fc},
        {"dropout_p", c.sizes.dropout_p},
        {"per_tensor_groups", c.sizes.per_tensor_groups}}},
      {"optimizer",
       {{"kind", optimizer_kind_name(c.optimizer.kind)},
        {"momentum", c.optimizer.momentum},
        {"rho", c.optimizer.rho},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps}}},
      {"policy", policy_to_json(c.policy)},
      {"lambda", c.lambda},
      {"lr",
       {{"kind", lr_kind_name(c.lr.kind)},
        {"eta_start", c.lr.eta_start},
        {"eta_end", c.lr.eta_end},
        {"steepness", c.lr.steepness},
        {"rate", c.lr.rate},
        {"period", c.lr.period}}},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"seeds", c.seeds},
      {"coupled_decay", c.coupled_decay},
      {"out_dir", c.out_dir}};
}

ExperimentConfig config_from_json(const ordered_json& j) {
  ExperimentConfig c;
  c.dataset = dataset_from_json(j.at("dataset"));
  c.model = j.at("model").get<std::string>();
  const auto& s = j.at("sizes");
  c.sizes.hidden_width = s.at("hidden_width").get<std::size_t>();
  c.sizes.conv1 = s.at("conv1").get<std::size_t>();
  c.sizes.conv2 = s.at("conv2").get<std::size_t>();
  c.sizes.fc = s.at("fc").get<std::size_t>();
  c.sizes.dropout_p = s.at("dropout_p").get<double>();
  c.sizes.per_tensor_groups = s.at("per_tensor_groups").get<bool>();
  const auto& o = j.at("optimizer");
  c.optimizer.kind = optimizer_kind_from_name(o.at("kind").get<std::string>());
  c.optimizer.momentum = o.at("momentum").get<double>();
  c.optimizer.rho = o.at("rho").get<double>();
  c.optimizer.beta1 = o.at("beta1").get<double>();
  c.optimizer.beta2 = o.at("beta2").get<double>();
  c.optimizer.eps = o.at("eps").get<double>();
  c.policy = policy_from_json(j.at("policy"));
  c.lambda = j.at("lambda").get<double>();
  const auto& lr = j.at("lr");
  c.lr.kind = lr_kind_from_name(lr.at("kind").get<std::string>());
  c.lr.eta_start = lr.at("eta_start").get<double>();
  c.lr.eta_end = lr.at("eta_end").get<double>();
  c.lr.steepness = lr.at("steepness").get<double>();
  c.lr.rate = lr.at("rate").get<double>();
  c.lr.period = lr.at("period").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.coupled_decay = j.at("coupled_decay").get<bool>();
  c.out_dir = j.at("out_dir").get<std::string>();
  return c;
}

ordered_json trial_to_json(const TrialResult& t) {
  return ordered_json{{"seed", t.seed},
                      {"epoch_accuracy", t.epoch_accuracy},
                      {"epoch_train_loss", t.epoch_train_loss},
                      {"wall_seconds", t.wall_seconds},
                      {"aborted", t.aborted},
                      {"abort_reason", t.abort_reason}};
}

TrialResult trial_from_json(const ordered_json& j) {
  TrialResult t;
  t.seed = j.at("seed").get<std::uint64_t>();
  t.epoch_accuracy = j.at("epoch_accuracy").get<std::vector<double>>();
  t.epoch_train_loss = j.at("epoch_train_loss").get<std::vector<double>>();
  t.wall_seconds = j.at("wall_seconds").get<double>();
  t.aborted = j.at("aborted").get<bool>();
  t.abort_reason = j.at("abort_reason").get<std::string>();
  return t;
}

// Aggregates one policy's trials: sort by seed, drop aborted trials from the
// statistics, and take the 10%-trimmed mean across trials per epoch and of
// the per-trial last-10%-epoch means.
PolicyResult aggregate_policy(std::string label, const DecayPolicy& policy,
                              std::vector<TrialResult> trials) {
  PolicyResult out;
  out.label = std::move(label);
  out.policy = policy;
  std::stable_sort(trials.begin(), trials.end(),
                   [](const TrialResult& a, const TrialResult& b) { return a.seed < b.seed; });
  out.trials = std::move(trials);

  std::vector<const TrialResult*> completed;
  for (const TrialResult& t : out.trials) {
    if (t.aborted) {
      ++out.num_aborted;
    } else {
      completed.push_back(&t);
    }
  }
  if (completed.empty()) return out;

  const std::size_t epochs = completed.front()->epoch_accuracy.size();
  out.trimmed_curve.reserve(epochs);
  std::vector<double> column(completed.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = 0; i < completed.size(); ++i) {
      column[i] = completed[i]->epoch_accuracy[e];
    }
    out.trimmed_curve.push_back(trimmed_mean(column, 0.10));
  }

  out.max_accuracy = 0.0;
  std::vector<double> last_means;
  last_means.reserve(completed.size());
  for (const TrialResult* t : completed) {
    for (double a : t->epoch_accuracy) out.max_accuracy = std::max(out.max_accuracy, a);
    last_means.push_back(last_k_epoch_mean(t->epoch_accuracy, 0.1));
  }
  out.trimmed_last_mean = trimmed_mean(last_means, 0.10);
  return out;
}

}  // namespace

DatasetSpec DatasetSpec::idx(std::string train_images, std::string train_labels,
                             std::string test_images, std::string test_labels) {
  DatasetSpec d;
  d.source = Source::Idx;
  d.train_images = std::move(train_images);
  d.train_labels = std::move(train_labels);
  d.test_images = std::move(test_images);
  d.test_labels = std::move(test_labels);
  return d;
}

DatasetSpec DatasetSpec::blobs(std::size_t num_classes, std::size_t train_per_class,
                               std::size_t test_per_class, std::size_t dim, double spread) {
  DatasetSpec d;
  d.source = Source::Blobs;
  d.blob_classes = num_classes;
  d.blob_train_per_class = train_per_class;
  d.blob_test_per_class = test_per_class;
  d.blob_dim = dim;
  d.blob_spread = spread;
  return d;
}

DatasetPair load_dataset(const DatasetSpec& spec) {
  DatasetPair pair;
  if (spec.source == DatasetSpec::Source::Idx) {
    pair.train = load_idx_dataset(spec.train_images, spec.train_labels, "train",
                                  spec.train_subset);
    pair.test = load_idx_dataset(spec.test_images, spec.test_labels, "test", 0);
  } else {
    RngState rng = derive_stream(spec.blob_seed, 0xDA7A);
    pair.train = make_blobs(rng, spec.blob_train_per_class, spec.blob_classes, spec.blob_dim,
                            spec.blob_spread, spec.blob_image_hw);
    pair.train.name = "blobs-train";
    pair.test = make_blobs(rng, spec.blob_test_per_class, spec.blob_classes, spec.blob_dim,
                           spec.blob_spread, spec.blob_image_hw);
    pair.test.name = "blobs-test";
    if (spec.train_subset > 0) pair.train = pair.train.subset(spec.train_subset);
  }
  return pair;
}

void ExperimentConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("config: lambda must be finite and >= 0");
  }
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be >= 1");
  if (epochs == 0) throw std::invalid_argument("config: epochs must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
  if (!(lr.eta_start * lambda * 2.0 < 1.0)) {
    throw std::invalid_argument(
        "config: eta_start * lambda * 2 must stay below 1 to keep the decay "
        "shrinkage positive");
  }
}

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed,
                      const DatasetPair& data) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  TrialResult result;
  result.seed = seed;

  RngState init_rng = derive_stream(seed, 0);
  RngState batch_rng = derive_stream(seed, 1);
  RngState dropout_rng = derive_stream(seed, 2);
  RngState decay_rng = derive_stream(seed, 3);

  Network net = build_model(config.model, data.train.sample_shape(), data.train.num_classes,
                            config.sizes, init_rng);
  net.seed_dropout(dropout_rng);
  Optimizer opt(config.optimizer, config.policy, config.lambda, config.coupled_decay, decay_rng);
  const std::vector<Param*> params = net.params();

  BatchPlan plan(data.train.size(), config.batch_size);
  const std::size_t steps_per_epoch = plan.batches_per_epoch();
  const std::size_t total_steps = config.epochs * steps_per_epoch;
  std::size_t global_step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    net.set_mode(Mode::Train);
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      Batch batch = plan.next_batch(data.train, batch_rng);
      Tensor logits = net.forward(batch.images);
      SoftmaxXentResult sx = softmax_cross_entropy(logits, batch.labels);
      if (!std::isfinite(sx.loss)) {
        result.aborted = true;
        result.abort_reason = "non-finite training loss at epoch " + std::to_string(epoch + 1) +
                              ", step " + std::to_string(b + 1);
        result.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
      }
      net.backward(sx.dlogits);
      opt.step(params, lr_at(config.lr, global_step, total_steps));
      ++global_step;
      loss_sum += sx.loss;
    }
    result.epoch_train_loss.push_back(loss_sum / static_cast<double>(steps_per_epoch));
    net.set_mode(Mode::Eval);
    result.epoch_accuracy.push_back(evaluate_accuracy(net, data.test));
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed) {
  const DatasetPair data = load_dataset(config.dataset);
  return run_trial(config, seed, data);
}

AggregateReport run_compare(const ExperimentConfig& config,
                            const std::vector<PolicyChoice>& choices, std::size_t threads) {
  config.validate();
  if (choices.empty()) throw std::invalid_argument("run_compare: no policies given");

  const DatasetPair data = load_dataset(config.dataset);

  // One slot per (policy, seed); workers claim items off a shared counter and
  // write only their own slot, so the outcome is independent of scheduling.
  struct Item {
    std::size_t policy_idx;
    std::size_t seed_idx;
  };
  std::vector<Item> items;
  items.reserve(choices.size() * config.seeds.size());
  for (std::size_t p = 0; p < choices.size(); ++p) {
    for (std::size_t s = 0; s < config.seeds.size(); ++s) items.push_back({p, s});
  }
  std::vector<std::vector<TrialResult>> slots(
      choices.size(), std::vector<TrialResult>(config.seeds.size()));

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        ExperimentConfig trial_config = config;
        trial_config.policy = choices[items[i].policy_idx].policy;
        slots[items[i].policy_idx][items[i].seed_idx] =
            run_trial(trial_config, config.seeds[items[i].seed_idx], data);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::size_t n_threads = std::max<std::size_t>(1, threads);
  n_threads = std::min(n_threads, items.size());
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  AggregateReport report;
  report.config = config;
  report.policies.reserve(choices.size());
  for (std::size_t p = 0; p < choices.size(); ++p) {
    report.policies.push_back(
        aggregate_policy(choices[p].label, choices[p].policy, std::move(slots[p])));
  }
  return report;
}

AggregateReport run_experiment(const ExperimentConfig& config, std::size_t threads) {
  return run_compare(config, {{policy_name(config.policy), config.policy}}, threads);
}

std::string report_csv(const AggregateReport& report) {
  std::string out = "policy,epoch,trimmed_mean_accuracy\n";
  for (const PolicyResult& p : report.policies) {
    for (std::size_t e = 0; e < p.trimmed_curve.size(); ++e) {
      out += p.label;
      out += ',';
      out += std::to_string(e + 1);
      out += ',';
      out += format_double(p.trimmed_curve[e]);
      out += '\n';
    }
  }
  return out;
}

std::string report_json(const AggregateReport& report) {
  ordered_json policies = ordered_json::array();
  for (const PolicyResult& p : report.policies) {
    ordered_json trials = ordered_json::array();
    for (const TrialResult& t : p.trials) trials.push_back(trial_to_json(t));
    policies.push_back(ordered_json{{"label", p.label},
                                    {"policy", policy_to_json(p.policy)},
                                    {"max_accuracy", p.max_accuracy},
                                    {"trimmed_last_mean", p.trimmed_last_mean},
                                    {"num_aborted", p.num_aborted},
                                    {"trimmed_curve", p.trimmed_curve},
                                    {"trials", std::move(trials)}});
  }
  ordered_json j{{"config", config_to_json(report.config)}, {"policies", std::move(policies)}};
  return j.dump(2) + "\n";
}

AggregateReport report_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  AggregateReport report;
  report.config = config_from_json(j.at("config"));
  for (const auto& pj : j.at("policies")) {
    PolicyResult p;
    p.label = pj.at("label").get<std::string>();
    p.policy = policy_from_json(pj.at("policy"));
    p.max_accuracy = pj.at("max_accuracy").get<double>();
    p.trimmed_last_mean = pj.at("trimmed_last_mean").get<double>();
    p.num_aborted = pj.at("num_aborted").get<std::size_t>();
    p.trimmed_curve = pj.at("trimmed_curve").get<std::vector<double>>();
    for (const auto& tj : pj.at("trials")) p.trials.push_back(trial_from_json(tj));
    report.policies.push_back(std::move(p));
  }
  return report;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) {
      throw std::runtime_error("cannot create directory " + p.parent_path().string() + ": " +
                               ec.message());
    }
  }
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace adadecay
