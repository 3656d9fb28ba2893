#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adadecay/data.hpp"
#include "adadecay/model.hpp"
#include "adadecay/optim.hpp"

namespace adadecay {

// Where the train/test pair comes from: IDX files on disk (plain or gzip) or
// synthetic Gaussian blob clusters.
struct DatasetSpec {
  enum class Source { Idx, Blobs };
  Source source = Source::Blobs;

  // Idx
  std::string train_images, train_labels, test_images, test_labels;

  // Blobs. Train and test splits share class centers but use disjoint noise
  // draws from one stream seeded by blob_seed.
  std::size_t blob_classes = 10;
  std::size_t blob_train_per_class = 500;
  std::size_t blob_test_per_class = 100;
  std::size_t blob_dim = 64;
  double blob_spread = 0.12;
  std::size_t blob_image_hw = 0;
  std::uint64_t blob_seed = 7;

  // First-n cut applied to the training split after loading (0 = all).
  std::size_t train_subset = 0;

  static DatasetSpec idx(std::string train_images, std::string train_labels,
                         std::string test_images, std::string test_labels);
  static DatasetSpec blobs(std::size_t num_classes, std::size_t train_per_class,
                           std::size_t test_per_class, std::size_t dim, double spread);

  bool operator==(const DatasetSpec&) const = default;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

DatasetPair load_dataset(const DatasetSpec& spec);

struct ExperimentConfig {
  DatasetSpec dataset;
  std::string model = "nn2";
  ModelSizes sizes;
  OptimizerKind optimizer = OptimizerKind::sgd(0.9);
  DecayPolicy policy = DecayPolicy::constant();
  double lambda = 5e-4;
  LrSchedule lr = LrSchedule::sigmoid_anneal(0.1, 0.001);
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  bool coupled_decay = false;
  std::string out_dir = ".";

  // Throws invalid_argument on: lambda < 0 or non-finite, batch_size = 0,
  // epochs = 0, empty seeds, or eta_start * lambda * 2 >= 1 (the shrinkage
  // factor could cross zero for an adaptive theta).
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::vector<double> epoch_accuracy;    // validation accuracy, one per epoch
  std::vector<double> epoch_train_loss;  // mean batch loss, one per epoch
  double wall_seconds = 0.0;
  bool aborted = false;
  std::string abort_reason;  // diagnostic, set only when aborted

  bool operator==(const TrialResult&) const = default;
};

// Aggregates over the completed trials of one policy; aborted trials are kept
// in `trials` for the record but excluded from every aggregate.
struct PolicyResult {
  std::string label;
  DecayPolicy policy;
  std::vector<TrialResult> trials;    // sorted by seed
  std::vector<double> trimmed_curve;  // per-epoch 10%-trimmed mean over trials
  double max_accuracy = 0.0;          // over all epochs and completed trials
  double trimmed_last_mean = 0.0;     // 10%-trimmed mean of last-10%-epoch means
  std::size_t num_aborted = 0;

  bool operator==(const PolicyResult&) const = default;
};

struct AggregateReport {
  ExperimentConfig config;
  std::vector<PolicyResult> policies;

  bool operator==(const AggregateReport&) const = default;
};

// One fully deterministic training run: derived streams init/batch/dropout/
// decay keyed only by the seed, so two policies sharing a seed see identical
// initial weights, batch order, and dropout masks. A non-finite training loss
// aborts the trial with a diagnostic instead of throwing.
TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed,
                      const DatasetPair& data);
TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed);

struct PolicyChoice {
  std::string label;
  DecayPolicy policy;
};

// Runs every (policy, seed) pair, up to `threads` trials concurrently, and
// aggregates per policy. Results are independent of the thread count and of
// seed order; `config.policy` is overridden by each choice in turn.
AggregateReport run_compare(const ExperimentConfig& config,
                            const std::vector<PolicyChoice>& choices, std::size_t threads = 1);

// Single-policy convenience wrapper around run_compare.
AggregateReport run_experiment(const ExperimentConfig& config, std::size_t threads = 1);

// CSV: header `policy,epoch,trimmed_mean_accuracy`, one row per (policy,
// epoch), epochs 1-based, doubles in shortest round-trip form. Byte-stable
// for identical reports.
std::string report_csv(const AggregateReport& report);

// Full report — config echo, per-trial curves, aggregates — as pretty JSON.
std::string report_json(const AggregateReport& report);

// Inverse of report_json: parses back to an equal AggregateReport.
AggregateReport report_from_json(const std::string& text);

// Writes text to path, creating parent directories; throws on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace adadecay
