#include "adadecay/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adadecay/config.hpp"
#include "adadecay/gradcheck.hpp"
#include "adadecay/harness.hpp"

namespace adadecay {
namespace {

std::string format_value(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("to_chars failed");
  return std::string(buf, ptr);
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string seed_list;
  std::string out_dir;
  std::size_t threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "key=value config file");
  cmd->add_option("--set", opts.overrides, "override one config key, e.g. --set lambda=1e-3");
  cmd->add_option("--seed-list", opts.seed_list, "comma-separated seeds, e.g. 1,2,3");
  cmd->add_option("-o,--out", opts.out_dir, "output directory for reports");
  cmd->add_option("-t,--threads", opts.threads, "max concurrent trials");
}

ExperimentConfig build_config(const CommonOpts& opts, KeyValues& kv) {
  if (!opts.config_path.empty()) kv = parse_config_file(opts.config_path);
  for (const std::string& item : opts.overrides) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--set expects key=value, got '" + item + "'");
    }
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  ExperimentConfig config = config_from_keys(kv);
  if (!opts.seed_list.empty()) config.seeds = parse_seed_list(opts.seed_list);
  if (!kv.count("out_dir")) {
    if (const char* env = std::getenv("ADADECAY_OUT_DIR")) config.out_dir = env;
  }
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  config.validate();
  return config;
}

std::string out_path(const ExperimentConfig& config, const std::string& file) {
  return (std::filesystem::path(config.out_dir) / file).string();
}

void print_policy_summaries(const AggregateReport& report) {
  for (const PolicyResult& p : report.policies) {
    std::printf("%-12s max_accuracy=%.4f trimmed_last_mean=%.4f trials=%zu aborted=%zu\n",
                p.label.c_str(), p.max_accuracy, p.trimmed_last_mean, p.trials.size(),
                p.num_aborted);
  }
}

void write_report(const AggregateReport& report, const ExperimentConfig& config,
                  const std::string& stem) {
  const std::string csv_path = out_path(config, stem + ".csv");
  const std::string json_path = out_path(config, stem + ".json");
  write_text_file(csv_path, report_csv(report));
  write_text_file(json_path, report_json(report));
  std::printf("wrote %s and %s\n", csv_path.c_str(), json_path.c_str());
}

DecayPolicy policy_by_name(const std::string& name, double alpha) {
  if (name == "none") return DecayPolicy::none();
  if (name == "constant") return DecayPolicy::constant();
  if (name == "adadecay") return DecayPolicy::adadecay(alpha);
  if (name == "randomized") return DecayPolicy::randomized(alpha);
  throw std::invalid_argument("unknown policy '" + name +
                              "' (expected none, constant, adadecay, or randomized)");
}

int run_train(const CommonOpts& opts) {
  KeyValues kv;
  const ExperimentConfig config = build_config(opts, kv);
  const AggregateReport report = run_experiment(config, opts.threads);
  print_policy_summaries(report);
  write_report(report, config, "train");
  return 0;
}

int run_compare_cmd(const CommonOpts& opts, const std::string& policies_csv) {
  KeyValues kv;
  const ExperimentConfig config = build_config(opts, kv);
  double alpha = 4.0;
  if (const auto it = kv.find("alpha"); it != kv.end()) {
    alpha = parse_value_list(it->second).at(0);
  }

  std::vector<PolicyChoice> choices;
  std::string token;
  std::istringstream in(policies_csv);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) choices.push_back({token, policy_by_name(token, alpha)});
  }
  if (choices.empty()) throw std::invalid_argument("--policies: no policies given");

  const AggregateReport report = run_compare(config, choices, opts.threads);
  print_policy_summaries(report);
  write_report(report, config, "compare");
  return 0;
}

int run_sweep(const CommonOpts& opts, const std::string& param, const std::string& values_csv) {
  KeyValues kv;
  const ExperimentConfig base = build_config(opts, kv);
  const std::vector<double> values = parse_value_list(values_csv);

  std::vector<AggregateReport> reports;
  for (const double v : values) {
    ExperimentConfig config = base;
    if (param == "lambda") {
      config.lambda = v;
    } else if (param == "alpha") {
      config.policy = DecayPolicy::adadecay(v);
    } else if (param == "dropout") {
      config.sizes.dropout_p = v;
    } else {
      throw std::invalid_argument("--param must be lambda, alpha, or dropout, got '" + param +
                                  "'");
    }
    config.validate();
    const std::string label = param + "=" + format_value(v);
    reports.push_back(run_compare(config, {{label, config.policy}}, opts.threads));
    const PolicyResult& p = reports.back().policies.front();
    std::printf("%-20s max_accuracy=%.4f trimmed_last_mean=%.4f\n", label.c_str(),
                p.max_accuracy, p.trimmed_last_mean);
  }

  // Grid summary: one column per swept value, one row per aggregate metric.
  std::string grid = param;
  for (const double v : values) grid += "," + format_value(v);
  grid += "\nmax_accuracy";
  for (const AggregateReport& r : reports) {
    grid += "," + format_value(r.policies.front().max_accuracy);
  }
  grid += "\ntrimmed_last_mean";
  for (const AggregateReport& r : reports) {
    grid += "," + format_value(r.policies.front().trimmed_last_mean);
  }
  grid += "\n";

  const std::string grid_path = out_path(base, "sweep.csv");
  write_text_file(grid_path, grid);

  std::string all_json = "[\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::string one = report_json(reports[i]);
    if (!one.empty() && one.back() == '\n') one.pop_back();
    all_json += one;
    all_json += (i + 1 < reports.size()) ? ",\n" : "\n";
  }
  all_json += "]\n";
  const std::string json_path = out_path(base, "sweep.json");
  write_text_file(json_path, all_json);
  std::printf("wrote %s and %s\n", grid_path.c_str(), json_path.c_str());
  return 0;
}

int run_gradcheck_cmd(std::size_t samples, std::uint64_t seed) {
  const std::vector<GradCheckReport> reports = run_gradcheck(samples, 1e-5, seed);
  bool ok = true;
  for (const GradCheckReport& r : reports) {
    const bool pass = r.max_rel_err < 1e-4;
    ok = ok && pass;
    std::printf("%-8s checked=%zu max_rel_err=%.3e %s\n", r.model.c_str(), r.checked,
                r.max_rel_err, pass ? "PASS" : "FAIL");
  }
  return ok ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"adaptive per-parameter weight-decay training experiments"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train one configuration and write reports");
  add_common(train, train_opts);

  CommonOpts compare_opts;
  std::string policies_csv = "constant,adadecay";
  CLI::App* compare = app.add_subcommand(
      "compare", "train several decay policies with shared seeds and compare");
  add_common(compare, compare_opts);
  compare->add_option("--policies", policies_csv,
                      "comma-separated policies (none, constant, adadecay, randomized)");

  CommonOpts sweep_opts;
  std::string sweep_param, sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one hyperparameter over a value grid");
  add_common(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "lambda | alpha | dropout")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values, e.g. -1,1,2,4,8")
      ->required();

  std::size_t gc_samples = 200;
  std::uint64_t gc_seed = 1;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check of all models");
  gradcheck->add_option("--samples", gc_samples, "scalar parameters to sample per model");
  gradcheck->add_option("--seed", gc_seed, "seed for the check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return run_train(train_opts);
    if (compare->parsed()) return run_compare_cmd(compare_opts, policies_csv);
    if (sweep->parsed()) return run_sweep(sweep_opts, sweep_param, sweep_values);
    if (gradcheck->parsed()) return run_gradcheck_cmd(gc_samples, gc_seed);
    std::fprintf(stderr, "error: no subcommand given\n");
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace adadecay
