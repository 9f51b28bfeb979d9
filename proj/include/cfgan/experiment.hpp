#pragma once

#include "cfgan/algorithms.hpp"
#include "cfgan/mlp.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cfgan {

enum class Algorithm { kCfg, kIcfg, kXicfg, kGan0, kGan1 };
enum class Task { kGauss2Gauss, kRing8, kMnistFc };

struct NetSpec {
  std::vector<Index> hidden;
  Activation activation = Activation::kRelu;
  Activation output = Activation::kNone;
  double learning_rate = 1e-3;
  double init_stddev = 0.01;
};

/// Everything a run needs. Parsed from a sectioned key = value file; see
/// docs/config.md for the schema. `to_text` emits the canonical form that is
/// echoed into every run directory.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kXicfg;
  Task task = Task::kRing8;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool record_wall_time = false;

  // [task]
  Index data_dim = 2;  // gauss2gauss only
  double shift = 2.0;  // gauss2gauss source mean
  Index prior_dim = 2;
  Index real_size = 10000;
  double ring_radius = 2.0;
  double ring_stddev = 0.02;
  std::string mnist_images;
  std::string mnist_labels;

  // [train]
  TrainConfig train;

  // [discriminator], [approximator] / [generator], [classifier]
  NetSpec discriminator{{64, 64}, Activation::kTanh, Activation::kNone, 1e-3, 0.01};
  NetSpec approximator{{128, 128}, Activation::kRelu, Activation::kNone, 1e-3, 0.01};
  int distill_epochs = 10;
  NetSpec classifier{{64}, Activation::kRelu, Activation::kNone, 1e-2, 0.1};
  int classifier_epochs = 5;

  // [metrics]
  Index eval_samples = 2000;
  int kl_k = 5;
  double grid_halfwidth = 10.0;
  double grid_spacing = 0.01;
  Index epsilon_samples = 0;  // 0 disables epsilon_est
  int samples_every = 0;      // dump samples every N checkpoints; 0 = final only

  void validate() const;
  std::string to_text() const;
};

std::string to_string(Algorithm a);
std::string to_string(Task t);

/// Parses the text of a config file. `source` names the file in error
/// messages, which carry line numbers and keys.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Sets one key (written as section.key) on a config, as the parser would.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const std::string& where = "<override>");

struct RunOutcome {
  int exit_code = 0;  // 0 ok, 2 divergence-guard abort
  std::vector<MetricsRecord> metrics;
  std::string message;
};

/// Executes one experiment and writes its artifacts (metrics.csv, samples,
/// model file, config echo) into cfg.output_dir.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Names accepted by sweep: eta, T, U, lr.
struct SweepOutcome {
  std::vector<RunOutcome> runs;
  std::string summary_path;
};

SweepOutcome run_sweep(const ExperimentConfig& base, const std::string& parameter, const std::vector<std::string>& values);

std::string metrics_csv(const std::vector<MetricsRecord>& rows, bool with_wall_time);

}  // namespace cfgan
