#pragma once

#include "cfgan/discriminator.hpp"
#include "cfgan/distributions.hpp"
#include "cfgan/generator.hpp"
#include "cfgan/linalg.hpp"
#include "cfgan/mlp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace cfgan {

struct TrainConfig {
  int T = 25;               // functional-gradient steps per ICFG call
  Index b = 64;             // mini-batch size
  int U = 1;                // discriminator updates per step
  Index pool_size = 640;    // |S_z|
  double eta = 0.25;        // generator step size
  double beta = 1.0;
  std::uint64_t seed = 1;
  int outer_iterations = 100;  // xICFG outer loops, GAN iterations, or CFG/ICFG steps
  int checkpoint_every = 1;
  bool checkpoint_initial = false;  // also evaluate the untrained generator as iteration 0
  int cfg_d_steps = 2000;      // discriminator budget per CFG iteration
  Scaling scaling = Scaling::kUnit;
  double box = 10.0;           // divergence guard: generated coordinates must stay in [-box, box]
  int plateau_window = 0;      // >0: xICFG stops when mode score has not improved for this many checkpoints

  /// Throws ConfigError on non-positive counts, pool_size < b, or bad beta.
  void validate() const;
};

/// One row of metrics.csv. Metrics that a task cannot provide stay empty.
struct MetricsRecord {
  int outer_iter = 0;
  std::optional<double> kl;
  std::optional<double> l_beta;
  std::optional<double> delta_d;
  std::optional<double> mode_score;
  std::optional<double> epsilon_est;
  double wall_ms = 0.0;
  std::optional<int> mode_count;  // in-memory only
};

/// State handed to the evaluator at every checkpoint.
struct Checkpoint {
  int iteration = 0;
  const Discriminator* d = nullptr;
  std::function<Matrix(const Matrix&)> generate;  // latent batch -> data batch
  const GeneratorStack* stack = nullptr;          // set for CFG / ICFG
};

using Evaluator = std::function<MetricsRecord(const Checkpoint&)>;

/// Throws DivergenceError if any coordinate of `points` leaves [-box, box].
void check_divergence(const Matrix& points, double box, int iteration);

struct CfgResult {
  GeneratorStack stack;
  Discriminator d;
  std::vector<MetricsRecord> metrics;
};

/// Batch composite functional gradient learning. Every iteration refits the
/// discriminator on real vs. currently generated points (cfg_d_steps rmsprop
/// mini-batch steps), then appends one functional-gradient step. Generated
/// points are G_t(z) for the fixed latent set `z_gen`. Runs cfg.outer_iterations
/// iterations.
CfgResult cfg_run(const Matrix& real, GeneratorStack g0, Discriminator d, const Matrix& z_gen,
                  const TrainConfig& cfg, Rng& rng, const Evaluator& eval = {});

/// Incremental CFG: `steps` iterations, each U discriminator mini-batch
/// updates followed by one functional-gradient step whose effect is cached in
/// the pool. Mutates the generator, pool and discriminator. Metrics are
/// produced every cfg.checkpoint_every steps when an evaluator is given;
/// iteration numbers are offset by `iteration_offset`.
std::vector<MetricsRecord> icfg_run(const Matrix& real, InputPool& pool, GeneratorStack& g, Discriminator& d,
                                    const TrainConfig& cfg, int steps, Rng& rng, const Evaluator& eval = {},
                                    int iteration_offset = 0);

/// Scores a batch of generated points; used to detect degradation caused by
/// compression.
using QualityFn = std::function<double(const Matrix&)>;

struct XicfgResult {
  std::vector<MetricsRecord> metrics;
  int outer_iterations_run = 0;
  int degradation_warnings = 0;
  std::size_t max_stack_size = 0;
  bool early_exit = false;
};

/// Approximate ICFG: repeatedly draws a fresh pool from the prior, runs T ICFG
/// steps on top of the approximator, then distills the result back into the
/// approximator. Returns after cfg.outer_iterations loops or on a mode-score
/// plateau.
XicfgResult xicfg_run(const Matrix& real, const Prior& prior, Approximator& approx, Discriminator& d,
                      const TrainConfig& cfg, Rng& rng, const Evaluator& eval = {}, const QualityFn& quality = {});

/// A parametric generator and its optimizer state (GAN baseline).
struct GanGenerator {
  MlpNet net;
  RmspropState<double> optimizer;
};

/// Mean over the batch of ln(1 - sigma(D(G(z)))) (no trick) or
/// -ln sigma(D(G(z))) (logd trick), with its gradient w.r.t. G's parameters.
LossAndGrad generator_objective(const MlpNet& g, const MlpNet& d, const Matrix& z, bool logd_trick);

struct GanResult {
  std::vector<MetricsRecord> metrics;
};

/// Alternating GAN updates: U discriminator steps, then one generator step on
/// generator_objective. Runs cfg.outer_iterations iterations.
GanResult gan_run(const Matrix& real, const Prior& prior, Discriminator& d, GanGenerator& g, const TrainConfig& cfg,
                  bool logd_trick, Rng& rng, const Evaluator& eval = {});

struct EquivalenceReport {
  double s0_discrepancy = 0.0;  // GAN without trick vs. distilling one s0/eta step
  double s1_discrepancy = 0.0;  // GAN with logd trick vs. distilling one s1/eta step
};

/// Compares the GAN generator gradient (summed over the batch) with the
/// gradient of sum 0.5 |G'(z) - G(z)|^2, where G'(z) = G(z) + eta (s(G(z))/eta)
/// grad D(G(z)) is held fixed. Discrepancy is max_k |a_k - b_k| / max_k |a_k|.
EquivalenceReport gan_equivalence_check(const MlpNet& g, const MlpNet& d, const Matrix& z, double eta);

}  // namespace cfgan
