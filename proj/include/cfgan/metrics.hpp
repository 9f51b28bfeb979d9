#pragma once

#include "cfgan/distributions.hpp"
#include "cfgan/generator.hpp"
#include "cfgan/linalg.hpp"
#include "cfgan/mlp.hpp"
#include "cfgan/potential.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cfgan {

/// Axis-aligned midpoint-rule grid in one or two dimensions.
struct Grid {
  std::vector<double> lo;
  std::vector<double> hi;
  double spacing = 0.05;

  static Grid cube(Index dim, double lo, double hi, double spacing);

  Index dim() const { return static_cast<Index>(lo.size()); }
  std::vector<Index> counts() const;
  Index size() const;
  double cell_volume() const;
  /// Cell centres, one per row, first axis varying slowest.
  Matrix points() const;
};

/// Sum of values times cell volume, accumulated in a fixed order.
double grid_integral(const Grid& grid, const Vector& values);

/// Quadrature of p* ln(p*/p) over the grid (nats).
double kl_estimate(const LogDensity& p_star, const LogDensity& p_gen, const Grid& grid);

/// Quadrature of the beta-extended divergence
///   (beta p* + (1-beta) p) ln[(beta p* + (1-beta) p) / ((1-beta) p* + beta p)].
double extended_kl_beta(const LogDensity& p_star, const LogDensity& p_gen, double beta, const Grid& grid);

/// k-nearest-neighbour estimate of KL(P || Q) from samples `real` ~ P and
/// `gen` ~ Q (Wang-Kulkarni-Verdu form). Used above two dimensions and
/// whenever the generated density is not available in closed form.
double knn_kl_estimate(const Matrix& real, const Matrix& gen, int k = 5);

struct PushforwardOptions {
  double fixed_point_tol = 1e-12;
  int max_iterations = 200;
  double jacobian_step = 1e-6;
};

/// Log-density at each row of `points` of the variable obtained by pushing p0
/// through `steps` in order. Each step is inverted by fixed-point iteration and
/// its Jacobian determinant is taken by central differences. Throws
/// StepTooLargeError when an inversion does not converge.
Vector pushforward_log_density(const LogDensity& p0, std::span<const GradStep> steps, const Matrix& points,
                               const PushforwardOptions& opts = {});
double pushforward_density(const LogDensity& p0, std::span<const GradStep> steps, const Vector& x,
                           const PushforwardOptions& opts = {});
LogDensity make_pushforward(LogDensity p0, std::vector<GradStep> steps, PushforwardOptions opts = {});

/// Largest |g(x)| and largest spectral norm of the Jacobian of g over `points`,
/// where g = s * grad D (the step direction without eta).
struct StepBounds {
  double g_bound = 0.0;
  double jacobian_bound = 0.0;
};
StepBounds estimate_step_bounds(const GradStep& step, const Matrix& points);

struct DescentCheckConfig {
  std::vector<double> eta_sweep{1e-3, 3e-3, 1e-2, 3e-2};
  double g_bound = 0.0;         // a
  double jacobian_bound = 0.0;  // b
  double h0 = std::numeric_limits<double>::infinity();
  double epsilon_budget = 0.0;

  /// Throws ConfigError unless every eta < min(1/b, h0/a).
  void validate() const;
};

struct DescentEntry {
  double eta = 0.0;
  double delta_l = 0.0;      // L(p') - L(p)
  double first_order = 0.0;  // -eta * int p* u s |grad D|^2
  double residual = 0.0;     // delta_l - first_order
  std::string error;         // non-empty when the step could not be inverted

  bool ok() const { return error.empty(); }
};

struct DescentReport {
  std::vector<DescentEntry> entries;
  double residual_slope = 0.0;        // least-squares slope of log|residual| vs log eta
  double residual_coefficient = 0.0;  // max |residual| / eta^2
};

/// Measures the one-step change of the (beta-extended) KL divergence when p0
/// is pushed through x -> x + eta s(x) grad D(x), for every eta in the sweep.
DescentReport descent_check(const GaussianMixture& p_star, const GaussianMixture& p0, const Potential& d,
                            Scaling scaling, double beta, const DescentCheckConfig& cfg, const Grid& grid);

/// |mean D(real) - mean D(gen)|.
double delta_d(const Potential& d, const Matrix& real, const Matrix& gen);

struct ModeScoreReport {
  double score = 1.0;
  Vector class_mass;  // p(y) over the generated sample
  int mode_count = 0;
};

/// exp(E_x KL(p(y|x) || p(y))) from per-sample class probabilities (rows sum
/// to 1). A class counts as a mode when it receives at least `min_mass`.
ModeScoreReport mode_score_from_probs(const Matrix& probs, double min_mass = 0.02);

/// Same, with probabilities from the softmax of a classifier's outputs.
ModeScoreReport mode_score(const MlpNet& classifier, const Matrix& gen_samples, double min_mass = 0.02);

Matrix softmax_rows(const Matrix& logits);

struct ClassifierConfig {
  int epochs = 20;
  Index batch_size = 64;
  double learning_rate = 1e-3;
};

/// Softmax cross-entropy training. Returns training accuracy.
double train_classifier(MlpNet& net, const Matrix& x, const std::vector<int>& labels, const ClassifierConfig& cfg,
                        Rng& rng);

}  // namespace cfgan
