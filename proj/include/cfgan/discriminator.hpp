#pragma once

#include "cfgan/distributions.hpp"
#include "cfgan/linalg.hpp"
#include "cfgan/mlp.hpp"
#include "cfgan/potential.hpp"
#include "cfgan/rmsprop.hpp"

namespace cfgan {

/// ln(1 + e^x) without overflow.
double softplus(double x);
/// 1 / (1 + e^-x).
double logistic(double x);

/// Weighted logistic loss of discriminator outputs on real and generated
/// points. Each real output contributes beta*ln(1+e^-D) + (1-beta)*ln(1+e^D),
/// each generated output the mirrored weighting; both sides are averaged
/// separately and summed. beta = 1 is the plain real-vs-generated loss.
double logistic_pair_loss(const Vector& d_real, const Vector& d_gen, double beta);

struct PairLossGrad {
  double loss = 0.0;
  Vector d_real;  // dLoss/dD at each real output
  Vector d_gen;   // dLoss/dD at each generated output
};

PairLossGrad logistic_pair_loss_grad(const Vector& d_real, const Vector& d_gen, double beta);

struct DiscriminatorConfig {
  double beta = 1.0;
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  Index batch_size = 64;  // b
  int update_freq = 1;    // U

  /// Throws ConfigError unless beta in (0.5,1], b >= 1 and U >= 1.
  void validate() const;
};

struct Discriminator {
  MlpNet net;
  RmspropState<double> optimizer;
};

Discriminator make_discriminator(MlpNet net, const DiscriminatorConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;
};

/// Logistic pair loss of `net` on the two batches and its parameter gradient.
LossAndGrad discriminator_loss(const MlpNet& net, const Matrix& real, const Matrix& gen, double beta);

/// One rmsprop step on the logistic pair loss. Returns the loss before the
/// step.
double discriminator_update(Discriminator& d, const Matrix& real, const Matrix& gen, double beta);

/// The ideal discriminator
///   ln[(beta p* + (1-beta) p) / ((1-beta) p* + beta p)]
/// evaluated in log space; beta = 1 gives ln p* - ln p.
Vector ideal_discriminator(const LogDensity& p_star, const LogDensity& p_gen, double beta, const Matrix& points);
double ideal_discriminator(const LogDensity& p_star, const LogDensity& p_gen, double beta, const Vector& x);

/// Same quantity between two analytic mixtures, with its exact gradient.
AnalyticField ideal_discriminator_field(const GaussianMixture& p_star, const GaussianMixture& p_gen, double beta);

struct EpsilonEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate over x ~ p* of
///   max(1, |grad ln p*(x)|) * (|D - D_beta| + |e^D - e^D_beta|).
/// Requires n_samples >= 1000.
EpsilonEstimate epsilon_measure(const Potential& d, const GaussianMixture& p_star, const LogDensity& p_gen,
                                double beta, Index n_samples, Rng& rng);

}  // namespace cfgan
