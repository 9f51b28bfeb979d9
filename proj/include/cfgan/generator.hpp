#pragma once

#include "cfgan/distributions.hpp"
#include "cfgan/linalg.hpp"
#include "cfgan/mlp.hpp"
#include "cfgan/potential.hpp"
#include "cfgan/rmsprop.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cfgan {

/// Data-dependent step scaling s(x): unit is s = 1; s0 = 1/(1+e^-D) and
/// s1 = 1/(1+e^D) are the factors that appear in the GAN generator gradient
/// without and with the logd trick.
enum class Scaling { kUnit, kS0, kS1 };

double scaling_factor(Scaling s, double d_value);

/// One functional-gradient step x -> x + eta * s(x) * grad D(x). The step owns
/// a frozen copy of the discriminator it follows.
struct GradStep {
  Potential potential;
  double eta = 0.1;
  Scaling scaling = Scaling::kUnit;
};

/// eta * s(x) * grad D(x) for every row.
Matrix step_displacement(const GradStep& step, const Matrix& points);

Vector functional_gradient_step(const GradStep& step, const Vector& x);
Matrix functional_gradient_step(const GradStep& step, const Matrix& points);

/// G_T(z) = f_T(... f_1(base(z))), each f_t a GradStep.
struct GeneratorStack {
  MlpNet base;
  std::vector<GradStep> steps;
};

Matrix generator_apply(const GeneratorStack& g, const Matrix& z);
Vector generator_apply(const GeneratorStack& g, const Vector& z);

/// Finite set of latent draws with cached generator outputs. `x.row(i)` holds
/// G_stamp(z.row(i)).
struct InputPool {
  Matrix z;
  Matrix x;
  std::size_t stamp = 0;
};

/// Builds a pool whose cache reflects every step currently in `g`.
InputPool make_pool(const GeneratorStack& g, Matrix z);

/// Advances all cached outputs through `new_steps`, which must start at step
/// index `first_index` == pool.stamp. Throws InternalError on a gap.
void pool_advance(InputPool& pool, std::span<const GradStep> new_steps, std::size_t first_index);

struct DistillConfig {
  int epoch_cap = 10;
  Index batch_size = 64;
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  double plateau_tol = 1e-6;  // relative improvement below which lr is cut
};

/// Fixed-size network trained to mimic a composed generator.
struct Approximator {
  MlpNet net;
  RmspropState<double> optimizer;
  DistillConfig config;
};

struct DistillReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
  double final_learning_rate = 0.0;
};

/// Mean over rows of 0.5 * |net(z) - target|^2.
double distill_loss(const MlpNet& net, const Matrix& z, const Matrix& targets);

/// At most `epoch_cap` shuffled mini-batch epochs of rmsprop on distill_loss.
/// The learning rate starts at config.learning_rate and is multiplied by 0.1
/// after any epoch whose loss did not improve by plateau_tol (relative).
DistillReport approximator_distill(Approximator& approx, const Matrix& z, const Matrix& targets, Rng& rng);

struct ApproximatorSpec {
  std::vector<Index> hidden{512, 512};
  Activation hidden_act = Activation::kRelu;
  Activation output_act = Activation::kTanh;
  double init_stddev = 0.01;
  Index init_pool = 640;
  DistillConfig distill;
};

struct ApproximatorInit {
  Approximator approx;
  MlpNet g_rand;             // the random projection the approximator was fit to
  double untrained_loss = 0;  // fit loss before distillation
  DistillReport report;
};

/// Creates a random projection G_rand (N(0, 0.01^2) weights) from the prior
/// to data space and distills a freshly initialized approximator onto it.
ApproximatorInit approximator_init(const Prior& prior, Index data_dim, const ApproximatorSpec& spec, Rng& rng);

}  // namespace cfgan
