#include "cfgan/discriminator.hpp"

#include "cfgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfgan {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_non_empty(const Vector& d_real, const Vector& d_gen) {
  if (d_real.size() == 0 || d_gen.size() == 0) throw ConfigError("logistic loss needs non-empty batches");
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

double logistic_pair_loss(const Vector& d_real, const Vector& d_gen, double beta) {
  check_non_empty(d_real, d_gen);
  double real = 0.0;
  for (double d : d_real) real += beta * softplus(-d) + (1.0 - beta) * softplus(d);
  double gen = 0.0;
  for (double d : d_gen) gen += (1.0 - beta) * softplus(-d) + beta * softplus(d);
  return real / static_cast<double>(d_real.size()) + gen / static_cast<double>(d_gen.size());
}

PairLossGrad logistic_pair_loss_grad(const Vector& d_real, const Vector& d_gen, double beta) {
  PairLossGrad out;
  out.loss = logistic_pair_loss(d_real, d_gen, beta);
  const double nr = static_cast<double>(d_real.size());
  const double ng = static_cast<double>(d_gen.size());
  out.d_real = d_real.unaryExpr([&](double d) { return (-beta * logistic(-d) + (1.0 - beta) * logistic(d)) / nr; });
  out.d_gen = d_gen.unaryExpr([&](double d) { return (-(1.0 - beta) * logistic(-d) + beta * logistic(d)) / ng; });
  return out;
}

void DiscriminatorConfig::validate() const {
  if (!(beta > 0.5 && beta <= 1.0)) throw ConfigError("beta must lie in (0.5, 1]");
  if (batch_size < 1) throw ConfigError("mini-batch size b must be at least 1");
  if (update_freq < 1) throw ConfigError("discriminator update frequency U must be at least 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("discriminator learning rate must be non-negative");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("rmsprop decay must lie in (0,1)");
}

Discriminator make_discriminator(MlpNet net, const DiscriminatorConfig& cfg) {
  cfg.validate();
  if (net.output_dim() != 1) throw ConfigError("discriminator must have a scalar output");
  Discriminator d{std::move(net), {}};
  d.optimizer.learning_rate = cfg.learning_rate;
  d.optimizer.decay = cfg.decay;
  d.optimizer.epsilon = cfg.epsilon;
  return d;
}

LossAndGrad discriminator_loss(const MlpNet& net, const Matrix& real, const Matrix& gen, double beta) {
  if (real.cols() != gen.cols()) throw ConfigError("real and generated batches differ in dimension");
  const Vector dr = forward_scalar(net, real);
  const Vector dg = forward_scalar(net, gen);
  const PairLossGrad lg = logistic_pair_loss_grad(dr, dg, beta);
  LossAndGrad out;
  out.loss = lg.loss;
  out.grad = backward_params(net, real, Matrix(lg.d_real)) + backward_params(net, gen, Matrix(lg.d_gen));
  return out;
}

double discriminator_update(Discriminator& d, const Matrix& real, const Matrix& gen, double beta) {
  const LossAndGrad lg = discriminator_loss(d.net, real, gen, beta);
  rmsprop_step(d.net.mutable_params(), lg.grad, d.optimizer);
  return lg.loss;
}

namespace {

struct BetaLogs {
  double log_a;  // ln(beta p* + (1-beta) p)
  double log_b;  // ln((1-beta) p* + beta p)
};

BetaLogs beta_logs(double log_p_star, double log_p_gen, double beta) {
  if (beta == 1.0) return {log_p_star, log_p_gen};
  const double lb = std::log(beta);
  const double l1b = std::log1p(-beta);
  return {log_add_exp(lb + log_p_star, l1b + log_p_gen), log_add_exp(l1b + log_p_star, lb + log_p_gen)};
}

}  // namespace

Vector ideal_discriminator(const LogDensity& p_star, const LogDensity& p_gen, double beta, const Matrix& points) {
  const Vector a = p_star(points);
  const Vector b = p_gen(points);
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    const BetaLogs l = beta_logs(a[i], b[i], beta);
    out[i] = l.log_a - l.log_b;
  }
  return out;
}

double ideal_discriminator(const LogDensity& p_star, const LogDensity& p_gen, double beta, const Vector& x) {
  return ideal_discriminator(p_star, p_gen, beta, Matrix(x.transpose()))[0];
}

AnalyticField ideal_discriminator_field(const GaussianMixture& p_star, const GaussianMixture& p_gen, double beta) {
  if (p_star.dim() != p_gen.dim()) throw ConfigError("densities differ in dimension");
  AnalyticField f;
  f.value = [=](const Vector& x) {
    const BetaLogs l = beta_logs(p_star.log_pdf(x), p_gen.log_pdf(x), beta);
    return l.log_a - l.log_b;
  };
  f.gradient = [=](const Vector& x) -> Vector {
    const double a = p_star.log_pdf(x);
    const double b = p_gen.log_pdf(x);
    const Vector ga = p_star.grad_log_pdf(x);
    const Vector gb = p_gen.grad_log_pdf(x);
    if (beta == 1.0) return ga - gb;
    const BetaLogs l = beta_logs(a, b, beta);
    const double wa = std::exp(std::log(beta) + a - l.log_a);
    const double wb = std::exp(std::log1p(-beta) + a - l.log_b);
    return (wa - wb) * ga + (wb - wa) * gb;
  };
  return f;
}

EpsilonEstimate epsilon_measure(const Potential& d, const GaussianMixture& p_star, const LogDensity& p_gen,
                                double beta, Index n_samples, Rng& rng) {
  if (n_samples < 1000) throw ConfigError("epsilon_measure needs at least 1000 samples");
  const Matrix x = mixture_sample(p_star, rng, n_samples);
  const Vector trained = potential_values(d, x);
  const Vector ideal = ideal_discriminator(log_density(p_star), p_gen, beta, x);
  Vector terms(n_samples);
  for (Index i = 0; i < n_samples; ++i) {
    const double weight = std::max(1.0, p_star.grad_log_pdf(x.row(i).transpose()).norm());
    terms[i] = weight * (std::abs(trained[i] - ideal[i]) + std::abs(std::exp(trained[i]) - std::exp(ideal[i])));
  }
  EpsilonEstimate e;
  e.mean = terms.mean();
  const double var = (terms.array() - e.mean).square().sum() / static_cast<double>(n_samples - 1);
  e.std_error = std::sqrt(var / static_cast<double>(n_samples));
  return e;
}

}  // namespace cfgan
