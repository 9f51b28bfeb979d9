#include "cfgan/generator.hpp"

#include "cfgan/discriminator.hpp"
#include "cfgan/errors.hpp"

#include <algorithm>
#include <numeric>

namespace cfgan {

double scaling_factor(Scaling s, double d_value) {
  switch (s) {
    case Scaling::kS0:
      return logistic(d_value);
    case Scaling::kS1:
      return logistic(-d_value);
    default:
      return 1.0;
  }
}

Matrix step_displacement(const GradStep& step, const Matrix& points) {
  Matrix disp = potential_gradients(step.potential, points);
  if (step.scaling != Scaling::kUnit) {
    const Vector d = potential_values(step.potential, points);
    for (Index i = 0; i < points.rows(); ++i) disp.row(i) *= scaling_factor(step.scaling, d[i]);
  }
  return step.eta * disp;
}

Matrix functional_gradient_step(const GradStep& step, const Matrix& points) {
  return points + step_displacement(step, points);
}

Vector functional_gradient_step(const GradStep& step, const Vector& x) {
  return functional_gradient_step(step, Matrix(x.transpose())).row(0).transpose();
}

Matrix generator_apply(const GeneratorStack& g, const Matrix& z) {
  Matrix x = forward(g.base, z);
  for (const GradStep& s : g.steps) x += step_displacement(s, x);
  return x;
}

Vector generator_apply(const GeneratorStack& g, const Vector& z) {
  return generator_apply(g, Matrix(z.transpose())).row(0).transpose();
}

InputPool make_pool(const GeneratorStack& g, Matrix z) {
  InputPool pool;
  pool.x = forward(g.base, z);
  pool.z = std::move(z);
  pool_advance(pool, g.steps, 0);
  return pool;
}

void pool_advance(InputPool& pool, std::span<const GradStep> new_steps, std::size_t first_index) {
  if (first_index != pool.stamp)
    throw InternalError("pool is at step " + std::to_string(pool.stamp) + " but advance starts at step " +
                        std::to_string(first_index));
  for (const GradStep& s : new_steps) {
    pool.x += step_displacement(s, pool.x);
    ++pool.stamp;
  }
}

double distill_loss(const MlpNet& net, const Matrix& z, const Matrix& targets) {
  const Matrix diff = forward(net, z) - targets;
  return 0.5 * diff.squaredNorm() / static_cast<double>(z.rows());
}

DistillReport approximator_distill(Approximator& approx, const Matrix& z, const Matrix& targets, Rng& rng) {
  if (z.rows() == 0 || z.rows() != targets.rows()) throw ConfigError("distillation needs matching non-empty pairs");
  if (targets.cols() != approx.net.output_dim()) throw ConfigError("distillation targets have the wrong dimension");
  const DistillConfig& cfg = approx.config;
  approx.optimizer.learning_rate = cfg.learning_rate;
  approx.optimizer.decay = cfg.decay;
  approx.optimizer.epsilon = cfg.epsilon;

  DistillReport report;
  report.initial_loss = distill_loss(approx.net, z, targets);
  double prev = report.initial_loss;
  std::vector<Index> order(static_cast<std::size_t>(z.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index b = std::max<Index>(1, cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epoch_cap; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < z.rows(); start += b) {
      const Index len = std::min(b, z.rows() - start);
      Matrix zb(len, z.cols());
      Matrix tb(len, targets.cols());
      for (Index i = 0; i < len; ++i) {
        zb.row(i) = z.row(order[static_cast<std::size_t>(start + i)]);
        tb.row(i) = targets.row(order[static_cast<std::size_t>(start + i)]);
      }
      const Matrix upstream = (forward(approx.net, zb) - tb) / static_cast<double>(len);
      rmsprop_step(approx.net.mutable_params(), backward_params(approx.net, zb, upstream), approx.optimizer);
    }
    ++report.epochs;
    const double loss = distill_loss(approx.net, z, targets);
    if (!(loss < prev * (1.0 - cfg.plateau_tol))) approx.optimizer.learning_rate *= 0.1;
    prev = loss;
  }
  report.final_loss = prev;
  report.final_learning_rate = approx.optimizer.learning_rate;
  return report;
}

ApproximatorInit approximator_init(const Prior& prior, Index data_dim, const ApproximatorSpec& spec, Rng& rng) {
  if (prior.dim < 1 || data_dim < 1) throw ConfigError("approximator dimensions must be positive");
  ApproximatorInit out;
  out.g_rand = MlpNet({LayerSpec::projection(prior.dim, data_dim)});
  out.g_rand.init_gaussian(rng, 0.01);

  out.approx.net = MlpNet(mlp_layers(prior.dim, spec.hidden, data_dim, spec.hidden_act, spec.output_act));
  out.approx.net.init_gaussian(rng, spec.init_stddev);
  out.approx.config = spec.distill;

  const Matrix z = prior_sample(prior, rng, std::max<Index>(1, spec.init_pool));
  const Matrix targets = forward(out.g_rand, z);
  out.untrained_loss = distill_loss(out.approx.net, z, targets);
  out.report = approximator_distill(out.approx, z, targets, rng);
  return out;
}

}  // namespace cfgan
