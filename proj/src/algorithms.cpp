#include "cfgan/algorithms.hpp"

#include "cfgan/errors.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace cfgan {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Matrix sample_rows(const Matrix& src, Index n, Rng& rng) {
  std::uniform_int_distribution<Index> pick(0, src.rows() - 1);
  Matrix out(n, src.cols());
  for (Index i = 0; i < n; ++i) out.row(i) = src.row(pick(rng));
  return out;
}

MetricsRecord checkpoint(const Evaluator& eval, const Checkpoint& cp, Clock::time_point start) {
  MetricsRecord r = eval(cp);
  r.outer_iter = cp.iteration;
  r.wall_ms = elapsed_ms(start);
  return r;
}

double max_abs_ratio(const Vector& a, const Vector& b) {
  const double scale = a.cwiseAbs().maxCoeff();
  const double diff = (a - b).cwiseAbs().maxCoeff();
  if (scale == 0.0) return diff;
  return diff / scale;
}

}  // namespace

void TrainConfig::validate() const {
  if (T < 1) throw ConfigError("T must be at least 1");
  if (b < 1) throw ConfigError("mini-batch size b must be at least 1");
  if (U < 1) throw ConfigError("discriminator update frequency U must be at least 1");
  if (pool_size < b) throw ConfigError("pool_size must be at least b");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(beta > 0.5 && beta <= 1.0)) throw ConfigError("beta must lie in (0.5, 1]");
  if (outer_iterations < 0) throw ConfigError("iteration budget must be non-negative");
  if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be at least 1");
  if (cfg_d_steps < 1) throw ConfigError("cfg_d_steps must be at least 1");
  if (!(box > 0.0)) throw ConfigError("box must be positive");
  if (plateau_window < 0) throw ConfigError("plateau_window must be non-negative");
}

void check_divergence(const Matrix& points, double box, int iteration) {
  const double worst = points.size() == 0 ? 0.0 : points.cwiseAbs().maxCoeff();
  if (!(worst <= box))
    throw DivergenceError("generated points left the box [-" + std::to_string(box) + ", " + std::to_string(box) +
                              "] at iteration " + std::to_string(iteration) + "; eta is likely too large",
                          iteration);
}

CfgResult cfg_run(const Matrix& real, GeneratorStack g0, Discriminator d, const Matrix& z_gen,
                  const TrainConfig& cfg, Rng& rng, const Evaluator& eval) {
  cfg.validate();
  const auto start = Clock::now();
  CfgResult res{std::move(g0), std::move(d), {}};
  InputPool pool = make_pool(res.stack, z_gen);
  if (eval && cfg.checkpoint_initial) {
    Checkpoint cp;
    cp.d = &res.d;
    cp.stack = &res.stack;
    cp.generate = [&](const Matrix& z) { return generator_apply(res.stack, z); };
    res.metrics.push_back(checkpoint(eval, cp, start));
  }
  for (int t = 1; t <= cfg.outer_iterations; ++t) {
    for (int k = 0; k < cfg.cfg_d_steps; ++k)
      discriminator_update(res.d, sample_rows(real, cfg.b, rng), sample_rows(pool.x, cfg.b, rng), cfg.beta);
    res.stack.steps.push_back(GradStep{res.d.net, cfg.eta, cfg.scaling});
    pool_advance(pool, std::span<const GradStep>(res.stack.steps).last(1), res.stack.steps.size() - 1);
    check_divergence(pool.x, cfg.box, t);
    if (eval && t % cfg.checkpoint_every == 0) {
      Checkpoint cp;
      cp.iteration = t;
      cp.d = &res.d;
      cp.stack = &res.stack;
      cp.generate = [&](const Matrix& z) { return generator_apply(res.stack, z); };
      res.metrics.push_back(checkpoint(eval, cp, start));
    }
  }
  return res;
}

std::vector<MetricsRecord> icfg_run(const Matrix& real, InputPool& pool, GeneratorStack& g, Discriminator& d,
                                    const TrainConfig& cfg, int steps, Rng& rng, const Evaluator& eval,
                                    int iteration_offset) {
  cfg.validate();
  if (pool.stamp != g.steps.size()) throw InternalError("pool cache is out of sync with the generator");
  const auto start = Clock::now();
  std::vector<MetricsRecord> metrics;
  if (eval && cfg.checkpoint_initial && iteration_offset == 0) {
    Checkpoint cp;
    cp.d = &d;
    cp.stack = &g;
    cp.generate = [&](const Matrix& z) { return generator_apply(g, z); };
    metrics.push_back(checkpoint(eval, cp, start));
  }
  for (int t = 1; t <= steps; ++t) {
    for (int u = 0; u < cfg.U; ++u)
      discriminator_update(d, sample_rows(real, cfg.b, rng), sample_rows(pool.x, cfg.b, rng), cfg.beta);
    g.steps.push_back(GradStep{d.net, cfg.eta, cfg.scaling});
    pool_advance(pool, std::span<const GradStep>(g.steps).last(1), g.steps.size() - 1);
    check_divergence(pool.x, cfg.box, iteration_offset + t);
    if (eval && t % cfg.checkpoint_every == 0) {
      Checkpoint cp;
      cp.iteration = iteration_offset + t;
      cp.d = &d;
      cp.stack = &g;
      cp.generate = [&](const Matrix& z) { return generator_apply(g, z); };
      metrics.push_back(checkpoint(eval, cp, start));
    }
  }
  return metrics;
}

XicfgResult xicfg_run(const Matrix& real, const Prior& prior, Approximator& approx, Discriminator& d,
                      const TrainConfig& cfg, Rng& rng, const Evaluator& eval, const QualityFn& quality) {
  cfg.validate();
  const auto start = Clock::now();
  XicfgResult res;
  double best_mode = -1.0;
  int since_best = 0;
  if (eval && cfg.checkpoint_initial) {
    Checkpoint cp;
    cp.d = &d;
    cp.generate = [&](const Matrix& z) { return forward(approx.net, z); };
    res.metrics.push_back(checkpoint(eval, cp, start));
  }
  for (int outer = 1; outer <= cfg.outer_iterations; ++outer) {
    GeneratorStack stack{approx.net, {}};
    InputPool pool = make_pool(stack, prior_sample(prior, rng, cfg.pool_size));
    icfg_run(real, pool, stack, d, cfg, cfg.T, rng);
    res.max_stack_size = std::max(res.max_stack_size, stack.steps.size());

    const double before = quality ? quality(pool.x) : 0.0;
    approximator_distill(approx, pool.z, pool.x, rng);
    stack.base = approx.net;
    stack.steps.clear();
    if (quality) {
      const double after = quality(forward(approx.net, pool.z));
      if (after < 0.5 * before) ++res.degradation_warnings;
    }
    res.outer_iterations_run = outer;

    if (eval && outer % cfg.checkpoint_every == 0) {
      Checkpoint cp;
      cp.iteration = outer;
      cp.d = &d;
      cp.stack = nullptr;
      cp.generate = [&](const Matrix& z) { return forward(approx.net, z); };
      res.metrics.push_back(checkpoint(eval, cp, start));
      const auto& score = res.metrics.back().mode_score;
      if (cfg.plateau_window > 0 && score) {
        if (*score > best_mode) {
          best_mode = *score;
          since_best = 0;
        } else if (++since_best >= cfg.plateau_window) {
          res.early_exit = true;
          break;
        }
      }
    }
  }
  return res;
}

LossAndGrad generator_objective(const MlpNet& g, const MlpNet& d, const Matrix& z, bool logd_trick) {
  const Matrix x = forward(g, z);
  const Vector dv = forward_scalar(d, x);
  const double n = static_cast<double>(z.rows());
  LossAndGrad out;
  Matrix upstream(z.rows(), 1);
  for (Index i = 0; i < z.rows(); ++i) {
    // no trick: ln(1 - sigma(D)) = -softplus(D); trick: -ln sigma(D) = softplus(-D)
    if (logd_trick) {
      out.loss += softplus(-dv[i]);
      upstream(i, 0) = -logistic(-dv[i]) / n;
    } else {
      out.loss -= softplus(dv[i]);
      upstream(i, 0) = -logistic(dv[i]) / n;
    }
  }
  out.loss /= n;
  const Matrix grad_x = backward(d, x, upstream).inputs;
  out.grad = backward_params(g, z, grad_x);
  return out;
}

GanResult gan_run(const Matrix& real, const Prior& prior, Discriminator& d, GanGenerator& g, const TrainConfig& cfg,
                  bool logd_trick, Rng& rng, const Evaluator& eval) {
  cfg.validate();
  if (g.net.input_dim() != prior.dim) throw ConfigError("generator input must match the prior dimension");
  if (g.net.output_dim() != real.cols()) throw ConfigError("generator output must match the data dimension");
  const auto start = Clock::now();
  GanResult res;
  if (eval && cfg.checkpoint_initial) {
    Checkpoint cp;
    cp.d = &d;
    cp.generate = [&](const Matrix& zz) { return forward(g.net, zz); };
    res.metrics.push_back(checkpoint(eval, cp, start));
  }
  for (int it = 1; it <= cfg.outer_iterations; ++it) {
    for (int u = 0; u < cfg.U; ++u) {
      const Matrix real_b = sample_rows(real, cfg.b, rng);
      const Matrix gen_b = forward(g.net, prior_sample(prior, rng, cfg.b));
      discriminator_update(d, real_b, gen_b, cfg.beta);
    }
    const Matrix z = prior_sample(prior, rng, cfg.b);
    const LossAndGrad obj = generator_objective(g.net, d.net, z, logd_trick);
    rmsprop_step(g.net.mutable_params(), obj.grad, g.optimizer);
    if (it % cfg.checkpoint_every == 0) {
      check_divergence(forward(g.net, z), cfg.box, it);
      if (eval) {
        Checkpoint cp;
        cp.iteration = it;
        cp.d = &d;
        cp.generate = [&](const Matrix& zz) { return forward(g.net, zz); };
        res.metrics.push_back(checkpoint(eval, cp, start));
      }
    }
  }
  return res;
}

EquivalenceReport gan_equivalence_check(const MlpNet& g, const MlpNet& d, const Matrix& z, double eta) {
  if (z.rows() == 0) throw ConfigError("equivalence check needs a non-empty batch");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  const double n = static_cast<double>(z.rows());
  const Matrix x = forward(g, z);
  const Vector dv = forward_scalar(d, x);
  const Matrix grad_d = input_gradients(d, x);

  auto distill_grad = [&](Scaling s) {
    Matrix target = x;
    for (Index i = 0; i < x.rows(); ++i)
      target.row(i) += eta * (scaling_factor(s, dv[i]) / eta) * grad_d.row(i);
    return backward_params(g, z, Matrix(x - target));
  };

  EquivalenceReport r;
  // generator_objective averages over the batch; the identity is stated for sums.
  const Vector gan0 = generator_objective(g, d, z, false).grad * n;
  const Vector gan1 = generator_objective(g, d, z, true).grad * n;
  r.s0_discrepancy = max_abs_ratio(gan0, distill_grad(Scaling::kS0));
  r.s1_discrepancy = max_abs_ratio(gan1, distill_grad(Scaling::kS1));
  return r;
}

}  // namespace cfgan
