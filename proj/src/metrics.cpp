#include "cfgan/metrics.hpp"

#include "cfgan/discriminator.hpp"
#include "cfgan/errors.hpp"
#include "cfgan/parallel.hpp"
#include "cfgan/rmsprop.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cfgan {

namespace {

constexpr Index kChunk = 4096;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Applies `fn` to row blocks of `points` and concatenates the per-row results.
template <typename Fn>
Vector map_rows(const Matrix& points, Fn&& fn) {
  Vector out(points.rows());
  for_each_chunk(points.rows(), kChunk, [&](Index begin, Index end) {
    out.segment(begin, end - begin) = fn(Matrix(points.middleRows(begin, end - begin)));
  });
  return out;
}

}  // namespace

Grid Grid::cube(Index dim, double lo, double hi, double spacing) {
  Grid g;
  g.lo.assign(static_cast<std::size_t>(dim), lo);
  g.hi.assign(static_cast<std::size_t>(dim), hi);
  g.spacing = spacing;
  return g;
}

std::vector<Index> Grid::counts() const {
  if (lo.size() != hi.size() || lo.empty()) throw ConfigError("grid bounds are malformed");
  if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  std::vector<Index> n;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (!(hi[a] > lo[a])) throw ConfigError("grid upper bound must exceed lower bound");
    n.push_back(static_cast<Index>(std::llround((hi[a] - lo[a]) / spacing)));
  }
  return n;
}

Index Grid::size() const {
  Index total = 1;
  for (Index c : counts()) total *= c;
  return total;
}

double Grid::cell_volume() const { return std::pow(spacing, static_cast<double>(dim())); }

Matrix Grid::points() const {
  const std::vector<Index> n = counts();
  Matrix p(size(), dim());
  for (Index i = 0; i < p.rows(); ++i) {
    Index rem = i;
    for (Index a = dim(); a-- > 0;) {
      const Index k = rem % n[static_cast<std::size_t>(a)];
      rem /= n[static_cast<std::size_t>(a)];
      p(i, a) = lo[static_cast<std::size_t>(a)] + (static_cast<double>(k) + 0.5) * spacing;
    }
  }
  return p;
}

double grid_integral(const Grid& grid, const Vector& values) {
  if (values.size() != grid.size()) throw ConfigError("value count does not match grid size");
  const Index n_chunks = (values.size() + kChunk - 1) / kChunk;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  for_each_chunk(values.size(), kChunk, [&](Index begin, Index end) {
    partial[static_cast<std::size_t>(begin / kChunk)] = values.segment(begin, end - begin).sum();
  });
  return std::accumulate(partial.begin(), partial.end(), 0.0) * grid.cell_volume();
}

double kl_estimate(const LogDensity& p_star, const LogDensity& p_gen, const Grid& grid) {
  const Matrix pts = grid.points();
  const Vector a = map_rows(pts, p_star);
  const Vector b = map_rows(pts, p_gen);
  Vector terms(a.size());
  for (Index i = 0; i < a.size(); ++i) terms[i] = a[i] == kNegInf ? 0.0 : std::exp(a[i]) * (a[i] - b[i]);
  return grid_integral(grid, terms);
}

double extended_kl_beta(const LogDensity& p_star, const LogDensity& p_gen, double beta, const Grid& grid) {
  if (beta == 1.0) return kl_estimate(p_star, p_gen, grid);
  const Matrix pts = grid.points();
  const Vector a = map_rows(pts, p_star);
  const Vector b = map_rows(pts, p_gen);
  const Vector d = ideal_discriminator([&](const Matrix&) { return a; }, [&](const Matrix&) { return b; }, beta, pts);
  Vector terms(a.size());
  for (Index i = 0; i < a.size(); ++i) {
    const double mix = beta * std::exp(a[i]) + (1.0 - beta) * std::exp(b[i]);
    terms[i] = mix == 0.0 ? 0.0 : mix * d[i];
  }
  return grid_integral(grid, terms);
}

double knn_kl_estimate(const Matrix& real, const Matrix& gen, int k) {
  const Index n = real.rows();
  const Index m = gen.rows();
  if (real.cols() != gen.cols()) throw ConfigError("kNN KL: samples differ in dimension");
  if (k < 1 || n <= k || m < k) throw ConfigError("kNN KL: not enough samples for k");
  const double d = static_cast<double>(real.cols());
  const double tiny = 1e-300;

  auto kth = [k](std::vector<double>& dist) {
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    return dist[static_cast<std::size_t>(k - 1)];
  };

  const Index n_chunks = (n + 255) / 256;
  std::vector<double> partial(static_cast<std::size_t>(n_chunks), 0.0);
  for_each_chunk(n, 256, [&](Index begin, Index end) {
    std::vector<double> self(static_cast<std::size_t>(n - 1));
    std::vector<double> other(static_cast<std::size_t>(m));
    double acc = 0.0;
    for (Index i = begin; i < end; ++i) {
      std::size_t s = 0;
      for (Index j = 0; j < n; ++j)
        if (j != i) self[s++] = (real.row(j) - real.row(i)).squaredNorm();
      for (Index j = 0; j < m; ++j) other[static_cast<std::size_t>(j)] = (gen.row(j) - real.row(i)).squaredNorm();
      const double rho = std::sqrt(std::max(kth(self), tiny));
      const double nu = std::sqrt(std::max(kth(other), tiny));
      acc += std::log(nu / rho);
    }
    partial[static_cast<std::size_t>(begin / 256)] = acc;
  });
  const double sum = std::accumulate(partial.begin(), partial.end(), 0.0);
  return d * sum / static_cast<double>(n) + std::log(static_cast<double>(m) / static_cast<double>(n - 1));
}

namespace {

/// Jacobian determinants of x -> x + disp(x) at every row, by central
/// differences of the displacement.
Vector log_abs_det_jacobian(const GradStep& step, const Matrix& u, double h) {
  const Index n = u.rows();
  const Index dim = u.cols();
  std::vector<Matrix> cols;
  cols.reserve(static_cast<std::size_t>(dim));
  for (Index j = 0; j < dim; ++j) {
    Matrix up = u;
    Matrix dn = u;
    up.col(j).array() += h;
    dn.col(j).array() -= h;
    const Vector width = up.col(j) - dn.col(j);
    Matrix diff = step_displacement(step, up) - step_displacement(step, dn);
    for (Index i = 0; i < n; ++i) diff.row(i) /= width[i];
    cols.push_back(std::move(diff));
  }
  Vector out(n);
  Matrix jac(dim, dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) jac.col(j) = cols[static_cast<std::size_t>(j)].row(i).transpose();
    jac += Matrix::Identity(dim, dim);
    out[i] = std::log(std::abs(jac.determinant()));
  }
  return out;
}

Vector pushforward_block(const LogDensity& p0, std::span<const GradStep> steps, Matrix x,
                         const PushforwardOptions& opts) {
  Vector log_det = Vector::Zero(x.rows());
  for (std::size_t t = steps.size(); t-- > 0;) {
    const GradStep& step = steps[t];
    Matrix u = x;
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
      Matrix next = x - step_displacement(step, u);
      const double change = (next - u).cwiseAbs().maxCoeff();
      u = std::move(next);
      if (!std::isfinite(change)) break;
      if (change <= opts.fixed_point_tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw StepTooLargeError("inverting step " + std::to_string(t) + " (eta " + std::to_string(step.eta) +
                              ") did not converge; the step is not a contraction");
    log_det += log_abs_det_jacobian(step, u, opts.jacobian_step);
    x = std::move(u);
  }
  return p0(x) - log_det;
}

}  // namespace

Vector pushforward_log_density(const LogDensity& p0, std::span<const GradStep> steps, const Matrix& points,
                               const PushforwardOptions& opts) {
  return map_rows(points, [&](const Matrix& block) { return pushforward_block(p0, steps, block, opts); });
}

double pushforward_density(const LogDensity& p0, std::span<const GradStep> steps, const Vector& x,
                           const PushforwardOptions& opts) {
  return std::exp(pushforward_log_density(p0, steps, Matrix(x.transpose()), opts)[0]);
}

LogDensity make_pushforward(LogDensity p0, std::vector<GradStep> steps, PushforwardOptions opts) {
  return [p0 = std::move(p0), steps = std::move(steps), opts](const Matrix& points) {
    return pushforward_log_density(p0, steps, points, opts);
  };
}

StepBounds estimate_step_bounds(const GradStep& step, const Matrix& points) {
  GradStep unit = step;
  unit.eta = 1.0;
  StepBounds b;
  const Matrix g = step_displacement(unit, points);
  b.g_bound = g.rowwise().norm().maxCoeff();
  const double h = 1e-6;
  const Index dim = points.cols();
  std::vector<Matrix> cols;
  for (Index j = 0; j < dim; ++j) {
    Matrix up = points;
    Matrix dn = points;
    up.col(j).array() += h;
    dn.col(j).array() -= h;
    cols.push_back((step_displacement(unit, up) - step_displacement(unit, dn)) / (2.0 * h));
  }
  Matrix jac(dim, dim);
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index j = 0; j < dim; ++j) jac.col(j) = cols[static_cast<std::size_t>(j)].row(i).transpose();
    const double norm = Eigen::JacobiSVD<Matrix>(jac).singularValues()(0);
    b.jacobian_bound = std::max(b.jacobian_bound, norm);
  }
  return b;
}

void DescentCheckConfig::validate() const {
  if (eta_sweep.empty()) throw ConfigError("descent check needs at least one eta");
  for (double eta : eta_sweep) {
    if (!(eta > 0.0)) throw ConfigError("descent check eta must be positive");
    if (jacobian_bound > 0.0 && !(eta < 1.0 / jacobian_bound))
      throw ConfigError("eta " + std::to_string(eta) + " violates eta < 1/b");
    if (g_bound > 0.0 && !(eta < h0 / g_bound))
      throw ConfigError("eta " + std::to_string(eta) + " violates eta < h0/a");
  }
}

DescentReport descent_check(const GaussianMixture& p_star, const GaussianMixture& p0, const Potential& d,
                            Scaling scaling, double beta, const DescentCheckConfig& cfg, const Grid& grid) {
  cfg.validate();
  const LogDensity star = log_density(p_star);
  const LogDensity base = log_density(p0);
  const double l_before = extended_kl_beta(star, base, beta, grid);

  // int p* u s |grad D|^2, with u = beta - (1-beta) e^D (u = 1 at beta = 1).
  const Matrix pts = grid.points();
  const Vector log_star = map_rows(pts, star);
  const Vector grad_sq = potential_gradients(d, pts).rowwise().squaredNorm();
  const Vector dval = potential_values(d, pts);
  Vector integrand(pts.rows());
  for (Index i = 0; i < pts.rows(); ++i) {
    const double u = beta - (1.0 - beta) * std::exp(dval[i]);
    const double s = scaling_factor(scaling, dval[i]);
    integrand[i] = std::exp(log_star[i]) * u * s * grad_sq[i];
  }
  const double directional = grid_integral(grid, integrand);

  DescentReport report;
  std::vector<double> xs;
  std::vector<double> ys;
  for (double eta : cfg.eta_sweep) {
    DescentEntry e;
    e.eta = eta;
    e.first_order = -eta * directional;
    try {
      const LogDensity moved = make_pushforward(base, {GradStep{d, eta, scaling}});
      e.delta_l = extended_kl_beta(star, moved, beta, grid) - l_before;
      e.residual = e.delta_l - e.first_order;
      if (e.residual != 0.0) {
        xs.push_back(std::log(eta));
        ys.push_back(std::log(std::abs(e.residual)));
      }
      report.residual_coefficient = std::max(report.residual_coefficient, std::abs(e.residual) / (eta * eta));
    } catch (const StepTooLargeError& err) {
      e.error = err.what();
    }
    report.entries.push_back(e);
  }
  if (xs.size() >= 2) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    report.residual_slope = sxy / sxx;
  }
  return report;
}

double delta_d(const Potential& d, const Matrix& real, const Matrix& gen) {
  if (real.rows() == 0 || gen.rows() == 0) throw ConfigError("delta_d needs non-empty batches");
  return std::abs(potential_values(d, real).mean() - potential_values(d, gen).mean());
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

ModeScoreReport mode_score_from_probs(const Matrix& probs, double min_mass) {
  if (probs.rows() == 0) throw ConfigError("mode score needs at least one sample");
  ModeScoreReport r;
  r.class_mass = probs.colwise().mean().transpose();
  double expected_kl = 0.0;
  for (Index i = 0; i < probs.rows(); ++i)
    for (Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(i, c);
      if (p > 0.0) expected_kl += p * (std::log(p) - std::log(r.class_mass[c]));
    }
  expected_kl /= static_cast<double>(probs.rows());
  r.score = std::exp(std::max(0.0, expected_kl));
  r.mode_count = static_cast<int>((r.class_mass.array() >= min_mass).count());
  return r;
}

ModeScoreReport mode_score(const MlpNet& classifier, const Matrix& gen_samples, double min_mass) {
  return mode_score_from_probs(softmax_rows(forward(classifier, gen_samples)), min_mass);
}

double train_classifier(MlpNet& net, const Matrix& x, const std::vector<int>& labels, const ClassifierConfig& cfg,
                        Rng& rng) {
  if (static_cast<Index>(labels.size()) != x.rows() || x.rows() == 0)
    throw ConfigError("classifier training needs one label per point");
  const Index classes = net.output_dim();
  for (int l : labels)
    if (l < 0 || l >= classes) throw ConfigError("label out of range for classifier");
  RmspropState<double> opt;
  opt.learning_rate = cfg.learning_rate;
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index b = std::max<Index>(1, cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < x.rows(); start += b) {
      const Index len = std::min(b, x.rows() - start);
      Matrix xb(len, x.cols());
      Matrix onehot = Matrix::Zero(len, classes);
      for (Index i = 0; i < len; ++i) {
        const Index src = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(src);
        onehot(i, labels[static_cast<std::size_t>(src)]) = 1.0;
      }
      const Matrix upstream = (softmax_rows(forward(net, xb)) - onehot) / static_cast<double>(len);
      rmsprop_step(net.mutable_params(), backward_params(net, xb, upstream), opt);
    }
  }
  const Matrix out = forward(net, x);
  Index correct = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    Index arg = 0;
    out.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

}  // namespace cfgan
