#include "cfgan/verify.hpp"

#include "cfgan/algorithms.hpp"
#include "cfgan/discriminator.hpp"
#include "cfgan/distributions.hpp"
#include "cfgan/errors.hpp"
#include "cfgan/finite_diff.hpp"
#include "cfgan/generator.hpp"
#include "cfgan/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace cfgan {

bool VerifyReport::passed() const {
  for (const VerifyLine& l : lines)
    if (!l.pass) return false;
  return !lines.empty();
}

std::string VerifyReport::to_text() const {
  std::string out;
  for (const VerifyLine& l : lines)
    out += std::string(l.pass ? "PASS " : "FAIL ") + suite + "." + l.name + (l.detail.empty() ? "" : " " + l.detail) +
           "\n";
  return out;
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"gradients", "theorem1", "theorem2", "gan_equiv", "replay"};
  return names;
}

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string two_digits(int i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

double rel_error(const Vector& analytic, const Vector& numeric) {
  const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-6);
  return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

MlpNet random_net(Rng& rng, Index in, Index out, bool smooth_only) {
  std::uniform_int_distribution<int> depth(1, 3);
  std::uniform_int_distribution<Index> width(2, 8);
  std::uniform_int_distribution<int> act(smooth_only ? 2 : 0, 2);
  std::vector<LayerSpec> layers;
  Index prev = in;
  const int hidden = depth(rng);
  for (int i = 0; i < hidden; ++i) {
    const Index w = width(rng);
    layers.push_back(LayerSpec::linear(prev, w));
    switch (act(rng)) {
      case 0:
        layers.push_back(LayerSpec::relu(w));
        break;
      case 1:
        layers.push_back(LayerSpec::leaky_relu(w));
        break;
      default:
        layers.push_back(LayerSpec::tanh(w));
    }
    prev = w;
  }
  layers.push_back(LayerSpec::linear(prev, out));
  MlpNet net(std::move(layers));
  net.init_gaussian(rng, 0.7);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (std::size_t i = 0; i < net.layers().size(); ++i)
    if (net.layers()[i].kind == LayerKind::kLinear)
      for (Index k = 0; k < net.bias(i).size(); ++k) net.bias(i)[k] = normal(rng);
  return net;
}

// True when some relu / leaky pre-activation is within `margin` of its kink;
// central differences straddling a kink are not a valid reference.
bool near_kink(const MlpNet& net, const Matrix& x, double margin) {
  Matrix h = x;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const LayerKind k = net.layers()[i].kind;
    if ((k == LayerKind::kRelu || k == LayerKind::kLeakyRelu) && (h.array().abs() < margin).any()) return true;
    h = detail::apply_layer(net, i, h);
  }
  return false;
}

void gradients_suite(VerifyReport& report) {
  Rng rng(20240611);
  std::uniform_int_distribution<Index> in_dim(1, 4);
  std::uniform_int_distribution<Index> out_dim(1, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1e-5;
  for (int n = 0; n < 20; ++n) {
    const MlpNet net = random_net(rng, in_dim(rng), out_dim(rng), false);
    double worst_params = 0.0;
    double worst_input = 0.0;
    for (int p = 0; p < 20; ++p) {
      Matrix x(1, net.input_dim());
      do {
        for (Index j = 0; j < x.cols(); ++j) x(0, j) = normal(rng);
      } while (near_kink(net, x, 1e-3));
      Matrix c(1, net.output_dim());
      for (Index j = 0; j < c.cols(); ++j) c(0, j) = normal(rng);

      const MlpGradients<double> g = backward(net, x, c);
      MlpNet probe = net;
      const Vector fd_params = finite_diff_grad(
          [&](const Vector& theta) {
            probe.mutable_params() = theta;
            return (forward(probe, x).array() * c.array()).sum();
          },
          net.params(), h);
      const Vector fd_input = finite_diff_grad(
          [&](const Vector& xv) {
            const Matrix row = xv.transpose();
            return (forward(net, row).array() * c.array()).sum();
          },
          Vector(x.row(0).transpose()), h);
      worst_params = std::max(worst_params, rel_error(g.params, fd_params));
      worst_input = std::max(worst_input, rel_error(g.inputs.row(0).transpose(), fd_input));
    }
    report.lines.push_back({"net" + two_digits(n), worst_params <= 1e-5 && worst_input <= 1e-5,
                            "params_rel=" + sci(worst_params) + " input_rel=" + sci(worst_input)});
  }
}

struct DescentCase {
  std::string name;
  GaussianMixture p_star;
  GaussianMixture p0;
  Grid grid;
};

std::vector<DescentCase> descent_cases() {
  std::vector<DescentCase> cases;
  {
    Vector m0(1), s0(1);
    m0 << 0.5;
    s0 << 1.2;
    cases.push_back({"1d", standard_gaussian(1), GaussianMixture({{1.0, m0, s0}}), Grid::cube(1, -10.0, 10.0, 1e-3)});
  }
  {
    Vector m0(2), s0(2);
    m0 << 0.5, -0.3;
    s0 << 1.2, 0.9;
    cases.push_back({"2d", standard_gaussian(2), GaussianMixture({{1.0, m0, s0}}), Grid::cube(2, -8.0, 8.0, 0.04)});
  }
  return cases;
}

void descent_lines(VerifyReport& report, const std::string& prefix, const DescentReport& r, bool check_slope) {
  for (const DescentEntry& e : r.entries) {
    char name[64];
    std::snprintf(name, sizeof name, "%s.eta=%g", prefix.c_str(), e.eta);
    report.lines.push_back({name, e.ok() && e.delta_l < 0.0,
                            e.ok() ? "delta_l=" + sci(e.delta_l) + " first_order=" + sci(e.first_order) +
                                         " residual=" + sci(e.residual)
                                   : e.error});
  }
  const bool slope_ok = r.residual_slope >= 1.7 && r.residual_slope <= 2.3;
  if (check_slope)
    report.lines.push_back({prefix + ".residual_slope", slope_ok, "slope=" + std::to_string(r.residual_slope)});
}

void theorem_suite(VerifyReport& report, const std::vector<double>& betas, bool check_slope) {
  for (const DescentCase& c : descent_cases()) {
    for (double beta : betas) {
      const Potential oracle = ideal_discriminator_field(c.p_star, c.p0, beta);
      DescentCheckConfig cfg;
      const StepBounds bounds = estimate_step_bounds(GradStep{oracle, 1.0, Scaling::kUnit}, c.grid.points());
      cfg.g_bound = bounds.g_bound;
      cfg.jacobian_bound = bounds.jacobian_bound;
      const DescentReport r = descent_check(c.p_star, c.p0, oracle, Scaling::kUnit, beta, cfg, c.grid);
      char prefix[64];
      if (betas.size() == 1)
        std::snprintf(prefix, sizeof prefix, "%s", c.name.c_str());
      else
        std::snprintf(prefix, sizeof prefix, "%s.beta=%g", c.name.c_str(), beta);
      descent_lines(report, prefix, r, check_slope);
    }
  }
}

void gan_equiv_suite(VerifyReport& report) {
  Rng rng(77031);
  std::uniform_int_distribution<Index> dim(1, 4);
  std::uniform_real_distribution<double> eta_dist(0.01, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Index zdim = dim(rng);
    const Index xdim = dim(rng);
    const MlpNet g = random_net(rng, zdim, xdim, false);
    const MlpNet d = random_net(rng, xdim, 1, false);
    Matrix z(16, zdim);
    for (Index r = 0; r < z.rows(); ++r)
      for (Index c = 0; c < z.cols(); ++c) z(r, c) = normal(rng);
    const double eta = eta_dist(rng);
    const EquivalenceReport e = gan_equivalence_check(g, d, z, eta);
    report.lines.push_back({"instance" + two_digits(i), e.s0_discrepancy <= 1e-10 && e.s1_discrepancy <= 1e-10,
                            "s0=" + sci(e.s0_discrepancy) + " s1=" + sci(e.s1_discrepancy)});
  }
}

void replay_suite(VerifyReport& report) {
  Rng rng(5150);
  const Prior prior{2};
  GeneratorStack g{random_net(rng, 2, 2, true), {}};
  const Scaling scalings[] = {Scaling::kUnit, Scaling::kS0, Scaling::kS1};
  for (int i = 0; i < 30; ++i) {
    MlpNet d = random_net(rng, 2, 1, true);
    d.mutable_params() *= 0.5;
    g.steps.push_back(GradStep{std::move(d), 0.1, scalings[i % 3]});
  }
  const Matrix z = prior_sample(prior, rng, 200);

  // Advance in uneven chunks, as the drivers do across calls.
  GeneratorStack partial{g.base, {}};
  InputPool pool = make_pool(partial, z);
  std::size_t next = 0;
  for (std::size_t chunk = 1; next < g.steps.size(); ++chunk) {
    const std::size_t take = std::min(chunk, g.steps.size() - next);
    pool_advance(pool, std::span<const GradStep>(g.steps).subspan(next, take), next);
    next += take;
  }
  const double diff = (pool.x - generator_apply(g, z)).cwiseAbs().maxCoeff();
  report.lines.push_back({"incremental_vs_full", diff <= 1e-12, "max_abs_diff=" + sci(diff)});
  report.lines.push_back({"stamp", pool.stamp == g.steps.size(), "stamp=" + std::to_string(pool.stamp)});

  bool rejected = false;
  try {
    InputPool stale = make_pool(partial, z);
    pool_advance(stale, std::span<const GradStep>(g.steps).subspan(1, 1), 1);
  } catch (const InternalError&) {
    rejected = true;
  }
  report.lines.push_back({"gap_rejected", rejected, ""});

  const InputPool rebuilt = make_pool(g, z);
  const double rebuilt_diff = (rebuilt.x - pool.x).cwiseAbs().maxCoeff();
  report.lines.push_back({"rebuild_matches", rebuilt_diff <= 1e-12, "max_abs_diff=" + sci(rebuilt_diff)});
}

}  // namespace

VerifyReport verify_suite(const std::string& name) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport report;
  report.suite = name;
  if (name == "gradients")
    gradients_suite(report);
  else if (name == "theorem1")
    theorem_suite(report, {1.0}, true);
  else if (name == "theorem2")
    theorem_suite(report, {0.75, 0.9, 1.0}, false);
  else if (name == "gan_equiv")
    gan_equiv_suite(report);
  else if (name == "replay")
    replay_suite(report);
  else
    throw ConfigError("unknown verify suite '" + name + "' (gradients, theorem1, theorem2, gan_equiv, replay)");
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace cfgan
