// Acceptance checks: one PASS/FAIL line per criterion, tolerances fixed below.
#include "cfgan/discriminator.hpp"
#include "cfgan/distributions.hpp"
#include "cfgan/experiment.hpp"
#include "cfgan/metrics.hpp"
#include "cfgan/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace fs = std::filesystem;
using namespace cfgan;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Result {
  bool pass = false;
  std::string detail;
};

struct Run {
  RunOutcome outcome;
  fs::path dir;
  double seconds = 0.0;
};

class Runs {
 public:
  explicit Runs(fs::path root) : root_(std::move(root)) {}

  const Run& get(const std::string& config, std::uint64_t seed) {
    const std::string name = fs::path(config).stem().string() + "_seed" + std::to_string(seed);
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    ExperimentConfig cfg = load_config((fs::path(CFGAN_SOURCE_DIR) / "configs" / config).string());
    cfg.seed = seed;
    cfg.output_dir = (root_ / name).string();
    const auto start = Clock::now();
    Run r;
    r.outcome = run_experiment(cfg);
    r.dir = cfg.output_dir;
    r.seconds = seconds_since(start);
    std::cerr << "  [run " << name << ": exit " << r.outcome.exit_code << ", " << fmt("%.1f", r.seconds) << " s]\n";
    return cache_.emplace(name, std::move(r)).first->second;
  }

 private:
  fs::path root_;
  std::map<std::string, Run> cache_;
};

Result verify_within(const VerifyReport& rep, double limit_s) {
  const std::string& suite = rep.suite;
  int failed = 0;
  for (const VerifyLine& l : rep.lines)
    if (!l.pass) {
      ++failed;
      std::cerr << "  FAIL " << suite << "." << l.name << " " << l.detail << "\n";
    }
  const bool fast = rep.seconds < limit_s;
  return {rep.passed() && fast, std::to_string(rep.lines.size() - static_cast<std::size_t>(failed)) + "/" +
                                    std::to_string(rep.lines.size()) + " checks, " + fmt("%.2f", rep.seconds) +
                                    " s (limit " + fmt("%.0f", limit_s) + " s)"};
}

Result gradients() { return verify_within(verify_suite("gradients"), 10.0); }
Result theorem1() { return verify_within(verify_suite("theorem1"), 120.0); }
Result theorem2() { return verify_within(verify_suite("theorem2"), 180.0); }
Result gan_equiv() { return verify_within(verify_suite("gan_equiv"), 30.0); }

Result mass_conservation() {
  Rng rng(9001);
  Vector m0(2), s0(2);
  m0 << 0.3, -0.2;
  s0 << 1.1, 0.9;
  const GaussianMixture p0({{1.0, m0, s0}});
  const Grid grid = Grid::cube(2, -9.0, 9.0, 0.05);
  double worst = 0.0;
  int accepted = 0;
  for (int attempt = 0; accepted < 10 && attempt < 100; ++attempt) {
    MlpNet d(mlp_layers(2, {16}, 1, Activation::kTanh));
    d.init_gaussian(rng, 1.0);
    const StepBounds b = estimate_step_bounds(GradStep{d, 1.0, Scaling::kUnit}, grid.points());
    std::uniform_real_distribution<double> frac(0.1, 0.9);
    const double eta = frac(rng) / b.jacobian_bound;
    DescentCheckConfig pre;
    pre.eta_sweep = {eta};
    pre.g_bound = b.g_bound;
    pre.jacobian_bound = b.jacobian_bound;
    try {
      pre.validate();
    } catch (const std::exception&) {
      continue;
    }
    const std::vector<GradStep> steps{GradStep{d, eta, Scaling::kUnit}};
    const Vector lp = pushforward_log_density(log_density(p0), steps, grid.points());
    const double mass = grid_integral(grid, Vector(lp.array().exp()));
    worst = std::max(worst, std::abs(mass - 1.0));
    ++accepted;
  }
  return {accepted == 10 && worst <= 1e-3,
          std::to_string(accepted) + " steps, max |mass - 1| = " + fmt("%.3e", worst) + " (limit 1e-3)"};
}

Result cfg_end_to_end(Runs& runs) {
  const Run& r = runs.get("gauss2gauss_cfg.txt", 3);
  const double initial = 2.0;  // KL(N(0,1) || N(2,1)) = 2^2 / 2
  const auto& m = r.outcome.metrics;
  bool decreasing = r.outcome.exit_code == 0 && !m.empty() && m.front().kl && *m.front().kl < initial;
  std::string series = fmt("%.4g", initial);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i].kl) {
      decreasing = false;
      continue;
    }
    series += " " + fmt("%.4g", *m[i].kl);
    if (i > 0 && m[i - 1].kl && !(*m[i].kl < *m[i - 1].kl)) decreasing = false;
  }
  const bool small = !m.empty() && m.back().kl && *m.back().kl <= 0.1 * initial;
  const bool fast = r.seconds < 120.0;
  return {decreasing && small && fast && m.size() == 10,
          "KL " + series + "; final/initial " + (m.empty() || !m.back().kl ? "n/a" : fmt("%.3f", *m.back().kl / initial)) +
              " (limit 0.1), " + fmt("%.1f", r.seconds) + " s (limit 120 s)"};
}

Result xicfg_end_to_end(Runs& runs) {
  int ok = 0;
  double total = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Run& r = runs.get("ring8_xicfg.txt", seed);
    total += r.seconds;
    const auto& m = r.outcome.metrics;
    if (r.outcome.exit_code != 0 || m.size() < 2 || m.front().outer_iter != 0 || !m.front().kl || !m.back().kl ||
        !m.back().mode_count) {
      detail += " seed" + std::to_string(seed) + ":incomplete";
      continue;
    }
    const double ratio = *m.back().kl / *m.front().kl;
    const int modes = *m.back().mode_count;
    if (modes >= 7 && ratio <= 0.25) ++ok;
    detail += " seed" + std::to_string(seed) + ": modes=" + std::to_string(modes) + " KL " +
              fmt("%.3g", *m.front().kl) + "->" + fmt("%.3g", *m.back().kl) + " (" + fmt("%.1f%%", 100.0 * ratio) + ")";
  }
  return {ok >= 2 && total < 900.0, std::to_string(ok) + "/3 seeds with modes>=7 and KL<=25%;" + detail + "; " +
                                        fmt("%.0f", total) + " s (limit 900 s)"};
}

std::vector<double> delta_series(const RunOutcome& o) {
  std::vector<double> v;
  for (const MetricsRecord& r : o.metrics)
    if (r.outer_iter > 0 && r.delta_d) v.push_back(*r.delta_d);
  return v;
}

double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return s / static_cast<double>(end - begin);
}

Result delta_d_diagnostics(Runs& runs) {
  const std::vector<double> healthy = delta_series(runs.get("ring8_xicfg.txt", 1).outcome);
  const std::vector<double> overfit = delta_series(runs.get("ring8_overfit.txt", 1).outcome);
  if (healthy.size() < 10 || overfit.size() < 10) return {false, "too few checkpoints"};
  const std::size_t th = healthy.size() / 10, to = overfit.size() / 10;
  const double first = mean_of(healthy, 0, th), last = mean_of(healthy, healthy.size() - th, healthy.size());
  const double of_last = mean_of(overfit, overfit.size() - to, overfit.size());
  const double of_min = *std::min_element(overfit.begin(), overfit.end());
  const bool healthy_ok = last < first;
  const bool overfit_ok = of_last >= 2.0 * of_min;
  return {healthy_ok && overfit_ok, std::string("healthy ") + (healthy_ok ? "ok" : "FAIL") + ": first tenth " +
                                        fmt("%.4f", first) + ", last tenth " + fmt("%.4f", last) + "; overfit " +
                                        (overfit_ok ? "ok" : "FAIL") + ": last tenth " + fmt("%.4f", of_last) +
                                        ", min " + fmt("%.4f", of_min) + ", ratio " + fmt("%.2f", of_last / of_min) +
                                        " (limit 2)"};
}

Result baseline_ordering(Runs& runs) {
  std::map<std::string, double> mean;
  std::string detail;
  for (const char* cfg : {"ring8_xicfg.txt", "ring8_gan1.txt", "ring8_gan0.txt"}) {
    double sum = 0.0;
    std::string counts;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Run& r = runs.get(cfg, seed);
      const auto& m = r.outcome.metrics;
      const int modes = (r.outcome.exit_code == 0 && !m.empty() && m.back().mode_count) ? *m.back().mode_count : 0;
      sum += modes;
      counts += (seed > 1 ? "," : "") + std::to_string(modes);
    }
    mean[cfg] = sum / 5.0;
    detail += " " + fs::path(cfg).stem().string() + "=" + fmt("%.1f", mean[cfg]) + " [" + counts + "]";
  }
  const double x = mean["ring8_xicfg.txt"];
  const bool greatest = x > mean["ring8_gan1.txt"] && x > mean["ring8_gan0.txt"];
  return {greatest, "mean final mode count:" + detail + "; xICFG strictly greatest required"};
}

Result determinism(Runs& runs) {
  std::vector<std::pair<std::string, std::uint64_t>> originals{{"gauss2gauss_cfg.txt", 3},
                                                               {"ring8_xicfg.txt", 1},
                                                               {"ring8_xicfg.txt", 2},
                                                               {"ring8_xicfg.txt", 3},
                                                               {"ring8_overfit.txt", 1}};
  int same = 0;
  std::string detail;
  for (const auto& [cfg, seed] : originals) {
    const Run& r = runs.get(cfg, seed);
    ExperimentConfig echo = load_config((r.dir / "config.txt").string());
    echo.output_dir = (r.dir.string() + "_rerun");
    run_experiment(echo);
    const bool identical = read_file(r.dir / "metrics.csv") == read_file(fs::path(echo.output_dir) / "metrics.csv");
    if (identical) ++same;
    detail += " " + r.dir.filename().string() + (identical ? ":identical" : ":DIFFERS");
  }
  return {same == static_cast<int>(originals.size()), std::to_string(same) + "/" +
                                                          std::to_string(originals.size()) + " reruns byte-identical;" +
                                                          detail};
}

Result epsilon_consistency() {
  const GaussianMixture ps = standard_gaussian(1);
  const GaussianMixture pg = shifted_gaussian(1, 1.0);
  const Index sizes[] = {100, 1000, 10000};
  int monotone = 0;
  std::string detail;
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<double> eps;
    for (Index n : sizes) {
      Rng rng(static_cast<std::uint64_t>(1000 * rep) + static_cast<std::uint64_t>(n));
      const Matrix real = mixture_sample(ps, rng, n);
      const Matrix gen = mixture_sample(pg, rng, n);
      MlpNet net(mlp_layers(1, {32, 32}, 1, Activation::kTanh));
      net.init_gaussian(rng, 0.1);
      Discriminator d = make_discriminator(std::move(net), DiscriminatorConfig{});
      std::uniform_int_distribution<Index> pick(0, n - 1);
      const int steps = 4000;
      for (int s = 0; s < steps; ++s) {
        if (s == steps / 2) d.optimizer.learning_rate = 1e-4;
        Matrix rb(64, 1), gb(64, 1);
        for (Index i = 0; i < 64; ++i) {
          rb(i, 0) = real(pick(rng), 0);
          gb(i, 0) = gen(pick(rng), 0);
        }
        discriminator_update(d, rb, gb, 1.0);
      }
      Rng eval_rng(static_cast<std::uint64_t>(77 + rep));
      eps.push_back(epsilon_measure(d.net, ps, log_density(pg), 1.0, 10000, eval_rng).mean);
    }
    const bool down = eps[1] < eps[0] && eps[2] < eps[1];
    if (down) ++monotone;
    detail += " rep" + std::to_string(rep) + ": " + fmt("%.3f", eps[0]) + " " + fmt("%.3f", eps[1]) + " " +
              fmt("%.3f", eps[2]) + (down ? "" : " (not monotone)");
  }
  return {monotone >= 2, std::to_string(monotone) + "/3 repetitions monotone over n = 1e2, 1e3, 1e4;" + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_runs";
  std::vector<int> only;
  app.add_option("--out", out, "Directory for run artifacts");
  app.add_option("--only", only, "Criteria to check (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(out);
  Runs runs(out);
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"gradient correctness", gradients},
      {"descent of KL (oracle discriminator)", theorem1},
      {"descent of L_beta (beta-oracle)", theorem2},
      {"GAN / distillation gradient equivalence", gan_equiv},
      {"pushforward mass conservation", mass_conservation},
      {"CFG end-to-end on 1D Gaussians", [&] { return cfg_end_to_end(runs); }},
      {"xICFG end-to-end on the ring", [&] { return xicfg_end_to_end(runs); }},
      {"Delta_D diagnostics", [&] { return delta_d_diagnostics(runs); }},
      {"baseline mode-count ordering", [&] { return baseline_ordering(runs); }},
      {"determinism of echoed configs", [&] { return determinism(runs); }},
      {"epsilon consistency", epsilon_consistency},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = Clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.pass) ++failures;
    std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << r.detail
              << " [" << fmt("%.1f", seconds_since(start)) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
