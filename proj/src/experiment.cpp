#include "cfgan/experiment.hpp"

#include "cfgan/discriminator.hpp"
#include "cfgan/distributions.hpp"
#include "cfgan/errors.hpp"
#include "cfgan/generator.hpp"
#include "cfgan/metrics.hpp"
#include "cfgan/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace cfgan {

namespace fs = std::filesystem;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kCfg:
      return "cfg";
    case Algorithm::kIcfg:
      return "icfg";
    case Algorithm::kXicfg:
      return "xicfg";
    case Algorithm::kGan0:
      return "gan0";
    case Algorithm::kGan1:
      return "gan1";
  }
  return "?";
}

std::string to_string(Task t) {
  switch (t) {
    case Task::kGauss2Gauss:
      return "gauss2gauss";
    case Task::kRing8:
      return "ring8";
    case Task::kMnistFc:
      return "mnist_fc";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Field {
  std::string key;  // section.key
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

[[noreturn]] void bad_value(const std::string& where, const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError(where + ": key '" + key + "': cannot parse '" + value + "' as " + expected);
}

long long parse_int(const std::string& v, const std::string& where, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) bad_value(where, key, v, "an integer");
    return out;
  } catch (const std::logic_error&) {
    bad_value(where, key, v, "an integer");
  }
}

double parse_real(const std::string& v, const std::string& where, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(out)) bad_value(where, key, v, "a real number");
    return out;
  } catch (const std::logic_error&) {
    bad_value(where, key, v, "a real number");
  }
}

bool parse_bool(const std::string& v, const std::string& where, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(where, key, v, "a boolean");
}

std::vector<Index> parse_widths(const std::string& v, const std::string& where, const std::string& key) {
  std::vector<Index> out;
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const long long w = parse_int(trim(item), where, key);
    if (w < 1) bad_value(where, key, v, "a list of positive widths");
    out.push_back(static_cast<Index>(w));
  }
  return out;
}

std::string fmt_widths(const std::vector<Index>& w) {
  if (w.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
  return out;
}

Activation parse_activation(const std::string& v, const std::string& where, const std::string& key) {
  if (v == "relu") return Activation::kRelu;
  if (v == "leaky_relu") return Activation::kLeakyRelu;
  if (v == "tanh") return Activation::kTanh;
  if (v == "linear" || v == "none") return Activation::kNone;
  bad_value(where, key, v, "one of relu, leaky_relu, tanh, linear");
}

void add_net_fields(std::vector<Field>& f, const std::string& section, NetSpec ExperimentConfig::*spec,
                    bool with_output) {
  f.push_back({section + ".hidden",
               [=](ExperimentConfig& c, const std::string& v) { (c.*spec).hidden = parse_widths(v, "", section + ".hidden"); },
               [=](const ExperimentConfig& c) { return fmt_widths((c.*spec).hidden); }});
  f.push_back({section + ".activation",
               [=](ExperimentConfig& c, const std::string& v) {
                 (c.*spec).activation = parse_activation(v, "", section + ".activation");
               },
               [=](const ExperimentConfig& c) { return to_string((c.*spec).activation); }});
  if (with_output)
    f.push_back({section + ".output",
                 [=](ExperimentConfig& c, const std::string& v) {
                   (c.*spec).output = parse_activation(v, "", section + ".output");
                 },
                 [=](const ExperimentConfig& c) { return to_string((c.*spec).output); }});
  f.push_back({section + ".lr",
               [=](ExperimentConfig& c, const std::string& v) { (c.*spec).learning_rate = parse_real(v, "", section + ".lr"); },
               [=](const ExperimentConfig& c) { return fmt_double((c.*spec).learning_rate); }});
  f.push_back({section + ".init_stddev",
               [=](ExperimentConfig& c, const std::string& v) {
                 (c.*spec).init_stddev = parse_real(v, "", section + ".init_stddev");
               },
               [=](const ExperimentConfig& c) { return fmt_double((c.*spec).init_stddev); }});
}

template <typename T>
Field int_field(const std::string& key, T ExperimentConfig::*member) {
  return {key, [=](ExperimentConfig& c, const std::string& v) { c.*member = static_cast<T>(parse_int(v, "", key)); },
          [=](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

template <typename T>
Field train_int(const std::string& key, T TrainConfig::*member) {
  return {key,
          [=](ExperimentConfig& c, const std::string& v) { c.train.*member = static_cast<T>(parse_int(v, "", key)); },
          [=](const ExperimentConfig& c) { return std::to_string(c.train.*member); }};
}

Field real_field(const std::string& key, double ExperimentConfig::*member) {
  return {key, [=](ExperimentConfig& c, const std::string& v) { c.*member = parse_real(v, "", key); },
          [=](const ExperimentConfig& c) { return fmt_double(c.*member); }};
}

Field train_real(const std::string& key, double TrainConfig::*member) {
  return {key, [=](ExperimentConfig& c, const std::string& v) { c.train.*member = parse_real(v, "", key); },
          [=](const ExperimentConfig& c) { return fmt_double(c.train.*member); }};
}

Field string_field(const std::string& key, std::string ExperimentConfig::*member) {
  return {key, [=](ExperimentConfig& c, const std::string& v) { c.*member = v; },
          [=](const ExperimentConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"experiment.algorithm",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "cfg") c.algorithm = Algorithm::kCfg;
                   else if (v == "icfg") c.algorithm = Algorithm::kIcfg;
                   else if (v == "xicfg") c.algorithm = Algorithm::kXicfg;
                   else if (v == "gan0") c.algorithm = Algorithm::kGan0;
                   else if (v == "gan1") c.algorithm = Algorithm::kGan1;
                   else bad_value("", "experiment.algorithm", v, "one of cfg, icfg, xicfg, gan0, gan1");
                 },
                 [](const ExperimentConfig& c) { return to_string(c.algorithm); }});
    f.push_back({"experiment.task",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "gauss2gauss") c.task = Task::kGauss2Gauss;
                   else if (v == "ring8") c.task = Task::kRing8;
                   else if (v == "mnist_fc") c.task = Task::kMnistFc;
                   else bad_value("", "experiment.task", v, "one of gauss2gauss, ring8, mnist_fc");
                 },
                 [](const ExperimentConfig& c) { return to_string(c.task); }});
    f.push_back({"experiment.seed",
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long s = parse_int(v, "", "experiment.seed");
                   if (s < 0) bad_value("", "experiment.seed", v, "a non-negative integer");
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    f.push_back(string_field("experiment.output_dir", &ExperimentConfig::output_dir));
    f.push_back({"experiment.record_wall_time",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.record_wall_time = parse_bool(v, "", "experiment.record_wall_time");
                 },
                 [](const ExperimentConfig& c) { return std::string(c.record_wall_time ? "true" : "false"); }});

    f.push_back(int_field("task.data_dim", &ExperimentConfig::data_dim));
    f.push_back(real_field("task.shift", &ExperimentConfig::shift));
    f.push_back(int_field("task.prior_dim", &ExperimentConfig::prior_dim));
    f.push_back(int_field("task.real_size", &ExperimentConfig::real_size));
    f.push_back(real_field("task.ring_radius", &ExperimentConfig::ring_radius));
    f.push_back(real_field("task.ring_stddev", &ExperimentConfig::ring_stddev));
    f.push_back(string_field("task.mnist_images", &ExperimentConfig::mnist_images));
    f.push_back(string_field("task.mnist_labels", &ExperimentConfig::mnist_labels));

    f.push_back(train_int("train.T", &TrainConfig::T));
    f.push_back(train_int("train.b", &TrainConfig::b));
    f.push_back(train_int("train.U", &TrainConfig::U));
    f.push_back(train_int("train.pool_size", &TrainConfig::pool_size));
    f.push_back(train_real("train.eta", &TrainConfig::eta));
    f.push_back(train_real("train.beta", &TrainConfig::beta));
    f.push_back(train_int("train.iterations", &TrainConfig::outer_iterations));
    f.push_back(train_int("train.checkpoint_every", &TrainConfig::checkpoint_every));
    f.push_back({"train.checkpoint_initial",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.train.checkpoint_initial = parse_bool(v, "", "train.checkpoint_initial");
                 },
                 [](const ExperimentConfig& c) { return std::string(c.train.checkpoint_initial ? "true" : "false"); }});
    f.push_back(train_int("train.cfg_d_steps", &TrainConfig::cfg_d_steps));
    f.push_back({"train.scaling",
                 [](ExperimentConfig& c, const std::string& v) {
                   if (v == "unit") c.train.scaling = Scaling::kUnit;
                   else if (v == "s0") c.train.scaling = Scaling::kS0;
                   else if (v == "s1") c.train.scaling = Scaling::kS1;
                   else bad_value("", "train.scaling", v, "one of unit, s0, s1");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.train.scaling == Scaling::kUnit ? "unit"
                                      : c.train.scaling == Scaling::kS0 ? "s0"
                                                                        : "s1");
                 }});
    f.push_back(train_real("train.box", &TrainConfig::box));
    f.push_back(train_int("train.plateau_window", &TrainConfig::plateau_window));

    add_net_fields(f, "discriminator", &ExperimentConfig::discriminator, false);
    add_net_fields(f, "approximator", &ExperimentConfig::approximator, true);
    f.push_back(int_field("approximator.epochs", &ExperimentConfig::distill_epochs));
    add_net_fields(f, "classifier", &ExperimentConfig::classifier, false);
    f.push_back(int_field("classifier.epochs", &ExperimentConfig::classifier_epochs));

    f.push_back(int_field("metrics.eval_samples", &ExperimentConfig::eval_samples));
    f.push_back(int_field("metrics.kl_k", &ExperimentConfig::kl_k));
    f.push_back(real_field("metrics.grid_halfwidth", &ExperimentConfig::grid_halfwidth));
    f.push_back(real_field("metrics.grid_spacing", &ExperimentConfig::grid_spacing));
    f.push_back(int_field("metrics.epsilon_samples", &ExperimentConfig::epsilon_samples));
    f.push_back(int_field("metrics.samples_every", &ExperimentConfig::samples_every));
    return f;
  }();
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const std::string& where) {
  for (const Field& f : fields()) {
    if (f.key != key) continue;
    try {
      f.set(cfg, value);
    } catch (const ConfigError& e) {
      // Setters report with an empty location; prefix the real one.
      std::string msg = e.what();
      if (msg.rfind(": ", 0) == 0) msg = msg.substr(2);
      throw ConfigError(where + ": " + msg);
    }
    return;
  }
  throw ConfigError(where + ": unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    if (section.empty()) throw ConfigError(where + ": key outside of any [section]");
    const std::string key = section + "." + trim(line.substr(0, eq));
    set_config_value(cfg, key, trim(line.substr(eq + 1)), where);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(*this) + "\n";
  }
  return out;
}

void ExperimentConfig::validate() const {
  train.validate();
  if (data_dim < 1 || prior_dim < 1) throw ConfigError("task dimensions must be positive");
  if (real_size < 2) throw ConfigError("task.real_size must be at least 2");
  if (!(ring_radius > 0.0) || !(ring_stddev > 0.0)) throw ConfigError("ring radius and stddev must be positive");
  if (task == Task::kMnistFc) {
    if (mnist_images.empty() || !fs::exists(mnist_images))
      throw ConfigError("task.mnist_images does not name an existing file: '" + mnist_images + "'");
    if (mnist_labels.empty() || !fs::exists(mnist_labels))
      throw ConfigError("task.mnist_labels does not name an existing file: '" + mnist_labels + "'");
  }
  if (distill_epochs < 1 || classifier_epochs < 0) throw ConfigError("epoch counts must be positive");
  if (eval_samples <= kl_k || kl_k < 1) throw ConfigError("metrics.eval_samples must exceed metrics.kl_k >= 1");
  if (!(grid_halfwidth > 0.0) || !(grid_spacing > 0.0)) throw ConfigError("grid extent and spacing must be positive");
  if (epsilon_samples != 0 && epsilon_samples < 1000) throw ConfigError("metrics.epsilon_samples must be 0 or >= 1000");
  if (samples_every < 0) throw ConfigError("metrics.samples_every must be non-negative");
  for (const NetSpec* n : {&discriminator, &approximator, &classifier})
    if (!(n->learning_rate >= 0.0) || !(n->init_stddev > 0.0))
      throw ConfigError("network learning rates must be non-negative and init stddevs positive");
}

std::string metrics_csv(const std::vector<MetricsRecord>& rows, bool with_wall_time) {
  std::string out = "outer_iter,kl,l_beta,delta_d,mode_score,epsilon_est,wall_ms\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt_metric(*v) : std::string(); };
  for (const MetricsRecord& r : rows) {
    out += std::to_string(r.outer_iter) + "," + opt(r.kl) + "," + opt(r.l_beta) + "," + opt(r.delta_d) + "," +
           opt(r.mode_score) + "," + opt(r.epsilon_est) + "," + (with_wall_time ? fmt_metric(r.wall_ms) : "") + "\n";
  }
  return out;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

void write_samples_csv(const fs::path& path, const Matrix& x) {
  std::string text;
  for (Index j = 0; j < x.cols(); ++j) text += (j ? ",x" : "x") + std::to_string(j);
  text += "\n";
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) text += (j ? "," : "") + fmt_metric(x(i, j));
    text += "\n";
  }
  write_text(path, text);
}

void write_pgm_images(const fs::path& dir, const Matrix& x, Index count) {
  fs::create_directories(dir);
  const Index side = static_cast<Index>(std::lround(std::sqrt(static_cast<double>(x.cols()))));
  const bool square = side * side == x.cols();
  const Index w = square ? side : x.cols();
  const Index h = square ? side : 1;
  for (Index i = 0; i < std::min(count, x.rows()); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04ld.pgm", static_cast<long>(i));
    std::ofstream out(dir / name, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    for (Index j = 0; j < x.cols(); ++j) {
      const double v = std::clamp((x(i, j) + 1.0) * 127.5, 0.0, 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    }
  }
}

struct TaskData {
  Matrix real;
  std::vector<int> labels;
  std::optional<GaussianMixture> p_star;
  std::optional<GaussianMixture> p0;  // closed-form density of the CFG/ICFG base generator
  Index data_dim = 0;
  Prior prior;
  int classes = 0;
};

TaskData prepare_task(const ExperimentConfig& cfg, Rng& rng) {
  TaskData t;
  switch (cfg.task) {
    case Task::kGauss2Gauss: {
      t.p_star = standard_gaussian(cfg.data_dim);
      t.real = mixture_sample(*t.p_star, rng, cfg.real_size);
      t.data_dim = cfg.data_dim;
      const bool stack_based = cfg.algorithm == Algorithm::kCfg || cfg.algorithm == Algorithm::kIcfg;
      t.prior.dim = stack_based ? cfg.data_dim : cfg.prior_dim;
      if (stack_based) t.p0 = shifted_gaussian(cfg.data_dim, cfg.shift);
      break;
    }
    case Task::kRing8: {
      t.p_star = ring_mixture(8, cfg.ring_radius, cfg.ring_stddev);
      LabelledSample s = mixture_sample_labelled(*t.p_star, rng, cfg.real_size);
      t.real = std::move(s.points);
      t.labels = std::move(s.labels);
      t.data_dim = 2;
      t.prior.dim = cfg.prior_dim;
      t.classes = 8;
      break;
    }
    case Task::kMnistFc: {
      RealDataset ds = load_idx(cfg.mnist_images, cfg.mnist_labels);
      const Index n = std::min<Index>(cfg.real_size, ds.points.rows());
      t.real = ds.points.topRows(n);
      t.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
      t.data_dim = t.real.cols();
      t.prior.dim = cfg.prior_dim;
      t.classes = 1 + *std::max_element(t.labels.begin(), t.labels.end());
      break;
    }
  }
  return t;
}

MlpNet build_net(const NetSpec& spec, Index in, Index out, Rng& rng, Activation output_override) {
  MlpNet net(mlp_layers(in, spec.hidden, out, spec.activation, output_override));
  net.init_gaussian(rng, spec.init_stddev);
  return net;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out_dir(cfg.output_dir);
  fs::create_directories(out_dir);
  write_text(out_dir / "config.txt", cfg.to_text());

  Rng rng(cfg.seed);
  Rng eval_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  TaskData task = prepare_task(cfg, rng);

  const Matrix z_eval = prior_sample(task.prior, eval_rng, cfg.eval_samples);
  // Delta_D compares against the data the discriminator trains on, so that
  // overfitting to a small real set shows up. KL uses fresh draws when p* is known.
  const Matrix real_train_eval = task.real.topRows(std::min(cfg.eval_samples, task.real.rows()));
  const Matrix real_eval =
      task.p_star ? mixture_sample(*task.p_star, eval_rng, cfg.eval_samples) : real_train_eval;

  std::optional<MlpNet> classifier;
  if (task.classes > 1) {
    classifier = build_net(cfg.classifier, task.data_dim, task.classes, eval_rng, Activation::kNone);
    ClassifierConfig cc;
    cc.epochs = cfg.classifier_epochs;
    cc.learning_rate = cfg.classifier.learning_rate;
    if (cfg.task == Task::kRing8) {
      // Independent of real_size, so small-real-set runs are scored by the same judge.
      const LabelledSample ref = mixture_sample_labelled(*task.p_star, eval_rng, 10000);
      train_classifier(*classifier, ref.points, ref.labels, cc, eval_rng);
    } else {
      train_classifier(*classifier, task.real, task.labels, cc, eval_rng);
    }
  }

  const Grid grid = Grid::cube(task.data_dim, -cfg.grid_halfwidth, cfg.grid_halfwidth, cfg.grid_spacing);
  std::vector<MetricsRecord> captured;
  int checkpoints_seen = 0;
  Matrix last_samples;
  int last_iter = -1;
  int dumped_iter = -1;
  bool warned_density = false;

  auto dump = [&](int iter, const Matrix& samples) {
    if (cfg.task == Task::kMnistFc)
      write_pgm_images(out_dir / ("images_" + std::to_string(iter)), samples, 64);
    else
      write_samples_csv(out_dir / ("samples_" + std::to_string(iter) + ".csv"), samples);
    dumped_iter = iter;
  };

  Evaluator eval = [&](const Checkpoint& cp) {
    MetricsRecord r;
    r.outer_iter = cp.iteration;
    const Matrix gen = cp.generate(z_eval);
    r.delta_d = delta_d(cp.d->net, real_train_eval, gen);
    if (task.p0 && cp.stack && task.data_dim <= 2) {
      const LogDensity p_gen = make_pushforward(log_density(*task.p0), cp.stack->steps);
      const LogDensity star = log_density(*task.p_star);
      // A step that cannot be inverted leaves the density metrics empty; training goes on.
      try {
        r.kl = kl_estimate(star, p_gen, grid);
        r.l_beta = extended_kl_beta(star, p_gen, cfg.train.beta, grid);
        if (cfg.epsilon_samples > 0) {
          Rng eps_rng(cfg.seed + static_cast<std::uint64_t>(cp.iteration));
          r.epsilon_est =
              epsilon_measure(cp.d->net, *task.p_star, p_gen, cfg.train.beta, cfg.epsilon_samples, eps_rng).mean;
        }
      } catch (const StepTooLargeError& e) {
        r.kl.reset();
        r.l_beta.reset();
        if (!warned_density) std::cerr << "warning: iteration " << cp.iteration << ": " << e.what() << "\n";
        warned_density = true;
      }
    } else if (task.p_star) {
      r.kl = knn_kl_estimate(real_eval, gen, cfg.kl_k);
    }
    if (classifier) {
      const ModeScoreReport ms = mode_score(*classifier, gen);
      r.mode_score = ms.score;
      r.mode_count = ms.mode_count;
    }
    ++checkpoints_seen;
    if (cfg.samples_every > 0 && checkpoints_seen % cfg.samples_every == 0) dump(cp.iteration, gen);
    last_samples = gen;
    last_iter = cp.iteration;
    captured.push_back(r);
    return r;
  };

  RunOutcome outcome;
  const TrainConfig& tc = cfg.train;
  DiscriminatorConfig dcfg;
  dcfg.beta = tc.beta;
  dcfg.learning_rate = cfg.discriminator.learning_rate;
  dcfg.batch_size = tc.b;
  dcfg.update_freq = tc.U;
  Discriminator d = make_discriminator(
      build_net(cfg.discriminator, task.data_dim, 1, rng, Activation::kNone), dcfg);

  std::optional<MlpNet> model;
  try {
    switch (cfg.algorithm) {
      case Algorithm::kCfg:
      case Algorithm::kIcfg: {
        GeneratorStack g0;
        if (task.p0) {
          g0.base = MlpNet({LayerSpec::linear(task.data_dim, task.data_dim)});
          g0.base.weights(0).setIdentity();
          g0.base.bias(0) = task.p0->components().front().mean;
        } else {
          g0.base = MlpNet({LayerSpec::projection(task.prior.dim, task.data_dim)});
          g0.base.init_gaussian(rng, 0.01);
        }
        const Matrix z = prior_sample(task.prior, rng, tc.pool_size);
        if (cfg.algorithm == Algorithm::kCfg) {
          outcome.metrics = cfg_run(task.real, std::move(g0), std::move(d), z, tc, rng, eval).metrics;
        } else {
          InputPool pool = make_pool(g0, z);
          outcome.metrics = icfg_run(task.real, pool, g0, d, tc, tc.outer_iterations, rng, eval);
        }
        break;
      }
      case Algorithm::kXicfg: {
        ApproximatorSpec spec;
        spec.hidden = cfg.approximator.hidden;
        spec.hidden_act = cfg.approximator.activation;
        spec.output_act = cfg.approximator.output;
        spec.init_stddev = cfg.approximator.init_stddev;
        spec.init_pool = tc.pool_size;
        spec.distill.epoch_cap = cfg.distill_epochs;
        spec.distill.batch_size = tc.b;
        spec.distill.learning_rate = cfg.approximator.learning_rate;
        ApproximatorInit init = approximator_init(task.prior, task.data_dim, spec, rng);
        QualityFn quality;
        if (classifier) quality = [&](const Matrix& x) { return mode_score(*classifier, x).score; };
        const XicfgResult res = xicfg_run(task.real, task.prior, init.approx, d, tc, rng, eval, quality);
        outcome.metrics = res.metrics;
        if (res.degradation_warnings > 0)
          std::cerr << "warning: compression degraded the mode score by more than 50% in "
                    << res.degradation_warnings << " outer iteration(s)\n";
        model = init.approx.net;
        break;
      }
      case Algorithm::kGan0:
      case Algorithm::kGan1: {
        GanGenerator g;
        g.net = build_net(cfg.approximator, task.prior.dim, task.data_dim, rng, cfg.approximator.output);
        g.optimizer.learning_rate = cfg.approximator.learning_rate;
        outcome.metrics =
            gan_run(task.real, task.prior, d, g, tc, cfg.algorithm == Algorithm::kGan1, rng, eval).metrics;
        model = g.net;
        break;
      }
    }
  } catch (const DivergenceError& e) {
    outcome.exit_code = 2;
    outcome.message = e.what();
    outcome.metrics = captured;
  }

  write_text(out_dir / "metrics.csv", metrics_csv(outcome.metrics, cfg.record_wall_time));
  if (last_iter >= 0 && dumped_iter != last_iter) dump(last_iter, last_samples);
  if (model) save_model((out_dir / "model.bin").string(), *model);
  return outcome;
}

SweepOutcome run_sweep(const ExperimentConfig& base, const std::string& parameter,
                       const std::vector<std::string>& values) {
  static const std::map<std::string, std::vector<std::string>> kSweepable = {
      {"eta", {"train.eta"}},
      {"T", {"train.T"}},
      {"U", {"train.U"}},
      {"lr", {"discriminator.lr", "approximator.lr"}},
  };
  const auto it = kSweepable.find(parameter);
  if (it == kSweepable.end()) throw ConfigError("parameter '" + parameter + "' is not sweepable (eta, T, U, lr)");
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  SweepOutcome out;
  const fs::path root(base.output_dir);
  fs::create_directories(root);
  std::string summary = parameter + ",exit_code,final_kl,final_mode_score\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig child = base;
    for (const std::string& key : it->second) set_config_value(child, key, values[i], "sweep value");
    child.seed = base.seed + i;
    child.output_dir = (root / (parameter + "_" + values[i])).string();
    RunOutcome r = run_experiment(child);
    auto last = [&](auto member) -> std::string {
      if (r.metrics.empty() || !(r.metrics.back().*member)) return "";
      return fmt_metric(*(r.metrics.back().*member));
    };
    summary += values[i] + "," + std::to_string(r.exit_code) + "," + last(&MetricsRecord::kl) + "," +
               last(&MetricsRecord::mode_score) + "\n";
    out.runs.push_back(std::move(r));
  }
  out.summary_path = (root / "summary.csv").string();
  write_text(out.summary_path, summary);
  return out;
}

}  // namespace cfgan
