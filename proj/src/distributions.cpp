#include "cfgan/distributions.hpp"

#include "cfgan/errors.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>

namespace cfgan {

namespace {

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components) : components_(std::move(components)) {
  if (components_.empty()) throw ConfigError("mixture needs at least one component");
  dim_ = components_.front().mean.size();
  if (dim_ <= 0) throw ConfigError("mixture dimension must be positive");
  double total = 0.0;
  for (const Component& c : components_) {
    if (c.mean.size() != dim_ || c.stddev.size() != dim_)
      throw ConfigError("mixture components must share one dimension");
    if ((c.stddev.array() <= 0.0).any()) throw ConfigError("mixture stddev must be positive");
    if (c.weight < 0.0) throw ConfigError("mixture weights must be non-negative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

Vector GaussianMixture::component_log_terms(const Vector& x) const {
  if (x.size() != dim_) throw ConfigError("point dimension does not match mixture");
  static const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
  Vector terms(static_cast<Index>(components_.size()));
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const Component& c = components_[k];
    if (c.weight == 0.0) {
      terms[static_cast<Index>(k)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Vector u = (x - c.mean).cwiseQuotient(c.stddev);
    terms[static_cast<Index>(k)] = std::log(c.weight) - 0.5 * u.squaredNorm() -
                                   c.stddev.array().log().sum() - static_cast<double>(dim_) * kHalfLog2Pi;
  }
  return terms;
}

double GaussianMixture::log_pdf(const Vector& x) const { return log_sum_exp(component_log_terms(x)); }

double GaussianMixture::pdf(const Vector& x) const { return std::exp(log_pdf(x)); }

Vector GaussianMixture::responsibilities(const Vector& x) const {
  const Vector terms = component_log_terms(x);
  return (terms.array() - log_sum_exp(terms)).exp().matrix();
}

Vector GaussianMixture::grad_log_pdf(const Vector& x) const {
  const Vector r = responsibilities(x);
  Vector g = Vector::Zero(dim_);
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const Component& c = components_[k];
    g -= r[static_cast<Index>(k)] * (x - c.mean).cwiseQuotient(c.stddev.cwiseAbs2());
  }
  return g;
}

Vector GaussianMixture::log_pdf(const Matrix& points) const {
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) out[i] = log_pdf(Vector(points.row(i).transpose()));
  return out;
}

double mixture_pdf(const GaussianMixture& m, const Vector& x) { return m.pdf(x); }

Vector mixture_grad_log_pdf(const GaussianMixture& m, const Vector& x) { return m.grad_log_pdf(x); }

LogDensity log_density(const GaussianMixture& m) {
  return [m](const Matrix& points) { return m.log_pdf(points); };
}

LabelledSample mixture_sample_labelled(const GaussianMixture& m, Rng& rng, Index n) {
  if (n < 1) throw ConfigError("sample size must be at least 1");
  std::vector<double> weights;
  for (const auto& c : m.components()) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  LabelledSample s;
  s.points.resize(n, m.dim());
  s.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int k = pick(rng);
    const auto& c = m.components()[static_cast<std::size_t>(k)];
    for (Index j = 0; j < m.dim(); ++j) s.points(i, j) = c.mean[j] + c.stddev[j] * normal(rng);
    s.labels[static_cast<std::size_t>(i)] = k;
  }
  return s;
}

Matrix mixture_sample(const GaussianMixture& m, Rng& rng, Index n) {
  return mixture_sample_labelled(m, rng, n).points;
}

Matrix prior_sample(const Prior& p, Rng& rng, Index n) {
  if (n < 1) throw ConfigError("sample size must be at least 1");
  if (p.dim < 1) throw ConfigError("prior dimension must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, p.dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p.dim; ++j) z(i, j) = normal(rng);
  return z;
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path + "'", 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& path) {
  if (offset + 4 > buf.size()) throw IngestionError("truncated IDX header in '" + path + "'", offset);
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

RealDataset load_idx(const std::string& images_path, const std::optional<std::string>& labels_path) {
  const std::vector<unsigned char> img = read_file(images_path);
  if (read_be32(img, 0, images_path) != 0x00000803u)
    throw IngestionError("bad IDX image magic in '" + images_path + "'", 0);
  const std::uint64_t count = read_be32(img, 4, images_path);
  const std::uint64_t rows = read_be32(img, 8, images_path);
  const std::uint64_t cols = read_be32(img, 12, images_path);
  constexpr std::size_t kHeader = 16;
  const std::uint64_t pixels = rows * cols;
  if (rows != 0 && cols != 0 && (pixels / rows != cols || count > std::numeric_limits<std::uint64_t>::max() / pixels))
    throw IngestionError("IDX dimensions overflow in '" + images_path + "'", 4);
  if (pixels > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()) ||
      count > static_cast<std::uint64_t>(std::numeric_limits<Index>::max()))
    throw IngestionError("IDX dimensions overflow in '" + images_path + "'", 4);
  const std::uint64_t need = kHeader + count * pixels;
  if (img.size() < need)
    throw IngestionError("truncated IDX image data in '" + images_path + "'", img.size());

  RealDataset ds;
  ds.points.resize(static_cast<Index>(count), static_cast<Index>(pixels));
  for (std::uint64_t i = 0; i < count; ++i)
    for (std::uint64_t j = 0; j < pixels; ++j)
      ds.points(static_cast<Index>(i), static_cast<Index>(j)) =
          static_cast<double>(img[kHeader + i * pixels + j]) / 127.5 - 1.0;

  if (labels_path) {
    const std::vector<unsigned char> lab = read_file(*labels_path);
    if (read_be32(lab, 0, *labels_path) != 0x00000801u)
      throw IngestionError("bad IDX label magic in '" + *labels_path + "'", 0);
    const std::uint64_t n_labels = read_be32(lab, 4, *labels_path);
    if (n_labels != count)
      throw IngestionError("label count " + std::to_string(n_labels) + " does not match image count " +
                               std::to_string(count),
                           4);
    if (lab.size() < 8 + n_labels)
      throw IngestionError("truncated IDX label data in '" + *labels_path + "'", lab.size());
    ds.labels.reserve(n_labels);
    for (std::uint64_t i = 0; i < n_labels; ++i) ds.labels.push_back(lab[8 + i]);
  }
  return ds;
}

GaussianMixture standard_gaussian(Index dim) {
  return GaussianMixture({{1.0, Vector::Zero(dim), Vector::Ones(dim)}});
}

GaussianMixture shifted_gaussian(Index dim, double shift) {
  return GaussianMixture({{1.0, Vector::Constant(dim, shift), Vector::Ones(dim)}});
}

GaussianMixture ring_mixture(int modes, double radius, double stddev) {
  if (modes < 1) throw ConfigError("ring needs at least one mode");
  std::vector<GaussianMixture::Component> comps;
  // Weights are assigned so that they sum to exactly 1 in floating point.
  double assigned = 0.0;
  for (int k = 0; k < modes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / modes;
    Vector mean(2);
    mean << radius * std::cos(angle), radius * std::sin(angle);
    const double w = (k + 1 == modes) ? 1.0 - assigned : 1.0 / modes;
    assigned += w;
    comps.push_back({w, mean, Vector::Constant(2, stddev)});
  }
  return GaussianMixture(std::move(comps));
}

}  // namespace cfgan
