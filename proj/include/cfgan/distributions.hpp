#pragma once

#include "cfgan/linalg.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cfgan {

/// Batched log-density: row i of the argument is a point, entry i of the
/// result is its log-density. Used wherever a density is only known
/// procedurally (e.g. a pushforward through functional-gradient steps).
using LogDensity = std::function<Vector(const Matrix&)>;

/// Gaussian mixture with diagonal covariances.
class GaussianMixture {
 public:
  struct Component {
    double weight = 1.0;
    Vector mean;
    Vector stddev;
  };

  GaussianMixture() = default;
  /// Throws ConfigError unless weights sum to 1 (within 1e-12), all stddevs
  /// are positive and all components share a dimension.
  explicit GaussianMixture(std::vector<Component> components);

  Index dim() const { return dim_; }
  const std::vector<Component>& components() const { return components_; }

  double log_pdf(const Vector& x) const;
  double pdf(const Vector& x) const;
  Vector grad_log_pdf(const Vector& x) const;
  Vector log_pdf(const Matrix& points) const;

  /// Posterior component probabilities at x.
  Vector responsibilities(const Vector& x) const;

 private:
  Vector component_log_terms(const Vector& x) const;

  std::vector<Component> components_;
  Index dim_ = 0;
};

double mixture_pdf(const GaussianMixture& m, const Vector& x);
Vector mixture_grad_log_pdf(const GaussianMixture& m, const Vector& x);
LogDensity log_density(const GaussianMixture& m);

struct LabelledSample {
  Matrix points;
  std::vector<int> labels;  // component index per row
};

Matrix mixture_sample(const GaussianMixture& m, Rng& rng, Index n);
LabelledSample mixture_sample_labelled(const GaussianMixture& m, Rng& rng, Index n);

/// Standard Gaussian prior p_z over `dim`-dimensional latent vectors.
struct Prior {
  Index dim = 2;
};

Matrix prior_sample(const Prior& p, Rng& rng, Index n);

/// Real training points, one per row, with optional class labels.
struct RealDataset {
  Matrix points;
  std::vector<int> labels;
};

/// Reads an IDX image file (magic 0x00000803) and optionally an IDX label
/// file (magic 0x00000801). Pixels are mapped from [0,255] to [-1,1].
/// Throws IngestionError with the failing byte offset.
RealDataset load_idx(const std::string& images_path,
                     const std::optional<std::string>& labels_path = std::nullopt);

/// N(0, I) target and N(shift * 1, I) source.
GaussianMixture standard_gaussian(Index dim);
GaussianMixture shifted_gaussian(Index dim, double shift);

/// Equal-weight ring of `modes` isotropic Gaussians in 2D.
GaussianMixture ring_mixture(int modes = 8, double radius = 2.0, double stddev = 0.02);

}  // namespace cfgan
