#pragma once

#include "cfgan/linalg.hpp"
#include "cfgan/mlp.hpp"

#include <functional>
#include <variant>

namespace cfgan {

/// A discriminator given in closed form (value and gradient), e.g. the ideal
/// log-density ratio between two analytic mixtures.
struct AnalyticField {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// Anything a functional-gradient step can follow: a trained network or an
/// analytic oracle.
using Potential = std::variant<MlpNet, AnalyticField>;

Vector potential_values(const Potential& d, const Matrix& points);

/// Row i is the gradient of the potential at row i of `points`.
Matrix potential_gradients(const Potential& d, const Matrix& points);

}  // namespace cfgan
