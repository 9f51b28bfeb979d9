#include "cfgan/potential.hpp"

namespace cfgan {

Vector potential_values(const Potential& d, const Matrix& points) {
  if (const auto* net = std::get_if<MlpNet>(&d)) return forward_scalar(*net, points);
  const auto& field = std::get<AnalyticField>(d);
  Vector out(points.rows());
  for (Index i = 0; i < points.rows(); ++i) out[i] = field.value(points.row(i).transpose());
  return out;
}

Matrix potential_gradients(const Potential& d, const Matrix& points) {
  if (const auto* net = std::get_if<MlpNet>(&d)) return input_gradients(*net, points);
  const auto& field = std::get<AnalyticField>(d);
  Matrix out(points.rows(), points.cols());
  for (Index i = 0; i < points.rows(); ++i) out.row(i) = field.gradient(points.row(i).transpose()).transpose();
  return out;
}

}  // namespace cfgan
