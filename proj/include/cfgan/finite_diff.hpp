#pragma once

#include "cfgan/errors.hpp"
#include "cfgan/linalg.hpp"

namespace cfgan {

/// Central-difference gradient of a scalar function. Used as the reference
/// against which the analytic gradients are checked.
template <typename Scalar, typename F>
VectorX<Scalar> finite_diff_grad(F&& f, const VectorX<Scalar>& x, Scalar h) {
  if (!(h > Scalar(0))) throw ConfigError("finite difference step must be positive");
  VectorX<Scalar> g(x.size());
  VectorX<Scalar> probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar xi = x[i];
    probe[i] = xi + h;
    const Scalar up = f(probe);
    const Scalar hi = probe[i];
    probe[i] = xi - h;
    const Scalar down = f(probe);
    const Scalar lo = probe[i];
    probe[i] = xi;
    g[i] = (up - down) / (hi - lo);
  }
  return g;
}

}  // namespace cfgan
