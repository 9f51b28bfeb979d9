#pragma once

#include "cfgan/errors.hpp"
#include "cfgan/linalg.hpp"

#include <cmath>

namespace cfgan {

/// Running squared-gradient averages for rmsprop. `accum` is sized lazily on
/// the first step.
template <typename Scalar>
struct RmspropState {
  VectorX<Scalar> accum;
  Scalar decay = Scalar(0.9);
  Scalar epsilon = Scalar(1e-8);
  Scalar learning_rate = Scalar(1e-3);
};

///   a <- decay * a + (1 - decay) * g^2
///   p <- p - lr * g / sqrt(a + eps)
template <typename Scalar>
void rmsprop_step(VectorX<Scalar>& params, const VectorX<Scalar>& grads, RmspropState<Scalar>& state) {
  if (grads.size() != params.size()) throw ConfigError("rmsprop: gradient and parameter sizes differ");
  if (state.accum.size() == 0) state.accum = VectorX<Scalar>::Zero(params.size());
  if (state.accum.size() != params.size()) throw ConfigError("rmsprop: accumulator size differs from parameters");
  state.accum = state.decay * state.accum + (Scalar(1) - state.decay) * grads.cwiseAbs2();
  params.array() -= state.learning_rate * grads.array() / (state.accum.array() + state.epsilon).sqrt();
}

}  // namespace cfgan
