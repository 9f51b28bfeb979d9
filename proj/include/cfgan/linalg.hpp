#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace cfgan {

using Index = Eigen::Index;

/// Dense matrix of dynamic size, templated on scalar type. Batches of points
/// are stored one point per row.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A column vector of dynamic size, templated on scalar type.
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Every random draw in the library goes through this engine so that runs are
/// a pure function of the configured 64-bit seed.
using Rng = std::mt19937_64;

}  // namespace cfgan
