#pragma once

#include "cfgan/mlp.hpp"

#include <iosfwd>
#include <string>

namespace cfgan {

/// Model file layout (all integers and floats little-endian):
///
///   "CFG1"                      4-byte magic
///   u32 layer_count
///   per layer: u32 kind, u64 in_dim, u64 out_dim, f64 slope
///              kind: 0 linear, 1 projection, 2 relu, 3 leaky_relu, 4 tanh
///   u64 param_count
///   f64 x param_count           parameters in declaration order
void write_model(std::ostream& out, const MlpNet& net);
MlpNet read_model(std::istream& in);

void save_model(const std::string& path, const MlpNet& net);
MlpNet load_model(const std::string& path);

}  // namespace cfgan
