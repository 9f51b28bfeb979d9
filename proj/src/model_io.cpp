#include "cfgan/model_io.hpp"

#include "cfgan/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace cfgan {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'F', 'G', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in, std::uint64_t& offset) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IngestionError("truncated model file", offset);
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  offset += sizeof(T);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

std::uint32_t kind_code(LayerKind k) {
  switch (k) {
    case LayerKind::kLinear:
      return 0;
    case LayerKind::kProjection:
      return 1;
    case LayerKind::kRelu:
      return 2;
    case LayerKind::kLeakyRelu:
      return 3;
    case LayerKind::kTanh:
      return 4;
  }
  return 0;
}

}  // namespace

void write_model(std::ostream& out, const MlpNet& net) {
  out.write(kMagic.data(), kMagic.size());
  put_le(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const LayerSpec& l : net.layers()) {
    put_le(out, kind_code(l.kind));
    put_le(out, static_cast<std::uint64_t>(l.in_dim));
    put_le(out, static_cast<std::uint64_t>(l.out_dim));
    put_le(out, l.slope);
  }
  put_le(out, static_cast<std::uint64_t>(net.param_count()));
  for (Index i = 0; i < net.param_count(); ++i) put_le(out, net.params()[i]);
}

MlpNet read_model(std::istream& in) {
  std::uint64_t offset = 0;
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IngestionError("bad model magic", 0);
  offset = 4;
  const auto n_layers = get_le<std::uint32_t>(in, offset);
  std::vector<LayerSpec> layers;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint64_t at = offset;
    const auto kind = get_le<std::uint32_t>(in, offset);
    const auto in_dim = get_le<std::uint64_t>(in, offset);
    const auto out_dim = get_le<std::uint64_t>(in, offset);
    const auto slope = get_le<double>(in, offset);
    if (kind > 4) throw IngestionError("unknown layer kind " + std::to_string(kind), at);
    if (in_dim == 0 || out_dim == 0 || in_dim > (1u << 30) || out_dim > (1u << 30))
      throw IngestionError("layer dimension out of range", at + 4);
    static constexpr LayerKind kKinds[] = {LayerKind::kLinear, LayerKind::kProjection, LayerKind::kRelu,
                                           LayerKind::kLeakyRelu, LayerKind::kTanh};
    layers.push_back({kKinds[kind], static_cast<Index>(in_dim), static_cast<Index>(out_dim), slope});
  }
  MlpNet net;
  try {
    net = MlpNet(std::move(layers));
  } catch (const ConfigError& e) {
    throw IngestionError(std::string("invalid layer stack: ") + e.what(), 8);
  }
  const std::uint64_t at = offset;
  const auto count = get_le<std::uint64_t>(in, offset);
  if (count != static_cast<std::uint64_t>(net.param_count()))
    throw IngestionError("parameter count does not match layer specs", at);
  for (Index i = 0; i < net.param_count(); ++i) net.mutable_params()[i] = get_le<double>(in, offset);
  return net;
}

void save_model(const std::string& path, const MlpNet& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file '" + path + "'");
  write_model(out, net);
}

MlpNet load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open model file '" + path + "'", 0);
  return read_model(in);
}

}  // namespace cfgan
