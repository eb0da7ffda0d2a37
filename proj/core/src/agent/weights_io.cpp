#include "dtcell/agent/weights_io.hpp"

#include <algorithm>
#include <cmath>

#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/error.hpp"

namespace dtcell::agent {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'C', 'W'};

struct RawTensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;
};

void put_tensor(BinaryWriter& w, const std::string& name, const std::vector<std::size_t>& dims,
                std::span<const double> values) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.put_raw(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.put<std::uint64_t>(d);
  for (double v : values) w.put<float>(static_cast<float>(v));
}

}  // namespace

std::string encode_weights(const PolicyParameters& params) {
  BinaryWriter w;
  w.put_raw({kMagic, 4});
  w.put<std::uint32_t>(kWeightsFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.tensors().size() + 1));
  for (const auto& spec : params.tensors()) put_tensor(w, spec.name, spec.shape, params.tensor(spec.name));
  const auto& vn = params.value_normalizer();
  const double norm[3] = {vn.mean, vn.stddev, vn.initialized ? 1.0 : 0.0};
  put_tensor(w, "value_norm", {3}, norm);
  return w.take();
}

PolicyParameters decode_weights(const std::string& bytes) {
  BinaryReader r(bytes);
  if (r.get_raw(4) != std::string_view(kMagic, 4)) throw ParseError("weights: bad magic");
  if (r.get<std::uint32_t>() != kWeightsFormatVersion) throw ParseError("weights: unsupported version");
  const auto count = r.get<std::uint32_t>();
  std::vector<RawTensor> raw;
  for (std::uint32_t i = 0; i < count; ++i) {
    RawTensor t;
    t.name = std::string(r.get_raw(r.get<std::uint32_t>()));
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw ParseError("weights: implausible tensor rank");
    std::uint64_t size = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.get<std::uint64_t>());
      size *= t.dims.back();
    }
    if (size > bytes.size()) throw ParseError("truncated binary stream");
    t.data.resize(size);
    for (auto& v : t.data) v = r.get<float>();
    raw.push_back(std::move(t));
  }
  if (!r.at_end()) throw ParseError("weights: trailing bytes");

  auto find = [&](const std::string& name) -> const RawTensor& {
    for (const auto& t : raw)
      if (t.name == name) return t;
    throw ParseError("weights: missing tensor " + name);
  };
  const auto& e1 = find("embed1.weight");
  if (e1.dims.size() != 2 || e1.dims[1] % 3 != 0) throw ParseError("weights: bad embed1.weight shape");
  NetworkShape shape{static_cast<int>(e1.dims[1] / 3), static_cast<int>(e1.dims[0])};
  auto params = PolicyParameters::zeros(shape);
  for (const auto& spec : params.tensors()) {
    const auto& t = find(spec.name);
    if (t.dims.size() != spec.shape.size() || !std::equal(t.dims.begin(), t.dims.end(), spec.shape.begin()))
      throw ParseError("weights: shape mismatch for " + spec.name);
    auto dst = params.tensor(spec.name);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = t.data[i];
  }
  const auto& vn = find("value_norm");
  if (vn.data.size() != 3) throw ParseError("weights: bad value_norm");
  params.value_normalizer() = {vn.data[0], vn.data[1], vn.data[2] != 0.0f};
  return params;
}

void save_weights(const PolicyParameters& params, const std::string& path) {
  write_file_bytes(path, encode_weights(params));
}

PolicyParameters load_weights(const std::string& path) { return decode_weights(read_file_bytes(path)); }

}  // namespace dtcell::agent
