#include "sscvox/net/checkpoint.hpp"

#include <cmath>
#include <map>

#include "sscvox/bytes.hpp"
#include "sscvox/io.hpp"

namespace sscvox::net {
namespace {

constexpr std::string_view kMagic = "NET1";
constexpr std::string_view kConfigName = "__config__";
constexpr std::uint32_t kMaxRank = 8;

struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void put_tensor(std::string& out, const std::string& name, const std::vector<std::uint32_t>& dims,
                const std::vector<float>& values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::uint32_t d : dims) put_u32(out, d);
  for (float v : values) put_f32(out, v);
}

std::vector<std::uint32_t> dims_of(const Shape5& s) {
  return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
          static_cast<std::uint32_t>(s.d), static_cast<std::uint32_t>(s.h),
          static_cast<std::uint32_t>(s.w)};
}

std::vector<Param*> all_tensors(MiniSpawn& net) {
  auto out = net.params();
  for (Param* b : net.buffers()) out.push_back(b);
  return out;
}

std::vector<float> config_values(const MiniSpawnConfig& c) {
  return {static_cast<float>(c.output_dims[0]), static_cast<float>(c.output_dims[1]),
          static_cast<float>(c.output_dims[2]), static_cast<float>(c.tsdf_channels),
          static_cast<float>(c.prior_channels), static_cast<float>(c.branch_width),
          static_cast<float>(c.fused_width),    static_cast<float>(c.deep_width),
          static_cast<float>(c.classes)};
}

MiniSpawnConfig config_from(const RawTensor& t) {
  if (t.values.size() != 9) throw ValidationError("checkpoint: malformed config tensor");
  int v[9];
  for (int i = 0; i < 9; ++i) {
    const float f = t.values[i];
    if (!(f >= 1.0f && f <= 4096.0f) || std::floor(f) != f) {
      throw ValidationError("checkpoint: malformed config tensor");
    }
    v[i] = static_cast<int>(f);
  }
  MiniSpawnConfig c;
  c.output_dims = {v[0], v[1], v[2]};
  c.tsdf_channels = v[3];
  c.prior_channels = v[4];
  c.branch_width = v[5];
  c.fused_width = v[6];
  c.deep_width = v[7];
  c.classes = v[8];
  try {
    c.validate();
  } catch (const Error& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

}  // namespace

std::string encode_checkpoint(MiniSpawn& net) {
  const auto tensors = all_tensors(net);
  std::string out(kMagic);
  put_u32(out, static_cast<std::uint32_t>(tensors.size() + 1));
  put_tensor(out, std::string(kConfigName), {9}, config_values(net.config()));
  for (Param* p : tensors) {
    std::vector<float> values(p->value.data().begin(), p->value.data().end());
    put_tensor(out, p->name, dims_of(p->value.shape()), values);
  }
  return out;
}

std::unique_ptr<MiniSpawn> decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.take(4) != kMagic) throw ValidationError("not a NET1 checkpoint");
  const std::uint32_t count = r.u32();
  std::map<std::string, RawTensor, std::less<>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name(r.take(name_len));
    RawTensor t;
    const std::uint32_t rank = r.u32();
    if (rank > kMaxRank) throw ValidationError("checkpoint: tensor rank too large");
    std::uint64_t elements = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.u32());
      elements *= t.dims.back();
      if (elements * 4 > r.remaining()) throw ValidationError("truncated file");
    }
    t.values.resize(elements);
    for (float& v : t.values) v = r.f32();
    if (!tensors.emplace(std::move(name), std::move(t)).second) {
      throw ValidationError("checkpoint: duplicate tensor name");
    }
  }
  if (r.remaining() != 0) throw ValidationError("checkpoint: trailing bytes");
  const auto cfg_it = tensors.find(kConfigName);
  if (cfg_it == tensors.end()) throw ValidationError("checkpoint: missing config tensor");

  auto net = std::make_unique<MiniSpawn>(config_from(cfg_it->second));
  const auto targets = all_tensors(*net);
  if (tensors.size() != targets.size() + 1) {
    throw ValidationError("checkpoint: tensor count does not match the configuration");
  }
  for (Param* p : targets) {
    const auto it = tensors.find(p->name);
    if (it == tensors.end()) throw ValidationError("checkpoint: missing tensor " + p->name);
    if (it->second.dims != dims_of(p->value.shape())) {
      throw ValidationError("checkpoint: shape mismatch for " + p->name);
    }
    std::copy(it->second.values.begin(), it->second.values.end(), p->value.data().begin());
  }
  return net;
}

void save_checkpoint(const std::filesystem::path& path, MiniSpawn& net) {
  atomic_write(path, encode_checkpoint(net));
}

std::unique_ptr<MiniSpawn> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace sscvox::net
