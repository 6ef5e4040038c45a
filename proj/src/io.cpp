#include "sscvox/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sscvox/bytes.hpp"

namespace sscvox {
namespace {

constexpr std::string_view kVxlMagic = "VXL1";
constexpr std::string_view kPrbMagic = "PRB1";
constexpr std::size_t kVxlHeaderBytes = 4 + 6 * 4 + 4 * 4;

std::string vxl_header(const GridSpec& spec, int channels, VxlDtype dtype,
                       VxlEncoding encoding) {
  std::string out;
  out.reserve(kVxlHeaderBytes);
  out.append(kVxlMagic);
  put_u32(out, static_cast<std::uint32_t>(channels));
  for (int d : spec.dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(dtype));
  put_u32(out, static_cast<std::uint32_t>(encoding));
  for (int i = 0; i < 3; ++i) put_f32(out, static_cast<float>(spec.origin[i]));
  put_f32(out, static_cast<float>(spec.voxel_size));
  return out;
}

}  // namespace

std::string encode_vxl(const LabelGrid& grid, VxlEncoding encoding) {
  std::string out = vxl_header(grid.spec(), grid.channels(), VxlDtype::kU8, encoding);
  if (encoding == VxlEncoding::kDense) {
    for (std::uint8_t v : grid.data()) out.push_back(static_cast<char>(v));
    return out;
  }
  for (int c = 0; c < grid.channels(); ++c) {
    auto ch = grid.channel(c);
    std::size_t i = 0;
    while (i < ch.size()) {
      std::size_t j = i + 1;
      while (j < ch.size() && ch[j] == ch[i] && j - i < 0xffffffffu) ++j;
      out.push_back(static_cast<char>(ch[i]));
      put_u32(out, static_cast<std::uint32_t>(j - i));
      i = j;
    }
  }
  return out;
}

std::string encode_vxl(const FloatGrid& grid) {
  std::string out =
      vxl_header(grid.spec(), grid.channels(), VxlDtype::kF32, VxlEncoding::kDense);
  out.reserve(out.size() + grid.size() * 4);
  for (float v : grid.data()) put_f32(out, v);
  return out;
}

AnyGrid decode_vxl(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.take(4) != kVxlMagic) throw ValidationError("not a VXL1 file");
  const std::uint32_t channels = r.u32();
  std::array<std::uint32_t, 3> dims{r.u32(), r.u32(), r.u32()};
  const std::uint32_t dtype = r.u32();
  const std::uint32_t encoding = r.u32();
  GridSpec spec;
  for (int k = 0; k < 3; ++k) spec.origin[k] = r.f32();
  spec.voxel_size = r.f32();
  if (channels == 0 || dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
    throw ValidationError("VXL1 header has a zero dimension");
  }
  for (int i = 0; i < 3; ++i) {
    if (dims[i] > (1u << 20)) throw ValidationError("VXL1 dims out of range");
    spec.dims[i] = static_cast<int>(dims[i]);
  }
  if (channels > 4096) throw ValidationError("VXL1 channel count out of range");
  if (!(spec.voxel_size > 0.0) || !std::isfinite(spec.voxel_size) ||
      !spec.origin.allFinite()) {
    throw ValidationError("VXL1 grid placement is invalid");
  }
  const std::size_t per_channel = spec.voxel_count();
  const std::size_t total = per_channel * channels;

  if (dtype == static_cast<std::uint32_t>(VxlDtype::kF32)) {
    if (encoding != static_cast<std::uint32_t>(VxlEncoding::kDense)) {
      throw ValidationError("VXL1 f32 payload must be dense");
    }
    if (r.remaining() != total * 4) throw ValidationError("VXL1 payload size mismatch");
    std::vector<float> data(total);
    for (auto& v : data) v = r.f32();
    return FloatGrid(spec, static_cast<int>(channels), std::move(data));
  }
  if (dtype != static_cast<std::uint32_t>(VxlDtype::kU8)) {
    throw ValidationError("VXL1 dtype must be 0 or 1");
  }
  std::vector<std::uint8_t> data;
  if (encoding == static_cast<std::uint32_t>(VxlEncoding::kDense)) {
    if (r.remaining() != total) throw ValidationError("VXL1 payload size mismatch");
    auto s = r.take(total);
    data.assign(s.begin(), s.end());
  } else if (encoding == static_cast<std::uint32_t>(VxlEncoding::kRle)) {
    data.reserve(total);
    for (std::uint32_t c = 0; c < channels; ++c) {
      std::size_t filled = 0;
      while (filled < per_channel) {
        const std::uint8_t value = r.u8();
        const std::uint32_t run = r.u32();
        if (run == 0) throw ValidationError("VXL1 RLE run of length zero");
        if (run > per_channel - filled) {
          throw ValidationError("VXL1 RLE runs overflow the channel");
        }
        data.insert(data.end(), run, value);
        filled += run;
      }
    }
    if (r.remaining() != 0) throw ValidationError("VXL1 RLE has trailing bytes");
  } else {
    throw ValidationError("VXL1 encoding must be 0 or 1");
  }
  return LabelGrid(spec, static_cast<int>(channels), std::move(data));
}

void write_vxl(const std::filesystem::path& path, const LabelGrid& grid,
               VxlEncoding encoding) {
  atomic_write(path, encode_vxl(grid, encoding));
}

void write_vxl(const std::filesystem::path& path, const FloatGrid& grid) {
  atomic_write(path, encode_vxl(grid));
}

void write_vxl(const std::filesystem::path& path, const VisibilityGrid& grid) {
  atomic_write(path, encode_vxl(to_label_grid(grid)));
}

AnyGrid read_vxl(const std::filesystem::path& path) { return decode_vxl(read_file(path)); }

LabelGrid read_label_vxl(const std::filesystem::path& path) {
  auto any = read_vxl(path);
  if (auto* g = std::get_if<LabelGrid>(&any)) return std::move(*g);
  throw ValidationError(path.string() + ": expected a u8 label volume");
}

FloatGrid read_float_vxl(const std::filesystem::path& path) {
  auto any = read_vxl(path);
  if (auto* g = std::get_if<FloatGrid>(&any)) return std::move(*g);
  throw ValidationError(path.string() + ": expected an f32 volume");
}

VisibilityGrid read_visibility_vxl(const std::filesystem::path& path) {
  return to_visibility_grid(read_label_vxl(path));
}

LabelGrid to_label_grid(const VisibilityGrid& vis) {
  std::vector<std::uint8_t> data(vis.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<std::uint8_t>(vis.data()[i]);
  }
  return LabelGrid(vis.spec(), vis.channels(), std::move(data));
}

VisibilityGrid to_visibility_grid(const LabelGrid& grid) {
  if (grid.channels() != 1) throw ValidationError("visibility volume must have one channel");
  std::vector<Visibility> data(grid.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint8_t v = grid.data()[i];
    if (v != 0 && v != 1 && v != 2 && v != 255) {
      throw ValidationError("invalid visibility state " + std::to_string(v));
    }
    data[i] = static_cast<Visibility>(v);
  }
  return VisibilityGrid(grid.spec(), 1, std::move(data));
}

std::string encode_prb(const ProbMap2D& probs) {
  std::string out;
  out.reserve(16 + probs.values.size() * 4);
  out.append(kPrbMagic);
  put_u32(out, static_cast<std::uint32_t>(probs.width));
  put_u32(out, static_cast<std::uint32_t>(probs.height));
  put_u32(out, static_cast<std::uint32_t>(probs.channels));
  for (float v : probs.values) put_f32(out, v);
  return out;
}

ProbMap2D decode_prb(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.take(4) != kPrbMagic) throw ValidationError("not a PRB1 file");
  const std::uint32_t w = r.u32();
  const std::uint32_t h = r.u32();
  const std::uint32_t c = r.u32();
  if (w == 0 || h == 0 || c == 0 || w > 65536 || h > 65536 || c > 4096) {
    throw ValidationError("PRB1 header dimensions out of range");
  }
  ProbMap2D probs(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  if (r.remaining() != probs.values.size() * 4) {
    throw ValidationError("PRB1 payload size mismatch");
  }
  for (auto& v : probs.values) v = r.f32();
  return probs;
}

void write_prb(const std::filesystem::path& path, const ProbMap2D& probs) {
  atomic_write(path, encode_prb(probs));
}

ProbMap2D read_prb(const std::filesystem::path& path) { return decode_prb(read_file(path)); }

Vec3 SceneConfig::require_origin() const {
  if (!origin) throw ValidationError("config is missing the grid 'origin' key");
  return *origin;
}

SceneConfig parse_config(std::string_view json_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  auto real = [&](const char* key) -> double {
    if (!j.contains(key) || !j[key].is_number()) {
      throw ValidationError(std::string("config key '") + key + "' missing or not a number");
    }
    return j[key].get<double>();
  };
  auto reals = [&](const char* key, std::size_t n) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != n) {
      throw ValidationError(std::string("config key '") + key + "' must be an array of " +
                            std::to_string(n) + " numbers");
    }
    std::vector<double> v;
    for (const auto& e : j[key]) {
      if (!e.is_number()) throw ValidationError(std::string("config key '") + key +
                                                "' holds a non-number");
      v.push_back(e.get<double>());
    }
    return v;
  };

  SceneConfig cfg;
  cfg.intrinsics.fx = real("fx");
  cfg.intrinsics.fy = real("fy");
  cfg.intrinsics.cx = real("cx");
  cfg.intrinsics.cy = real("cy");
  const double w = real("width");
  const double h = real("height");
  if (w != std::floor(w) || h != std::floor(h)) {
    throw ValidationError("config width/height must be integers");
  }
  cfg.intrinsics.width = static_cast<int>(w);
  cfg.intrinsics.height = static_cast<int>(h);
  const auto rot = reals("rotation", 9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) cfg.alignment.rotation(r, c) = rot[r * 3 + c];
  const auto t = reals("translation", 3);
  cfg.alignment.translation = Vec3(t[0], t[1], t[2]);
  if (j.contains("origin")) {
    const auto o = reals("origin", 3);
    cfg.origin = Vec3(o[0], o[1], o[2]);
  }
  cfg.intrinsics.validate();
  cfg.alignment.validate();
  return cfg;
}

SceneConfig read_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

std::string config_to_json(const SceneConfig& config) {
  nlohmann::ordered_json j;
  const auto& k = config.intrinsics;
  j["fx"] = k.fx;
  j["fy"] = k.fy;
  j["cx"] = k.cx;
  j["cy"] = k.cy;
  j["width"] = k.width;
  j["height"] = k.height;
  std::vector<double> rot;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(config.alignment.rotation(r, c));
  j["rotation"] = rot;
  const auto& t = config.alignment.translation;
  j["translation"] = {t.x(), t.y(), t.z()};
  if (config.origin) j["origin"] = {config.origin->x(), config.origin->y(), config.origin->z()};
  return j.dump(2) + "\n";
}

// --- PNG --------------------------------------------------------------------

namespace {

struct PngMemReader {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngMemReader*>(png_get_io_ptr(png));
  if (src->size - src->pos < n) png_error(png, "truncated PNG");
  std::memcpy(out, src->data + src->pos, n);
  src->pos += n;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t n) {
  auto* dst = static_cast<std::string*>(png_get_io_ptr(png));
  dst->append(reinterpret_cast<const char*>(data), n);
}

void png_mem_flush(png_structp) {}

// setjmp-based decoding lives in functions that own no objects with
// destructors; buffers are owned by the caller.
bool decode_gray16(PngMemReader* src, std::vector<std::uint16_t>* out, int* width,
                   int* height, std::vector<unsigned char>* row, char* err) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::strncpy(err, "corrupt PNG data", 63);
    return false;
  }
  png_set_read_fn(png, src, png_mem_read);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::strncpy(err, "depth PNG must be 16-bit single-channel", 63);
    return false;
  }
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::strncpy(err, "interlaced depth PNG not supported", 63);
    return false;
  }
  *width = static_cast<int>(w);
  *height = static_cast<int>(h);
  out->resize(static_cast<std::size_t>(w) * h);
  row->resize(static_cast<std::size_t>(w) * 2);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row->data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      (*out)[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint16_t>(((*row)[2 * x] << 8) | (*row)[2 * x + 1]);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png(std::string* out, int width, int height, int bit_depth, int color_type,
                const unsigned char* rows, std::size_t row_bytes) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, png_mem_write, png_mem_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(rows + static_cast<std::size_t>(y) * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

DepthMap read_depth_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  PngMemReader src{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
  std::vector<std::uint16_t> mm;
  std::vector<unsigned char> row;
  int w = 0, h = 0;
  char err[64] = "cannot decode PNG";
  if (!decode_gray16(&src, &mm, &w, &h, &row, err)) {
    throw ValidationError(path.string() + ": " + err);
  }
  DepthMap depth(w, h);
  for (std::size_t i = 0; i < mm.size(); ++i) depth.values[i] = mm[i] / 1000.0f;
  return depth;
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  depth.validate();
  std::vector<unsigned char> rows(depth.values.size() * 2);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const double mm = std::round(static_cast<double>(depth.values[i]) * 1000.0);
    if (mm > 65535.0) throw ValidationError("depth exceeds the 16-bit millimeter range");
    const auto v = static_cast<std::uint16_t>(mm);
    rows[2 * i] = static_cast<unsigned char>(v >> 8);
    rows[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  std::string out;
  if (!encode_png(&out, depth.width, depth.height, 16, PNG_COLOR_TYPE_GRAY, rows.data(),
                  static_cast<std::size_t>(depth.width) * 2)) {
    throw IoError(path.string() + ": PNG encoding failed");
  }
  atomic_write(path, out);
}

void write_rgb_png(const std::filesystem::path& path, int width, int height,
                   std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw UsageError("RGB buffer size does not match image size");
  }
  std::string out;
  if (!encode_png(&out, width, height, 8, PNG_COLOR_TYPE_RGB, rgb.data(),
                  static_cast<std::size_t>(width) * 3)) {
    throw IoError(path.string() + ": PNG encoding failed");
  }
  atomic_write(path, out);
}

// --- files ------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return std::move(ss).str();
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

}  // namespace sscvox
