#include "unroll/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <vector>

#include "unroll/errors.hpp"

namespace unroll {

namespace {

using nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

int max_code(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InputError("bit depth must be 8 or 16");
  return bit_depth == 8 ? 255 : 65535;
}

int to_code(float v, int maxv) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<int>(std::lround(static_cast<double>(c) * maxv));
}

float from_code(int code, int maxv) { return static_cast<float>(static_cast<double>(code) / maxv); }

}  // namespace

Image read_png(const std::filesystem::path& path) {
  File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ResourceError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ResourceError("libpng initialization failed");
  }
  Image image;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": corrupt PNG data");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // read 16-bit samples in host (little-endian) order
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": unsupported channel layout");
  }
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  image = Image(width, height, channels);
  const std::size_t samples = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    auto out = image.row(y);
    for (std::size_t i = 0; i < samples; ++i) {
      if (depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, rows[y] + 2 * i, 2);
        out[i] = from_code(v, 65535);
      } else {
        out[i] = from_code(rows[y][i], 255);
      }
    }
  }
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image, int bit_depth) {
  const int maxv = max_code(bit_depth);
  if (image.channels() != 1 && image.channels() != 3) throw InputError("PNG output needs 1 or 3 channels");
  File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ResourceError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ResourceError("libpng initialization failed");
  }
  const int width = image.width();
  const int height = image.height();
  const int channels = image.channels();
  const std::size_t bytes = bit_depth / 8;
  std::vector<png_byte> buffer(static_cast<std::size_t>(width) * height * channels * bytes);
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const int code = to_code(px[i], maxv);
    if (bytes == 1) {
      buffer[i] = static_cast<png_byte>(code);
    } else {
      buffer[2 * i] = static_cast<png_byte>(code >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(code & 0xff);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * channels * bytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ResourceError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image quantize(const Image& image, int bit_depth) {
  const int maxv = max_code(bit_depth);
  Image out = image;
  for (float& v : out.pixels()) v = from_code(to_code(v, maxv), maxv);
  return out;
}

VideoClip quantize(const VideoClip& clip, int bit_depth) {
  VideoClip out = clip;
  for (Image& f : out.frames) f = quantize(f, bit_depth);
  return out;
}

NLOHMANN_JSON_SERIALIZE_ENUM(Shutter, {{Shutter::global, "GS"}, {Shutter::rolling, "RS"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Readout, {{Readout::vertical, "vertical"}, {Readout::diagonal, "diagonal"}})

std::string manifest_to_json(const FrameManifest& m) {
  const json j{{"width", m.width},         {"height", m.height},       {"count", m.count},
               {"shutter", m.shutter},     {"rows", m.rows},           {"channels", m.channels},
               {"bit_depth", m.bit_depth}, {"time_offset", m.time_offset}, {"readout", m.readout}};
  return j.dump(2);
}

FrameManifest parse_manifest(const std::string& text) {
  FrameManifest m;
  try {
    const json j = json::parse(text);
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.count = j.at("count").get<int>();
    m.channels = j.at("channels").get<int>();
    m.shutter = j.value("shutter", Shutter::global);
    m.rows = j.value("rows", 0);
    m.bit_depth = j.value("bit_depth", 8);
    m.time_offset = j.value("time_offset", 0);
    m.readout = j.value("readout", Readout::vertical);
  } catch (const json::exception& e) {
    throw FormatError(std::string("frame manifest: ") + e.what());
  }
  if (m.width < 1 || m.height < 1 || m.count < 0 || (m.channels != 1 && m.channels != 3)) {
    throw FormatError("frame manifest: invalid geometry");
  }
  if (m.bit_depth != 8 && m.bit_depth != 16) throw FormatError("frame manifest: bit_depth must be 8 or 16");
  return m;
}

std::string frame_filename(int index) {
  char name[32];
  std::snprintf(name, sizeof name, "frame_%06d.png", index);
  return name;
}

void save_clip(const std::filesystem::path& dir, const VideoClip& clip, int bit_depth) {
  clip.validate();
  std::filesystem::create_directories(dir);
  FrameManifest m;
  m.width = clip.width();
  m.height = clip.height();
  m.count = clip.frame_count();
  m.shutter = clip.shutter;
  m.rows = clip.readout_rows();
  m.channels = clip.channels();
  m.bit_depth = bit_depth;
  m.time_offset = clip.first_time;
  m.readout = clip.readout;
  for (int k = 0; k < clip.frame_count(); ++k) write_png(dir / frame_filename(k), clip.frames[k], bit_depth);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw ResourceError("cannot write manifest in " + dir.string());
  out << manifest_to_json(m) << '\n';
}

FrameManifest load_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ResourceError("missing manifest.json in " + dir.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str());
}

VideoClip load_clip(const std::filesystem::path& dir) {
  const FrameManifest m = load_manifest(dir);
  VideoClip clip;
  clip.shutter = m.shutter;
  clip.rows = m.rows == m.height ? 0 : m.rows;
  clip.readout = m.readout;
  clip.first_time = m.time_offset;
  clip.frames.reserve(m.count);
  for (int k = 0; k < m.count; ++k) {
    const auto path = dir / frame_filename(k);
    if (!std::filesystem::exists(path)) throw ResourceError("missing frame " + path.string());
    Image f = read_png(path);
    if (f.width() != m.width || f.height() != m.height || f.channels() != m.channels) {
      throw FormatError(path.string() + ": dimensions disagree with manifest");
    }
    clip.frames.push_back(std::move(f));
  }
  if (std::filesystem::exists(dir / frame_filename(m.count))) {
    throw FormatError(dir.string() + ": more frames on disk than the manifest lists");
  }
  return clip;
}

}  // namespace unroll
