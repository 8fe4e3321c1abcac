#pragma once

#include <filesystem>
#include <string>

#include "unroll/image.hpp"
#include "unroll/volume.hpp"

namespace unroll {

// PNG, gray or RGB, 8 or 16 bits per sample. Values are mapped to [0, 1].
Image read_png(const std::filesystem::path& path);
// Values are clamped to [0, 1] and rounded to the nearest code.
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);

// The values write_png followed by read_png would produce.
Image quantize(const Image& image, int bit_depth);
VideoClip quantize(const VideoClip& clip, int bit_depth);

struct FrameManifest {
  int width = 0;
  int height = 0;
  int count = 0;
  Shutter shutter = Shutter::global;
  int rows = 0;
  int channels = 0;
  int bit_depth = 8;
  int time_offset = 0;  // clip first_time
  Readout readout = Readout::vertical;
};

std::string manifest_to_json(const FrameManifest& manifest);
FrameManifest parse_manifest(const std::string& text);

// Directory of frame_%06d.png files plus manifest.json.
void save_clip(const std::filesystem::path& dir, const VideoClip& clip, int bit_depth = 8);
VideoClip load_clip(const std::filesystem::path& dir);
FrameManifest load_manifest(const std::filesystem::path& dir);

std::string frame_filename(int index);

}  // namespace unroll
