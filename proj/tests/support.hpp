#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "unroll/image.hpp"
#include "unroll/scene_spec.hpp"
#include "unroll/synth.hpp"

namespace test {

// Smooth random texture: a few random sinusoids per channel, values in [0.1, 0.9].
inline unroll::Image texture(int width, int height, int channels, std::uint64_t seed, double period = 9.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  unroll::Image img(width, height, channels);
  for (int c = 0; c < channels; ++c) {
    double fx[4], fy[4], ph[4];
    for (int i = 0; i < 4; ++i) {
      const double angle = u(rng) * 6.283185307179586;
      const double f = 6.283185307179586 / (period * (0.7 + 0.6 * u(rng)));
      fx[i] = f * std::cos(angle);
      fy[i] = f * std::sin(angle);
      ph[i] = u(rng) * 6.283185307179586;
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (int i = 0; i < 4; ++i) v += std::sin(fx[i] * x + fy[i] * y + ph[i]);
        img.at(x, y, c) = static_cast<float>(0.5 + 0.1 * v);
      }
    }
  }
  return img;
}

// Full-canvas noise background translating at (vx, vy) px/frame.
inline unroll::SceneSpec translating_scene(int width, int height, int frames, double vx, double vy,
                                           int channels = 3, double scale = 7.0) {
  unroll::SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.frames = frames;
  spec.channels = channels;
  spec.oversampling = height;
  spec.background.texture.kind = unroll::Texture::Kind::noise;
  spec.background.texture.scale = scale;
  spec.background.texture.contrast = 1.5;
  unroll::Motion m;
  m.kind = unroll::Motion::Kind::translate;
  m.vx = vx;
  m.vy = vy;
  spec.background.motions.push_back(m);
  return spec;
}

inline unroll::SceneSpec static_scene(int width, int height, int frames) {
  unroll::SceneSpec spec = translating_scene(width, height, frames, 0.0, 0.0);
  spec.background.motions.clear();
  unroll::Element disc;
  disc.shape.kind = unroll::Shape::Kind::disc;
  disc.shape.radius = width / 5.0;
  disc.x = width / 2.0;
  disc.y = height / 2.0;
  disc.texture.kind = unroll::Texture::Kind::checker;
  disc.texture.scale = 4.0;
  spec.elements.push_back(disc);
  return spec;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("unroll-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace test
