#include "unroll/plugin.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>

#include "unroll/errors.hpp"
#include "unroll/frame_io.hpp"

namespace unroll {

namespace {

std::atomic<unsigned> request_counter{0};

std::filesystem::path make_request_dir(const PluginOptions& options) {
  const auto parent = options.scratch.empty() ? std::filesystem::temp_directory_path() : options.scratch;
  const auto dir = parent / ("unroll-request-" + std::to_string(::getpid()) + "-" +
                             std::to_string(request_counter.fetch_add(1)));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string result_filename(int index) {
  char name[32];
  std::snprintf(name, sizeof name, "result_%06d.png", index);
  return name;
}

class PluginPair final : public PairInterpolation {
 public:
  PluginPair(const PluginOptions& options, Image a, Image b) : options_(options), a_(std::move(a)), b_(std::move(b)) {}

  Image frame(double tau) const override {
    if (!(tau >= 0.0 && tau <= 1.0)) throw RangeError("interpolation fraction outside [0, 1]");
    if (tau == 0.0) return a_;
    if (tau == 1.0) return b_;
    const double taus[] = {tau};
    prefetch(taus);
    std::lock_guard lock(mutex_);
    return cache_.at(tau);
  }

  void prefetch(std::span<const double> taus) const override {
    std::vector<double> missing;
    {
      std::lock_guard lock(mutex_);
      for (double t : taus) {
        if (t > 0.0 && t < 1.0 && !cache_.contains(t) &&
            std::find(missing.begin(), missing.end(), t) == missing.end()) {
          missing.push_back(t);
        }
      }
    }
    const std::size_t batch = options_.max_batch > 0 ? options_.max_batch : std::max<std::size_t>(missing.size(), 1);
    for (std::size_t start = 0; start < missing.size(); start += batch) {
      const std::vector<double> chunk(missing.begin() + start,
                                      missing.begin() + std::min(missing.size(), start + batch));
      auto frames = run_plugin_request(options_, a_, b_, chunk);
      std::lock_guard lock(mutex_);
      for (std::size_t i = 0; i < chunk.size(); ++i) cache_.emplace(chunk[i], std::move(frames[i]));
    }
  }

 private:
  PluginOptions options_;
  Image a_;
  Image b_;
  mutable std::mutex mutex_;
  mutable std::map<double, Image> cache_;
};

}  // namespace

std::vector<Image> run_plugin_request(const PluginOptions& options, const Image& a, const Image& b,
                                      const std::vector<double>& fractions) {
  require_same_shape(a, b, "plugin endpoints");
  if (options.command.empty()) throw InputError("plugin command is empty");
  const auto dir = make_request_dir(options);
  write_png(dir / "frame_a.png", a, 16);
  write_png(dir / "frame_b.png", b, 16);
  {
    const nlohmann::json manifest{{"width", a.width()},
                                  {"height", a.height()},
                                  {"channels", a.channels()},
                                  {"count", fractions.size()},
                                  {"fractions", fractions}};
    std::ofstream out(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw ResourceError("cannot write plugin manifest in " + dir.string());
  }
  const std::string cmd = options.command + " " + shell_quote(dir.string());
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    if (!options.keep_requests) std::filesystem::remove_all(dir);
    throw ResourceError("plugin command failed (status " + std::to_string(status) + "): " + options.command);
  }
  std::vector<Image> frames;
  frames.reserve(fractions.size());
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const auto path = dir / result_filename(static_cast<int>(i));
    if (!std::filesystem::exists(path)) {
      if (!options.keep_requests) std::filesystem::remove_all(dir);
      throw ResourceError("plugin did not produce " + path.filename().string());
    }
    Image f = read_png(path);
    if (!f.same_shape(a)) {
      if (!options.keep_requests) std::filesystem::remove_all(dir);
      throw FormatError("plugin result " + path.filename().string() + " has the wrong dimensions");
    }
    frames.push_back(std::move(f));
  }
  if (!options.keep_requests) std::filesystem::remove_all(dir);
  return frames;
}

PluginInterpolator::PluginInterpolator(PluginOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw InputError("plugin command is empty");
}

InterpolatorCapabilities PluginInterpolator::capabilities() const {
  return {0.0, options_.max_batch, true};
}

std::unique_ptr<PairInterpolation> PluginInterpolator::prepare(const Image& a, const Image& b,
                                                               const PairContext&) const {
  require_same_shape(a, b, "interpolation endpoints");
  return std::make_unique<PluginPair>(options_, a, b);
}

ConformanceReport check_plugin(const PluginOptions& options, const Image& a, const Image& b) {
  ConformanceReport report;
  auto fail = [&](std::string what) {
    report.passed = false;
    report.failures.push_back(std::move(what));
  };
  std::vector<Image> frames;
  try {
    frames = run_plugin_request(options, a, b, {0.0, 0.5, 1.0});
  } catch (const std::exception& e) {
    fail(e.what());
    return report;
  }
  if (frames[0] != quantize(a, 16)) fail("tau = 0 does not reproduce frame A");
  if (frames[2] != quantize(b, 16)) fail("tau = 1 does not reproduce frame B");
  for (const Image& f : frames) {
    for (float v : f.pixels()) {
      if (!std::isfinite(v)) {
        fail("non-finite output");
        break;
      }
    }
  }
  return report;
}

}  // namespace unroll
