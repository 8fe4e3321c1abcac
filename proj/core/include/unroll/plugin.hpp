#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "unroll/interp.hpp"

namespace unroll {

// External interpolator protocol. For each request the toolkit creates a directory holding
//   frame_a.png, frame_b.png  (16-bit endpoints)
//   manifest.json             {"width", "height", "channels", "count", "fractions": [...]}
// and runs `<command> <request_dir>`. The command must write result_%06d.png, one per
// fraction in manifest order, at the endpoint dimensions.
struct PluginOptions {
  std::string command;
  int max_batch = 0;  // fractions per request; 0 = all at once
  std::filesystem::path scratch;  // parent of request dirs; empty = system temp
  bool keep_requests = false;
};

// One protocol round trip. Throws ResourceError if the command fails or a result is
// missing, FormatError if a result has the wrong shape.
std::vector<Image> run_plugin_request(const PluginOptions& options, const Image& a, const Image& b,
                                      const std::vector<double>& fractions);

class PluginInterpolator final : public Interpolator {
 public:
  explicit PluginInterpolator(PluginOptions options);
  std::string name() const override { return "plugin"; }
  InterpolatorCapabilities capabilities() const override;
  // Endpoint fractions are answered locally; everything else goes through the command.
  std::unique_ptr<PairInterpolation> prepare(const Image& a, const Image& b,
                                             const PairContext& context) const override;

 private:
  PluginOptions options_;
};

struct ConformanceReport {
  bool passed = true;
  std::vector<std::string> failures;
};

// Sends tau = 0, 0.5, 1 through the command and checks dimensions and endpoint
// identity (against the 16-bit endpoints it was given).
ConformanceReport check_plugin(const PluginOptions& options, const Image& a, const Image& b);

}  // namespace unroll
