#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "unroll/refine.hpp"

namespace unroll::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kMissingResource = 3, kInvariantViolation = 4 };

struct SynthArgs {
  std::filesystem::path scene;  // scene JSON; empty selects a random scene of `family`
  std::string family = "translation";
  std::uint64_t seed = 0;
  std::filesystem::path out;
  bool deep = false;
  bool masks = true;
};

struct PipelineConfig {
  std::string interpolator = "builtin";  // builtin | oracle | plugin:<command>
  std::filesystem::path oracle;          // volume.json written by synth (oracle mode)
  std::string weights = "mean";          // MRGN file or "mean"
  bool refine = true;
  RefineConfig refine_config;
  std::filesystem::path out;
  std::filesystem::path stages;  // optional per-stage artifacts
  bool deep = false;             // 16-bit artifacts
  int stride = 1;
  int plugin_batch = 0;
};

struct EvalArgs {
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path mask;
  std::filesystem::path viz_out;
  std::filesystem::path report;
};

struct StatsArgs {
  std::filesystem::path gs;
  std::filesystem::path rs;
  std::filesystem::path report;
  double epsilon = 0.0;
};

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_unroll(const std::filesystem::path& rs_dir, const PipelineConfig& config, std::ostream& out, std::ostream& err);
// Re-runs the merge stage from a stage directory's proposals/ tree.
int cmd_merge(const std::filesystem::path& proposals_dir, const std::string& weights, const std::filesystem::path& out_dir,
              bool deep, std::ostream& out, std::ostream& err);
int cmd_refine(const std::filesystem::path& gs_dir, const std::filesystem::path& rs_dir, const RefineConfig& config,
               const std::filesystem::path& out_dir, bool deep, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err);
int cmd_plugin_check(const std::string& command, const std::filesystem::path& rs_dir, std::ostream& out,
                     std::ostream& err);

// Full command line, argv[0] included.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

std::string proposal_dirname(int augmentation);

}  // namespace unroll::cli
