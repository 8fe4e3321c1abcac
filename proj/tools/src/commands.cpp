#include "unroll_tools/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "unroll/ensemble.hpp"
#include "unroll/errors.hpp"
#include "unroll/frame_io.hpp"
#include "unroll/interp.hpp"
#include "unroll/merge_net.hpp"
#include "unroll/metrics.hpp"
#include "unroll/parallel.hpp"
#include "unroll/plugin.hpp"
#include "unroll/recurrence.hpp"
#include "unroll/synth.hpp"

namespace unroll::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const IndeterminateShiftError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return kMissingResource;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kMissingResource;
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariantViolation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInvariantViolation;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open " + path.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

MotionFamily parse_family(const std::string& name) {
  if (name == "translation") return MotionFamily::translation;
  if (name == "rotation") return MotionFamily::rotation;
  if (name == "zoom") return MotionFamily::zoom;
  if (name == "affine") return MotionFamily::affine;
  if (name == "nonrigid") return MotionFamily::nonrigid;
  if (name == "mixed") return MotionFamily::mixed;
  throw InputError("unknown motion family '" + name + "'");
}

VideoClip load_rs(const fs::path& dir) {
  VideoClip rs = load_clip(dir);
  if (rs.shutter != Shutter::rolling) throw InputError(dir.string() + " is not a rolling-shutter clip");
  return rs;
}

std::unique_ptr<Interpolator> make_interpolator(const PipelineConfig& config, const VideoClip& rs) {
  const std::string& name = config.interpolator;
  if (name == "builtin") return std::make_unique<BuiltinInterpolator>();
  if (name == "oracle") {
    if (config.oracle.empty()) throw InputError("oracle interpolation needs --oracle <volume.json>");
    json ref;
    try {
      ref = json::parse(read_text(config.oracle));
    } catch (const json::exception& e) {
      throw FormatError("oracle reference: " + std::string(e.what()));
    }
    if (!ref.contains("scene") || !ref.contains("seed")) throw FormatError("oracle reference lacks scene/seed");
    const SceneSpec spec = parse_scene(ref.at("scene").dump());
    const SceneRenderer renderer(spec, ref.at("seed").get<std::uint64_t>());
    if (spec.width != rs.width() || spec.height != rs.height()) {
      throw InputError("oracle volume does not match the RS clip geometry");
    }
    return std::make_unique<OracleInterpolator>(renderer.volume(), rs.readout_rows(), rs.readout);
  }
  if (name.rfind("plugin:", 0) == 0) {
    PluginOptions options;
    options.command = name.substr(7);
    options.max_batch = config.plugin_batch;
    return std::make_unique<PluginInterpolator>(options);
  }
  throw InputError("unknown interpolator '" + name + "' (builtin, oracle, plugin:<command>)");
}

std::optional<MergeWeights> resolve_weights(const std::string& weights) {
  if (weights.empty() || weights == "mean") return std::nullopt;
  if (!fs::exists(weights)) throw ResourceError("weights file not found: " + weights);
  return load_weights(weights);
}

VideoClip gs_clip(std::vector<Image> frames, const VideoClip& rs, int first_time) {
  VideoClip clip;
  clip.frames = std::move(frames);
  clip.shutter = Shutter::global;
  clip.rows = rs.rows;
  clip.first_time = first_time;
  return clip;
}

VideoClip merge_sets(const std::vector<ProposalSet>& sets, const std::optional<MergeWeights>& weights,
                     const VideoClip& like, int depth) {
  std::vector<Image> frames(sets.size());
  std::unique_ptr<MergeNet> net;
  if (weights) net = std::make_unique<MergeNet>(*weights);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    frames[i] = quantize(net ? net->merge(sets[i]) : clamp01(sets[i].mean), depth);
  }
  return gs_clip(std::move(frames), like, sets.empty() ? 0 : sets.front().time);
}

std::string trace_text(const RefineReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "lambda %.9g\npool %zu distinct %zu\n", report.lambda, report.pool_size,
                report.pool_distinct);
  out << buf;
  for (const RefineTraceEntry& e : report.trace) {
    std::snprintf(buf, sizeof buf, "iter %d %s nn=%.9g validity=%.9g total=%.9g\n", e.iteration, e.step.c_str(),
                  e.terms.nn, e.terms.validity, e.terms.total);
    out << buf;
  }
  out << "iterations " << report.iterations_run << (report.early_exit ? " (early exit)" : "") << '\n';
  return out.str();
}

}  // namespace

std::string proposal_dirname(int augmentation) {
  char name[16];
  std::snprintf(name, sizeof name, "aug_%02d", augmentation);
  return name;
}

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.out.empty()) throw InputError("synth needs --out");
    const SceneSpec spec = args.scene.empty() ? random_scene(parse_family(args.family), args.seed)
                                              : load_scene(args.scene);
    const PairedSample sample = make_pair(spec, args.seed, args.masks);
    const int depth = args.deep ? 16 : 8;
    save_clip(args.out / "gs", sample.gs, depth);
    save_clip(args.out / "rs", sample.rs, depth);
    if (args.masks) {
      VideoClip masks;
      masks.frames = sample.occlusion_masks;
      masks.first_time = sample.rs.first_time;
      save_clip(args.out / "masks", masks, 8);
    }
    const SceneRenderer renderer(spec, args.seed);
    json trajectory{{"margin_warning", sample.margin_warning}, {"elements", json::array()}};
    for (int i = 0; i < static_cast<int>(spec.elements.size()); ++i) {
      json centers = json::array();
      for (int k = 0; k < spec.frames; ++k) {
        const Point2 c = renderer.element_center(i, k);
        centers.push_back({c.x, c.y});
      }
      trajectory["elements"].push_back({{"index", i}, {"centers", centers}});
    }
    write_text(args.out / "trajectory.json", trajectory.dump(2) + "\n");
    const json reference{{"scene", json::parse(scene_to_json(spec))}, {"seed", args.seed}};
    write_text(args.out / "volume.json", reference.dump(2) + "\n");
    if (sample.margin_warning) err << "warning: an element leaves the validity margin\n";
    out << "wrote " << spec.frames << " GS/RS frames (" << spec.width << "x" << spec.height << ") to "
        << args.out.string() << '\n';
    return kOk;
  });
}

int cmd_unroll(const fs::path& rs_dir, const PipelineConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.out.empty()) throw InputError("unroll needs --out");
    if (config.stride < 1) throw InputError("stride must be >= 1");
    config.refine_config.validate();
    const VideoClip rs = load_rs(rs_dir);
    if (rs.frame_count() < 2) throw InputError("unroll needs at least two RS frames");
    const auto weights = resolve_weights(config.weights);
    if (config.refine && rs.frame_count() - 1 < kPatchFrames) {
      throw InputError("refinement needs at least 4 RS frames (3 GS outputs); pass --no-refine");
    }
    const auto interpolator = make_interpolator(config, rs);
    const int depth = config.deep ? 16 : 8;

    std::vector<ProposalSet> sets = propose_all(rs, *interpolator, {config.stride});
    for (ProposalSet& s : sets) {
      for (Image& p : s.proposals) p = quantize(p, depth);
      s.mean = proposal_mean(s.proposals);
    }
    const VideoClip merged = merge_sets(sets, weights, rs, depth);
    VideoClip result = merged;
    RefineReport report;
    if (config.refine) result = quantize(refine(merged, rs, config.refine_config, &report), depth);

    save_clip(config.out, result, depth);
    if (!config.stages.empty()) {
      const int count = static_cast<int>(sets.size());
      for (int a = 0; a < 16; ++a) {
        std::vector<Image> frames(count);
        for (int i = 0; i < count; ++i) frames[i] = sets[i].proposals[a];
        save_clip(config.stages / "proposals" / proposal_dirname(a), gs_clip(std::move(frames), rs, merged.first_time),
                  depth);
      }
      std::vector<Image> means(count);
      for (int i = 0; i < count; ++i) means[i] = sets[i].mean;
      save_clip(config.stages / "mean", gs_clip(std::move(means), rs, merged.first_time), depth);
      save_clip(config.stages / "merged", merged, depth);
      if (config.refine) {
        save_clip(config.stages / "refined", result, depth);
        write_text(config.stages / "refine_trace.txt", trace_text(report));
      }
    }
    out << "interpolator " << interpolator->name() << ", merge " << (weights ? "network" : "mean") << ", refine "
        << (config.refine ? "on" : "off") << '\n';
    if (config.refine) out << trace_text(report);
    out << "wrote " << result.frame_count() << " GS frames to " << config.out.string() << '\n';
    return kOk;
  });
}

int cmd_merge(const fs::path& proposals_dir, const std::string& weights_arg, const fs::path& out_dir, bool deep,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto weights = resolve_weights(weights_arg);
    std::vector<VideoClip> clips;
    for (int a = 0; a < 16; ++a) {
      const fs::path dir = proposals_dir / proposal_dirname(a);
      if (!fs::exists(dir)) throw ResourceError("missing proposal directory " + dir.string());
      clips.push_back(load_clip(dir));
      if (clips.back().frame_count() != clips.front().frame_count() ||
          clips.back().first_time != clips.front().first_time) {
        throw InputError("proposal directories disagree in frame count or time");
      }
    }
    std::vector<ProposalSet> sets(clips.front().frame_count());
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (const VideoClip& c : clips) sets[i].proposals.push_back(c.frames[i]);
      sets[i].mean = proposal_mean(sets[i].proposals);
      sets[i].time = clips.front().first_time + static_cast<int>(i);
    }
    const VideoClip merged = merge_sets(sets, weights, clips.front(), deep ? 16 : 8);
    save_clip(out_dir, merged, deep ? 16 : 8);
    out << "merged " << merged.frame_count() << " frames into " << out_dir.string() << '\n';
    return kOk;
  });
}

int cmd_refine(const fs::path& gs_dir, const fs::path& rs_dir, const RefineConfig& config, const fs::path& out_dir,
               bool deep, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VideoClip gs = load_clip(gs_dir);
    const VideoClip rs = load_rs(rs_dir);
    RefineReport report;
    const int depth = deep ? 16 : 8;
    const VideoClip refined = quantize(refine(gs, rs, config, &report), depth);
    save_clip(out_dir, refined, depth);
    out << trace_text(report);
    return kOk;
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VideoClip pred = load_clip(args.pred);
    const VideoClip gt = load_clip(args.gt);
    std::vector<Image> masks;
    if (!args.mask.empty()) masks = load_clip(args.mask).frames;
    EvalReport report = evaluate(pred, gt, args.mask.empty() ? nullptr : &masks);
    report.config = "pred=" + args.pred.filename().string() + " gt=" + args.gt.filename().string() +
                    (args.mask.empty() ? "" : " mask=" + args.mask.filename().string());
    if (!args.viz_out.empty()) {
      VideoClip viz;
      viz.first_time = pred.first_time;
      for (int k = 0; k < pred.frame_count(); ++k) {
        const int g = pred.first_time + k - gt.first_time;
        if (g < 0 || g >= gt.frame_count()) continue;
        if (viz.frames.empty()) viz.first_time = pred.first_time + k;
        viz.frames.push_back(misalignment_viz(gt.frames[g], pred.frames[k]));
      }
      save_clip(args.viz_out, viz, 8);
    }
    const std::string text = report.to_text();
    if (args.report.empty()) out << text;
    else write_text(args.report, text);
    return kOk;
  });
}

int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VideoClip gs = load_clip(args.gs);
    const VideoClip rs = load_clip(args.rs);
    RecurrenceOptions options;
    options.epsilon = args.epsilon;
    const RecurrenceStats stats = recurrence_stats(gs, rs, options);
    const std::string text = stats.to_text();
    if (args.report.empty()) out << text;
    else write_text(args.report, text);
    if (!stats.reliable) err << "warning: statistics unreliable (textureless input)\n";
    return kOk;
  });
}

int cmd_plugin_check(const std::string& command, const fs::path& rs_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VideoClip clip = load_clip(rs_dir);
    if (clip.frame_count() < 2) throw InputError("plugin check needs two frames");
    PluginOptions options;
    options.command = command;
    const ConformanceReport report = check_plugin(options, clip.frames[0], clip.frames[1]);
    for (const std::string& f : report.failures) out << "FAIL " << f << '\n';
    out << (report.passed ? "PASS" : "FAIL") << " plugin conformance\n";
    return report.passed ? kOk : kInvariantViolation;
  });
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rolling-shutter simulation and rectification toolkit", "unroll"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a scene and write paired GS/RS clips");
  synth_cmd->add_option("--scene", synth.scene, "Scene description (JSON)");
  synth_cmd->add_option("--family", synth.family, "Random scene family when no --scene is given")
      ->check(CLI::IsMember({"translation", "rotation", "zoom", "affine", "nonrigid", "mixed"}));
  synth_cmd->add_option("--seed", synth.seed, "Render seed");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_flag("--deep", synth.deep, "Write 16-bit frames");
  bool no_masks = false;
  synth_cmd->add_flag("--no-masks", no_masks, "Skip occlusion masks");

  PipelineConfig pipe;
  fs::path rs_dir;
  bool no_refine = false;
  std::string lambda = "auto";
  std::string nn_mode = "exact";
  auto add_refine_options = [&](CLI::App* cmd) {
    cmd->add_option("--refine-iters", pipe.refine_config.iterations, "Refinement iterations")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--lambda", lambda, "Validity weight or 'auto'");
    cmd->add_option("--alpha-edge", pipe.refine_config.alpha_edge, "Patch weight on edges");
    cmd->add_option("--alpha-flat", pipe.refine_config.alpha_flat, "Patch weight elsewhere");
    cmd->add_option("--nn-mode", nn_mode, "Nearest-neighbor search")->check(CLI::IsMember({"exact", "approx"}));
    cmd->add_option("--row-window", pipe.refine_config.row_window, "Restrict NN candidates to +-rows (0 = all)");
  };
  auto* unroll_cmd = app.add_subcommand("unroll", "Reconstruct a GS clip from an RS clip");
  unroll_cmd->add_option("--rs", rs_dir, "RS frame directory")->required();
  unroll_cmd->add_option("--out", pipe.out, "Output GS frame directory")->required();
  unroll_cmd->add_option("--interp", pipe.interpolator, "builtin | oracle | plugin:<command>");
  unroll_cmd->add_option("--oracle", pipe.oracle, "volume.json from synth (oracle interpolation)");
  unroll_cmd->add_option("--plugin-batch", pipe.plugin_batch, "Fractions per plugin request (0 = all)");
  unroll_cmd->add_option("--weights", pipe.weights, "MRGN weights file or 'mean'");
  unroll_cmd->add_flag("--no-refine", no_refine, "Skip test-time refinement");
  unroll_cmd->add_option("--stages", pipe.stages, "Directory for per-stage artifacts");
  unroll_cmd->add_flag("--deep", pipe.deep, "16-bit output and artifacts");
  unroll_cmd->add_option("--stride", pipe.stride, "Evaluate every stride-th interpolated fraction")
      ->check(CLI::PositiveNumber);
  add_refine_options(unroll_cmd);

  fs::path proposals_dir;
  fs::path stage_out;
  bool stage_deep = false;
  std::string merge_weights = "mean";
  auto* merge_cmd = app.add_subcommand("merge", "Merge a stage directory's proposals");
  merge_cmd->add_option("--proposals", proposals_dir, "proposals/ directory written by unroll --stages")->required();
  merge_cmd->add_option("--weights", merge_weights, "MRGN weights file or 'mean'");
  merge_cmd->add_option("--out", stage_out, "Output directory")->required();
  merge_cmd->add_flag("--deep", stage_deep, "16-bit output");

  fs::path gs_dir;
  auto* refine_cmd = app.add_subcommand("refine", "Refine a GS clip against its RS source");
  refine_cmd->add_option("--gs", gs_dir, "Initial GS frame directory")->required();
  refine_cmd->add_option("--rs", rs_dir, "RS frame directory")->required();
  refine_cmd->add_option("--out", stage_out, "Output directory")->required();
  refine_cmd->add_flag("--deep", stage_deep, "16-bit output");
  add_refine_options(refine_cmd);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM report");
  eval_cmd->add_option("--pred", eval.pred, "Predicted GS frames")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth GS frames")->required();
  eval_cmd->add_option("--mask", eval.mask, "Mask frames (1 = evaluated)");
  eval_cmd->add_option("--viz-out", eval.viz_out, "Write misalignment composites here");
  eval_cmd->add_option("--report", eval.report, "Write the report to a file instead of stdout");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "xt-patch recurrence statistics");
  stats_cmd->add_option("--gs", stats.gs, "GS frame directory")->required();
  stats_cmd->add_option("--rs", stats.rs, "RS frame directory")->required();
  stats_cmd->add_option("--epsilon", stats.epsilon, "Approximate NN tolerance (0 = exact)");
  stats_cmd->add_option("--report", stats.report, "Write the report to a file instead of stdout");

  std::string plugin_command;
  auto* plugin_cmd = app.add_subcommand("plugin-check", "Conformance test for an interpolator plugin");
  plugin_cmd->add_option("--command", plugin_command, "Plugin command")->required();
  plugin_cmd->add_option("--rs", rs_dir, "Frame directory supplying the endpoints")->required();

  std::vector<const char*> args;
  for (const std::string& a : argv) args.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  set_thread_count(threads);

  if (lambda != "auto") {
    try {
      pipe.refine_config.lambda = std::stod(lambda);
    } catch (const std::exception&) {
      err << "error: --lambda must be a number or 'auto'\n";
      return kInputError;
    }
  }
  pipe.refine_config.nn_mode = nn_mode == "approx" ? NNMode::approx : NNMode::exact;
  pipe.refine = !no_refine;
  synth.masks = !no_masks;

  if (synth_cmd->parsed()) return cmd_synth(synth, out, err);
  if (unroll_cmd->parsed()) return cmd_unroll(rs_dir, pipe, out, err);
  if (merge_cmd->parsed()) return cmd_merge(proposals_dir, merge_weights, stage_out, stage_deep, out, err);
  if (refine_cmd->parsed()) return cmd_refine(gs_dir, rs_dir, pipe.refine_config, stage_out, stage_deep, out, err);
  if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
  if (stats_cmd->parsed()) return cmd_stats(stats, out, err);
  if (plugin_cmd->parsed()) return cmd_plugin_check(plugin_command, rs_dir, out, err);
  return kInputError;
}

}  // namespace unroll::cli
