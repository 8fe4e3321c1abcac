#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "support.hpp"
#include "unroll/errors.hpp"
#include "unroll/flow.hpp"
#include "unroll/frame_io.hpp"
#include "unroll/interp.hpp"
#include "unroll/metrics.hpp"
#include "unroll/plugin.hpp"
#include "unroll/synth.hpp"

using namespace unroll;

namespace {

Image crop(const Image& src, int x0, int y0, int w, int h) {
  Image out(w, h, src.channels());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < src.channels(); ++c) out.at(x, y, c) = src.at(x + x0, y + y0, c);
  return out;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

std::vector<double> values(const Image& img) { return {img.pixels().begin(), img.pixels().end()}; }

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a.pixels()[i]) - b.pixels()[i]));
  return m;
}

// Intensity centroid along x.
double centroid_x(const Image& img) {
  double s = 0.0, w = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) s += img.at(x, y) * x, w += img.at(x, y);
  return s / w;
}

Image square_frame(const Image& tex, int x0) {
  Image out(64, 48, 1, 0.0f);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) out.at(x0 + x, 16 + y) = tex.at(x, y);
  return out;
}

}  // namespace

TEST_CASE("flow: identical frames give zero motion") {
  const Image a = test::texture(64, 64, 3, 1);
  const FlowField f = estimate_flow(a, a);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.u.size(); ++i)
    worst = std::max({worst, std::abs(double(f.u.pixels()[i])), std::abs(double(f.v.pixels()[i]))});
  CHECK(worst <= 0.05);
}

TEST_CASE("flow: a 3 px shift is recovered") {
  const Image big = test::texture(96, 72, 1, 2);
  const Image a = crop(big, 8, 4, 80, 64);
  const Image b = crop(big, 5, 4, 80, 64);  // b(x) = a(x - 3)
  const FlowField f = estimate_flow(a, b);
  CHECK(std::abs(median(values(f.u)) - 3.0) <= 0.2);
  CHECK(std::abs(median(values(f.v))) <= 0.2);
}

TEST_CASE("flow: a shift of 8 px is within capture range") {
  const Image big = test::texture(112, 72, 1, 3, 14.0);
  const Image a = crop(big, 16, 4, 96, 64);
  const Image b = crop(big, 8, 4, 96, 64);
  CHECK(std::abs(median(values(estimate_flow(a, b).u)) - 8.0) <= 0.3);
}

TEST_CASE("flow: flat images have zero confidence") {
  const Image a(40, 30, 3, 0.4f);
  const FlowField f = estimate_flow(a, a);
  for (float c : f.confidence.pixels()) CHECK(c == 0.0f);
  CHECK_THROWS_AS(estimate_flow(a, Image(41, 30, 3)), InputError);
}

TEST_CASE("interpolate: endpoint identity and range") {
  const Image a = test::texture(48, 40, 3, 4);
  const Image b = test::texture(48, 40, 3, 5);
  CHECK(interpolate(a, b, 0.0) == a);
  CHECK(interpolate(a, b, 1.0) == b);
  CHECK_THROWS_AS(interpolate(a, b, 1.5), RangeError);
  CHECK_THROWS_AS(interpolate(a, b, -0.1), RangeError);
}

TEST_CASE("interpolate: a == b is a fixed point") {
  const Image a = test::texture(48, 40, 3, 6);
  for (double tau : {0.1, 0.5, 0.9}) CHECK(max_abs_diff(interpolate(a, a, tau), a) <= 1e-6);
}

TEST_CASE("interpolate: translating square lands halfway") {
  const Image tex = test::texture(16, 16, 1, 7, 5.0);
  const Image a = square_frame(tex, 20);
  const Image b = square_frame(tex, 24);
  const Image mid = interpolate(a, b, 0.5);
  CHECK(std::abs(centroid_x(mid) - (centroid_x(a) + 2.0)) <= 0.3);
}

TEST_CASE("upsample_pair: N = 2 and static pairs") {
  const Image a = test::texture(32, 24, 3, 8);
  const Image b = test::texture(32, 24, 3, 9);
  const BuiltinInterpolator interp;
  const auto f = upsample_pair(a, b, 2, interp);
  REQUIRE(f.size() == 3);
  CHECK(f[0] == a);
  CHECK(f[1] == interpolate(a, b, 0.5));
  CHECK(f[2] == b);
  const auto s = upsample_pair(a, a, 6, interp);
  for (const Image& g : s) CHECK(max_abs_diff(g, a) <= 1e-6);
  CHECK_THROWS_AS(upsample_pair(a, b, 1, interp), InputError);
}

TEST_CASE("oracle upsampling reproduces the slanted-plane samples") {
  const SceneSpec spec = random_scene(MotionFamily::affine, 11, {40, 32, 3, 3});
  const SpaceTimeVolume vol = render_volume(spec, 11);
  const VideoClip rs = sample_rs(vol, 3);
  const OracleInterpolator oracle(vol);
  const int n = 32;
  const auto f = upsample_pair(rs.frames[1], rs.frames[2], n, oracle, {1, 2, {}});
  REQUIRE(f.size() == n + 1);
  std::vector<float> px(3);
  bool exact = true;
  for (int m = 0; m <= n; ++m) {
    for (int j = 0; j < 32; ++j) {
      for (int i = 0; i < 40; ++i) {
        vol.sample(static_cast<std::int64_t>(1) * n + m + j, n, i, j, px);
        for (int c = 0; c < 3; ++c) exact &= f[m].at(i, j, c) == px[c];
      }
    }
  }
  CHECK(exact);
  CHECK(f[0] == rs.frames[1]);
  CHECK(f[n] == rs.frames[2]);
}

TEST_CASE("compose_gs: row mapping, static input and length errors") {
  CHECK(interpolated_index_for_row(0, 16, 16) == 16);
  CHECK(interpolated_index_for_row(15, 16, 16) == 1);
  CHECK(interpolated_index_for_row(7, 16, 8) == 5);
  const Image a = test::texture(20, 8, 1, 12);
  std::vector<Image> same(9, a);
  const GSProposal p = compose_gs(same, 8);
  CHECK(p.frame == a);
  same.pop_back();
  CHECK_THROWS_AS(compose_gs(same, 8), InputError);
}

TEST_CASE("compose_gs with the oracle equals the GS frame") {
  const SceneSpec spec = random_scene(MotionFamily::rotation, 12, {36, 24, 3, 3});
  const SpaceTimeVolume vol = render_volume(spec, 12);
  const VideoClip rs = sample_rs(vol, 3);
  const VideoClip gs = sample_gs(vol, 3);
  const OracleInterpolator oracle(vol);
  for (int k = 0; k < 2; ++k) {
    const auto f = upsample_pair(rs.frames[k], rs.frames[k + 1], 24, oracle, {k, k + 1, {}});
    CHECK(compose_gs(f, 24).frame == gs.frames[k + 1]);
  }
}

TEST_CASE("reconstruct_clip: counting, oracle exactness and static input") {
  const SceneSpec spec = random_scene(MotionFamily::mixed, 13, {40, 32, 4, 3});
  const SpaceTimeVolume vol = render_volume(spec, 13);
  const VideoClip rs = sample_rs(vol, 4);
  const VideoClip gs = sample_gs(vol, 4);
  const OracleInterpolator oracle(vol);
  const VideoClip out = reconstruct_clip(rs, oracle);
  REQUIRE(out.frame_count() == 3);
  CHECK(out.first_time == 1);
  CHECK(out.shutter == Shutter::global);
  for (int k = 0; k < 3; ++k) CHECK(out.frames[k] == gs.frames[k + 1]);

  VideoClip two = rs;
  two.frames.resize(2);
  CHECK(reconstruct_clip(two, oracle).frame_count() == 1);
  two.frames.resize(1);
  CHECK_THROWS_AS(reconstruct_clip(two, oracle), InputError);

  const PairedSample still = make_pair(test::static_scene(32, 24, 3), 1, false);
  const VideoClip back = reconstruct_clip(still.rs, BuiltinInterpolator());
  for (int k = 0; k < 2; ++k) CHECK(max_abs_diff(back.frames[k], still.rs.frames[k + 1]) <= 1e-6);
}

TEST_CASE("oracle exactness with N < H") {
  const SceneSpec spec = random_scene(MotionFamily::translation, 14, {24, 32, 3, 1});
  const SpaceTimeVolume vol = render_volume(spec, 14);
  const VideoClip rs = sample_rs(vol, 3, Readout::vertical, 8);
  const VideoClip gs = sample_gs(vol, 3);
  const VideoClip out = reconstruct_clip(rs, OracleInterpolator(vol, 8));
  for (int k = 0; k < 2; ++k) CHECK(out.frames[k] == gs.frames[k + 1]);
}

TEST_CASE("row 0 passes through from the later RS frame") {
  const PairedSample p = make_pair(test::translating_scene(48, 32, 3, 2.0, 0.5), 2, false);
  const VideoClip out = reconstruct_clip(p.rs, BuiltinInterpolator());
  for (int k = 0; k < 2; ++k) {
    const auto got = out.frames[k].row(0);
    const auto want = p.rs.frames[k + 1].row(0);
    CHECK(std::equal(got.begin(), got.end(), want.begin()));
  }
}

TEST_CASE("stride reuses the nearest evaluated fraction") {
  const SceneSpec spec = random_scene(MotionFamily::translation, 15, {24, 16, 2, 1});
  const SpaceTimeVolume vol = render_volume(spec, 15);
  const VideoClip rs = sample_rs(vol, 2);
  const int n = 16, stride = 3;
  const VideoClip out = reconstruct_clip(rs, OracleInterpolator(vol), {stride});
  std::vector<float> px(1);
  for (int j = 0; j < 16; ++j) {
    const int m = n - j;
    int used = m;
    if (m != n) {
      const int lo = m / stride * stride, hi = std::min(lo + stride, n);
      used = (m - lo) < (hi - m) ? lo : hi;
    }
    for (int i = 0; i < 24; ++i) {
      vol.sample(static_cast<std::int64_t>(0) * n + used + j, n, i, j, px);
      CHECK(out.frames[0].at(i, j) == px[0]);
    }
  }
}

TEST_CASE("builtin interpolator beats the identity baseline by 3 dB on translation") {
  const PairedSample p = make_pair(test::translating_scene(96, 96, 3, 2.0, 0.0), 3, false);
  const VideoClip out = reconstruct_clip(p.rs, BuiltinInterpolator());
  for (int k = 0; k < 2; ++k) {
    const double recon = psnr(out.frames[k], p.gs.frames[k + 1]);
    const double baseline = psnr(p.rs.frames[k + 1], p.gs.frames[k + 1]);
    CHECK(recon >= baseline + 3.0);
  }
}

TEST_CASE("linear motion with a good flow reaches 40 dB") {
  const PairedSample p = make_pair(test::translating_scene(128, 128, 2, 1.5, 0.5, 3, 10.0), 4, false);
  const VideoClip out = reconstruct_clip(p.rs, BuiltinInterpolator());
  CHECK(psnr(out.frames[0], p.gs.frames[1]) >= 40.0);
}

TEST_CASE("plugin protocol: a blending plugin conforms and interpolates") {
  const Image a = test::texture(20, 12, 3, 20);
  const Image b = test::texture(20, 12, 3, 21);
  PluginOptions opts;
  opts.command = UNROLL_BLEND_PLUGIN;
  opts.max_batch = 2;
  const ConformanceReport ok = check_plugin(opts, a, b);
  CHECK(ok.passed);
  CHECK(ok.failures.empty());

  const PluginInterpolator plugin(opts);
  CHECK(plugin.capabilities().max_batch == 2);
  const auto frames = upsample_pair(a, b, 4, plugin);
  REQUIRE(frames.size() == 5);
  CHECK(frames[0] == a);
  CHECK(frames[4] == b);
  const Image qa = quantize(a, 16), qb = quantize(b, 16);
  for (int m = 1; m < 4; ++m) {
    const double t = m / 4.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(frames[m].pixels()[i] - ((1 - t) * qa.pixels()[i] + t * qb.pixels()[i])));
    CHECK(worst <= 1.0 / 65535.0 + 1e-7);
  }

  const auto raw = run_plugin_request(opts, a, b, {0.0, 1.0});
  REQUIRE(raw.size() == 2);
  CHECK(raw[0] == qa);
  CHECK(raw[1] == qb);
}

TEST_CASE("plugin protocol: broken plugins are rejected") {
  const Image a = test::texture(16, 10, 1, 22);
  const Image b = test::texture(16, 10, 1, 23);
  PluginOptions swapped;
  swapped.command = std::string(UNROLL_BLEND_PLUGIN) + " --swap";
  const ConformanceReport bad = check_plugin(swapped, a, b);
  CHECK_FALSE(bad.passed);
  CHECK_FALSE(bad.failures.empty());

  PluginOptions missing;
  missing.command = "false";
  CHECK_THROWS_AS(run_plugin_request(missing, a, b, {0.5}), ResourceError);
  CHECK_FALSE(check_plugin(missing, a, b).passed);
}
