#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "unroll/errors.hpp"
#include "unroll/metrics.hpp"
#include "unroll/synth.hpp"

using namespace unroll;

namespace {

Element flat_rect(double x, double y, double w, double h, float value) {
  Element e;
  e.shape.kind = Shape::Kind::rect;
  e.shape.width = w;
  e.shape.height = h;
  e.x = x;
  e.y = y;
  e.texture.kind = Texture::Kind::flat;
  e.texture.color = {value, value, value};
  return e;
}

SceneSpec flat_background(int w, int h, int frames, float value = 0.0f) {
  SceneSpec spec;
  spec.width = w;
  spec.height = h;
  spec.frames = frames;
  spec.channels = 1;
  spec.oversampling = h;
  spec.background.texture.kind = Texture::Kind::flat;
  spec.background.texture.color = {value, value, value};
  return spec;
}

Motion translate(double vx, double vy) {
  Motion m;
  m.kind = Motion::Kind::translate;
  m.vx = vx;
  m.vy = vy;
  return m;
}

// Eccentricity of the pixel set where pred(x, y) holds, from second moments.
template <typename Pred>
double eccentricity(int w, int h, Pred pred) {
  double n = 0, sx = 0, sy = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (pred(x, y)) n += 1, sx += x, sy += y;
  const double mx = sx / n, my = sy / n;
  double cxx = 0, cyy = 0, cxy = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (pred(x, y)) cxx += (x - mx) * (x - mx), cyy += (y - my) * (y - my), cxy += (x - mx) * (y - my);
  const double tr = (cxx + cyy) / n, det = (cxx * cyy - cxy * cxy) / (n * n);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  const double l1 = tr / 2 + disc, l2 = tr / 2 - disc;
  return std::sqrt(1.0 - l2 / l1);
}

}  // namespace

TEST_CASE("zero motion renders identical frames and RS == GS") {
  const SceneSpec spec = test::static_scene(24, 16, 3);
  const SpaceTimeVolume vol = render_volume(spec, 9);
  const Image f0 = vol.frame(0);
  for (int s : {1, 7, 16, 47}) CHECK(vol.frame(s) == f0);
  const PairedSample p = make_pair(spec, 9);
  for (int k = 0; k < 3; ++k) CHECK(p.rs.frames[k] == p.gs.frames[k]);
  for (const Image& m : p.occlusion_masks) {
    for (float v : m.pixels()) CHECK(v == 1.0f);
  }
}

TEST_CASE("translating sprite follows its analytic trajectory") {
  SceneSpec spec = flat_background(64, 32, 3);
  Element e = flat_rect(20.0, 16.0, 6.0, 6.0, 1.0f);
  e.motions.push_back(translate(1.0, 0.0));
  spec.elements.push_back(e);
  const SceneRenderer r(spec, 1);
  for (int s : {0, 5, 32, 63}) {
    const Point2 c = r.element_center(0, static_cast<double>(s) / spec.oversampling);
    CHECK(c.x == doctest::Approx(20.0 + static_cast<double>(s) / 32));
    CHECK(c.y == doctest::Approx(16.0));
  }
  // Column centroid of the rendered sprite matches the trajectory.
  const SpaceTimeVolume vol = r.volume();
  for (int s : {0, 16, 40}) {
    const Image f = vol.frame(s);
    double sum = 0.0, wsum = 0.0;
    for (int x = 0; x < 64; ++x) sum += f.at(x, 16) * x, wsum += f.at(x, 16);
    CHECK(std::abs(sum / wsum - r.element_center(0, s / 32.0).x) < 0.05);
  }
}

TEST_CASE("rotating disc: the hole traces the same ellipse as a per-row render") {
  SceneSpec spec = flat_background(128, 128, 2, 0.0f);
  Element disc;
  disc.shape.kind = Shape::Kind::ring;
  disc.shape.radius = 50.0;
  disc.shape.hole_radius = 10.0;
  disc.shape.hole_dx = 0.0;
  disc.shape.hole_dy = 32.0;
  disc.x = 64.0;
  disc.y = 64.0;
  disc.texture.kind = Texture::Kind::flat;
  disc.texture.color = {1.0f, 1.0f, 1.0f};
  Motion spin;
  spin.kind = Motion::Kind::rotate;
  spin.cx = 64.0;
  spin.cy = 64.0;
  spin.omega = 0.2;
  disc.motions.push_back(spin);
  spec.elements.push_back(disc);
  const PairedSample p = make_pair(spec, 0, false);
  const SceneRenderer r(spec, 0);

  // Brute force: each row rendered at its own readout time.
  Image brute(128, 128, 1);
  for (int j = 0; j < 128; ++j) {
    const Image row_frame = r.render_frame(j / 128.0);
    for (int x = 0; x < 128; ++x) brute.at(x, j) = row_frame.at(x, j);
  }
  double max_diff = 0.0;
  for (int j = 0; j < 128; ++j)
    for (int x = 0; x < 128; ++x) max_diff = std::max(max_diff, std::abs(double(brute.at(x, j)) - p.rs.frames[0].at(x, j)));
  CHECK(max_diff < 1e-5);

  auto hole = [](const Image& f) {
    return [&f](int x, int y) {
      const double dx = x - 64.0, dy = y - 64.0;
      return dx * dx + dy * dy < 46.0 * 46.0 && f.at(x, y) < 0.5f;
    };
  };
  const double e_rs = eccentricity(128, 128, hole(p.rs.frames[0]));
  const double e_brute = eccentricity(128, 128, hole(brute));
  const double e_gs = eccentricity(128, 128, hole(p.gs.frames[0]));
  CHECK(std::abs(e_rs - e_brute) < 0.02);
  CHECK(e_rs > e_gs + 0.2);
}

TEST_CASE("translation shears RS rows by v (H - 1) / N") {
  const int h = 64;
  SceneSpec spec = flat_background(96, h, 2);
  Element bar = flat_rect(30.0, 32.0, 6.0, 200.0, 1.0f);
  bar.motions.push_back(translate(3.0, 0.0));
  spec.elements.push_back(bar);
  const PairedSample p = make_pair(spec, 0, false);
  // Least-squares line through per-row centroids.
  double st = 0, sc = 0, stt = 0, stc = 0;
  for (int j = 0; j < h; ++j) {
    double sum = 0, wsum = 0;
    for (int x = 0; x < 96; ++x) sum += p.rs.frames[1].at(x, j) * x, wsum += p.rs.frames[1].at(x, j);
    const double c = sum / wsum;
    st += j, sc += c, stt += j * j, stc += j * c;
  }
  const double slope = (h * stc - st * sc) / (h * stt - st * st);
  CHECK(std::abs(slope * (h - 1) - 3.0 * (h - 1) / h) <= 0.5);
}

TEST_CASE("occlusion band width matches the displacement") {
  SceneSpec spec = flat_background(80, 24, 3, 0.2f);
  Element box = flat_rect(30.0, 12.0, 16.0, 40.0, 0.9f);
  box.motions.push_back(translate(4.0, 0.0));
  spec.elements.push_back(box);
  const PairedSample p = make_pair(spec, 0);
  const Image& m = p.occlusion_masks[2];
  for (int j = 0; j < 24; j += 5) {
    std::vector<int> runs;
    int run = 0;
    for (int x = 0; x < 80; ++x) {
      if (m.at(x, j) == 0.0f) ++run;
      else if (run) runs.push_back(run), run = 0;
    }
    if (run) runs.push_back(run);
    REQUIRE(runs.size() == 2);
    for (int len : runs) CHECK(std::abs(len - 4) <= 1);
  }
}

TEST_CASE("pairs are deterministic in (spec, seed)") {
  const SceneSpec spec = random_scene(MotionFamily::mixed, 4, {40, 32, 4, 3});
  const PairedSample a = make_pair(spec, 4);
  const PairedSample b = make_pair(spec, 4);
  const PairedSample c = make_pair(spec, 5);
  for (int k = 0; k < 4; ++k) {
    CHECK(a.gs.frames[k] == b.gs.frames[k]);
    CHECK(a.rs.frames[k] == b.rs.frames[k]);
    CHECK(a.occlusion_masks[k] == b.occlusion_masks[k]);
  }
  CHECK_FALSE(a.gs.frames[0] == c.gs.frames[0]);
}

TEST_CASE("20-spec dataset across motion families") {
  int made = 0;
  for (MotionFamily f : {MotionFamily::translation, MotionFamily::rotation, MotionFamily::zoom, MotionFamily::nonrigid}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const PairedSample p = make_pair(random_scene(f, s, {32, 32, 3, 1}), s);
      CHECK(p.gs.frame_count() == 3);
      CHECK(p.rs.frame_count() == 3);
      ++made;
    }
  }
  CHECK(made == 20);
}

TEST_CASE("training set motion is non-degenerate") {
  const SceneGeometry g{48, 48, 4, 3};
  const auto set = make_training_set(6, 17, MotionFamily::affine, g);
  REQUIRE(set.size() == 6);
  for (const PairedSample& p : set) CHECK(identity_baseline_psnr(p.rs, p.gs) < 40.0);
  const auto again = make_training_set(6, 17, MotionFamily::affine, g);
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(set[i].rs.frames[1] == again[i].rs.frames[1]);
}

TEST_CASE("non-rigid family articulates its elements") {
  const SceneSpec spec = random_scene(MotionFamily::nonrigid, 2, {48, 48, 6, 1});
  bool articulated = false;
  for (const Element& e : spec.elements) {
    for (const Motion& m : e.motions) articulated |= m.kind == Motion::Kind::nonrigid && m.amplitude > 0.0;
  }
  CHECK(articulated);
  const PairedSample p = make_pair(spec, 2, false);
  // Temporal variance of the GS xt-slices.
  double var = 0.0;
  for (int j = 0; j < 48; ++j) {
    for (int x = 0; x < 48; ++x) {
      double m = 0.0, m2 = 0.0;
      for (int k = 0; k < 6; ++k) m += p.gs.frames[k].at(x, j), m2 += p.gs.frames[k].at(x, j) * p.gs.frames[k].at(x, j);
      var += m2 / 6 - (m / 6) * (m / 6);
    }
  }
  CHECK(var / (48 * 48) > 1e-4);
}

TEST_CASE("scene spec validation and JSON round trip") {
  SceneSpec spec = random_scene(MotionFamily::affine, 3);
  const SceneSpec back = parse_scene(scene_to_json(spec));
  CHECK(scene_to_json(back) == scene_to_json(spec));
  spec.oversampling = spec.height - 1;
  CHECK_THROWS_AS(spec.validate(), InputError);
  CHECK_THROWS_AS(parse_scene("{\"width\": 16, \"height\": 16, \"oversampling\": 8}"), InputError);
  CHECK_THROWS_AS(parse_scene("{not json"), InputError);
  SceneSpec odd = test::static_scene(16, 16, 2);
  odd.oversampling = 24;
  CHECK_THROWS_AS(make_pair(odd, 0), InputError);
}

TEST_CASE("elements leaving the margin raise a warning flag") {
  SceneSpec spec = flat_background(32, 32, 4);
  Element e = flat_rect(16.0, 16.0, 4.0, 4.0, 1.0f);
  e.motions.push_back(translate(30.0, 0.0));
  spec.elements.push_back(e);
  spec.margin = 8.0;
  CHECK(make_pair(spec, 0, false).margin_warning);
  spec.elements[0].motions[0].vx = 1.0;
  CHECK_FALSE(make_pair(spec, 0, false).margin_warning);
}
