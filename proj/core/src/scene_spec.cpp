#include "unroll/scene_spec.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "unroll/errors.hpp"

namespace unroll {

using nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(Texture::Kind, {{Texture::Kind::flat, "flat"},
                                             {Texture::Kind::noise, "noise"},
                                             {Texture::Kind::checker, "checker"},
                                             {Texture::Kind::stripes, "stripes"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Shape::Kind, {{Shape::Kind::full, "full"},
                                           {Shape::Kind::rect, "rect"},
                                           {Shape::Kind::disc, "disc"},
                                           {Shape::Kind::ring, "ring"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Motion::Kind, {{Motion::Kind::translate, "translate"},
                                            {Motion::Kind::rotate, "rotate"},
                                            {Motion::Kind::zoom, "zoom"},
                                            {Motion::Kind::affine, "affine"},
                                            {Motion::Kind::nonrigid, "nonrigid"}})

template <typename T>
static void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void to_json(json& j, const Texture& t) {
  j = json{{"kind", t.kind}, {"color", t.color}, {"color2", t.color2},
           {"scale", t.scale}, {"contrast", t.contrast}, {"seed", t.seed}};
}

void from_json(const json& j, Texture& t) {
  read(j, "kind", t.kind);
  read(j, "color", t.color);
  read(j, "color2", t.color2);
  read(j, "scale", t.scale);
  read(j, "contrast", t.contrast);
  read(j, "seed", t.seed);
}

void to_json(json& j, const Shape& s) {
  j = json{{"kind", s.kind}};
  switch (s.kind) {
    case Shape::Kind::full: break;
    case Shape::Kind::rect: j["width"] = s.width; j["height"] = s.height; break;
    case Shape::Kind::disc: j["radius"] = s.radius; break;
    case Shape::Kind::ring:
      j["radius"] = s.radius;
      j["hole_radius"] = s.hole_radius;
      j["hole_dx"] = s.hole_dx;
      j["hole_dy"] = s.hole_dy;
      break;
  }
}

void from_json(const json& j, Shape& s) {
  read(j, "kind", s.kind);
  read(j, "width", s.width);
  read(j, "height", s.height);
  read(j, "radius", s.radius);
  read(j, "hole_radius", s.hole_radius);
  read(j, "hole_dx", s.hole_dx);
  read(j, "hole_dy", s.hole_dy);
}

void to_json(json& j, const Motion& m) {
  j = json{{"kind", m.kind}};
  switch (m.kind) {
    case Motion::Kind::translate: j["vx"] = m.vx; j["vy"] = m.vy; break;
    case Motion::Kind::rotate: j["cx"] = m.cx; j["cy"] = m.cy; j["omega"] = m.omega; break;
    case Motion::Kind::zoom: j["cx"] = m.cx; j["cy"] = m.cy; j["scale"] = m.scale; break;
    case Motion::Kind::affine: j["cx"] = m.cx; j["cy"] = m.cy; j["affine"] = m.affine; break;
    case Motion::Kind::nonrigid:
      j["amplitude"] = m.amplitude;
      j["frequency"] = m.frequency;
      j["wavelength"] = m.wavelength;
      break;
  }
}

void from_json(const json& j, Motion& m) {
  read(j, "kind", m.kind);
  read(j, "vx", m.vx);
  read(j, "vy", m.vy);
  read(j, "cx", m.cx);
  read(j, "cy", m.cy);
  read(j, "omega", m.omega);
  read(j, "scale", m.scale);
  read(j, "affine", m.affine);
  read(j, "amplitude", m.amplitude);
  read(j, "frequency", m.frequency);
  read(j, "wavelength", m.wavelength);
}

void to_json(json& j, const Element& e) {
  j = json{{"shape", e.shape}, {"texture", e.texture}, {"x", e.x}, {"y", e.y}, {"motions", e.motions}};
}

void from_json(const json& j, Element& e) {
  read(j, "shape", e.shape);
  read(j, "texture", e.texture);
  read(j, "x", e.x);
  read(j, "y", e.y);
  read(j, "motions", e.motions);
}

namespace {

bool finite_all(std::initializer_list<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void validate_element(const Element& e, const std::string& where) {
  const Texture& t = e.texture;
  const Shape& s = e.shape;
  bool ok = finite_all({e.x, e.y, t.scale, t.contrast, s.width, s.height, s.radius, s.hole_radius, s.hole_dx,
                        s.hole_dy});
  for (float c : t.color) ok = ok && std::isfinite(c);
  for (float c : t.color2) ok = ok && std::isfinite(c);
  if (!ok) throw InputError(where + ": non-finite parameter");
  if (t.scale <= 0.0) throw InputError(where + ": texture scale must be positive");
  for (const Motion& m : e.motions) {
    bool finite = finite_all({m.vx, m.vy, m.cx, m.cy, m.omega, m.scale, m.amplitude, m.frequency, m.wavelength});
    for (double a : m.affine) finite = finite && std::isfinite(a);
    if (!finite) throw InputError(where + ": non-finite motion parameter");
    if (m.kind == Motion::Kind::zoom && m.scale <= 0.0) throw InputError(where + ": zoom scale must be positive");
    if (m.kind == Motion::Kind::nonrigid && m.wavelength <= 0.0) {
      throw InputError(where + ": articulation wavelength must be positive");
    }
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (width < 1 || height < 2) throw InputError("scene canvas must be at least 1x2");
  if (channels != 1 && channels != 3) throw InputError("scene channels must be 1 or 3");
  if (frames < 1) throw InputError("scene needs at least one frame");
  if (oversampling < height) {
    throw InputError("oversampling R=" + std::to_string(oversampling) + " must be >= height " +
                     std::to_string(height));
  }
  if (!std::isfinite(margin)) throw InputError("scene margin must be finite");
  validate_element(background, "background");
  for (std::size_t i = 0; i < elements.size(); ++i) validate_element(elements[i], "element " + std::to_string(i));
}

SceneSpec parse_scene(std::string_view json_text) {
  SceneSpec spec;
  try {
    const json j = json::parse(json_text);
    read(j, "width", spec.width);
    read(j, "height", spec.height);
    read(j, "channels", spec.channels);
    read(j, "frames", spec.frames);
    read(j, "oversampling", spec.oversampling);
    read(j, "margin", spec.margin);
    read(j, "background", spec.background);
    read(j, "elements", spec.elements);
  } catch (const json::exception& e) {
    throw InputError(std::string("scene spec: ") + e.what());
  }
  spec.background.shape.kind = Shape::Kind::full;
  spec.validate();
  return spec;
}

std::string scene_to_json(const SceneSpec& spec, int indent) {
  const json j{{"width", spec.width},          {"height", spec.height},   {"channels", spec.channels},
               {"frames", spec.frames},        {"oversampling", spec.oversampling},
               {"margin", spec.margin},        {"background", spec.background},
               {"elements", spec.elements}};
  return j.dump(indent);
}

SceneSpec load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open scene spec " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scene(buffer.str());
}

void save_scene(const SceneSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write scene spec " + path.string());
  out << scene_to_json(spec) << '\n';
}

}  // namespace unroll
