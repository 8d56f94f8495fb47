#include "bmdsr/toy_video.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "bmdsr/common.hpp"
#include "bmdsr/rng.hpp"

namespace bmdsr {

using ordered_json = nlohmann::ordered_json;

ToySpec default_toy_spec() { return ToySpec{}; }

namespace {

ToyShape::Kind kind_from_name(const std::string& s) {
  if (s == "rect") return ToyShape::Kind::rect;
  if (s == "circle") return ToyShape::Kind::circle;
  throw DataError("toy spec: unknown shape kind: " + s);
}

const char* kind_name(ToyShape::Kind k) {
  return k == ToyShape::Kind::rect ? "rect" : "circle";
}

// Axis overlap of [c-h, c+h] with the unit pixel cell [x, x+1].
double overlap1d(double c, double h, int x) {
  double lo = std::max(c - h, static_cast<double>(x));
  double hi = std::min(c + h, static_cast<double>(x + 1));
  return std::max(0.0, hi - lo);
}

double coverage(const ToyShape& s, double cx, double cy, int x, int y) {
  if (s.kind == ToyShape::Kind::rect) return overlap1d(cx, s.hx, x) * overlap1d(cy, s.hy, y);
  // Circle: 4x4 supersample. Good to ~1/16 per pixel, plenty for sub-pixel
  // centroid behavior while staying deterministic.
  double r2 = static_cast<double>(s.hx) * s.hx;
  int hit = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double sx = x + (j + 0.5) / 4.0 - cx;
      double sy = y + (i + 0.5) / 4.0 - cy;
      if (sx * sx + sy * sy <= r2) ++hit;
    }
  return hit / 16.0;
}

std::vector<ToyShape> random_shapes(const ToySpec& spec, int seq) {
  Rng rng = Rng::stream(spec.seed, "toy.shapes", static_cast<std::uint64_t>(seq));
  std::vector<ToyShape> shapes(std::max(1, spec.shapes_per_sequence));
  double T = std::max(1, spec.frames - 1);
  for (auto& s : shapes) {
    s.kind = (rng.uniform() < 0.5) ? ToyShape::Kind::rect : ToyShape::Kind::circle;
    s.hx = static_cast<float>(rng.uniform(5.0, 12.0));
    s.hy = (s.kind == ToyShape::Kind::rect) ? static_cast<float>(rng.uniform(5.0, 12.0)) : s.hx;
    for (auto& c : s.color) c = static_cast<float>(rng.uniform(0.1, 0.9));
    // Pick start and end centers inside a safe margin so the full path stays
    // on-canvas; velocity follows from the endpoints.
    double mx = s.hx + 2.0, my = s.hy + 2.0;
    double x0 = rng.uniform(mx, spec.width - mx);
    double y0 = rng.uniform(my, spec.height - my);
    double x1 = rng.uniform(mx, spec.width - mx);
    double y1 = rng.uniform(my, spec.height - my);
    s.cx = static_cast<float>(x0);
    s.cy = static_cast<float>(y0);
    s.vx = static_cast<float>((x1 - x0) / T);
    s.vy = static_cast<float>((y1 - y0) / T);
  }
  return shapes;
}

}  // namespace

ToySpec parse_toy_spec(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw DataError(std::string("toy spec: invalid json: ") + e.what());
  }
  ToySpec spec;
  spec.width = j.value("width", spec.width);
  spec.height = j.value("height", spec.height);
  spec.frames = j.value("frames", spec.frames);
  spec.sequences = j.value("sequences", spec.sequences);
  spec.shapes_per_sequence = j.value("shapes_per_sequence", spec.shapes_per_sequence);
  spec.seed = j.value("seed", spec.seed);
  spec.background = j.value("background", spec.background);
  if (j.contains("shapes")) {
    for (const auto& js : j.at("shapes")) {
      ToyShape s;
      s.kind = kind_from_name(js.value("kind", "rect"));
      s.cx = js.value("cx", s.cx);
      s.cy = js.value("cy", s.cy);
      s.hx = js.value("hx", s.hx);
      s.hy = (s.kind == ToyShape::Kind::circle) ? s.hx : js.value("hy", s.hy);
      s.vx = js.value("vx", s.vx);
      s.vy = js.value("vy", s.vy);
      if (js.contains("color")) {
        auto c = js.at("color");
        for (int i = 0; i < 3; ++i) s.color[i] = c.at(i).get<float>();
      }
      spec.shapes.push_back(s);
    }
  }
  return spec;
}

std::string toy_spec_to_json(const ToySpec& spec) {
  ordered_json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["frames"] = spec.frames;
  j["sequences"] = spec.sequences;
  j["shapes_per_sequence"] = spec.shapes_per_sequence;
  j["seed"] = spec.seed;
  j["background"] = spec.background;
  if (!spec.shapes.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : spec.shapes) {
      ordered_json js;
      js["kind"] = kind_name(s.kind);
      js["cx"] = s.cx;
      js["cy"] = s.cy;
      js["hx"] = s.hx;
      js["hy"] = s.hy;
      js["vx"] = s.vx;
      js["vy"] = s.vy;
      js["color"] = {s.color[0], s.color[1], s.color[2]};
      arr.push_back(js);
    }
    j["shapes"] = arr;
  }
  return j.dump(2) + "\n";
}

ToySpec load_toy_spec(const std::string& path_or_default) {
  if (path_or_default == "default") return default_toy_spec();
  return parse_toy_spec(read_file(path_or_default));
}

std::vector<Image> generate_toy_video(const ToySpec& spec, int sequence_index) {
  if (spec.width < 32 || spec.height < 32)
    throw DataError("toy spec: canvas must be at least 32x32");
  if (spec.frames < 1) throw DataError("toy spec: frames must be >= 1");

  std::vector<ToyShape> shapes =
      spec.shapes.empty() ? random_shapes(spec, sequence_index) : spec.shapes;

  // Reject shapes that ever leave the canvas entirely.
  for (size_t si = 0; si < shapes.size(); ++si) {
    const ToyShape& s = shapes[si];
    for (int t = 0; t < spec.frames; ++t) {
      double cx = s.cx + static_cast<double>(s.vx) * t;
      double cy = s.cy + static_cast<double>(s.vy) * t;
      if (cx + s.hx <= 0 || cx - s.hx >= spec.width || cy + s.hy <= 0 || cy - s.hy >= spec.height)
        throw DataError("toy spec: shape " + std::to_string(si) + " leaves canvas at frame " +
                        std::to_string(t));
    }
  }

  Rng bg_rng = Rng::stream(spec.seed, "toy.background", static_cast<std::uint64_t>(sequence_index));
  float c0[3], c1[3];
  for (int i = 0; i < 3; ++i) c0[i] = static_cast<float>(bg_rng.uniform(0.05, 0.6));
  for (int i = 0; i < 3; ++i) c1[i] = static_cast<float>(bg_rng.uniform(0.4, 0.95));
  bool gradient = spec.background != "solid";

  std::vector<Image> frames;
  frames.reserve(spec.frames);
  for (int t = 0; t < spec.frames; ++t) {
    Image img(spec.height, spec.width, 3);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        float u = gradient ? static_cast<float>(x + y) / (spec.width + spec.height - 2) : 0.f;
        for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c0[ch] + u * (c1[ch] - c0[ch]);
      }
    for (const ToyShape& s : shapes) {
      double cx = s.cx + static_cast<double>(s.vx) * t;
      double cy = s.cy + static_cast<double>(s.vy) * t;
      int x_lo = std::max(0, static_cast<int>(std::floor(cx - s.hx)));
      int x_hi = std::min(spec.width - 1, static_cast<int>(std::ceil(cx + s.hx)));
      int y_lo = std::max(0, static_cast<int>(std::floor(cy - s.hy)));
      int y_hi = std::min(spec.height - 1, static_cast<int>(std::ceil(cy + s.hy)));
      for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x) {
          double a = coverage(s, cx, cy, x, y);
          if (a <= 0.0) continue;
          for (int ch = 0; ch < 3; ++ch) {
            float& v = img.at(y, x, ch);
            v = static_cast<float>((1.0 - a) * v + a * s.color[ch]);
          }
        }
    }
    clamp01(img);
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace bmdsr
