#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bmdsr/image.hpp"

namespace bmdsr {

// Procedural stand-in for extracted video frames: colored shapes on a smooth
// background, moving on straight sub-pixel paths.
struct ToyShape {
  enum class Kind { rect, circle };
  Kind kind = Kind::rect;
  float cx = 0.f, cy = 0.f;   // center at frame 0, pixels
  float hx = 4.f, hy = 4.f;   // half extents (radius = hx for circles)
  float vx = 0.f, vy = 0.f;   // pixels per frame
  float color[3] = {1.f, 1.f, 1.f};
};

struct ToySpec {
  int width = 96;
  int height = 96;
  int frames = 21;
  int sequences = 3;
  int shapes_per_sequence = 4;
  std::uint64_t seed = 1;
  std::string background = "gradient";  // gradient | solid
  // When non-empty these exact shapes are used for every sequence; otherwise
  // shapes are drawn from the seed (per-sequence streams).
  std::vector<ToyShape> shapes;
};

ToySpec default_toy_spec();

// Accepts a JSON file path or the literal "default".
ToySpec load_toy_spec(const std::string& path_or_default);
ToySpec parse_toy_spec(const std::string& json_text);
std::string toy_spec_to_json(const ToySpec& spec);

// Renders one sequence. Deterministic in (spec, sequence_index). Throws
// DataError if a shape's bounding box ever leaves the canvas entirely.
std::vector<Image> generate_toy_video(const ToySpec& spec, int sequence_index = 0);

}  // namespace bmdsr
