#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "bmdsr/common.hpp"
#include "bmdsr/dataset.hpp"
#include "bmdsr/image.hpp"
#include "bmdsr/png_io.hpp"
#include "bmdsr/resample.hpp"
#include "bmdsr/rng.hpp"
#include "bmdsr/toy_video.hpp"

using namespace bmdsr;
namespace fs = std::filesystem;

namespace {

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w, 3);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

// Smooth multi-frequency pattern standing in for a natural test image.
Image pattern_image(int h, int w) {
  Image img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0.5 + 0.25 * std::sin(2.0 * M_PI * (x + 3 * c) / 17.0) +
                   0.2 * std::cos(2.0 * M_PI * (y - 2 * c) / 11.0) +
                   0.05 * std::sin(2.0 * M_PI * (x + y) / 7.0);
        img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return img;
}

double cubic_ref(double x) {
  const double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

// Independent reference: direct (non-separable) 2-D bicubic with antialias
// stretch, double precision throughout.
Image bicubic_down_ref(const Image& img, int n) {
  int oh = img.h / n, ow = img.w / n;
  Image out(oh, ow, img.c);
  double radius = 2.0 * n;
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double sy = (oy + 0.5) * n - 0.5;
      double sx = (ox + 0.5) * n - 0.5;
      for (int c = 0; c < img.c; ++c) {
        double acc = 0.0, wsum = 0.0;
        for (int y = static_cast<int>(std::ceil(sy - radius));
             y <= static_cast<int>(std::floor(sy + radius)); ++y)
          for (int x = static_cast<int>(std::ceil(sx - radius));
               x <= static_cast<int>(std::floor(sx + radius)); ++x) {
            double w = cubic_ref((y - sy) / n) * cubic_ref((x - sx) / n);
            int yc = std::clamp(y, 0, img.h - 1);
            int xc = std::clamp(x, 0, img.w - 1);
            acc += w * img.at(yc, xc, c);
            wsum += w;
          }
        out.at(oy, ox, c) = static_cast<float>(acc / wsum);
      }
    }
  return out;
}

Image box_down_ref(const Image& img, int n) {
  Image out(img.h / n, img.w / n, img.c);
  for (int oy = 0; oy < out.h; ++oy)
    for (int ox = 0; ox < out.w; ++ox)
      for (int c = 0; c < img.c; ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx = 0; dx < n; ++dx) acc += img.at(oy * n + dy, ox * n + dx, c);
        out.at(oy, ox, c) = static_cast<float>(acc / (n * n));
      }
  return out;
}

// Mass centroid of deviation from the per-channel median (background).
std::pair<double, double> shape_centroid(const Image& img) {
  float med[3];
  for (int c = 0; c < 3; ++c) {
    std::vector<float> vals;
    vals.reserve(img.data.size() / 3);
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) vals.push_back(img.at(y, x, c));
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    med[c] = vals[vals.size() / 2];
  }
  double mx = 0.0, my = 0.0, mass = 0.0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double w = 0.0;
      for (int c = 0; c < 3; ++c)
        w = std::max(w, static_cast<double>(std::abs(img.at(y, x, c) - med[c])));
      mx += w * (x + 0.5);
      my += w * (y + 0.5);
      mass += w;
    }
  return {mx / mass, my / mass};
}

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("bmdsr_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("png encode/decode round-trips at 8-bit precision") {
  Rng rng(11);
  Image img = random_image(21, 13, rng);
  std::string bytes = encode_png(img);
  Image back = decode_png(bytes);
  REQUIRE(back.h == img.h);
  REQUIRE(back.w == img.w);
  REQUIRE(back.c == 3);
  // decode(encode(x)) must be exactly the quantized x ...
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == dequantize_u8(quantize_u8(img.data[i])));
  // ... and within half a quantization step of the original.
  CHECK(max_abs_diff(img, back) <= 0.5f / 255.f + 1e-6f);

  CHECK_THROWS_AS(decode_png(std::string("not a png at all")), DataError);
}

TEST_CASE("png file io is atomic and readable back") {
  fs::path dir = temp_dir("png");
  Rng rng(12);
  Image img = random_image(16, 16, rng);
  write_png(dir / "a.png", img);
  Image back = read_png(dir / "a.png");
  CHECK(max_abs_diff(img, back) <= 0.5f / 255.f + 1e-6f);
  // No stray temp files left behind.
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), DataError);
}

TEST_CASE("resampling preserves constants and matches block/reference oracles") {
  Image flat(24, 36, 3, 0.5f);
  for (int n : {2, 3, 4}) {
    Image d = downsample(flat, n, ResampleKernel::bicubic);
    CHECK(d.h == 24 / n);
    CHECK(d.w == 36 / n);
    for (float v : d.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));
    Image b = downsample(flat, n, ResampleKernel::box);
    for (float v : b.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-12));
  }
  Image up = upscale_bicubic(flat, 3);
  CHECK(up.h == 72);
  for (float v : up.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-6));

  // 8x8 checkerboard, box, N=2 -> uniform 0.5.
  Image cb(8, 8, 3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) cb.at(y, x, c) = ((x + y) % 2 == 0) ? 1.f : 0.f;
  Image cbd = downsample(cb, 2, ResampleKernel::box);
  for (float v : cbd.data) CHECK(v == doctest::Approx(0.5f).epsilon(1e-12));

  Image nat = pattern_image(63, 57);  // forces crop for every N
  for (int n : {2, 3, 4}) {
    Image got = downsample(nat, n, ResampleKernel::bicubic);
    Image cropped = crop(nat, 0, 0, (nat.h / n) * n, (nat.w / n) * n);
    Image ref = bicubic_down_ref(cropped, n);
    CHECK(got.h == ref.h);
    CHECK(got.w == ref.w);
    CHECK(max_abs_diff(got, ref) < 1e-5f);
    Image gotb = downsample(nat, n, ResampleKernel::box);
    CHECK(max_abs_diff(gotb, box_down_ref(cropped, n)) < 1e-6f);
  }

  CHECK_THROWS_AS(downsample(flat, 5), DataError);
  CHECK_THROWS_AS(downsample(flat, 1), DataError);
}

TEST_CASE("grid mosaic lays out tiles with separators") {
  std::vector<Image> tiles(5, Image(4, 6, 3, 0.25f));
  Image g = make_grid(tiles, 3, 2, 1.0f);
  CHECK(g.h == 2 * 4 + 2);
  CHECK(g.w == 3 * 6 + 2 * 2);
  CHECK(g.at(0, 0, 0) == 0.25f);
  CHECK(g.at(0, 6, 0) == 1.0f);   // vertical separator
  CHECK(g.at(4, 0, 0) == 1.0f);   // horizontal separator
  CHECK(g.at(5, 21, 0) == 1.0f);  // bottom-right cell is empty padding
  std::vector<Image> bad = {Image(4, 6, 3), Image(4, 5, 3)};
  CHECK_THROWS_AS(make_grid(bad, 2), DataError);
}

TEST_CASE("toy video is deterministic and honors zero velocity") {
  ToySpec spec = default_toy_spec();
  spec.frames = 5;
  auto a = generate_toy_video(spec, 0);
  auto b = generate_toy_video(spec, 0);
  REQUIRE(a.size() == 5);
  for (size_t i = 0; i < a.size(); ++i) CHECK(max_abs_diff(a[i], b[i]) == 0.0f);
  // Different sequence index -> different content.
  auto c = generate_toy_video(spec, 1);
  CHECK(max_abs_diff(a[0], c[0]) > 0.0f);

  ToySpec still;
  still.width = still.height = 48;
  still.frames = 4;
  still.background = "solid";
  ToyShape s;
  s.cx = 20.f;
  s.cy = 24.f;
  s.hx = s.hy = 5.f;
  s.vx = s.vy = 0.f;
  s.color[0] = 0.9f;
  still.shapes = {s};
  auto frames = generate_toy_video(still, 0);
  for (size_t i = 1; i < frames.size(); ++i) CHECK(max_abs_diff(frames[0], frames[i]) == 0.0f);
}

TEST_CASE("toy square moving 2 px/frame travels 12 px over 7 frames") {
  ToySpec spec;
  spec.width = spec.height = 64;
  spec.frames = 7;
  spec.background = "solid";
  ToyShape s;
  s.kind = ToyShape::Kind::rect;
  s.cx = 20.f;
  s.cy = 30.f;
  s.hx = s.hy = 5.f;
  s.vx = 2.f;
  s.vy = 0.f;
  s.color[0] = 0.95f;
  s.color[1] = 0.2f;
  s.color[2] = 0.2f;
  spec.shapes = {s};
  auto frames = generate_toy_video(spec, 0);
  auto [x1, y1] = shape_centroid(frames.front());
  auto [x7, y7] = shape_centroid(frames.back());
  CHECK(std::abs((x7 - x1) - 12.0) < 0.5);
  CHECK(std::abs(y7 - y1) < 0.5);
}

TEST_CASE("toy shape leaving the canvas is rejected") {
  ToySpec spec;
  spec.width = spec.height = 48;
  spec.frames = 6;
  ToyShape s;
  s.cx = 5.f;
  s.cy = 24.f;
  s.hx = s.hy = 2.f;
  s.vx = -3.f;
  spec.shapes = {s};
  CHECK_THROWS_AS(generate_toy_video(spec, 0), DataError);
}

TEST_CASE("toy spec json round trip") {
  ToySpec spec = default_toy_spec();
  spec.seed = 99;
  ToyShape s;
  s.kind = ToyShape::Kind::circle;
  s.cx = 10.f;
  s.cy = 12.f;
  s.hx = 4.f;
  s.vx = 1.5f;
  spec.shapes = {s};
  ToySpec back = parse_toy_spec(toy_spec_to_json(spec));
  CHECK(back.seed == 99);
  REQUIRE(back.shapes.size() == 1);
  CHECK(back.shapes[0].kind == ToyShape::Kind::circle);
  CHECK(back.shapes[0].vx == doctest::Approx(1.5f));
  CHECK_THROWS_AS(parse_toy_spec("{nope"), DataError);
  CHECK(load_toy_spec("default").width == default_toy_spec().width);
}

TEST_CASE("synthesize_blur is the pixel mean and rejects mismatches") {
  Rng rng(13);
  Image base = random_image(12, 10, rng);
  std::vector<Image> same(7, base);
  CHECK(max_abs_diff(synthesize_blur(same), base) < 1e-7f);

  std::vector<Image> uniform;
  for (int i = 1; i <= 7; ++i) uniform.push_back(Image(8, 8, 3, 0.1f * i));
  Image mean = synthesize_blur(uniform);
  for (float v : mean.data) CHECK(v == doctest::Approx(0.4f).epsilon(1e-6));

  std::vector<Image> bad(7, base);
  bad[3] = Image(12, 11, 3);
  try {
    synthesize_blur(bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("frame 3") != std::string::npos);
  }
  CHECK_THROWS_AS(synthesize_blur(std::vector<Image>(6, base)), DataError);
}

TEST_CASE("synthesized sample respects the shape law and the mean identity") {
  ToySpec spec = default_toy_spec();
  spec.width = 64;
  spec.height = 63;  // not divisible by 2 or 4 -> exercises cropping
  spec.frames = 9;
  auto frames = generate_toy_video(spec, 0);
  for (int n : {2, 3, 4}) {
    std::vector<Image> window(frames.begin(), frames.begin() + 7);
    SynthSample s = synthesize_sample(window, n);
    CHECK(s.sharp_hr.h == n * s.blur_lr.h);
    CHECK(s.sharp_hr.w == n * s.blur_lr.w);
    REQUIRE(s.sharp_lr.size() == 7);
    for (const auto& f : s.sharp_lr) {
      CHECK(f.h == s.blur_lr.h);
      CHECK(f.w == s.blur_lr.w);
    }
    // Oracle: scalar-loop mean, then the independent reference downsampler.
    Image mean(window[0].h, window[0].w, 3);
    for (int y = 0; y < mean.h; ++y)
      for (int x = 0; x < mean.w; ++x)
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (const auto& f : window) acc += f.at(y, x, c);
          mean.at(y, x, c) = static_cast<float>(acc / 7.0);
        }
    Image cropped = crop(mean, 0, 0, (mean.h / n) * n, (mean.w / n) * n);
    CHECK(max_abs_diff(s.blur_lr, bicubic_down_ref(cropped, n)) < 1e-5f);
  }
}

TEST_CASE("dataset build: counts, splits, manifests, loading") {
  fs::path root = temp_dir("dataset");
  ToySpec spec = default_toy_spec();  // 3 sequences x 21 frames
  spec.width = spec.height = 48;
  BuildOptions opt;
  opt.scale = 2;
  opt.stride = 7;
  DatasetManifest m = build_dataset_toy(spec, root, opt);

  // 21 frames, stride 7 -> 3 windows per sequence; 2 train + 1 test sequence.
  const SplitRecord* train = find_split(m, "train");
  const SplitRecord* test = find_split(m, "test");
  REQUIRE(train != nullptr);
  REQUIRE(test != nullptr);
  CHECK(train->samples.size() == 6);
  CHECK(test->samples.size() == 3);
  CHECK(m.warnings.empty());

  // Byte-identical round trip.
  std::string text = manifest_to_string(m);
  CHECK(manifest_to_string(manifest_from_string(text)) == text);
  CHECK(read_file(root / "manifest.json") == text);

  // Reload checks hygiene + file existence.
  DatasetManifest loaded = load_manifest(root);
  CHECK(loaded.scale == 2);
  CHECK(loaded.kernel == "bicubic");

  LoadedSample s = load_sample(root, train->samples[0]);
  CHECK(s.blur_lr.h == 24);
  CHECK(s.sharp_hr.h == 48);
  REQUIRE(s.sharp_lr.size() == 7);

  // Split hygiene violation must be caught.
  DatasetManifest bad = m;
  bad.splits[1].samples[0].source_id = bad.splits[0].samples[0].source_id;
  write_file_atomic(root / "manifest.json", manifest_to_string(bad));
  CHECK_THROWS_AS(load_manifest(root), DataError);
  write_file_atomic(root / "manifest.json", text);  // restore

  // Window-count law on a 20-frame sequence with stride 1: 14 windows.
  ToySpec spec2 = spec;
  spec2.sequences = 1;
  spec2.frames = 20;
  fs::path root2 = temp_dir("dataset2");
  BuildOptions opt2 = opt;
  opt2.stride = 1;
  DatasetManifest m2 = build_dataset_toy(spec2, root2, opt2);
  CHECK(find_split(m2, "train")->samples.size() == 14);
  CHECK(m2.warnings.size() == 1);  // single source -> empty test split warning

  // Too-short sequence is skipped with a warning.
  ToySpec spec3 = spec;
  spec3.sequences = 2;
  spec3.frames = 5;
  fs::path root3 = temp_dir("dataset3");
  DatasetManifest m3 = build_dataset_toy(spec3, root3, opt);
  CHECK(find_split(m3, "train")->samples.empty());
  CHECK(m3.warnings.size() == 2);
}

TEST_CASE("dataset build is reproducible and worker-count independent") {
  ToySpec spec = default_toy_spec();
  spec.width = spec.height = 48;
  spec.sequences = 2;
  BuildOptions opt;
  opt.scale = 2;
  fs::path r1 = temp_dir("repro1");
  fs::path r2 = temp_dir("repro2");
  BuildOptions opt4 = opt;
  opt4.workers = 4;
  DatasetManifest m1 = build_dataset_toy(spec, r1, opt);
  DatasetManifest m2 = build_dataset_toy(spec, r2, opt4);
  CHECK(manifest_to_string(m1) == manifest_to_string(m2));
  CHECK(read_file(r1 / "manifest.json") == read_file(r2 / "manifest.json"));
  const auto& rec = find_split(m1, "train")->samples[0];
  CHECK(hash_file(r1 / rec.dir / "blur_lr.png") == hash_file(r2 / rec.dir / "blur_lr.png"));
  CHECK(hash_file(r1 / rec.dir / "sharp_hr.png") == hash_file(r2 / rec.dir / "sharp_hr.png"));
}
