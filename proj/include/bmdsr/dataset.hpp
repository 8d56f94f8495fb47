#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "bmdsr/image.hpp"
#include "bmdsr/resample.hpp"
#include "bmdsr/toy_video.hpp"

namespace bmdsr {

struct SampleRecord {
  std::string id;
  std::string source_id;
  std::array<int, 2> frame_window{0, 6};  // inclusive 0-based HR frame indices
  std::string dir;                        // relative to dataset root
};

struct SplitRecord {
  std::string split;  // train | test
  std::vector<SampleRecord> samples;
};

struct DatasetManifest {
  int format_version = 1;
  int scale = 4;
  int window = 7;
  int stride = 7;
  std::string kernel = "bicubic";
  std::vector<SplitRecord> splits;
  std::vector<std::string> warnings;
};

std::string manifest_to_string(const DatasetManifest& m);
DatasetManifest manifest_from_string(const std::string& text);
// Reads <root>/manifest.json, checks split hygiene and that every referenced
// file exists.
DatasetManifest load_manifest(const std::filesystem::path& root);
const SplitRecord* find_split(const DatasetManifest& m, const std::string& split);

// Pixel-wise mean of exactly 7 same-shaped frames.
Image synthesize_blur(const std::vector<Image>& frames);

struct SynthSample {
  Image blur_lr;
  std::vector<Image> sharp_lr;  // 7 frames
  Image sharp_hr;               // central frame (index 4 of 1..7) at HR
};

// Full per-window synthesis chain, in float space (pre-quantization).
SynthSample synthesize_sample(const std::vector<Image>& frames_hr, int scale,
                              ResampleKernel k = ResampleKernel::bicubic);

struct BuildOptions {
  int scale = 4;
  int stride = 7;
  ResampleKernel kernel = ResampleKernel::bicubic;
  int workers = 1;
  // Fraction of source sequences held out as the test split (the last ones in
  // source order). 0 puts everything in train.
  double test_fraction = 1.0 / 3.0;
};

DatasetManifest build_dataset_toy(const ToySpec& spec, const std::filesystem::path& out_root,
                                  const BuildOptions& opt);
// frames_root contains one subdirectory per video, each holding PNG frames in
// lexicographic order.
DatasetManifest build_dataset_dirs(const std::filesystem::path& frames_root,
                                   const std::filesystem::path& out_root, const BuildOptions& opt);

struct LoadedSample {
  std::string id;
  Image blur_lr;
  std::vector<Image> sharp_lr;
  Image sharp_hr;
};

LoadedSample load_sample(const std::filesystem::path& root, const SampleRecord& rec);

}  // namespace bmdsr
