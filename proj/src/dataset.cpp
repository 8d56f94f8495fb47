#include "bmdsr/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "bmdsr/common.hpp"
#include "bmdsr/png_io.hpp"

namespace bmdsr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string manifest_to_string(const DatasetManifest& m) {
  ordered_json j;
  j["format_version"] = m.format_version;
  j["scale"] = m.scale;
  j["window"] = m.window;
  j["stride"] = m.stride;
  j["kernel"] = m.kernel;
  ordered_json splits = ordered_json::array();
  for (const auto& sp : m.splits) {
    ordered_json js;
    js["split"] = sp.split;
    ordered_json samples = ordered_json::array();
    for (const auto& s : sp.samples) {
      ordered_json jr;
      jr["id"] = s.id;
      jr["source_id"] = s.source_id;
      jr["frame_window"] = {s.frame_window[0], s.frame_window[1]};
      jr["dir"] = s.dir;
      samples.push_back(std::move(jr));
    }
    js["samples"] = std::move(samples);
    splits.push_back(std::move(js));
  }
  j["splits"] = std::move(splits);
  j["warnings"] = m.warnings;
  return j.dump(2) + "\n";
}

DatasetManifest manifest_from_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("manifest: invalid json: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
      throw DataError("manifest: unsupported format_version " +
                      std::to_string(m.format_version));
    m.scale = j.at("scale").get<int>();
    m.window = j.at("window").get<int>();
    m.stride = j.at("stride").get<int>();
    m.kernel = j.at("kernel").get<std::string>();
    for (const auto& js : j.at("splits")) {
      SplitRecord sp;
      sp.split = js.at("split").get<std::string>();
      for (const auto& jr : js.at("samples")) {
        SampleRecord s;
        s.id = jr.at("id").get<std::string>();
        s.source_id = jr.at("source_id").get<std::string>();
        s.frame_window[0] = jr.at("frame_window").at(0).get<int>();
        s.frame_window[1] = jr.at("frame_window").at(1).get<int>();
        s.dir = jr.at("dir").get<std::string>();
        sp.samples.push_back(std::move(s));
      }
      m.splits.push_back(std::move(sp));
    }
    if (j.contains("warnings"))
      for (const auto& w : j.at("warnings")) m.warnings.push_back(w.get<std::string>());
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("manifest: missing or bad field: ") + e.what());
  }
  return m;
}

const SplitRecord* find_split(const DatasetManifest& m, const std::string& split) {
  for (const auto& sp : m.splits)
    if (sp.split == split) return &sp;
  return nullptr;
}

namespace {

std::vector<std::string> sample_files(const SampleRecord& rec) {
  std::vector<std::string> files{"blur_lr.png", "sharp_hr.png"};
  for (int i = 1; i <= 7; ++i) files.push_back("sharp_lr_" + std::to_string(i) + ".png");
  for (auto& f : files) f = rec.dir + "/" + f;
  return files;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& root) {
  DatasetManifest m = manifest_from_string(read_file(root / "manifest.json"));

  // Split hygiene: no source may appear in more than one split.
  std::vector<std::string> seen_sources;
  for (const auto& sp : m.splits) {
    std::vector<std::string> sources;
    for (const auto& s : sp.samples) sources.push_back(s.source_id);
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    for (const auto& src : sources)
      if (std::find(seen_sources.begin(), seen_sources.end(), src) != seen_sources.end())
        throw DataError("manifest: source '" + src + "' appears in multiple splits");
    seen_sources.insert(seen_sources.end(), sources.begin(), sources.end());
  }

  for (const auto& sp : m.splits)
    for (const auto& s : sp.samples)
      for (const auto& f : sample_files(s))
        if (!fs::exists(root / f)) throw DataError("manifest: missing file " + f);
  return m;
}

Image synthesize_blur(const std::vector<Image>& frames) {
  if (frames.size() != 7)
    throw DataError("synthesize_blur: expected 7 frames, got " + std::to_string(frames.size()));
  for (size_t i = 1; i < frames.size(); ++i)
    if (!frames[i].same_dims(frames[0]))
      throw DataError("synthesize_blur: frame " + std::to_string(i) + " dims differ from frame 0");
  Image out(frames[0].h, frames[0].w, frames[0].c);
  for (size_t p = 0; p < out.data.size(); ++p) {
    double acc = 0.0;
    for (const auto& f : frames) acc += f.data[p];
    out.data[p] = static_cast<float>(acc / 7.0);
  }
  return out;
}

SynthSample synthesize_sample(const std::vector<Image>& frames_hr, int scale, ResampleKernel k) {
  Image blur_hr = synthesize_blur(frames_hr);
  SynthSample s;
  s.blur_lr = downsample(blur_hr, scale, k);
  s.sharp_lr.reserve(7);
  for (const auto& f : frames_hr) s.sharp_lr.push_back(downsample(f, scale, k));
  // sharp_hr is the central frame cropped to the same divisible region the
  // downsampler used, so sharp_hr.dims == scale * blur_lr.dims exactly.
  s.sharp_hr = crop(frames_hr[3], 0, 0, s.blur_lr.h * scale, s.blur_lr.w * scale);
  return s;
}

namespace {

struct WindowJob {
  std::string source_id;
  int start = 0;               // first HR frame index
  const std::vector<Image>* frames = nullptr;
  std::string split;
  std::string id;
  std::string dir;
};

DatasetManifest build_dataset_impl(
    const std::vector<std::pair<std::string, std::vector<Image>>>& sources,
    std::vector<std::string> warnings, const fs::path& out_root, const BuildOptions& opt) {
  if (opt.stride < 1) throw UsageError("stride must be >= 1");
  if (opt.workers < 1) throw UsageError("workers must be >= 1");

  // Last-k sources become the test split (fixed, order-based — mirrors a fixed
  // train/test video split).
  int n = static_cast<int>(sources.size());
  int n_test = 0;
  if (opt.test_fraction > 0.0 && n >= 2) {
    n_test = std::max(1, static_cast<int>(std::floor(n * opt.test_fraction + 0.5)));
    n_test = std::min(n_test, n - 1);
  } else if (opt.test_fraction > 0.0 && n < 2) {
    warnings.push_back("only one source sequence; test split left empty");
  }

  std::vector<WindowJob> jobs;
  for (int si = 0; si < n; ++si) {
    const auto& [source_id, frames] = sources[si];
    int f = static_cast<int>(frames.size());
    if (f < 7) {
      warnings.push_back("source '" + source_id + "' has " + std::to_string(f) +
                         " frames (<7); skipped");
      continue;
    }
    std::string split = (si >= n - n_test) ? "test" : "train";
    for (int start = 0; start + 7 <= f; start += opt.stride) {
      bool unreadable = false;
      for (int k = start; k < start + 7; ++k)
        if (frames[k].empty()) unreadable = true;
      if (unreadable) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "_w%03d", start);
        warnings.push_back("sample '" + source_id + buf + "' dropped: window contains an unreadable frame");
        continue;
      }
      WindowJob job;
      job.source_id = source_id;
      job.start = start;
      job.frames = &frames;
      job.split = split;
      char buf[16];
      std::snprintf(buf, sizeof buf, "_w%03d", start);
      job.id = source_id + buf;
      job.dir = split + "/" + job.id;
      jobs.push_back(std::move(job));
    }
  }

  // Window synthesis is embarrassingly parallel: each worker writes only its
  // own sample directory; the manifest is assembled afterwards in job order.
  std::vector<std::optional<SampleRecord>> results(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex err_mu;
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const WindowJob& job = jobs[i];
      try {
        std::vector<Image> window(job.frames->begin() + job.start,
                                  job.frames->begin() + job.start + 7);
        SynthSample s = synthesize_sample(window, opt.scale, opt.kernel);
        fs::path dir = out_root / job.dir;
        fs::create_directories(dir);
        write_png(dir / "blur_lr.png", s.blur_lr);
        write_png(dir / "sharp_hr.png", s.sharp_hr);
        for (int k = 0; k < 7; ++k)
          write_png(dir / ("sharp_lr_" + std::to_string(k + 1) + ".png"), s.sharp_lr[k]);
        SampleRecord rec;
        rec.id = job.id;
        rec.source_id = job.source_id;
        rec.frame_window = {job.start, job.start + 6};
        rec.dir = job.dir;
        results[i] = std::move(rec);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (first_error.empty())
          first_error = "sample '" + job.id + "': " + e.what();
        return;
      }
    }
  };

  int nw = std::min(opt.workers, static_cast<int>(jobs.empty() ? 1 : jobs.size()));
  if (nw <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!first_error.empty()) throw DataError("dataset build failed: " + first_error);

  DatasetManifest m;
  m.scale = opt.scale;
  m.stride = opt.stride;
  m.kernel = kernel_name(opt.kernel);
  m.splits = {SplitRecord{"train", {}}, SplitRecord{"test", {}}};
  for (const auto& rec : results) {
    if (!rec) continue;
    auto& sp = (rec->dir.rfind("test/", 0) == 0) ? m.splits[1] : m.splits[0];
    sp.samples.push_back(*rec);
  }
  m.warnings = std::move(warnings);

  write_file_atomic(out_root / "manifest.json", manifest_to_string(m));
  return m;
}

}  // namespace

DatasetManifest build_dataset_toy(const ToySpec& spec, const fs::path& out_root,
                                  const BuildOptions& opt) {
  if (spec.sequences < 1) throw DataError("toy spec: sequences must be >= 1");
  std::vector<std::pair<std::string, std::vector<Image>>> sources;
  sources.reserve(spec.sequences);
  for (int s = 0; s < spec.sequences; ++s) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "toy%03d", s);
    sources.emplace_back(buf, generate_toy_video(spec, s));
  }
  return build_dataset_impl(sources, {}, out_root, opt);
}

DatasetManifest build_dataset_dirs(const fs::path& frames_root, const fs::path& out_root,
                                   const BuildOptions& opt) {
  if (!fs::is_directory(frames_root))
    throw DataError("source directory not found: " + frames_root.string());
  std::vector<fs::path> seq_dirs;
  for (const auto& e : fs::directory_iterator(frames_root))
    if (e.is_directory()) seq_dirs.push_back(e.path());
  std::sort(seq_dirs.begin(), seq_dirs.end());
  if (seq_dirs.empty()) throw DataError("no sequence subdirectories in " + frames_root.string());

  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, std::vector<Image>>> sources;
  for (const auto& dir : seq_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Image> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
      try {
        frames.push_back(read_png(f));
      } catch (const std::exception& e) {
        // Placeholder keeps frame indices aligned; windows touching it are
        // dropped later with a per-sample warning.
        warnings.push_back("unreadable frame " + f.string() + ": " + e.what());
        frames.emplace_back();
      }
    }
    sources.emplace_back(dir.filename().string(), std::move(frames));
  }
  return build_dataset_impl(sources, std::move(warnings), out_root, opt);
}

LoadedSample load_sample(const fs::path& root, const SampleRecord& rec) {
  LoadedSample s;
  s.id = rec.id;
  fs::path dir = root / rec.dir;
  s.blur_lr = read_png(dir / "blur_lr.png");
  s.sharp_hr = read_png(dir / "sharp_hr.png");
  s.sharp_lr.reserve(7);
  for (int i = 1; i <= 7; ++i)
    s.sharp_lr.push_back(read_png(dir / ("sharp_lr_" + std::to_string(i) + ".png")));
  return s;
}

}  // namespace bmdsr
