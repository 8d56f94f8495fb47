// Python module exposing the pipeline's main operations: metrics, resampling,
// blur synthesis, toy data, dataset building, the model (infer/decompose),
// checkpoints, training, evaluation, and the ablation.
//
// Images cross the boundary as HxWxC float32 arrays in [0,1]; structured
// results cross as JSON strings (the python package parses them).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmdsr/ablation.hpp"
#include "bmdsr/checkpoint.hpp"
#include "bmdsr/common.hpp"
#include "bmdsr/dataset.hpp"
#include "bmdsr/eval.hpp"
#include "bmdsr/metrics.hpp"
#include "bmdsr/networks.hpp"
#include "bmdsr/png_io.hpp"
#include "bmdsr/resample.hpp"
#include "bmdsr/toy_video.hpp"
#include "bmdsr/training.hpp"

namespace py = pybind11;
using namespace bmdsr;

namespace {

Image image_from_array(const py::array& arr) {
  auto a = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a || a.ndim() != 3) throw DataError("expected an HxWxC float array");
  Image img(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)));
  std::memcpy(img.data.data(), a.data(), sizeof(float) * img.data.size());
  return img;
}

py::array_t<float> array_from_image(const Image& img) {
  py::array_t<float> a({img.h, img.w, img.c});
  std::memcpy(a.mutable_data(), img.data.data(), sizeof(float) * img.data.size());
  return a;
}

BuildOptions build_options(int scale, int stride, const std::string& kernel, int workers,
                           double test_fraction) {
  BuildOptions opt;
  opt.scale = scale;
  opt.stride = stride;
  opt.kernel = kernel_from_name(kernel);
  opt.workers = workers;
  opt.test_fraction = test_fraction;
  return opt;
}

// Model handle: owns the network plus its config.
struct PyModel {
  Model model;
  ModelConfig cfg;

  static PyModel create(int scale, const std::string& variant, double channel_multiplier,
                        const std::string& extractor, std::uint64_t seed) {
    ModelConfig cfg;
    cfg.scale = scale;
    cfg.variant = variant_from_name(variant);
    cfg.channel_multiplier = channel_multiplier;
    cfg.extractor = extractor;
    cfg.seed = seed;
    cfg.validate();
    return PyModel{Model::create(cfg), cfg};
  }

  static PyModel load(const std::string& path) {
    Checkpoint cp = load_checkpoint(path);
    return PyModel{model_from_checkpoint(cp), cp.config};
  }

  void save(const std::string& path) const {
    save_checkpoint(path, checkpoint_of_model(model, nlohmann::ordered_json::object()));
  }

  py::array_t<float> infer(const py::array& blur_lr) const {
    return array_from_image(infer_image(model, image_from_array(blur_lr)));
  }

  py::tuple decompose(const py::array& blur_lr) const {
    DecomposeResult res = decompose_image(model, image_from_array(blur_lr));
    py::list frames;
    for (const auto& f : res.frames) frames.append(array_from_image(f));
    return py::make_tuple(frames, res.report.dump());
  }

  std::string config_json() const { return config_to_json(cfg).dump(); }

  std::vector<std::pair<std::string, long long>> parameter_counts() const {
    ParameterCount pc = model.count_parameters();
    auto out = pc.per_subnet;
    out.emplace_back("total", pc.total);
    return out;
  }
};

}  // namespace

PYBIND11_MODULE(_bmdsr, m) {
  m.doc() = "blind motion-deblurring super-resolution core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  // Metrics.
  m.def(
      "psnr", [](const py::array& a, const py::array& b) {
        return psnr(image_from_array(a), image_from_array(b));
      },
      py::arg("a"), py::arg("b"), "Peak signal-to-noise ratio in dB, capped at 100.");
  m.def(
      "ssim", [](const py::array& a, const py::array& b) {
        return ssim(image_from_array(a), image_from_array(b));
      },
      py::arg("a"), py::arg("b"), "Structural similarity (11x11 Gaussian, valid windows).");

  // Resampling and blur synthesis.
  m.def(
      "resize_bicubic",
      [](const py::array& img, int out_h, int out_w, bool antialias) {
        return array_from_image(resize_bicubic(image_from_array(img), out_h, out_w, antialias));
      },
      py::arg("img"), py::arg("out_h"), py::arg("out_w"), py::arg("antialias") = true);
  m.def(
      "downsample",
      [](const py::array& img, int scale, const std::string& kernel) {
        return array_from_image(downsample(image_from_array(img), scale, kernel_from_name(kernel)));
      },
      py::arg("img"), py::arg("scale"), py::arg("kernel") = "bicubic");
  m.def(
      "upscale_bicubic",
      [](const py::array& img, int scale) {
        return array_from_image(upscale_bicubic(image_from_array(img), scale));
      },
      py::arg("img"), py::arg("scale"));
  m.def(
      "synthesize_blur",
      [](const std::vector<py::array>& frames) {
        std::vector<Image> imgs;
        imgs.reserve(frames.size());
        for (const auto& f : frames) imgs.push_back(image_from_array(f));
        return array_from_image(synthesize_blur(imgs));
      },
      py::arg("frames"), "Pixel-wise mean of exactly 7 same-shaped frames.");

  // PNG io.
  m.def("read_png", [](const std::string& path) { return array_from_image(read_png(path)); },
        py::arg("path"));
  m.def(
      "write_png",
      [](const std::string& path, const py::array& img) { write_png(path, image_from_array(img)); },
      py::arg("path"), py::arg("img"));

  // Toy data and dataset building.
  m.def(
      "toy_video",
      [](const std::string& spec_json, int sequence) {
        ToySpec spec = spec_json == "default" ? default_toy_spec() : parse_toy_spec(spec_json);
        py::list out;
        for (const auto& f : generate_toy_video(spec, sequence)) out.append(array_from_image(f));
        return out;
      },
      py::arg("spec_json") = "default", py::arg("sequence") = 0);
  m.def(
      "build_toy_dataset",
      [](const std::string& spec_json, const std::string& out_root, int scale, int stride,
         const std::string& kernel, int workers, double test_fraction) {
        ToySpec spec = spec_json == "default" ? default_toy_spec() : parse_toy_spec(spec_json);
        DatasetManifest man = build_dataset_toy(
            spec, out_root, build_options(scale, stride, kernel, workers, test_fraction));
        return manifest_to_string(man);
      },
      py::arg("spec_json"), py::arg("out_root"), py::arg("scale") = 4, py::arg("stride") = 7,
      py::arg("kernel") = "bicubic", py::arg("workers") = 1,
      py::arg("test_fraction") = 1.0 / 3.0);
  m.def(
      "build_dataset",
      [](const std::string& frames_root, const std::string& out_root, int scale, int stride,
         const std::string& kernel, int workers, double test_fraction) {
        DatasetManifest man = build_dataset_dirs(
            frames_root, out_root, build_options(scale, stride, kernel, workers, test_fraction));
        return manifest_to_string(man);
      },
      py::arg("frames_root"), py::arg("out_root"), py::arg("scale") = 4, py::arg("stride") = 7,
      py::arg("kernel") = "bicubic", py::arg("workers") = 1,
      py::arg("test_fraction") = 1.0 / 3.0);

  // Model.
  py::class_<PyModel>(m, "Model")
      .def_static("create", &PyModel::create, py::arg("scale"), py::arg("variant"),
                  py::arg("channel_multiplier") = 1.0,
                  py::arg("extractor") = "fixed-random-conv", py::arg("seed") = 1)
      .def_static("load", &PyModel::load, py::arg("path"))
      .def("save", &PyModel::save, py::arg("path"))
      .def("infer", &PyModel::infer, py::arg("blur_lr"),
           "Super-resolve one blurred LR image (HxWx3 float array).")
      .def("decompose", &PyModel::decompose, py::arg("blur_lr"),
           "Recover the 7 sharp frames; returns (frames, report_json).")
      .def("config_json", &PyModel::config_json)
      .def("parameter_counts", &PyModel::parameter_counts);

  // Training / evaluation / ablation; configs and reports are JSON strings.
  m.def(
      "train",
      [](const std::string& config_json) {
        TrainConfig cfg = train_config_from_json(nlohmann::json::parse(config_json));
        TrainResult res = train(cfg);
        nlohmann::ordered_json j;
        j["steps"] = res.steps;
        j["epochs_run"] = res.epochs_run;
        j["best_val_psnr"] = res.best_val_psnr;
        j["stopped_early"] = res.stopped_early;
        j["last_checkpoint"] = res.last_checkpoint;
        j["best_checkpoint"] = res.best_checkpoint;
        j["metrics_log"] = res.metrics_log;
        return j.dump();
      },
      py::arg("config_json"));
  m.def(
      "evaluate",
      [](const std::string& data_root, const std::string& split, const std::string& predictor,
         const std::string& checkpoint) {
        DatasetManifest man = load_manifest(data_root);
        EvalInfo info;
        info.scale = man.scale;
        Predictor pred;
        PyModel holder{Model{}, ModelConfig{}};
        if (predictor == "model") {
          if (checkpoint.empty()) throw UsageError("predictor 'model' needs a checkpoint");
          holder = PyModel::load(checkpoint);
          pred = model_predictor(holder.model);
          info.scale = holder.cfg.scale;
          info.variant = variant_name(holder.cfg.variant);
          info.checkpoint_hash = hex64(hash_file(checkpoint));
        } else if (predictor == "identity") {
          pred = identity_predictor();
          info.variant = "identity";
          info.checkpoint_hash = "none";
        } else if (predictor == "bicubic") {
          pred = bicubic_predictor(man.scale);
          info.variant = "bicubic";
          info.checkpoint_hash = "none";
        } else {
          throw UsageError("unknown predictor: " + predictor);
        }
        return evaluate(data_root, split, pred, info).json.dump();
      },
      py::arg("data_root"), py::arg("split") = "test", py::arg("predictor") = "model",
      py::arg("checkpoint") = "");
  m.def(
      "ablate",
      [](const std::string& data_root, const std::string& out_dir,
         const std::vector<std::string>& variants, const std::vector<int>& scales,
         const std::vector<std::uint64_t>& seeds, double channel_multiplier, int steps,
         int steps_per_epoch, int batch_size, int patch, double lr, const std::string& split) {
        AblationOptions opt;
        opt.data_root = data_root;
        opt.out_dir = out_dir;
        opt.variants.clear();
        for (const auto& v : variants) opt.variants.push_back(variant_from_name(v));
        opt.scales = scales;
        opt.seeds = seeds;
        opt.channel_multiplier = channel_multiplier;
        opt.steps = steps;
        opt.steps_per_epoch = steps_per_epoch;
        opt.batch_size = batch_size;
        opt.patch = patch;
        opt.lr = lr;
        opt.eval_split = split;
        return run_ablation(opt).json.dump();
      },
      py::arg("data_root"), py::arg("out_dir"),
      py::arg("variants") = std::vector<std::string>{"srnet", "c", "fc", "fcb"},
      py::arg("scales") = std::vector<int>{2, 3, 4},
      py::arg("seeds") = std::vector<std::uint64_t>{1}, py::arg("channel_multiplier") = 0.25,
      py::arg("steps") = 200, py::arg("steps_per_epoch") = 25, py::arg("batch_size") = 2,
      py::arg("patch") = 0, py::arg("lr") = 1e-3, py::arg("split") = "test");
}
