"""Blind motion-deblurring super-resolution: python surface over the C++ core.

Images are HxWxC float32 arrays in [0, 1]. Structured results (reports,
manifests, configs) come back as plain dicts.
"""

import json

try:
    from . import _bmdsr as _core  # installed wheel layout
except ImportError:  # pragma: no cover - dev tree: extension on PYTHONPATH
    import _bmdsr as _core

DataError = _core.DataError
UsageError = _core.UsageError

psnr = _core.psnr
ssim = _core.ssim
resize_bicubic = _core.resize_bicubic
downsample = _core.downsample
upscale_bicubic = _core.upscale_bicubic
synthesize_blur = _core.synthesize_blur
read_png = _core.read_png
write_png = _core.write_png
toy_video = _core.toy_video


class Model:
    """Network handle: create fresh or load from a checkpoint."""

    def __init__(self, inner):
        self._inner = inner

    @classmethod
    def create(cls, scale, variant, channel_multiplier=1.0,
               extractor="fixed-random-conv", seed=1):
        return cls(_core.Model.create(scale, variant, channel_multiplier,
                                      extractor, seed))

    @classmethod
    def load(cls, path):
        return cls(_core.Model.load(str(path)))

    def save(self, path):
        self._inner.save(str(path))

    def infer(self, blur_lr):
        return self._inner.infer(blur_lr)

    def decompose(self, blur_lr):
        frames, report = self._inner.decompose(blur_lr)
        return list(frames), json.loads(report)

    @property
    def config(self):
        return json.loads(self._inner.config_json())

    def parameter_counts(self):
        return dict(self._inner.parameter_counts())


def build_toy_dataset(out_root, spec=None, scale=4, stride=7, kernel="bicubic",
                      workers=1, test_fraction=1.0 / 3.0):
    """Render toy videos and synthesize a dataset; returns the manifest."""
    spec_json = "default" if spec is None else json.dumps(spec)
    return json.loads(_core.build_toy_dataset(spec_json, str(out_root), scale,
                                              stride, kernel, workers,
                                              test_fraction))


def build_dataset(frames_root, out_root, scale=4, stride=7, kernel="bicubic",
                  workers=1, test_fraction=1.0 / 3.0):
    """Synthesize a dataset from directories of PNG frames; returns the manifest."""
    return json.loads(_core.build_dataset(str(frames_root), str(out_root),
                                          scale, stride, kernel, workers,
                                          test_fraction))


def train(config):
    """Run training from a config dict; returns the result summary."""
    return json.loads(_core.train(json.dumps(config)))


def evaluate(data_root, split="test", predictor="model", checkpoint=""):
    """Score a predictor over a dataset split; returns the evaluation report."""
    return json.loads(_core.evaluate(str(data_root), split, predictor,
                                     str(checkpoint)))


def ablate(data_root, out_dir, variants=("srnet", "c", "fc", "fcb"),
           scales=(2, 3, 4), seeds=(1,), channel_multiplier=0.25, steps=200,
           steps_per_epoch=25, batch_size=2, patch=0, lr=1e-3, split="test"):
    """Train and score every variant/scale/seed cell; returns the report."""
    return json.loads(_core.ablate(str(data_root), str(out_dir), list(variants),
                                   list(scales), list(seeds),
                                   channel_multiplier, steps, steps_per_epoch,
                                   batch_size, patch, lr, split))


__all__ = [
    "DataError", "UsageError", "Model",
    "psnr", "ssim", "resize_bicubic", "downsample", "upscale_bicubic",
    "synthesize_blur", "read_png", "write_png", "toy_video",
    "build_toy_dataset", "build_dataset", "train", "evaluate", "ablate",
]
