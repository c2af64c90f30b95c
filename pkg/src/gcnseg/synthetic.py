"""Synthetic rectangle-segmentation corpus for end-to-end checks and demos.

Every patch holds 1-3 axis-aligned bright rectangles (intensity ~0.8)
on a dark background (~0.2) with per-pixel Gaussian noise (sigma 0.1);
the mask marks the rectangles.  Pixels are quantized to the 8-bit grid
so writing to PPM and reading back is lossless.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from .dataset import RasterImage, Sample, save_mask, save_raster

BACKGROUND = 0.2
FOREGROUND = 0.8
NOISE_SIGMA = 0.1


def _paint(rng: np.random.Generator, height: int, width: int,
           min_rects: int, max_rects: int):
    levels = np.full((height, width), BACKGROUND)
    mask = np.zeros((height, width), dtype=np.uint8)
    span = max(8, min(height, width) // 3)
    for _ in range(int(rng.integers(min_rects, max_rects + 1))):
        rh = int(rng.integers(8, span + 1))
        rw = int(rng.integers(8, span + 1))
        r0 = int(rng.integers(0, height - rh + 1))
        c0 = int(rng.integers(0, width - rw + 1))
        levels[r0:r0 + rh, c0:c0 + rw] = FOREGROUND
        mask[r0:r0 + rh, c0:c0 + rw] = 1
    image = levels[None, :, :] + rng.normal(0.0, NOISE_SIGMA, size=(3, height, width))
    image = np.clip(image, 0.0, 1.0)
    image = np.rint(image * 255.0) / 255.0  # byte grid, lossless via PPM
    return image, mask


def generate_sample(rng: np.random.Generator, size: int = 64,
                    min_rects: int = 1, max_rects: int = 3,
                    source: str = "") -> Sample:
    image, mask = _paint(rng, size, size, min_rects, max_rects)
    return Sample(image=image, mask=mask, origin=(source, 0, 0))


def generate_corpus(count: int, seed: int, size: int = 64) -> list[Sample]:
    """Deterministic list of rectangle patches."""
    rng = np.random.default_rng(seed)
    return [generate_sample(rng, size=size, source=f"synth{i:04d}")
            for i in range(count)]


def generate_raster(rng: np.random.Generator, height: int, width: int,
                    rect_count: int) -> tuple[RasterImage, RasterImage]:
    """Large source raster + mask pair, handy for exercising the slicer."""
    image, mask = _paint(rng, height, width, rect_count, rect_count)
    pixels = np.rint(image.transpose(1, 2, 0) * 255.0).astype(np.uint8)
    img = RasterImage(width=width, height=height, channels=3, pixels=pixels)
    mask_img = RasterImage(width=width, height=height, channels=1,
                           pixels=(mask * 255)[:, :, None])
    return img, mask_img


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="write synthetic rectangle rasters as images/*.ppm + masks/*.pgm"
    )
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--count", type=int, default=4, help="number of rasters")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--height", type=int, default=64)
    parser.add_argument("--width", type=int, default=64)
    parser.add_argument("--rects", type=int, default=3, help="rectangles per raster")
    args = parser.parse_args(argv)

    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        img, mask = generate_raster(rng, args.height, args.width, args.rects)
        save_raster(img, out / "images" / f"synth{i:04d}.ppm")
        save_raster(mask, out / "masks" / f"synth{i:04d}.pgm")
    print(f"wrote {args.count} raster pair(s) to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
