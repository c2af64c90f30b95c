"""Raster ingestion, sliding-window patch slicing, and spatial splitting.

The only raster formats are binary PPM (P6) and PGM (P5) with maxval 255:
trivially parseable anywhere, bit-exact, no dependencies.  Datasets live
on disk as `images/<id>.ppm` + `masks/<id>.pgm`, paired by filename stem.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError, RasterFormatError

PATCH_SIZE = 64
PATCH_STRIDE = 19
MASK_THRESHOLD = 128


@dataclass(frozen=True)
class RasterImage:
    """8-bit raster, pixels stored row-major as (height, width, channels)."""

    width: int
    height: int
    channels: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise DatasetError(f"channels must be 1 or 3, got {self.channels}")
        if self.pixels.shape != (self.height, self.width, self.channels):
            raise DatasetError(
                f"pixel block {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x{self.channels}"
            )
        if self.pixels.dtype != np.uint8:
            raise DatasetError(f"pixels must be uint8, got {self.pixels.dtype}")

    def crop_cols(self, start: int, stop: int) -> "RasterImage":
        return RasterImage(
            width=stop - start,
            height=self.height,
            channels=self.channels,
            pixels=np.ascontiguousarray(self.pixels[:, start:stop, :]),
        )


@dataclass
class Sample:
    """One training patch: normalized image, binary mask, source coordinates."""

    image: np.ndarray            # (3, size, size) float64 in [0, 1]
    mask: np.ndarray             # (size, size) uint8 in {0, 1}
    origin: tuple[str, int, int] = ("", 0, 0)


# --- PPM / PGM ---------------------------------------------------------------

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _next_header_token(data: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(data):
        b = data[pos:pos + 1]
        if b in (b"#",):
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        elif b and b in _WHITESPACE:
            pos += 1
        else:
            break
    if pos >= len(data):
        raise RasterFormatError("header ended prematurely", pos)
    start = pos
    while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE:
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int, int]:
    token, end = _next_header_token(data, pos)
    start = end - len(token)
    try:
        value = int(token)
    except ValueError:
        raise RasterFormatError(f"{what} is not an integer: {token!r}", start) from None
    return value, start, end


def load_raster(path) -> RasterImage:
    """Parse a binary PPM (P6, RGB) or PGM (P5, gray) file with maxval 255."""
    data = Path(path).read_bytes()
    magic, pos = _next_header_token(data, 0)
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise RasterFormatError(f"unsupported magic {magic!r}", 0)
    width, start, pos = _header_int(data, pos, "width")
    if width < 1:
        raise RasterFormatError(f"invalid width {width}", start)
    height, start, pos = _header_int(data, pos, "height")
    if height < 1:
        raise RasterFormatError(f"invalid height {height}", start)
    maxval, start, pos = _header_int(data, pos, "maxval")
    if maxval != 255:
        raise RasterFormatError(f"maxval must be 255, got {maxval}", start)
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise RasterFormatError("expected one whitespace byte before the payload", pos)
    pos += 1
    expected = width * height * channels
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise RasterFormatError(
            f"payload truncated: expected {expected} bytes, got {len(payload)}",
            len(data),
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return RasterImage(width=width, height=height, channels=channels,
                       pixels=pixels.copy())


def save_raster(img: RasterImage, path) -> None:
    magic = b"P6" if img.channels == 3 else b"P5"
    header = magic + b"\n" + f"{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())


def save_mask(mask: np.ndarray, path) -> None:
    """Write a {0,1} mask as a PGM with 1 -> 255, 0 -> 0."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DatasetError(f"mask must be 2-D, got shape {mask.shape}")
    if not np.isin(mask, (0, 1)).all():
        raise DatasetError("mask must contain only 0/1 values")
    img = RasterImage(
        width=mask.shape[1],
        height=mask.shape[0],
        channels=1,
        pixels=(mask.astype(np.uint8) * 255)[:, :, None],
    )
    save_raster(img, path)


def binarize_mask(raster: RasterImage, threshold: int = MASK_THRESHOLD) -> np.ndarray:
    """value >= threshold -> 1, else 0; single-channel rasters only."""
    if raster.channels != 1:
        raise DatasetError(f"mask raster must be single-channel, got {raster.channels}")
    return (raster.pixels[:, :, 0] >= threshold).astype(np.uint8)


# --- patch slicing -----------------------------------------------------------

def window_offsets(extent: int, size: int, stride: int) -> list[int]:
    """Window start offsets 0, stride, 2*stride, ... while the window fits."""
    return list(range(0, extent - size + 1, stride))


def slice_patches(img: RasterImage, mask: RasterImage, size: int = PATCH_SIZE,
                  stride: int = PATCH_STRIDE, source: str = "") -> list[Sample]:
    """Cut aligned (image, mask) windows; remainder pixels are discarded.

    Yields (floor((H-size)/stride)+1) * (floor((W-size)/stride)+1) samples,
    in row-major window order.  Images are normalized to [0, 1]; masks are
    binarized at the default threshold.
    """
    if img.channels != 3:
        raise DatasetError(f"image must be RGB, got {img.channels} channel(s)")
    if (img.width, img.height) != (mask.width, mask.height):
        raise DatasetError(
            f"image {img.width}x{img.height} and mask "
            f"{mask.width}x{mask.height} dimensions differ"
        )
    if img.height < size or img.width < size:
        raise DatasetError(
            f"raster {img.width}x{img.height} is smaller than the "
            f"{size}x{size} window"
        )
    if stride < 1:
        raise DatasetError(f"stride must be >= 1, got {stride}")
    mask_bin = binarize_mask(mask)
    normalized = img.pixels.astype(np.float64) / 255.0
    samples = []
    for r in window_offsets(img.height, size, stride):
        for c in window_offsets(img.width, size, stride):
            window = normalized[r:r + size, c:c + size, :]
            samples.append(Sample(
                image=np.ascontiguousarray(window.transpose(2, 0, 1)),
                mask=mask_bin[r:r + size, c:c + size].copy(),
                origin=(source, r, c),
            ))
    return samples


def split_spatial(sources, ratio: float = 0.8, size: int = PATCH_SIZE,
                  stride: int = PATCH_STRIDE):
    """Split every source raster by a vertical cut into train/test patches.

    The cut column is floor(ratio * W) rounded down to a multiple of the
    stride; each side is sliced independently, so no patch straddles the
    cut and no source pixel lands in both splits.
    """
    sources = list(sources)
    if not sources:
        raise DatasetError("need at least one source raster")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    train: list[Sample] = []
    test: list[Sample] = []
    for idx, (img, mask) in enumerate(sources):
        cut = int(ratio * img.width)
        cut -= cut % stride
        for lo, hi, dest, side in ((0, cut, train, "train"),
                                   (cut, img.width, test, "test")):
            span = hi - lo
            if span < size or img.height < size:
                if span > 0:
                    warnings.warn(
                        f"source {idx}: {side} side is {span}px wide "
                        f"(< {size}px window), contributing zero patches"
                    )
                continue
            patches = slice_patches(img.crop_cols(lo, hi), mask.crop_cols(lo, hi),
                                    size=size, stride=stride, source=str(idx))
            for p in patches:
                p.origin = (p.origin[0], p.origin[1], p.origin[2] + lo)
            dest.extend(patches)
    return train, test


# --- dataset directories -----------------------------------------------------

def list_pairs(images_dir, masks_dir) -> list[tuple[str, Path, Path]]:
    """All (stem, image path, mask path) pairs; every image needs its mask."""
    images_dir = Path(images_dir)
    masks_dir = Path(masks_dir)
    image_paths = sorted(images_dir.glob("*.ppm"))
    if not image_paths:
        raise DatasetError(f"no .ppm images found in {images_dir}")
    pairs = []
    for img_path in image_paths:
        mask_path = masks_dir / (img_path.stem + ".pgm")
        if not mask_path.exists():
            raise DatasetError(f"missing mask for image stem '{img_path.stem}'")
        pairs.append((img_path.stem, img_path, mask_path))
    return pairs


def load_dataset_dir(root) -> list[Sample]:
    """Load a sliced-patch dataset laid out as images/*.ppm + masks/*.pgm."""
    root = Path(root)
    samples = []
    for stem, img_path, mask_path in list_pairs(root / "images", root / "masks"):
        img = load_raster(img_path)
        mask = load_raster(mask_path)
        if img.channels != 3:
            raise DatasetError(f"patch '{stem}' is not RGB")
        if (img.width, img.height) != (mask.width, mask.height):
            raise DatasetError(f"patch '{stem}' image/mask dimensions differ")
        samples.append(Sample(
            image=np.ascontiguousarray(
                (img.pixels.astype(np.float64) / 255.0).transpose(2, 0, 1)
            ),
            mask=binarize_mask(mask),
            origin=(stem, 0, 0),
        ))
    return samples


def write_dataset_dir(samples, root) -> None:
    """Write samples as images/masks pairs named by their origin."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    for i, sample in enumerate(samples):
        src, r, c = sample.origin
        stem = f"p{i:05d}_{src}_r{r:05d}_c{c:05d}" if src else f"p{i:05d}"
        bytes_img = np.rint(sample.image.transpose(1, 2, 0) * 255.0).astype(np.uint8)
        img = RasterImage(width=bytes_img.shape[1], height=bytes_img.shape[0],
                          channels=3, pixels=bytes_img)
        save_raster(img, root / "images" / f"{stem}.ppm")
        save_mask(sample.mask, root / "masks" / f"{stem}.pgm")
