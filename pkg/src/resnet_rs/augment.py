"""RandAugment-style policy sampling and application on 8-bit RGB rasters.

A policy (N layers, magnitude M in [0, 30]) samples N transforms uniformly
with replacement from the op set; each transform's strength is the linear
mapping of M across the op's parameter range below. Everything is
deterministic given the policy seed.

Op parameter ranges, pinned so tests can assert them:

    identity / autocontrast / equalize   no parameter
    rotate        0 .. 30     degrees (counterclockwise)
    solarize      256 .. 0    threshold; pixels at/above it invert
    posterize     8 .. 4      bits kept per channel
    color / contrast / brightness / sharpness
                  1.0 .. 1.9  enhancement factor (1.0 is identity)
    shear_x/y     0 .. 0.3    shear factor
    translate_x/y 0 .. 0.45   fraction of width/height

Geometric ops sample with nearest-neighbor and fill uncovered pixels with
mid-gray (128, 128, 128).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, ImageEnhance, ImageOps

MAX_MAGNITUDE = 30
FILL_COLOR = (128, 128, 128)

#: op name -> (parameter at magnitude 0, parameter at magnitude 30),
#: or None for parameterless ops.
OP_RANGES: dict[str, tuple[float, float] | None] = {
    "identity": None,
    "autocontrast": None,
    "equalize": None,
    "rotate": (0.0, 30.0),
    "solarize": (256.0, 0.0),
    "color": (1.0, 1.9),
    "posterize": (8.0, 4.0),
    "contrast": (1.0, 1.9),
    "brightness": (1.0, 1.9),
    "sharpness": (1.0, 1.9),
    "shear_x": (0.0, 0.3),
    "shear_y": (0.0, 0.3),
    "translate_x": (0.0, 0.45),
    "translate_y": (0.0, 0.45),
}

DEFAULT_OPS: tuple[str, ...] = tuple(OP_RANGES)

GEOMETRIC_OPS = ("rotate", "shear_x", "shear_y", "translate_x", "translate_y")


@dataclass(frozen=True)
class Raster:
    """Packed 8-bit RGB image: row-major, 3 bytes per pixel."""

    width: int
    height: int
    data: bytes

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("raster dimensions must be positive")
        expected = self.width * self.height * 3
        if len(self.data) != expected:
            raise ValueError(
                f"raster data holds {len(self.data)} bytes, expected {expected}"
            )

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, int, int]) -> "Raster":
        return cls(width, height, bytes(color) * (width * height))


@dataclass(frozen=True)
class AugmentPolicy:
    """RandAugment policy: N layers at shared magnitude M with a fixed seed."""

    num_layers: int
    magnitude: int
    op_set: tuple[str, ...] = DEFAULT_OPS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_layers < 0:
            raise ValueError("num_layers must be non-negative")
        if not 0 <= self.magnitude <= MAX_MAGNITUDE:
            raise ValueError(
                f"magnitude must be within [0, {MAX_MAGNITUDE}], got {self.magnitude}"
            )
        if not self.op_set:
            raise ValueError("op_set must not be empty")
        unknown = set(self.op_set) - set(OP_RANGES)
        if unknown:
            raise ValueError(f"unknown ops in op_set: {sorted(unknown)}")


def magnitude_to_param(op_name: str, magnitude: int) -> float:
    """Linear interpolation of an op's parameter range at magnitude M.

    Parameterless ops return 0.0.
    """
    if op_name not in OP_RANGES:
        raise ValueError(f"unknown op {op_name!r}")
    if not 0 <= magnitude <= MAX_MAGNITUDE:
        raise ValueError(
            f"magnitude must be within [0, {MAX_MAGNITUDE}], got {magnitude}"
        )
    span = OP_RANGES[op_name]
    if span is None:
        return 0.0
    lo, hi = span
    return lo + (hi - lo) * magnitude / MAX_MAGNITUDE


def sample_policy_instance(policy: AugmentPolicy) -> list[tuple[str, float]]:
    """Draw one concrete op sequence from a policy.

    Exactly ``num_layers`` ops, uniform with replacement over the op set;
    the same seed always yields the same sequence.
    """
    rng = random.Random(policy.seed)
    ops = []
    for _ in range(policy.num_layers):
        name = policy.op_set[rng.randrange(len(policy.op_set))]
        ops.append((name, magnitude_to_param(name, policy.magnitude)))
    return ops


def _to_image(raster: Raster) -> Image.Image:
    return Image.frombytes("RGB", (raster.width, raster.height), raster.data)


def _from_image(image: Image.Image) -> Raster:
    return Raster(image.width, image.height, image.tobytes())


def _apply_op(image: Image.Image, name: str, param: float) -> Image.Image:
    w, h = image.size
    if name == "identity":
        return image
    if name == "autocontrast":
        return ImageOps.autocontrast(image)
    if name == "equalize":
        return ImageOps.equalize(image)
    if name == "rotate":
        return image.rotate(param, resample=Image.NEAREST, fillcolor=FILL_COLOR)
    if name == "solarize":
        return ImageOps.solarize(image, threshold=int(round(param)))
    if name == "posterize":
        return ImageOps.posterize(image, int(round(param)))
    if name == "color":
        return ImageEnhance.Color(image).enhance(param)
    if name == "contrast":
        return ImageEnhance.Contrast(image).enhance(param)
    if name == "brightness":
        return ImageEnhance.Brightness(image).enhance(param)
    if name == "sharpness":
        return ImageEnhance.Sharpness(image).enhance(param)
    if name == "shear_x":
        matrix = (1.0, param, 0.0, 0.0, 1.0, 0.0)
    elif name == "shear_y":
        matrix = (1.0, 0.0, 0.0, param, 1.0, 0.0)
    elif name == "translate_x":
        matrix = (1.0, 0.0, param * w, 0.0, 1.0, 0.0)
    elif name == "translate_y":
        matrix = (1.0, 0.0, 0.0, 0.0, 1.0, param * h)
    else:
        raise ValueError(f"unknown op {name!r}")
    return image.transform(
        (w, h), Image.AFFINE, matrix, resample=Image.NEAREST, fillcolor=FILL_COLOR
    )


def apply(raster: Raster, ops: list[tuple[str, float]]) -> Raster:
    """Apply an op sequence in order; output size equals input size."""
    image = _to_image(raster)
    for name, param in ops:
        if name not in OP_RANGES:
            raise ValueError(f"unknown op {name!r}")
        image = _apply_op(image, name, param)
    return _from_image(image)


def randaugment(raster: Raster, policy: AugmentPolicy) -> Raster:
    """Sample a policy instance and apply it."""
    return apply(raster, sample_policy_instance(policy))


def read_ppm(path: str | Path) -> Raster:
    """Read a binary (P6) PPM file with 8-bit samples."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PPM header")
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    width, height, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM (maxval 255) is supported")
    pos += 1  # single whitespace byte after the header
    pixels = data[pos : pos + width * height * 3]
    return Raster(width, height, pixels)


def write_ppm(raster: Raster, path: str | Path) -> None:
    """Write a binary (P6) PPM file."""
    header = f"P6\n{raster.width} {raster.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raster.data)
