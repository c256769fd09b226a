"""Scaling-strategy helpers: grid enumeration, strategy recommendation,
Pareto frontiers, speedup ratios and power-law fits.

The depth and resolution ladders mirror the realized ResNet-RS model
family; resolution is never pushed past the 320 px cap because returns
diminish beyond that point.
"""

from __future__ import annotations

import enum
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

DEPTH_LADDER = (50, 101, 152, 200, 270, 350, 420)
WIDTH_LADDER = (1.0, 1.5, 2.0)
RESOLUTION_LADDER = (160, 192, 224, 256, 320)
DEFAULT_RESOLUTION_CAP = 320

#: Axes of the published scaling study grid.
GRID_WIDTHS = (0.25, 0.5, 1.0, 1.5, 2.0)
GRID_DEPTHS = (26, 50, 101, 200, 300, 350, 400)
GRID_RESOLUTIONS = (128, 160, 224, 320, 448)


@dataclass(frozen=True)
class ScaleConfig:
    """One point in (depth, width multiplier, resolution) space."""

    depth: int
    width_mult: float
    resolution: int

    def __post_init__(self) -> None:
        if self.depth < 1 or self.width_mult <= 0 or self.resolution < 1:
            raise ValueError(f"scale config members must be positive: {self}")


@dataclass(frozen=True)
class TrainingRegime:
    """How long and on how much data a model will be trained."""

    epochs: int
    dataset_images: int | None = None
    overfitting_expected: str = "unknown"  # "yes" | "no" | "unknown"

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if self.overfitting_expected not in ("yes", "no", "unknown"):
            raise ValueError(
                "overfitting_expected must be 'yes', 'no' or 'unknown', "
                f"got {self.overfitting_expected!r}"
            )


class StrategyKind(enum.Enum):
    DEPTH_SLOW_RESOLUTION = "depth-slow-resolution"
    WIDTH_SLOW_RESOLUTION = "width-slow-resolution"
    REGIME_DEPENDENT = "regime-dependent"


@dataclass(frozen=True)
class ScalingStrategy:
    kind: StrategyKind
    resolution_cap: int = DEFAULT_RESOLUTION_CAP
    advisory: str | None = None


@dataclass(frozen=True)
class ParetoPoint:
    """A model with one cost metric (latency or FLOPs) and one quality
    metric (top-1 accuracy in percent)."""

    model_id: str
    cost: float
    quality: float

    def __post_init__(self) -> None:
        if self.cost <= 0:
            raise ValueError(f"cost must be positive, got {self.cost}")


def _dedupe(values: Iterable) -> list:
    seen = set()
    out = []
    for v in values:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def enumerate_grid(
    widths: Sequence[float],
    depths: Sequence[int],
    resolutions: Sequence[int],
) -> list[ScaleConfig]:
    """Cartesian product of the three axes, depth-major, then width, then
    resolution. Duplicate axis values are dropped (first occurrence wins)."""
    if not widths or not depths or not resolutions:
        raise ValueError("all three grid axes must be non-empty")
    widths = _dedupe(widths)
    depths = _dedupe(depths)
    resolutions = _dedupe(resolutions)
    return [
        ScaleConfig(depth=d, width_mult=w, resolution=r)
        for d in depths
        for w in widths
        for r in resolutions
    ]


# Regime boundaries: at 10 epochs width scaling wins, at 350 depth scaling
# wins clearly, and around 100 epochs the winner flips with resolution, so
# the middle band deliberately stays undecided.
LONG_REGIME_EPOCHS = 350
SHORT_REGIME_EPOCHS = 10
MID_REGIME_EPOCHS = 100


def recommend_strategy(regime: TrainingRegime) -> ScalingStrategy:
    """Pick a scaling strategy for a training regime.

    Long schedules (or expected overfitting) favor depth scaling; very
    short schedules favor width scaling. In between, the honest answer is
    regime-dependent and comes back flagged as advisory.
    """
    if regime.epochs >= LONG_REGIME_EPOCHS or regime.overfitting_expected == "yes":
        return ScalingStrategy(StrategyKind.DEPTH_SLOW_RESOLUTION)
    if regime.epochs <= SHORT_REGIME_EPOCHS or (
        regime.overfitting_expected == "no" and regime.epochs < MID_REGIME_EPOCHS
    ):
        return ScalingStrategy(StrategyKind.WIDTH_SLOW_RESOLUTION)
    return ScalingStrategy(
        StrategyKind.REGIME_DEPENDENT,
        advisory=(
            "between roughly 10 and 350 epochs the better of depth and "
            "width scaling flips with image resolution; benchmark a small "
            "subset of models at full training length before committing"
        ),
    )


def _next_resolution(current: int, cap: int) -> int:
    if current > cap:
        return cap
    for r in RESOLUTION_LADDER:
        if r > current and r <= cap:
            return r
    return current


def apply_strategy(
    base: ScaleConfig,
    strategy: ScalingStrategy,
    steps: int,
) -> list[ScaleConfig]:
    """Walk the scaling ladder from ``base`` for ``steps`` steps.

    Returns the trajectory including the base configuration, so
    ``steps=0`` yields ``[base]``. Depth scaling climbs the depth ladder
    one rung per step; width scaling climbs the width ladder. Either way
    the resolution advances at most one notch per step and never exceeds
    the strategy's cap. The walk stops early if its ladder runs out.
    """
    if steps < 0:
        raise ValueError(f"steps must be non-negative, got {steps}")
    if strategy.kind is StrategyKind.REGIME_DEPENDENT:
        raise ValueError(
            "a regime-dependent verdict cannot be walked; choose depth or "
            "width scaling first"
        )
    if strategy.kind is StrategyKind.DEPTH_SLOW_RESOLUTION:
        ladder: tuple = DEPTH_LADDER
        position = base.depth
    else:
        ladder = WIDTH_LADDER
        position = base.width_mult
    if position not in ladder:
        raise ValueError(
            f"base value {position} is not on the scaling ladder {list(ladder)}"
        )

    trajectory = [base]
    current = base
    rung = ladder.index(position)
    for _ in range(steps):
        if rung + 1 >= len(ladder):
            break
        rung += 1
        resolution = _next_resolution(current.resolution, strategy.resolution_cap)
        if strategy.kind is StrategyKind.DEPTH_SLOW_RESOLUTION:
            current = ScaleConfig(ladder[rung], current.width_mult, resolution)
        else:
            current = ScaleConfig(current.depth, ladder[rung], resolution)
        trajectory.append(current)
    return trajectory


def _dominates(a: ParetoPoint, b: ParetoPoint) -> bool:
    return (
        a.cost <= b.cost
        and a.quality >= b.quality
        and (a.cost < b.cost or a.quality > b.quality)
    )


def pareto_frontier(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Points not dominated by any other, sorted by cost ascending.

    A point dominates another when its cost is no higher and its quality
    no lower, with at least one strict. Exact (cost, quality) duplicates
    keep the first point in input order.
    """
    if not points:
        raise ValueError("cannot take the frontier of an empty point set")
    unique: list[ParetoPoint] = []
    seen: set[tuple[float, float]] = set()
    for p in points:
        key = (p.cost, p.quality)
        if key not in seen:
            seen.add(key)
            unique.append(p)
    frontier = [
        p for p in unique if not any(_dominates(q, p) for q in unique if q is not p)
    ]
    frontier.sort(key=lambda p: p.cost)
    return frontier


def speedup(slow: ParetoPoint, fast: ParetoPoint) -> float:
    """How many times cheaper ``fast`` is than ``slow`` on the cost metric."""
    return slow.cost / fast.cost


class PowerLawFit(NamedTuple):
    exponent: float
    coefficient: float
    r_squared: float


def powerlaw_fit(samples: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Fit error = coefficient * flops**exponent by ordinary least squares
    on the log-log points.

    ``samples`` are (flops, top-1 error in percent) pairs; both must be
    positive. With exactly two distinct samples the fit is exact.
    """
    if len(samples) < 2:
        raise ValueError("a power-law fit needs at least 2 samples")
    for flops, error in samples:
        if flops <= 0 or error <= 0:
            raise ValueError(
                f"power-law samples must be positive, got ({flops}, {error})"
            )
    xs = [math.log10(f) for f, _ in samples]
    ys = [math.log10(e) for _, e in samples]
    if len(set(xs)) == 1:
        raise ValueError("power-law samples need at least two distinct flops values")
    if len(set(ys)) == 1:
        # constant error: slope 0 and the constant itself, an exact fit
        return PowerLawFit(0.0, 10.0 ** ys[0], 1.0)
    fit = statistics.linear_regression(xs, ys)
    r = statistics.correlation(xs, ys)
    return PowerLawFit(fit.slope, 10.0**fit.intercept, r * r)
