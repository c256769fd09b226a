"""Training-recipe components as deterministic functions.

Nothing here trains anything. The module generates the schedules and
regularization policies the ResNet-RS recipe is built from: warmup+cosine
(or stepwise) learning rates, EMA updates, label smoothing, linearly
decayed stochastic depth, the per-scale regularization tables, the
weight-decay interplay rule, and named recipe presets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class SchedulePlan:
    """Step-indexed learning-rate plan.

    ``milestones``/``factors`` only apply to the stepwise decay variant;
    each factor multiplies the rate from its milestone step onward.
    """

    total_steps: int
    warmup_steps: int
    peak_lr: float
    decay: str = "cosine"  # "cosine" | "stepwise"
    milestones: tuple[int, ...] = ()
    factors: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError("total_steps must be at least 1")
        if not 0 <= self.warmup_steps < self.total_steps:
            raise ValueError(
                f"warmup_steps must lie in [0, total_steps), got "
                f"{self.warmup_steps} of {self.total_steps}"
            )
        if self.peak_lr <= 0:
            raise ValueError(f"peak_lr must be positive, got {self.peak_lr}")
        if self.decay not in ("cosine", "stepwise"):
            raise ValueError(f"decay must be 'cosine' or 'stepwise', got {self.decay!r}")
        if len(self.milestones) != len(self.factors):
            raise ValueError("milestones and factors must pair up")
        if any(m <= self.warmup_steps or m > self.total_steps for m in self.milestones):
            raise ValueError("milestones must fall after warmup and within the run")


def peak_lr_for_batch(batch_size: int, mode: str = "inverse") -> float:
    """Peak learning rate for a global batch size.

    Two conventions are supported and neither is silently preferred:
    ``inverse`` is the 0.1 / batch rule the RS recipe states, ``linear``
    is the classic large-batch scaling rule 0.1 * batch / 256.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    if mode == "inverse":
        return 0.1 / batch_size
    if mode == "linear":
        return 0.1 * batch_size / 256
    raise ValueError(f"unknown peak-lr mode {mode!r} (use 'inverse' or 'linear')")


def lr_at(step: int, plan: SchedulePlan) -> float:
    """Learning rate at an integer step in [0, total_steps].

    Warmup ramps linearly from 0 to the peak; afterwards cosine decay
    reaches exactly 0 at the final step, or the stepwise variant holds the
    peak and multiplies in each milestone factor as it passes.
    """
    if not 0 <= step <= plan.total_steps:
        raise ValueError(
            f"step {step} outside the schedule range [0, {plan.total_steps}]"
        )
    if step <= plan.warmup_steps and plan.warmup_steps > 0:
        return plan.peak_lr * step / plan.warmup_steps
    if plan.decay == "stepwise":
        lr = plan.peak_lr
        for milestone, factor in zip(plan.milestones, plan.factors):
            if step >= milestone:
                lr *= factor
        return lr
    progress = (step - plan.warmup_steps) / (plan.total_steps - plan.warmup_steps)
    return plan.peak_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def ema_update(shadow: float, current: float, decay: float) -> float:
    """One exponential-moving-average step."""
    if not 0.0 <= decay <= 1.0:
        raise ValueError(f"decay must be within [0, 1], got {decay}")
    return decay * shadow + (1.0 - decay) * current


def label_smooth(class_index: int, num_classes: int, epsilon: float) -> list[float]:
    """Smoothed target distribution: (1-eps) on the true class plus a
    uniform eps/K over all classes (the true class included)."""
    if not 0 <= class_index < num_classes:
        raise ValueError(
            f"class_index {class_index} out of range for {num_classes} classes"
        )
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must be within [0, 1), got {epsilon}")
    uniform = epsilon / num_classes
    dist = [uniform] * num_classes
    dist[class_index] += 1.0 - epsilon
    return dist


def stochastic_depth_survival(
    block_index: int, total_blocks: int, final_drop: float
) -> float:
    """Survival probability of a residual block under linear decay.

    The drop probability grows linearly with block position so that the
    last block is dropped with exactly ``final_drop``.
    """
    if total_blocks < 1:
        raise ValueError("total_blocks must be at least 1")
    if not 1 <= block_index <= total_blocks:
        raise ValueError(
            f"block_index must lie in [1, {total_blocks}], got {block_index}"
        )
    if not 0.0 <= final_drop <= 1.0:
        raise ValueError(f"final_drop must be within [0, 1], got {final_drop}")
    return 1.0 - (block_index / total_blocks) * final_drop


@dataclass(frozen=True)
class RegConfig:
    """Regularization hyperparameters for one training run."""

    randaugment_layers: int
    randaugment_magnitude: int
    stochastic_depth_rate: float
    dropout_rate: float
    label_smoothing: float
    weight_decay: float
    ema_decay: float
    epochs: int

    def __post_init__(self) -> None:
        for name in ("stochastic_depth_rate", "dropout_rate",
                     "label_smoothing", "ema_decay"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be within [0, 1], got {value}")
        if not 0 <= self.randaugment_magnitude <= 30:
            raise ValueError(
                f"randaugment_magnitude must be within [0, 30], "
                f"got {self.randaugment_magnitude}"
            )
        if self.randaugment_layers < 0:
            raise ValueError("randaugment_layers must be non-negative")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


# Shared across every ResNet-RS model: 350 epochs, weight decay 4e-5,
# EMA 0.9999, two RandAugment layers, label smoothing 0.1. Only
# (magnitude, stochastic depth, dropout) vary with scale.
_RS_COMMON = dict(
    randaugment_layers=2,
    label_smoothing=0.1,
    weight_decay=4e-5,
    ema_decay=0.9999,
    epochs=350,
)

#: (depth, resolution) -> (randaugment magnitude, stochastic depth rate, dropout rate)
RS_MODEL_POLICIES: dict[tuple[int, int], tuple[int, float, float]] = {
    (50, 160): (10, 0.0, 0.25),
    (101, 160): (10, 0.0, 0.25),
    (101, 192): (15, 0.0, 0.25),
    (152, 192): (15, 0.0, 0.25),
    (152, 224): (15, 0.0, 0.25),
    (152, 256): (15, 0.0, 0.25),
    (200, 256): (15, 0.1, 0.25),
    (270, 256): (15, 0.1, 0.25),
    (350, 256): (15, 0.1, 0.25),
    (350, 320): (15, 0.1, 0.4),
    (420, 320): (15, 0.1, 0.4),
}


def reg_policy(depth: int, resolution: int) -> RegConfig:
    """Published regularization row for one ResNet-RS (depth, resolution)."""
    key = (depth, resolution)
    if key not in RS_MODEL_POLICIES:
        valid = ", ".join(f"{d}@{r}" for d, r in sorted(RS_MODEL_POLICIES))
        raise ValueError(
            f"no regularization policy for depth {depth} at resolution "
            f"{resolution}; known pairs: {valid}"
        )
    magnitude, sd, dropout = RS_MODEL_POLICIES[key]
    return RegConfig(
        randaugment_magnitude=magnitude,
        stochastic_depth_rate=sd,
        dropout_rate=dropout,
        **_RS_COMMON,
    )


#: Dropout rate by filter (width) multiplier for the scaling-grid runs.
GRID_DROPOUT_BY_WIDTH: dict[float, float] = {
    0.25: 0.0,
    0.5: 0.1,
    1.0: 0.25,
    1.5: 0.6,
    2.0: 0.75,
}

GRID_EPOCH_CHOICES = (10, 100, 350)


def grid_reg_policy(config, epochs: int) -> RegConfig:
    """Regularization used for a scaling-grid configuration.

    At 350 epochs: RandAugment magnitude 10 for width multipliers in
    {0.25, 0.5} or resolutions in [64, 160], 15 for resolutions in
    [224, 320], 20 otherwise; stochastic depth 0.2 at resolutions of 224
    and up (skipped at width 0.25); dropout by width multiplier. The 10
    and 100 epoch runs turn all of these regularizers off; only weight
    decay 4e-5 remains.

    ``config`` is a ``scaling.ScaleConfig`` (or anything with width_mult
    and resolution attributes).
    """
    width, resolution = config.width_mult, config.resolution
    if width not in GRID_DROPOUT_BY_WIDTH:
        valid = sorted(GRID_DROPOUT_BY_WIDTH)
        raise ValueError(f"width_mult {width} not in the grid set {valid}")
    if epochs not in GRID_EPOCH_CHOICES:
        raise ValueError(f"epochs must be one of {GRID_EPOCH_CHOICES}, got {epochs}")

    if epochs in (10, 100):
        return RegConfig(
            randaugment_layers=0,
            randaugment_magnitude=0,
            stochastic_depth_rate=0.0,
            dropout_rate=0.0,
            label_smoothing=0.0,
            weight_decay=4e-5,
            ema_decay=0.9999,
            epochs=epochs,
        )

    if width in (0.25, 0.5) or 64 <= resolution <= 160:
        magnitude = 10
    elif 224 <= resolution <= 320:
        magnitude = 15
    else:
        magnitude = 20
    sd = 0.2 if resolution >= 224 and width > 0.25 else 0.0
    return RegConfig(
        randaugment_magnitude=magnitude,
        stochastic_depth_rate=sd,
        dropout_rate=GRID_DROPOUT_BY_WIDTH[width],
        **_RS_COMMON,
    )


def recommend_weight_decay(active_regularizers: set[str]) -> float:
    """Weight decay to pair with a set of active regularizers.

    Weight decay itself regularizes, so once dropout or stochastic depth
    join the mix it must come down; RandAugment and label smoothing alone
    keep the 1e-4 default. Regularizers are named "RA", "LS", "DO", "SD".
    """
    unknown = active_regularizers - {"RA", "LS", "DO", "SD"}
    if unknown:
        raise ValueError(f"unknown regularizer names: {sorted(unknown)}")
    if "DO" in active_regularizers or "SD" in active_regularizers:
        return 4e-5
    return 1e-4


def enet_rs_magnitude(resolution: int) -> int:
    """RandAugment magnitude for slow-resolution-scaled EfficientNets:
    10 up to 224 px, 20 above 320 px, 15 in between."""
    if resolution < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    if resolution <= 224:
        return 10
    if resolution > 320:
        return 20
    return 15


@dataclass(frozen=True)
class RecipePreset:
    """One named training recipe: schedule choices plus method toggles."""

    epochs: int
    lr_decay: str  # "stepwise" | "cosine" | "exponential"
    optimizer: str  # "momentum" | "rmsprop"
    weight_decay: float
    ema_decay: float
    label_smoothing: float
    stochastic_depth_rate: float
    randaugment_layers: int
    randaugment_magnitude: int
    dropout_rate: float
    squeeze_excitation: bool
    resnet_d_stem: bool


_LEGACY_RESNET = RecipePreset(
    epochs=90,
    lr_decay="stepwise",
    optimizer="momentum",
    weight_decay=1e-4,
    ema_decay=0.0,
    label_smoothing=0.0,
    stochastic_depth_rate=0.0,
    randaugment_layers=0,
    randaugment_magnitude=0,
    dropout_rate=0.0,
    squeeze_excitation=False,
    resnet_d_stem=False,
)

# Additive recipe ladder, in order; each entry layers one change onto the
# previous preset, starting from the 90-epoch stepwise baseline.
_LADDER_STEPS: tuple[tuple[str, dict], ...] = (
    ("cosine-lr-decay", dict(lr_decay="cosine")),
    ("epochs-350", dict(epochs=350)),
    ("ema-of-weights", dict(ema_decay=0.9999)),
    ("label-smoothing", dict(label_smoothing=0.1)),
    ("stochastic-depth", dict(stochastic_depth_rate=0.1)),
    ("randaugment", dict(randaugment_layers=2, randaugment_magnitude=15)),
    ("dropout-on-fc", dict(dropout_rate=0.25)),
    ("decrease-weight-decay", dict(weight_decay=4e-5)),
    ("squeeze-excitation", dict(squeeze_excitation=True)),
    ("resnet-d", dict(resnet_d_stem=True)),
)


def recipe_presets() -> dict[str, RecipePreset]:
    """Named training recipes.

    Three family presets ("resnet-2015", "resnet-rs", "efficientnet") plus
    the additive ladder "ladder-00-baseline" through "ladder-10-resnet-d",
    where each rung enables one more method on top of the previous one.
    Rates for the scale-dependent knobs follow the mid-size RS row
    (magnitude 15, stochastic depth 0.1, dropout 0.25).
    """
    presets: dict[str, RecipePreset] = {}
    presets["resnet-2015"] = _LEGACY_RESNET
    presets["resnet-rs"] = RecipePreset(
        epochs=350,
        lr_decay="cosine",
        optimizer="momentum",
        weight_decay=4e-5,
        ema_decay=0.9999,
        label_smoothing=0.1,
        stochastic_depth_rate=0.1,
        randaugment_layers=2,
        randaugment_magnitude=15,
        dropout_rate=0.25,
        squeeze_excitation=True,
        resnet_d_stem=True,
    )
    presets["efficientnet"] = replace(
        presets["resnet-rs"],
        lr_decay="exponential",
        optimizer="rmsprop",
        stochastic_depth_rate=0.2,
    )

    current = _LEGACY_RESNET
    presets["ladder-00-baseline"] = current
    for i, (name, changes) in enumerate(_LADDER_STEPS, start=1):
        current = replace(current, **changes)
        presets[f"ladder-{i:02d}-{name}"] = current
    return presets


def build_plan(
    epochs: int,
    steps_per_epoch: int,
    batch_size: int,
    decay: str = "cosine",
    warmup_epochs: int = 5,
    lr_mode: str = "inverse",
    milestone_epochs: tuple[int, ...] = (30, 60, 80),
    milestone_factor: float = 0.1,
) -> SchedulePlan:
    """Assemble a SchedulePlan from epoch-level settings.

    Warmup defaults to 5 epochs' worth of steps. For the stepwise variant
    the rate is multiplied by ``milestone_factor`` at each milestone epoch.
    """
    if epochs < 1 or steps_per_epoch < 1:
        raise ValueError("epochs and steps_per_epoch must be at least 1")
    if warmup_epochs < 0 or warmup_epochs >= epochs:
        raise ValueError("warmup_epochs must be non-negative and below epochs")
    total = epochs * steps_per_epoch
    if decay == "stepwise":
        milestones = tuple(e * steps_per_epoch for e in milestone_epochs if e < epochs)
        factors = (milestone_factor,) * len(milestones)
    else:
        milestones, factors = (), ()
    return SchedulePlan(
        total_steps=total,
        warmup_steps=warmup_epochs * steps_per_epoch,
        peak_lr=peak_lr_for_batch(batch_size, lr_mode),
        decay=decay,
        milestones=milestones,
        factors=factors,
    )
