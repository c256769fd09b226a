"""Tools for the ResNet-RS model family: architecture graphs, analytic
cost models, scaling strategies, training-recipe schedules and a
RandAugment implementation."""

from .arch import (
    LayerNode,
    LayoutError,
    ModelGraph,
    ModelSpec,
    ShapeError,
    StageLayout,
    StageShapes,
    block_layout,
    build_model,
    se_hidden_width,
    shape_trace,
)
from .costs import (
    CostReport,
    activation_footprint,
    cost_report,
    flop_count,
    operational_intensity,
    param_count,
)
from .scaling import (
    ParetoPoint,
    PowerLawFit,
    ScaleConfig,
    ScalingStrategy,
    StrategyKind,
    TrainingRegime,
    apply_strategy,
    enumerate_grid,
    pareto_frontier,
    powerlaw_fit,
    recommend_strategy,
    speedup,
)
from .schedules import (
    RecipePreset,
    RegConfig,
    SchedulePlan,
    build_plan,
    ema_update,
    enet_rs_magnitude,
    grid_reg_policy,
    label_smooth,
    lr_at,
    peak_lr_for_batch,
    recipe_presets,
    recommend_weight_decay,
    reg_policy,
    stochastic_depth_survival,
)
from .augment import (
    AugmentPolicy,
    Raster,
    apply,
    magnitude_to_param,
    randaugment,
    read_ppm,
    sample_policy_instance,
    write_ppm,
)
from .serde import (
    MeasurementFormatError,
    MeasurementRow,
    SpecFormatError,
    emit_spec,
    load_measurements,
    load_memory_reference,
    load_pareto_reference,
    parse_spec,
)

__version__ = "0.1.0"
