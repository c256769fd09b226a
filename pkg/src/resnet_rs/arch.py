"""Computation graphs for the ResNet / ResNet-D / SE / ResNet-RS family.

Models are represented as plain data: a topologically ordered sequence of
layer nodes with explicit predecessor edges. There are no tensors and no
weights here; the graphs exist so that parameter counts, FLOPs and
activation footprints can be computed analytically (see ``costs``).

Conventions baked into the builder:

* The ResNet-D stem is three 3x3 convolutions with channel widths
  (32, 32, 64), the first applied with stride 2.
* The width multiplier scales every convolution's output channel count,
  rounding half up; a count that rounds to zero is an error.
* Squeeze-and-excitation sits after the last 1x1 convolution of each
  bottleneck, with the hidden width derived from the block's *output*
  channels (ceiling rounding, minimum 1).
* A batch-norm node follows every convolution; the classifier is a single
  dense layer after global average pooling.
* Stride arithmetic uses floor division everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

NODE_KINDS = frozenset({
    "conv",
    "depthwise_conv",
    "avg_pool",
    "max_pool",
    "norm",
    "activation",
    "se",
    "residual_add",
    "global_avg_pool",
    "dense",
})

STAGE_NAMES = ("c2", "c3", "c4", "c5")

#: Blocks per stage (c2, c3, c4, c5) for every supported nominal depth.
STAGE_LAYOUTS: dict[int, tuple[int, int, int, int]] = {
    26: (2, 2, 2, 2),
    50: (3, 4, 6, 3),
    101: (3, 4, 23, 3),
    152: (3, 8, 36, 3),
    200: (3, 24, 36, 3),
    270: (4, 29, 53, 4),
    300: (4, 36, 54, 4),
    350: (4, 36, 72, 4),
    400: (6, 48, 72, 6),
    420: (4, 44, 87, 4),
}

#: Channel widths of the three stem convolutions in the ResNet-D stem.
RESNET_D_STEM_WIDTHS = (32, 32, 64)

#: Bottleneck width of the first stage at width multiplier 1.0; doubles per stage.
BASE_STAGE_WIDTH = 64

#: Bottleneck expansion factor (block output channels = expansion * width).
BOTTLENECK_EXPANSION = 4


class LayoutError(ValueError):
    """Raised when a depth has no known stage layout."""


class ShapeError(ValueError):
    """Raised when stride arithmetic collapses a feature map to size zero."""


@dataclass(frozen=True)
class StageLayout:
    """Number of bottleneck blocks in each of the four stages c2..c5."""

    blocks_per_stage: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.blocks_per_stage) != 4:
            raise ValueError("a stage layout needs exactly four block counts")
        if any(b < 1 for b in self.blocks_per_stage):
            raise ValueError("every stage needs at least one block")

    @property
    def total_blocks(self) -> int:
        return sum(self.blocks_per_stage)

    def nominal_depth(self) -> int:
        """Layer count of the bottleneck network: 3 convs per block, plus
        the stem conv and the classifier."""
        return 3 * self.total_blocks + 2


def block_layout(depth: int) -> StageLayout:
    """Stage layout for a supported nominal depth.

    Raises LayoutError for depths outside the supported set; callers with a
    custom depth supply ``ModelSpec.layout_override`` instead.
    """
    try:
        return StageLayout(STAGE_LAYOUTS[depth])
    except KeyError:
        supported = ", ".join(str(d) for d in sorted(STAGE_LAYOUTS))
        raise LayoutError(
            f"unknown layout for depth {depth}; supported depths are "
            f"{supported} (use layout_override for anything else)"
        ) from None


def scaled_channels(base: int, width_mult: float) -> int:
    """Apply the width multiplier to a channel count, rounding half up."""
    scaled = math.floor(base * width_mult + 0.5)
    if scaled < 1:
        raise ValueError(
            f"width multiplier {width_mult} rounds a channel count of "
            f"{base} down to zero"
        )
    return scaled


def se_hidden_width(block_out_channels: int, se_ratio: float) -> int:
    """Hidden width of the squeeze-excite pair for a block output width."""
    if block_out_channels < 1:
        raise ValueError("block_out_channels must be at least 1")
    if not 0.0 <= se_ratio <= 1.0:
        raise ValueError("se_ratio must be within [0, 1]")
    return max(1, math.ceil(se_ratio * block_out_channels))


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one model.

    The defaults describe a vanilla ResNet; use :meth:`resnet_rs` for the
    ResNet-RS configuration (ResNet-D adjustments plus SE ratio 0.25).
    """

    depth: int
    width_mult: float = 1.0
    resolution: int = 224
    resnet_d: bool = False
    se_ratio: float = 0.0
    layout_override: StageLayout | None = None

    def __post_init__(self) -> None:
        if self.resolution < 32:
            raise ValueError(f"resolution must be at least 32, got {self.resolution}")
        if self.width_mult <= 0:
            raise ValueError(f"width_mult must be positive, got {self.width_mult}")
        if not 0.0 <= self.se_ratio <= 1.0:
            raise ValueError(f"se_ratio must be within [0, 1], got {self.se_ratio}")
        if self.layout_override is None:
            block_layout(self.depth)  # must be resolvable

    @classmethod
    def resnet_rs(
        cls,
        depth: int,
        resolution: int,
        width_mult: float = 1.0,
        layout_override: StageLayout | None = None,
    ) -> "ModelSpec":
        return cls(
            depth=depth,
            width_mult=width_mult,
            resolution=resolution,
            resnet_d=True,
            se_ratio=0.25,
            layout_override=layout_override,
        )

    def stage_layout(self) -> StageLayout:
        if self.layout_override is not None:
            return self.layout_override
        return block_layout(self.depth)


@dataclass(frozen=True)
class LayerNode:
    """One operation in a model graph.

    ``inputs`` holds indices of predecessor nodes within the graph's node
    sequence; an empty tuple marks a source node fed by the input image.
    """

    kind: str
    in_channels: int
    out_channels: int
    kernel: tuple[int, int] = (1, 1)
    stride: tuple[int, int] = (1, 1)
    se_hidden: int = 0
    stage_id: str = ""
    block_id: int = -1
    residual_eligible: bool = False
    inputs: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in NODE_KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        if self.out_channels < 1:
            raise ValueError("out_channels must be at least 1")
        if any(s not in (1, 2) for s in self.stride):
            raise ValueError(f"stride components must be 1 or 2, got {self.stride}")
        if self.kind == "depthwise_conv" and self.in_channels != self.out_channels:
            raise ValueError("depthwise conv applies one filter per channel")
        if self.kind == "se" and self.se_hidden < 1:
            raise ValueError("se node needs se_hidden >= 1")


@dataclass(frozen=True)
class ModelGraph:
    """Topologically ordered node sequence plus the spec it came from."""

    nodes: tuple[LayerNode, ...]
    spec: ModelSpec | None = None

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("a model graph cannot be empty")
        for idx, node in enumerate(self.nodes):
            for pred in node.inputs:
                if not 0 <= pred < idx:
                    raise ValueError(
                        f"node {idx} references predecessor {pred}; nodes must "
                        "be topologically ordered"
                    )
                pred_out = self.nodes[pred].out_channels
                if pred_out != node.in_channels:
                    raise ValueError(
                        f"channel mismatch at node {idx} ({node.kind}): "
                        f"in_channels {node.in_channels} vs predecessor "
                        f"out_channels {pred_out}"
                    )
        pools = [i for i, n in enumerate(self.nodes) if n.kind == "global_avg_pool"]
        heads = [i for i, n in enumerate(self.nodes) if n.kind == "dense"]
        if len(pools) != 1 or len(heads) != 1 or pools[0] > heads[0]:
            raise ValueError(
                "a model graph needs exactly one global_avg_pool followed by "
                "exactly one dense classifier"
            )

    def residual_block_count(self) -> int:
        return sum(1 for n in self.nodes if n.residual_eligible)


class _Builder:
    def __init__(self) -> None:
        self.nodes: list[LayerNode] = []

    @property
    def last(self) -> int:
        return len(self.nodes) - 1

    def add(
        self,
        kind: str,
        cin: int,
        cout: int,
        *,
        kernel: tuple[int, int] = (1, 1),
        stride: tuple[int, int] = (1, 1),
        se_hidden: int = 0,
        stage: str = "",
        block: int = -1,
        eligible: bool = False,
        inputs: tuple[int, ...] | None = None,
    ) -> int:
        if inputs is None:
            inputs = (self.last,) if self.nodes else ()
        self.nodes.append(
            LayerNode(
                kind,
                cin,
                cout,
                kernel=kernel,
                stride=stride,
                se_hidden=se_hidden,
                stage_id=stage,
                block_id=block,
                residual_eligible=eligible,
                inputs=inputs,
            )
        )
        return self.last


def build_model(spec: ModelSpec, num_classes: int = 1000) -> ModelGraph:
    """Build the computation graph described by ``spec``.

    With ``resnet_d`` set, the graph carries the four ResNet-D adjustments:
    a three-conv 3x3 stem, no stem max-pool (c2's first block downsamples
    instead), the block stride moved from the first 1x1 to the 3x3
    convolution, and downsampling skip paths made of a stride-2 2x2 average
    pool followed by a non-strided 1x1 projection. A positive ``se_ratio``
    appends an SE node inside every bottleneck block.
    """
    layout = spec.stage_layout()
    b = _Builder()

    def ch(base: int) -> int:
        return scaled_channels(base, spec.width_mult)

    def conv_bn(
        cin: int,
        cout: int,
        kernel: tuple[int, int],
        stride: tuple[int, int],
        stage: str,
        block: int = -1,
        act: bool = True,
        inputs: tuple[int, ...] | None = None,
    ) -> int:
        b.add("conv", cin, cout, kernel=kernel, stride=stride, stage=stage,
              block=block, inputs=inputs)
        b.add("norm", cout, cout, stage=stage, block=block)
        if act:
            b.add("activation", cout, cout, stage=stage, block=block)
        return b.last

    if spec.resnet_d:
        widths = [ch(w) for w in RESNET_D_STEM_WIDTHS]
        conv_bn(3, widths[0], (3, 3), (2, 2), "stem")
        conv_bn(widths[0], widths[1], (3, 3), (1, 1), "stem")
        conv_bn(widths[1], widths[2], (3, 3), (1, 1), "stem")
        cin = widths[2]
    else:
        cin = ch(64)
        conv_bn(3, cin, (7, 7), (2, 2), "stem")
        b.add("max_pool", cin, cin, kernel=(3, 3), stride=(2, 2), stage="stem")

    block_id = 0
    for stage_idx, count in enumerate(layout.blocks_per_stage):
        stage = STAGE_NAMES[stage_idx]
        width = ch(BASE_STAGE_WIDTH * 2**stage_idx)
        out = ch(BASE_STAGE_WIDTH * BOTTLENECK_EXPANSION * 2**stage_idx)
        for i in range(count):
            first = i == 0
            if spec.resnet_d:
                # the stem no longer pools, so every stage opens with a
                # downsampling block
                stride = 2 if first else 1
            else:
                stride = 2 if first and stage_idx > 0 else 1
            entry = b.last
            s1, s2 = (1, stride) if spec.resnet_d else (stride, 1)
            conv_bn(cin, width, (1, 1), (s1, s1), stage, block_id)
            conv_bn(width, width, (3, 3), (s2, s2), stage, block_id)
            conv_bn(width, out, (1, 1), (1, 1), stage, block_id, act=False)
            if spec.se_ratio > 0:
                b.add("se", out, out,
                      se_hidden=se_hidden_width(out, spec.se_ratio),
                      stage=stage, block=block_id)
            main_end = b.last
            if first and (stride != 1 or cin != out):
                if spec.resnet_d:
                    b.add("avg_pool", cin, cin, kernel=(2, 2),
                          stride=(stride, stride), stage=stage, block=block_id,
                          inputs=(entry,))
                    b.add("conv", cin, out, stage=stage, block=block_id)
                else:
                    b.add("conv", cin, out, stride=(stride, stride),
                          stage=stage, block=block_id, inputs=(entry,))
                b.add("norm", out, out, stage=stage, block=block_id)
                skip_end = b.last
            else:
                skip_end = entry
            b.add("residual_add", out, out, stage=stage, block=block_id,
                  eligible=True, inputs=(main_end, skip_end))
            b.add("activation", out, out, stage=stage, block=block_id)
            cin = out
            block_id += 1

    b.add("global_avg_pool", cin, cin, stage="head")
    b.add("dense", cin, num_classes, stage="head")
    return ModelGraph(tuple(b.nodes), spec)


def node_output_sizes(graph: ModelGraph, resolution: int) -> tuple[tuple[int, int], ...]:
    """Output spatial size (height, width) of every node at a resolution.

    Source nodes read the input image at ``resolution`` squared. Strided
    ops floor-divide; a size reaching zero raises ShapeError.
    """
    if resolution < 32:
        raise ValueError(f"resolution must be at least 32, got {resolution}")
    sizes: list[tuple[int, int]] = []
    for idx, node in enumerate(graph.nodes):
        if node.inputs:
            h, w = sizes[node.inputs[0]]
            for pred in node.inputs[1:]:
                if sizes[pred] != (h, w):
                    raise ShapeError(
                        f"node {idx} joins paths of different spatial sizes "
                        f"{sizes[pred]} vs {(h, w)}"
                    )
        else:
            h, w = resolution, resolution
        if node.kind in ("conv", "depthwise_conv", "avg_pool", "max_pool"):
            h, w = h // node.stride[0], w // node.stride[1]
        elif node.kind in ("global_avg_pool", "dense"):
            h, w = 1, 1
        if h < 1 or w < 1:
            raise ShapeError(
                f"feature map collapses to zero at node {idx} ({node.kind}) "
                f"for resolution {resolution}"
            )
        sizes.append((h, w))
    return tuple(sizes)


@dataclass(frozen=True)
class StageShapes:
    """(height, width, channels) at the stem output and each stage end."""

    stem: tuple[int, int, int]
    c2: tuple[int, int, int]
    c3: tuple[int, int, int]
    c4: tuple[int, int, int]
    c5: tuple[int, int, int]

    def as_dict(self) -> dict[str, tuple[int, int, int]]:
        return {"stem": self.stem, "c2": self.c2, "c3": self.c3,
                "c4": self.c4, "c5": self.c5}


def shape_trace(graph: ModelGraph, resolution: int) -> StageShapes:
    """Spatial size and channel count at the stem and at the end of c2..c5."""
    sizes = node_output_sizes(graph, resolution)
    last_by_stage: dict[str, int] = {}
    for idx, node in enumerate(graph.nodes):
        if node.stage_id:
            last_by_stage[node.stage_id] = idx
    shapes = {}
    for stage in ("stem",) + STAGE_NAMES:
        if stage not in last_by_stage:
            raise ValueError(f"graph has no nodes tagged with stage {stage!r}")
        idx = last_by_stage[stage]
        h, w = sizes[idx]
        shapes[stage] = (h, w, graph.nodes[idx].out_channels)
    return StageShapes(**shapes)
