"""Analytic cost accounting for model graphs.

All quantities are derived from the graph alone; nothing is measured.

Parameter accounting (trainable weights only):

    conv            kh * kw * Cin * Cout        (no bias)
    depthwise_conv  kh * kw * C
    norm            2 * C                       (scale and shift; moving
                                                 statistics are not trained)
    dense           Cin * Cout + Cout           (weights plus bias)
    se              Cout*h + h + h*Cout + Cout  (two biased dense layers)
    other kinds     0

FLOP accounting, per image, with one multiply-add counted as 2 FLOPs:

    conv            2 * Ho * Wo * Cout * kh * kw * Cin
    depthwise_conv  2 * Ho * Wo * C * kh * kw
    dense           2 * Cin * Cout
    norm            2 * Ho * Wo * C             (scale+shift is one MAC)
    activation      Ho * Wo * C
    residual_add    Ho * Wo * C
    avg/max pool    Hi * Wi * C                 (one op per input element)
    global_avg_pool Hi * Wi * C
    se              Hi*Wi*C (squeeze) + 2*C*h + h + 2*h*C + C (excite pair
                    with its activations) + Hi*Wi*C (rescale)

The elementwise terms are well under 1% of any full model's total; the
convolution term dominates everything.

Activation accounting: every node's output is counted once
(elements * batch * bytes_per_element). The peak is the largest single
node allocation plus its inputs. Compiler effects such as fusion, padding
and rematerialization are deliberately ignored, so peak/total figures are
only comparable to measured memory within a broad band.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arch import ModelGraph, ModelSpec, LayerNode, build_model, node_output_sizes


@dataclass(frozen=True)
class CostReport:
    """Analytic costs of one model spec at its stated resolution."""

    params: int
    flops: int
    activation_bytes_total: int
    activation_bytes_peak: int
    operational_intensity: float
    resolution: int
    batch: int
    bytes_per_element: int


def node_params(node: LayerNode) -> int:
    """Trainable parameter count of a single node."""
    kh, kw = node.kernel
    if node.kind == "conv":
        return kh * kw * node.in_channels * node.out_channels
    if node.kind == "depthwise_conv":
        return kh * kw * node.out_channels
    if node.kind == "norm":
        return 2 * node.out_channels
    if node.kind == "dense":
        return node.in_channels * node.out_channels + node.out_channels
    if node.kind == "se":
        c, h = node.out_channels, node.se_hidden
        return c * h + h + h * c + c
    return 0


def node_flops(node: LayerNode, out_size: tuple[int, int],
               in_size: tuple[int, int]) -> int:
    """Per-image FLOPs of a single node given its spatial sizes."""
    ho, wo = out_size
    hi, wi = in_size
    kh, kw = node.kernel
    c = node.out_channels
    if node.kind == "conv":
        return 2 * ho * wo * c * kh * kw * node.in_channels
    if node.kind == "depthwise_conv":
        return 2 * ho * wo * c * kh * kw
    if node.kind == "dense":
        return 2 * node.in_channels * c
    if node.kind == "norm":
        return 2 * ho * wo * c
    if node.kind in ("activation", "residual_add"):
        return ho * wo * c
    if node.kind in ("avg_pool", "max_pool", "global_avg_pool"):
        return hi * wi * c
    if node.kind == "se":
        h = node.se_hidden
        return hi * wi * c + 2 * c * h + h + 2 * h * c + c + hi * wi * c
    raise ValueError(f"no FLOP rule for node kind {node.kind!r}")


def node_output_elements(node: LayerNode, out_size: tuple[int, int]) -> int:
    """Elements in a node's output tensor for one image."""
    ho, wo = out_size
    return ho * wo * node.out_channels


def param_count(graph: ModelGraph) -> int:
    """Total trainable parameters; independent of resolution and batch."""
    return sum(node_params(n) for n in graph.nodes)


def flop_count(graph: ModelGraph, resolution: int) -> int:
    """Total per-image FLOPs at the given input resolution."""
    sizes = node_output_sizes(graph, resolution)
    total = 0
    for idx, node in enumerate(graph.nodes):
        in_size = sizes[node.inputs[0]] if node.inputs else (resolution, resolution)
        total += node_flops(node, sizes[idx], in_size)
    return total


def activation_footprint(
    graph: ModelGraph,
    resolution: int,
    batch: int,
    bytes_per_element: int,
) -> tuple[int, int]:
    """(total_bytes, peak_bytes) of activations.

    Total sums every node output once; peak is the largest single node
    output plus that node's inputs (the image counts as the input of
    source nodes).
    """
    if batch < 1:
        raise ValueError(f"batch must be at least 1, got {batch}")
    if bytes_per_element not in (2, 4):
        raise ValueError(f"bytes_per_element must be 2 or 4, got {bytes_per_element}")
    sizes = node_output_sizes(graph, resolution)
    image_elements = 3 * resolution * resolution
    total_elements = 0
    peak_elements = 0
    for idx, node in enumerate(graph.nodes):
        out_elems = node_output_elements(node, sizes[idx])
        total_elements += out_elems
        if node.inputs:
            in_elems = sum(
                node_output_elements(graph.nodes[p], sizes[p]) for p in node.inputs
            )
        else:
            in_elems = image_elements
        peak_elements = max(peak_elements, out_elems + in_elems)
    scale = batch * bytes_per_element
    return total_elements * scale, peak_elements * scale


def operational_intensity(graph: ModelGraph, resolution: int) -> float:
    """FLOPs per byte moved, single image, 2 bytes per element.

    Bytes moved = every activation output once plus the weights once.
    """
    flops = flop_count(graph, resolution)
    if flops == 0:
        raise ValueError("operational intensity is undefined for a zero-FLOP graph")
    activation_bytes, _ = activation_footprint(graph, resolution, 1, 2)
    weight_bytes = param_count(graph) * 2
    return flops / (activation_bytes + weight_bytes)


def cost_report(
    spec: ModelSpec,
    batch: int = 1,
    bytes_per_element: int = 2,
    num_classes: int = 1000,
) -> CostReport:
    """Full cost report for a model spec at its declared resolution."""
    graph = build_model(spec, num_classes=num_classes)
    total, peak = activation_footprint(graph, spec.resolution, batch, bytes_per_element)
    return CostReport(
        params=param_count(graph),
        flops=flop_count(graph, spec.resolution),
        activation_bytes_total=total,
        activation_bytes_peak=peak,
        operational_intensity=operational_intensity(graph, spec.resolution),
        resolution=spec.resolution,
        batch=batch,
        bytes_per_element=bytes_per_element,
    )
