"""Serialization: model-spec JSON documents, measurement CSVs and the
embedded reference datasets.

Model spec documents carry a schema version tag ("1") and round-trip
losslessly through parse/emit. Measurement CSVs use the header

    model_id,resolution,params_m,flops_b,v100_s,tpu_ms,top1

optionally extended with a trailing ``tpu_memory_gb`` column. Latency
units are normalized at ingestion and named in the headers: TPU training
step latency in milliseconds, V100 in seconds, both for a 1024-image
global batch. The memory column is measured under bfloat16 without fusion
or rematerialization, so it is only band-comparable to the analytic
activation estimate.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

from .arch import ModelSpec, StageLayout

SCHEMA_VERSION = "1"

MEASUREMENT_COLUMNS = (
    "model_id", "resolution", "params_m", "flops_b", "v100_s", "tpu_ms", "top1",
)
OPTIONAL_MEASUREMENT_COLUMNS = ("tpu_memory_gb",)

PARETO_DATASET = "pareto_models.csv"
MEMORY_DATASET = "memory_latency.csv"


class SpecFormatError(ValueError):
    """A model-spec document failed to parse; ``field`` names the culprit."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MeasurementFormatError(ValueError):
    """A measurement CSV failed to parse; carries row/column context."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


def emit_spec(spec: ModelSpec) -> str:
    """Serialize a ModelSpec to its canonical JSON document."""
    doc: dict = {
        "schema": SCHEMA_VERSION,
        "depth": spec.depth,
        "width_mult": spec.width_mult,
        "resolution": spec.resolution,
        "resnet_d": spec.resnet_d,
        "se_ratio": spec.se_ratio,
    }
    if spec.layout_override is not None:
        doc["layout_override"] = list(spec.layout_override.blocks_per_stage)
    return json.dumps(doc, indent=2)


def _require(doc: dict, field: str, kind: type, type_name: str):
    if field not in doc:
        raise SpecFormatError(f"missing required field {field!r}", field)
    value = doc[field]
    # bool is an int subclass; keep the two apart
    if isinstance(value, bool) and kind is not bool:
        raise SpecFormatError(f"field {field!r} must be {type_name}", field)
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind):
        raise SpecFormatError(f"field {field!r} must be {type_name}", field)
    return value


def parse_spec(text: str) -> ModelSpec:
    """Parse a model-spec JSON document.

    Raises SpecFormatError for structural problems (unknown fields, wrong
    types, missing schema version) and ValueError for documents that parse
    but violate spec invariants.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecFormatError("a spec document must be a JSON object")

    known = {"schema", "depth", "width_mult", "resolution", "resnet_d",
             "se_ratio", "layout_override"}
    unknown = set(doc) - known
    if unknown:
        field = sorted(unknown)[0]
        raise SpecFormatError(f"unknown field {field!r}", field)

    version = _require(doc, "schema", str, "a string")
    if version != SCHEMA_VERSION:
        raise SpecFormatError(
            f"unsupported schema version {version!r} (expected {SCHEMA_VERSION!r})",
            "schema",
        )
    depth = _require(doc, "depth", int, "an integer")
    width_mult = _require(doc, "width_mult", float, "a number")
    resolution = _require(doc, "resolution", int, "an integer")
    resnet_d = _require(doc, "resnet_d", bool, "a boolean")
    se_ratio = _require(doc, "se_ratio", float, "a number")

    layout = None
    if "layout_override" in doc:
        raw = doc["layout_override"]
        if (
            not isinstance(raw, list)
            or len(raw) != 4
            or any(isinstance(v, bool) or not isinstance(v, int) for v in raw)
        ):
            raise SpecFormatError(
                "field 'layout_override' must be a list of four integers",
                "layout_override",
            )
        layout = StageLayout(tuple(raw))

    return ModelSpec(
        depth=depth,
        width_mult=width_mult,
        resolution=resolution,
        resnet_d=resnet_d,
        se_ratio=se_ratio,
        layout_override=layout,
    )


@dataclass(frozen=True)
class MeasurementRow:
    """One measured model: analytic size plus observed latency/accuracy."""

    model_id: str
    resolution: int
    params_m: float
    flops_b: float
    v100_s: float | None
    tpu_ms: float | None
    top1: float
    tpu_memory_gb: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.top1 < 100.0:
            raise ValueError(f"top1 must lie in (0, 100), got {self.top1}")
        for name in ("params_m", "flops_b", "v100_s", "tpu_ms", "tpu_memory_gb"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"{name} must be positive when present, got {value}")

    @property
    def label(self) -> str:
        return f"{self.model_id}@{self.resolution}"


def _parse_cell(raw: str, column: str, row_num: int, caster):
    raw = raw.strip()
    try:
        return caster(raw)
    except ValueError:
        raise MeasurementFormatError(
            f"row {row_num}, column {column!r}: cannot parse {raw!r}",
            row=row_num,
            column=column,
        ) from None


def _rows_from_reader(reader: Iterable[list[str]], source: str) -> list[MeasurementRow]:
    rows = list(reader)
    if not rows:
        raise MeasurementFormatError(f"{source}: empty measurement file")
    header = [h.strip() for h in rows[0]]
    base = list(MEASUREMENT_COLUMNS)
    extended = base + list(OPTIONAL_MEASUREMENT_COLUMNS)
    if header != base and header != extended:
        raise MeasurementFormatError(
            f"{source}: unexpected header {header}; expected {base} "
            f"optionally followed by {list(OPTIONAL_MEASUREMENT_COLUMNS)}"
        )
    has_memory = header == extended
    out: list[MeasurementRow] = []
    for row_num, cells in enumerate(rows[1:], start=2):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise MeasurementFormatError(
                f"{source}: row {row_num} has {len(cells)} cells, expected "
                f"{len(header)}",
                row=row_num,
            )
        record = dict(zip(header, cells))

        def optional(column: str) -> float | None:
            raw = record[column].strip()
            if not raw:
                return None
            return _parse_cell(raw, column, row_num, float)

        out.append(
            MeasurementRow(
                model_id=record["model_id"].strip(),
                resolution=_parse_cell(record["resolution"], "resolution", row_num, int),
                params_m=_parse_cell(record["params_m"], "params_m", row_num, float),
                flops_b=_parse_cell(record["flops_b"], "flops_b", row_num, float),
                v100_s=optional("v100_s"),
                tpu_ms=optional("tpu_ms"),
                top1=_parse_cell(record["top1"], "top1", row_num, float),
                tpu_memory_gb=optional("tpu_memory_gb") if has_memory else None,
            )
        )
    if not out:
        raise MeasurementFormatError(f"{source}: no measurement rows")
    return out


def load_measurements(path: str | Path) -> list[MeasurementRow]:
    """Load a measurement CSV from disk."""
    with open(path, newline="") as fh:
        return _rows_from_reader(csv.reader(fh), str(path))


def _data_file(name: str):
    return resources.files("resnet_rs").joinpath("data").joinpath(name)


def _load_embedded(name: str) -> list[MeasurementRow]:
    text = _data_file(name).read_text()
    return _rows_from_reader(csv.reader(io.StringIO(text)), name)


def load_pareto_reference() -> list[MeasurementRow]:
    """The embedded speed-accuracy dataset: 8 EfficientNets and 11
    ResNet-RS configurations with latency and top-1 columns."""
    return _load_cached(PARETO_DATASET)


def load_memory_reference() -> list[MeasurementRow]:
    """The embedded latency+memory comparison of two ResNet-RS models
    against EfficientNet-B6/B7."""
    return _load_cached(MEMORY_DATASET)


_cache: dict[str, list[MeasurementRow]] = {}


def _load_cached(name: str) -> list[MeasurementRow]:
    if name not in _cache:
        _cache[name] = _load_embedded(name)
    return list(_cache[name])


def load_schemas() -> dict:
    """JSON Schemas for every CLI output document, keyed by report name."""
    return json.loads(_data_file("schemas.json").read_text())
