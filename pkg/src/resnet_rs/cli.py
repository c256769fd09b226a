"""Command-line surface.

Every subcommand prints machine-readable JSON (or CSV for tabular output)
on stdout; ``--pretty`` switches to a human-oriented rendering. Exit codes:
0 success, 1 runtime failure (reported as a JSON object on stderr), 2
usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict

from . import arch, augment, costs, scaling, schedules, serde


class UsageError(ValueError):
    """Invalid flag combination that argparse alone cannot catch."""


def _spec_from_args(args: argparse.Namespace) -> arch.ModelSpec:
    if getattr(args, "spec", None):
        with open(args.spec) as fh:
            return serde.parse_spec(fh.read())
    if args.depth is None:
        raise UsageError("either --spec or --depth is required")
    layout = None
    if args.layout:
        parts = [int(p) for p in args.layout.split(",")]
        if len(parts) != 4:
            raise UsageError("--layout needs four comma-separated block counts")
        layout = arch.StageLayout(tuple(parts))
    return arch.ModelSpec(
        depth=args.depth,
        width_mult=args.width,
        resolution=args.res,
        resnet_d=args.resnet_d,
        se_ratio=args.se,
        layout_override=layout,
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", help="model spec JSON document to load")
    parser.add_argument("--depth", type=int, help="nominal depth, e.g. 50")
    parser.add_argument("--width", type=float, default=1.0, help="width multiplier")
    parser.add_argument("--res", type=int, default=224, help="input resolution")
    parser.add_argument("--se", type=float, default=0.0,
                        help="squeeze-excitation ratio (0 disables)")
    parser.add_argument("--resnet-d", action="store_true",
                        help="apply the ResNet-D adjustments")
    parser.add_argument("--layout", help="override stage layout, e.g. 3,4,6,3")


def _emit(args: argparse.Namespace, payload: dict, pretty_lines) -> None:
    if args.pretty:
        for line in pretty_lines(payload):
            print(line)
    else:
        print(json.dumps(payload, indent=2))


def _cmd_build(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    graph = arch.build_model(spec)
    if args.pretty:
        trace = arch.shape_trace(graph, spec.resolution)
        print(f"model: depth {spec.depth}, width {spec.width_mult}, "
              f"resolution {spec.resolution}, resnet_d {spec.resnet_d}, "
              f"se {spec.se_ratio}")
        print(f"nodes: {len(graph.nodes)}, residual blocks: "
              f"{graph.residual_block_count()}")
        for stage, (h, w, c) in trace.as_dict().items():
            print(f"  {stage:>4}: {h}x{w}x{c}")
    else:
        print(serde.emit_spec(spec))
    return 0


def _cmd_cost(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    report = costs.cost_report(spec, batch=args.batch,
                               bytes_per_element=args.bytes_per_element)
    payload = {
        "spec": json.loads(serde.emit_spec(spec)),
        "params": report.params,
        "flops": report.flops,
        "activation_bytes_total": report.activation_bytes_total,
        "activation_bytes_peak": report.activation_bytes_peak,
        "operational_intensity": report.operational_intensity,
        "resolution": report.resolution,
        "batch": report.batch,
        "bytes_per_element": report.bytes_per_element,
    }

    def pretty(p):
        yield f"params:    {p['params'] / 1e6:.2f} M"
        yield f"flops:     {p['flops'] / 1e9:.2f} B @ {p['resolution']} px"
        yield (f"acts:      {p['activation_bytes_total'] / 2**30:.2f} GiB total, "
               f"{p['activation_bytes_peak'] / 2**20:.2f} MiB peak "
               f"(batch {p['batch']}, {p['bytes_per_element']} B/elem)")
        yield f"intensity: {p['operational_intensity']:.1f} FLOPs/byte"

    _emit(args, payload, pretty)
    return 0


def _parse_axis(raw: str, caster):
    try:
        return [caster(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse axis value list {raw!r}") from None


def _cmd_grid(args: argparse.Namespace) -> int:
    widths = _parse_axis(args.widths, float)
    depths = _parse_axis(args.depths, int)
    resolutions = _parse_axis(args.resolutions, int)
    configs = scaling.enumerate_grid(widths, depths, resolutions)

    header = ["depth", "width_mult", "resolution"]
    if args.policy:
        header += ["randaugment_layers", "randaugment_magnitude",
                   "stochastic_depth_rate", "dropout_rate", "label_smoothing",
                   "weight_decay"]
    if args.cost:
        header += ["params", "flops"]
    writer = csv.writer(sys.stdout)
    writer.writerow(header)
    for cfg in configs:
        row: list = [cfg.depth, cfg.width_mult, cfg.resolution]
        if args.policy:
            reg = schedules.grid_reg_policy(cfg, args.epochs)
            row += [reg.randaugment_layers, reg.randaugment_magnitude,
                    reg.stochastic_depth_rate, reg.dropout_rate,
                    reg.label_smoothing, reg.weight_decay]
        if args.cost:
            if args.plain:
                spec = arch.ModelSpec(cfg.depth, cfg.width_mult, cfg.resolution)
            else:
                spec = arch.ModelSpec.resnet_rs(cfg.depth, cfg.resolution,
                                                cfg.width_mult)
            graph = arch.build_model(spec)
            row += [costs.param_count(graph),
                    costs.flop_count(graph, cfg.resolution)]
        writer.writerow(row)
    return 0


def _row_points(rows, metric):
    points = []
    for row in rows:
        value = getattr(row, metric)
        if value is None:
            continue
        points.append(scaling.ParetoPoint(row.label, float(value), row.top1))
    return points


def _find_point(points, label):
    exact = [p for p in points if p.model_id == label]
    if len(exact) == 1:
        return exact[0]
    prefix = [p for p in points if p.model_id.split("@")[0] == label]
    if len(prefix) == 1:
        return prefix[0]
    if len(prefix) > 1:
        options = ", ".join(p.model_id for p in prefix)
        raise ValueError(f"label {label!r} is ambiguous; candidates: {options}")
    raise ValueError(f"no measurement labelled {label!r}")


def _cmd_pareto(args: argparse.Namespace) -> int:
    if args.data:
        rows = serde.load_measurements(args.data)
    else:
        rows = serde.load_pareto_reference()
    points = _row_points(rows, args.cost)
    if not points:
        raise ValueError(f"no rows carry the {args.cost!r} metric")
    frontier = scaling.pareto_frontier(points)
    frontier_ids = {p.model_id for p in frontier}
    dominated = [p for p in points if p.model_id not in frontier_ids]

    def as_dict(p):
        return {"model_id": p.model_id, "cost": p.cost, "top1": p.quality}

    payload: dict = {
        "cost_metric": args.cost,
        "frontier": [as_dict(p) for p in frontier],
        "dominated": [as_dict(p) for p in dominated],
    }
    if args.fit:
        samples = [
            (row.flops_b, 100.0 - row.top1)
            for row in rows
            if (args.fit_prefix is None or row.model_id.startswith(args.fit_prefix))
            and (args.fit_max_flops is None or row.flops_b <= args.fit_max_flops)
        ]
        fit = scaling.powerlaw_fit(samples)
        payload["fit"] = {
            "exponent": fit.exponent,
            "coefficient": fit.coefficient,
            "r_squared": fit.r_squared,
            "points": len(samples),
            "max_flops_b": args.fit_max_flops,
        }
    if args.speedup:
        payload["speedups"] = []
        for slow_label, fast_label in args.speedup:
            slow = _find_point(points, slow_label)
            fast = _find_point(points, fast_label)
            payload["speedups"].append({
                "slow": slow.model_id,
                "fast": fast.model_id,
                "ratio": scaling.speedup(slow, fast),
            })

    def pretty(p):
        yield f"frontier by {p['cost_metric']}:"
        for entry in p["frontier"]:
            yield (f"  {entry['model_id']:<24} cost {entry['cost']:>8.2f}  "
                   f"top-1 {entry['top1']:.1f}")
        if "fit" in p:
            fit = p["fit"]
            yield (f"power-law fit over {fit['points']} points: error ~= "
                   f"{fit['coefficient']:.1f} * flops^{fit['exponent']:.3f} "
                   f"(r^2 {fit['r_squared']:.3f})")
        for s in p.get("speedups", []):
            yield f"speedup {s['slow']} vs {s['fast']}: {s['ratio']:.1f}x"

    _emit(args, payload, pretty)
    return 0


def _cmd_schedule(args: argparse.Namespace) -> int:
    presets = schedules.recipe_presets()
    if args.preset not in presets:
        raise UsageError(
            f"unknown preset {args.preset!r}; choose from {sorted(presets)}"
        )
    preset = presets[args.preset]
    if preset.lr_decay not in ("cosine", "stepwise"):
        raise ValueError(
            f"preset {args.preset!r} uses {preset.lr_decay!r} decay, which "
            "this schedule generator does not model"
        )
    epochs = args.epochs or preset.epochs
    plan = schedules.build_plan(
        epochs=epochs,
        steps_per_epoch=args.steps_per_epoch,
        batch_size=args.batch,
        decay=preset.lr_decay,
        warmup_epochs=args.warmup_epochs,
        lr_mode=args.lr_mode,
    )
    ema = preset.ema_decay
    sd = preset.stochastic_depth_rate
    if args.depth is not None and args.res is not None:
        reg = schedules.reg_policy(args.depth, args.res)
        ema, sd = reg.ema_decay, reg.stochastic_depth_rate

    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "lr", "ema_decay", "sd_final_rate"])
            for step in range(plan.total_steps + 1):
                writer.writerow([step, repr(schedules.lr_at(step, plan)), ema, sd])

    payload = {
        "preset": args.preset,
        "epochs": epochs,
        "steps_per_epoch": args.steps_per_epoch,
        "batch": args.batch,
        "total_steps": plan.total_steps,
        "warmup_steps": plan.warmup_steps,
        "peak_lr": plan.peak_lr,
        "decay": plan.decay,
        "lr_mode": args.lr_mode,
        "ema_decay": ema,
        "sd_final_rate": sd,
        "dump": args.dump,
    }

    def pretty(p):
        yield (f"{p['preset']}: {p['epochs']} epochs x {p['steps_per_epoch']} "
               f"steps, batch {p['batch']}")
        yield (f"peak lr {p['peak_lr']:.6g} ({p['lr_mode']}), {p['decay']} decay, "
               f"warmup {p['warmup_steps']} steps")
        yield f"ema {p['ema_decay']}, stochastic depth {p['sd_final_rate']}"
        if p["dump"]:
            yield f"schedule written to {p['dump']}"

    _emit(args, payload, pretty)
    return 0


def _cmd_strategy(args: argparse.Namespace) -> int:
    regime = scaling.TrainingRegime(
        epochs=args.epochs,
        overfitting_expected=args.overfitting,
    )
    strategy = scaling.recommend_strategy(regime)
    if args.cap != scaling.DEFAULT_RESOLUTION_CAP:
        strategy = scaling.ScalingStrategy(strategy.kind, args.cap, strategy.advisory)
    payload: dict = {
        "kind": strategy.kind.value,
        "resolution_cap": strategy.resolution_cap,
        "advisory": strategy.advisory,
    }
    if args.base:
        parts = args.base.split(",")
        if len(parts) != 3:
            raise UsageError("--base needs depth,width,resolution")
        base = scaling.ScaleConfig(int(parts[0]), float(parts[1]), int(parts[2]))
        if strategy.kind is not scaling.StrategyKind.REGIME_DEPENDENT:
            walk = scaling.apply_strategy(base, strategy, args.steps)
            payload["walk"] = [asdict(cfg) for cfg in walk]

    def pretty(p):
        yield f"strategy: {p['kind']} (resolution cap {p['resolution_cap']})"
        if p["advisory"]:
            yield f"advisory: {p['advisory']}"
        for cfg in p.get("walk", []):
            yield (f"  depth {cfg['depth']:>4}  width {cfg['width_mult']:<4} "
                   f" res {cfg['resolution']}")

    _emit(args, payload, pretty)
    return 0


def _demo_pattern(width: int, height: int) -> augment.Raster:
    data = bytearray()
    for y in range(height):
        for x in range(width):
            data += bytes((
                x * 255 // max(1, width - 1),
                y * 255 // max(1, height - 1),
                128,
            ))
    return augment.Raster(width, height, bytes(data))


def _cmd_augment_demo(args: argparse.Namespace) -> int:
    if args.input:
        raster = augment.read_ppm(args.input)
    else:
        try:
            w, h = (int(v) for v in args.size.split("x"))
        except ValueError:
            raise UsageError(f"cannot parse --size {args.size!r}; use WxH") from None
        raster = _demo_pattern(w, h)
    if args.ops:
        names = [n.strip() for n in args.ops.split(",") if n.strip()]
        ops = [(n, augment.magnitude_to_param(n, args.magnitude)) for n in names]
    else:
        policy = augment.AugmentPolicy(
            num_layers=args.layers, magnitude=args.magnitude, seed=args.seed
        )
        ops = augment.sample_policy_instance(policy)
    result = augment.apply(raster, ops)
    augment.write_ppm(result, args.output)

    payload = {
        "seed": args.seed,
        "layers": len(ops),
        "magnitude": args.magnitude,
        "width": result.width,
        "height": result.height,
        "ops": [[name, param] for name, param in ops],
        "output": args.output,
    }
    if args.input:
        payload["input"] = args.input

    def pretty(p):
        yield f"applied {p['layers']} ops at magnitude {p['magnitude']}:"
        for name, param in p["ops"]:
            yield f"  {name:<14} {param:.3f}"
        yield f"wrote {p['output']} ({p['width']}x{p['height']})"

    _emit(args, payload, pretty)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resnet-rs",
        description="Architecture graphs, analytic costs, scaling strategies "
                    "and training schedules for the ResNet-RS family.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="construct a model and emit its spec document")
    _add_model_flags(p)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("cost", help="analytic params/FLOPs/memory report")
    _add_model_flags(p)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--bytes-per-element", type=int, default=2, choices=(2, 4))
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_cost)

    p = sub.add_parser("grid", help="enumerate a scaling grid as CSV")
    p.add_argument("--widths", default="0.25,0.5,1.0,1.5,2.0")
    p.add_argument("--depths", default="26,50,101,200,300,350,400")
    p.add_argument("--resolutions", default="128,160,224,320,448")
    p.add_argument("--epochs", type=int, default=350,
                   help="training length for --policy columns")
    p.add_argument("--policy", action="store_true",
                   help="append regularization policy columns")
    p.add_argument("--cost", action="store_true",
                   help="append analytic params/flops columns")
    p.add_argument("--plain", action="store_true",
                   help="cost the vanilla ResNet variant instead of ResNet-RS")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("pareto", help="frontier / speedup / power-law report")
    p.add_argument("--data", help="measurement CSV (default: embedded dataset)")
    p.add_argument("--cost", default="tpu_ms",
                   choices=("tpu_ms", "v100_s", "flops_b"),
                   help="cost metric for dominance")
    p.add_argument("--fit", action="store_true",
                   help="fit error vs flops as a power law")
    p.add_argument("--fit-prefix", default=None,
                   help="restrict the fit to model ids with this prefix")
    p.add_argument("--fit-max-flops", type=float, default=None,
                   help="restrict the fit to rows at or below this many GFLOPs")
    p.add_argument("--speedup", nargs=2, action="append",
                   metavar=("SLOW", "FAST"),
                   help="report slow/fast cost ratio; repeatable")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("schedule", help="dump a training schedule")
    p.add_argument("--preset", default="resnet-rs")
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--epochs", type=int, default=None,
                   help="override the preset's epoch count")
    p.add_argument("--steps-per-epoch", type=int, required=True)
    p.add_argument("--warmup-epochs", type=int, default=5)
    p.add_argument("--lr-mode", default="inverse", choices=("inverse", "linear"))
    p.add_argument("--depth", type=int, default=None,
                   help="model depth, to pull the published policy row")
    p.add_argument("--res", type=int, default=None,
                   help="model resolution, to pull the published policy row")
    p.add_argument("--dump", help="write step,lr,ema_decay,sd_final_rate CSV here")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("strategy", help="recommend and walk a scaling strategy")
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--overfitting", default="unknown",
                   choices=("yes", "no", "unknown"))
    p.add_argument("--base", help="starting config as depth,width,resolution")
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--cap", type=int, default=scaling.DEFAULT_RESOLUTION_CAP)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_strategy)

    p = sub.add_parser("augment-demo", help="apply a sampled augmentation policy")
    p.add_argument("--input", help="input PPM (P6); omit to use a generated pattern")
    p.add_argument("--output", required=True, help="output PPM path")
    p.add_argument("--size", default="64x64",
                   help="generated pattern size when no --input is given")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--magnitude", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ops", help="comma-separated op names to apply instead "
                                 "of sampling")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=_cmd_augment_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(json.dumps({"error": str(exc), "kind": "usage"}), file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
