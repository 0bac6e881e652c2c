"""Command-line front end.

Subcommands: ``transform`` (build/apply one elementary transform),
``warp`` (resample an image file), ``encode``/``decode`` (keypoint/heatmap
codecs), ``simulate`` (Monte Carlo error measurement of one pipeline
configuration), ``verify`` (identity and closed-form checks), ``ablate``
(preset configuration grids).

Exit codes: 0 success, 1 verification failure, 2 usage error.  Angles are
taken in degrees here and converted at the boundary; the library itself
works in radians.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import biaslab, dataio
from .biaslab import (
    CocoKeypointSampler,
    OracleMode,
    UniformKeypointSampler,
    analytic_errors,
    default_roi,
    monte_carlo,
)
from .codec import (
    decode_argmax,
    decode_biased_quarter,
    decode_ccrf,
    decode_dark,
    encode_ccrf,
    encode_gaussian,
    CcrfTarget,
)
from .geometry import (
    PlaneSize,
    Point,
    Roi,
    apply_point,
    compose,
    invert,
    t_crop,
    t_flip,
    t_resize,
    t_rotate,
)
from .pipeline import (
    Codec,
    Combine,
    Compensation,
    Convention,
    PipelineConfig,
    input_to_output,
    load_config,
    output_to_source,
    test_transform,
)
from .raster import (
    BorderPolicy,
    ImageGrid,
    read_grid_text,
    read_pgm,
    warp,
    write_grid_text,
    write_pgm,
)


class UsageError(Exception):
    """Inconsistent flags; reported on stderr with exit code 2."""


def _parse_size(text: str) -> PlaneSize:
    try:
        w, h = text.lower().split("x")
        return PlaneSize(int(w), int(h))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"expected WIDTHxHEIGHT pixels, got {text!r}") from exc


def _parse_point(text: str) -> Point:
    try:
        x, y = (float(v) for v in text.split(","))
        return Point(x, y)
    except ValueError as exc:
        raise UsageError(f"expected X,Y, got {text!r}") from exc


def _parse_roi(text: str) -> Roi:
    try:
        cx, cy, w, h = (float(v) for v in text.split(","))
        return Roi(cx, cy, w, h)
    except ValueError as exc:
        raise UsageError(f"expected CX,CY,W,H, got {text!r}") from exc


_CODEC_FLAGS = {
    "ccrf": Codec.CCRF,
    "cf": Codec.CF,
    "cf-biased": Codec.CF_BIASED_DECODE,
    "argmax": Codec.ARGMAX_ONLY,
}

_BORDER_FLAGS = {"zero": BorderPolicy.ZERO_FILL, "clamp": BorderPolicy.CLAMP_TO_EDGE}


def _matrix_json(t) -> str:
    return json.dumps({"matrix": [[float(v) for v in row] for row in t.m]}, indent=None)


# ---------------------------------------------------------------------------
# transform
# ---------------------------------------------------------------------------


def cmd_transform(args) -> int:
    if args.op == "crop":
        if args.roi is None:
            raise UsageError("--op crop requires --roi")
        t = t_crop(_parse_roi(args.roi))
    elif args.op == "resize":
        if args.src is None or args.dst is None:
            raise UsageError("--op resize requires --src and --dst extents")
        sw, sh = (float(v) for v in args.src.split(","))
        dw, dh = (float(v) for v in args.dst.split(","))
        t = t_resize(sw, sh, dw, dh)
    elif args.op == "rotate":
        if args.angle is None or args.center is None:
            raise UsageError("--op rotate requires --angle (degrees) and --center")
        t = t_rotate(math.radians(args.angle), _parse_point(args.center))
    elif args.op == "flip":
        if args.width is None:
            raise UsageError("--op flip requires --width")
        t = t_flip(args.width)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown op {args.op!r}")
    if args.invert:
        t = invert(t)
    payload = json.loads(_matrix_json(t))
    if args.point is not None:
        p = apply_point(t, _parse_point(args.point))
        payload["point"] = [p.x, p.y]
    print(json.dumps(payload))
    return 0


# ---------------------------------------------------------------------------
# warp
# ---------------------------------------------------------------------------


def _read_image(path: str) -> ImageGrid:
    if path.endswith(".pgm"):
        return read_pgm(path)
    return read_grid_text(path)


def _write_image(path: str, grid: ImageGrid) -> None:
    if path.endswith(".pgm"):
        write_pgm(path, grid)
    else:
        write_grid_text(path, grid)


def cmd_warp(args) -> int:
    src = _read_image(args.image)
    if args.op == "flip":
        t = t_flip(src.size.width_units)
    elif args.op == "rotate":
        if args.angle is None:
            raise UsageError("--op rotate requires --angle (degrees)")
        center = (
            _parse_point(args.center)
            if args.center is not None
            else Point(0.5 * src.size.width_units, 0.5 * src.size.height_units)
        )
        t = t_rotate(math.radians(args.angle), center)
    elif args.op == "resize":
        dst = _parse_size(args.dst_size) if args.dst_size else src.size
        t = t_resize(
            src.size.width_units, src.size.height_units, dst.width_units, dst.height_units
        )
    elif args.op == "crop":
        if args.roi is None:
            raise UsageError("--op crop requires --roi")
        t = t_crop(_parse_roi(args.roi))
    else:  # pragma: no cover
        raise UsageError(f"unknown op {args.op!r}")
    dst_size = _parse_size(args.dst_size) if args.dst_size else src.size
    out = warp(src, t, dst_size, _BORDER_FLAGS[args.border])
    _write_image(args.out, out)
    print(json.dumps({"written": args.out, "size": [dst_size.width_px, dst_size.height_px]}))
    return 0


# ---------------------------------------------------------------------------
# encode / decode
# ---------------------------------------------------------------------------


def cmd_encode(args) -> int:
    dims = _parse_size(args.size)
    k = _parse_point(args.keypoint)
    codec = _CODEC_FLAGS[args.codec]
    if codec is Codec.CCRF:
        radius = args.radius if args.radius is not None else 0.0625 * dims.width_px
        target = encode_ccrf(k, dims, radius)
        stacked = np.dstack(
            [target.c.data[:, :, 0], target.x_off.data[:, :, 0], target.y_off.data[:, :, 0]]
        )
        write_grid_text(args.out, ImageGrid(dims, stacked))
    else:
        target = encode_gaussian(k, dims, args.sigma)
        write_grid_text(args.out, target.c)
    print(json.dumps({"written": args.out, "codec": args.codec}))
    return 0


def cmd_decode(args) -> int:
    grid = read_grid_text(args.heatmap)
    codec = _CODEC_FLAGS[args.codec]
    if codec is Codec.CCRF:
        if grid.channels != 3:
            raise UsageError(
                f"ccrf decoding needs a 3-channel grid (c, x_off, y_off), got {grid.channels}"
            )
        target = CcrfTarget(
            c=ImageGrid(grid.size, grid.data[:, :, 0]),
            x_off=ImageGrid(grid.size, grid.data[:, :, 1]),
            y_off=ImageGrid(grid.size, grid.data[:, :, 2]),
            radius=args.radius if args.radius is not None else 0.0625 * grid.size.width_px,
        )
        result = decode_ccrf(target)
    else:
        plane = ImageGrid(grid.size, grid.data[:, :, 0])
        decoder = {
            Codec.CF: decode_dark,
            Codec.CF_BIASED_DECODE: decode_biased_quarter,
            Codec.ARGMAX_ONLY: decode_argmax,
        }[codec]
        result = decoder(plane)
    print(
        json.dumps(
            {
                "x": result.k.x,
                "y": result.k.y,
                "argmax": list(result.argmax),
                "degenerate": result.degenerate,
            }
        )
    )
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _config_from_args(args) -> PipelineConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig(
            convention=Convention.UNIT_LENGTH,
            input=PlaneSize(192, 256),
            output=PlaneSize(48, 64),
        )
    overrides: dict = {}
    if args.ucst is not None:
        overrides["convention"] = Convention.UNIT_LENGTH if args.ucst else Convention.PIXEL_COUNT
    if args.input is not None:
        overrides["input"] = _parse_size(args.input)
    if args.output is not None:
        overrides["output"] = _parse_size(args.output)
    if args.ft is not None:
        overrides["flip_test"] = args.ft
    if args.snoop is not None or args.ec is not None:
        snoop = bool(args.snoop)
        ec = bool(args.ec)
        if ec and not snoop:
            raise UsageError("--ec only refines --snoop; pass both")
        comp = Compensation.NONE
        if snoop:
            comp = Compensation.SNOOP_PLUS_EC if ec else Compensation.SNOOP
        overrides["compensation"] = comp
    if args.codec is not None:
        overrides["codec"] = _CODEC_FLAGS[args.codec]
        overrides["combine"] = None  # re-derive the codec's default combine
    if args.combine is not None:
        overrides["combine"] = Combine(args.combine.replace("-", "_"))
    if args.rno is not None:
        overrides["rno"] = args.rno
    if args.sigma is not None:
        overrides["sigma"] = args.sigma
    if args.radius is not None:
        overrides["radius"] = args.radius
    if not overrides:
        return cfg
    fields = {
        "convention": cfg.convention,
        "input": cfg.input,
        "output": cfg.output,
        "flip_test": cfg.flip_test,
        "compensation": cfg.compensation,
        "codec": cfg.codec,
        "combine": cfg.combine,
        "rno": cfg.rno,
        "flip_pairs": cfg.flip_pairs,
        "sigma": cfg.sigma,
        "radius": cfg.radius,
    }
    if "output" in overrides and args.radius is None and not args.config:
        fields["radius"] = None  # re-derive from the new output width
    fields.update(overrides)
    try:
        return PipelineConfig(**fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _sampler_from_args(args, cfg: PipelineConfig):
    if args.coco:
        loaded = dataio.load_coco_keypoints(args.coco)
        return CocoKeypointSampler(
            instances=loaded.instances,
            target_aspect=args.aspect,
            padding=args.padding,
        )
    roi = _parse_roi(args.roi) if args.roi else default_roi(cfg)
    return UniformKeypointSampler(roi, margin=args.margin)


_STATS_LINE = (
    "{label}  n={n_trials}  mean|ex|={mean_abs_x:.6f}  mean|ey|={mean_abs_y:.6f}  "
    "var|ex|={var_abs_x:.6f}  mean|ex_src|={mean_abs_x_source:.6f}  "
    "skipped={n_skipped} failed={n_decode_failed} degenerate={n_degenerate}"
)


def _print_stats(stats) -> None:
    print(_STATS_LINE.format(**stats.__dict__))


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    sampler = _sampler_from_args(args, cfg)
    mode = OracleMode.ANALYTIC_SHIFT if args.mode == "analytic" else OracleMode.FULL_HEATMAP
    stats = monte_carlo(
        cfg, mode, args.trials, args.seed, sampler, label=args.label, jobs=args.jobs
    )
    _print_stats(stats)
    closed = analytic_errors(cfg, sampler.roi if hasattr(sampler, "roi") else None)
    if closed["mean_abs_x"] is not None:
        print(
            f"closed-form: mean|ex|={closed['mean_abs_x']:.6f} "
            f"var|ex|={closed['var_abs_x']:.6f}"
        )
    if args.report:
        dataio.write_report([stats], args.format, args.report)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tail = f"  ({detail})" if detail and not ok else ""
    print(f"{'PASS' if ok else 'FAIL'}  {name}{tail}")
    return ok


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    results = []

    # Round trip through source -> input -> output -> source.
    worst = 0.0
    for convention in (Convention.UNIT_LENGTH, Convention.PIXEL_COUNT):
        for _ in range(500):
            cfg = PipelineConfig(
                convention=convention,
                input=PlaneSize(int(rng.integers(16, 512)), int(rng.integers(16, 512))),
                output=PlaneSize(int(rng.integers(8, 128)), int(rng.integers(8, 128))),
            )
            roi = Roi(
                cx=float(rng.uniform(-200, 800)),
                cy=float(rng.uniform(-200, 800)),
                w=float(rng.uniform(5, 500)),
                h=float(rng.uniform(5, 500)),
            )
            chain = compose(
                output_to_source(roi, cfg), compose(input_to_output(cfg), test_transform(roi, cfg))
            )
            p = Point(float(rng.uniform(-300, 900)), float(rng.uniform(-300, 900)))
            q = apply_point(chain, p)
            worst = max(worst, abs(q.x - p.x), abs(q.y - p.y))
    results.append(_check("round trip to source is the identity", worst < 1e-9, f"max={worst:.2e}"))

    # Flipped and original predictions align under unit-length ratios.
    worst = 0.0
    for _ in range(1000):
        cfg = PipelineConfig(
            convention=Convention.UNIT_LENGTH,
            input=PlaneSize(int(rng.integers(16, 512)), int(rng.integers(16, 512))),
            output=PlaneSize(int(rng.integers(8, 128)), int(rng.integers(8, 128))),
        )
        i2o = input_to_output(cfg)
        chain = compose(t_flip(cfg.output.width_units), compose(i2o, t_flip(cfg.input.width_units)))
        p = Point(float(rng.uniform(0, cfg.input.width_units)), 0.0)
        worst = max(worst, abs(apply_point(chain, p).x - apply_point(i2o, p).x))
    results.append(_check("flip ensemble aligns (unit-length ratios)", worst < 1e-9, f"max={worst:.2e}"))

    # Pixel-count ratios leave the known x offset.
    worst = 0.0
    for _ in range(200):
        wop = int(rng.integers(8, 128))
        cfg = PipelineConfig(
            convention=Convention.PIXEL_COUNT,
            input=PlaneSize(4 * wop, 4 * int(rng.integers(8, 128))),
            output=PlaneSize(wop, int(rng.integers(8, 128))),
        )
        s = cfg.stride
        i2o = input_to_output(cfg)
        chain = compose(t_flip(cfg.output.width_units), compose(i2o, t_flip(cfg.input.width_units)))
        offset = compose(chain, invert(i2o)).m[0, 2]
        worst = max(worst, abs(offset - (1.0 - s) / s))
    results.append(
        _check("pixel-count flip offset equals (1-s)/s", worst < 1e-9, f"max={worst:.2e}")
    )

    # Monte Carlo means for the remedies, at coordinate level.
    base = dict(
        convention=Convention.PIXEL_COUNT,
        input=PlaneSize(192, 256),
        output=PlaneSize(48, 64),
        flip_test=True,
        codec=Codec.ARGMAX_ONLY,
    )
    for comp, expect in (
        (Compensation.NONE, 0.375),
        (Compensation.SNOOP, 0.125),
        (Compensation.SNOOP_PLUS_EC, 0.0),
    ):
        cfg = PipelineConfig(compensation=comp, **base)
        stats = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 20000, args.seed)
        results.append(
            _check(
                f"flip remedy {comp.value}: mean |x error| = {expect}",
                abs(stats.mean_abs_x - expect) < 1e-3,
                f"got {stats.mean_abs_x:.6f}",
            )
        )

    # Codec identities.
    dims = PlaneSize(48, 64)
    worst = 0.0
    for _ in range(2000):
        k = Point(float(rng.uniform(0, 47)), float(rng.uniform(0, 63)))
        d = decode_ccrf(encode_ccrf(k, dims, 3.0))
        worst = max(worst, abs(d.k.x - k.x), abs(d.k.y - k.y))
    results.append(_check("disc codec round trip is exact", worst < 1e-12, f"max={worst:.2e}"))

    worst = 0.0
    for _ in range(2000):
        k = Point(float(rng.uniform(6, 41)), float(rng.uniform(6, 57)))
        d = decode_dark(encode_gaussian(k, dims, 2.0).c)
        worst = max(worst, abs(d.k.x - k.x), abs(d.k.y - k.y))
    results.append(
        _check("one-step Newton decode recovers exact peaks", worst < 1e-3, f"max={worst:.2e}")
    )

    # Quarter-shift decoder statistics on rendered maps.
    cfg = PipelineConfig(
        convention=Convention.UNIT_LENGTH,
        input=PlaneSize(192, 256),
        output=PlaneSize(48, 64),
        codec=Codec.CF_BIASED_DECODE,
    )
    stats = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 20000, args.seed)
    results.append(
        _check(
            "quarter-shift decoder: mean |error| = 1/8",
            abs(stats.mean_abs_x - 0.125) < 5e-3,
            f"got {stats.mean_abs_x:.6f}",
        )
    )
    results.append(
        _check(
            "quarter-shift decoder: var |error| = 1/192",
            abs(stats.var_abs_x - 1.0 / 192.0) < 1.0 / 1920.0,
            f"got {stats.var_abs_x:.6f}",
        )
    )

    # Closed forms match their fixed constants.
    table_ok = True
    for comp, mean, var in (
        (Compensation.SNOOP, 5.0 / 32.0, 37.0 / 3072.0),
        (Compensation.NONE, 3.0 / 8.0, 1.0 / 48.0),
    ):
        cfg = PipelineConfig(
            convention=Convention.PIXEL_COUNT,
            input=PlaneSize(192, 256),
            output=PlaneSize(48, 64),
            flip_test=True,
            compensation=comp,
            codec=Codec.CF_BIASED_DECODE,
        )
        closed = analytic_errors(cfg)
        table_ok &= abs(closed["mean_abs_x"] - mean) < 1e-12
        table_ok &= abs(closed["var_abs_x"] - var) < 1e-12
    results.append(_check("closed-form table matches its constants", table_ok))

    ok = all(results)
    print(f"{sum(results)}/{len(results)} checks passed")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------


def _topdown_presets() -> list[tuple[str, PipelineConfig]]:
    unit, pixel = Convention.UNIT_LENGTH, Convention.PIXEL_COUNT
    i, o = PlaneSize(192, 256), PlaneSize(48, 64)

    def cfg(conv, ft=False, comp=Compensation.NONE, codec=Codec.CF_BIASED_DECODE):
        return PipelineConfig(
            convention=conv, input=i, output=o, flip_test=ft, compensation=comp, codec=codec
        )

    return [
        ("A", cfg(pixel)),
        ("B", cfg(unit)),
        ("C", cfg(pixel, ft=True)),
        ("D", cfg(unit, ft=True)),
        ("E", cfg(pixel, ft=True, comp=Compensation.SNOOP)),
        ("F", cfg(pixel, ft=True, comp=Compensation.SNOOP_PLUS_EC)),
        ("G", cfg(pixel, ft=True, codec=Codec.CCRF)),
        ("H", cfg(unit, ft=True, codec=Codec.CCRF)),
        ("I", cfg(unit, ft=True, codec=Codec.CF)),
    ]


def _bottomup_presets() -> list[tuple[str, PipelineConfig]]:
    unit, pixel = Convention.UNIT_LENGTH, Convention.PIXEL_COUNT
    i = PlaneSize(128, 128)
    lo, hi = PlaneSize(32, 32), PlaneSize(64, 64)

    def cfg(conv, out, codec=Codec.CF_BIASED_DECODE, rno=False):
        return PipelineConfig(
            convention=conv, input=i, output=out, flip_test=True, codec=codec, rno=rno
        )

    return [
        ("A", cfg(pixel, lo, rno=True)),
        ("B", cfg(unit, lo)),
        ("C", cfg(unit, lo, codec=Codec.CF)),
        ("D", cfg(unit, lo, codec=Codec.CF, rno=True)),
        ("E", cfg(pixel, hi)),
        ("F", cfg(pixel, hi, rno=True)),
        ("G", cfg(pixel, hi, codec=Codec.CF, rno=True)),
        ("H", cfg(unit, hi)),
        ("I", cfg(unit, hi, codec=Codec.CF)),
        ("J", cfg(unit, hi, codec=Codec.CF, rno=True)),
    ]


def cmd_ablate(args) -> int:
    presets = _topdown_presets() if args.preset == "topdown" else _bottomup_presets()
    mode = OracleMode.ANALYTIC_SHIFT if args.mode == "analytic" else OracleMode.FULL_HEATMAP
    rows = []
    for row_id, cfg in presets:
        stats = monte_carlo(
            cfg,
            mode,
            args.trials,
            args.seed,
            label=f"{row_id}:{biaslab.describe_config(cfg)}",
            jobs=args.jobs,
        )
        rows.append(stats)
        _print_stats(stats)
    if args.report:
        dataio.write_report(rows, args.format, args.report)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_simulate_flags(sp: argparse.ArgumentParser, require_seed: bool) -> None:
    sp.add_argument("--seed", type=int, required=require_seed, help="PRNG seed (required)")
    sp.add_argument("-n", "--trials", type=int, default=10000, help="number of trials")
    sp.add_argument("--mode", choices=("analytic", "heatmap"), default="analytic",
                    help="coordinate-level or rendered-heatmap oracle")
    sp.add_argument("--jobs", type=int, default=1, help="worker process cap")
    sp.add_argument("--report", help="write stats to this path")
    sp.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keypose",
        description="Coordinate transforms, keypoint codecs and pipeline bias measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("transform", help="build one elementary transform, print it as JSON")
    sp.add_argument("--op", choices=("crop", "resize", "rotate", "flip"), required=True)
    sp.add_argument("--roi", help="CX,CY,W,H for crop")
    sp.add_argument("--src", help="W,H source extents (unit lengths) for resize")
    sp.add_argument("--dst", help="W,H destination extents (unit lengths) for resize")
    sp.add_argument("--angle", type=float, help="rotation angle in degrees")
    sp.add_argument("--center", help="X,Y rotation center")
    sp.add_argument("--width", type=float, help="plane extent (unit lengths) for flip")
    sp.add_argument("--point", help="X,Y point to push through the transform")
    sp.add_argument("--invert", action="store_true", help="invert before printing/applying")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("warp", help="resample an image or heatmap file")
    sp.add_argument("--image", required=True, help="input .pgm or textual grid file")
    sp.add_argument("--out", required=True, help="output path (.pgm or textual grid)")
    sp.add_argument("--op", choices=("crop", "resize", "rotate", "flip"), required=True)
    sp.add_argument("--roi", help="CX,CY,W,H for crop")
    sp.add_argument("--angle", type=float, help="rotation angle in degrees")
    sp.add_argument("--center", help="X,Y rotation center (defaults to the grid center)")
    sp.add_argument("--dst-size", help="WIDTHxHEIGHT pixels of the output grid")
    sp.add_argument("--border", choices=tuple(_BORDER_FLAGS), default="zero",
                    help="out-of-bounds sampling policy")
    sp.set_defaults(func=cmd_warp)

    sp = sub.add_parser("encode", help="encode a keypoint into a heatmap file")
    sp.add_argument("--codec", choices=("ccrf", "cf"), required=True)
    sp.add_argument("--keypoint", required=True, help="X,Y in output-plane units")
    sp.add_argument("--size", required=True, help="WIDTHxHEIGHT pixels of the map")
    sp.add_argument("--radius", type=float, help="disc radius (default width_px/16)")
    sp.add_argument("--sigma", type=float, default=2.0, help="gaussian sigma")
    sp.add_argument("--out", required=True, help="output textual grid path")
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="decode a heatmap file back to a keypoint")
    sp.add_argument("--codec", choices=tuple(_CODEC_FLAGS), required=True)
    sp.add_argument("--heatmap", required=True, help="textual grid path")
    sp.add_argument("--radius", type=float, help="disc radius metadata for ccrf")
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("simulate", help="Monte Carlo error measurement of one configuration")
    sp.add_argument("--config", help="flat key=value pipeline config file")
    sp.add_argument("--ucst", action=argparse.BooleanOptionalAction, default=None,
                    help="unit-length resize ratios (off = pixel-count ratios)")
    sp.add_argument("--ft", action=argparse.BooleanOptionalAction, default=None,
                    help="flip ensembling at test time")
    sp.add_argument("--snoop", action=argparse.BooleanOptionalAction, default=None,
                    help="shift the flipped-back result one node in +x")
    sp.add_argument("--ec", action=argparse.BooleanOptionalAction, default=None,
                    help="also subtract the 1/(2s) residual")
    sp.add_argument("--rno", action=argparse.BooleanOptionalAction, default=None,
                    help="upsample the network output before decoding")
    sp.add_argument("--codec", choices=tuple(_CODEC_FLAGS), default=None)
    sp.add_argument("--combine", choices=("average-coords", "average-heatmaps"), default=None)
    sp.add_argument("--input", help="input plane WIDTHxHEIGHT pixels")
    sp.add_argument("--output", help="output plane WIDTHxHEIGHT pixels")
    sp.add_argument("--sigma", type=float, default=None)
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--roi", help="CX,CY,W,H source crop box")
    sp.add_argument("--margin", type=float, default=None,
                    help="keypoint margin from output borders, in output units")
    sp.add_argument("--coco", help="sample ground truth from this annotation JSON")
    sp.add_argument("--aspect", type=float, default=None, help="crop aspect for --coco")
    sp.add_argument("--padding", type=float, default=1.25, help="crop padding for --coco")
    sp.add_argument("--label", default=None, help="row label in reports")
    _add_simulate_flags(sp, require_seed=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run the identity and closed-form check suite")
    sp.add_argument("--seed", type=int, default=20240001, help="PRNG seed")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("ablate", help="run a preset configuration grid")
    sp.add_argument("--preset", choices=("topdown", "bottomup"), required=True)
    _add_simulate_flags(sp, require_seed=True)
    sp.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
