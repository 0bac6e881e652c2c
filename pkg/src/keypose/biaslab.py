"""Ideal-network oracle and Monte Carlo / closed-form error engines.

Under a perfect-learning assumption the network is replaceable by an oracle
that returns exactly its training target for any input.  Every residual
error in a simulated pipeline is then a property of the data processing
alone, which makes desk-scale measurement of those errors possible:

* ``ANALYTIC_SHIFT`` mode propagates keypoints through the transform
  algebra at coordinate level.  Classification-map averaging is modeled by
  its single-peak approximation (the averaged map's peak sits at the
  midpoint of the two branch peaks), decoding is exact for the unbiased
  codecs, and the quarter-shift decoder applies its closed-form
  quantization law.
* ``FULL_HEATMAP`` mode renders real heatmaps through the configured
  encoder, averages/shifts/flips them as arrays and runs the real decoders,
  so it also captures what the coordinate-level approximation leaves out.

Trials are reproducible: each trial's randomness derives only from the run
seed and the trial index (a splitmix-style generator), and aggregation uses
compensated summation over fixed-size chunks, so results are identical for
any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .codec import (
    NoDetectionError,
    _argmax_xy,
    _ccrf_arrays,
    _dark_offset,
    _gaussian_array,
    _quarter_offset,
)
from .geometry import Point, Roi, Transform2D, apply_point, invert
from .pipeline import (
    Codec,
    Combine,
    Compensation,
    Convention,
    PipelineConfig,
    input_to_output,
    output_to_source,
    rno_upsample,
    test_transform,
)
from .raster import ImageGrid

__all__ = [
    "CocoKeypointSampler",
    "ErrorStats",
    "OracleMode",
    "SkipTrial",
    "SplitMix64",
    "TrialRecord",
    "UniformKeypointSampler",
    "analytic_errors",
    "default_roi",
    "describe_config",
    "ideal_network",
    "monte_carlo",
    "run_trial",
    "substream",
]


class OracleMode(Enum):
    """Fidelity level of the simulated network output."""

    ANALYTIC_SHIFT = "analytic"
    FULL_HEATMAP = "heatmap"


class SkipTrial(Exception):
    """A trial's keypoint left the simulated planes; skip and count it."""


# ---------------------------------------------------------------------------
# Deterministic randomness: splitmix-style 64-bit generator.
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Splitmix-style PRNG: the state advances by the 64-bit golden-ratio
    constant and each output is a finalizer hash of the state.

    Chosen because the whole algorithm fits in a paragraph, making runs
    reproducible across implementations at the statistics level.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix64(self._state)

    def uniform(self) -> float:
        """A float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def substream(seed: int, index: int) -> SplitMix64:
    """Independent generator for one trial, derived only from (seed, index)."""
    return SplitMix64(_mix64((seed + (index + 1) * _GOLDEN) & _MASK64))


# ---------------------------------------------------------------------------
# Keypoint samplers
# ---------------------------------------------------------------------------


def default_roi(cfg: PipelineConfig) -> Roi:
    """A source-image crop box matching the input aspect ratio."""
    bw = cfg.input.width_px / 2.0
    bh = cfg.input.height_px / 2.0
    return Roi(cx=bw, cy=bh, w=bw, h=bh)


@dataclass(frozen=True)
class UniformKeypointSampler:
    """Ground truth uniform over the output plane, inset by a margin.

    The margin keeps encoded peaks away from the borders so that border
    handling never contaminates the statistics; ``None`` resolves to the
    disc radius for the disc codec and three sigma otherwise.
    """

    roi: Roi
    margin: float | None = None

    def bind(self, cfg: PipelineConfig) -> "_BoundUniform":
        if self.margin is not None:
            margin = float(self.margin)
        elif cfg.codec is Codec.CCRF:
            margin = float(cfg.radius)
        else:
            margin = 3.0 * cfg.sigma
        wo, ho = cfg.output.width_units, cfg.output.height_units
        if 2.0 * margin >= min(wo, ho):
            raise ValueError(
                f"margin {margin} leaves no interior on a "
                f"{cfg.output.width_px}x{cfg.output.height_px} output plane"
            )
        return _BoundUniform(self.roi, cfg, margin)


class _BoundUniform:
    __slots__ = ("fixed_roi", "_o2s", "_mx", "_my", "_rx", "_ry")

    def __init__(self, roi: Roi, cfg: PipelineConfig, margin: float) -> None:
        self.fixed_roi = roi
        self._o2s = _aff(output_to_source(roi, cfg))
        wo, ho = cfg.output.width_units, cfg.output.height_units
        self._mx = margin
        self._my = margin
        self._rx = wo - 2.0 * margin
        self._ry = ho - 2.0 * margin

    def draw(self, rng: SplitMix64) -> tuple[Roi, float, float]:
        kx = self._mx + rng.uniform() * self._rx
        ky = self._my + rng.uniform() * self._ry
        gx, gy = _ap(self._o2s, kx, ky)
        return self.fixed_roi, gx, gy


@dataclass(frozen=True)
class CocoKeypointSampler:
    """Ground truth drawn from annotated instances.

    Each trial picks one (instance, visible keypoint) pair uniformly; the
    crop box comes from the instance bounding box via aspect fixing and
    padding.  Keypoints that leave the simulated planes are skipped and
    counted, as real crops do clip annotations.
    """

    instances: tuple
    target_aspect: float | None = None
    padding: float = 1.25

    def bind(self, cfg: PipelineConfig) -> "_BoundCoco":
        from .dataio import bbox_to_roi

        aspect = self.target_aspect
        if aspect is None:
            aspect = cfg.input.width_px / cfg.input.height_px
        entries = []
        for inst in self.instances:
            roi = bbox_to_roi(inst.bbox, aspect, self.padding)
            for point, visibility in inst.keypoints:
                if visibility > 0:
                    entries.append((roi, point.x, point.y))
        if not entries:
            raise ValueError("no visible keypoints to sample from")
        return _BoundCoco(tuple(entries))


class _BoundCoco:
    __slots__ = ("fixed_roi", "_entries")

    def __init__(self, entries: tuple) -> None:
        self.fixed_roi = None
        self._entries = entries

    def draw(self, rng: SplitMix64) -> tuple[Roi, float, float]:
        idx = int(rng.uniform() * len(self._entries))
        return self._entries[idx]


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorStats:
    """Aggregate absolute errors of one simulated configuration.

    ``mean_abs_x``/``mean_abs_y`` and their variances are in output-plane
    units against the true output-space keypoint; ``mean_abs_x_source`` is
    in source units against the ground truth.  ``n_trials`` counts the
    trials that contributed; skipped and failed trials are reported
    separately and excluded from the statistics.
    """

    label: str
    n_trials: int
    mean_abs_x: float
    mean_abs_y: float
    var_abs_x: float
    var_abs_y: float
    mean_abs_x_source: float
    n_skipped: int
    n_decode_failed: int
    n_degenerate: int

    def __post_init__(self) -> None:
        if self.n_trials <= 0:
            raise ValueError("stats need at least one contributing trial")
        if self.var_abs_x < 0 or self.var_abs_y < 0:
            raise ValueError("variances cannot be negative")


@dataclass(frozen=True)
class TrialRecord:
    """One simulated prediction with its ground truth and configuration."""

    gt_source: Point
    pred_source: Point
    pred_output: Point
    config: PipelineConfig


def describe_config(cfg: PipelineConfig) -> str:
    parts = [cfg.convention.value, cfg.codec.value]
    if cfg.flip_test:
        parts.append("ft")
    if cfg.compensation is not Compensation.NONE:
        parts.append(cfg.compensation.value)
    if cfg.rno:
        parts.append("rno")
    parts.append(f"s{cfg.stride:g}")
    return "+".join(parts)


# ---------------------------------------------------------------------------
# Trial engine.  Affine transforms are carried as flat 6-tuples in the hot
# path; the matrices come from the pipeline module and are built once per
# crop box.
# ---------------------------------------------------------------------------


def _aff(t: Transform2D) -> tuple[float, float, float, float, float, float]:
    m = t.m
    return (
        float(m[0, 0]), float(m[0, 1]), float(m[0, 2]),
        float(m[1, 0]), float(m[1, 1]), float(m[1, 2]),
    )


def _ap(a, x: float, y: float) -> tuple[float, float]:
    return a[0] * x + a[1] * y + a[2], a[3] * x + a[4] * y + a[5]


def _quarter_law(v: float) -> float:
    """Coordinate recovered by the quarter-shift decoder from an exact
    single-peak map centered at ``v``."""
    fl = math.floor(v)
    return fl + 0.25 if v - fl < 0.5 else fl + 0.75


class _RoiContext:
    __slots__ = (
        "s2i", "i2o", "o2s", "inv_s2i", "inv_i2o",
        "w_i", "h_i", "wo", "ho", "ec", "ec_dp",
    )

    def __init__(self, cfg: PipelineConfig, roi: Roi) -> None:
        s2i_t = test_transform(roi, cfg)
        i2o_t = input_to_output(cfg)
        self.s2i = _aff(s2i_t)
        self.i2o = _aff(i2o_t)
        self.o2s = _aff(output_to_source(roi, cfg))
        self.inv_s2i = _aff(invert(s2i_t))
        self.inv_i2o = _aff(invert(i2o_t))
        self.w_i = cfg.input.width_units
        self.h_i = cfg.input.height_units
        self.wo = cfg.output.width_units
        self.ho = cfg.output.height_units
        self.ec = 1.0 / (2.0 * cfg.stride)
        # Residual correction expressed in decode-plane units: the decode
        # plane is the input plane when the output is upsampled first.
        self.ec_dp = self.ec / self.i2o[0] if cfg.rno else self.ec


class _Engine:
    def __init__(self, cfg: PipelineConfig, mode: OracleMode) -> None:
        self.cfg = cfg
        self.mode = mode

    def context(self, roi: Roi) -> _RoiContext:
        return _RoiContext(self.cfg, roi)

    # -- shared front end ---------------------------------------------------

    def run(self, ctx: _RoiContext, gx: float, gy: float):
        """Simulate one trial; returns (pox, poy, psx, psy, kox, koy, deg)."""
        kix, kiy = _ap(ctx.s2i, gx, gy)
        if not (0.0 <= kix <= ctx.w_i and 0.0 <= kiy <= ctx.h_i):
            raise SkipTrial
        kox, koy = _ap(ctx.i2o, kix, kiy)
        if self.mode is OracleMode.ANALYTIC_SHIFT:
            return self._run_analytic(ctx, kix, kiy, kox, koy)
        return self._run_heatmap(ctx, kix, kiy, kox, koy)

    # -- coordinate-level oracle ---------------------------------------------

    def _dec_dp(self, ctx: _RoiContext, x: float, y: float) -> tuple[float, float]:
        if self.cfg.rno:
            x, y = _ap(ctx.inv_i2o, x, y)
        if self.cfg.codec is Codec.CF_BIASED_DECODE:
            return _quarter_law(x), _quarter_law(y)
        return x, y

    def _run_analytic(self, ctx, kix, kiy, kox, koy):
        cfg = self.cfg
        if cfg.flip_test:
            kifx = ctx.w_i - kix
            kofx, kofy = _ap(ctx.i2o, kifx, kiy)
            fbx = ctx.wo - kofx
            fby = kofy
            if cfg.compensation is not Compensation.NONE:
                fbx += 1.0
            if cfg.combine is Combine.AVERAGE_COORDS:
                x1, y1 = self._dec_dp(ctx, kox, koy)
                x2, y2 = self._dec_dp(ctx, fbx, fby)
                x, y = 0.5 * (x1 + x2), 0.5 * (y1 + y2)
            else:
                x, y = self._dec_dp(ctx, 0.5 * (kox + fbx), 0.5 * (koy + fby))
            if cfg.compensation is Compensation.SNOOP_PLUS_EC:
                x -= ctx.ec_dp
        else:
            x, y = self._dec_dp(ctx, kox, koy)
        if cfg.rno:
            pox, poy = _ap(ctx.i2o, x, y)
            psx, psy = _ap(ctx.inv_s2i, x, y)
        else:
            pox, poy = x, y
            psx, psy = _ap(ctx.o2s, x, y)
        return pox, poy, psx, psy, kox, koy, False

    # -- rendered-heatmap oracle ----------------------------------------------

    def _render(self, kx: float, ky: float):
        cfg = self.cfg
        wp, hp = cfg.output.width_px, cfg.output.height_px
        if cfg.codec is Codec.CCRF:
            return _ccrf_arrays(wp, hp, kx, ky, cfg.radius)
        return _gaussian_array(wp, hp, kx, ky, cfg.sigma)

    def _decode_gauss(self, arr: np.ndarray) -> tuple[float, float, bool]:
        codec = self.cfg.codec
        ix, iy = _argmax_xy(arr)
        if codec is Codec.CF:
            dx, dy, deg = _dark_offset(arr, ix, iy)
            return ix + dx, iy + dy, deg
        if codec is Codec.CF_BIASED_DECODE:
            dx, dy = _quarter_offset(arr, ix, iy)
            return ix + dx, iy + dy, False
        return float(ix), float(iy), False

    def _decode_arrays(self, arrs) -> tuple[float, float, bool]:
        if self.cfg.codec is Codec.CCRF:
            c, x_off, y_off = arrs
            if not np.any(c):
                raise NoDetectionError("classification map is identically zero")
            ix, iy = _argmax_xy(c)
            return ix + x_off[iy, ix], iy + y_off[iy, ix], False
        return self._decode_gauss(arrs)

    @staticmethod
    def _shift_right(arr: np.ndarray) -> np.ndarray:
        out = np.zeros_like(arr)
        out[:, 1:] = arr[:, :-1]
        return out

    def _flip_back_arrays(self, arrs):
        if self.cfg.codec is Codec.CCRF:
            c, x_off, y_off = arrs
            return c[:, ::-1], -x_off[:, ::-1], y_off[:, ::-1]
        return arrs[:, ::-1]

    def _snoop_arrays(self, arrs):
        if self.cfg.codec is Codec.CCRF:
            return tuple(self._shift_right(a) for a in arrs)
        return self._shift_right(arrs)

    def _average_arrays(self, a, b):
        if self.cfg.codec is Codec.CCRF:
            return tuple(0.5 * (x + y) for x, y in zip(a, b))
        return 0.5 * (a + b)

    def _finish_heatmap(self, ctx, arrs, kox, koy, apply_ec: bool):
        cfg = self.cfg
        if cfg.rno:
            grid = ImageGrid(cfg.output, arrs)
            up = rno_upsample(grid, cfg).data[:, :, 0]
            x, y, deg = self._decode_gauss(up)
            if apply_ec:
                x -= ctx.ec_dp
            pox, poy = _ap(ctx.i2o, x, y)
            psx, psy = _ap(ctx.inv_s2i, x, y)
        else:
            x, y, deg = self._decode_arrays(arrs)
            if apply_ec:
                x -= ctx.ec
            pox, poy = x, y
            psx, psy = _ap(ctx.o2s, x, y)
        return pox, poy, psx, psy, kox, koy, deg

    def _run_heatmap(self, ctx, kix, kiy, kox, koy):
        cfg = self.cfg
        if not (0.0 <= kox <= ctx.wo and 0.0 <= koy <= ctx.ho):
            raise SkipTrial
        arrs = self._render(kox, koy)
        apply_ec = cfg.compensation is Compensation.SNOOP_PLUS_EC
        if not cfg.flip_test:
            return self._finish_heatmap(ctx, arrs, kox, koy, apply_ec=False)

        kifx = ctx.w_i - kix
        kofx, kofy = _ap(ctx.i2o, kifx, kiy)
        if not (0.0 <= kofx <= ctx.wo and 0.0 <= kofy <= ctx.ho):
            raise SkipTrial
        arrs_f = self._render(kofx, kofy)

        if cfg.combine is Combine.AVERAGE_COORDS:
            x1, y1, deg1 = self._decode_arrays(arrs)
            x2, y2, deg2 = self._decode_arrays(arrs_f)
            fbx = ctx.wo - x2
            if cfg.compensation is not Compensation.NONE:
                fbx += 1.0
            x = 0.5 * (x1 + fbx)
            y = 0.5 * (y1 + y2)
            if apply_ec:
                x -= ctx.ec
            psx, psy = _ap(ctx.o2s, x, y)
            return x, y, psx, psy, kox, koy, (deg1 or deg2)

        back = self._flip_back_arrays(arrs_f)
        if cfg.compensation is not Compensation.NONE:
            back = self._snoop_arrays(back)
        avg = self._average_arrays(arrs, back)
        return self._finish_heatmap(ctx, avg, kox, koy, apply_ec=apply_ec)


# ---------------------------------------------------------------------------
# Public oracle and single-trial entry points
# ---------------------------------------------------------------------------


def ideal_network(k_i: Point, cfg: PipelineConfig, mode: OracleMode = OracleMode.FULL_HEATMAP):
    """What a zero-loss network returns for an input-plane keypoint.

    ``ANALYTIC_SHIFT`` returns the output-plane keypoint itself;
    ``FULL_HEATMAP`` returns it rendered through the configured encoder.
    Raises :class:`SkipTrial` when the keypoint leaves the simulated planes.
    """
    if not (0.0 <= k_i.x <= cfg.input.width_units and 0.0 <= k_i.y <= cfg.input.height_units):
        raise SkipTrial
    k_o = apply_point(input_to_output(cfg), k_i)
    if mode is OracleMode.ANALYTIC_SHIFT:
        return k_o
    if not (0.0 <= k_o.x <= cfg.output.width_units and 0.0 <= k_o.y <= cfg.output.height_units):
        raise SkipTrial
    if cfg.codec is Codec.CCRF:
        from .codec import encode_ccrf

        return encode_ccrf(k_o, cfg.output, cfg.radius)
    from .codec import encode_gaussian

    return encode_gaussian(k_o, cfg.output, cfg.sigma)


def run_trial(gt_source: Point, roi: Roi, cfg: PipelineConfig, mode: OracleMode) -> TrialRecord:
    """Simulate one full test pass for one ground-truth keypoint.

    Raises :class:`SkipTrial` if the keypoint leaves the simulated planes
    and :class:`~keypose.codec.NoDetectionError` on decode failure.
    """
    engine = _Engine(cfg, mode)
    ctx = engine.context(roi)
    pox, poy, psx, psy, _, _, _ = engine.run(ctx, gt_source.x, gt_source.y)
    return TrialRecord(
        gt_source=gt_source,
        pred_source=Point(psx, psy),
        pred_output=Point(pox, poy),
        config=cfg,
    )


# ---------------------------------------------------------------------------
# Monte Carlo harness
# ---------------------------------------------------------------------------

_CHUNK = 4096


class _Kahan:
    __slots__ = ("total", "_c")

    def __init__(self) -> None:
        self.total = 0.0
        self._c = 0.0

    def add(self, x: float) -> None:
        y = x - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


class _Partial:
    __slots__ = ("n", "ax", "ax2", "ay", "ay2", "asx", "skipped", "failed", "degenerate")

    def __init__(self) -> None:
        self.n = 0
        self.ax = _Kahan()
        self.ax2 = _Kahan()
        self.ay = _Kahan()
        self.ay2 = _Kahan()
        self.asx = _Kahan()
        self.skipped = 0
        self.failed = 0
        self.degenerate = 0

    def sums(self):
        return (
            self.n,
            self.ax.total, self.ax2.total, self.ay.total, self.ay2.total, self.asx.total,
            self.skipped, self.failed, self.degenerate,
        )


def _run_chunk(cfg, mode, sampler, seed, start, stop, engine=None, bound=None, ctx=None):
    if engine is None:
        engine = _Engine(cfg, mode)
    if bound is None:
        bound = sampler.bind(cfg)
        if bound.fixed_roi is not None:
            ctx = engine.context(bound.fixed_roi)
    part = _Partial()
    for i in range(start, stop):
        rng = substream(seed, i)
        roi, gx, gy = bound.draw(rng)
        trial_ctx = ctx if ctx is not None else engine.context(roi)
        try:
            pox, poy, psx, _, kox, koy, deg = engine.run(trial_ctx, gx, gy)
        except SkipTrial:
            part.skipped += 1
            continue
        except NoDetectionError:
            part.failed += 1
            continue
        ex = abs(pox - kox)
        ey = abs(poy - koy)
        part.n += 1
        part.ax.add(ex)
        part.ax2.add(ex * ex)
        part.ay.add(ey)
        part.ay2.add(ey * ey)
        part.asx.add(abs(psx - gx))
        if deg:
            part.degenerate += 1
    return part.sums()


def _run_chunk_args(args):
    return _run_chunk(*args)


def monte_carlo(
    cfg: PipelineConfig,
    mode: OracleMode,
    n: int,
    seed: int,
    sampler=None,
    *,
    label: str | None = None,
    jobs: int = 1,
) -> ErrorStats:
    """Aggregate ``n`` simulated trials into :class:`ErrorStats`.

    Reproducible: the result depends only on the arguments.  Trials derive
    their randomness from ``(seed, trial index)`` and partial sums are
    merged per fixed-size chunk in index order, so any ``jobs`` value
    produces the identical result.
    """
    if n < 1:
        raise ValueError(f"need at least one trial, got n={n}")
    if sampler is None:
        sampler = UniformKeypointSampler(default_roi(cfg))

    spans = [(start, min(start + _CHUNK, n)) for start in range(0, n, _CHUNK)]
    if jobs > 1 and len(spans) > 1:
        import multiprocessing

        arglist = [(cfg, mode, sampler, seed, a, b) for a, b in spans]
        with multiprocessing.Pool(processes=min(jobs, len(spans))) as pool:
            partials = pool.map(_run_chunk_args, arglist)
    else:
        engine = _Engine(cfg, mode)
        bound = sampler.bind(cfg)
        ctx = engine.context(bound.fixed_roi) if bound.fixed_roi is not None else None
        partials = [
            _run_chunk(cfg, mode, sampler, seed, a, b, engine=engine, bound=bound, ctx=ctx)
            for a, b in spans
        ]

    used = 0
    skipped = failed = degenerate = 0
    totals = [_Kahan() for _ in range(5)]
    for part in partials:
        pn, sax, sax2, say, say2, sasx, psk, pfl, pdg = part
        used += pn
        skipped += psk
        failed += pfl
        degenerate += pdg
        for acc, value in zip(totals, (sax, sax2, say, say2, sasx)):
            acc.add(value)
    if used == 0:
        raise RuntimeError("every trial was skipped or failed; nothing to aggregate")

    sax, sax2, say, say2, sasx = (acc.total for acc in totals)
    mean_x = sax / used
    mean_y = say / used
    if used > 1:
        var_x = max(0.0, (sax2 - used * mean_x * mean_x) / (used - 1))
        var_y = max(0.0, (say2 - used * mean_y * mean_y) / (used - 1))
    else:
        var_x = var_y = 0.0
    return ErrorStats(
        label=label if label is not None else describe_config(cfg),
        n_trials=used,
        mean_abs_x=mean_x,
        mean_abs_y=mean_y,
        var_abs_x=var_x,
        var_abs_y=var_y,
        mean_abs_x_source=sasx / used,
        n_skipped=skipped,
        n_decode_failed=failed,
        n_degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# Closed-form expectations
# ---------------------------------------------------------------------------


def _quarter_stats(shift: float) -> tuple[float, float]:
    """Mean and variance of |error| for the quarter-shift decoder applied to
    a single-peak map whose center is offset by ``shift`` (|shift| <= 0.5)
    from a uniformly positioned keypoint."""
    t = abs(shift)
    b1, b2 = 0.5 - t, 1.0 - t

    def seg(lo: float, hi: float, a: float) -> tuple[float, float]:
        def f_abs(u: float) -> float:
            return (u - a) * abs(u - a) / 2.0

        def f_sq(u: float) -> float:
            return (u - a) ** 3 / 3.0

        return f_abs(hi) - f_abs(lo), f_sq(hi) - f_sq(lo)

    e1, q1 = seg(0.0, b1, 0.25)
    e2, q2 = seg(b1, b2, 0.75)
    e3, q3 = seg(b2, 1.0, 1.25)
    mean = e1 + e2 + e3
    var = (q1 + q2 + q3) - mean * mean
    return mean, var


def analytic_errors(cfg: PipelineConfig, roi: Roi | None = None) -> dict:
    """Closed-form expected |x error| for configurations with known analysis.

    Returns a dict with ``mean_abs_x``, ``var_abs_x`` and
    ``mean_abs_x_source``; entries are ``None`` when the configuration falls
    outside the analyzed cases (and the source entry also when no ``roi``
    supplies a crop width).
    """
    na = {"mean_abs_x": None, "var_abs_x": None, "mean_abs_x_source": None}
    if cfg.rno:
        return dict(na)

    shift = 0.0
    if cfg.flip_test and cfg.convention is Convention.PIXEL_COUNT:
        s = cfg.stride
        if cfg.compensation is Compensation.NONE:
            shift = (1.0 - s) / (2.0 * s)
        elif cfg.compensation is Compensation.SNOOP:
            shift = 1.0 / (2.0 * s)
        else:
            shift = 0.0

    if cfg.codec is Codec.CF_BIASED_DECODE:
        if cfg.flip_test and cfg.combine is not Combine.AVERAGE_HEATMAPS:
            return dict(na)
        if abs(shift) > 0.5:
            return dict(na)
        mean, var = _quarter_stats(shift)
    else:
        mean, var = abs(shift), 0.0

    out_w = (
        cfg.output.width_units
        if cfg.convention is Convention.UNIT_LENGTH
        else float(cfg.output.width_px)
    )
    mean_source = mean * roi.w / out_w if roi is not None else None
    return {"mean_abs_x": mean, "var_abs_x": var, "mean_abs_x_source": mean_source}
