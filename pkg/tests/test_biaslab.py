import numpy as np
import pytest

from keypose.biaslab import (
    CocoKeypointSampler,
    ErrorStats,
    OracleMode,
    SkipTrial,
    SplitMix64,
    UniformKeypointSampler,
    analytic_errors,
    default_roi,
    ideal_network,
    monte_carlo,
    run_trial,
    substream,
)
from keypose.codec import CcrfTarget, GaussianTarget
from keypose.dataio import Instance
from keypose.geometry import PlaneSize, Point, Roi
from keypose.pipeline import Codec, Combine, Compensation, Convention, PipelineConfig

IN_SIZE = PlaneSize(192, 256)
OUT_SIZE = PlaneSize(48, 64)


def make_cfg(convention=Convention.UNIT_LENGTH, **kwargs) -> PipelineConfig:
    return PipelineConfig(convention=convention, input=IN_SIZE, output=OUT_SIZE, **kwargs)


def quarter_error_oracle(shift: float, n: int = 400_000) -> tuple[float, float]:
    """Numeric-quadrature oracle for the quarter-shift decoder error when the
    decoded map's center is offset by ``shift`` from the keypoint."""
    u = (np.arange(n) + 0.5) / n
    center = u + shift
    frac = center - np.floor(center)
    decoded = np.where(frac < 0.5, np.floor(center) + 0.25, np.floor(center) + 0.75)
    err = np.abs(decoded - u)
    return float(np.mean(err)), float(np.mean(err**2) - np.mean(err) ** 2)


class TestSplitMix:
    def test_deterministic_sequence(self):
        a = SplitMix64(123)
        b = SplitMix64(123)
        assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]

    def test_uniform_in_unit_interval(self):
        rng = SplitMix64(7)
        values = [rng.uniform() for _ in range(10_000)]
        assert all(0.0 <= v < 1.0 for v in values)
        assert abs(np.mean(values) - 0.5) < 0.02

    def test_substreams_differ_and_are_reproducible(self):
        s0 = substream(42, 0).uniform()
        s1 = substream(42, 1).uniform()
        assert s0 != s1
        assert substream(42, 0).uniform() == s0


class TestIdealNetwork:
    def test_analytic_returns_output_point(self):
        cfg = make_cfg()
        k_i = Point(95.5, 127.5)
        k_o = ideal_network(k_i, cfg, OracleMode.ANALYTIC_SHIFT)
        assert k_o.x == pytest.approx(95.5 * 47.0 / 191.0, abs=1e-12)

    def test_heatmap_renders_configured_codec(self):
        cfg = make_cfg(codec=Codec.CCRF)
        assert isinstance(ideal_network(Point(95.5, 127.5), cfg), CcrfTarget)
        cfg = make_cfg(codec=Codec.CF)
        assert isinstance(ideal_network(Point(95.5, 127.5), cfg), GaussianTarget)

    def test_out_of_plane_signals_skip(self):
        cfg = make_cfg()
        with pytest.raises(SkipTrial):
            ideal_network(Point(-1.0, 5.0), cfg, OracleMode.ANALYTIC_SHIFT)


class TestRunTrial:
    def test_record_round_trips_exactly_when_unbiased(self):
        cfg = make_cfg(codec=Codec.CCRF, flip_test=True)
        roi = default_roi(cfg)
        gt = Point(roi.cx + 3.7, roi.cy - 5.1)
        rec = run_trial(gt, roi, cfg, OracleMode.FULL_HEATMAP)
        assert rec.pred_source.x == pytest.approx(gt.x, abs=1e-9)
        assert rec.pred_source.y == pytest.approx(gt.y, abs=1e-9)
        assert rec.config == cfg

    def test_gt_outside_roi_skips(self):
        cfg = make_cfg()
        roi = default_roi(cfg)
        with pytest.raises(SkipTrial):
            run_trial(Point(roi.cx + roi.w, roi.cy), roi, cfg, OracleMode.ANALYTIC_SHIFT)


class TestDeterminism:
    def test_same_arguments_same_stats(self):
        cfg = make_cfg(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            compensation=Compensation.SNOOP,
            codec=Codec.CF_BIASED_DECODE,
        )
        a = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 5000, 9)
        b = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 5000, 9)
        assert a == b

    def test_worker_count_does_not_change_results(self):
        cfg = make_cfg(flip_test=True, codec=Codec.CF)
        one = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 9000, 11, jobs=1)
        three = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 9000, 11, jobs=3)
        assert one == three

    def test_different_seed_changes_draws(self):
        cfg = make_cfg(codec=Codec.CF_BIASED_DECODE)
        a = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 2000, 1)
        b = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 2000, 2)
        assert a.mean_abs_x != b.mean_abs_x


class TestUnbiasedConfigurations:
    @pytest.mark.parametrize("mode", [OracleMode.ANALYTIC_SHIFT, OracleMode.FULL_HEATMAP])
    def test_unit_ccrf_flip_recovers_exactly(self, mode):
        cfg = make_cfg(codec=Codec.CCRF, flip_test=True)
        n = 3000 if mode is OracleMode.ANALYTIC_SHIFT else 800
        stats = monte_carlo(cfg, mode, n, 17)
        assert stats.mean_abs_x < 1e-9
        assert stats.mean_abs_y < 1e-9
        assert stats.mean_abs_x_source < 1e-9
        assert stats.n_skipped == 0
        assert stats.n_decode_failed == 0

    def test_pixel_count_without_flip_is_still_unbiased(self):
        cfg = make_cfg(convention=Convention.PIXEL_COUNT, codec=Codec.CCRF)
        stats = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 500, 19)
        assert stats.mean_abs_x < 1e-9

    @pytest.mark.parametrize(
        "comp,expected",
        [
            (Compensation.NONE, 0.375),
            (Compensation.SNOOP, 0.125),
            (Compensation.SNOOP_PLUS_EC, 0.0),
        ],
    )
    def test_ccrf_heatmap_averaging_matches_coordinate_algebra(self, comp, expected):
        # Averaged disc maps decode to the midpoint of the branch keypoints
        # wherever the discs overlap, so the non-default combine reproduces
        # the coordinate-level error exactly.
        cfg = make_cfg(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            compensation=comp,
            codec=Codec.CCRF,
            combine=Combine.AVERAGE_HEATMAPS,
        )
        stats = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 400, 77)
        assert stats.mean_abs_x == pytest.approx(expected, abs=1e-9)


class TestBiasedConfigurations:
    def test_flip_without_compensation_pixel_count(self):
        cfg = make_cfg(
            convention=Convention.PIXEL_COUNT, flip_test=True, codec=Codec.ARGMAX_ONLY
        )
        stats = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 4000, 23)
        assert stats.mean_abs_x == pytest.approx(0.375, abs=1e-9)
        assert stats.var_abs_x == pytest.approx(0.0, abs=1e-18)

    def test_snoop_residual_and_extra_compensation(self):
        base = dict(
            convention=Convention.PIXEL_COUNT, flip_test=True, codec=Codec.ARGMAX_ONLY
        )
        snoop = monte_carlo(
            make_cfg(compensation=Compensation.SNOOP, **base),
            OracleMode.ANALYTIC_SHIFT, 4000, 29,
        )
        assert snoop.mean_abs_x == pytest.approx(0.125, abs=1e-9)
        ec = monte_carlo(
            make_cfg(compensation=Compensation.SNOOP_PLUS_EC, **base),
            OracleMode.ANALYTIC_SHIFT, 4000, 29,
        )
        assert ec.mean_abs_x < 1e-9

    def test_quarter_decode_statistics_against_quadrature_oracle(self):
        mean_o, var_o = quarter_error_oracle(0.0)
        assert mean_o == pytest.approx(1.0 / 8.0, abs=1e-6)
        assert var_o == pytest.approx(1.0 / 192.0, abs=1e-6)
        cfg = make_cfg(codec=Codec.CF_BIASED_DECODE)
        stats = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 30_000, 31)
        assert stats.mean_abs_x == pytest.approx(mean_o, abs=0.005)
        assert stats.var_abs_x == pytest.approx(var_o, abs=0.001)

    def test_joint_with_snoop_matches_closed_form(self):
        cfg = make_cfg(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            compensation=Compensation.SNOOP,
            codec=Codec.CF_BIASED_DECODE,
        )
        mean_o, var_o = quarter_error_oracle(1.0 / 8.0)
        assert mean_o == pytest.approx(5.0 / 32.0, abs=1e-6)
        assert var_o == pytest.approx(37.0 / 3072.0, abs=1e-6)
        stats = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 100_000, 37)
        assert stats.mean_abs_x == pytest.approx(5.0 / 32.0, abs=1e-3)
        assert stats.var_abs_x == pytest.approx(37.0 / 3072.0, abs=1e-3)

    def test_joint_without_snoop_matches_closed_form(self):
        cfg = make_cfg(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            codec=Codec.CF_BIASED_DECODE,
        )
        mean_o, var_o = quarter_error_oracle(-3.0 / 8.0)
        assert mean_o == pytest.approx(3.0 / 8.0, abs=1e-6)
        assert var_o == pytest.approx(1.0 / 48.0, abs=1e-6)
        stats = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 100_000, 41)
        assert stats.mean_abs_x == pytest.approx(3.0 / 8.0, abs=1e-3)
        assert stats.var_abs_x == pytest.approx(1.0 / 48.0, abs=1e-3)

    def test_analytic_and_heatmap_modes_agree_for_quarter_decode(self):
        cfg = make_cfg(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            compensation=Compensation.SNOOP,
            codec=Codec.CF_BIASED_DECODE,
        )
        analytic = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 20_000, 43)
        heatmap = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 20_000, 43)
        assert abs(analytic.mean_abs_x - heatmap.mean_abs_x) < 0.02

    def test_resolution_doubling_halves_source_error(self):
        roi = Roi(128.0, 128.0, 96.0, 128.0)
        base = dict(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            compensation=Compensation.SNOOP,
            codec=Codec.CF,
        )
        lo = PipelineConfig(input=PlaneSize(192, 256), output=PlaneSize(48, 64), **base)
        hi = PipelineConfig(input=PlaneSize(384, 512), output=PlaneSize(96, 128), **base)
        s_lo = monte_carlo(lo, OracleMode.ANALYTIC_SHIFT, 4000, 47, UniformKeypointSampler(roi))
        s_hi = monte_carlo(hi, OracleMode.ANALYTIC_SHIFT, 4000, 47, UniformKeypointSampler(roi))
        assert s_lo.mean_abs_x_source == pytest.approx(roi.w / (2.0 * 192.0), abs=1e-9)
        assert s_lo.mean_abs_x_source / s_hi.mean_abs_x_source == pytest.approx(2.0, abs=1e-9)


class TestAnalyticErrorTable:
    def test_identity_codec_rows(self):
        roi = Roi(100.0, 100.0, 96.0, 128.0)
        cfg = make_cfg(convention=Convention.PIXEL_COUNT, flip_test=True, codec=Codec.CF)
        table = analytic_errors(cfg, roi)
        assert table["mean_abs_x"] == pytest.approx(0.375)
        assert table["var_abs_x"] == 0.0
        assert table["mean_abs_x_source"] == pytest.approx(0.375 * 96.0 / 48.0)

        snoop = make_cfg(
            convention=Convention.PIXEL_COUNT,
            flip_test=True,
            compensation=Compensation.SNOOP,
            codec=Codec.CF,
        )
        table = analytic_errors(snoop, roi)
        assert table["mean_abs_x"] == pytest.approx(0.125)
        assert table["mean_abs_x_source"] == pytest.approx(96.0 / (2.0 * 192.0))

    def test_quarter_decode_rows_match_constants(self):
        plain = analytic_errors(make_cfg(codec=Codec.CF_BIASED_DECODE))
        assert plain["mean_abs_x"] == pytest.approx(1.0 / 8.0)
        assert plain["var_abs_x"] == pytest.approx(1.0 / 192.0)

        snoop = analytic_errors(
            make_cfg(
                convention=Convention.PIXEL_COUNT,
                flip_test=True,
                compensation=Compensation.SNOOP,
                codec=Codec.CF_BIASED_DECODE,
            )
        )
        assert snoop["mean_abs_x"] == pytest.approx(5.0 / 32.0)
        assert snoop["var_abs_x"] == pytest.approx(37.0 / 3072.0)

        none = analytic_errors(
            make_cfg(
                convention=Convention.PIXEL_COUNT,
                flip_test=True,
                codec=Codec.CF_BIASED_DECODE,
            )
        )
        assert none["mean_abs_x"] == pytest.approx(3.0 / 8.0)
        assert none["var_abs_x"] == pytest.approx(1.0 / 48.0)

    def test_unanalyzed_configurations_marked_unavailable(self):
        rno = analytic_errors(make_cfg(codec=Codec.CF, rno=True))
        assert rno["mean_abs_x"] is None
        coords = analytic_errors(
            make_cfg(
                convention=Convention.PIXEL_COUNT,
                flip_test=True,
                codec=Codec.CF_BIASED_DECODE,
                combine=Combine.AVERAGE_COORDS,
            )
        )
        assert coords["mean_abs_x"] is None


class TestFailureAccounting:
    def test_tiny_disc_radius_counts_decode_failures(self):
        # A disc smaller than the node spacing misses every node for most
        # sub-pixel keypoints; those trials must be excluded and counted.
        cfg = make_cfg(codec=Codec.CCRF, radius=0.3)
        sampler = UniformKeypointSampler(default_roi(cfg), margin=2.0)
        stats = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 400, 53, sampler)
        assert stats.n_decode_failed > 0
        assert stats.n_trials + stats.n_decode_failed + stats.n_skipped == 400
        assert stats.mean_abs_x < 1e-9  # surviving trials decode exactly

    def test_default_sampler_produces_no_failures(self):
        for codec in (Codec.CCRF, Codec.CF, Codec.CF_BIASED_DECODE):
            cfg = make_cfg(codec=codec, flip_test=True)
            stats = monte_carlo(cfg, OracleMode.FULL_HEATMAP, 300, 59)
            assert stats.n_skipped == 0
            assert stats.n_decode_failed == 0

    def test_rno_degrades_dark_decode(self):
        # Bilinear upsampling bends the map's value distribution, so the
        # curvature-based refinement loses its exactness.
        plain = monte_carlo(make_cfg(codec=Codec.CF), OracleMode.FULL_HEATMAP, 100, 61)
        upsampled = monte_carlo(
            make_cfg(codec=Codec.CF, rno=True), OracleMode.FULL_HEATMAP, 100, 61
        )
        assert plain.mean_abs_x < 1e-6
        assert upsampled.mean_abs_x > 0.05


class TestCocoSampler:
    def test_draws_visible_keypoints_from_instances(self):
        image = PlaneSize(640, 480)
        instances = (
            Instance(
                image_size=image,
                bbox=(100.0, 80.0, 120.0, 160.0),
                keypoints=(
                    (Point(160.0, 160.0), 2),
                    (Point(130.0, 200.0), 1),
                    (Point(0.0, 0.0), 0),
                ),
            ),
        )
        cfg = make_cfg(codec=Codec.CCRF)
        sampler = CocoKeypointSampler(instances=instances, padding=1.25)
        stats = monte_carlo(cfg, OracleMode.ANALYTIC_SHIFT, 500, 67, sampler)
        assert stats.n_trials + stats.n_skipped == 500
        assert stats.mean_abs_x < 1e-9

    def test_no_visible_keypoints_rejected(self):
        inst = Instance(
            image_size=PlaneSize(64, 64),
            bbox=(10.0, 10.0, 20.0, 20.0),
            keypoints=((Point(15.0, 15.0), 0),),
        )
        cfg = make_cfg()
        with pytest.raises(ValueError):
            CocoKeypointSampler(instances=(inst,)).bind(cfg)


class TestErrorStats:
    def test_requires_positive_trials(self):
        with pytest.raises(ValueError):
            ErrorStats(
                label="x", n_trials=0, mean_abs_x=0.0, mean_abs_y=0.0,
                var_abs_x=0.0, var_abs_y=0.0, mean_abs_x_source=0.0,
                n_skipped=0, n_decode_failed=0, n_degenerate=0,
            )
