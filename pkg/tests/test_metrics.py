import math

import numpy as np
import pytest

from gloria import (
    HSImage,
    MetricsReport,
    ergas,
    evaluate,
    psnr,
    sam,
    sam_map_to_pgm,
    uiqi,
)


def loop_psnr(ref, est, peak_mode):
    vals = []
    for m in range(ref.shape[0]):
        pk = ref[m].max() if peak_mode == "reference" else 1.0
        mse = np.mean((ref[m] - est[m]) ** 2)
        vals.append(10 * math.log10(pk * pk / mse))
    return float(np.mean(vals)), vals


def loop_sam(ref, est):
    angles = []
    for j in range(ref.shape[1]):
        a, b = ref[:, j], est[:, j]
        c = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        angles.append(math.degrees(math.acos(max(-1.0, min(1.0, c)))))
    return float(np.mean(angles)), angles


def loop_ergas(ref, est, ratio):
    acc = 0.0
    for m in range(ref.shape[0]):
        rmse = math.sqrt(np.mean((ref[m] - est[m]) ** 2))
        acc += (rmse / ref[m].mean()) ** 2
    return 100.0 / ratio * math.sqrt(acc / ref.shape[0])


def loop_uiqi(ref, est):
    vals = []
    for m in range(ref.shape[0]):
        x, y = ref[m], est[m]
        cov = np.mean((x - x.mean()) * (y - y.mean()))
        vals.append(
            4 * cov * x.mean() * y.mean()
            / ((x.var() + y.var()) * (x.mean() ** 2 + y.mean() ** 2))
        )
    return float(np.mean(vals))


def random_pair(seed, bands=7, pixels=50):
    rng = np.random.default_rng(seed)
    ref = rng.uniform(0.05, 1.0, size=(bands, pixels))
    est = np.clip(ref + 0.05 * rng.standard_normal(ref.shape), 0.0, 1.0)
    return ref, est


class TestPsnr:
    @pytest.mark.parametrize("peak", ["reference", "one"])
    def test_matches_loop_oracle(self, peak):
        ref, est = random_pair(0)
        mean_db, band_db = psnr(ref, est, peak=peak)
        want_mean, want_bands = loop_psnr(ref, est, peak)
        assert mean_db == pytest.approx(want_mean, rel=1e-12)
        assert np.allclose(band_db, want_bands, rtol=1e-12)

    def test_identical_hits_cap(self):
        ref, _ = random_pair(1)
        mean_db, band_db = psnr(ref, ref.copy())
        assert mean_db == 300.0
        assert np.all(band_db == 300.0)

    def test_accepts_images(self):
        ref, est = random_pair(2, bands=3, pixels=12)
        a = psnr(HSImage(ref, 4, 3), HSImage(est, 4, 3))[0]
        b = psnr(ref, est)[0]
        assert a == b

    def test_non_positive_peak_raises(self):
        ref = np.zeros((2, 8))
        est = np.full((2, 8), 0.1)
        with pytest.raises(ValueError):
            psnr(ref, est, peak="reference")
        # but a perfect match short-circuits before the peak check
        mean_db, _ = psnr(ref, ref.copy(), peak="reference")
        assert mean_db == 300.0

    def test_bad_peak_mode(self):
        ref, est = random_pair(3)
        with pytest.raises(ValueError):
            psnr(ref, est, peak="max")

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            psnr(np.ones((2, 4)), np.ones((2, 5)))


class TestSam:
    def test_matches_loop_oracle(self):
        ref, est = random_pair(4)
        mean_deg, angles, n_bad = sam(ref, est)
        want_mean, want_angles = loop_sam(ref, est)
        assert n_bad == 0
        assert mean_deg == pytest.approx(want_mean, rel=1e-10)
        assert np.allclose(angles, want_angles, rtol=1e-10)

    def test_identical_is_zero(self):
        ref, _ = random_pair(5)
        mean_deg, angles, _ = sam(ref, ref.copy())
        assert mean_deg == pytest.approx(0.0, abs=1e-5)
        assert np.all(angles < 1e-5)

    def test_known_angle(self):
        ref = np.array([[1.0], [0.0]])
        est = np.array([[1.0], [1.0]])
        mean_deg, _, _ = sam(ref, est)
        assert mean_deg == pytest.approx(45.0, rel=1e-12)

    def test_degenerate_pixel_counting(self):
        ref = np.array([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
        est = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
        mean_inc, angles, n_bad = sam(ref, est)
        assert n_bad == 1
        assert angles[1] == 0.0
        assert mean_inc == pytest.approx((45.0 + 0.0 + 90.0) / 3, rel=1e-12)
        mean_exc, _, n_bad2 = sam(ref, est, exclude_degenerate=True)
        assert n_bad2 == 1
        assert mean_exc == pytest.approx((45.0 + 90.0) / 2, rel=1e-12)

    def test_all_degenerate_excluded_mean_zero(self):
        z = np.zeros((3, 4))
        mean_deg, angles, n_bad = sam(z, z, exclude_degenerate=True)
        assert (mean_deg, n_bad) == (0.0, 4)
        assert np.all(angles == 0.0)

    def test_opposite_vectors(self):
        ref = np.array([[1.0], [0.5]])
        mean_deg, _, _ = sam(ref, -ref)
        assert mean_deg == pytest.approx(180.0, abs=1e-5)


class TestErgas:
    def test_matches_loop_oracle(self):
        ref, est = random_pair(6)
        assert ergas(ref, est, 4) == pytest.approx(loop_ergas(ref, est, 4), rel=1e-12)

    def test_identical_is_zero(self):
        ref, _ = random_pair(7)
        assert ergas(ref, ref.copy(), 4) == 0.0

    def test_scales_inversely_with_ratio(self):
        ref, est = random_pair(8)
        assert ergas(ref, est, 2) == pytest.approx(2 * ergas(ref, est, 4), rel=1e-12)

    def test_zero_mean_band_raises(self):
        ref = np.vstack([np.ones(6), [-1.0, 1.0, -0.5, 0.5, -2.0, 2.0]])
        est = np.ones((2, 6))
        assert ref[1].mean() == 0.0
        with pytest.raises(ValueError):
            ergas(ref, est, 4)

    def test_bad_ratio(self):
        ref, est = random_pair(9)
        with pytest.raises(ValueError):
            ergas(ref, est, 0)


class TestUiqi:
    def test_matches_loop_oracle(self):
        ref, est = random_pair(10)
        assert uiqi(ref, est) == pytest.approx(loop_uiqi(ref, est), rel=1e-10)

    def test_identical_is_one(self):
        ref, _ = random_pair(11)
        assert uiqi(ref, ref.copy()) == pytest.approx(1.0, rel=1e-12)

    def test_antisymmetric_band_is_minus_one(self):
        # Exactly-zero-mean band against its negation: the luminance
        # factor drops out and pure anticorrelation scores -1.
        x = np.array([[-2.0, -1.0, 0.0, 1.0, 2.0]])
        assert x.mean() == 0.0
        assert uiqi(x, -x) == pytest.approx(-1.0, rel=1e-12)

    def test_constant_bands_use_luminance_only(self):
        a = np.full((1, 9), 0.5)
        b = np.full((1, 9), 0.25)
        want = 2 * 0.5 * 0.25 / (0.5**2 + 0.25**2)
        assert uiqi(a, b) == pytest.approx(want, rel=1e-12)

    def test_both_zero_scores_zero(self):
        z = np.zeros((2, 6))
        assert uiqi(z, z) == 0.0

    def test_bounded_by_one(self):
        for seed in range(20):
            ref, est = random_pair(seed, bands=3, pixels=30)
            assert abs(uiqi(ref, est)) <= 1.0 + 1e-12


class TestEvaluate:
    def test_bundles_everything(self):
        ref, est = random_pair(12, bands=5, pixels=36)
        report = evaluate(HSImage(ref, 6, 6), HSImage(est, 6, 6), ratio=3)
        assert report.psnr_db == psnr(ref, est)[0]
        assert report.sam_deg == sam(ref, est)[0]
        assert report.ergas == ergas(ref, est, 3)
        assert report.uiqi == uiqi(ref, est)
        assert len(report.per_band_psnr) == 5
        assert report.sam_degenerate_pixels == 0
        assert report.sam_map.shape == (36,)

    def test_to_dict_omits_map_and_serialises(self):
        ref, est = random_pair(13)
        report = evaluate(ref, est)
        doc = report.to_dict()
        assert "sam_map" not in doc
        assert set(doc) == {
            "psnr_db",
            "sam_deg",
            "ergas",
            "uiqi",
            "per_band_psnr",
            "sam_degenerate_pixels",
        }
        text = report.to_json()
        assert text.startswith("{")
        assert '"ergas"' in text

    def test_report_is_plain_dataclass(self):
        report = MetricsReport(1.0, 2.0, 3.0, 4.0, [1.0], 0)
        assert report.sam_map is None


class TestSamMapPgm:
    def test_byte_oracle(self, tmp_path):
        angles = np.array([0.0, 15.0, 30.0, 45.0])
        path = tmp_path / "map.pgm"
        sam_map_to_pgm(angles, 2, 2, path, cap_deg=30.0)
        raw = path.read_bytes()
        assert raw == b"P5\n2 2\n255\n" + bytes([0, 128, 255, 255])

    def test_rounding(self, tmp_path):
        path = tmp_path / "map.pgm"
        sam_map_to_pgm([29.9], 1, 1, path, cap_deg=30.0)
        body = path.read_bytes().split(b"255\n", 1)[1]
        assert body == bytes([254])

    def test_size_and_cap_validation(self, tmp_path):
        with pytest.raises(ValueError):
            sam_map_to_pgm([1.0, 2.0], 3, 1, tmp_path / "x.pgm")
        with pytest.raises(ValueError):
            sam_map_to_pgm([1.0], 1, 1, tmp_path / "x.pgm", cap_deg=0.0)
