import numpy as np
import pytest
import scipy.sparse as sp

from gloria import ConvergenceError
from gloria.linalg import (
    lambda_max,
    nuclear_norm,
    right_multiply,
    right_multiply_t,
    spd_power,
    svd,
    sym_eig,
)


def random_spd(rng, n, shift=1e-3):
    a = rng.standard_normal((n, n))
    return a @ a.T + shift * np.eye(n)


class TestSymEig:
    def test_descending_and_reconstructs(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 5, 12):
            a = random_spd(rng, n)
            evals, evecs = sym_eig(a)
            assert np.all(np.diff(evals) <= 1e-12)
            assert np.allclose((evecs * evals) @ evecs.T, a, atol=1e-10)
            assert np.allclose(evecs.T @ evecs, np.eye(n), atol=1e-10)

    def test_rejects_asymmetric(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            sym_eig(a)

    def test_tolerates_roundoff_asymmetry(self):
        rng = np.random.default_rng(1)
        a = random_spd(rng, 6)
        a[0, 1] += 1e-13 * abs(a).max()
        sym_eig(a)


class TestSpdPower:
    def test_matches_eig_oracle(self):
        rng = np.random.default_rng(2)
        a = random_spd(rng, 7)
        evals, evecs = np.linalg.eigh(a)
        for expo in (0.5, -0.75, 2.0, -1.0):
            want = (evecs * evals**expo) @ evecs.T
            assert np.allclose(spd_power(a, expo), want, atol=1e-9)

    def test_zero_exponent_gives_identity(self):
        rng = np.random.default_rng(3)
        a = random_spd(rng, 5)
        assert np.allclose(spd_power(a, 0.0), np.eye(5), atol=1e-12)

    def test_inverse_property(self):
        rng = np.random.default_rng(4)
        a = random_spd(rng, 6)
        assert np.allclose(spd_power(a, 0.5) @ spd_power(a, -0.5), np.eye(6), atol=1e-8)

    def test_singular_raises(self):
        a = np.diag([1.0, 0.0])
        with pytest.raises(np.linalg.LinAlgError):
            spd_power(a, 0.5)
        b = np.diag([1.0, 1e-16])
        with pytest.raises(np.linalg.LinAlgError):
            spd_power(b, -1.0)


class TestLambdaMax:
    def test_matches_eigh_on_random_psd(self):
        rng = np.random.default_rng(5)
        for n in (2, 5, 10, 30):
            for _ in range(5):
                a = random_spd(rng, n, shift=0.0)
                top = np.linalg.eigvalsh(a)[-1]
                assert lambda_max(a) == pytest.approx(top, rel=1e-8)

    def test_identity_and_zero(self):
        assert lambda_max(np.eye(4)) == pytest.approx(1.0, abs=1e-12)
        assert lambda_max(np.zeros((3, 3))) == 0.0

    def test_rayleigh_never_exceeds_estimate(self):
        rng = np.random.default_rng(6)
        a = random_spd(rng, 8, shift=0.0)
        lam = lambda_max(a)
        for _ in range(100):
            v = rng.standard_normal(8)
            v /= np.linalg.norm(v)
            assert v @ a @ v <= lam * (1 + 1e-7)

    def test_warm_start_and_vector(self):
        rng = np.random.default_rng(7)
        a = random_spd(rng, 10, shift=0.0)
        lam1, v = lambda_max(a, return_vector=True)
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)
        assert v @ a @ v == pytest.approx(lam1, rel=1e-9)
        assert np.linalg.norm(a @ v - lam1 * v) <= 1e-8 * lam1
        lam2 = lambda_max(a, v0=v)
        assert lam2 == pytest.approx(lam1, rel=1e-8)

    def test_warm_start_vector_on_matvec_path(self):
        rng = np.random.default_rng(17)
        a = random_spd(rng, 10, shift=0.0)
        lam1, v = lambda_max(sp.csc_array(a), return_vector=True)
        assert np.linalg.norm(v) == pytest.approx(1.0, rel=1e-12)
        # Power iteration stops on Rayleigh stagnation, so the vector
        # only needs to be good enough to warm-start the next call.
        assert v @ (a @ v) == pytest.approx(lam1, rel=1e-9)
        assert np.linalg.norm(a @ v - lam1 * v) <= 1e-3 * lam1
        lam2 = lambda_max(sp.csc_array(a), v0=v)
        assert lam2 == pytest.approx(lam1, rel=1e-8)

    def test_clustered_spectrum_dense(self):
        # Two leading eigenvalues separated by 1e-12 stall a power
        # iteration; the dense path must resolve them exactly.
        q, _ = np.linalg.qr(np.random.default_rng(21).standard_normal((40, 40)))
        evals = np.linspace(0.1, 2.0, 40)
        evals[-2] = evals[-1] - 1e-12
        a = (q * evals) @ q.T
        a = 0.5 * (a + a.T)
        assert lambda_max(a) == pytest.approx(evals[-1], rel=1e-10)

    def test_sparse_and_callable(self):
        rng = np.random.default_rng(8)
        g = sp.random(40, 12, density=0.3, format="csc", random_state=3)
        gg = (g @ g.T).toarray()
        top = np.linalg.eigvalsh(gg)[-1]
        assert lambda_max(sp.csc_array(g @ g.T)) == pytest.approx(top, rel=1e-8)
        gt = g.T.tocsr()
        lam = lambda_max(lambda v: g @ (gt @ v), n=40)
        assert lam == pytest.approx(top, rel=1e-8)

    def test_callable_needs_dimension(self):
        with pytest.raises(ValueError):
            lambda_max(lambda v: v)

    def test_iteration_cap(self):
        a = sp.csc_array(np.diag([1.0, 1.0 - 1e-14]))
        with pytest.raises(ConvergenceError):
            # Force failure with an absurdly small cap.
            lambda_max(a, max_iter=0)


class TestNuclearNorm:
    def test_matches_svd_sum(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((6, 11))
        assert nuclear_norm(a) == pytest.approx(
            np.linalg.svd(a, compute_uv=False).sum(), rel=1e-12
        )

    def test_orthogonal_rows(self):
        assert nuclear_norm(np.eye(5)) == pytest.approx(5.0, abs=1e-12)


class TestSvdWrapper:
    def test_thin_shapes_and_reconstruction(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((4, 9))
        u, s, vt = svd(a)
        assert u.shape == (4, 4) and vt.shape == (4, 9)
        assert np.all(np.diff(s) <= 0)
        assert np.allclose((u * s) @ vt, a, atol=1e-10)


class TestSparseProducts:
    def test_matches_dense(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((5, 12))
        g = sp.random(12, 4, density=0.4, format="csc", random_state=1)
        assert np.allclose(right_multiply(x, g), x @ g.toarray())
        y = rng.standard_normal((5, 4))
        assert np.allclose(right_multiply_t(y, g), y @ g.toarray().T)

    def test_dimension_mismatch(self):
        x = np.zeros((3, 5))
        g = sp.identity(4, format="csc")
        with pytest.raises(ValueError):
            right_multiply(x, g)
        with pytest.raises(ValueError):
            right_multiply_t(np.zeros((3, 5)), g)
