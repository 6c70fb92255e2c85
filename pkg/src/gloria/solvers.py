"""Fusion solvers for the global-local low-rank observation model.

The estimation problem is

    min_{X in [0,1]^{M x L}}  (1/2)||Y_M - F X||_F^2
                            + (1/2)||Y_H - X G||_F^2
                            + sum_{i=0}^{P} gamma_i * phi(X_i),

where X_0 is the whole image, X_1..X_P are its patches in patch-major
column order, and phi is the smoothed Schatten-p surrogate from
:mod:`gloria.schatten`. Three drivers share the same majorise-minimise
structure:

``gloria_solve``
    One extrapolated projected-gradient step per majoriser (inexact
    MM). Weights, gradients and the step size are all evaluated at the
    extrapolated point.
``nominal_pg_solve``
    The same scheme without extrapolation; descends monotonically.
``exact_mm_solve``
    Solves each weighted subproblem with an inner accelerated
    projected-gradient loop before re-weighting; also monotone.

``nnm_solve`` is the unconstrained nuclear-norm baseline solved by
accelerated proximal gradient with singular-value thresholding.
"""

import math
import time

import numpy as np

from .exceptions import DivergenceError
from .linalg import lambda_max
from .schatten import SchattenParams, phi, psi, weight
from .validation import as_dense_operator, as_sparse_operator, check_matrix

__all__ = [
    "Problem",
    "SolveReport",
    "build_problem",
    "default_gamma",
    "loss",
    "grad_loss",
    "objective",
    "weights_at",
    "majorant_value",
    "majorant_gradient",
    "lipschitz",
    "project_box",
    "extrapolation_step",
    "gloria_solve",
    "nominal_pg_solve",
    "exact_mm_solve",
    "nnm_solve",
    "svt",
]

SOLVER_NAMES = ("gloria", "exact_mm", "nominal_pg", "nnm")


def default_gamma(snr_m_db, snr_h_db, scale=20.0):
    """Regularisation weight tied to the observation SNRs (dB)."""
    return scale / (float(snr_m_db) + float(snr_h_db))


class Problem:
    """A fusion instance with its operators and regularisation weights.

    Parameters
    ----------
    y_m : (M_m, L) array_like or HSImage
        Multispectral observation, pixels in raster order.
    y_h : (M, L_h) array_like or HSImage
        Low-resolution hyperspectral observation.
    f : SpectralResponse or (M_m, M) array_like
    g : SpatialResponse or (L, L_h) sparse/array_like
    layout : PatchLayout
        Patch partition of the full-resolution grid.
    params : SchattenParams
    gammas : (P+1,) array_like
        Non-negative weights; entry 0 scales the whole-image term,
        entry i the term of patch i.

    Notes
    -----
    The observation ``y_m`` and the rows of ``g`` are re-ordered to the
    layout's patch-major column order once, so the loss and gradient
    functions expect and produce matrices in that order.
    """

    def __init__(self, y_m, y_h, f, g, layout, params=None, gammas=None):
        y_m = getattr(y_m, "data", y_m)
        y_h = getattr(y_h, "data", y_h)
        self.y_m = check_matrix(y_m, "y_m")
        self.y_h = check_matrix(y_h, "y_h")
        self.f = as_dense_operator(f, "f")
        self.g = as_sparse_operator(g, "g")
        self.layout = layout
        self.params = params if params is not None else SchattenParams()

        m_m, m = self.f.shape
        l_full, l_low = self.g.shape
        if self.y_m.shape[0] != m_m:
            raise ValueError(f"y_m has {self.y_m.shape[0]} bands, F expects {m_m}")
        if self.y_h.shape[0] != m:
            raise ValueError(f"y_h has {self.y_h.shape[0]} bands, F expects {m}")
        if self.y_m.shape[1] != l_full:
            raise ValueError(
                f"y_m has {self.y_m.shape[1]} pixels, G expects {l_full}"
            )
        if self.y_h.shape[1] != l_low:
            raise ValueError(f"y_h has {self.y_h.shape[1]} pixels, G expects {l_low}")
        if layout.n_pixels != l_full:
            raise ValueError(
                f"layout covers {layout.n_pixels} pixels, observations have {l_full}"
            )

        if gammas is None:
            gammas = np.full(layout.n_patches + 1, 0.4)
        self.gammas = np.asarray(gammas, dtype=np.float64).ravel()
        if self.gammas.shape[0] != layout.n_patches + 1:
            raise ValueError(
                f"need {layout.n_patches + 1} gamma values, got {self.gammas.shape[0]}"
            )
        if np.any(self.gammas < 0) or not np.all(np.isfinite(self.gammas)):
            raise ValueError("gamma values must be finite and non-negative")

        perm = layout.permutation
        self._y_m_p = np.ascontiguousarray(self.y_m[:, perm])
        self._g_p = self.g[perm, :]
        self._g_p_t = self._g_p.T.tocsr()
        self._ftf = self.f.T @ self.f
        self._ft_y_m_p = self.f.T @ self._y_m_p
        self._y_h_gt_p = self.y_h @ self._g_p_t
        self.lam_gg = lambda_max(
            lambda v: self._g_p @ (self._g_p_t @ v), n=l_full
        )

    @property
    def shape(self):
        """Shape (M, L) of the latent image matrix."""
        return (self.f.shape[1], self.layout.n_pixels)

    def initial_x(self, init=None, seed=None):
        """Starting point in patch-major order.

        ``init`` is a raster-order (M, L) matrix; when omitted the
        entries are drawn i.i.d. uniform on [0, 1] from ``seed``.
        """
        if init is None:
            rng = np.random.default_rng(seed)
            x0 = rng.uniform(size=self.shape)
        else:
            x0 = check_matrix(init, "init")
            if x0.shape != self.shape:
                raise ValueError(f"init has shape {x0.shape}, expected {self.shape}")
        return self.layout.to_patch_order(x0)


def build_problem(y_m, y_h, f, g, layout, p=0.5, tau=1.0, gamma=0.4, gamma_global=None):
    """Convenience constructor with one shared regularisation weight.

    ``gamma`` is used for the whole-image term and every patch term;
    ``gamma_global`` overrides the whole-image weight when given.
    """
    gammas = np.full(layout.n_patches + 1, float(gamma))
    if gamma_global is not None:
        gammas[0] = float(gamma_global)
    return Problem(
        y_m, y_h, f, g, layout, params=SchattenParams(p=p, tau=tau), gammas=gammas
    )


class SolveReport(dict):
    """Result of a solver run, with attribute access like scipy's.

    Attributes
    ----------
    x_est : (M, L) ndarray
        Estimate in raster column order.
    iterations : int
        Gradient (outer) steps taken; ``objective_trace`` has one more
        entry than this.
    final_objective : float
    objective_trace : list of float
    stop_reason : {"tolerance", "max_iter"}
    wall_time : float
        Seconds spent inside the solve loop.
    step_sizes : list of float
        Step 1/L used to produce each iterate after the first.
    wall_ms_trace : list of float
        Cumulative milliseconds at each trace entry.
    inner_iterations : int or None
        Total inner-loop steps (exact MM only).
    inner_trace : list of int, optional
        Inner steps spent on each outer iteration (exact MM only).
    """

    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError as exc:
            raise AttributeError(name) from exc

    def __setattr__(self, name, value):
        self[name] = value

    def __repr__(self):
        keys = ("iterations", "final_objective", "stop_reason", "wall_time")
        body = ", ".join(f"{k}={self.get(k)!r}" for k in keys)
        return f"SolveReport({body})"


def loss(x, problem):
    """Data-fit value at ``x`` (patch-major order)."""
    r_m = problem._y_m_p - problem.f @ x
    r_h = problem.y_h - x @ problem._g_p
    return 0.5 * float(np.vdot(r_m, r_m)) + 0.5 * float(np.vdot(r_h, r_h))


def grad_loss(x, problem):
    """Gradient of the data-fit term at ``x`` (patch-major order)."""
    return (
        problem._ftf @ x
        - problem._ft_y_m_p
        + (x @ problem._g_p) @ problem._g_p_t
        - problem._y_h_gt_p
    )


def _patch_views(x, problem):
    layout = problem.layout
    yield x
    for i in range(layout.n_patches):
        yield x[:, layout.patch_slice(i)]


def objective(x, problem):
    """Full objective: data fit plus weighted Schatten terms."""
    val = loss(x, problem)
    for gamma_i, block in zip(problem.gammas, _patch_views(x, problem)):
        if gamma_i > 0.0:
            val += gamma_i * phi(block, problem.params)
    return float(val)


def weights_at(x, problem):
    """Minimising weights of every Schatten term at the point ``x``."""
    return [weight(block, problem.params) for block in _patch_views(x, problem)]


def majorant_value(x, weights, problem):
    """Value of the quadratic majoriser built from ``weights`` at ``x``."""
    val = loss(x, problem)
    for gamma_i, w, block in zip(problem.gammas, weights, _patch_views(x, problem)):
        if gamma_i > 0.0:
            val += gamma_i * psi(block, w.w, problem.params)
    return float(val)


def majorant_gradient(x, weights, problem):
    """Gradient of the majoriser at ``x`` for fixed ``weights``."""
    grad = grad_loss(x, problem)
    p = problem.params.p
    gam = problem.gammas
    if gam[0] > 0.0:
        grad += (p * gam[0]) * (weights[0].w @ x)
    layout = problem.layout
    for i in range(layout.n_patches):
        if gam[i + 1] > 0.0:
            sl = layout.patch_slice(i)
            grad[:, sl] += (p * gam[i + 1]) * (weights[i + 1].w @ x[:, sl])
    return grad


def lipschitz(weights, problem, v0=None):
    """Step-size constant for the majoriser and the warm-start vector.

    The bound splits over the three smooth pieces: the spectral term
    plus the global weight, the blur term, and the stiffest patch
    weight.
    """
    p = problem.params.p
    lam_f, v = lambda_max(
        problem._ftf + (p * problem.gammas[0]) * weights[0].w,
        v0=v0,
        return_vector=True,
    )
    lam_patch = max(
        problem.gammas[i + 1] * weights[i + 1].lam_max
        for i in range(problem.layout.n_patches)
    )
    return float(lam_f + problem.lam_gg + p * lam_patch), v


def project_box(x, lo=0.0, hi=1.0):
    """Euclidean projection onto the box [lo, hi]^{M x L}."""
    return np.clip(x, lo, hi)


def extrapolation_step(xi_prev):
    """Advance the momentum sequence: returns (xi, alpha).

    With xi_{-1} = 0 the first call gives alpha = -1 (a plain step,
    since the two initial iterates coincide) and the second gives
    alpha = 0; alpha then grows toward 1 from below.
    """
    xi = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * xi_prev * xi_prev))
    return xi, (xi_prev - 1.0) / xi


def _guard_threshold(f0):
    # A zero initial objective means the start is already globally
    # optimal; the runaway guard cannot use a multiplicative threshold.
    return 1e6 * f0 if f0 > 0.0 else math.inf


def _mm_drive(problem, init, tol, max_iter, seed, accelerated, callback=None):
    x = problem.initial_x(init, seed)
    x_prev = x
    xi = 0.0
    f_val = objective(x, problem)
    guard = _guard_threshold(f_val)
    trace = [f_val]
    steps = []
    wall = [0.0]
    t0 = time.perf_counter()
    v_warm = None
    stop_reason = "max_iter"
    iterations = 0

    for k in range(int(max_iter)):
        if accelerated:
            xi, alpha = extrapolation_step(xi)
            z = x + alpha * (x - x_prev)
        else:
            z = x
        ws = weights_at(z, problem)
        grad = majorant_gradient(z, ws, problem)
        lip, v_warm = lipschitz(ws, problem, v0=v_warm)
        x_prev = x
        x = project_box(z - grad / lip)
        f_new = objective(x, problem)
        iterations = k + 1
        trace.append(f_new)
        steps.append(1.0 / lip)
        wall.append((time.perf_counter() - t0) * 1e3)
        if not np.isfinite(f_new) or f_new > guard:
            raise DivergenceError(
                f"objective diverged at iteration {iterations}: {f_new!r}", trace=trace
            )
        rel = abs(f_new - f_val) / max(abs(f_val), 1e-30)
        f_val = f_new
        if callback is not None:
            callback(k, x, f_new)
        if rel < tol:
            stop_reason = "tolerance"
            break

    return SolveReport(
        x_est=problem.layout.from_patch_order(x),
        iterations=iterations,
        final_objective=f_val,
        objective_trace=trace,
        stop_reason=stop_reason,
        wall_time=time.perf_counter() - t0,
        step_sizes=steps,
        wall_ms_trace=wall,
        inner_iterations=None,
    )


def gloria_solve(problem, init=None, tol=1e-5, max_iter=100, seed=None, callback=None):
    """Inexact MM with extrapolation: one accelerated step per majoriser.

    Stops when the relative objective change drops below ``tol`` or
    after ``max_iter`` steps. Raises ``DivergenceError`` if the
    objective becomes non-finite or exceeds 1e6 times its initial
    value.
    """
    return _mm_drive(problem, init, tol, max_iter, seed, accelerated=True, callback=callback)


def nominal_pg_solve(problem, init=None, tol=1e-5, max_iter=100, seed=None, callback=None):
    """Non-extrapolated variant of :func:`gloria_solve` (monotone)."""
    return _mm_drive(problem, init, tol, max_iter, seed, accelerated=False, callback=callback)


def _majorant_constant(weights, problem):
    p = problem.params.p
    const = 0.0
    for gamma_i, w in zip(problem.gammas, weights):
        if gamma_i > 0.0:
            w_evals = np.linalg.eigvalsh(w.w)
            const += gamma_i * (
                0.5 * p * problem.params.tau * float(np.trace(w.w))
                + 0.5 * (2.0 - p) * float(np.sum(w_evals ** (p / (p - 2.0))))
            )
    return const


def _majorant_quad(x, weights, problem):
    p = problem.params.p
    val = 0.0
    for gamma_i, w, block in zip(problem.gammas, weights, _patch_views(x, problem)):
        if gamma_i > 0.0:
            val += gamma_i * 0.5 * p * float(np.vdot(w.w @ block, block))
    return val


def exact_mm_solve(
    problem,
    init=None,
    tol=1e-5,
    max_iter=100,
    inner_tol=1e-7,
    inner_max_iter=500,
    seed=None,
    callback=None,
):
    """MM with each weighted subproblem solved by an inner APG loop.

    The inner loop warm-starts at the current iterate, restarts its
    momentum sequence, and returns its best-valued iterate, so the
    outer objective never increases. ``inner_iterations`` in the
    report counts all inner steps.
    """
    x = problem.initial_x(init, seed)
    f_val = objective(x, problem)
    guard = _guard_threshold(f_val)
    trace = [f_val]
    steps = []
    wall = [0.0]
    t0 = time.perf_counter()
    v_warm = None
    stop_reason = "max_iter"
    iterations = 0
    inner_total = 0
    inner_trace = []

    for k in range(int(max_iter)):
        ws = weights_at(x, problem)
        lip, v_warm = lipschitz(ws, problem, v0=v_warm)
        const = _majorant_constant(ws, problem)

        x_in = x
        x_in_prev = x
        xi = 0.0
        q_prev = loss(x, problem) + _majorant_quad(x, ws, problem) + const
        q_best = q_prev
        x_best = x
        inner_here = 0
        for _ in range(int(inner_max_iter)):
            xi, alpha = extrapolation_step(xi)
            z = x_in + alpha * (x_in - x_in_prev)
            grad = majorant_gradient(z, ws, problem)
            x_in_prev = x_in
            x_in = project_box(z - grad / lip)
            q_new = loss(x_in, problem) + _majorant_quad(x_in, ws, problem) + const
            inner_here += 1
            if q_new < q_best:
                q_best = q_new
                x_best = x_in
            rel_in = abs(q_new - q_prev) / max(abs(q_prev), 1e-30)
            q_prev = q_new
            if rel_in < inner_tol:
                break
        inner_total += inner_here
        inner_trace.append(inner_here)

        x = x_best
        f_new = objective(x, problem)
        iterations = k + 1
        trace.append(f_new)
        steps.append(1.0 / lip)
        wall.append((time.perf_counter() - t0) * 1e3)
        if not np.isfinite(f_new) or f_new > guard:
            raise DivergenceError(
                f"objective diverged at iteration {iterations}: {f_new!r}", trace=trace
            )
        rel = abs(f_new - f_val) / max(abs(f_val), 1e-30)
        f_val = f_new
        if callback is not None:
            callback(k, x, f_new)
        if rel < tol:
            stop_reason = "tolerance"
            break

    return SolveReport(
        x_est=problem.layout.from_patch_order(x),
        iterations=iterations,
        final_objective=f_val,
        objective_trace=trace,
        stop_reason=stop_reason,
        wall_time=time.perf_counter() - t0,
        step_sizes=steps,
        wall_ms_trace=wall,
        inner_iterations=inner_total,
        inner_trace=inner_trace,
    )


def svt(a, threshold):
    """Singular-value soft-thresholding, the nuclear-norm prox."""
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    s = np.maximum(s - threshold, 0.0)
    return (u * s) @ vt


def nnm_solve(
    y_m,
    y_h,
    f,
    g,
    gamma,
    tol=1e-5,
    max_iter=100,
    init=None,
    seed=None,
    callback=None,
):
    """Nuclear-norm baseline: accelerated proximal gradient, no box.

    Minimises the data fit plus ``gamma`` times the nuclear norm over
    unconstrained matrices. Returns a :class:`SolveReport`; the trace
    may be non-monotone (accelerated prox methods overshoot).
    """
    y_m = check_matrix(getattr(y_m, "data", y_m), "y_m")
    y_h = check_matrix(getattr(y_h, "data", y_h), "y_h")
    f = as_dense_operator(f, "f")
    g = as_sparse_operator(g, "g")
    gamma = float(gamma)
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    m_m, m = f.shape
    l_full, l_low = g.shape
    if y_m.shape != (m_m, l_full) or y_h.shape != (m, l_low):
        raise ValueError(
            f"observation shapes {y_m.shape}, {y_h.shape} do not match operators "
            f"{f.shape}, {g.shape}"
        )

    g_t = g.T.tocsr()
    ftf = f.T @ f
    ft_ym = f.T @ y_m
    yh_gt = y_h @ g_t
    lam = lambda_max(ftf) + lambda_max(lambda v: g @ (g_t @ v), n=l_full)
    thresh = gamma / lam

    if init is None:
        rng = np.random.default_rng(seed)
        x = rng.uniform(size=(m, l_full))
    else:
        x = check_matrix(init, "init")
        if x.shape != (m, l_full):
            raise ValueError(f"init has shape {x.shape}, expected {(m, l_full)}")

    def full_objective(xx):
        r_m = y_m - f @ xx
        r_h = y_h - xx @ g
        val = 0.5 * float(np.vdot(r_m, r_m)) + 0.5 * float(np.vdot(r_h, r_h))
        if gamma > 0.0:
            val += gamma * float(
                np.sum(np.linalg.svd(xx, compute_uv=False))
            )
        return val

    f_val = full_objective(x)
    guard = _guard_threshold(f_val)
    trace = [f_val]
    steps = []
    wall = [0.0]
    t0 = time.perf_counter()
    x_prev = x
    xi = 0.0
    stop_reason = "max_iter"
    iterations = 0

    for k in range(int(max_iter)):
        xi, alpha = extrapolation_step(xi)
        z = x + alpha * (x - x_prev)
        grad = ftf @ z - ft_ym + (z @ g) @ g_t - yh_gt
        x_prev = x
        v = z - grad / lam
        x = svt(v, thresh) if gamma > 0.0 else v
        f_new = full_objective(x)
        iterations = k + 1
        trace.append(f_new)
        steps.append(1.0 / lam)
        wall.append((time.perf_counter() - t0) * 1e3)
        if not np.isfinite(f_new) or f_new > guard:
            raise DivergenceError(
                f"objective diverged at iteration {iterations}: {f_new!r}", trace=trace
            )
        rel = abs(f_new - f_val) / max(abs(f_val), 1e-30)
        f_val = f_new
        if callback is not None:
            callback(k, x, f_new)
        if rel < tol:
            stop_reason = "tolerance"
            break

    return SolveReport(
        x_est=x,
        iterations=iterations,
        final_objective=f_val,
        objective_trace=trace,
        stop_reason=stop_reason,
        wall_time=time.perf_counter() - t0,
        step_sizes=steps,
        wall_ms_trace=wall,
        inner_iterations=None,
    )
