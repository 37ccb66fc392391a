"""Augmented ridge-WLS position / clock-bias solver and the CRLB.

The solver works on residuals about the current linearization point, so
a noiseless measurement set is an exact fixed point. Underdetermined
weightings are rejected before the ridge term is added: the ridge keeps
the linear algebra finite, but it cannot invent the missing information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, DivergenceError, RankDeficiencyError
from .geometry import COINCIDENT_TOL
from .measurement import linearize, true_ranges

# relative singular-value floor of sqrt(W) [H 1] below which the fix is underdetermined
RANK_TOL = 1e-10
MAX_HALVINGS = 30
# multistart skips the second run when the closed-form start lands this
# close (fraction of the scene scale) to the first solution
MULTISTART_AGREE = 0.1


@dataclass(frozen=True)
class WlsSolution:
    position: np.ndarray
    clock_bias: float
    residuals: np.ndarray
    iterations: int
    condition_estimate: float


def check_weights(w, atol: float = 1e-9) -> np.ndarray:
    """Validate a normalized weight vector and return it as an array."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("weights must be a 1-D vector")
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must lie in [0, 1]")
    if abs(w.sum() - 1.0) > atol:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def _pseudoranges(z) -> np.ndarray:
    return np.asarray(getattr(z, "pseudoranges", z), dtype=float)


def _weighted_rank_check(h_aug: np.ndarray, w: np.ndarray) -> None:
    n_unknowns = h_aug.shape[1]
    if np.count_nonzero(w > 0) < n_unknowns:
        raise RankDeficiencyError(
            f"{np.count_nonzero(w > 0)} weighted measurements for {n_unknowns} unknowns"
        )
    sv = np.linalg.svd(np.sqrt(w / w.max())[:, None] * h_aug, compute_uv=False)
    if not sv[-1] > RANK_TOL * sv[0]:
        raise RankDeficiencyError("weighted geometry matrix is rank deficient")


def _normal_system(z, centers, w, x0, b0, ridge):
    z = _pseudoranges(z)
    centers = np.asarray(centers, dtype=float)
    w = np.asarray(w, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    for name, arr in (("z", z), ("weights", w), ("x0", x0), ("centers", centers)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite values in {name}")
    if not np.isfinite(b0):
        raise ValueError("non-finite clock bias")
    if z.shape != w.shape or z.shape[0] != centers.shape[0]:
        raise ValueError("z, weights and centers must agree in length")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    h_aug = linearize(x0, centers)
    _weighted_rank_check(h_aug, w)
    dz = z - true_ranges(x0, centers) - b0
    hw = h_aug.T * w
    normal = hw @ h_aug
    rhs = hw @ dz
    return normal, rhs


def _weighted_cost(z, centers, w, x, b) -> float:
    r = z - true_ranges(x, centers) - b
    return float(w @ (r * r))


def closed_form_init(z, centers, w):
    """Linear position / bias guess from squared-range differencing.

    Squaring ``z_i - b = ||x - c_i||`` gives equations that are linear in
    ``(x, b, |x|^2 - b^2)``; they are solved by weighted least squares with
    the extra unknown left unconstrained. Returns ``None`` when fewer than
    d+2 measurements carry weight or the system is degenerate.
    """
    z = _pseudoranges(z)
    centers = np.asarray(centers, dtype=float)
    w = np.asarray(w, dtype=float)
    m, d = centers.shape
    if np.count_nonzero(w > 0) < d + 2:
        return None
    origin = centers.mean(axis=0)
    scale = max(1.0, float(np.max(np.abs(centers - origin))), float(np.max(np.abs(z))))
    c = (centers - origin) / scale
    zz = z / scale
    a = np.hstack([2.0 * c, -2.0 * zz[:, None], -np.ones((m, 1))])
    rhs = np.sum(c * c, axis=1) - zz * zz
    sw = np.sqrt(w / w.max())
    sol, _, rank, _ = np.linalg.lstsq(a * sw[:, None], rhs * sw, rcond=None)
    if rank < d + 2 or not np.all(np.isfinite(sol)):
        return None
    return origin + scale * sol[:d], float(scale * sol[d])


def _default_scale(centers) -> float:
    return max(1.0, float(np.linalg.norm(np.ptp(np.asarray(centers, dtype=float), axis=0))))


def wls_step(z, centers, w, x0, b0: float, ridge: float = 1e-6):
    """One linearized ridge-WLS update about ``(x0, b0)``.

    Solves ``(H~' W H~ + ridge*I) delta = H~' W dz`` with
    ``dz_i = z_i - ||x0 - c_i|| - b0`` and returns the updated
    ``(position, clock_bias)``.

    Raises
    ------
    RankDeficiencyError
        Fewer than d+1 positively weighted measurements, or a weighted
        geometry matrix that is numerically rank deficient.
    ValueError
        Non-finite inputs or inconsistent shapes.
    """
    normal, rhs = _normal_system(z, centers, w, x0, b0, ridge)
    delta = np.linalg.solve(normal + ridge * np.eye(normal.shape[0]), rhs)
    d = normal.shape[0] - 1
    return np.asarray(x0, dtype=float) + delta[:d], float(b0 + delta[d])


def wls_solve(
    z,
    centers,
    w,
    x_init,
    ridge: float = 1e-6,
    max_iter: int = 10,
    tol: float = 1e-6,
    b_init: float | None = None,
    scene_scale: float | None = None,
    multistart: bool = False,
) -> WlsSolution:
    """Iterated (Gauss-Newton) augmented WLS.

    Re-linearizes after each update until the update norm drops below
    ``tol`` or ``max_iter`` iterations ran. A step that would raise the
    weighted residual cost is halved until it does not, which keeps
    far-from-truth starts from overshooting across the beam centers. With ``b_init=None`` the clock
    bias starts at the weighted mean residual about ``x_init``.

    With ``multistart=True`` a second run starts from
    :func:`closed_form_init` unless that start already lies within
    ``MULTISTART_AGREE * scene_scale`` of the first solution; the converged
    solution with the smaller weighted residual cost is returned. This resolves the two-fold
    ambiguity of nearly determined weightings when no good prior exists.

    Raises
    ------
    DivergenceError
        If a position update exceeds ten times ``scene_scale`` (default:
        diagonal of the centers' bounding box, at least 1 m).
    """
    if multistart:
        first, first_err = None, None
        try:
            first = wls_solve(z, centers, w, x_init, ridge, max_iter, tol, b_init, scene_scale)
        except DivergenceError as exc:
            first_err = exc
        guess = closed_form_init(z, centers, w)
        if guess is None:
            if first is None:
                raise first_err
            return first
        if scene_scale is None:
            scene_scale = _default_scale(centers)
        if first is not None and np.linalg.norm(first.position - guess[0]) <= MULTISTART_AGREE * scene_scale:
            return first
        try:
            second = wls_solve(z, centers, w, guess[0], ridge, max_iter, tol, guess[1], scene_scale)
        except DivergenceError:
            if first is None:
                raise first_err
            return first
        if first is None:
            return second
        wv = np.asarray(w, dtype=float)
        return second if wv @ second.residuals**2 < wv @ first.residuals**2 else first
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    zr = _pseudoranges(z)
    centers = np.asarray(centers, dtype=float)
    w = np.asarray(w, dtype=float)
    x = np.array(x_init, dtype=float)
    if scene_scale is None:
        scene_scale = _default_scale(centers)
    if b_init is None:
        wsum = w.sum()
        if not wsum > 0:
            raise RankDeficiencyError("all weights are zero")
        b = float(w @ (zr - true_ranges(x, centers)) / wsum)
    else:
        b = float(b_init)
    # validates inputs and rank once; the loop below repeats the same algebra
    _normal_system(zr, centers, w, x, b, ridge)
    d = centers.shape[1]
    ridge_eye = ridge * np.eye(d + 1)
    h_aug = np.ones((centers.shape[0], d + 1))
    limit = 10.0 * scene_scale
    it = 0
    for it in range(1, max_iter + 1):
        diff = x - centers
        rng_ = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        if np.any(rng_ <= COINCIDENT_TOL):
            raise DegenerateGeometryError("iterate coincides with a beam center")
        h_aug[:, :d] = diff / rng_[:, None]
        dz = zr - rng_ - b
        hw = h_aug.T * w
        delta = np.linalg.solve(hw @ h_aug + ridge_eye, hw @ dz)
        step = float(np.sqrt(delta[:d] @ delta[:d]))
        if not np.isfinite(step) or step > limit:
            raise DivergenceError(f"update of {step:.3g} m at iteration {it}")
        # damped step: halve until the weighted cost stops increasing
        cost = float(w @ (dz * dz))
        scale = 1.0
        for _ in range(MAX_HALVINGS):
            if _weighted_cost(zr, centers, w, x + scale * delta[:d], b + scale * delta[d]) <= cost:
                break
            scale *= 0.5
        delta = scale * delta
        x = x + delta[:d]
        b = b + float(delta[d])
        if float(np.sqrt(delta @ delta)) < tol:
            break
    residuals = zr - true_ranges(x, centers) - b
    h_aug = linearize(x, centers)
    hw = h_aug.T * w
    cond = float(np.linalg.cond(hw @ h_aug + ridge_eye))
    return WlsSolution(position=x, clock_bias=b, residuals=residuals, iterations=it,
                       condition_estimate=cond)


def positioning_error(x_hat, x_true) -> float:
    """Euclidean distance between estimate and truth [m]."""
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x_hat.shape != x_true.shape:
        raise ValueError("dimension mismatch")
    return float(np.linalg.norm(x_hat - x_true))


def fisher_information(centers, x_true, sigmas) -> np.ndarray:
    h_aug = linearize(x_true, centers)
    sig = np.asarray(sigmas, dtype=float)
    if np.any(~(sig > 0)):
        raise ValueError("sigmas must be positive")
    return (h_aug.T / sig**2) @ h_aug


def crlb_position(centers, x_true, sigmas) -> float:
    """Trace of the position block of the inverse Fisher information [m^2].

    Gaussian pseudoranges with independent noise; the clock bias is a
    nuisance parameter estimated jointly.
    """
    info = fisher_information(centers, x_true, sigmas)
    sv = np.linalg.svd(info, compute_uv=False)
    if not sv[-1] > 1e-12 * sv[0]:
        raise DegenerateGeometryError("singular Fisher information")
    d = info.shape[0] - 1
    return float(np.trace(np.linalg.inv(info)[:d, :d]))
