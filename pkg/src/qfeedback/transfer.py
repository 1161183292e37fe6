"""Transfer-function analysis: evaluation, minimality, structure checks, norms.

The frequency-domain side of realizability lives here: (J,J)-unitarity for
doubled-up systems, the lossless bounded real property for annihilation
systems, and the H2/H-infinity norms used by the feedback analyses.  Each
structural check runs an algebraic state-space prong and an independent
sampled frequency prong and reports them separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionError,
    GenerationError,
    InfiniteNormError,
    InstabilityError,
    SingularityError,
)
from .linalg import (
    FREQ_TOL,
    RANK_TOL,
    RESIDUAL_TOL,
    SPECTRAL_GAP_TOL,
    as_matrix,
    dagger,
    hermitian_part,
    max_abs,
    rank_svd,
    signature_matrix,
    solve_lyapunov_hermitian,
)
from .systems import eig_sum_condition, is_hurwitz, is_positive_definite


@dataclass(frozen=True)
class StateSpaceTF:
    """State-space realization (A, B, C, D) of C (sI - A)^{-1} B + D."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a, "a")
        b = as_matrix(self.b, "b")
        c = as_matrix(self.c, "c")
        d = as_matrix(self.d, "d")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionError(f"a must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionError(f"b must have {n} rows, got {b.shape}")
        if c.shape[1] != n:
            raise DimensionError(f"c must have {n} columns, got {c.shape}")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionError(
                f"d must have shape ({c.shape[0]}, {b.shape[1]}), got {d.shape}"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def state_dim(self) -> int:
        return self.a.shape[0]

    @property
    def input_dim(self) -> int:
        return self.b.shape[1]

    @property
    def output_dim(self) -> int:
        return self.c.shape[0]

    @classmethod
    def from_system(cls, s) -> "StateSpaceTF":
        """View a quantum system model (F, G, H, K) as a transfer function."""
        return cls(a=s.f, b=s.g, c=s.h, d=s.k)


@dataclass(frozen=True)
class NormResult:
    """A computed system norm with its method tag and certificate data."""

    value: float
    method: str
    certificate: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TransferCheck:
    """Multi-prong verdict of a transfer-function structure check.

    ``prongs`` maps prong name to "pass", "fail" or "indeterminate";
    ``residuals`` collects the worst deviations behind those calls.
    """

    verdict: bool
    prongs: dict[str, str]
    residuals: dict[str, float]


def tf_eval(g: StateSpaceTF, s: complex) -> np.ndarray:
    """Evaluate C (sI - A)^{-1} B + D at the point ``s``.

    Raises
    ------
    SingularityError
        When ``s`` sits within the spectral-gap guard of an eigenvalue of A.
    """
    n = g.state_dim
    if n == 0:
        return g.d.copy()
    lam = np.linalg.eigvals(g.a)
    gap = float(np.min(np.abs(s - lam)))
    scale = max(1.0, float(np.max(np.abs(lam))))
    if gap < SPECTRAL_GAP_TOL * scale:
        raise SingularityError(
            f"evaluation point {s:.6g} is within {gap:.3e} of a pole",
            eigenvalue_pair=(complex(s), complex(lam[np.argmin(np.abs(s - lam))])),
        )
    x = np.linalg.solve(s * np.eye(n, dtype=complex) - g.a, g.b)
    return g.c @ x + g.d


def default_frequency_grid(a=None, seed: int = 1729, points: int = 200, random_points: int = 56) -> np.ndarray:
    """Frequency grid for sampled prongs: log-spaced, mirrored, zero, random.

    200 logarithmic points over [1e-3, 1e3] (scaled by the spectral radius
    of ``a`` when above 1), their negatives, omega = 0 and 56 seeded random
    points with log-uniform magnitude and random sign.
    """
    scale = 1.0
    if a is not None:
        a = as_matrix(a, "a")
        if a.size:
            scale = max(1.0, float(np.max(np.abs(np.linalg.eigvals(a)))))
    base = np.logspace(-3.0, 3.0, points) * scale
    rng = np.random.default_rng(seed)
    mags = 10.0 ** rng.uniform(-3.0, 3.0, random_points) * scale
    signs = rng.choice([-1.0, 1.0], random_points)
    return np.unique(np.concatenate([-base[::-1], [0.0], base, mags * signs]))


def _sample_worst(g: StateSpaceTF, metric, grid) -> tuple[float, int]:
    """Worst metric value over grid points clear of the poles of A."""
    n = g.state_dim
    lam = np.linalg.eigvals(g.a) if n else np.zeros(0, dtype=complex)
    guard = 1e-8 * max(1.0, float(np.max(np.abs(lam))) if n else 1.0)
    worst = 0.0
    used = 0
    eye = np.eye(n, dtype=complex)
    for w in grid:
        s = 1j * w
        if n and np.min(np.abs(s - lam)) <= guard:
            continue
        val = g.c @ np.linalg.solve(s * eye - g.a, g.b) + g.d if n else g.d
        worst = max(worst, metric(val))
        used += 1
    return worst, used


def _controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    blocks = []
    cur = b
    for _ in range(max(n, 1)):
        blocks.append(cur)
        cur = a @ cur
    return np.hstack(blocks) if blocks else np.zeros((n, 0), dtype=complex)

def _controllable_basis(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the controllable subspace of (A, B)."""
    n = a.shape[0]
    if n == 0 or b.shape[1] == 0:
        return np.zeros((n, 0), dtype=complex)
    k = _controllability_matrix(a, b)
    u, svals, _ = np.linalg.svd(k)
    if svals.size == 0 or svals[0] == 0.0:
        return np.zeros((n, 0), dtype=complex)
    r = int(np.sum(svals > RANK_TOL * svals[0] * max(k.shape)))
    return u[:, :r]


def is_minimal(g: StateSpaceTF) -> bool:
    """True when the realization is both controllable and observable."""
    n = g.state_dim
    if n == 0:
        return True
    ctrb = rank_svd(_controllability_matrix(g.a, g.b))
    obsv = rank_svd(_controllability_matrix(dagger(g.a), dagger(g.c)))
    return ctrb == n and obsv == n


def minimal_realization(g: StateSpaceTF) -> StateSpaceTF:
    """Exact reduction to the controllable and observable part.

    Projects onto the controllable subspace, then onto the observable
    subspace of the result (the controllable subspace of the dual).  The
    transfer function is unchanged.
    """
    v = _controllable_basis(g.a, g.b)
    a1 = dagger(v) @ g.a @ v
    b1 = dagger(v) @ g.b
    c1 = g.c @ v
    w = _controllable_basis(dagger(a1), dagger(c1))
    return StateSpaceTF(
        a=dagger(w) @ a1 @ w, b=dagger(w) @ b1, c=c1 @ w, d=g.d.copy()
    )


def jj_unitary_check(g: StateSpaceTF, half_io: int, tol: float = RESIDUAL_TOL) -> TransferCheck:
    """Check Gamma~(s) J Gamma(s) = J for a square doubled-dimension system.

    Algebraic prong: a Hermitian X with A X + X A^dagger + B J B^dagger = 0,
    X C^dagger = -B J D^dagger and D^dagger J D = J.  Sampled prong: the
    identity at grid frequencies.  When the eigenvalue-sum condition fails
    the certificate equation is non-unique and the algebraic prong reports
    indeterminate; the sampled prong still runs.
    """
    if g.input_dim != 2 * half_io or g.output_dim != 2 * half_io:
        raise DimensionError(
            f"need square io of dimension {2 * half_io}, got "
            f"{g.output_dim} x {g.input_dim}"
        )
    j = signature_matrix(half_io)
    prongs: dict[str, str] = {}
    residuals: dict[str, float] = {}

    residuals["feedthrough"] = max_abs(dagger(g.d) @ j @ g.d - j)
    feed_ok = residuals["feedthrough"] <= tol * (1.0 + max_abs(g.d) ** 2)

    if g.state_dim == 0:
        prongs["algebraic"] = "pass" if feed_ok else "fail"
    elif not eig_sum_condition(g.a):
        prongs["algebraic"] = "indeterminate"
    else:
        try:
            x = solve_lyapunov_hermitian(g.a, hermitian_part(g.b @ j @ dagger(g.b)))
        except SingularityError:
            x = None
        if x is None:
            prongs["algebraic"] = "indeterminate"
        else:
            residuals["coupling"] = max_abs(x @ dagger(g.c) + g.b @ j @ dagger(g.d))
            scale = 1.0 + max_abs(g.b) + max_abs(x) * max_abs(g.c)
            prongs["algebraic"] = (
                "pass" if feed_ok and residuals["coupling"] <= tol * scale else "fail"
            )

    worst, used = _sample_worst(
        g, lambda val: max_abs(dagger(val) @ j @ val - j), default_frequency_grid(g.a)
    )
    residuals["sampled"] = worst
    prongs["sampled"] = "pass" if used and worst <= FREQ_TOL else "fail"

    verdict = prongs["algebraic"] == "pass" and prongs["sampled"] == "pass"
    return TransferCheck(verdict=verdict, prongs=prongs, residuals=residuals)


def lossless_br_check(g: StateSpaceTF, tol: float = RESIDUAL_TOL) -> TransferCheck:
    """Check that Gamma is stable and all-pass (lossless bounded real).

    Non-minimal realizations are first reduced exactly, since the property
    belongs to the transfer function.  Prongs: (i) stability of the reduced
    state matrix, (ii) algebraic: Hermitian X > 0 with
    A X + X A^dagger + B B^dagger = 0, X C^dagger = -B D^dagger and
    D^dagger D = I, (iii) sampled unitarity on the frequency grid.
    """
    if g.input_dim != g.output_dim:
        raise DimensionError(
            f"lossless check needs square io, got {g.output_dim} x {g.input_dim}"
        )
    red = g if is_minimal(g) else minimal_realization(g)
    prongs: dict[str, str] = {}
    residuals: dict[str, float] = {}

    stable = red.state_dim == 0 or is_hurwitz(red.a)
    prongs["stability"] = "pass" if stable else "fail"

    residuals["feedthrough"] = max_abs(dagger(g.d) @ g.d - np.eye(g.input_dim))
    feed_ok = residuals["feedthrough"] <= tol * (1.0 + max_abs(g.d) ** 2)

    if not stable:
        prongs["algebraic"] = "fail"
    elif red.state_dim == 0:
        prongs["algebraic"] = "pass" if feed_ok else "fail"
    else:
        x = solve_lyapunov_hermitian(red.a, hermitian_part(red.b @ dagger(red.b)))
        residuals["coupling"] = max_abs(x @ dagger(red.c) + red.b @ dagger(g.d))
        scale = 1.0 + max_abs(red.b) + max_abs(x) * max_abs(red.c)
        coup_ok = residuals["coupling"] <= tol * scale
        prongs["algebraic"] = (
            "pass" if feed_ok and coup_ok and is_positive_definite(x) else "fail"
        )

    worst, used = _sample_worst(
        g,
        lambda val: max_abs(dagger(val) @ val - np.eye(g.input_dim)),
        default_frequency_grid(g.a),
    )
    residuals["sampled"] = worst
    prongs["sampled"] = "pass" if used and worst <= FREQ_TOL else "fail"

    verdict = all(prongs[p] == "pass" for p in ("stability", "algebraic", "sampled"))
    return TransferCheck(verdict=verdict, prongs=prongs, residuals=residuals)


def h2_norm(g: StateSpaceTF) -> NormResult:
    """H2 norm sqrt(trace(C P C^dagger)) with A P + P A^dagger + B B^dagger = 0.

    Raises
    ------
    InfiniteNormError
        When D is nonzero (the norm does not exist).
    InstabilityError
        When A is not Hurwitz.
    """
    if max_abs(g.d) > RESIDUAL_TOL:
        raise InfiniteNormError("H2 norm needs a strictly proper system (D = 0)")
    if g.state_dim == 0:
        return NormResult(0.0, "lyapunov-gramian", {"gramian_trace": 0.0})
    if not is_hurwitz(g.a):
        raise InstabilityError("H2 norm needs a Hurwitz state matrix")
    p = solve_lyapunov_hermitian(g.a, hermitian_part(g.b @ dagger(g.b)))
    tr = float(np.trace(g.c @ p @ dagger(g.c)).real)
    residual = max_abs(g.a @ p + p @ dagger(g.a) + g.b @ dagger(g.b))
    return NormResult(
        float(np.sqrt(max(tr, 0.0))),
        "lyapunov-gramian",
        {"gramian_trace": tr, "residual": residual},
    )


def _gamma_feasible(g: StateSpaceTF, gamma: float) -> bool:
    """True when the bounded-real Hamiltonian for gamma has no imaginary-axis eigenvalues."""
    r = gamma**2 * np.eye(g.input_dim) - dagger(g.d) @ g.d
    lam_r = np.linalg.eigvalsh(hermitian_part(r))
    if lam_r.size and lam_r[0] <= 0.0:
        return False
    r_inv = np.linalg.inv(hermitian_part(r))
    a_hat = g.a + g.b @ r_inv @ dagger(g.d) @ g.c
    ham = np.block(
        [
            [a_hat, g.b @ r_inv @ dagger(g.b)],
            [-dagger(g.c) @ (np.eye(g.output_dim) + g.d @ r_inv @ dagger(g.d)) @ g.c, -dagger(a_hat)],
        ]
    )
    lam = np.linalg.eigvals(ham)
    return bool(np.min(np.abs(lam.real)) > 1e-8 * max(1.0, float(np.max(np.abs(lam)))))


def hinf_norm(g: StateSpaceTF, rel_tol: float = 1e-6) -> NormResult:
    """H-infinity norm by bisection on the bounded-real Hamiltonian test.

    The lower bracket starts from the larger of the grid-sampled gain and
    sigma_max(D) inflated by 1e-9 (the all-pass degeneracy guard); the upper
    bracket doubles a gain estimate until the Hamiltonian test passes.

    Raises
    ------
    InstabilityError
        When A is not Hurwitz.
    """
    sigma_d = float(np.linalg.svd(g.d, compute_uv=False)[0]) if g.d.size else 0.0
    if g.state_dim == 0 or g.b.size == 0 or g.c.size == 0:
        return NormResult(sigma_d, "static", {"sigma_max_d": sigma_d})
    if not is_hurwitz(g.a):
        raise InstabilityError("H-infinity norm needs a Hurwitz state matrix")

    grid_max, _ = _sample_worst(
        g,
        lambda val: float(np.linalg.svd(val, compute_uv=False)[0]),
        default_frequency_grid(g.a),
    )
    lo = max(sigma_d * (1.0 + 1e-9), grid_max * (1.0 - 1e-12))

    margin = abs(float(np.max(np.linalg.eigvals(g.a).real)))
    estimate = sigma_d + 2.0 * float(
        np.linalg.norm(g.c, 2) * np.linalg.norm(g.b, 2)
    ) / max(margin, SPECTRAL_GAP_TOL)
    hi = max(estimate, 2.0 * lo, 1e-8)
    for _ in range(100):
        if _gamma_feasible(g, hi):
            break
        hi *= 2.0
    else:
        raise GenerationError("H-infinity upper bracket search failed to close")

    iterations = 0
    while hi - lo > rel_tol * max(lo, 1.0):
        mid = 0.5 * (lo + hi)
        if _gamma_feasible(g, mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
    value = 0.5 * (lo + hi)
    return NormResult(
        value,
        "bisection",
        {
            "bracket_low": lo,
            "bracket_high": hi,
            "iterations": float(iterations),
            "grid_lower_bound": grid_max,
        },
    )
