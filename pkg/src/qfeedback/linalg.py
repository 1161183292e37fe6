"""Complex matrix algebra for doubled-up quantum systems.

Everything downstream (realizability checks, transfer-function tests, noise
synthesis) reduces to a handful of structured matrix problems: doubled-up
block structure, Sylvester/Lyapunov solves, a Hermitian algebraic Riccati
equation, sign-split factorizations and rank decisions.  This module owns
those primitives together with the package-wide tolerances.

All routines accept anything ``np.asarray`` can turn into a complex matrix
and return plain ``numpy`` arrays (dtype complex128).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvals, schur, solve_triangular, get_lapack_funcs

from .errors import DimensionError, DomainError, SingularityError

# Package-wide tolerances.  STRUCTURE_TOL guards doubled-up block structure,
# RESIDUAL_TOL equation residuals, RANK_TOL rank/definiteness decisions,
# SPECTRAL_GAP_TOL solvability prechecks (eigenvalue collisions), and
# FREQ_TOL pointwise frequency-domain identities.
STRUCTURE_TOL = 1e-9
RESIDUAL_TOL = 1e-8
RANK_TOL = 1e-10
SPECTRAL_GAP_TOL = 1e-10
FREQ_TOL = 1e-7


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a 2-D complex array, rejecting NaN/Inf entries."""
    a = np.atleast_2d(np.asarray(x, dtype=complex))
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise DomainError(f"{name} has non-finite entries")
    return a


def dagger(a) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a, dtype=complex).conj().T


def max_abs(a) -> float:
    """Largest entry magnitude; 0 for empty matrices."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def require_hermitian(a, name: str, tol: float = RESIDUAL_TOL) -> np.ndarray:
    """Validate Hermitian symmetry within ``tol`` (relative) and symmetrize."""
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got {a.shape}")
    dev = max_abs(a - a.conj().T)
    if dev > tol * (1.0 + max_abs(a)):
        raise DomainError(f"{name} is not Hermitian (deviation {dev:.3e})")
    return hermitian_part(a)


def signature_matrix(half_dim: int) -> np.ndarray:
    """The signature matrix diag(I, -I) with blocks of size ``half_dim``."""
    if half_dim < 0:
        raise DimensionError("half_dim must be nonnegative")
    j = np.eye(2 * half_dim, dtype=complex)
    j[half_dim:, half_dim:] *= -1.0
    return j


@dataclass(frozen=True)
class SignatureJ:
    """Signature matrix diag(I_half, -I_half) used to weight doubled systems."""

    half_dim: int

    @property
    def matrix(self) -> np.ndarray:
        return signature_matrix(self.half_dim)


@dataclass(frozen=True)
class DoubledMatrix:
    """A 2x2-block matrix [[A1, A2], [conj(A2), conj(A1)]].

    ``body`` is the full array; ``half_rows``/``half_cols`` give the block
    shape.  Construction does not re-validate; use :func:`delta_build` or
    :meth:`from_body`.
    """

    body: np.ndarray
    half_rows: int
    half_cols: int

    @property
    def blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """The defining top blocks (A1, A2)."""
        return (
            self.body[: self.half_rows, : self.half_cols],
            self.body[: self.half_rows, self.half_cols :],
        )

    @classmethod
    def from_body(cls, body, tol: float = STRUCTURE_TOL) -> "DoubledMatrix":
        body = as_matrix(body, "doubled matrix")
        r, c = body.shape
        if r % 2 or c % 2:
            raise DimensionError(f"doubled matrix needs even dimensions, got {body.shape}")
        if not is_doubled(body, tol):
            raise DomainError("matrix lacks doubled-up block structure")
        return cls(body=body, half_rows=r // 2, half_cols=c // 2)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.body, dtype=dtype)


def delta_build(a1, a2) -> DoubledMatrix:
    """Assemble the doubled-up matrix [[A1, A2], [conj(A2), conj(A1)]].

    Parameters
    ----------
    a1, a2 : array_like
        Equal-shaped blocks.

    Returns
    -------
    DoubledMatrix
    """
    a1 = as_matrix(a1, "a1")
    a2 = as_matrix(a2, "a2")
    if a1.shape != a2.shape:
        raise DimensionError(f"blocks must share a shape, got {a1.shape} and {a2.shape}")
    body = np.block([[a1, a2], [a2.conj(), a1.conj()]])
    return DoubledMatrix(body=body, half_rows=a1.shape[0], half_cols=a1.shape[1])


def is_doubled(x, tol: float = STRUCTURE_TOL) -> bool:
    """True when ``x`` has doubled-up structure within ``tol`` (relative)."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    r, c = x.shape
    if r % 2 or c % 2:
        raise DimensionError("doubled-up test needs even dimensions")
    hr, hc = r // 2, c // 2
    scale = 1.0 + max_abs(x)
    dev = max(
        max_abs(x[hr:, hc:] - x[:hr, :hc].conj()),
        max_abs(x[hr:, :hc] - x[:hr, hc:].conj()),
    )
    return dev <= tol * scale


def conj_swap(x) -> np.ndarray:
    """The involution X -> Sigma conj(X) Sigma with Sigma swapping halves.

    Doubled-up matrices are fixed points; commutation matrices of doubled
    systems are antisymmetric under it.
    """
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    r, c = x.shape
    if r % 2 or c % 2:
        raise DimensionError("conj_swap needs even dimensions")
    hr, hc = r // 2, c // 2
    out = np.empty_like(x)
    out[:hr, :hc] = x[hr:, hc:].conj()
    out[hr:, hc:] = x[:hr, :hc].conj()
    out[:hr, hc:] = x[hr:, :hc].conj()
    out[hr:, :hc] = x[:hr, hc:].conj()
    return out


def doubling_permutation(half_sizes) -> np.ndarray:
    """Index permutation from per-subsystem doubled stacking to canonical.

    A vector stacked as (x1, x1#, x2, x2#, ...) with half sizes
    ``half_sizes`` is reordered to (x1, x2, ..., x1#, x2#, ...).  Returns
    the index array ``p`` such that ``v_canonical = v[p]``.
    """
    half_sizes = [int(s) for s in half_sizes]
    ann, cre = [], []
    off = 0
    for s in half_sizes:
        ann.extend(range(off, off + s))
        cre.extend(range(off + s, off + 2 * s))
        off += 2 * s
    return np.array(ann + cre, dtype=int)


def rank_svd(m, tol: float = RANK_TOL) -> int:
    """Numerical rank: singular values above tol * sigma_max * max(shape)."""
    m = as_matrix(m, "matrix")
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(m.shape)))


def no_imaginary_axis_eigs(a, tol: float) -> bool:
    """True when every eigenvalue of ``a`` keeps |Re| > tol."""
    a = as_matrix(a, "matrix")
    if a.shape[0] == 0:
        return True
    return bool(np.min(np.abs(eigvals(a).real)) > tol)


def min_eigenvalue_pair_gap(a, b=None) -> float:
    """min over (i, j) of |lambda_i(A) + lambda_j(B)| (B defaults to A^dagger)."""
    a = as_matrix(a, "a")
    if a.shape[0] == 0:
        return np.inf
    la = eigvals(a)
    lb = eigvals(as_matrix(b, "b")) if b is not None else la.conj()
    return float(np.min(np.abs(la[:, None] + lb[None, :])))


def solve_sylvester(a, b, c) -> np.ndarray:
    """Solve A X + X B + C = 0 by Schur back-substitution.

    Triangularizes A and B (complex Schur) and solves column-wise.  The
    solvability precheck demands the spectra of A and -B be separated:
    min |lambda_i(A) + lambda_j(B)| above SPECTRAL_GAP_TOL * scale.

    Parameters
    ----------
    a : (n, n) array_like
    b : (q, q) array_like
    c : (n, q) array_like

    Returns
    -------
    x : (n, q) ndarray

    Raises
    ------
    SingularityError
        When an eigenvalue pair nearly cancels; carries the pair.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    c = as_matrix(c, "c")
    n, q = a.shape[0], b.shape[0]
    if a.shape != (n, n) or b.shape != (q, q) or c.shape != (n, q):
        raise DimensionError(
            f"incompatible Sylvester shapes {a.shape}, {b.shape}, {c.shape}"
        )
    if n == 0 or q == 0:
        return np.zeros((n, q), dtype=complex)

    la = eigvals(a)
    lb = eigvals(b)
    sums = np.abs(la[:, None] + lb[None, :])
    i, j = np.unravel_index(np.argmin(sums), sums.shape)
    scale = max(1.0, max_abs(a), max_abs(b))
    if sums[i, j] < SPECTRAL_GAP_TOL * scale:
        raise SingularityError(
            f"spectra of A and -B collide: {la[i]:.6g} + {lb[j]:.6g} ~ 0",
            eigenvalue_pair=(complex(la[i]), complex(lb[j])),
        )

    ta, ua = schur(a, output="complex")
    tb, ub = schur(b, output="complex")
    ct = ua.conj().T @ c @ ub
    y = np.zeros((n, q), dtype=complex)
    eye = np.eye(n, dtype=complex)
    for k in range(q):
        rhs = -(ct[:, k] + y[:, :k] @ tb[:k, k])
        y[:, k] = solve_triangular(ta + tb[k, k] * eye, rhs, lower=False)
    return ua @ y @ ub.conj().T


def solve_lyapunov_hermitian(a, q) -> np.ndarray:
    """Solve A X + X A^dagger + Q = 0 for Hermitian X.

    ``q`` must be Hermitian; the result is symmetrized.  Solvability needs
    lambda_i(A) + conj(lambda_j(A)) != 0, checked as in
    :func:`solve_sylvester`.
    """
    a = as_matrix(a, "a")
    q = require_hermitian(q, "q")
    if q.shape[0] != a.shape[0]:
        raise DimensionError(f"shape mismatch: a {a.shape}, q {q.shape}")
    x = solve_sylvester(a, a.conj().T, q)
    return hermitian_part(x)


@dataclass(frozen=True)
class CareSolution:
    """Outcome of :func:`solve_care_hermitian`.

    ``exists`` is False when no Hermitian solution was found; that is a
    report, not an exception.  ``selection`` documents which invariant
    subspace produced ``x``: "stable-subspace", "alternate-subspace" or
    "lyapunov-degenerate".
    """

    x: np.ndarray | None
    exists: bool
    selection: str
    residual: float
    hermiticity: float


def _care_residual(a, r, q, x) -> float:
    return max_abs(a @ x + x @ a.conj().T + x @ r @ x + q)


def _care_scale(r, q, x) -> float:
    return 1.0 + max_abs(q) + max_abs(x) ** 2 * max_abs(r)


def _reorder_schur_leading(t, u, positions):
    """Move the given diagonal positions (ascending) to the top-left block."""
    trexc, = get_lapack_funcs(("trexc",), (t,))
    for target, src in enumerate(sorted(positions)):
        if src != target:
            t, u, info = trexc(t, u, src + 1, target + 1)
            if info != 0:
                raise SingularityError(f"Schur reordering failed (info={info})")
    return t, u


def solve_care_hermitian(a, r, q, herm_tol: float = 1e-6) -> CareSolution:
    """Hermitian solutions of A X + X A^dagger + X R X + Q = 0.

    The 2n x 2n matrix [[A^dagger, R], [-Q, -A]] has the property that any
    n-dimensional invariant subspace [Z; Y] with invertible Z yields a
    solution X = Y Z^{-1}.  The primary selection takes the n eigenvalues
    with most-negative real parts (ordered Schur); when that basis block is
    singular or the candidate is far from Hermitian, alternative invariant
    subspaces are scanned (eigenvector subsets, capped at C(2n, n) for
    n <= 4).  A zero R degenerates to the Lyapunov path.

    Returns
    -------
    CareSolution
        With ``exists=False`` when no subspace produced a Hermitian solution
        within tolerance.
    """
    a = as_matrix(a, "a")
    r = require_hermitian(r, "r")
    q = require_hermitian(q, "q")
    n = a.shape[0]
    if a.shape != (n, n) or r.shape != (n, n) or q.shape != (n, n):
        raise DimensionError("a, r, q must be square with a common size")
    if n == 0:
        z = np.zeros((0, 0), dtype=complex)
        return CareSolution(z, True, "stable-subspace", 0.0, 0.0)

    if max_abs(r) == 0.0:
        x = solve_lyapunov_hermitian(a, q)
        return CareSolution(
            x, True, "lyapunov-degenerate", _care_residual(a, r, q, x), 0.0
        )

    ham = np.block([[a.conj().T, r], [-q, -a]])

    def _extract(z, y):
        smin = np.linalg.svd(z, compute_uv=False)[-1]
        if smin <= SPECTRAL_GAP_TOL:
            return None
        x = y @ np.linalg.inv(z)
        herm_dev = max_abs(x - x.conj().T) / (1.0 + max_abs(x))
        if herm_dev > herm_tol:
            return None
        x = hermitian_part(x)
        res = _care_residual(a, r, q, x)
        if res > RESIDUAL_TOL * _care_scale(r, q, x) * 100:
            return None
        return x, res, herm_dev

    # Primary path: ordered Schur, most-negative real parts leading.
    t, u = schur(ham, output="complex")
    d = np.diag(t)
    order = np.lexsort((d.imag, d.real))
    try:
        t2, u2 = _reorder_schur_leading(t.copy(), u.copy(), list(order[:n]))
        got = _extract(u2[:n, :n], u2[n:, :n])
        if got is not None:
            x, res, dev = got
            return CareSolution(x, True, "stable-subspace", res, dev)
    except SingularityError:
        pass

    # Alternative subspaces, small problems only.
    if n <= 4:
        lam, vecs = np.linalg.eig(ham)
        by_re = np.lexsort((lam.imag, lam.real))
        combos = sorted(
            itertools.combinations(range(2 * n), n),
            key=lambda s: sum(lam[by_re[k]].real for k in s),
        )
        for combo in combos:
            idx = [by_re[k] for k in combo]
            basis = vecs[:, idx]
            got = _extract(basis[:n, :], basis[n:, :])
            if got is not None:
                x, res, dev = got
                return CareSolution(x, True, "alternate-subspace", res, dev)

    return CareSolution(None, False, "none", np.inf, np.inf)


@dataclass(frozen=True)
class PsdSplit:
    """Sign decomposition M = positive - negative with PSD parts.

    ``positive_factor``/``negative_factor`` satisfy F F^dagger = part with
    column counts equal to the significant rank of each part.
    """

    positive: np.ndarray
    negative: np.ndarray
    positive_factor: np.ndarray
    negative_factor: np.ndarray


def psd_split(m, tol: float = RANK_TOL) -> PsdSplit:
    """Split a Hermitian matrix into PSD parts via its eigendecomposition.

    Eigenvalues with magnitude below tol * max(1, |lambda|_max) are treated
    as zero, so the factors carry exactly the significantly nonzero modes.
    """
    m = require_hermitian(m, "m")
    n = m.shape[0]
    if n == 0:
        z = np.zeros((0, 0), dtype=complex)
        return PsdSplit(z, z, z, z)
    lam, v = np.linalg.eigh(m)
    cut = tol * max(1.0, float(np.max(np.abs(lam))) if lam.size else 0.0)
    pos = lam > cut
    neg = lam < -cut
    positive = (v[:, pos] * lam[pos]) @ v[:, pos].conj().T if pos.any() else np.zeros((n, n), dtype=complex)
    negative = (v[:, neg] * (-lam[neg])) @ v[:, neg].conj().T if neg.any() else np.zeros((n, n), dtype=complex)
    pf = v[:, pos] * np.sqrt(lam[pos]) if pos.any() else np.zeros((n, 0), dtype=complex)
    nf = v[:, neg] * np.sqrt(-lam[neg]) if neg.any() else np.zeros((n, 0), dtype=complex)
    return PsdSplit(hermitian_part(positive), hermitian_part(negative), pf, nf)
