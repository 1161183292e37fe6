"""Linear quantum system models, construction and realizability checks.

A system is a quadruple (F, G, H, K) of QSDE coefficient matrices.  The
general form works on doubled-up matrices acting on stacked mode/creation
coordinates; the annihilation form uses plain complex matrices.  Both are
physically realizable exactly when a commutation matrix certificate exists,
and both directions (physical parameters -> matrices, matrices -> parameters)
live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, GenerationError, NotRealizableError, SingularityError
from .linalg import (
    RANK_TOL,
    RESIDUAL_TOL,
    SPECTRAL_GAP_TOL,
    as_matrix,
    dagger,
    delta_build,
    hermitian_part,
    is_doubled,
    max_abs,
    min_eigenvalue_pair_gap,
    require_hermitian,
    signature_matrix,
    solve_lyapunov_hermitian,
)


def _inertia(h: np.ndarray, tol: float = RANK_TOL) -> tuple[int, int, int]:
    """Counts of (positive, negative, zero) eigenvalues of a Hermitian matrix."""
    if h.shape[0] == 0:
        return (0, 0, 0)
    lam = np.linalg.eigvalsh(h)
    cut = tol * max(1.0, float(np.max(np.abs(lam))))
    return (int(np.sum(lam > cut)), int(np.sum(lam < -cut)), int(np.sum(np.abs(lam) <= cut)))


def is_positive_definite(h, tol: float = RANK_TOL) -> bool:
    """True when the Hermitian matrix has all eigenvalues above the rank cutoff."""
    h = require_hermitian(h, "matrix")
    if h.shape[0] == 0:
        return True
    lam = np.linalg.eigvalsh(h)
    return bool(lam[0] > tol * max(1.0, float(np.max(np.abs(lam)))))


def eig_sum_condition(f, tol: float = SPECTRAL_GAP_TOL) -> bool:
    """True when no eigenvalue pair of F satisfies lambda_i + conj(lambda_j) = 0.

    Under this condition the Lyapunov certificate equation has a unique
    solution, which makes the realizability checks decisive.
    """
    f = as_matrix(f, "f")
    if f.shape[0] != f.shape[1]:
        raise DimensionError(f"f must be square, got {f.shape}")
    return min_eigenvalue_pair_gap(f) > tol * max(1.0, max_abs(f))


def is_hurwitz(f, tol: float = SPECTRAL_GAP_TOL) -> bool:
    """True when every eigenvalue of ``f`` has real part below -tol * scale."""
    f = as_matrix(f, "f")
    if f.shape[0] == 0:
        return True
    lam = np.linalg.eigvals(f)
    return bool(np.max(lam.real) < -tol * max(1.0, max_abs(f)))


@dataclass(frozen=True)
class HamiltonianCoupling:
    """Physical parameters (Theta, M, N) of a linear quantum system.

    ``theta`` is the commutation matrix, ``m`` the quadratic Hamiltonian
    matrix and ``n_coupling`` the field coupling.  ``kind`` selects the
    doubled-up general form or the annihilation-only form; shapes and
    structure are validated on construction.
    """

    theta: np.ndarray
    m: np.ndarray
    n_coupling: np.ndarray
    kind: str

    def __post_init__(self):
        theta = require_hermitian(self.theta, "theta")
        m = require_hermitian(self.m, "m")
        n = as_matrix(self.n_coupling, "n_coupling")
        if self.kind not in ("general", "annihilation"):
            raise DomainError(f"unknown kind {self.kind!r}")
        if self.kind == "general":
            if theta.shape[0] % 2 or n.shape[0] % 2:
                raise DimensionError("general-kind parameters need even dimensions")
            if not (is_doubled(m) and is_doubled(n)):
                raise DomainError("general-kind M and N must be doubled-up")
            pos, neg, zero = _inertia(theta)
            if zero or pos != neg:
                raise DomainError(
                    f"theta must have inertia (n, n), got ({pos}, {neg}, {zero} zero)"
                )
        else:
            if not is_positive_definite(theta):
                raise DomainError("annihilation-kind theta must be positive definite")
        if m.shape[0] != theta.shape[0] or n.shape[1] != theta.shape[0]:
            raise DimensionError(
                f"parameter shapes disagree: theta {theta.shape}, m {m.shape}, "
                f"n {n.shape}"
            )
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_coupling", n)

    @property
    def n_modes(self) -> int:
        d = self.theta.shape[0]
        return d // 2 if self.kind == "general" else d

    @property
    def m_fields(self) -> int:
        d = self.n_coupling.shape[0]
        return d // 2 if self.kind == "general" else d


@dataclass(frozen=True)
class GeneralQSys:
    """Doubled-up QSDE coefficients (F, G, H, K) with mode/field counts.

    ``n_modes`` and ``m_fields`` default to the values implied by the matrix
    shapes; pass them explicitly to cross-check an external dimension record.
    """

    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    k: np.ndarray
    n_modes: int = -1
    m_fields: int = -1

    def __post_init__(self):
        f = as_matrix(self.f, "f")
        h = as_matrix(self.h, "h")
        if self.n_modes < 0:
            object.__setattr__(self, "n_modes", f.shape[0] // 2)
        if self.m_fields < 0:
            object.__setattr__(self, "m_fields", h.shape[0] // 2)
        n, m = self.n_modes, self.m_fields
        g = as_matrix(self.g, "g")
        k = as_matrix(self.k, "k")
        shapes = {
            "f": (f, (2 * n, 2 * n)),
            "g": (g, (2 * n, 2 * m)),
            "h": (h, (2 * m, 2 * n)),
            "k": (k, (2 * m, 2 * m)),
        }
        for name, (mat, want) in shapes.items():
            if mat.shape != want:
                raise DimensionError(f"{name} must have shape {want}, got {mat.shape}")
            if not is_doubled(mat):
                raise DomainError(f"{name} lacks doubled-up structure")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class AnnihilationQSys:
    """Annihilation-operator QSDE coefficients (F, G, H, K), plain matrices.

    ``n_modes`` and ``m_fields`` default to the values implied by the matrix
    shapes; pass them explicitly to cross-check an external dimension record.
    """

    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    k: np.ndarray
    n_modes: int = -1
    m_fields: int = -1

    def __post_init__(self):
        f = as_matrix(self.f, "f")
        h = as_matrix(self.h, "h")
        if self.n_modes < 0:
            object.__setattr__(self, "n_modes", f.shape[0])
        if self.m_fields < 0:
            object.__setattr__(self, "m_fields", h.shape[0])
        n, m = self.n_modes, self.m_fields
        g = as_matrix(self.g, "g")
        k = as_matrix(self.k, "k")
        shapes = {"f": (f, (n, n)), "g": (g, (n, m)), "h": (h, (m, n)), "k": (k, (m, m))}
        for name, (mat, want) in shapes.items():
            if mat.shape != want:
                raise DimensionError(f"{name} must have shape {want}, got {mat.shape}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class PrVerdict:
    """Outcome of a physical-realizability check.

    ``indeterminate`` marks the case where the certificate equation has a
    non-unique solution family that the checker could not decide; it is
    distinct from a definite failure.  ``realizable`` True requires all
    residuals within tolerance and ``theta`` present.
    """

    realizable: bool
    theta: np.ndarray | None
    residuals: dict[str, float] = field(default_factory=dict)
    failure_reason: str | None = None
    indeterminate: bool = False


def realize_general(p: HamiltonianCoupling) -> GeneralQSys:
    """Build the doubled-up system realizing the parameters (Theta, M, N).

    F = -i Theta M - (1/2) Theta N^dagger J N, G = -Theta N^dagger J, H = N,
    K = I.  The output always carries p.theta as its realizability
    certificate.
    """
    if p.kind != "general":
        raise DomainError(f"expected general-kind parameters, got {p.kind!r}")
    theta, m, n = p.theta, p.m, p.n_coupling
    j = signature_matrix(p.m_fields)
    f = -1j * theta @ m - 0.5 * theta @ dagger(n) @ j @ n
    g = -theta @ dagger(n) @ j
    k = np.eye(2 * p.m_fields, dtype=complex)
    return GeneralQSys(f=f, g=g, h=n.copy(), k=k, n_modes=p.n_modes, m_fields=p.m_fields)


def realize_annihilation(p: HamiltonianCoupling) -> AnnihilationQSys:
    """Build the annihilation-operator system realizing (Theta, M, N).

    F = Theta (-i M - (1/2) N^dagger N), G = -Theta N^dagger, H = N, K = I.
    """
    if p.kind != "annihilation":
        raise DomainError(f"expected annihilation-kind parameters, got {p.kind!r}")
    theta, m, n = p.theta, p.m, p.n_coupling
    f = theta @ (-1j * m - 0.5 * dagger(n) @ n)
    g = -theta @ dagger(n)
    k = np.eye(p.m_fields, dtype=complex)
    return AnnihilationQSys(f=f, g=g, h=n.copy(), k=k, n_modes=p.n_modes, m_fields=p.m_fields)


def _coupling_residual(g, theta, h, j=None) -> float:
    """Residual of G = -Theta H^dagger (J) against its scale."""
    rhs = theta @ dagger(h)
    if j is not None:
        rhs = rhs @ j
    return max_abs(g + rhs)


def _hermitian_basis(n: int) -> list[np.ndarray]:
    """Real basis of the n x n Hermitian matrices."""
    basis = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1j
            e[j, i] = -1j
            basis.append(e)
    return basis


def _certificate_family_annihilation(f, g, h, tol):
    """Affine family of Hermitian Theta solving both certificate equations.

    Stacks F Theta + Theta F^dagger = -G G^dagger and Theta H^dagger = -G as
    one real least-squares problem over the Hermitian parameterization.
    Returns (theta0, null_basis, residual); the family is
    theta0 + span(null_basis).
    """
    n = f.shape[0]
    basis = _hermitian_basis(n)

    def column(b):
        lyap = f @ b + b @ dagger(f)
        coup = b @ dagger(h)
        vec = np.concatenate([lyap.ravel(), coup.ravel()])
        return np.concatenate([vec.real, vec.imag])

    a_mat = np.column_stack([column(b) for b in basis])
    rhs_c = np.concatenate([(-(g @ dagger(g))).ravel(), (-g).ravel()])
    rhs = np.concatenate([rhs_c.real, rhs_c.imag])
    sol, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    theta0 = sum(c * b for c, b in zip(sol, basis))
    residual = float(np.max(np.abs(a_mat @ sol - rhs))) if rhs.size else 0.0

    _, svals, vt = np.linalg.svd(a_mat)
    smax = svals[0] if svals.size else 0.0
    null = []
    for idx in range(len(basis)):
        if idx >= svals.size or svals[idx] <= RANK_TOL * max(1.0, smax) * max(a_mat.shape):
            direction = vt[idx].conj()
            null.append(sum(c * b for c, b in zip(direction, basis)))
    return hermitian_part(theta0), [hermitian_part(b) for b in null], residual


def _search_positive_definite(theta0, null_basis):
    """Pick a positive definite member of the affine certificate family.

    Prefers the member closest to the identity (Frobenius projection), which
    makes the no-coupling degenerate case return the canonical Theta = I;
    falls back to a coarse grid over the family parameters.
    """
    if null_basis:
        n = theta0.shape[0]
        cols = np.column_stack(
            [np.concatenate([b.ravel().real, b.ravel().imag]) for b in null_basis]
        )
        gap = (np.eye(n, dtype=complex) - theta0).ravel()
        rhs = np.concatenate([gap.real, gap.imag])
        coeff, *_ = np.linalg.lstsq(cols, rhs, rcond=None)
        nearest = hermitian_part(
            theta0 + sum(c * b for c, b in zip(coeff, null_basis))
        )
        if is_positive_definite(nearest):
            return nearest
    if is_positive_definite(theta0):
        return theta0
    if not null_basis or len(null_basis) > 2:
        return None
    grids = [np.concatenate([np.linspace(-20.0, 20.0, 161)]) for _ in null_basis]
    if len(null_basis) == 1:
        for t in grids[0]:
            cand = theta0 + t * null_basis[0]
            if is_positive_definite(cand):
                return cand
    else:
        coarse = np.linspace(-10.0, 10.0, 41)
        for t1 in coarse:
            for t2 in coarse:
                cand = theta0 + t1 * null_basis[0] + t2 * null_basis[1]
                if is_positive_definite(cand):
                    return cand
    return None


def check_pr_general(s: GeneralQSys, tol: float = RESIDUAL_TOL) -> PrVerdict:
    """Decide physical realizability of a doubled-up system.

    Requires K = I, a Hermitian certificate Theta solving
    F Theta + Theta F^dagger + G J G^dagger = 0 with inertia (n, n), and the
    coupling identity G = -Theta H^dagger J.  When the eigenvalue-sum
    condition fails the certificate is non-unique and the verdict is
    indeterminate.
    """
    f, g, h, k = s.f, s.g, s.h, s.k
    j = signature_matrix(s.m_fields)
    residuals: dict[str, float] = {}

    residuals["feedthrough"] = max_abs(k - np.eye(2 * s.m_fields))
    if residuals["feedthrough"] > tol:
        return PrVerdict(False, None, residuals, "feedthrough")

    if not eig_sum_condition(f):
        return PrVerdict(False, None, residuals, "eigenvalue-sum-degenerate", indeterminate=True)

    q = hermitian_part(g @ j @ dagger(g))
    try:
        theta = solve_lyapunov_hermitian(f, q)
    except SingularityError:
        return PrVerdict(False, None, residuals, "eigenvalue-sum-degenerate", indeterminate=True)

    residuals["lyapunov"] = max_abs(f @ theta + theta @ dagger(f) + q)
    if residuals["lyapunov"] > tol * (1.0 + max_abs(q)):
        return PrVerdict(False, None, residuals, "lyapunov")

    residuals["coupling"] = _coupling_residual(g, theta, h, j)
    scale = 1.0 + max_abs(g) + max_abs(theta) * max_abs(h)
    if residuals["coupling"] > tol * scale:
        return PrVerdict(False, None, residuals, "coupling")

    pos, neg, zero = _inertia(theta)
    if zero or pos != neg:
        residuals["inertia_defect"] = float(zero + abs(pos - neg))
        return PrVerdict(False, None, residuals, "theta-form")

    return PrVerdict(True, theta, residuals, None)


def check_pr_annihilation(s: AnnihilationQSys, tol: float = RESIDUAL_TOL) -> PrVerdict:
    """Decide physical realizability of an annihilation-operator system.

    Same shape as the general check with J replaced by the identity and the
    certificate required positive definite.  When the eigenvalue-sum
    condition fails, small systems (n <= 2) fall back to a parameterized
    search of the affine certificate family; an undecided search reports
    indeterminate rather than false.
    """
    f, g, h, k = s.f, s.g, s.h, s.k
    residuals: dict[str, float] = {}

    residuals["feedthrough"] = max_abs(k - np.eye(s.m_fields))
    if residuals["feedthrough"] > tol:
        return PrVerdict(False, None, residuals, "feedthrough")

    q = hermitian_part(g @ dagger(g))
    coupling_scale = 1.0 + max_abs(g)

    if eig_sum_condition(f):
        try:
            theta = solve_lyapunov_hermitian(f, q)
        except SingularityError:
            theta = None
        if theta is None:
            return PrVerdict(False, None, residuals, "eigenvalue-sum-degenerate", indeterminate=True)
        residuals["lyapunov"] = max_abs(f @ theta + theta @ dagger(f) + q)
        if residuals["lyapunov"] > tol * (1.0 + max_abs(q)):
            return PrVerdict(False, None, residuals, "lyapunov")
        residuals["coupling"] = _coupling_residual(g, theta, h)
        if residuals["coupling"] > tol * (coupling_scale + max_abs(theta) * max_abs(h)):
            return PrVerdict(False, None, residuals, "coupling")
        if not is_positive_definite(theta):
            return PrVerdict(False, None, residuals, "theta-form")
        return PrVerdict(True, theta, residuals, None)

    if s.n_modes > 2:
        return PrVerdict(False, None, residuals, "eigenvalue-sum-degenerate", indeterminate=True)

    theta0, null_basis, family_residual = _certificate_family_annihilation(f, g, h, tol)
    scale = 1.0 + max_abs(q) + max_abs(g)
    if family_residual > tol * scale:
        residuals["certificate_family"] = family_residual
        return PrVerdict(False, None, residuals, "coupling")
    theta = _search_positive_definite(theta0, null_basis)
    if theta is None:
        residuals["certificate_family"] = family_residual
        return PrVerdict(
            False, None, residuals, "eigenvalue-sum-degenerate", indeterminate=True
        )
    residuals["lyapunov"] = max_abs(f @ theta + theta @ dagger(f) + q)
    residuals["coupling"] = _coupling_residual(g, theta, h)
    ok = residuals["lyapunov"] <= tol * (1.0 + max_abs(q)) and residuals[
        "coupling"
    ] <= tol * (coupling_scale + max_abs(theta) * max_abs(h))
    if not ok:
        return PrVerdict(False, None, residuals, "coupling")
    return PrVerdict(True, theta, residuals, None)


def extract_params(s) -> HamiltonianCoupling:
    """Recover the physical parameters (Theta, M, N) from a realizable system.

    Inverts the construction formulas: N = H, Theta from the realizability
    certificate, M = i Theta^{-1} F + (i/2) N^dagger J N (general) or
    M = i Theta^{-1} F + (i/2) N^dagger N (annihilation).  The recovered M
    must be Hermitian before symmetrization (deviation <= 1e-6 relative) and
    re-substitution must reproduce the input within RESIDUAL_TOL.

    Raises
    ------
    NotRealizableError
        When the realizability check fails or is indeterminate.
    DomainError
        When the recovered M is materially non-Hermitian or the round trip
        fails, which indicates an input outside the checker's tolerances.
    """
    if isinstance(s, GeneralQSys):
        kind = "general"
        verdict = check_pr_general(s)
    elif isinstance(s, AnnihilationQSys):
        kind = "annihilation"
        verdict = check_pr_annihilation(s)
    else:
        raise DomainError(f"expected a quantum system model, got {type(s).__name__}")
    if not verdict.realizable:
        reason = verdict.failure_reason or "unknown"
        raise NotRealizableError(
            f"cannot extract parameters: system is not physically realizable ({reason})",
            residuals=verdict.residuals,
        )

    theta = verdict.theta
    n = s.h.copy()
    theta_inv = np.linalg.inv(theta)
    if kind == "general":
        j = signature_matrix(s.m_fields)
        m_raw = 1j * theta_inv @ s.f + 0.5j * dagger(n) @ j @ n
    else:
        m_raw = 1j * theta_inv @ s.f + 0.5j * dagger(n) @ n
    herm_dev = max_abs(m_raw - dagger(m_raw)) / (1.0 + max_abs(m_raw))
    if herm_dev > 1e-6:
        raise DomainError(
            f"recovered Hamiltonian matrix is not Hermitian (deviation {herm_dev:.3e})"
        )
    m = hermitian_part(m_raw)
    params = HamiltonianCoupling(theta=theta, m=m, n_coupling=n, kind=kind)

    rebuilt = realize_general(params) if kind == "general" else realize_annihilation(params)
    scale = 1.0 + max_abs(s.f)
    round_trip = max(
        max_abs(rebuilt.f - s.f),
        max_abs(rebuilt.g - s.g),
        max_abs(rebuilt.h - s.h),
        max_abs(rebuilt.k - s.k),
    )
    if round_trip > RESIDUAL_TOL * scale * 10:
        raise DomainError(
            f"parameter extraction round trip failed (deviation {round_trip:.3e})"
        )
    return params


def _random_complex(rng, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def _random_doubled_hermitian(rng, half: int) -> np.ndarray:
    m1 = hermitian_part(_random_complex(rng, half, half))
    x = _random_complex(rng, half, half)
    m2 = 0.5 * (x + x.T)
    return delta_build(m1, m2).body


def random_pr_system(
    n: int,
    m: int,
    seed: int,
    kind: str = "annihilation",
    hurwitz_required: bool = False,
):
    """Draw a seeded random physically realizable system.

    Parameters come from unit complex Gaussians: Hermitian M, coupling N and
    an invertible T giving Theta = T J T^dagger (general) or
    Theta = T T^dagger (annihilation).  Draws failing the eigenvalue-sum
    condition, near-singular T, or (with ``hurwitz_required``) stability are
    rejected and redrawn, preserving exact realizability of the output.

    Raises
    ------
    GenerationError
        After 16 rejected draws.
    """
    if n < 1 or m < 1:
        raise DimensionError("need n >= 1 and m >= 1")
    if kind not in ("general", "annihilation"):
        raise DomainError(f"unknown kind {kind!r}")
    rng = np.random.default_rng(seed)
    for _ in range(16):
        if kind == "general":
            t = delta_build(_random_complex(rng, n, n), _random_complex(rng, n, n)).body
            svals = np.linalg.svd(t, compute_uv=False)
            if svals[-1] < 1e-3 * svals[0]:
                continue
            j_n = signature_matrix(n)
            theta = hermitian_part(t @ j_n @ dagger(t))
            m_mat = _random_doubled_hermitian(rng, n)
            n_mat = delta_build(_random_complex(rng, m, n), _random_complex(rng, m, n)).body
            params = HamiltonianCoupling(theta=theta, m=m_mat, n_coupling=n_mat, kind="general")
            sys = realize_general(params)
        else:
            t = _random_complex(rng, n, n)
            svals = np.linalg.svd(t, compute_uv=False)
            if svals[-1] < 1e-3 * svals[0]:
                continue
            theta = hermitian_part(t @ dagger(t))
            m_mat = hermitian_part(_random_complex(rng, n, n))
            n_mat = _random_complex(rng, m, n)
            params = HamiltonianCoupling(theta=theta, m=m_mat, n_coupling=n_mat, kind="annihilation")
            sys = realize_annihilation(params)
        if not eig_sum_condition(sys.f):
            continue
        if hurwitz_required and not is_hurwitz(sys.f, tol=1e-6):
            continue
        return sys
    raise GenerationError(
        f"no acceptable random system in 16 draws (kind={kind}, n={n}, m={m}, seed={seed})"
    )
