"""Plant and controller models, loop composition and noise synthesis.

The plant exposes noise inputs W, control inputs U and measured-field
outputs Y; the controller consumes Y plus its own noise W-tilde and returns
U.  This module assembles the closed loop, the square augmented forms on
which realizability certificates live, the modified (strictly proper)
plant/controller pair, and the Riccati-based synthesis of controller noise
channels that makes an arbitrary controller triple physically realizable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    NotAugmentableError,
    NotRealizableError,
)
from .linalg import (
    RANK_TOL,
    RESIDUAL_TOL,
    STRUCTURE_TOL,
    as_matrix,
    conj_swap,
    dagger,
    doubling_permutation,
    hermitian_part,
    is_doubled,
    max_abs,
    psd_split,
    signature_matrix,
    solve_care_hermitian,
    solve_lyapunov_hermitian,
)
from .systems import (
    AnnihilationQSys,
    GeneralQSys,
    PrVerdict,
    check_pr_annihilation,
    check_pr_general,
    eig_sum_condition,
    is_hurwitz,
    is_positive_definite,
    random_pr_system,
)
from .transfer import StateSpaceTF, hinf_norm


def _stack_cols_doubled(blocks: list[np.ndarray]) -> np.ndarray:
    """Concatenate doubled matrices along columns, keeping doubled order."""
    ann = [b[:, : b.shape[1] // 2] for b in blocks]
    cre = [b[:, b.shape[1] // 2 :] for b in blocks]
    return np.hstack(ann + cre)


def _stack_rows_doubled(blocks: list[np.ndarray]) -> np.ndarray:
    """Concatenate doubled matrices along rows, keeping doubled order."""
    ann = [b[: b.shape[0] // 2, :] for b in blocks]
    cre = [b[b.shape[0] // 2 :, :] for b in blocks]
    return np.vstack(ann + cre)


def _identity_pad(rows: int, cols: int) -> np.ndarray:
    """The [I, 0] block of shape (rows, cols); needs cols >= rows."""
    out = np.zeros((rows, cols), dtype=complex)
    out[:, :rows] = np.eye(rows)
    return out


@dataclass(frozen=True)
class CostOutput:
    """Performance output Z = C x + D u over plant state and control."""

    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        c = as_matrix(self.c, "cost c")
        d = as_matrix(self.d, "cost d")
        if c.shape[0] != d.shape[0]:
            raise DimensionError(
                f"cost blocks disagree on output count: c {c.shape}, d {d.shape}"
            )
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class PlantModel:
    """Plant with split inputs (noise W, control U) and measured output Y.

    There is structurally no feedthrough from the control field into Y; the
    noise feedthrough ``k`` is m_y x m_w (doubled for the general kind).
    """

    kind: str
    f: np.ndarray
    g_w: np.ndarray
    g_u: np.ndarray
    h: np.ndarray
    k: np.ndarray
    cost: CostOutput | None = None

    def __post_init__(self):
        if self.kind not in ("general", "annihilation"):
            raise DomainError(f"unknown kind {self.kind!r}")
        names = ("f", "g_w", "g_u", "h", "k")
        mats = [as_matrix(getattr(self, nm), nm) for nm in names]
        f, g_w, g_u, h, k = mats
        d = 2 if self.kind == "general" else 1
        n = f.shape[0] // d
        if f.shape != (d * n, d * n):
            raise DimensionError(f"f must be square, got {f.shape}")
        if g_w.shape[0] != d * n or g_u.shape[0] != d * n or h.shape[1] != d * n:
            raise DimensionError("plant blocks disagree on the state dimension")
        if k.shape != (h.shape[0], g_w.shape[1]):
            raise DimensionError(
                f"k must map noise to output, expected {(h.shape[0], g_w.shape[1])}, "
                f"got {k.shape}"
            )
        if self.kind == "general":
            for nm, mat in zip(names, mats):
                if mat.shape[0] % 2 or mat.shape[1] % 2:
                    raise DimensionError(f"general-kind {nm} needs even dimensions")
                if not is_doubled(mat):
                    raise DomainError(f"general-kind {nm} lacks doubled-up structure")
        if self.cost is not None:
            dd = self.cost
            if dd.c.shape[1] != d * n or dd.d.shape[1] != g_u.shape[1]:
                raise DimensionError(
                    f"cost blocks do not match the plant: c {dd.c.shape}, d {dd.d.shape}"
                )
        for nm, mat in zip(names, mats):
            object.__setattr__(self, nm, mat)

    @property
    def _half(self) -> int:
        return 2 if self.kind == "general" else 1

    @property
    def n_modes(self) -> int:
        return self.f.shape[0] // self._half

    @property
    def m_w(self) -> int:
        return self.g_w.shape[1] // self._half

    @property
    def m_u(self) -> int:
        return self.g_u.shape[1] // self._half

    @property
    def m_y(self) -> int:
        return self.h.shape[0] // self._half

    def with_cost(self, cost: CostOutput) -> "PlantModel":
        return replace(self, cost=cost)


@dataclass(frozen=True)
class ControllerModel:
    """Controller with noise input W-tilde, measurement input Y, output U."""

    kind: str
    f_c: np.ndarray
    g_cw: np.ndarray
    g_cy: np.ndarray
    h_c: np.ndarray
    k_cw: np.ndarray
    k_cy: np.ndarray

    def __post_init__(self):
        if self.kind not in ("general", "annihilation"):
            raise DomainError(f"unknown kind {self.kind!r}")
        names = ("f_c", "g_cw", "g_cy", "h_c", "k_cw", "k_cy")
        mats = [as_matrix(getattr(self, nm), nm) for nm in names]
        f_c, g_cw, g_cy, h_c, k_cw, k_cy = mats
        d = 2 if self.kind == "general" else 1
        n_c = f_c.shape[0]
        if f_c.shape != (n_c, n_c):
            raise DimensionError(f"f_c must be square, got {f_c.shape}")
        if g_cw.shape[0] != n_c or g_cy.shape[0] != n_c or h_c.shape[1] != n_c:
            raise DimensionError("controller blocks disagree on the state dimension")
        if k_cw.shape != (h_c.shape[0], g_cw.shape[1]):
            raise DimensionError("k_cw shape inconsistent with h_c and g_cw")
        if k_cy.shape != (h_c.shape[0], g_cy.shape[1]):
            raise DimensionError("k_cy shape inconsistent with h_c and g_cy")
        if self.kind == "general":
            for nm, mat in zip(names, mats):
                if mat.shape[0] % 2 or mat.shape[1] % 2:
                    raise DimensionError(f"general-kind {nm} needs even dimensions")
                if not is_doubled(mat):
                    raise DomainError(f"general-kind {nm} lacks doubled-up structure")
        for nm, mat in zip(names, mats):
            object.__setattr__(self, nm, mat)

    @property
    def _half(self) -> int:
        return 2 if self.kind == "general" else 1

    @property
    def n_modes(self) -> int:
        return self.f_c.shape[0] // self._half

    @property
    def m_wt(self) -> int:
        return self.g_cw.shape[1] // self._half

    @property
    def m_y(self) -> int:
        return self.g_cy.shape[1] // self._half

    @property
    def m_u(self) -> int:
        return self.h_c.shape[0] // self._half


def trivial_controller(m_y: int, m_u: int, extra_noise: int = 0) -> ControllerModel:
    """The static controller dU = dW-tilde (annihilation kind, n_c = 0).

    ``extra_noise`` appends unused noise channels; the feedthrough keeps the
    identity in its first block.
    """
    m_wt = m_u + extra_noise
    return ControllerModel(
        kind="annihilation",
        f_c=np.zeros((0, 0)),
        g_cw=np.zeros((0, m_wt)),
        g_cy=np.zeros((0, m_y)),
        h_c=np.zeros((m_u, 0)),
        k_cw=_identity_pad(m_u, m_wt),
        k_cy=np.zeros((m_u, m_y)),
    )


def static_controller(k_cy, k_cw) -> ControllerModel:
    """A purely static annihilation-kind controller from its feedthroughs."""
    k_cy = as_matrix(k_cy, "k_cy")
    k_cw = as_matrix(k_cw, "k_cw")
    if k_cy.shape[0] != k_cw.shape[0]:
        raise DimensionError("k_cy and k_cw must agree on the output count")
    m_u = k_cy.shape[0]
    return ControllerModel(
        kind="annihilation",
        f_c=np.zeros((0, 0)),
        g_cw=np.zeros((0, k_cw.shape[1])),
        g_cy=np.zeros((0, k_cy.shape[1])),
        h_c=np.zeros((m_u, 0)),
        k_cw=k_cw,
        k_cy=k_cy,
    )


@dataclass(frozen=True)
class PlantAugmentation:
    """Square realizable completion of a plant, with its certificate."""

    system: AnnihilationQSys | GeneralQSys
    theta: np.ndarray
    h_tilde: np.ndarray
    verdict: PrVerdict


def augment_plant(p: PlantModel) -> PlantAugmentation:
    """Complete the plant with unused outputs into a square realizable system.

    Solves the certificate equation over all inputs (W, U), checks that the
    given output rows and feedthrough match the coupling identity, and
    returns the augmented system together with the extra output rows.

    Raises
    ------
    NotAugmentableError
        When no valid certificate exists or the given rows mismatch; carries
        the offending residuals.
    """
    if p.kind == "annihilation":
        g_a = np.hstack([p.g_w, p.g_u])
        if not eig_sum_condition(p.f):
            raise NotAugmentableError(
                "certificate equation is degenerate (eigenvalue-sum condition fails)"
            )
        q = hermitian_part(g_a @ dagger(g_a))
        theta = solve_lyapunov_hermitian(p.f, q)
        if not is_positive_definite(theta):
            raise NotAugmentableError(
                "no positive definite certificate for the augmented plant",
                residuals={"theta_min_eig": float(np.min(np.linalg.eigvalsh(theta)))},
            )
        h_full = -dagger(g_a) @ np.linalg.inv(theta)
        row_dev = max_abs(h_full[: p.m_y] - p.h)
        k_dev = max_abs(p.k - _identity_pad(p.m_y, p.m_w))
        scale = 1.0 + max_abs(p.h)
        if row_dev > RESIDUAL_TOL * scale or k_dev > RESIDUAL_TOL:
            raise NotAugmentableError(
                "plant output rows do not match the coupling identity",
                residuals={"row_mismatch": row_dev, "feedthrough": k_dev},
            )
        h_tilde = h_full[p.m_y :]
        h_aug = np.vstack([p.h, h_tilde])
        m_tot = p.m_w + p.m_u
        system = AnnihilationQSys(
            f=p.f, g=g_a, h=h_aug, k=np.eye(m_tot), n_modes=p.n_modes, m_fields=m_tot
        )
        return PlantAugmentation(
            system=system, theta=theta, h_tilde=h_tilde, verdict=check_pr_annihilation(system)
        )

    g_a = _stack_cols_doubled([p.g_w, p.g_u])
    m_tot = p.m_w + p.m_u
    j = signature_matrix(m_tot)
    if not eig_sum_condition(p.f):
        raise NotAugmentableError(
            "certificate equation is degenerate (eigenvalue-sum condition fails)"
        )
    q = hermitian_part(g_a @ j @ dagger(g_a))
    theta = solve_lyapunov_hermitian(p.f, q)
    lam = np.linalg.eigvalsh(theta)
    cut = RANK_TOL * max(1.0, float(np.max(np.abs(lam))))
    pos, neg = int(np.sum(lam > cut)), int(np.sum(lam < -cut))
    if pos != p.n_modes or neg != p.n_modes:
        raise NotAugmentableError(
            "certificate lacks the required inertia",
            residuals={"inertia_positive": float(pos), "inertia_negative": float(neg)},
        )
    h_full = -j @ dagger(g_a) @ np.linalg.inv(theta)
    row_dev = max(
        max_abs(h_full[: p.m_y] - p.h[: p.m_y]),
        max_abs(h_full[m_tot : m_tot + p.m_y] - p.h[p.m_y :]),
    )
    k_want = np.zeros((2 * p.m_y, 2 * p.m_w), dtype=complex)
    k_want[: p.m_y, : p.m_w] = _identity_pad(p.m_y, p.m_w)
    k_want[p.m_y :, p.m_w :] = _identity_pad(p.m_y, p.m_w)
    k_dev = max_abs(p.k - k_want)
    if row_dev > RESIDUAL_TOL * (1.0 + max_abs(p.h)) or k_dev > RESIDUAL_TOL:
        raise NotAugmentableError(
            "plant output rows do not match the coupling identity",
            residuals={"row_mismatch": row_dev, "feedthrough": k_dev},
        )
    h_tilde = np.vstack([h_full[p.m_y : m_tot], h_full[m_tot + p.m_y :]])
    h_aug = _stack_rows_doubled([p.h, h_tilde])
    system = GeneralQSys(
        f=p.f,
        g=g_a,
        h=h_aug,
        k=np.eye(2 * m_tot, dtype=complex),
        n_modes=p.n_modes,
        m_fields=m_tot,
    )
    return PlantAugmentation(
        system=system, theta=theta, h_tilde=h_tilde, verdict=check_pr_general(system)
    )


@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop interconnection from all noises (W, W-tilde) to the cost."""

    system: StateSpaceTF
    state_matrix: np.ndarray
    channel_map: dict[str, tuple[int, int]]
    internally_stable: bool


def _check_loop_dims(p: PlantModel, c: ControllerModel) -> None:
    if p.kind != c.kind:
        raise DimensionError(f"kind mismatch: plant {p.kind}, controller {c.kind}")
    if p.m_y != c.m_y or p.m_u != c.m_u:
        raise DimensionError(
            f"channel mismatch: plant (m_y={p.m_y}, m_u={p.m_u}), "
            f"controller (m_y={c.m_y}, m_u={c.m_u})"
        )


def close_loop(p: PlantModel, c: ControllerModel) -> ClosedLoop:
    """Interconnect plant and controller.

    States stack as (plant, controller) and noises as (W, W-tilde); the
    plant has no control feedthrough into Y, so the loop is always well
    posed.  In the general kind the result is permuted to canonical
    doubled-up ordering.  Cost rows come from the plant's cost block through
    the controller output equation; absent a cost block the output is empty.
    """
    _check_loop_dims(p, c)
    a = np.block(
        [
            [p.f + p.g_u @ c.k_cy @ p.h, p.g_u @ c.h_c],
            [c.g_cy @ p.h, c.f_c],
        ]
    )
    b = np.block(
        [
            [p.g_w + p.g_u @ c.k_cy @ p.k, p.g_u @ c.k_cw],
            [c.g_cy @ p.k, c.g_cw],
        ]
    )
    half = p._half
    n_states = a.shape[0]
    if p.cost is not None:
        cz = np.hstack([p.cost.c + p.cost.d @ c.k_cy @ p.h, p.cost.d @ c.h_c])
        dz = np.hstack([p.cost.d @ c.k_cy @ p.k, p.cost.d @ c.k_cw])
    else:
        cz = np.zeros((0, n_states), dtype=complex)
        dz = np.zeros((0, b.shape[1]), dtype=complex)

    if p.kind == "general":
        ps = doubling_permutation([p.n_modes, c.n_modes])
        pi = doubling_permutation([p.m_w, c.m_wt])
        a = a[np.ix_(ps, ps)]
        b = b[np.ix_(ps, pi)]
        cz = cz[:, ps]
        dz = dz[:, pi]
        channel_map = {
            "w": (0, p.m_w),
            "w_tilde": (p.m_w, p.m_w + c.m_wt),
            "w_conj": (p.m_w + c.m_wt, 2 * p.m_w + c.m_wt),
            "w_tilde_conj": (2 * p.m_w + c.m_wt, 2 * (p.m_w + c.m_wt)),
        }
    else:
        channel_map = {"w": (0, p.m_w), "w_tilde": (p.m_w, p.m_w + c.m_wt)}

    return ClosedLoop(
        system=StateSpaceTF(a=a, b=b, c=cz, d=dz),
        state_matrix=a,
        channel_map=channel_map,
        internally_stable=is_hurwitz(a),
    )


def gamma_cl(p: PlantModel, c: ControllerModel) -> StateSpaceTF:
    """Closed-loop transfer function from all noises to the cost output."""
    if p.cost is None:
        raise DomainError("plant has no cost output block")
    return close_loop(p, c).system


def modified_forms(p: PlantModel, c: ControllerModel) -> tuple[PlantModel, ControllerModel]:
    """Fold the controller feedthroughs into the plant.

    The returned plant absorbs K_cy through its state/noise matrices and
    takes the controller noise W-tilde as additional noise columns; the
    returned controller is strictly proper (zero feedthroughs).  The closed
    loop is unchanged once the shared W-tilde channels of the pair are
    identified with each other.
    """
    _check_loop_dims(p, c)
    if c.m_wt < c.m_u:
        raise DimensionError(
            f"need at least as many controller noises as controls "
            f"(m_wt={c.m_wt} < m_u={c.m_u})"
        )
    f_mod = p.f + p.g_u @ c.k_cy @ p.h
    folded = p.g_w + p.g_u @ c.k_cy @ p.k
    extra = p.g_u @ c.k_cw
    if p.kind == "general":
        g_w_mod = _stack_cols_doubled([folded, extra])
        k_mod = _stack_cols_doubled(
            [p.k, np.zeros((p.k.shape[0], extra.shape[1]), dtype=complex)]
        )
    else:
        g_w_mod = np.hstack([folded, extra])
        k_mod = np.hstack([p.k, np.zeros((p.k.shape[0], extra.shape[1]), dtype=complex)])
    plant_mod = PlantModel(
        kind=p.kind, f=f_mod, g_w=g_w_mod, g_u=p.g_u, h=p.h, k=k_mod, cost=p.cost
    )
    ctrl_mod = ControllerModel(
        kind=c.kind,
        f_c=c.f_c,
        g_cw=c.g_cw,
        g_cy=c.g_cy,
        h_c=c.h_c,
        k_cw=np.zeros_like(c.k_cw),
        k_cy=np.zeros_like(c.k_cy),
    )
    return plant_mod, ctrl_mod


@dataclass(frozen=True)
class SynthesisResult:
    """Outcome of controller noise synthesis."""

    controller: ControllerModel
    theta: np.ndarray
    extra_channels: int
    zero_noise: bool
    admissibility_norm: float | None = None


def synth_noise_annihilation(f_c, g_cy, h_c, rel_tol: float = 1e-6) -> SynthesisResult:
    """Make an annihilation-kind controller triple physically realizable.

    Admissibility requires F_c Hurwitz and the H-infinity norm of
    H_c (sI - F_c)^{-1} at most 1.  The bounded-real Riccati
    F_c Theta + Theta F_c^dagger + Theta H_c^dagger H_c Theta
    + G_cy G_cy^dagger = 0 is tried first; a positive definite solution
    means no extra noise.  Otherwise the inflated equation (constant term
    + I) supplies a positive certificate and the residual is factored into
    the fewest extra noise channels.

    Raises
    ------
    NotRealizableError
        When either admissibility prong fails.
    """
    f_c = as_matrix(f_c, "f_c")
    g_cy = as_matrix(g_cy, "g_cy")
    h_c = as_matrix(h_c, "h_c")
    n_c = f_c.shape[0]
    if f_c.shape != (n_c, n_c) or g_cy.shape[0] != n_c or h_c.shape[1] != n_c:
        raise DimensionError("controller triple shapes are inconsistent")
    m_u, m_y = h_c.shape[0], g_cy.shape[1]

    if n_c == 0:
        return SynthesisResult(
            controller=trivial_controller(m_y, m_u),
            theta=np.zeros((0, 0), dtype=complex),
            extra_channels=0,
            zero_noise=True,
            admissibility_norm=0.0,
        )

    if not is_hurwitz(f_c):
        raise NotRealizableError("admissibility failed: state matrix is not Hurwitz")
    nu = hinf_norm(
        StateSpaceTF(f_c, np.eye(n_c), h_c, np.zeros((m_u, n_c))), rel_tol
    ).value
    if nu > 1.0 + 2.0 * rel_tol:
        shown = f"{round(nu):.1f}" if abs(nu - round(nu)) < 1e-5 else f"{nu:.6g}"
        raise NotRealizableError(f"H∞ admissibility failed: {shown} > 1")

    r_mat = hermitian_part(dagger(h_c) @ h_c)
    q_mat = hermitian_part(g_cy @ dagger(g_cy))
    theta = None
    care = solve_care_hermitian(f_c, r_mat, q_mat)
    stabilizing = care.selection in ("stable-subspace", "lyapunov-degenerate")
    if care.exists and stabilizing and is_positive_definite(care.x):
        theta = care.x
        g_cwb = np.zeros((n_c, 0), dtype=complex)
    else:
        care = solve_care_hermitian(f_c, r_mat, q_mat + np.eye(n_c))
        if not care.exists or not is_positive_definite(care.x):
            raise NotRealizableError(
                "no positive definite certificate found for an admissible triple"
            )
        theta = care.x
        slack = -hermitian_part(
            f_c @ theta + theta @ dagger(f_c) + theta @ r_mat @ theta + q_mat
        )
        split = psd_split(slack)
        if max_abs(split.negative) > RESIDUAL_TOL * (1.0 + max_abs(slack)):
            raise NotRealizableError("certificate slack is not positive semidefinite")
        g_cwb = split.positive_factor

    r = g_cwb.shape[1]
    g_cwa = -theta @ dagger(h_c)
    controller = ControllerModel(
        kind="annihilation",
        f_c=f_c,
        g_cw=np.hstack([g_cwa, g_cwb]),
        g_cy=g_cy,
        h_c=h_c,
        k_cw=_identity_pad(m_u, m_u + r),
        k_cy=np.zeros((m_u, m_y)),
    )
    return SynthesisResult(
        controller=controller,
        theta=theta,
        extra_channels=r,
        zero_noise=(r == 0),
        admissibility_norm=nu,
    )


def synth_noise_general(f_c, g_cy, h_c, theta) -> SynthesisResult:
    """Make a general-kind controller triple physically realizable.

    Given a commutation matrix Theta (Hermitian, invertible, inertia
    (n_c, n_c), antisymmetric under the conjugation swap), the certificate
    defect M is split by sign into interlocked extra noise factors, and the
    structured coupling columns -Theta H_c1^dagger / +Theta H_c2^dagger
    complete the controller noise matrix.  Zero extra noise is reported when
    M vanishes, meaning Theta already satisfies the realizability Riccati.
    """
    f_c = as_matrix(f_c, "f_c")
    g_cy = as_matrix(g_cy, "g_cy")
    h_c = as_matrix(h_c, "h_c")
    if f_c.shape[0] % 2 or g_cy.shape[1] % 2 or h_c.shape[0] % 2:
        raise DimensionError("general-kind triple needs even dimensions")
    if not (is_doubled(f_c) and is_doubled(g_cy) and is_doubled(h_c)):
        raise DomainError("general-kind triple must be doubled-up")
    n_c = f_c.shape[0] // 2
    m_u, m_y = h_c.shape[0] // 2, g_cy.shape[1] // 2
    if g_cy.shape[0] != 2 * n_c or h_c.shape[1] != 2 * n_c:
        raise DimensionError("controller triple shapes are inconsistent")

    theta = as_matrix(theta, "theta")
    dev = max_abs(theta - dagger(theta))
    if dev > RESIDUAL_TOL * (1.0 + max_abs(theta)):
        raise DomainError("theta must be Hermitian")
    theta = hermitian_part(theta)
    lam = np.linalg.eigvalsh(theta)
    cut = RANK_TOL * max(1.0, float(np.max(np.abs(lam))) if lam.size else 0.0)
    if int(np.sum(lam > cut)) != n_c or int(np.sum(lam < -cut)) != n_c:
        raise DomainError("theta must be invertible with inertia (n_c, n_c)")
    if max_abs(conj_swap(theta) + theta) > STRUCTURE_TOL * (1.0 + max_abs(theta)):
        raise DomainError("theta must be antisymmetric under the conjugation swap")

    h_c1, h_c2 = h_c[:m_u], h_c[m_u:]
    g_cy1, g_cy2 = g_cy[:, :m_y], g_cy[:, m_y:]
    m_defect = hermitian_part(
        f_c @ theta
        + theta @ dagger(f_c)
        - theta @ (dagger(h_c2) @ h_c2 - dagger(h_c1) @ h_c1) @ theta
        + g_cy1 @ dagger(g_cy1)
        - g_cy2 @ dagger(g_cy2)
    )
    split = psd_split(m_defect)
    g_cw1b = split.negative_factor
    r_pos = split.positive_factor.shape[1]
    r = max(g_cw1b.shape[1], r_pos)
    if g_cw1b.shape[1] < r:
        g_cw1b = np.hstack([g_cw1b, np.zeros((2 * n_c, r - g_cw1b.shape[1]), dtype=complex)])
    swap = np.vstack([g_cw1b[n_c:].conj(), g_cw1b[:n_c].conj()])
    g_cw2b = swap

    g_cw1a = -theta @ dagger(h_c1)
    g_cw2a = theta @ dagger(h_c2)
    g_cw = np.hstack([g_cw1a, g_cw1b, g_cw2a, g_cw2b])
    m_wt = m_u + r

    k_cw = np.zeros((2 * m_u, 2 * m_wt), dtype=complex)
    k_cw[:m_u, :m_u] = np.eye(m_u)
    k_cw[m_u:, m_wt : m_wt + m_u] = np.eye(m_u)
    controller = ControllerModel(
        kind="general",
        f_c=f_c,
        g_cw=g_cw,
        g_cy=g_cy,
        h_c=h_c,
        k_cw=k_cw,
        k_cy=np.zeros((2 * m_u, 2 * m_y)),
    )
    zero = max_abs(m_defect) <= RESIDUAL_TOL * (1.0 + max_abs(theta))
    return SynthesisResult(
        controller=controller, theta=theta, extra_channels=r, zero_noise=zero
    )


def augment_controller(c: ControllerModel) -> PlantAugmentation:
    """Square realizable completion of a controller over inputs (W-tilde, Y).

    Requires the feedthrough to be the canonical identity pattern
    (K_cw = [I, 0], K_cy = 0); this is exactly the convention under which
    the augmented feedthrough can equal the identity.
    """
    if c.kind == "general":
        return _augment_controller_general(c)
    feed_dev = max(
        max_abs(c.k_cw - _identity_pad(c.m_u, c.m_wt)), max_abs(c.k_cy)
    )
    if feed_dev > RESIDUAL_TOL:
        raise NotAugmentableError(
            "controller feedthrough must be the identity pattern ([I, 0] on "
            "its own noise, zero on the measurement)",
            residuals={"feedthrough": feed_dev},
        )
    m_tot = c.m_wt + c.m_y
    if c.n_modes == 0:
        system = AnnihilationQSys(
            f=np.zeros((0, 0)),
            g=np.zeros((0, m_tot)),
            h=np.zeros((m_tot, 0)),
            k=np.eye(m_tot),
            n_modes=0,
            m_fields=m_tot,
        )
        return PlantAugmentation(
            system=system,
            theta=np.zeros((0, 0), dtype=complex),
            h_tilde=np.zeros((m_tot - c.m_u, 0), dtype=complex),
            verdict=check_pr_annihilation(system),
        )
    g_caug = np.hstack([c.g_cw, c.g_cy])
    if not eig_sum_condition(c.f_c):
        raise NotAugmentableError(
            "certificate equation is degenerate (eigenvalue-sum condition fails)"
        )
    theta = solve_lyapunov_hermitian(c.f_c, hermitian_part(g_caug @ dagger(g_caug)))
    if not is_positive_definite(theta):
        raise NotAugmentableError(
            "no positive definite certificate for the augmented controller",
            residuals={"theta_min_eig": float(np.min(np.linalg.eigvalsh(theta)))},
        )
    h_full = -dagger(g_caug) @ np.linalg.inv(theta)
    row_dev = max_abs(h_full[: c.m_u] - c.h_c)
    if row_dev > RESIDUAL_TOL * (1.0 + max_abs(c.h_c)):
        raise NotAugmentableError(
            "controller output rows do not match the coupling identity",
            residuals={"row_mismatch": row_dev},
        )
    h_aug = np.vstack([c.h_c, h_full[c.m_u :]])
    system = AnnihilationQSys(
        f=c.f_c, g=g_caug, h=h_aug, k=np.eye(m_tot), n_modes=c.n_modes, m_fields=m_tot
    )
    return PlantAugmentation(
        system=system,
        theta=theta,
        h_tilde=h_full[c.m_u :],
        verdict=check_pr_annihilation(system),
    )


def _augment_controller_general(c: ControllerModel) -> PlantAugmentation:
    m_u, m_wt, m_y = c.m_u, c.m_wt, c.m_y
    k_want = np.zeros((2 * m_u, 2 * m_wt), dtype=complex)
    k_want[:m_u, :m_u] = np.eye(m_u)
    k_want[m_u:, m_wt : m_wt + m_u] = np.eye(m_u)
    feed_dev = max(max_abs(c.k_cw - k_want), max_abs(c.k_cy))
    if feed_dev > RESIDUAL_TOL:
        raise NotAugmentableError(
            "controller feedthrough must be the identity pattern ([I, 0] on "
            "its own noise, zero on the measurement)",
            residuals={"feedthrough": feed_dev},
        )
    m_tot = m_wt + m_y
    g_caug = _stack_cols_doubled([c.g_cw, c.g_cy])
    if not eig_sum_condition(c.f_c):
        raise NotAugmentableError(
            "certificate equation is degenerate (eigenvalue-sum condition fails)"
        )
    j = signature_matrix(m_tot)
    theta = solve_lyapunov_hermitian(c.f_c, hermitian_part(g_caug @ j @ dagger(g_caug)))
    lam = np.linalg.eigvalsh(theta)
    cut = RANK_TOL * max(1.0, float(np.max(np.abs(lam))) if lam.size else 0.0)
    if int(np.sum(lam > cut)) != c.n_modes or int(np.sum(lam < -cut)) != c.n_modes:
        raise NotAugmentableError(
            "certificate lacks the required inertia",
            residuals={
                "inertia_positive": float(np.sum(lam > cut)),
                "inertia_negative": float(np.sum(lam < -cut)),
            },
        )
    h_full = -j @ dagger(g_caug) @ np.linalg.inv(theta)
    row_dev = max(
        max_abs(h_full[:m_u] - c.h_c[:m_u]),
        max_abs(h_full[m_tot : m_tot + m_u] - c.h_c[m_u:]),
    )
    if row_dev > RESIDUAL_TOL * (1.0 + max_abs(c.h_c)):
        raise NotAugmentableError(
            "controller output rows do not match the coupling identity",
            residuals={"row_mismatch": row_dev},
        )
    h_tilde = np.vstack([h_full[m_u:m_tot], h_full[m_tot + m_u :]])
    h_aug = _stack_rows_doubled([c.h_c, h_tilde])
    system = GeneralQSys(
        f=c.f_c,
        g=g_caug,
        h=h_aug,
        k=np.eye(2 * m_tot, dtype=complex),
        n_modes=c.n_modes,
        m_fields=m_tot,
    )
    return PlantAugmentation(
        system=system,
        theta=theta,
        h_tilde=h_tilde,
        verdict=check_pr_general(system),
    )


@dataclass(frozen=True)
class AugmentedClosedLoop:
    """Square closed loop over free output fields with its certificate.

    Outputs stack the controller's replacement of the measured field, the
    plant's unused fields, and the controller's unused noise fields, so the
    first m_w + m_u outputs align with the trivial-controller (augmented
    plant) ordering.  The feedthrough is the identity and
    diag(theta_plant, theta_controller) certifies realizability.
    """

    system: StateSpaceTF
    theta: np.ndarray
    plant_theta: np.ndarray
    controller_theta: np.ndarray
    channel_map: dict[str, tuple[int, int]]
    internally_stable: bool


def close_augmented_loop(p: PlantModel, c: ControllerModel) -> AugmentedClosedLoop:
    """Interconnect the augmentations of plant and controller.

    Both subsystems are first completed to square realizable systems; the
    loop then maps the free input fields (W, W-tilde) to the free output
    fields.  The composite inherits realizability with certificate
    diag(theta_plant, theta_controller) and identity feedthrough, which is
    what makes every row-selected closed-loop transfer function all-pass.
    """
    if p.kind != "annihilation" or c.kind != "annihilation":
        raise DomainError("augmented loop composition is annihilation-kind only")
    _check_loop_dims(p, c)
    ap = augment_plant(p)
    ac = augment_controller(c)
    n, n_c = p.n_modes, c.n_modes
    m_w, m_u, m_y, m_wt = p.m_w, p.m_u, p.m_y, c.m_wt
    r = m_wt - m_u
    h_tilde = ap.h_tilde
    h_caug = ac.system.h

    a = np.block([[p.f, p.g_u @ c.h_c], [c.g_cy @ p.h, c.f_c]])
    b = np.block([[p.g_w, p.g_u @ c.k_cw], [c.g_cy @ p.k, c.g_cw]])

    eye_py = np.eye(m_w + m_u, dtype=complex)
    k_t = eye_py[m_y:, :m_w]
    k_bar = eye_py[m_y:, m_w:]

    c_rows = np.block(
        [
            [p.h, h_caug[m_wt:]],
            [h_tilde, k_bar @ c.h_c],
            [np.zeros((r, n), dtype=complex), h_caug[m_u:m_wt]],
        ]
    )
    d_rows = np.block(
        [
            [p.k, np.zeros((m_y, m_wt), dtype=complex)],
            [k_t, k_bar @ c.k_cw],
            [np.zeros((r, m_w), dtype=complex), np.eye(m_wt)[m_u:, :]],
        ]
    )
    theta = np.block(
        [
            [ap.theta, np.zeros((n, n_c), dtype=complex)],
            [np.zeros((n_c, n), dtype=complex), ac.theta],
        ]
    )
    channel_map = {
        "replaced_output": (0, m_y),
        "plant_unused": (m_y, m_w + m_u),
        "controller_unused": (m_w + m_u, m_w + m_u + r),
    }
    return AugmentedClosedLoop(
        system=StateSpaceTF(a=a, b=b, c=c_rows, d=d_rows),
        theta=theta,
        plant_theta=ap.theta,
        controller_theta=ac.theta,
        channel_map=channel_map,
        internally_stable=is_hurwitz(a),
    )


def complete_static_pr(p: PlantModel, k_cy) -> tuple[np.ndarray, np.ndarray] | None:
    """Find K_cw making a static controller's loop keep the plant realizable.

    Solves jointly for a Hermitian certificate Theta_a and a PSD Gram matrix
    S = K_cw K_cw^dagger such that the modified plant satisfies the coupling
    identity on the measured channels and the certificate equation over all
    noises.  Returns (k_cw, theta_a) or None when the affine system has no
    admissible solution.
    """
    if p.kind != "annihilation":
        raise DomainError("static completion is annihilation-kind only")
    k_cy = as_matrix(k_cy, "k_cy")
    if k_cy.shape != (p.m_u, p.m_y):
        raise DimensionError(f"k_cy must be {(p.m_u, p.m_y)}, got {k_cy.shape}")
    n, m_u = p.n_modes, p.m_u

    if max_abs(k_cy) == 0.0:
        theta = augment_plant(p).theta
        return np.eye(m_u, dtype=complex), theta

    f_mod = p.f + p.g_u @ k_cy @ p.h
    g_fold = p.g_w + p.g_u @ k_cy @ p.k
    target_coup = -(p.g_w[:, : p.m_y] + p.g_u @ k_cy)

    from .systems import _hermitian_basis

    basis_t = _hermitian_basis(n)
    basis_s = _hermitian_basis(m_u)

    def col_theta(bmat):
        lyap = f_mod @ bmat + bmat @ dagger(f_mod)
        coup = bmat @ dagger(p.h)
        vec = np.concatenate([lyap.ravel(), coup.ravel()])
        return np.concatenate([vec.real, vec.imag])

    def col_s(bmat):
        lyap = p.g_u @ bmat @ dagger(p.g_u)
        vec = np.concatenate([lyap.ravel(), np.zeros(n * p.m_y, dtype=complex)])
        return np.concatenate([vec.real, vec.imag])

    a_mat = np.column_stack([col_theta(b) for b in basis_t] + [col_s(b) for b in basis_s])
    rhs_c = np.concatenate([(-(g_fold @ dagger(g_fold))).ravel(), target_coup.ravel()])
    rhs = np.concatenate([rhs_c.real, rhs_c.imag])
    sol, *_ = np.linalg.lstsq(a_mat, rhs, rcond=None)
    residual = float(np.max(np.abs(a_mat @ sol - rhs))) if rhs.size else 0.0
    scale = 1.0 + max_abs(g_fold) ** 2 + max_abs(target_coup)
    if residual > RESIDUAL_TOL * scale:
        return None
    theta = hermitian_part(sum(cf * b for cf, b in zip(sol[: len(basis_t)], basis_t)))
    s_gram = hermitian_part(
        sum(cf * b for cf, b in zip(sol[len(basis_t) :], basis_s))
    )
    if not is_positive_definite(theta):
        return None
    split = psd_split(s_gram)
    if max_abs(split.negative) > RESIDUAL_TOL * (1.0 + max_abs(s_gram)):
        return None
    k_cw = split.positive_factor
    if k_cw.shape[1] < m_u:
        # pad ignored noise channels so the controller keeps m_wt >= m_u
        k_cw = np.hstack(
            [k_cw, np.zeros((m_u, m_u - k_cw.shape[1]), dtype=complex)]
        )
    return k_cw, theta


def random_pr_plant(
    n: int, m_w: int, m_u: int, m_y: int, seed: int, kind: str = "annihilation"
) -> PlantModel:
    """Draw a seeded random physically realizable plant.

    Splits a random realizable square system's fields into noise and control
    groups and keeps the first m_y output rows as the measured field.  Needs
    m_y <= m_w so the measured feedthrough can be [I, 0].  Annihilation-kind
    draws are Hurwitz so downstream certificates and costs exist.
    """
    if not (1 <= m_y <= m_w):
        raise DimensionError(f"need 1 <= m_y <= m_w, got m_y={m_y}, m_w={m_w}")
    if m_u < 1:
        raise DimensionError("need m_u >= 1")
    sys = random_pr_system(
        n, m_w + m_u, seed, kind=kind, hurwitz_required=(kind == "annihilation")
    )
    if kind == "annihilation":
        return PlantModel(
            kind=kind,
            f=sys.f,
            g_w=sys.g[:, :m_w],
            g_u=sys.g[:, m_w:],
            h=sys.h[:m_y],
            k=_identity_pad(m_y, m_w),
        )
    m_tot = m_w + m_u
    g_w = np.hstack([sys.g[:, :m_w], sys.g[:, m_tot : m_tot + m_w]])
    g_u = np.hstack([sys.g[:, m_w:m_tot], sys.g[:, m_tot + m_w :]])
    h = np.vstack([sys.h[:m_y], sys.h[m_tot : m_tot + m_y]])
    k = np.zeros((2 * m_y, 2 * m_w), dtype=complex)
    k[:m_y, :m_w] = _identity_pad(m_y, m_w)
    k[m_y:, m_w:] = _identity_pad(m_y, m_w)
    return PlantModel(kind=kind, f=sys.f, g_w=g_w, g_u=g_u, h=h, k=k)
