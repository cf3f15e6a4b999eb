"""Doubling-of-variables machinery for the Lipschitz certificate.

The comparison function

    phi(x, y) = L * omega(|x-y|) + varrho * (|x-z0|^2 + |y-z0|^2)

is pitted against w(x, y) = u(x) - u(y) over pairs of grid points.  A pair
where w - phi > 0 (beyond a discretization allowance) is a *witness*: for a
true solution its existence forces one point into each phase closure and
pins the flux |xi| between L/2 - 2*varrho and Lambda, which is impossible
once L is large.  This module evaluates phi and its derivatives, the
interior-maximum estimate they satisfy, searches for witnesses
exhaustively, and classifies any witness found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .barrier import BarrierParams, choose_parameters, omega_eval, omega_value
from .grid import ScalarField
from .viscosity import PhaseSets, fit_jet

__all__ = [
    "ConstantLedger",
    "DoublingWitness",
    "FluxRecord",
    "CaseReport",
    "LemmaChainTrace",
    "DegeneratePairError",
    "JetFitError",
    "build_ledger",
    "phi_eval",
    "grad_phi",
    "m_omega",
    "lemma_bound",
    "find_witness",
    "classify_witness",
    "verify_lemma_chain",
    "default_tau_w",
]


class DegeneratePairError(ValueError):
    """x0 == y0 where omega' or omega'' is needed."""


class JetFitError(RuntimeError):
    """No touching quadratic exists within the defect cap."""


@dataclass(frozen=True)
class ConstantLedger:
    """Every constant the doubling proof consumes, with its selection rules.

    varrho = 9*||u||_inf keeps maximizing pairs interior; (a, b, d) =
    (4, 16*varrho, 16*varrho^3) expand the interior-maximum bound into the
    barrier form; K exceeds 4*max(||f+||, ||f-||, 1) + d; and L clears both
    the barrier threshold Lbar(K, a, b) and 2*Lambda + 4*varrho so the flux
    window of a witness is empty.
    """

    Lambda: float
    normFp: float
    normFm: float
    normU: float
    varrho: float
    a: float
    b: float
    d: float
    K: float
    L: float
    Lbar: float
    z0: np.ndarray

    def with_center(self, z0) -> "ConstantLedger":
        return replace(self, z0=np.atleast_1d(np.asarray(z0, dtype=float)))

    def rules_satisfied(self) -> dict[str, bool]:
        """Which selection rules the (possibly overridden) constants obey."""
        return {
            "varrho=9*normU": bool(
                math.isclose(self.varrho, 9.0 * self.normU, rel_tol=1e-12, abs_tol=0.0)
                or (self.normU == 0.0 and self.varrho == 0.0)
            ),
            "a=4": self.a == 4.0,
            "b=16*varrho": bool(math.isclose(self.b, 16.0 * self.varrho, rel_tol=1e-12, abs_tol=1e-300)),
            "d=16*varrho^3": bool(math.isclose(self.d, 16.0 * self.varrho**3, rel_tol=1e-12, abs_tol=1e-300)),
            "K>=4*max(normF,1)+d": self.K >= 4.0 * max(self.normFp, self.normFm, 1.0) + self.d,
            "L>=Lbar": self.L >= self.Lbar,
            "L>=2*Lambda+4*varrho": self.L >= 2.0 * self.Lambda + 4.0 * self.varrho,
        }


def build_ledger(
    normFp: float,
    normFm: float,
    normU: float,
    Lambda: float,
    z0,
    params: BarrierParams | None = None,
    L_override: float | None = None,
    K_override: float | None = None,
) -> ConstantLedger:
    """Assemble the ledger from the data norms by the documented rules.

    Overrides bypass the size rules (that is their point: forcing a small L
    is how counterexample runs manufacture witnesses); rules_satisfied()
    reports what still holds.
    """
    for name, val in (("normFp", normFp), ("normFm", normFm), ("normU", normU)):
        if val < 0.0 or not math.isfinite(val):
            raise ValueError(f"{name} must be finite and >= 0, got {val}")
    if not (Lambda > 0.0 and math.isfinite(Lambda)):
        raise ValueError(f"Lambda must be positive, got {Lambda}")
    varrho = 9.0 * normU
    a = 4.0
    b = 16.0 * varrho
    d = 16.0 * varrho**3
    K = K_override if K_override is not None else 4.0 * max(normFp, normFm, 1.0) + d + 1.0
    chosen, Lbar = choose_parameters(K, a, max(b, 1e-300))
    if params is not None and (params.kappa, params.theta) != (chosen.kappa, chosen.theta):
        # custom barrier parameters: recompute the threshold with their margin
        kbar = params.kbar
        Lbar = max(2.0 * b / (a * kbar), (2.0 * K / (a * kbar)) ** (1.0 / 3.0), 1.0)
    L = L_override if L_override is not None else max(Lbar, 2.0 * Lambda + 4.0 * varrho + 1.0)
    return ConstantLedger(
        Lambda=float(Lambda), normFp=float(normFp), normFm=float(normFm),
        normU=float(normU), varrho=varrho, a=a, b=b, d=d, K=float(K),
        L=float(L), Lbar=float(Lbar),
        z0=np.atleast_1d(np.asarray(z0, dtype=float)),
    )


# ------------------------------------------------------- comparison function


def _pair(x, y, ledger: ConstantLedger):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != ledger.z0.shape or y.shape != ledger.z0.shape:
        raise ValueError("x, y and z0 must share one dimension")
    return x, y


def phi_eval(x, y, ledger: ConstantLedger, params: BarrierParams) -> float:
    """phi(x, y) = L*omega(|x-y|) + varrho*(|x-z0|^2 + |y-z0|^2)."""
    x, y = _pair(x, y, ledger)
    rho = float(np.linalg.norm(x - y))
    if rho >= 1.0:
        raise ValueError(f"|x-y| = {rho} outside the barrier domain [0, 1)")
    quad = float(np.sum((x - ledger.z0) ** 2) + np.sum((y - ledger.z0) ** 2))
    return ledger.L * omega_value(params, rho) + ledger.varrho * quad


def grad_phi(x0, y0, ledger: ConstantLedger, params: BarrierParams):
    """(D_x phi, D_y phi) at a pair with x0 != y0.

    D_x phi = L*omega'(rho)*nu + 2*varrho*(x0-z0)
    D_y phi = -L*omega'(rho)*nu + 2*varrho*(y0-z0),   nu = (x0-y0)/rho.
    """
    x0, y0 = _pair(x0, y0, ledger)
    rho = float(np.linalg.norm(x0 - y0))
    if rho == 0.0:
        raise DegeneratePairError("grad_phi needs x0 != y0")
    nu = (x0 - y0) / rho
    _, om1, _ = omega_eval(params, rho)
    Dx = ledger.L * om1 * nu + 2.0 * ledger.varrho * (x0 - ledger.z0)
    Dy = -ledger.L * om1 * nu + 2.0 * ledger.varrho * (y0 - ledger.z0)
    return Dx, Dy


def m_omega(x0, y0, ledger: ConstantLedger, params: BarrierParams) -> np.ndarray:
    """Radial Hessian block L*w''(rho)*nu(x)nu + L*(w'(rho)/rho)*(I - nu(x)nu).

    Eigenvalues: L*w''(rho) along nu (negative), L*w'(rho)/rho on the
    orthogonal complement (positive).
    """
    x0, y0 = _pair(x0, y0, ledger)
    rho = float(np.linalg.norm(x0 - y0))
    if rho == 0.0:
        raise DegeneratePairError("m_omega needs x0 != y0")
    nu = (x0 - y0) / rho
    _, om1, om2 = omega_eval(params, rho)
    n = nu.size
    P = np.outer(nu, nu)
    return ledger.L * om2 * P + ledger.L * (om1 / rho) * (np.eye(n) - P)


def lemma_bound(ledger: ConstantLedger, params: BarrierParams, rho: float) -> float:
    """Closed form 4*L*w''(r)*(L*w'(r)+vr*r)^2 + 16*vr*(L^2*w'(r)^2 + vr^2)."""
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    _, om1, om2 = omega_eval(params, rho)
    L, vr = ledger.L, ledger.varrho
    return 4.0 * L * om2 * (L * om1 + vr * rho) ** 2 + 16.0 * vr * (L**2 * om1**2 + vr**2)


# ---------------------------------------------------------- witness search


@dataclass(frozen=True)
class DoublingWitness:
    """A grid pair where u(x0) - u(y0) exceeds phi(x0, y0) by more than tau_w."""

    x0: np.ndarray
    y0: np.ndarray
    ix0: tuple[int, ...]
    iy0: tuple[int, ...]
    rho: float
    gap: float
    nu: np.ndarray
    interiority_ok: bool


def default_tau_w(u: ScalarField) -> float:
    """4x the largest one-cell oscillation of u (absorbs discrete-max error)."""
    osc = 0.0
    vals = u.values
    for axis in range(u.n):
        sl_hi = [slice(None)] * u.n
        sl_lo = [slice(None)] * u.n
        sl_hi[axis] = slice(1, None)
        sl_lo[axis] = slice(0, -1)
        osc = max(osc, float(np.max(np.abs(vals[tuple(sl_hi)] - vals[tuple(sl_lo)]))))
    return 4.0 * osc


def find_witness(
    u: ScalarField,
    ledger: ConstantLedger,
    params: BarrierParams,
    search_radius: float = 0.5,
    tau_w: float | None = None,
) -> DoublingWitness | None:
    """Exhaustive maximization of u(x) - u(y) - phi(x, y) over ball pairs.

    All ordered grid-point pairs in the closed ball of search_radius about
    z0 are scanned (pairs at distance exactly 1, where omega is undefined,
    cannot carry a witness and are skipped).  Returns the maximizing pair
    as a witness iff the maximum exceeds tau_w (default: 4x the one-cell
    oscillation of u).  Ties resolve to the lexicographically smallest index
    pair.  The interiority flag records whether
    |x0-z0|^2 + |y0-z0|^2 <= 2*normU/varrho held.
    """
    if search_radius > 0.5 + 1e-12:
        raise ValueError(f"search_radius must be <= 1/2, got {search_radius}")
    if tau_w is None:
        tau_w = default_tau_w(u)
    idx = u.ball_indices(ledger.z0, search_radius)
    pts = np.stack([u.point(tuple(i)) for i in idx])
    vals = np.array([u.values[tuple(i)] for i in idx])
    q = np.sum((pts - ledger.z0) ** 2, axis=1)

    diff = pts[:, None, :] - pts[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    ok = D < 1.0
    Dsafe = np.where(ok, D, 0.0)
    W = (
        vals[:, None] - vals[None, :]
        - ledger.L * omega_value(params, Dsafe)
        - ledger.varrho * (q[:, None] + q[None, :])
    )
    W = np.where(ok, W, -np.inf)
    flat = int(np.argmax(W))
    i, j = np.unravel_index(flat, W.shape)
    gap = float(W[i, j])
    if not gap > tau_w:
        return None
    x0, y0 = pts[i], pts[j]
    rho = float(D[i, j])
    nu = (x0 - y0) / rho if rho > 0.0 else np.zeros_like(x0)
    if ledger.varrho > 0.0:
        interior = q[i] + q[j] <= 2.0 * ledger.normU / ledger.varrho + 1e-12
    else:
        interior = True
    return DoublingWitness(
        x0=x0, y0=y0, ix0=tuple(int(k) for k in idx[i]),
        iy0=tuple(int(k) for k in idx[j]), rho=rho, gap=gap, nu=nu,
        interiority_ok=bool(interior),
    )


# ------------------------------------------------------------ classification


@dataclass(frozen=True)
class FluxRecord:
    """|xi| versus the two free-boundary flux bounds of the alternative."""

    xi: np.ndarray
    xi_norm: float
    Lambda: float
    lower_bound: float  # L/2 - 2*varrho
    lastone_holds: bool  # |xi| >= L/2 - 2*varrho
    fbcond_violated: bool  # |xi| > Lambda


@dataclass(frozen=True)
class CaseReport:
    """Phase placement of a witness and the contradiction it carries."""

    tag: str  # PosPos NegNeg BothFB NoFB Case1 Case2 Inconsistent
    x_phase: str
    y_phase: str
    u_x: float
    u_y: float
    ordering_ok: bool  # u(x0) > u(y0)
    ledger_contradiction: bool
    flux: FluxRecord | None


def classify_witness(
    witness: DoublingWitness,
    phases: PhaseSets,
    u: ScalarField,
    ledger: ConstantLedger,
    params: BarrierParams | None = None,
) -> CaseReport:
    """Phase membership of the witness pair and the matching proof case.

    Case1: x0 in {u>0}, y0 on the free boundary (flux read from xi_y);
    Case2: x0 on the free boundary, y0 in {u<0} (flux from xi_x).  Same-
    phase and no-boundary placements are flagged as ledger contradictions
    when the K-size rule applies; orderings violating u(x0) > u(y0), or
    placements the proof excludes, come back Inconsistent.
    """
    params = params or BarrierParams(kappa=0.125, theta=0.5)
    ux = float(u.values[witness.ix0])
    uy = float(u.values[witness.iy0])
    px = phases.phase_of(witness.ix0)
    py = phases.phase_of(witness.iy0)
    if px == "none" or py == "none":
        raise ValueError(
            f"witness points fall outside all phases: x0 {px}, y0 {py}"
        )
    ordering_ok = ux > uy

    def flux_for(case: str) -> FluxRecord:
        Dx, Dy = grad_phi(witness.x0, witness.y0, ledger, params)
        xi = -Dy if case == "Case1" else Dx
        norm = float(np.linalg.norm(xi))
        lower = ledger.L / 2.0 - 2.0 * ledger.varrho
        return FluxRecord(
            xi=xi, xi_norm=norm, Lambda=ledger.Lambda, lower_bound=lower,
            lastone_holds=bool(norm >= lower - 1e-12),
            fbcond_violated=bool(norm > ledger.Lambda + 1e-12),
        )

    if not ordering_ok:
        tag, contradiction, flux = "Inconsistent", True, None
    elif px == "pos" and py == "fb":
        tag, flux = "Case1", flux_for("Case1")
        contradiction = flux.lastone_holds and flux.fbcond_violated
    elif px == "fb" and py == "neg":
        tag, flux = "Case2", flux_for("Case2")
        contradiction = flux.lastone_holds and flux.fbcond_violated
    elif px == "pos" and py == "pos":
        tag, flux = "PosPos", None
        contradiction = ledger.K >= 4.0 * ledger.normFp
    elif px == "neg" and py == "neg":
        tag, flux = "NegNeg", None
        contradiction = ledger.K >= 4.0 * ledger.normFm
    elif px == "fb" and py == "fb":
        tag, flux = "BothFB", None
        contradiction = True  # excluded by u(x0) > u(y0) for true solutions
    elif px == "pos" and py == "neg":
        tag, flux = "NoFB", None
        contradiction = ledger.K >= 4.0 * max(ledger.normFp, ledger.normFm)
    else:
        # x0 in {u<0} or y0 in {u>0}: the proof's forced inclusions fail
        tag, flux, contradiction = "Inconsistent", None, True
    return CaseReport(
        tag=tag, x_phase=px, y_phase=py, u_x=ux, u_y=uy,
        ordering_ok=ordering_ok, ledger_contradiction=bool(contradiction),
        flux=flux,
    )


# ------------------------------------------------------------- lemma chain


@dataclass(frozen=True)
class LemmaChainTrace:
    """All intermediate quantities of the interior-maximum estimate."""

    Dx_phi: np.ndarray
    Dy_phi: np.ndarray
    M_omega: np.ndarray
    iota: float
    lam: float
    epsilon: float
    lhs: float
    rhs_bound: float
    tau_chain: float
    ok: bool
    grad_norm_sq: float  # |Dx phi|^2 + |Dy phi|^2
    grad_norm_bound: float  # 4*(L^2 w'(rho)^2 + varrho^2)
    jet_defect_x: float
    jet_defect_y: float


def verify_lemma_chain(
    u: ScalarField,
    witness: DoublingWitness,
    ledger: ConstantLedger,
    params: BarrierParams,
    jet_radius: float | None = None,
    tau_chain: float | None = None,
) -> LemmaChainTrace:
    """Numerical stand-in for the interior-maximum estimate at a witness.

    Fits a discrete superjet at x0 and subjet at y0, takes xi from the phi
    gradients, and checks

        <M_x xi_x, xi_x> - <M_y xi_y, xi_y> <= lemma_bound(rho) + tau_chain.

    The abstract matrices of the maximum principle are not constructively
    available; fitted jets replace them and the slack is recorded.  epsilon
    follows the proof's recipe 8*vr*(L^2 w'^2 + vr^2)/lambda when the
    quadratic form lambda is positive, else it is free (1.0).
    """
    jet_radius = 3.0 * u.h if jet_radius is None else float(jet_radius)
    jx = fit_jet(u, witness.ix0, "super", jet_radius)
    jy = fit_jet(u, witness.iy0, "sub", jet_radius)
    if jx is None or jy is None:
        missing = "x0" if jx is None else "y0"
        raise JetFitError(f"no touching quadratic at {missing} within the defect cap")
    Dx, Dy = grad_phi(witness.x0, witness.y0, ledger, params)
    xi_x, xi_y = Dx, -Dy
    lhs = float(xi_x @ jx.M @ xi_x - xi_y @ jy.M @ xi_y)

    rho = witness.rho
    _, om1, _ = omega_eval(params, rho)
    L, vr = ledger.L, ledger.varrho
    Mw = m_omega(witness.x0, witness.y0, ledger, params)
    iota = 2.0 * (L * om1 / rho + vr)
    n = Mw.shape[0]
    A = np.block([[Mw, -Mw], [-Mw, Mw]]) + 2.0 * vr * np.eye(2 * n)
    z = np.concatenate([Dx, Dy])
    Az = A @ z
    lam = float(Az @ Az)
    grad_bound = 4.0 * (L**2 * om1**2 + vr**2)
    epsilon = (8.0 * vr * (L**2 * om1**2 + vr**2) / lam) if lam > 0.0 else 1.0
    rhs = lemma_bound(ledger, params, rho)
    if tau_chain is None:
        tau_chain = 10.0 * u.h * (1.0 + abs(rhs))
    return LemmaChainTrace(
        Dx_phi=Dx, Dy_phi=Dy, M_omega=Mw, iota=iota, lam=lam, epsilon=epsilon,
        lhs=lhs, rhs_bound=rhs, tau_chain=float(tau_chain),
        ok=bool(lhs <= rhs + tau_chain),
        grad_norm_sq=float(Dx @ Dx + Dy @ Dy), grad_norm_bound=grad_bound,
        jet_defect_x=jx.touch_defect, jet_defect_y=jy.touch_defect,
    )
