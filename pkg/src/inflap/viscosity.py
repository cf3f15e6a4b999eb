"""Discrete viscosity-solution machinery: phases, jets, and flux checks.

A discrete super/sub jet at a node is a (gradient, Hessian) pair whose
anchored quadratic touches the field from above/below at every node of a
fit window.  Jets are produced by least-squares fitting followed by a
minimal curvature repair (M +- 2*delta*I), so returned jets genuinely
touch; delta is kept as the touch_defect quality metric and capped.

The free-boundary check realizes the directional conditions: for a superjet
(xi, M) at a free boundary point the subsolution inequality

    u(x - t xi/|xi|) >= -Lambda t + o(t)

is tested, and for a subjet the supersolution counterpart along +xi/|xi|.
The o(t) is operationalized as a through-origin regression over the
smallest sampled t, with the residual reported rather than thresholded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridCoverageError, ScalarField

__all__ = [
    "PhaseSets",
    "DiscreteJet",
    "FBReport",
    "InteriorCheck",
    "PhaseMismatchError",
    "extract_phases",
    "fit_jet",
    "check_interior",
    "check_fb_condition",
    "normal_derivative",
]


class PhaseMismatchError(ValueError):
    """A jet was handed to a check that expects a different phase."""


@dataclass
class PhaseSets:
    """Boolean node masks for {u>0}, {u<0} and the discrete free boundary.

    fb collects near-zero cells adjacent to a phase cell plus cells whose
    axis neighbor has the opposite strict sign; pos/neg exclude fb so the
    three masks are pairwise disjoint.  Cells deep inside the zero set
    (near-zero with only near-zero neighbors) belong to none of the three,
    mirroring the boundary-of-union-of-phases definition.
    """

    pos: np.ndarray
    neg: np.ndarray
    fb: np.ndarray
    tol_zero: float

    def phase_of(self, idx: tuple[int, ...]) -> str:
        if self.fb[idx]:
            return "fb"
        if self.pos[idx]:
            return "pos"
        if self.neg[idx]:
            return "neg"
        return "none"


def _axis_shifts(vals: np.ndarray) -> list[np.ndarray]:
    out = []
    n = vals.ndim
    for axis in range(n):
        for sign in (1, -1):
            shifted = np.full_like(vals, np.nan)
            src = [slice(None)] * n
            dst = [slice(None)] * n
            if sign > 0:
                src[axis] = slice(1, None)
                dst[axis] = slice(0, -1)
            else:
                src[axis] = slice(0, -1)
                dst[axis] = slice(1, None)
            shifted[tuple(dst)] = vals[tuple(src)]
            out.append(shifted)
    return out


def extract_phases(u: ScalarField, tol_zero: float | None = None) -> PhaseSets:
    """Split interior nodes into positivity set, negativity set and boundary.

    tol_zero defaults to h^2 * sup|u| (values scale like distance times
    gradient near the interface, so this keeps the true zero level set
    apart from merely small values).
    """
    if tol_zero is None:
        tol_zero = u.h**2 * float(np.max(np.abs(u.values)))
    if tol_zero < 0.0:
        raise ValueError(f"tol_zero must be >= 0, got {tol_zero}")
    vals = u.values
    interior = u.interior_mask()
    small = np.abs(vals) <= tol_zero
    strict_pos = vals > tol_zero
    strict_neg = vals < -tol_zero

    opposite = np.zeros_like(small)
    near_phase = np.zeros_like(small)
    for nb in _axis_shifts(vals):
        with np.errstate(invalid="ignore"):
            nb_pos = nb > tol_zero
            nb_neg = nb < -tol_zero
        opposite |= (strict_pos & nb_neg) | (strict_neg & nb_pos)
        near_phase |= nb_pos | nb_neg

    fb = interior & ((small & near_phase) | opposite)
    pos = interior & strict_pos & ~fb
    neg = interior & strict_neg & ~fb
    return PhaseSets(pos=pos, neg=neg, fb=fb, tol_zero=float(tol_zero))


@dataclass
class DiscreteJet:
    """A touching quadratic at a node: side 'super' touches from above."""

    point: tuple[int, ...]
    xi: np.ndarray
    M: np.ndarray
    side: str
    touch_radius: float
    touch_defect: float


def _quad_basis(dx: np.ndarray) -> np.ndarray:
    """Full second-order polynomial basis at offsets dx of shape (k, n)."""
    if dx.shape[1] == 1:
        x = dx[:, 0]
        return np.stack([np.ones_like(x), x, 0.5 * x * x], axis=1)
    x, y = dx[:, 0], dx[:, 1]
    return np.stack(
        [np.ones_like(x), x, y, 0.5 * x * x, x * y, 0.5 * y * y], axis=1
    )


def fit_jet(
    u: ScalarField,
    idx: tuple[int, ...] | int,
    side: str,
    radius: float | None = None,
    defect_cap: float | None = None,
) -> DiscreteJet | None:
    """Least-squares quadratic fit, curvature-repaired into a touching jet.

    The window is the sup-norm ball of the given radius (default 3h).  The
    anchored fit u(x) ~ u(x0) + <xi, dx> + 0.5 <M dx, dx> is repaired by
    M -> M + 2*delta*I (super) or M - 2*delta*I (sub) with the smallest
    delta >= 0 making the one-sided touching inequality hold at every
    window node; delta is stored as touch_defect.  Returns None when the
    normal equations are singular or delta exceeds defect_cap (default
    1/(4h): smooth fields need only O(h), a kink needs ~1/h).
    """
    if side not in ("super", "sub"):
        raise ValueError(f"side must be 'super' or 'sub', got {side!r}")
    idx = (idx,) if isinstance(idx, (int, np.integer)) else tuple(idx)
    radius = 3.0 * u.h if radius is None else float(radius)
    cap = 0.25 / u.h if defect_cap is None else float(defect_cap)
    half = int(round(radius / u.h))
    if half < 1:
        raise ValueError(f"window radius {radius} below one cell")
    if any(i < half or i > u.m - 1 - half for i in idx):
        raise GridCoverageError(f"window of radius {radius} at {idx} leaves the grid")

    ranges = [np.arange(-half, half + 1)] * u.n
    mesh = np.meshgrid(*ranges, indexing="ij")
    offsets = np.stack([g.reshape(-1) for g in mesh], axis=1)  # cells
    dx = offsets * u.h
    nodes = offsets + np.asarray(idx)
    uvals = u.values[tuple(nodes.T)]

    A = _quad_basis(dx)
    coef, _, rank, _ = np.linalg.lstsq(A, uvals, rcond=None)
    if rank < A.shape[1]:
        return None
    if u.n == 1:
        xi = np.array([coef[1]])
        M = np.array([[coef[2]]])
    else:
        xi = np.array([coef[1], coef[2]])
        M = np.array([[coef[3], coef[4]], [coef[4], coef[5]]])

    center = u.values[idx]
    quad = center + dx @ xi + 0.5 * np.einsum("ki,ij,kj->k", dx, M, dx)
    r2 = np.sum(dx * dx, axis=1)
    off_center = r2 > 0.0
    viol = uvals[off_center] - quad[off_center]
    if side == "sub":
        viol = -viol
    delta = float(max(0.0, np.max(viol / r2[off_center])))
    if delta > cap:
        return None
    repair = 2.0 * delta * np.eye(u.n)
    M = M + repair if side == "super" else M - repair
    return DiscreteJet(
        point=idx, xi=xi, M=M, side=side,
        touch_radius=radius, touch_defect=delta,
    )


@dataclass
class InteriorCheck:
    """Result of testing -<M xi, xi> against the phase forcing."""

    ok: bool
    slack: float  # signed: -<M xi, xi> - f at the node
    side: str
    phase: str

    def __bool__(self) -> bool:
        return self.ok


def check_interior(u, phases: PhaseSets, problem, jet: DiscreteJet,
                   tol: float) -> InteriorCheck:
    """Interior equation check at a phase node.

    Super side in the positive phase: -<M xi, xi> <= f_+ + tol; sub side
    flips the inequality; the negative phase uses f_-.  The signed slack
    -<M xi, xi> - f is always reported.
    """
    idx = jet.point
    phase = phases.phase_of(idx)
    if phase == "fb":
        raise PhaseMismatchError(f"node {idx} lies on the free boundary")
    if phase == "none":
        raise PhaseMismatchError(f"node {idx} lies in neither phase")
    f = problem.fplus.values[idx] if phase == "pos" else problem.fminus.values[idx]
    q = -float(jet.xi @ jet.M @ jet.xi)
    slack = q - float(f)
    ok = slack <= tol if jet.side == "super" else slack >= -tol
    return InteriorCheck(ok=bool(ok), slack=slack, side=jet.side, phase=phase)


@dataclass
class FBReport:
    """Directional flux check record at a free boundary node."""

    condition: str  # "subsolution" (superjet, ray -nu) or "supersolution"
    point: tuple[int, ...]
    nu: np.ndarray
    slope: float
    Lambda: float
    tol_slope: float
    t_values: np.ndarray
    u_values: np.ndarray
    residual: float  # RMS misfit of the through-origin model on the fit half
    passed: bool


def _ray_values(u: ScalarField, x0: np.ndarray, direction: np.ndarray,
                t_list: np.ndarray) -> np.ndarray:
    vals = []
    for t in t_list:
        p = x0 + t * direction
        if np.any(np.abs(p) > 1.0 + 1e-12):
            raise GridCoverageError(f"ray sample {p} leaves the grid")
        vals.append(u.interpolate(p))
    return np.asarray(vals)


def _origin_slope(t: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    s = float(np.sum(t * g) / np.sum(t * t))
    res = float(np.sqrt(np.mean((g - s * t) ** 2)))
    return s, res


def check_fb_condition(
    u: ScalarField,
    x_fb: tuple[int, ...] | int,
    jet: DiscreteJet,
    Lambda: float,
    t_list,
    tol_slope: float | None = None,
) -> FBReport:
    """Test the one-sided flux inequality matched to the jet's side.

    Superjet: sample u(x - t nu) and require fitted slope >= -Lambda - tol.
    Subjet:   sample u(x + t nu) and require fitted slope <= +Lambda + tol.
    The slope is a through-origin regression over the smallest half of
    t_list; the model residual rides along in the report.
    """
    x_fb = (x_fb,) if isinstance(x_fb, (int, np.integer)) else tuple(x_fb)
    xi_norm = float(np.linalg.norm(jet.xi))
    if xi_norm == 0.0:
        raise ValueError("free boundary condition requires xi != 0")
    tol_slope = 10.0 * u.h if tol_slope is None else float(tol_slope)
    t = np.sort(np.asarray(t_list, dtype=float))
    if t.size < 2 or np.any(t <= 0.0):
        raise ValueError("t_list needs >= 2 positive values")
    nu = jet.xi / xi_norm
    x0 = u.point(x_fb)
    if jet.side == "super":
        g = _ray_values(u, x0, -nu, t)
        condition = "subsolution"
    else:
        g = _ray_values(u, x0, nu, t)
        condition = "supersolution"
    k = max(2, (t.size + 1) // 2)
    s, res = _origin_slope(t[:k], g[:k])
    if condition == "subsolution":
        passed = s >= -Lambda - tol_slope
    else:
        passed = s <= Lambda + tol_slope
    return FBReport(
        condition=condition, point=x_fb, nu=nu, slope=s, Lambda=float(Lambda),
        tol_slope=tol_slope, t_values=t, u_values=g, residual=res,
        passed=bool(passed),
    )


def normal_derivative(
    u: ScalarField,
    x_fb: tuple[int, ...] | int,
    nu,
    side: str,
    t_list,
) -> float:
    """One-sided normal derivative along nu by through-origin regression.

    side 'plus' fits u(x + t nu) ~ s t; side 'minus' fits -u(x - t nu) ~ s t,
    so for the standard two-phase geometry both values are nonnegative and
    agree with |grad u| at differentiable points.
    """
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    x_fb = (x_fb,) if isinstance(x_fb, (int, np.integer)) else tuple(x_fb)
    nu = np.asarray(nu, dtype=float)
    nu = nu / np.linalg.norm(nu)
    t = np.sort(np.asarray(t_list, dtype=float))
    if t.size < 2 or np.any(t <= 0.0):
        raise ValueError("t_list needs >= 2 positive values")
    x0 = u.point(x_fb)
    if side == "plus":
        g = _ray_values(u, x0, nu, t)
    else:
        g = -_ray_values(u, x0, -nu, t)
    k = max(2, (t.size + 1) // 2)
    s, _ = _origin_slope(t[:k], g[:k])
    return s
