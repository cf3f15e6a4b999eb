"""End-to-end Lipschitz measurement and the doubling certificate report.

The harness measures the exhaustive Lipschitz quotient of a field over a
ball, builds the constant ledger from the data norms, sweeps the witness
search over a lattice of centers, and assembles everything into one
report: either no center admits a witness (the discrete analogue of the
comparison estimate, hence an (L + varrho)-Lipschitz certificate), or a
witness is attached together with its case classification and the
interior-maximum trace.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .barrier import BarrierParams
from .doubling import (
    CaseReport,
    ConstantLedger,
    DoublingWitness,
    JetFitError,
    LemmaChainTrace,
    build_ledger,
    classify_witness,
    default_tau_w,
    find_witness,
    verify_lemma_chain,
)
from .grid import GridCoverageError
from .solver import ProblemSpec
from .viscosity import extract_phases
from .grid import ScalarField

__all__ = [
    "LipschitzReport",
    "CenterResult",
    "lipschitz_quotient",
    "default_centers",
    "theorem_report",
]


def lipschitz_quotient(
    u: ScalarField, region_radius: float, center=None
) -> tuple[float, tuple[np.ndarray, np.ndarray]]:
    """Exhaustive max of |u(x)-u(y)|/|x-y| over grid pairs in a ball.

    Ties resolve to the lexicographically smallest index pair.  Raises
    GridCoverageError when the ball is not covered by the grid.
    """
    center = np.zeros(u.n) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    idx = u.ball_indices(center, region_radius)
    pts = np.stack([u.point(tuple(i)) for i in idx])
    vals = np.array([u.values[tuple(i)] for i in idx])
    diff = pts[:, None, :] - pts[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = np.abs(vals[:, None] - vals[None, :]) / D
    Q[D == 0.0] = -np.inf
    flat = int(np.argmax(Q))
    i, j = np.unravel_index(flat, Q.shape)
    return float(Q[i, j]), (pts[i], pts[j])


def _phase_quotients(
    u: ScalarField, phases, region_radius: float
) -> dict[str, float]:
    """Max quotient split by endpoint phases: pos-pos, neg-neg, and the rest."""
    idx = u.ball_indices(np.zeros(u.n), region_radius)
    pts = np.stack([u.point(tuple(i)) for i in idx])
    vals = np.array([u.values[tuple(i)] for i in idx])
    labels = np.array([phases.phase_of(tuple(i)) for i in idx])
    diff = pts[:, None, :] - pts[None, :, :]
    D = np.sqrt(np.sum(diff * diff, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = np.abs(vals[:, None] - vals[None, :]) / D
    Q[D == 0.0] = -np.inf
    out: dict[str, float] = {}
    both_pos = (labels[:, None] == "pos") & (labels[None, :] == "pos")
    both_neg = (labels[:, None] == "neg") & (labels[None, :] == "neg")
    cross = ~(both_pos | both_neg)
    for name, mask in (("pos", both_pos), ("neg", both_neg), ("cross", cross)):
        sel = Q[mask]
        sel = sel[np.isfinite(sel)]
        out[name] = float(np.max(sel)) if sel.size else 0.0
    return out


def default_centers(n: int, count: int = 5, radius: float = 0.5) -> list[np.ndarray]:
    """count^n lattice over [-radius, radius]^n, clipped to the ball."""
    axis = np.linspace(-radius, radius, count)
    if n == 1:
        return [np.array([z]) for z in axis]
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    return [z for z in grid if float(np.linalg.norm(z)) <= radius + 1e-12]


@dataclass
class CenterResult:
    z0: np.ndarray
    witness: DoublingWitness | None
    case: CaseReport | None
    chain: LemmaChainTrace | None
    chain_error: str | None


@dataclass
class LipschitzReport:
    """Measured quotients, the ledger, and the certificate outcome."""

    sup_quotient: float
    arg_pair: tuple[np.ndarray, np.ndarray]
    per_phase: dict[str, float]
    ledger: ConstantLedger
    bound_value: float  # L + varrho
    empirical_C: float  # sup_quotient / (L + normU)
    certificate: DoublingWitness | None  # None = pass
    case_report: CaseReport | None
    chain_trace: LemmaChainTrace | None
    centers: list[CenterResult]
    tau_w: float
    region_radius: float

    @property
    def passed(self) -> bool:
        return self.certificate is None


def _scan_center(args):
    u, ledger, params, z0, search_radius, tau_w, jet_radius = args
    led = ledger.with_center(z0)
    witness = find_witness(u, led, params, search_radius, tau_w)
    case = chain = None
    chain_error = None
    if witness is not None:
        phases = extract_phases(u)
        case = classify_witness(witness, phases, u, led, params)
        try:
            chain = verify_lemma_chain(u, witness, led, params, jet_radius)
        except (JetFitError, GridCoverageError) as exc:
            chain_error = f"{type(exc).__name__}: {exc}"
    return CenterResult(z0=np.asarray(z0, dtype=float), witness=witness,
                        case=case, chain=chain, chain_error=chain_error)


def theorem_report(
    u: ScalarField,
    problem: ProblemSpec,
    params: BarrierParams | None = None,
    centers=None,
    search_radius: float = 0.5,
    tau_w: float | None = None,
    jet_radius: float | None = None,
    region_radius: float = 0.5,
    L_override: float | None = None,
    K_override: float | None = None,
) -> LipschitzReport:
    """Build the ledger, sweep centers for witnesses, and assemble the report.

    The ledger comes from ||f+||, ||f-||, Lambda and ||u||, all measured
    over the unit ball; L and K can be forced (counterexample runs).  Each
    center is independent; with INFLAP_WORKERS > 1 the sweep fans out to a
    process pool and results merge in center order either way.  The
    certificate slot holds the largest-gap witness, None when every center
    is witness-free.
    """
    params = params or BarrierParams(kappa=0.125, theta=0.5)
    normFp, normFm = problem.forcing_norms(1.0)
    normU = u.sup_norm(1.0)
    ledger = build_ledger(
        normFp, normFm, normU, problem.Lambda, np.zeros(u.n),
        params=params, L_override=L_override, K_override=K_override,
    )
    if centers is None:
        centers = default_centers(u.n)
    if tau_w is None:
        tau_w = default_tau_w(u)

    tasks = [(u, ledger, params, z0, search_radius, tau_w, jet_radius) for z0 in centers]
    workers = int(os.environ.get("INFLAP_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_center, tasks))
    else:
        results = [_scan_center(t) for t in tasks]

    best = None
    for res in results:
        if res.witness is not None and (best is None or res.witness.gap > best.witness.gap):
            best = res

    phases = extract_phases(u)
    sup_q, pair = lipschitz_quotient(u, region_radius)
    per_phase = _phase_quotients(u, phases, region_radius)
    bound = ledger.L + ledger.varrho
    denom = ledger.L + normU
    return LipschitzReport(
        sup_quotient=sup_q,
        arg_pair=pair,
        per_phase=per_phase,
        ledger=ledger,
        bound_value=bound,
        empirical_C=sup_q / denom if denom > 0.0 else 0.0,
        certificate=None if best is None else best.witness,
        case_report=None if best is None else best.case,
        chain_trace=None if best is None else best.chain,
        centers=results,
        tau_w=float(tau_w),
        region_radius=float(region_radius),
    )
