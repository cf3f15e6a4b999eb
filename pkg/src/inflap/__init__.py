"""Numerical laboratory for the two-phase infinity-Laplacian free boundary
problem: a monotone grid solver, discrete viscosity checks, the doubling
comparison machinery, and an end-to-end Lipschitz certificate."""

from .barrier import (
    BarrierCertificate,
    BarrierParams,
    check_window,
    choose_parameters,
    omega_eval,
    verify_keq,
)
from .doubling import (
    CaseReport,
    ConstantLedger,
    DoublingWitness,
    LemmaChainTrace,
    build_ledger,
    classify_witness,
    find_witness,
    grad_phi,
    lemma_bound,
    m_omega,
    phi_eval,
    verify_lemma_chain,
)
from .grid import GridCoverageError, ScalarField
from .harness import LipschitzReport, lipschitz_quotient, theorem_report
from .solver import (
    ConvergenceError,
    ProblemSpec,
    SolveConfig,
    cone_problem,
    convergence_study,
    discrete_inflap,
    manufactured_solution,
    solve,
)
from .viscosity import (
    DiscreteJet,
    FBReport,
    PhaseSets,
    check_fb_condition,
    check_interior,
    extract_phases,
    fit_jet,
    normal_derivative,
)

__version__ = "0.1.0"
