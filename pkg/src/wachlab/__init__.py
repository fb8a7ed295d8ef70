"""wachlab: exact p-adic arithmetic for strongly divisible filtered
phi-modules, lattice construction over O_F[[pi]] with its Frobenius and
cyclotomic actions, Tamagawa/equivariant-determinant valuation calculus,
and Iwasawa-algebra bookkeeping, with a deterministic batch CLI."""

__version__ = "0.1.0"

from .errors import (
    CongruenceFailure,
    Degenerate,
    ExactDivisionFailure,
    NonConvergence,
    NotAUnit,
    NotExact,
    NotIntegral,
    ParseError,
    PrecisionLoss,
    ValidationError,
    WachlabError,
    WindowOverflow,
)
from .padic import (
    OFElement,
    OFMatrix,
    PrecisionContext,
    frobenius,
    is_semisimple_at,
    newton_slopes,
    semilinear_stable_rank,
    smith_normal_form,
    teichmuller,
)
from .aplus import (
    APlusSeries,
    exact_div_pi,
    gamma_series,
    invert_series,
    mu_series,
    phi_series,
    q_series,
)
from .filmod import (
    FilPhiModule,
    RawFilPhiModule,
    category_membership,
    dual_twist,
    hodge_invariants,
    strong_divisibility_check,
    top_slope_absent,
    unit_root_rank,
)
from .wach import (
    WachData,
    apply_Ti,
    build_P,
    check_cocycle,
    check_q_cokernel,
    compute_Q,
    gamma_matrix,
    solve_H,
)
from .cep import (
    CepReport,
    ExactSequenceLadder,
    cep_check,
    det_minus_phi_dual,
    det_one_minus_phi,
    eta_exponent,
    exact_sequence_exponent,
    gamma_star,
    gamma_star_window_unit,
    tam_exponent,
)
from .iwasawa import (
    IwasawaContext,
    IwasawaElement,
    delta_twist_consistency,
    ell,
    eval_at_zero,
    idempotent,
    is_lambda_unit,
    twist1,
    twist_minus1,
)
from .jobs import JobDocument, generate_corpus, parse_job, run_job

__all__ = [
    "__version__",
    # errors
    "CongruenceFailure", "Degenerate", "ExactDivisionFailure", "NonConvergence",
    "NotAUnit", "NotExact", "NotIntegral", "ParseError", "PrecisionLoss",
    "ValidationError", "WachlabError", "WindowOverflow",
    # base ring
    "OFElement", "OFMatrix", "PrecisionContext", "frobenius", "is_semisimple_at",
    "newton_slopes", "semilinear_stable_rank", "smith_normal_form", "teichmuller",
    # series ring
    "APlusSeries", "exact_div_pi", "gamma_series", "invert_series", "mu_series",
    "phi_series", "q_series",
    # filtered modules
    "FilPhiModule", "RawFilPhiModule", "category_membership", "dual_twist",
    "hodge_invariants", "strong_divisibility_check", "top_slope_absent",
    "unit_root_rank",
    # lattice construction
    "WachData", "apply_Ti", "build_P", "check_cocycle", "check_q_cokernel",
    "compute_Q", "gamma_matrix", "solve_H",
    # valuation calculus
    "CepReport", "ExactSequenceLadder", "cep_check", "det_minus_phi_dual",
    "det_one_minus_phi", "eta_exponent", "exact_sequence_exponent", "gamma_star",
    "gamma_star_window_unit", "tam_exponent",
    # Iwasawa layer
    "IwasawaContext", "IwasawaElement", "delta_twist_consistency", "ell",
    "eval_at_zero", "idempotent", "is_lambda_unit", "twist1", "twist_minus1",
    # batch
    "JobDocument", "generate_corpus", "parse_job", "run_job",
]
