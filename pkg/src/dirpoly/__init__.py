"""Tools for best L2(0, H) approximation by Dirichlet polynomials with
bounded coefficients, and for the analytic bookkeeping around them:
frequency systems, convergence criteria, compactly supported windows with
sinc-product transforms, and zeta/Hurwitz short-interval integrals.
"""

from .frequency import (
    BoundProfile,
    CoeffSystem,
    FrequencySystem,
    RegularityProfile,
    build,
    check_regularity,
    counting_function,
    load_table,
)
from .criterion import (
    CriterionVerdict,
    OmegaCurve,
    dichotomy_sum,
    lambda_log_integral,
    omega_curve_criterion,
)
from .gram import (
    GramSystem,
    QuadratureError,
    Target,
    assemble,
    dump_gram,
    gram_entry,
    load_gram,
    min_rayleigh,
    quad_oracle,
)
from .solver import (
    SolveResult,
    SweepCurve,
    brute_oracle,
    kkt_residual,
    minimize,
    objective_value,
    sweep_N,
)
from .window import (
    DecayTarget,
    Window,
    bn_bounds,
    build_window,
    convolve_series,
    discrete_transform,
    verify_decay,
)
from .zeta import (
    ScanRecord,
    ZetaEval,
    eta_series,
    hurwitz_em,
    interval_integral,
    reference_minimum,
    running_minimum,
    scan,
    zeta_em,
    zeta_truncated,
)

__version__ = "0.1.0"

__all__ = [
    "BoundProfile",
    "CoeffSystem",
    "CriterionVerdict",
    "DecayTarget",
    "FrequencySystem",
    "GramSystem",
    "OmegaCurve",
    "QuadratureError",
    "RegularityProfile",
    "ScanRecord",
    "SolveResult",
    "SweepCurve",
    "Target",
    "Window",
    "ZetaEval",
    "assemble",
    "bn_bounds",
    "brute_oracle",
    "build",
    "build_window",
    "check_regularity",
    "convolve_series",
    "counting_function",
    "dichotomy_sum",
    "discrete_transform",
    "dump_gram",
    "eta_series",
    "gram_entry",
    "hurwitz_em",
    "interval_integral",
    "kkt_residual",
    "lambda_log_integral",
    "load_gram",
    "load_table",
    "min_rayleigh",
    "minimize",
    "objective_value",
    "omega_curve_criterion",
    "quad_oracle",
    "reference_minimum",
    "running_minimum",
    "scan",
    "sweep_N",
    "verify_decay",
    "zeta_em",
    "zeta_truncated",
    "__version__",
]
