"""Fundamental solutions of constant-coefficient elliptic operators, layer potentials and their checks."""
__version__ = "0.1.0"

from .assembly import (
    FundamentalSolutionTable,
    build_table,
    compute_W0,
    compute_W1,
    compute_W2,
    eval_S,
    eval_S0,
    eval_S_derivative,
    load_table,
    save_table,
)
from .contour import (
    ContourSpec,
    PlaneWaveCoefficients,
    contour_radius,
    series_coefficients,
    truncation_bound,
    v_eval,
    w_eval,
)
from .errors import *  # noqa: F401,F403
from .layer import (
    DensitySamples,
    KernelHandle,
    ParamBoundary,
    derivative_potential,
    jump_report,
    make_boundary,
    single_layer,
    table_kernel,
    trace_extrapolate,
)
from .operator import (
    OperatorCoefficients,
    adjoint_symbol,
    apply_operator_fd,
    ellipticity_margin,
    symbol_eval,
)
from .oracles import (
    TestFunction,
    bessel_k0,
    closed_form_reference,
    distributional_delta_test,
    reference_kernel,
    residual_scan,
)
from .radial import RadialTerm, RadialTermSum, iterated_laplacian, radial_laplacian_step
from .sphere import (
    HarmonicExpansion,
    build_quadrature,
    forward_transform,
    gunter_derivative,
    rotation_map,
    synthesize,
)
