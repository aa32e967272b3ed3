"""Algebraic spectra of the quasi-exactly solvable sextic oscillator.

The family of potentials x^6 + 2 b x^4 + (b^2 - (4m+3)) x^2 carries, for each
integer m >= 0, an (m+1)-dimensional invariant subspace on which the
Hamiltonian acts as a tridiagonal matrix.  This package computes that
algebraic part of the spectrum as a function of the complex parameter b:

* exact characteristic polynomials and double-precision spectra up to large m,
* the level-crossing set (where two algebraic eigenvalues collide),
* spectral monodromy around crossings (which eigenvalues swap along a loop),
* the m -> infinity limit: root measure, its support, and related geometry.

The public API is re-exported here; the CLI lives in ``qes_sextic.cli`` and
the HTTP service in ``qes_sextic.service``.
"""

from .asymptotics import (
    CubicOval,
    LimitMeasureProbe,
    SegmentFamily,
    TrajectoryTopology,
    cauchy_transform,
    critical_lambdas,
    density_real,
    foci,
    gamma_oval,
    limit_measure_probe,
    omega_quadratic_residual,
    segment_endpoints,
    segment_family,
    support_interval_real,
    support_scan,
    trace_horizontal_trajectories,
)
from .backend import KERNEL_IMPL
from .errors import (
    BracketingError,
    ClearanceError,
    ConjectureViolation,
    ConvergenceError,
    IntegrityError,
    MatchingError,
    QesError,
    RefinementError,
)
from .polycore import (
    ExactBivariatePoly,
    ExactUnivariatePoly,
    RootSet,
    aberth_roots,
    interpolate_exact,
    resultant,
    resultant_direct,
)
from .spectrum import (
    Spectrum,
    build_matrix,
    charpoly,
    charpoly_bivariate,
    charpoly_exact,
    eigenpolynomial,
    eigenvalues,
    empirical_cauchy,
    scaled_eigenvalues,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_IMPL",
    "QesError",
    "ConvergenceError",
    "IntegrityError",
    "BracketingError",
    "ClearanceError",
    "MatchingError",
    "ConjectureViolation",
    "RefinementError",
    "SegmentFamily",
    "CubicOval",
    "TrajectoryTopology",
    "LimitMeasureProbe",
    "segment_endpoints",
    "segment_family",
    "support_interval_real",
    "density_real",
    "foci",
    "gamma_oval",
    "cauchy_transform",
    "critical_lambdas",
    "trace_horizontal_trajectories",
    "support_scan",
    "limit_measure_probe",
    "omega_quadratic_residual",
    "ExactUnivariatePoly",
    "ExactBivariatePoly",
    "RootSet",
    "aberth_roots",
    "interpolate_exact",
    "resultant",
    "resultant_direct",
    "Spectrum",
    "build_matrix",
    "charpoly",
    "charpoly_exact",
    "charpoly_bivariate",
    "eigenvalues",
    "scaled_eigenvalues",
    "eigenpolynomial",
    "empirical_cauchy",
    "__version__",
]
