"""cocyclelab: finite-horizon diagnostics for linear cocycles.

Finite-time Lyapunov spectra, dominated splittings, Oseledets subspaces,
Sacker-Sell spectra and regularity probes, over circle rotations, toral
automorphisms and a windowed substitution subshift.
"""

__version__ = "0.1.0"

from .cocycle import (
    Cocycle,
    GeneratorCocycle,
    StabilizedProduct,
    conjugate,
    dual,
    evaluate,
    exterior_cocycle,
    normalize_det,
    rescale,
    stabilized_log_svd,
)
from .dynamics import (
    CirclePoint,
    Rotation,
    Subshift,
    SymbolicPoint,
    ToralAutomorphism,
    TorusPoint,
    TwistMap,
    Word,
    build_word,
    is_admissible,
    periodic_points,
    sample_points,
    sample_symbolic_points,
    step,
)
from .exceptions import *  # noqa: F401,F403
from .linalg import Subspace, conorm, exterior_power, norm, principal_angles, singular_values, subspace_angle, svd
from .lyapunov import (
    ExactSpectrum,
    FiniteTimeSpectrum,
    birkhoff_average,
    finite_time_spectrum,
    geometric_schedule,
    periodic_spectrum,
    spectrum_distance,
    sup_envelope,
)
from .regularity import (
    ProbeConfig,
    RegularityReport,
    CompleteRegularityReport,
    oscillation_witness,
    probe_complete_regularity,
    probe_point,
)
from .splitting import (
    DominationConfig,
    detect_domination,
    estimate_oseledets,
    estimate_sacker_sell,
    gap_series,
    hyperbolicity_test,
    liminf_gap,
)
