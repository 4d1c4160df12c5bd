"""Numerical laboratory for conformal distortion of contactomorphisms of
spaces of cooriented contact elements over tori."""

__version__ = "0.1.0"

from .algebra import (
    AlgebraError,
    FreeAutomorphism,
    IntMatrix,
    a_block,
    abelian_bar_s,
    cyclic_reduce,
    eigen_moduli,
    free_growth,
    is_periodic,
    s_value,
)
from .dissipation import (
    DissipationReport,
    GridSpec,
    Thresholds,
    chi_estimate,
    classify,
    compute_report,
    lyapunov_estimate,
    r_sequence,
    verify_bound,
)
from .geometry import (
    CEPoint,
    ConstantForm,
    ContactForm,
    CotangentPoint,
    Direction,
    GeometryError,
    MetricForm,
    PullbackForm,
    RoundForm,
    TorusPoint,
    TrigForm,
    TrigTerm,
    norm_of,
)
from .maps import (
    CanonicalLift,
    ContactFlow,
    ContactMap,
    MapError,
    MetricHamiltonian,
    ModulatedNormHamiltonian,
    MomentumHamiltonian,
    ReebTranslation,
    Shear,
    conformal_factor,
    homology_action,
    identity_map,
    make_composite,
)
from .report import ExperimentConfig, load_config, run
from .shapes import (
    FlatMetric,
    ShapeError,
    StarDomain,
    act,
    delta,
    displacement_estimate,
    duality_check,
    flat_shape,
    stable_norm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
