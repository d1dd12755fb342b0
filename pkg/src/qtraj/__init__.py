"""qtraj: master equations and quantum filters for non-classical input fields.

A numpy library (plus a small CLI, ``qtraj``) that simulates an arbitrary
finite-dimensional open quantum system driven by combinations of a
continuous-mode single photon with vacuum, or by combinations of
continuous-mode coherent states, under homodyne or photon-counting
detection of the output.
"""

from .operators import (
    DimensionMismatchError,
    dag,
    dissipator,
    dissipator_adjoint,
    lindbladian,
    liouvillian,
    expect,
    two_level,
    cavity,
)
from .slh import SlhTriple, TimedSlhTriple, series_product, embed
from .fields import (
    Wavepacket,
    GaussianSignal,
    ConstantSignal,
    TableSignal,
    gaussian_wavepacket,
    survival_w,
    generator_coupling_lambda,
    coherent_overlap,
    CoherentAmplitudes,
    cat_mjk,
    cat_wjk,
    photon_weights,
    VacuumField,
    PhotonField,
    CatField,
    photon_superposition_gamma,
    cat_superposition_gamma,
)
from .hierarchy import (
    HierarchyState,
    vacuum_me_rhs,
    photon_hierarchy_rhs,
    cat_hierarchy_rhs,
    combine_unconditional,
    run_master,
    run_oracle,
    compare_blocks,
)
from .filters import (
    MeasurementScheme,
    FilterState,
    vacuum_homodyne_step,
    vacuum_counting_step,
    photon_homodyne_step,
    photon_counting_step,
    cat_homodyne_step,
    cat_counting_step,
    conditional_combine,
    make_filter_model,
)
from .engine import (
    TimeGrid,
    NoiseStream,
    gaussian_increment,
    bernoulli_jump,
    TrajectoryRecord,
    EnsembleSummary,
    run_trajectory,
    run_ensemble,
)

__version__ = "0.1.0"
