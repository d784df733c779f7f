"""Dissipative kernels for open quantum systems in the energy eigenbasis.

Builds the second-order kernel of a reduced density matrix five ways
(frequency-resolved, two Redfield resonance conventions, an
energy-conserving selection-rule form, and the jump-operator form),
propagates Markovian and time-nonlocal master equations, probes the
resulting maps for complete positivity, and checks everything against
independent oracles: closed-form qubit results, exact finite-bath
unitary dynamics, and direct double-commutator quadrature.

The headline algebraic fact, exercised to float rounding in the test
suite: the energy-conserving kernel and the jump-operator kernel are
the same object, with no rotating-wave averaging anywhere.
"""

from .core import (
    InputError,
    InvariantError,
    EnergySpectrum,
    CouplingChannelSet,
    DensityMatrix,
    Superoperator,
    BohrBin,
    JumpOperatorSet,
    build_spectrum,
    hermitian_channel,
    ladder_channels,
    bohr_frequencies,
    decompose_jump_operators,
)
from .bath import (
    BathSpectrum,
    TimeCorrelation,
    flat_spectrum,
    thermal_ohmic_spectrum,
    lorentzian_spectrum,
    gaussian_spectrum,
    custom_spectrum,
    tabulated_spectrum,
    time_correlation,
    kms_residual,
    positivity_check,
)
from .kernels import (
    VARIANT_TAGS,
    KernelVariant,
    KossakowskiBlock,
    born_kernel_frequency,
    redfield_kernel,
    energy_conserving_kernel,
    lindblad_kernel,
    build_kernel,
    kossakowski_matrix,
    kernel_difference,
    trace_condition_residual,
)
from .dynamics import (
    Liouvillian,
    Trajectory,
    SteadyStateResult,
    BlockReport,
    build_liouvillian,
    evolve_markov,
    evolve_nonlocal,
    steady_state,
    block_structure_report,
    trace_distance,
)
from .diagnostics import (
    MapCheck,
    choi_matrix,
    choi_spectrum,
    default_probe_times,
    positivity_scan,
    map_check,
    flip_gain_sign,
    equivalence_report,
)
from .oracle import (
    QubitClosedForms,
    FiniteBathModel,
    qubit_analytic,
    gauss_legendre_modes,
    exact_reduced_evolution,
    eqm_born_kernel,
)

__version__ = "0.1.0"
