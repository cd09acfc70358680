"""Giant-atom waveguide QED simulator."""

from .darkstate import (
    DarkMode,
    DoubleDark,
    bound_profile,
    bound_total,
    dark_amplitude,
    dark_condition,
    double_dark_params,
)
from .dynamics import (
    PacketDrive,
    ProbeTone,
    Trajectory,
    excitation_in_window,
    field_snapshot,
    integrate_beta,
)
from .errors import (
    DegeneratePoleError,
    GiantAtomError,
    HistoryRangeError,
    InfeasiblePairError,
    InvalidConfigurationError,
    InvalidModeError,
    NumericalFailure,
    SingularPhaseError,
    StepSizeError,
)
from .kernel import DelayTable, EffectiveTwoPoint, build_delay_table, effective_two_point
from .laplace import PoleSet, SearchWindow, chi_of_t, conservation_check, find_poles, xi_k_of_t
from .model import AtomLayout, ControlSchedule, two_group_layout, uniform_layout
from .protocol import CatchResult, PacketSpec, free_packet, optimal_phase, run_catch, run_release
from .scattering import (
    non_markovian_threshold,
    reflection_t,
    scatter_spectrum,
    side_peaks,
    stationary_R,
    stationary_T,
    transmission_t,
    zeta_of_t,
)

__version__ = "0.1.0"
