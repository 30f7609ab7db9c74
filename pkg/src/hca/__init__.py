"""Integer Hamiltonian cellular automata: exact dynamics, conservation laws,
band-limited reconstruction and the deformed spectral picture."""

from .bandlimit import (SampledWave, coincidence_norm, continuum_conservation_check, mod_schrodinger_residual,
                        residual_tail_bound, sinc_reconstruct, two_time_continuum, wave_from_trajectory)
from .conservation import (ConservedReport, admissible_unitary_check, check_theorem_a,
                           enumerate_admissible_unitaries, equal_time_norms, generate_commutant,
                           leibniz_identity_check, staggered_invariant, two_time_discrete)
from .dynamics import (CaState, Lapse, Trajectory, discrete_action, evolve, evolve_backward, iterate,
                       psi_action, stationarity_report, vary_action)
from .exact import GaussInt, GaussMatrix, HamiltonianSpec, build_hamiltonian, h_value_psi, h_value_xp
from .spectral import (SpectralData, convergence_order, deformation_error, dispersion_E,
                       eigensolve_hermitian, propagate_compare)

__version__ = "0.1.0"
