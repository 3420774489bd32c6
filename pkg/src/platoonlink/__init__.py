"""Joint control-stability and wireless-delay analysis for autonomous
vehicular platoons, with built-in simulation oracles."""

__version__ = "0.1.0"

from .model import (HighwayScene, PlatoonSpec, QueueSpec, RadioSpec,
                    VehicleState, control_accel, errors, headway_velocity)
from .stability import (ErrorDynamics, StabilityReport, build_dynamics,
                        plant_threshold, stability_report, string_threshold,
                        transfer_magnitude)
from .sinr import (CcdfTable, ServiceMoments, SinrModel, ccdf_table,
                   laplace_nonplatoon, laplace_platoon, service_moments,
                   sinr_ccdf, sinr_pdf)
from .delay import DelayReport, end_to_end_delay, processor_delay, transceiver_delay
from .reliability import (ReliabilityReport, reliability_approx,
                          reliability_lower_bound, reliability_report)
from .optimize import (GainBox, OptResult, grid_search_oracle, lagrangian,
                       optimize_gains, optimize_lower_bound,
                       subgradient_residuals)
from .sim import (EmpiricalDelay, FixedDelay, LeaderProfile, SimScenario,
                  SimTrace, UniformDelay, empirical_ccdf,
                  empirical_reliability, equilibrium_states, perturbed_states,
                  sample_sinr, simulate_platoon, simulate_tandem_queue)

__all__ = [name for name in dir() if not name.startswith("_")]
