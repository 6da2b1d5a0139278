"""Outage correlation under framed slotted ALOHA with Nakagami fading, and its
effect on mean-square average consensus."""

from .deployment import (Channel, ConfigError, Deployment, ParameterError, Scenario, SlotConfig,
                         derive_radio_params, grid_deployment, load_scenario, mean_power_matrix,
                         parse_scenario)
from .nakagami import (UnsupportedModelError, gamma_success, rayleigh_success_closed_form,
                       weak_compositions)
from .slotmodel import (CaseTag, ComplexityError, LinkPairCase, LinkStats, Model,
                        classify_link_pair, correlation_matrix, cov_fd, cov_hd,
                        expected_success, link_stats, phi_sum, psi_sum, uhbm_from)
from .oracle import McReport, compare, exact_stats, mc_stats
from .consensus import (BernoulliSampler, ConsensusMoments, NumericError, PerformanceBounds,
                        PhysicalSampler, SpectralSummary, laplacian_moments, minimize_eps_rho,
                        numerical_radius, one_step_bound, per_step_bounds, r_matrix, radii,
                        simulate_consensus, spectral_radius)

__version__ = "0.1.0"
