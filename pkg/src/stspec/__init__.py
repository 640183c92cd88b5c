"""Spatiotemporal noise spectroscopy of pulse-driven linear qubit registers.

Simulates the dephasing of a register driven by coordinated pi-pulse
sequences under a stationary, uniform Gaussian noise field, and reconstructs
the field's two-dimensional spectral density from attenuation-function data
via two-stage linear fits and comb deconvolution.
"""

__version__ = "0.1.0"

from .attenuation import (AttenuationGrid, MonteCarloResult, attenuation_grid,
                          chi_monte_carlo, chi_quadrature, chi_spectroscopic,
                          marginal_spectrum, marginal_spectrum_formula,
                          slope_formula, synthesize_field)
from .errors import (ConfigError, IllConditionedError, InvalidModelError,
                     LayoutGenerationError, MissingInputError,
                     NoLinearTrendError, QuadratureAccuracyError,
                     ReconstructionImpossibleError, StspecError,
                     SynthesisError, TruncationWarning)
from .filters import (PulseSchedule, SequenceSettings, filter_transform,
                      filter_transform_comb, passband, schedule_from_shift,
                      schedules_for_register, temporal_coefficient,
                      time_filter)
from .register import (RegisterLayout, RevivalReport,
                       full_register_coefficient, make_layout,
                       revival_diagnostic, spatial_coefficient)
from .reconstruct import (LinearTailFit, ReconstructionResult, SlopeMatrix,
                          SlopesResult, alvarez_suter, build_U,
                          build_U_inverse, build_V, build_V_inverse,
                          choose_index_set, fit_linear_tail, slopes_from_grid)
from .spectra import (LorentzianFactorizedModel, SpectralModel, eval_autocorr,
                      eval_spectrum, lorentzian_line)

__all__ = [name for name in dir() if not name.startswith("_")]
