"""Survey-weighted pseudo-posterior estimation with a replicate-based
covariance correction for complex sampling designs."""

from .adjust import (ReplicateConfig, SandwichEstimates, adjust_draws,
                     cholesky, deff_mean, deff_params, estimate_HJ,
                     resample_replicate)
from .designs import (Population, ScenarioConfig, SCENARIOS, draw_DE,
                      draw_PPS1, draw_PPS3, draw_SPPS1, draw_SPPS3,
                      draw_sample, generate_population, systematic_pps)
from .evaluate import (IntervalReport, SimulationSummary, chi2_quantile,
                       joint_covered, marginal_interval, run_realization,
                       run_scenario)
from .io import (read_draws, read_microdata, read_summary, write_draws,
                 write_microdata, write_summary)
from .model import (SurveySample, fit_mle, hessian, log_pseudo_likelihood,
                    normalize_weights, score)
from .sampler import (DrawsMatrix, PriorSpec, SamplerConfig, diagnostics,
                      sample_pseudo_posterior)

__version__ = "0.1.0"
