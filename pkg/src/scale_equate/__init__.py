"""Rasch-based equating of experience-based food-insecurity scales."""

__version__ = "0.1.0"

from .classical import (EquatingTable, equipercentile_equate, linear_equate,  # noqa: E402
                        mean_equate)
from .ingest import (ResponseMatrix, ScaleDefinition, load_responses,  # noqa: E402
                     load_scale, restrict_to_items, score)
from .irt_equate import (LinkingTransform, irt_true_score_equate,  # noqa: E402
                         mean_sigma_link, select_anchor)
from .prevalence import (DEFAULT_THRESHOLDS, linking_correspondence,  # noqa: E402
                         minimization_correspondence, voh_prevalence)
from .rasch import (estimate_person_params, fit_cml, fit_statistics, invert_tcc,  # noqa: E402
                    irf, tcc)
from .resampling import BootstrapSpec, bootstrap_see  # noqa: E402
from .score_dist import distribution, inverse_percentile_rank, percentile_rank  # noqa: E402
from .simulate import SimSpec, simulate_responses  # noqa: E402
