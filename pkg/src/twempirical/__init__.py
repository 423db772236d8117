"""Tracy-Widom empirical estimator for largest-root tests in high dimensions."""
from .errors import DegenerateNullError, DegenerateProblemError, FitError, ValidationError
from .estimator import TestResult, permutation_pvalue, run_estimator
from .fitting import RootSample, fit, fit_ad, fit_adr, fit_mle, fit_mm
from .linalg import DataMatrix, DoubleWishartPair, LargestRoot, all_roots, largest_root, truncated_evd
from .problems import (CcaSpec, CovEqualSpec, ManovaSpec, PcevSpec, build_cca, build_covequal, build_manova,
                       build_pair, build_pcev, pcev_component_and_vif, permute)
from .shrinkage import build_shrunk_pair, ledoit_wolf
from .tracywidom import TWLocationScale, tw_cdf, tw_moments, tw_pdf, tw_quantile, tw_sf

__version__ = "0.1.0"
