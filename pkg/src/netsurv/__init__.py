"""Two-stage biomarker discovery: sparse Gaussian graphical models with hub
detection for diagnostic variable selection, then lasso-penalized Cox survival
regression with density-based patient stratification."""

__version__ = "0.1.0"

from .corpus import (ClinicalTable, CohortDataset, ExpressionMatrix, build_cohort,
                     load_clinical, load_expression)
from .coxlasso import (CoxConfig, CoxFit, cox_fit, fit_with_pmax, lambda_max,
                       partial_loglik, pmax_from_events)
from .glasso import GlassoConfig, PrecisionMatrix, glasso_fit, kkt_residual, objective
from .netselect import (GeneNetwork, HubRanking, SetComparison, compare_sets,
                        cross_rank_lookup, extract_network, hub_ranking,
                        neighborhood_subgraph, select_variables)
from .preprocess import (NormalityReport, empirical_covariance, filter_normal,
                         jarque_bera, npn_transform)
from .subsetval import ValidationReport, choose_validation_rho, validate_subset
from .survstrat import (LogRankResult, RiskStratification, SurvivalCurve, kaplan_meier,
                        kde, logrank, prognostic_index, split_threshold, stratify,
                        stratify_from_fit)
from .synthgen import (SyntheticTruth, make_prognostic_cohort, planted_block_precision,
                       sample_expression, sample_sparse_precision, sample_survival)
