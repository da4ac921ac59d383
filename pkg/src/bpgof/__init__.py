"""Goodness-of-fit tests for the bivariate and trivariate Poisson law based on
the empirical probability generating function."""

from .alts import AlternativeSpec, parse_family, sample_alternative, theoretical_moments
from .boot import BootstrapConfig, TestReport, bootstrap_test, bootstrap_tests, pvalue_uniformity_check
from .errors import (BPGofError, DegenerateSampleError, NumericalError, ParameterError, SampleError,
                     UnstableStatisticError)
from .estimate import EstimateResult, estimate, log_likelihood, mle, mle_tp, moment_estimate
from .harness import bench, merge_shards, simulate_power, simulate_size
from .model import (CountSample, ThetaBP, ThetaTP, pgf_bp, pgf_tp, pmf_bp_convolution, pmf_bp_recurrence,
                    pmf_bp_table, sample_bp, sample_tp)
from .mvariate import R3_stat, S3_stat, T3_stat, W3_stat, residuals_D3
from .rng import derive_seed, substream
from .stats import (R_stat, S_stat, StatValue, T_stat, T_stat_closed, T_stat_quadrature, W_stat, WeightExponents,
                    crockett_T, epgf, loukas_kemp_IB, rayner_best_NIB, residuals_D)

__version__ = "0.1.0"
