"""Tail-index estimation for randomly right-truncated heavy-tailed data."""
from .empirical import (SortedSample, build_sorted, lb_survival_at_kth, lynden_bell_cdf,
                        w_survival_at_kth, woodroofe_cdf)
from .estimators import (DegenerateEstimateError, Estimator, TailEstimate, asymptotic_sigma2,
                         confidence_interval, estimate_path, hill_estimator, hill_path, lb_tail_index,
                         lb_weights, ratio_tail_index, tail_process_lb, w_weights,
                         woodroofe_tail_index, worms_fixed_threshold)
from .models import (BurrModel, EmptySampleError, TruncatedSample, TruncationScheme, burr_quantile,
                     burr_second_order_tau, burr_survival, generate_truncated_sample, solve_gamma2)
from .simulation import ExperimentConfig, SummaryTable, emit_table, run_experiment, run_replication
from .threshold import KSelection, reiss_thomas_select, select_k_for

__version__ = "0.1.0"
