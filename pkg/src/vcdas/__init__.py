"""Downlink rate analysis for virtual-cell distributed antenna systems."""

from .bounds import estimate_entropy_terms, estimate_upper_bound
from .geometry import (LargeScaleGains, Topology, VirtualCellMap, form_virtual_cells,
                       generate_topology, pairwise_gains)
from .grouping import GroupPartition, cluster_bs_baseline, group_users
from .harness import ConfigError, ExperimentConfig
from .mrt import (MrtContext, average_sinr, ergodic_rate_closed_form, ergodic_rate_mc,
                  mrt_power_fractions, upsilon)
from .report import RateReport
from .specfun import HypoexpSpec, exp_e1, hypoexp_pdf, upper_incomplete_gamma
from .vopt import mean_nearest_user_distance, optimal_v, vstar
from .zfbf import zf_precoders, zfbf_user_rates

__version__ = "0.1.0"
