"""Converse bound on the rate of finite block-length codes over the AWGN channel."""

from .bounds import (
    BoundQuery,
    BoundResult,
    Status,
    closed_form_error,
    closed_form_rate,
    converse_error,
    converse_rate,
    excess_power_db,
    high_snr_excess,
    kappa_beta_rate,
    linear_excess_approx,
    min_ebn0,
    normal_approx_error,
    normal_approx_rate,
    rate_approx,
    rate_at_ebn0,
    uncoded_error_n1,
)
from .certify import Certificate, bbar_bound, certify_sandwich
from .errors import OracleRangeError, PoleError, TwoTermBreakdown, WindowError
from .kernels import BACKEND
from .series_engine import build_coefficients, g_series
from .specfun import LogProb, chi2_noncentral_cdf_oracle, gaussian_q, gaussian_q_inv
from .temme_core import ChannelParams, Kind, g_integral, kind_geometry, log_prob, make_threshold, validity_window

__version__ = "0.1.0"
