"""Sampling projection DPPs with hit-and-run on zonotopes."""

__version__ = "0.1.0"

from ._backend import NAME as backend
from .diagnostics import (ExactLaw, PsrfReport, acceptance_rate, enumerate_law,
                          inclusion_probability, kernel_inclusion, move_rate, psrf,
                          relative_error_trace, tv_distance)
from .errors import (ChainError, ConfigError, EnumerationLimitError, LpError,
                     NotInZonotopeError, NumericalBreakdownError, RankError, TieError,
                     ZonoDppError)
from .models import (BaseMeasure, DppTarget, Graph, apply_base_measure, barabasi_albert,
                     complete_graph, incidence_feature_matrix, load_edge_list,
                     load_feature_matrix, make_target)
from .numerics import (FeatureMatrix, ProjectionKernel, build_projection_kernel,
                       cauchy_binet_total, log_squared_volume, squared_volume)
from .samplers import (ChainState, ChainTrace, SamplerConfig, aldous_broder,
                       basis_exchange_step, exact_projection_dpp, exact_projection_dpp_batch,
                       run_chain, unif_zono_step, vol_zono_step)
from .zonotope import Chord, Tile, TilingObjective, Zonotope, chord_endpoints, extract_basis

__all__ = [name for name in dir() if not name.startswith("_")]
