"""Scheduling and power control for V2V broadcast under co- and adjacent-channel interference."""
from .core import (MetricsReport, Params, Schedule, SuccessMatrix, derive_constants, link_sinr,
                   metrics, rb_signal_interference, rb_sinr, success_matrix, u_to_x)
from .environment import (AciModel, ChannelMatrix, ChannelParams, ConvoyScenario, Duplex, LinkSets,
                          build_aci_matrix, channel_gain_matrix, intended_sets, sample_convoy)
from .errors import ConfigurationError, SearchTooLarge
from .exact import ExactConfig, exact_joint, exact_power, exact_schedule
from .harness import ExperimentConfig, fairness_report, run_replication, run_sweep, simulate
from .lpmodel import ModelKind, ModelSpec, emit_model, model_stats, read_lp
from .power import equal_power, heuristic_power
from .schedulers import (bis_freq_slots, bis_schedule, bis_vue_ids, block_interleave,
                         heuristic_schedule, scheduling_order)

__version__ = "0.1.0"
