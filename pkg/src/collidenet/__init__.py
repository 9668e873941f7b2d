"""Two-pair packet network with delayed channel-state feedback.

Phase 1 sends every packet once and sorts it into queues by the channel
case it met; two coding passes merge those queues into packets of common
interest; Phase 2 multicasts them with random linear coding; receivers
decode by elimination over GF(2**31 - 1).
"""

from ._backend import BACKEND
from .analysis import (ThroughputRegion, capacity_region, chernoff_bound, lemma2_check,
                       predict_total_time, rateless_region, tdma_region)
from .channel import ChannelState, LinkMeasurement, case_of, classify_receiver_state, sample_state
from .combiner import apply_type1, apply_type2, combine, conventional_cost_vs_coded_cost
from .field import projection_dimension, rank, solve_subset
from .harness import SimConfig, TrialResult, replay, run_experiment, sweep
from .multicast import MulticastSession, lemma1_region, run_phase2
from .queues import PacketRecord, QueueSet, QueueTag, apply_case, expected_queue_sizes, run_phase1
from .receiver import DecodeReport, EquationStore, decodability_metric, decode, observe

__version__ = "0.1.0"
