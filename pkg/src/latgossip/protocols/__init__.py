"""Gossip protocols run on the round engine."""
from .dtg import GossipOutcome, dtg_violations, distance_violations, l_dtg, run_t_sequence, t_sequence
from .eid import (DriverOutcome, PipelineParams, UnifiedOutcome, discover_latencies, eid, general_eid,
                  path_discovery, rr_broadcast, termination_check, unified_dissemination)
from .pushpull import PushPull, push_pull
from .spanner import OrientedSpanner, spanner_construct, stretch_violations

__all__ = [
    "DriverOutcome", "GossipOutcome", "OrientedSpanner", "PipelineParams", "PushPull", "UnifiedOutcome",
    "discover_latencies", "distance_violations", "dtg_violations", "eid", "general_eid", "l_dtg",
    "path_discovery", "push_pull", "rr_broadcast", "run_t_sequence", "spanner_construct",
    "stretch_violations", "t_sequence", "termination_check", "unified_dissemination",
]
