"""Seeded simulator comparing gossip, binary-tree and clustered-tree broadcast."""

from .core import ConfigError, GossipStyle, Mode, Prng, SimConfig, choose_distinct, prng_new
from .engine import RoundLog, RunSummary, run, run_sweep, simulate
from .metrics import Aggregate, aggregate, write_csv
from .topology import (
    Overlay,
    OverlayKind,
    build_binary_tree,
    build_clustered_tree,
    build_contact_graph,
    hop_distance,
)

__all__ = [
    "Aggregate", "ConfigError", "GossipStyle", "Mode", "Overlay", "OverlayKind", "Prng",
    "RoundLog", "RunSummary", "SimConfig", "aggregate", "build_binary_tree",
    "build_clustered_tree", "build_contact_graph", "choose_distinct", "hop_distance",
    "prng_new", "run", "run_sweep", "simulate", "write_csv",
]
