"""Gossip simulation on latency-weighted graphs."""

__version__ = "0.1.0"
