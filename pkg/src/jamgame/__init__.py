"""Deterministic simulator and analysis toolkit for rolling-horizon jamming games
on multiagent consensus networks."""

__version__ = "0.1.0"
