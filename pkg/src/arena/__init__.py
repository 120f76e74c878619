"""Forecast arena: gated ex-ante submission, ex-post scoring, rolling leaderboards."""

__version__ = "0.1.0"
