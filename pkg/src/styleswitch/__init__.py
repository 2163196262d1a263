"""Agent-based stock-market simulator with trait-driven trading-style switching
and cohort alignment tests."""

__version__ = "0.1.0"
