"""metricshed: collect, store, unify, and analyze software process events."""

__version__ = "0.1.0"
