"""Fair influence blocking maximization under demographic parity."""

__version__ = "0.1.0"
