"""Deep-reinforcement-learning multiple access (DLMA) simulator and learners."""

__version__ = "0.1.0"
