"""Edge pipeline: packet captures -> windowed summaries -> daily features ->
fuzzy criterion likelihoods -> persistence gate -> episode indicator."""

__version__ = "0.1.0"
