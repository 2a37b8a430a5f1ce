"""Cognitive spatial-multiplexing link analysis and simulation toolkit.

Closed-form performance metrics (per-stream SINR distribution, energy-detector
ROC/AUC, outage, secondary power ceilings, co-channel interference
probability) for a multi-antenna secondary receiver that decodes spatially
multiplexed streams with a linear MMSE front end and senses the residual for
primary activity, plus a seeded Monte-Carlo engine that validates every
closed form independently.
"""

__version__ = "0.1.0"
