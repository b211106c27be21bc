"""
Overlapping-cluster Bernoulli mixtures for actor-event networks
"""

__version__ = "0.1.1"
