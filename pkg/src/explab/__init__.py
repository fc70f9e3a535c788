"""Explanation-assisted learning on graphs at toy scale.

Exact small-instance problems, ERM variants that use explanation subgraphs,
brute-force explanation-aware VC dimension, invariance quantities, and a
numpy message-passing classifier trained with explanation-preserving
augmentation.
"""

__version__ = "0.1.0"
