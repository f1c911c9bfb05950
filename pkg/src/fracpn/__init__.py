"""Numerical laboratory for fractional Peierls-Nabarro dislocation dynamics.

Subpackages cover the multiwell potential, discrete fractional Laplacians,
heteroclinic layer profiles, constrained multibump equilibria, the rescaled
parabolic flow, the interacting-particle dynamics with collisions, and the
homogenization / Orowan pipeline.
"""

__version__ = "0.1.0"
