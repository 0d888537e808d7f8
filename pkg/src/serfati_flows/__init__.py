"""Kernel-split constitutive laws, Littlewood-Paley and uniformly local norms
for non-decaying 2D SQG and 3D Euler flows on a periodic surrogate box."""

__version__ = "0.1.0"
