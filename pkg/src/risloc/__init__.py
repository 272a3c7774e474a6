"""Desk-scale lab for RIS-assisted localization in a rich-scattering enclosure.

The package couples a coupled-dipole electromagnetic channel simulator with a
small reverse-mode neural engine, adaptive BiLSTM configuration/localization
models, Gaussian-process hyperparameter search, the reference baselines, and a
batch experiment harness.
"""

__version__ = "0.1.0"
