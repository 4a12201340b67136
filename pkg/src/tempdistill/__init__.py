"""Distantly-supervised temporal relation datasets and a linear relation head."""

__version__ = "0.1.0"
