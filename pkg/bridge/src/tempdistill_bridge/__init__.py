"""Encoder bridge: turn tempdistill example files into embedding files."""

__version__ = "0.1.0"

LABEL_ORDER = ("BEFORE", "AFTER", "EQUAL", "VAGUE")


class BridgeError(ValueError):
    """Raised for unusable inputs or failed alignment."""
