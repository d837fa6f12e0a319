"""Within-host target-cell-limited viral dynamics under antiviral treatment."""

__version__ = "0.1.0"
