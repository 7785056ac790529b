"""Exact small-height constructions on quadratic forms over iterated
quadratic extensions of the rationals, with certified height bounds."""

__version__ = "0.1.0"
