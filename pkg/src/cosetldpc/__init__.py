"""Coset LDPC codes over GF(q) for arbitrary memoryless channels."""

from .gf import FieldError, GaloisField, field

__all__ = ["FieldError", "GaloisField", "field"]
__version__ = "0.1.0"
