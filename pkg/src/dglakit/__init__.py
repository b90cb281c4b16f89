"""Exact computations with g-differential algebras, the DGLA Dg and its central
extensions, Kalkman conjugation, and current-algebra cocycles over Q."""

__version__ = "0.1.0"
