"""Proofs and certificates for pigeonhole formulas: generators, checkers,
constructions, restrictions and rank decisions."""

__version__ = "0.1.0"
