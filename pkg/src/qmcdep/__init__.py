"""Faure/Halton constructions, scramblings and pair-count quality criteria."""
__version__ = "0.1.0"
