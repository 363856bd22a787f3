"""Checking stack automata with reversal-bounded counters: simulation, decision procedures, constructions."""

__version__ = "0.1.0"
