"""Finite-structure workbench for monadic expansions, witness search and coding."""
__version__ = "0.1.0"
