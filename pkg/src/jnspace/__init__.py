"""Computable John-Nirenberg JN_p functionals, counterexamples and duality tools."""

__version__ = "0.1.0"
