"""Good-enough synthesis toolkit for LTL and LTL with quality operators."""

