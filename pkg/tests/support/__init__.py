"""Independent re-implementations used as test oracles.

Everything in this package is deliberately written from first principles,
with different code paths from the library (separate per-gate matrices,
exhaustive enumeration, an unrelated byte parser), so agreement between the
two is meaningful evidence of correctness.
"""
