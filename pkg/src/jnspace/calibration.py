"""Empirical constants, measured once on the seeded suites and frozen.

Regenerate with ``python3 -m jnspace.calibrate`` (prints a replacement for
this file); the tests compare fresh suite runs against these numbers.
"""
from __future__ import annotations

CALIBRATION_SEED = 20240601

# min over the seeded monotone suite of familyValue / ||f - <f>||_p
MONOTONE_MIN_RATIO: dict[float, float] = {1.5: 0.2473, 2.0: 0.2624, 3.0: 0.2344}

# max over the seeded flattening suite of sum_k size(g_k) / size(g), keyed by (r, s, C)
FLATTEN_MAX_RATIO: dict[tuple[float, float, float], float] = {(2.0, 4.0, 3.0): 1.679}

# per-class constants c with F(J) <= c * bound(class, i, p), keyed by p
CLASS_CONSTANTS: dict[float, dict[str, float]] = {
    1.5: {"short": 0.4398, "medium": 0.6084, "long": 1.558},
    2.0: {"short": 0.266, "medium": 0.4256, "long": 0.8921},
    3.0: {"short": 0.1239, "medium": 0.316, "long": 0.3748},
}


def class_constants(p: float) -> dict[str, float]:
    try:
        return CLASS_CONSTANTS[float(p)]
    except KeyError:
        raise KeyError(f"no frozen class constants for p = {p}; run the calibration") from None
