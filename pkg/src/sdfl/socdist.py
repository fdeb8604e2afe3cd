"""Social-distancing score of a queue holding ``k`` people.

Below the facility threshold ``gamma`` the score is the constant ``A``. At or
above it the score drops either linearly, ``A - b * (k - gamma)``, or with the
exponential penalty ``A - b * (gamma + exp((k - 2 * gamma) / 4))``. Scores may
go negative unless ``SdParams.clamp`` floors them at zero.
"""

from __future__ import annotations

import math

import numpy as np

from sdfl.scenario import SdParams


def _score(k: float, A: float, b: float, gamma: int, mode: str) -> float:
    if k < gamma:
        return A
    if mode == "linear":
        return A - b * max(k - gamma, 0)
    return A - b * (gamma + math.exp((k - 2 * gamma) / 4))


def sd_value(k: int, params: SdParams, type_index: int = 0, zone: int = 0) -> float:
    """Score for queue length ``k`` at facility ``(type_index, zone)``."""
    if k < 0:
        raise ValueError(f"queue length must be non-negative, got {k}")
    value = _score(k, params.A, params.b, params.gamma_for(type_index, zone), params.mode)
    return max(value, 0.0) if params.clamp else value


def sd_values(k: np.ndarray, params: SdParams, gamma: int) -> np.ndarray:
    """Vectorized scores for an array of queue lengths sharing one threshold."""
    k = np.asarray(k, dtype=float)
    if params.mode == "linear":
        penalty = params.b * np.maximum(k - gamma, 0.0)
    else:
        penalty = params.b * (gamma + np.exp((k - 2 * gamma) / 4))
    out = np.where(k < gamma, params.A, params.A - penalty)
    return np.maximum(out, 0.0) if params.clamp else out
