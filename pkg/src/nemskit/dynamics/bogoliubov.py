"""Normal modes of two linearly coupled Kerr oscillators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CoupledModeFrame:
    """Dressed frame of ``w1 n1 + w2 n2 + g12 (a1^dag a2 + h.c.) + K_i a_i^dag^2 a_i^2``.

    ``lam`` is the mixing angle magnitude; ``rotation`` carries its sign for the
    substitution ``a1 -> cos(t) a1 + sin(t) a2``, ``a2 -> cos(t) a2 - sin(t) a1``.
    ``chi12`` multiplies ``n1 n2`` in the dressed frame.
    """

    lam: float
    rotation: float
    g12: float
    delta: float
    omega: tuple[float, float]
    dressed_freqs: tuple[float, float]
    dressed_kerrs: tuple[float, float, float]

    @property
    def chi12(self) -> float:
        return self.dressed_kerrs[2]

    def linear_block(self) -> np.ndarray:
        w1, w2 = self.omega
        return np.array([[w1, self.g12], [self.g12, w2]])

    def transformed_linear_block(self) -> np.ndarray:
        t = self.rotation
        # columns: old modes expressed in new ones
        u = np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])
        return u.T @ self.linear_block() @ u

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam, "rotation": self.rotation, "g12": self.g12, "delta": self.delta,
            "dressed_freqs": list(self.dressed_freqs),
            "K1": self.dressed_kerrs[0], "K2": self.dressed_kerrs[1], "chi12": self.dressed_kerrs[2],
        }


def bogoliubov(omega1: float, omega2: float, g12: float, K1: float = 0.0, K2: float = 0.0) -> CoupledModeFrame:
    delta = omega1 - omega2
    if delta == 0:
        raise ValueError("degenerate modes (omega1 == omega2): mixing angle undefined")
    rotation = 0.5 * math.atan(-2.0 * g12 / delta)
    lam = abs(rotation)
    c, s = math.cos(lam), math.sin(lam)
    root = math.sqrt(4.0 * g12**2 + delta**2)
    mean = 0.5 * (omega1 + omega2)
    sign = 1.0 if delta > 0 else -1.0
    # the dressed mode 1 continues the bare mode 1
    w1 = mean + sign * 0.5 * root
    w2 = mean - sign * 0.5 * root
    k1 = K1 * c**4 + K2 * s**4
    k2 = K2 * c**4 + K1 * s**4
    chi = 4.0 * (K1 + K2) * c**2 * s**2
    return CoupledModeFrame(lam=lam, rotation=rotation, g12=g12, delta=delta,
                            omega=(omega1, omega2), dressed_freqs=(w1, w2),
                            dressed_kerrs=(k1, k2, chi))


def decoupled_frame(omega1: float = 1.0, omega2: float = 0.0) -> CoupledModeFrame:
    return bogoliubov(omega1, omega2, 0.0)
