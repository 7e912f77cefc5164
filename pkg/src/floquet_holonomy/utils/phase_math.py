"""Утилиты для работы с фазами по модулю 2π."""

import numpy as np


def wrap_phase(x: float) -> float:
    """Привести фазу в интервал (−π, π]."""
    wrapped = float(np.angle(np.exp(1j * x)))
    if wrapped <= -np.pi:
        wrapped += 2 * np.pi
    return wrapped


def circular_distance(a: float, b: float) -> float:
    """Расстояние между фазами по окружности, в [0, π]."""
    return abs(wrap_phase(a - b))
