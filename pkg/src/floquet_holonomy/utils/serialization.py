"""Кодирование комплексных величин для JSON: каждое число — пара [re, im]."""

import hashlib
import json
from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt

ComplexPair = list[float]


def encode_complex(z: complex) -> ComplexPair:
    value = complex(z)
    return [float(value.real), float(value.imag)]


def decode_complex(pair: Sequence[float]) -> complex:
    if len(pair) != 2:
        raise ValueError(f"Комплексное число кодируется парой [re, im], получено {list(pair)}")
    return complex(float(pair[0]), float(pair[1]))


def encode_matrix(matrix: npt.ArrayLike) -> list[list[ComplexPair]]:
    m = np.asarray(matrix, dtype=np.complex128)
    return [[encode_complex(z) for z in row] for row in m]


def decode_vector(pairs: Sequence[Sequence[float]]) -> npt.NDArray[np.complex128]:
    return np.array([decode_complex(p) for p in pairs], dtype=np.complex128)


def canonical_json(payload: Any) -> str:
    """Детерминированная сериализация: отсортированные ключи, без лишних пробелов."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def checksum(payload: Any) -> str:
    """SHA-256 канонического JSON."""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
