"""Matrix exponential by scaling and squaring.

Kept separate from the marching schemes so it can serve as an independent
oracle for them: scale A until the norm is small, sum the Taylor series to
machine precision, square back.
"""

from __future__ import annotations

import numpy as np

__all__ = ["expm"]


def expm(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A))
    d = A.shape[0]
    if A.shape != (d, d):
        raise ValueError("expm needs a square matrix")
    norm = float(np.linalg.norm(A, 1))
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25))) if norm > 0.25 else 0)
    M = A / (2.0**squarings)
    out = np.eye(d, dtype=M.dtype)
    term = np.eye(d, dtype=M.dtype)
    for k in range(1, 21):  # 0.25^21/21! is far below machine epsilon
        term = term @ M / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out
