"""Direct solution of banded linear systems with optional periodic corners.

The evolution schemes couple nearest-neighbour nodes only, so their
matrices are banded with a small constant bandwidth; periodic curves add
two corner blocks linking the first and last node.  The band part is
factorized by LAPACK's banded LU with partial pivoting and the corners
are folded in by bordered elimination (a low-rank correction solved
through the capacitance matrix).  Systems here are tiny, so a dense
solve doubles as a fallback and as an independent oracle in the tests.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


class ExactSingularError(RuntimeError):
    """The assembled system is singular beyond pivot tolerance."""


class BorderedBandMatrix:
    """Square band matrix with optional dense corner blocks and a rhs.

    ``ab`` uses the LAPACK band layout ``ab[bw + i - j, j] = A[i, j]``
    for ``|i - j| <= bw``.  With ``corner_size = k > 0`` the blocks
    ``A[:k, n-k:]`` (top right) and ``A[n-k:, :k]`` (bottom left) are
    stored densely; every other entry outside the band must be zero.
    """

    def __init__(self, n: int, bandwidth: int, corner_size: int = 0):
        if n < 1:
            raise ValueError("matrix dimension must be positive")
        if corner_size > 0 and n < 2 * corner_size + bandwidth + 1:
            raise ValueError("corner blocks would overlap the band")
        self.n = n
        self.bw = bandwidth
        self.corner_size = corner_size
        self.ab = np.zeros((2 * bandwidth + 1, n))
        k = corner_size
        self.top_right = np.zeros((k, k))
        self.bottom_left = np.zeros((k, k))
        self.rhs = np.zeros(n)

    def add(self, i: int, j: int, value: float) -> None:
        n, bw, k = self.n, self.bw, self.corner_size
        if abs(i - j) <= bw:
            self.ab[bw + i - j, j] += value
        elif k and i < k and j >= n - k:
            self.top_right[i, j - (n - k)] += value
        elif k and i >= n - k and j < k:
            self.bottom_left[i - (n - k), j] += value
        else:
            raise ValueError(f"entry ({i}, {j}) lies outside the band and corners")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n, bw, k = self.n, self.bw, self.corner_size
        y = np.zeros(n)
        for off in range(-bw, bw + 1):
            # entries A[i, i + off] = ab[bw - off, i + off]
            i0 = max(0, -off)
            i1 = min(n, n - off)
            if i1 > i0:
                y[i0:i1] += self.ab[bw - off, i0 + off:i1 + off] * x[i0 + off:i1 + off]
        if k:
            y[:k] += self.top_right @ x[n - k:]
            y[n - k:] += self.bottom_left @ x[:k]
        return y

    def to_dense(self) -> np.ndarray:
        n, bw, k = self.n, self.bw, self.corner_size
        dense = np.zeros((n, n))
        for off in range(-bw, bw + 1):
            i0 = max(0, -off)
            i1 = min(n, n - off)
            for i in range(i0, i1):
                dense[i, i + off] = self.ab[bw - off, i + off]
        if k:
            dense[:k, n - k:] += self.top_right
            dense[n - k:, :k] += self.bottom_left
        return dense

    def residual(self, x: np.ndarray) -> float:
        r = self.matvec(x) - self.rhs
        return float(np.linalg.norm(r) / max(1.0, np.linalg.norm(self.rhs)))

    def _has_corners(self) -> bool:
        return self.corner_size > 0 and (
            np.any(self.top_right) or np.any(self.bottom_left)
        )

    def _solve_banded(self) -> np.ndarray:
        n, bw, k = self.n, self.bw, self.corner_size
        if not self._has_corners():
            return scipy.linalg.solve_banded((bw, bw), self.ab, self.rhs)
        # Bordered elimination: A = B + U V^T with B the band part and
        # U, V of rank at most 2k built from the corner blocks.
        m = 2 * k
        cols = np.zeros((n, m + 1))
        cols[:, 0] = self.rhs
        cols[:k, 1:k + 1] = self.top_right
        cols[n - k:, k + 1:m + 1] = self.bottom_left
        sol = scipy.linalg.solve_banded((bw, bw), self.ab, cols)
        y_b = sol[:, 0]
        y_u = sol[:, 1:]
        # V^T picks the last k then the first k components.
        vt_yu = np.vstack([y_u[n - k:, :], y_u[:k, :]])
        vt_yb = np.concatenate([y_b[n - k:], y_b[:k]])
        capacitance = np.eye(m) + vt_yu
        correction = np.linalg.solve(capacitance, vt_yb)
        return y_b - y_u @ correction

    def solve(self) -> tuple[np.ndarray, float]:
        """Solve A x = rhs; returns (x, relative residual).

        The banded path is tried first; if it breaks down (singular band
        factor, singular capacitance matrix, or a residual that betrays
        severe cancellation) the dense factorization is used instead.
        Raises ExactSingularError when the full matrix is singular.
        """
        x = None
        try:
            x = self._solve_banded()
            if not np.all(np.isfinite(x)):
                x = None
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            x = None
        if x is not None:
            res = self.residual(x)
            if res <= 1e-8:
                return x, res
        try:
            x = np.linalg.solve(self.to_dense(), self.rhs)
        except np.linalg.LinAlgError as exc:
            raise ExactSingularError(str(exc)) from exc
        if not np.all(np.isfinite(x)):
            raise ExactSingularError("solution is not finite")
        return x, self.residual(x)
