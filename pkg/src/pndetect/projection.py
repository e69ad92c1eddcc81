"""Two-component PCA over frame vectors, backed by :mod:`pndetect.linalg`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DataError
from .framing import FrameVector
from .linalg import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, jacobi_eigh


class Point2D(NamedTuple):
    frame_index: int
    x: float
    y: float


@dataclass(frozen=True)
class PcaBasis:
    mean: np.ndarray          # (d,)
    components: np.ndarray    # (2, d), orthonormal rows
    eigenvalues: np.ndarray   # (2,), descending, >= 0
    sweeps: int = 0

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


def _as_matrix(vectors) -> tuple[np.ndarray, list[int]]:
    if isinstance(vectors, np.ndarray):
        data = np.asarray(vectors, dtype=float)
        if data.ndim != 2:
            raise DataError(f"expected a 2-D array of vectors, got shape {data.shape}")
        return data, list(range(data.shape[0]))
    vectors = list(vectors)
    if not vectors:
        return np.empty((0, 0)), []
    dims = {v.dimension for v in vectors}
    if len(dims) != 1:
        raise DataError(f"frame vectors have mixed dimensions {sorted(dims)}")
    return np.vstack([v.values for v in vectors]), [v.frame_index for v in vectors]


def fit_pca(
    vectors: Sequence[FrameVector] | np.ndarray,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> PcaBasis:
    """Fit the top-2 principal axes of ``vectors``.

    The covariance uses divisor ``N - 1``. Each component's sign is chosen so
    that its largest-magnitude coordinate is positive, which makes repeated
    fits reproducible bit for bit.
    """
    data, _ = _as_matrix(vectors)
    n = data.shape[0]
    if n < 3:
        raise DataError(f"PCA needs at least 3 vectors, got {n}")
    if data.shape[1] < 2:
        raise DataError(f"PCA needs dimension >= 2, got {data.shape[1]}")
    if not np.all(np.isfinite(data)):
        raise DataError("frame vectors contain non-finite values")

    mean = data.mean(axis=0)
    # a column of identical values must centre to exact zeros
    constant = np.all(data == data[0], axis=0)
    mean[constant] = data[0, constant]
    centred = data - mean
    cov = centred.T @ centred / (n - 1)
    eigenvalues, eigenvectors, sweeps = jacobi_eigh(cov, tol=tol, max_sweeps=max_sweeps, vectors=2)

    components = eigenvectors.T.copy()
    for row in components:
        row /= np.linalg.norm(row)
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    top = np.maximum(eigenvalues[:2], 0.0)
    return PcaBasis(mean=mean, components=components, eigenvalues=top, sweeps=sweeps)


def project(basis: PcaBasis, vector: FrameVector | np.ndarray, frame_index: int | None = None) -> Point2D:
    values = vector.values if isinstance(vector, FrameVector) else np.asarray(vector, dtype=float)
    if values.shape != basis.mean.shape:
        raise DataError(f"vector dimension {values.shape[0]} does not match basis dimension {basis.dimension}")
    if frame_index is None:
        frame_index = vector.frame_index if isinstance(vector, FrameVector) else 0
    centred = values - basis.mean
    return Point2D(frame_index, float(basis.components[0] @ centred), float(basis.components[1] @ centred))


def project_all(basis: PcaBasis, vectors: Sequence[FrameVector]) -> list[Point2D]:
    return [project(basis, v) for v in vectors]


def points_array(points: Sequence[Point2D]) -> np.ndarray:
    """``(N, 2)`` coordinate array of ``points``."""
    if not points:
        return np.empty((0, 2))
    return np.array([(p.x, p.y) for p in points], dtype=float)
