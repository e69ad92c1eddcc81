"""Symmetric eigendecomposition by cyclic Jacobi rotations.

Sweeps use round-robin ("tournament") ordering: with the dimension padded to
an even ``m``, a sweep is ``m - 1`` rounds of ``m / 2`` disjoint index pairs,
and every pair is visited exactly once per sweep. Rotations inside a round
commute, so a round is applied all at once.

The working matrix is kept in a slot layout where the pairs of the current
round sit in adjacent columns ``(2k, 2k + 1)``. Viewing a row as complex
numbers ``col_2k + i col_2k+1`` turns every plane rotation of the round into
one multiplication by ``cos + i sin``. Moving to the next round's pairing is a
fixed permutation of slots.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConvergenceError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_SWEEPS = 100


@lru_cache(maxsize=64)
def round_robin_pairs(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Circle-method pairings covering every ``(p, q)``, ``p < q < n``, once.

    Returns one ``(p, q)`` index-array pair per round.
    """
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a >= n or b >= n:
                continue  # bye for the padding slot
            ps.append(min(a, b))
            qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        # keep players[0] fixed, rotate the rest one place
        players = [players[0], players[-1], *players[1:-1]]
    return tuple(rounds)


@lru_cache(maxsize=64)
def _slot_schedule(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Initial slot layout and the per-round slot permutation for even ``m``.

    Slot ``2k`` holds circle position ``k`` and slot ``2k + 1`` holds position
    ``m - 1 - k``, so the pairs of :func:`round_robin_pairs` are adjacent.
    ``layout[perm]`` is the next round's layout, whatever the current one is.
    """
    position_of_slot = np.empty(m, dtype=np.intp)
    position_of_slot[0::2] = np.arange(m // 2)
    position_of_slot[1::2] = np.arange(m - 1, m // 2 - 1, -1)
    slot_of_position = np.argsort(position_of_slot)
    # circle step: new position 0 <- 0, 1 <- m-1, j <- j-1 for j >= 2
    source_position = np.concatenate(([0, m - 1], np.arange(1, m - 1))).astype(np.intp)
    perm = slot_of_position[source_position[position_of_slot]]
    return position_of_slot, perm


def off_diagonal_norm(a: np.ndarray) -> float:
    # subtracting the diagonal's share from ||a||^2 cancels badly near convergence
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def _round_rotations(work: np.ndarray, skip: float, pair_index: np.ndarray) -> np.ndarray:
    """Unit complex numbers ``c + i s`` that annihilate each adjacent pair.

    Pairs with ``|a_pq| <= skip`` get the identity rotation.
    """
    diag = np.diagonal(work)
    apq = work.ravel()[pair_index]
    with np.errstate(divide="ignore", invalid="ignore"):
        # the root with |angle| <= pi/4; a zero denominator gives +-pi/4
        angle = 0.5 * np.arctan(2.0 * apq / (diag[1::2] - diag[0::2]))
    angle[np.abs(apq) <= skip] = 0.0
    return np.cos(angle) + 1j * np.sin(angle)


def jacobi_eigh(
    matrix: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    vectors: int | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Eigen-decompose a real symmetric matrix.

    Parameters
    ----------
    matrix : (d, d) array
        Symmetric input; only its symmetric part is used.
    tol : float
        Converged when the off-diagonal Frobenius norm is at most
        ``tol * ||matrix||_F``.
    max_sweeps : int
        Sweep budget before :class:`ConvergenceError` is raised.
    vectors : int, optional
        Return only the eigenvectors of the ``vectors`` largest eigenvalues.
        Rotations are recorded during the sweeps and replayed onto just
        those columns afterwards, which is much cheaper than accumulating
        the full ``d x d`` product.

    Returns
    -------
    eigenvalues : (d,) array, descending
    eigenvectors : (d, k) array, column ``j`` pairs with ``eigenvalues[j]``
    sweeps : int
        Number of full sweeps performed.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    k = d if vectors is None else min(vectors, d)
    sym = 0.5 * (a + a.T)
    scale = float(np.linalg.norm(sym))
    if d <= 1 or scale == 0.0:
        eigenvalues = np.diagonal(sym).copy()
        order = np.argsort(-eigenvalues, kind="stable")
        return eigenvalues[order], np.eye(d)[:, order[:k]], 0

    m = d + (d % 2)
    layout, perm = _slot_schedule(m)
    pair_index = np.arange(m // 2) * (2 * m + 2) + 1
    # work[i, j] = A[layout[i], layout[j]]; padding index d stays all-zero
    padded = np.zeros((m, m))
    padded[:d, :d] = sym
    work = np.ascontiguousarray(padded[np.ix_(layout, layout)])

    target = tol * scale
    # Entries this small cannot hold the off-norm above target on their own;
    # rotating them only churns rounding noise inside clusters of (near-)equal
    # eigenvalues, which degrades convergence to linear.
    skip = target / m
    layouts = [layout]
    for _ in range(m - 2):
        layouts.append(layouts[-1][perm])
    history = []
    sweeps = 0
    off = off_diagonal_norm(work)
    while off > target:
        if sweeps >= max_sweeps:
            raise ConvergenceError(sweeps, off)
        for _ in range(m - 1):
            w = _round_rotations(work, skip, pair_index)
            history.append(w)
            work.view(np.complex128)[...] *= w   # A J
            work = work.T[perm]                  # J^T A, rows in next layout
            work.view(np.complex128)[...] *= w   # J^T A J
            work = work.T[perm]                  # columns in next layout too
        sweeps += 1
        off = off_diagonal_norm(work)

    # a sweep has m - 1 rounds and the layout cycle has period m - 1
    slot_values = np.diagonal(work)
    keep = np.flatnonzero(layout < d)
    order = keep[np.argsort(-slot_values[keep], kind="stable")]
    eigenvalues = slot_values[order].copy()

    # eigenvector for final slot i is G_0 G_1 ... G_{K-1} e_{layout[i]},
    # with G_r = P_r J_r P_r^T; apply the rotations last-to-first
    basis = np.zeros((k, m))
    basis[np.arange(k), layout[order[:k]]] = 1.0
    for r in range(len(history) - 1, -1, -1):
        lay = layouts[r % (m - 1)]
        y = np.ascontiguousarray(basis[:, lay])
        y.view(np.complex128)[...] *= np.conj(history[r])
        basis[:, lay] = y
    return eigenvalues, np.ascontiguousarray(basis[:, :d].T), sweeps
