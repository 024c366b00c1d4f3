"""Minimal and weakly minimal elements of a finite image set, and the
partition of the minimal indices into value classes."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cone import Cone
from .problem import ProblemInstance, evaluate_family

TIE_TOL = 1e-9
DEFAULT_PARTITION_CAP = 4096


class PartitionBlowUp(RuntimeError):
    def __init__(self, cardinality: int, cap: int):
        super().__init__(f"partition blow-up: {cardinality} tuples exceed the cap of {cap}")
        self.cardinality = cardinality
        self.cap = cap


def _as_values(values, K: Cone) -> np.ndarray:
    V = np.asarray(values, dtype=float)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ValueError("values must be a nonempty (count, m) array")
    if V.shape[1] != K.m:
        raise ValueError(f"values have dimension {V.shape[1]}, cone has {K.m}")
    return V


def ties(values, tie_tol: float = TIE_TOL) -> np.ndarray:
    """Boolean matrix, ``[i, j]`` true when value ``j`` equals value ``i`` up to tolerance."""
    V = np.asarray(values, dtype=float)
    diff = np.max(np.abs(V[:, None, :] - V[None, :, :]), axis=-1)
    scale = 1.0 + np.max(np.abs(V), axis=1)
    return diff <= tie_tol * scale[:, None]


def _slack(V: np.ndarray, K: Cone) -> np.ndarray:
    # slack[i, j, r] = a_r . (v_i - v_j); all >= 0 means v_j <= v_i
    return np.einsum("rk,ijk->ijr", K.rows, V[:, None, :] - V[None, :, :])


def minimal_indices(values, K: Cone, tie_tol: float = TIE_TOL) -> list[int]:
    """Indices ``i`` such that no other value is below ``values[i]`` in the cone order.

    A value dominated only by copies of itself stays minimal, so every index
    of a duplicated minimal value is returned.
    """
    V = _as_values(values, K)
    below = np.all(_slack(V, K) >= -K.tol_membership, axis=-1)
    dominated = np.any(below & ~ties(V, tie_tol), axis=1)
    return np.flatnonzero(~dominated).tolist()


def weakly_minimal_indices(values, K: Cone) -> list[int]:
    """Indices ``i`` such that no value lies in ``values[i] - int K``."""
    V = _as_values(values, K)
    strictly_below = np.all(_slack(V, K) > K.tol_membership, axis=-1)
    return np.flatnonzero(~np.any(strictly_below, axis=1)).tolist()


@dataclass(frozen=True, eq=False)
class MinimalDecomposition:
    """Minimal structure of ``F(x)``.

    ``classes`` holds ``(representative value, index tuple)`` pairs ordered by
    their smallest index; ``w`` is the number of distinct minimal values.
    """

    x: np.ndarray
    values: np.ndarray
    min_indices: tuple[int, ...]
    wmin_indices: tuple[int, ...]
    classes: tuple[tuple[np.ndarray, tuple[int, ...]], ...]

    @property
    def w(self) -> int:
        return len(self.classes)

    @property
    def partition_cardinality(self) -> int:
        return int(np.prod([len(idx) for _, idx in self.classes]))

    @property
    def regular(self) -> bool:
        """Whether ``Min = WMin`` at this point."""
        return self.min_indices == self.wmin_indices


def group_classes(values, indices, tie_tol: float = TIE_TOL):
    V = np.asarray(values, dtype=float)
    classes: list[tuple[np.ndarray, list[int]]] = []
    for i in indices:
        v = V[i]
        for rep, members in classes:
            if np.max(np.abs(v - rep)) <= tie_tol * (1.0 + np.max(np.abs(rep))):
                members.append(i)
                break
        else:
            classes.append((v, [i]))
    return tuple((rep, tuple(members)) for rep, members in classes)


def decompose(P: ProblemInstance, K: Cone, x, tie_tol: float = TIE_TOL,
              values: np.ndarray | None = None) -> MinimalDecomposition:
    x = P.check_point(x)
    if values is None:
        values = evaluate_family(P, x)
    mins = minimal_indices(values, K, tie_tol)
    wmins = weakly_minimal_indices(values, K)
    return MinimalDecomposition(x, values, tuple(mins), tuple(wmins),
                                group_classes(values, mins, tie_tol))


def partition_tuples(dec: MinimalDecomposition,
                     cap: int = DEFAULT_PARTITION_CAP) -> Iterator[tuple[int, ...]]:
    """Lazily enumerate the partition set in lexicographic order."""
    if cap < 1:
        raise ValueError("cap must be at least 1")
    count = dec.partition_cardinality
    if count > cap:
        raise PartitionBlowUp(count, cap)
    return itertools.product(*(idx for _, idx in dec.classes))
