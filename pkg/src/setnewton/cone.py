"""Polyhedral ordering cones and the Gerstewitz scalarizing functional.

A cone is stored through its dual inequality description
``K = {y : A y >= 0}`` together with a direction ``e`` interior to ``K``.
With that representation the scalarization

    psi_e(z) = min {t : t e - z in K}

has the closed form ``max_i (a_i . z) / (a_i . e)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_MEMBERSHIP_TOL = 1e-10


class ConeError(ValueError):
    """Raised for malformed cones or inputs of the wrong dimension."""


@dataclass(frozen=True, eq=False)
class Cone:
    """Polyhedral cone ``{y : rows @ y >= 0}`` with interior direction ``e``.

    Rows are kept as given; every quantity derived from them is invariant
    under positive rescaling of a row.
    """

    rows: np.ndarray
    e: np.ndarray
    tol_membership: float = DEFAULT_MEMBERSHIP_TOL
    _row_e: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float, ndmin=2)
        e = np.array(self.e, dtype=float).ravel()
        if rows.shape[1] != e.size:
            raise ConeError(f"rows have {rows.shape[1]} columns but e has {e.size} entries")
        if np.any(np.all(rows == 0.0, axis=1)):
            raise ConeError("cone rows must be nonzero")
        if self.tol_membership < 0:
            raise ConeError("tol_membership must be nonnegative")
        row_e = rows @ e
        if np.any(row_e <= 0.0):
            raise ConeError(f"e={e.tolist()} is not interior to the cone (rows @ e = {row_e.tolist()})")
        rows.setflags(write=False)
        e.setflags(write=False)
        row_e.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "_row_e", row_e)

    @property
    def m(self) -> int:
        return self.e.size

    @property
    def scaled_rows(self) -> np.ndarray:
        """Rows divided by ``a_i . e``, so that ``psi_e(z) = max(scaled_rows @ z)``."""
        return self.rows / self._row_e[:, None]

    @classmethod
    def nonnegative_orthant(cls, m: int, e: Sequence[float] | None = None, **kwargs) -> "Cone":
        return cls(np.eye(m), np.ones(m) if e is None else e, **kwargs)

    def to_dict(self) -> dict:
        return {"m": self.m, "rows": self.rows.tolist(), "e": self.e.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Cone":
        cone = cls(data["rows"], data["e"])
        if "m" in data and int(data["m"]) != cone.m:
            raise ConeError(f"declared m={data['m']} does not match e of length {cone.m}")
        return cone

    @classmethod
    def from_json(cls, text: str) -> "Cone":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def _check(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.m:
            raise ConeError(f"expected vectors of dimension {self.m}, got shape {z.shape}")
        return z


def contains(K: Cone, z, strict: bool = False) -> bool:
    """Membership of ``z`` in ``K`` (or in its interior when ``strict``)."""
    slack = K.rows @ K._check(z)
    if strict:
        return bool(np.all(slack > K.tol_membership))
    return bool(np.all(slack >= -K.tol_membership))


def leq(K: Cone, y, z, strict: bool = False) -> bool:
    """``y <= z`` in the cone order, i.e. ``z - y`` lies in ``K``."""
    return contains(K, K._check(z) - K._check(y), strict)


def gerstewitz(K: Cone, z) -> float | np.ndarray:
    """Closed-form Gerstewitz functional; vectorized over leading axes of ``z``."""
    z = K._check(z)
    return np.max(z @ K.scaled_rows.T, axis=-1)


def gerstewitz_lipschitz(K: Cone) -> float:
    """Lipschitz constant ``max_i ||a_i|| / (a_i . e)`` of :func:`gerstewitz`."""
    return float(np.max(np.linalg.norm(K.rows, axis=1) / K._row_e))


def _as_set(K: Cone, A) -> np.ndarray:
    A = np.atleast_2d(K._check(A))
    if A.shape[0] == 0:
        raise ConeError("sets must be nonempty")
    return A


def lower_set_less(K: Cone, A, B, strict: bool = False) -> bool:
    """Lower set less relation: ``B`` is contained in ``A + K`` (``A + int K`` if strict).

    ``A`` and ``B`` are finite sets given as arrays of shape ``(count, m)``.
    """
    A = _as_set(K, A)
    B = _as_set(K, B)
    # slack[b, a, i] = a_i . (b - a)
    slack = np.einsum("ri,bai->bar", K.rows, B[:, None, :] - A[None, :, :])
    if strict:
        ok = np.all(slack > K.tol_membership, axis=-1)
    else:
        ok = np.all(slack >= -K.tol_membership, axis=-1)
    return bool(np.all(np.any(ok, axis=1)))


def varsigma(K: Cone, A) -> float:
    """Merit value ``min_{z in A} psi_e(z)`` of a finite set."""
    return float(np.min(gerstewitz(K, _as_set(K, A))))
