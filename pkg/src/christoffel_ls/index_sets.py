"""Multi-index sets (tensor product, total degree, hyperbolic cross)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TP, TD, HC = "tp", "td", "hc"
# Hyperbolic cross in the sum form sum_k (nu_k + 1)^{a_k} <= p + 1.
HC_SUM = "hcsum"
KINDS = (TP, TD, HC, HC_SUM)

DEFAULT_CAP = 1_000_000
_TOL = 1e-12


def graded_lex_key(nu: Sequence[int]):
    """Total degree first, then larger leading components first."""
    return (sum(nu), tuple(-v for v in nu))


@dataclass(frozen=True)
class IndexSet:
    d: int
    indices: tuple[tuple[int, ...], ...]
    _position: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        idx = tuple(tuple(int(v) for v in nu) for nu in self.indices)
        if not idx:
            raise ValueError("an index set must be non-empty")
        for nu in idx:
            if len(nu) != self.d:
                raise ValueError(f"multi-index {nu} does not have length {self.d}")
            if min(nu) < 0:
                raise ValueError(f"multi-index {nu} has a negative component")
        idx = tuple(sorted(set(idx), key=graded_lex_key))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "_position", {nu: i for i, nu in enumerate(idx)})

    @classmethod
    def from_indices(cls, indices: Iterable[Sequence[int]]) -> "IndexSet":
        indices = [tuple(nu) for nu in indices]
        if not indices:
            raise ValueError("an index set must be non-empty")
        return cls(len(indices[0]), tuple(indices))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, nu) -> bool:
        return tuple(nu) in self._position

    def position(self, nu) -> int:
        return self._position[tuple(nu)]

    @property
    def n(self) -> int:
        return len(self.indices)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=int).reshape(len(self), self.d)

    @property
    def max_degrees(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.array.max(axis=0))

    def is_subset(self, other: "IndexSet") -> bool:
        return all(nu in other for nu in self.indices)


def _admissible(kind: str, nu: list[int], a: Sequence[float], p: float) -> bool:
    if kind == TP:
        return max(ak * v for ak, v in zip(a, nu)) <= p + _TOL
    if kind == TD:
        return sum(ak * v for ak, v in zip(a, nu)) <= p + _TOL
    if kind == HC:
        return sum(ak * math.log(v + 1) for ak, v in zip(a, nu)) <= math.log(p + 1) + _TOL
    return sum((v + 1) ** ak for ak, v in zip(a, nu)) <= p + 1 + _TOL


def build_index_set(
    kind: str,
    d: int,
    p: float,
    a: Sequence[float] | None = None,
    cap: int = DEFAULT_CAP,
) -> IndexSet:
    """Enumerate the TP, TD or HC index set of order ``p`` with anisotropy ``a``.

    ``kind="hc"`` is the product-form hyperbolic cross
    prod_k (nu_k + 1)^{a_k} <= p + 1; ``kind="hcsum"`` gives the sum form
    sum_k (nu_k + 1)^{a_k} <= p + 1, which is empty when p + 1 < d.
    """
    kind = kind.lower()
    if kind not in KINDS:
        raise ValueError(f"unknown index set kind {kind!r}")
    if d < 1:
        raise ValueError("d must be >= 1")
    if p < 0:
        raise ValueError("p must be >= 0")
    a = [1.0] * d if a is None else [float(v) for v in a]
    if len(a) != d or min(a) <= 0:
        raise ValueError("anisotropy must be a length-d vector of positive reals")

    # every admissible set here is lower, so a depth-first walk that stops
    # at the first inadmissible value in each coordinate visits all of it
    out: list[tuple[int, ...]] = []
    nu = [0] * d

    def walk(k: int):
        while True:
            if not _admissible(kind, nu, a, p):
                break
            if k == d - 1:
                out.append(tuple(nu))
                if len(out) > cap:
                    raise OverflowError(f"index set exceeds the cap of {cap} indices")
            else:
                walk(k + 1)
            nu[k] += 1
        nu[k] = 0

    walk(0)
    if not out:
        raise ValueError(f"{kind} index set with d={d}, p={p} is empty")
    return IndexSet(d, tuple(out))


def is_lower(S: IndexSet | Iterable[Sequence[int]]) -> bool:
    """True iff every componentwise-smaller multi-index of a member is a member."""
    members = set(S.indices) if isinstance(S, IndexSet) else {tuple(nu) for nu in S}
    for nu in members:
        for k, v in enumerate(nu):
            if v > 0:
                mu = nu[:k] + (v - 1,) + nu[k + 1:]
                if mu not in members:
                    return False
    return True


def parse_index_set(spec: str, d: int) -> IndexSet:
    """Parse ``tp:p``, ``td:p``, ``hc:p`` or ``hcsum:p`` with optional ``:a=a1,a2,...``."""
    parts = spec.strip().lower().split(":")
    if len(parts) < 2:
        raise ValueError(f"index set spec {spec!r} must look like 'td:3'")
    kind, p = parts[0], float(parts[1])
    a = None
    for extra in parts[2:]:
        if extra.startswith("a="):
            a = [float(v) for v in extra[2:].split(",")]
        else:
            raise ValueError(f"unrecognised index set option {extra!r}")
    return build_index_set(kind, d, p, a)
