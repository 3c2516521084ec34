"""Finite bounded security lattices with precomputed order, join and meet tables.

A lattice is built from a class list and an arbitrary set of ordered pairs
(lower, upper).  The pairs need not form a Hasse diagram; the reflexive-
transitive closure is computed and redundant pairs are tolerated.  After
construction every order query is a table lookup.
"""

from __future__ import annotations

import json
import re
from typing import Iterable, Mapping, Sequence

CLASS_NAME_RE = re.compile(r"[A-Za-z0-9_()+-]+\Z")


class LatticeError(Exception):
    """Base class for lattice construction and query errors."""


class DuplicateClass(LatticeError):
    def __init__(self, name: str):
        super().__init__(f"duplicate class name {name!r}")
        self.name = name


class BadClassName(LatticeError):
    def __init__(self, name: str):
        super().__init__(f"invalid class name {name!r} (must match [A-Za-z0-9_()+-]+)")
        self.name = name


class UnknownClass(LatticeError):
    def __init__(self, name: str, where: str = ""):
        detail = f" in {where}" if where else ""
        super().__init__(f"unknown class {name!r}{detail}")
        self.name = name


class CycleError(LatticeError):
    def __init__(self, pair: tuple[str, str]):
        super().__init__(f"classes {pair[0]!r} and {pair[1]!r} are mutually below each other")
        self.pair = pair


class NotALattice(LatticeError):
    def __init__(self, kind: str, pair: tuple[str, str], candidates: tuple[str, ...]):
        bound = "least upper bound" if kind == "join" else "greatest lower bound"
        if candidates:
            detail = f"minimal candidates {list(candidates)}"
        else:
            detail = "no common bound at all"
        super().__init__(f"pair ({pair[0]!r}, {pair[1]!r}) has no unique {bound}: {detail}")
        self.kind = kind
        self.pair = pair
        self.candidates = candidates


class Lattice:
    """A finite bounded lattice over named security classes.

    Immutable after construction; `leq`, `join` and `meet` are pure table
    reads.  Use :func:`build_lattice` to construct one.
    """

    __slots__ = ("name", "classes", "covers", "top", "bottom",
                 "_index", "_up", "_down", "_join", "_meet")

    def __init__(self, name: str, classes: tuple[str, ...], covers: tuple[tuple[str, str], ...],
                 up: dict[str, frozenset[str]], down: dict[str, frozenset[str]],
                 join_table: dict[tuple[str, str], str], meet_table: dict[tuple[str, str], str],
                 top: str, bottom: str):
        self.name = name
        self.classes = classes
        self.covers = covers
        self._index = {c: i for i, c in enumerate(classes)}
        self._up = up
        self._down = down
        self._join = join_table
        self._meet = meet_table
        self.top = top
        self.bottom = bottom

    # -- queries ----------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.classes)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownClass(name, self.name) from None

    def leq(self, a: str, b: str) -> bool:
        """True iff a is permitted to flow to b (a is below-or-equal b)."""
        up = self._up
        ua = up.get(a)
        if ua is None:
            raise UnknownClass(a, self.name)
        if b not in up:
            raise UnknownClass(b, self.name)
        return b in ua

    def join(self, a: str, b: str) -> str:
        try:
            return self._join[(a, b)]
        except KeyError:
            raise UnknownClass(a if a not in self._index else b, self.name) from None

    def meet(self, a: str, b: str) -> str:
        try:
            return self._meet[(a, b)]
        except KeyError:
            raise UnknownClass(a if a not in self._index else b, self.name) from None

    def join_all(self, items: Iterable[str]) -> str:
        out = self.bottom
        for c in items:
            out = self.join(out, c)
        return out

    def meet_all(self, items: Iterable[str]) -> str:
        out = self.top
        for c in items:
            out = self.meet(out, c)
        return out

    def upset(self, a: str) -> frozenset[str]:
        """All classes above-or-equal a."""
        try:
            return self._up[a]
        except KeyError:
            raise UnknownClass(a, self.name) from None

    def downset(self, a: str) -> frozenset[str]:
        """All classes below-or-equal a."""
        try:
            return self._down[a]
        except KeyError:
            raise UnknownClass(a, self.name) from None

    def sorted_by_index(self, names: Iterable[str]) -> tuple[str, ...]:
        """Deterministic ordering: by position in the class declaration list."""
        return tuple(sorted(names, key=self.index))

    # -- structure --------------------------------------------------------

    def order_pairs(self) -> frozenset[tuple[str, str]]:
        return frozenset((a, b) for a in self.classes for b in self._up[a])

    def __eq__(self, other) -> bool:
        # Structural: same class set and same order.  The display name and the
        # particular cover presentation do not matter.
        if not isinstance(other, Lattice):
            return NotImplemented
        return (set(self.classes) == set(other.classes)
                and self.order_pairs() == other.order_pairs())

    def __ne__(self, other) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __repr__(self) -> str:
        return f"Lattice({self.name!r}, {len(self.classes)} classes)"

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "classes": list(self.classes),
            "covers": [[a, b] for a, b in self.covers],
        }

    @staticmethod
    def from_dict(data: Mapping) -> "Lattice":
        if not isinstance(data, Mapping):
            raise LatticeError("lattice document must be a JSON object")
        for key in ("name", "classes", "covers"):
            if key not in data:
                raise LatticeError(f"lattice document missing {key!r}")
        covers = [tuple(pair) for pair in data["covers"]]
        if any(len(p) != 2 for p in covers):
            raise LatticeError("covers must be pairs [lower, upper]")
        return build_lattice(str(data["name"]), list(data["classes"]), covers)


def build_lattice(name: str, classes: Sequence[str],
                  covers: Iterable[tuple[str, str]]) -> Lattice:
    """Validate and build a lattice from classes and a (lower, upper) pair set.

    Raises DuplicateClass, BadClassName, UnknownClass on malformed input;
    CycleError when the closure is not antisymmetric; NotALattice when some
    pair of classes lacks a unique join or meet.
    """
    classes = tuple(classes)
    if not classes:
        raise LatticeError("a lattice needs at least one class")
    seen = set()
    for c in classes:
        if not isinstance(c, str) or not CLASS_NAME_RE.match(c):
            raise BadClassName(c)
        if c in seen:
            raise DuplicateClass(c)
        seen.add(c)

    cover_list: list[tuple[str, str]] = []
    cover_seen = set()
    for lo, hi in covers:
        if lo not in seen:
            raise UnknownClass(lo, f"covers of lattice {name!r}")
        if hi not in seen:
            raise UnknownClass(hi, f"covers of lattice {name!r}")
        if (lo, hi) not in cover_seen:
            cover_seen.add((lo, hi))
            cover_list.append((lo, hi))

    succ: dict[str, list[str]] = {c: [] for c in classes}
    for lo, hi in cover_list:
        succ[lo].append(hi)

    # Reflexive-transitive closure by DFS from each class.
    up: dict[str, frozenset[str]] = {}
    for c in classes:
        reached = {c}
        stack = [c]
        while stack:
            cur = stack.pop()
            for nxt in succ[cur]:
                if nxt not in reached:
                    reached.add(nxt)
                    stack.append(nxt)
        up[c] = frozenset(reached)

    for i, a in enumerate(classes):
        for b in classes[i + 1:]:
            if b in up[a] and a in up[b]:
                raise CycleError((a, b))

    down: dict[str, set[str]] = {c: set() for c in classes}
    for a in classes:
        for b in up[a]:
            down[b].add(a)
    down_f = {c: frozenset(down[c]) for c in classes}

    join_table: dict[tuple[str, str], str] = {}
    meet_table: dict[tuple[str, str], str] = {}
    for i, a in enumerate(classes):
        for b in classes[i:]:
            ub = up[a] & up[b]
            lub = _unique_extremum(ub, up, lower=True)
            if lub is None:
                raise NotALattice("join", (a, b), _extrema(ub, up, lower=True))
            join_table[(a, b)] = join_table[(b, a)] = lub
            lb = down_f[a] & down_f[b]
            glb = _unique_extremum(lb, up, lower=False)
            if glb is None:
                raise NotALattice("meet", (a, b), _extrema(lb, up, lower=False))
            meet_table[(a, b)] = meet_table[(b, a)] = glb

    top = classes[0]
    bottom = classes[0]
    for c in classes[1:]:
        top = join_table[(top, c)]
        bottom = meet_table[(bottom, c)]

    return Lattice(name, classes, tuple(cover_list), up, down_f,
                   join_table, meet_table, top, bottom)


def _extrema(subset: frozenset[str], up: dict[str, frozenset[str]],
             lower: bool) -> tuple[str, ...]:
    """Minimal (lower=True) or maximal elements of subset under the closure."""
    out = []
    for u in subset:
        if lower:
            dominated = any(v != u and u in up[v] for v in subset)
        else:
            dominated = any(v != u and v in up[u] for v in subset)
        if not dominated:
            out.append(u)
    return tuple(sorted(out))


def _unique_extremum(subset: frozenset[str], up: dict[str, frozenset[str]],
                     lower: bool) -> str | None:
    ext = _extrema(subset, up, lower)
    return ext[0] if len(ext) == 1 else None


def load_lattice(path: str) -> Lattice:
    with open(path, "r", encoding="utf-8") as fh:
        return Lattice.from_dict(json.load(fh))
