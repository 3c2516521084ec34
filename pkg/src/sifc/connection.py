"""Verified connections between two security lattices.

A connection is a quadruple (L, alpha, gamma, M) of order-preserving maps
alpha: L -> M and gamma: M -> L satisfying

    LC1   l <= gamma(alpha(l))            for every l in L
    LC2   m <= alpha(gamma(m))            for every m in M
    LC3   alpha . gamma . alpha = alpha   pointwise
    LC4   gamma . alpha . gamma = gamma   pointwise

Such a pair of maps lets data flow between the two lattices in both
directions without ever widening what an observer inside either domain may
learn.  The image classes gamma[M] and alpha[L] (the *budpoints*) are
order-isomorphic and carry the whole inter-domain agreement; every other
class is represented by the least budpoint above it.

Besides verification this module synthesises the right map from the left one
when it exists, builds connections from closure-operator agreements, chains
connections across a middle lattice, decomposes a connection into two
insertions around an isomorphism, and re-establishes a connection after a
coarsening of the left map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .lattice import Lattice, UnknownClass, build_lattice

VIOLATION_CONDITIONS = ("Monotone-alpha", "Monotone-gamma",
                        "LC1", "LC2", "LC3", "LC4")


class MapError(Exception):
    """Base class for map validation errors."""


class PartialMap(MapError):
    def __init__(self, missing: tuple[str, ...], where: str = "map"):
        super().__init__(f"{where} leaves classes unmapped: {list(missing)}")
        self.missing = missing


class NotMonotone(MapError):
    def __init__(self, pair: tuple[str, str], where: str = "map"):
        super().__init__(f"{where} is not order-preserving at {pair[0]!r} <= {pair[1]!r}")
        self.pair = pair


@dataclass(frozen=True)
class Violation:
    """One failed connection condition together with a replayable witness."""
    condition: str
    witness: tuple[str, ...]

    def to_json(self) -> dict:
        return {"condition": self.condition, "witness": list(self.witness)}


class NotLagois(Exception):
    """Raised when a candidate map pair fails verification."""

    def __init__(self, violations: list[Violation]):
        lines = ", ".join(f"{v.condition}@{'/'.join(v.witness)}" for v in violations)
        super().__init__(f"not a valid connection: {lines}")
        self.violations = violations


class LatticeMismatch(MapError):
    pass


class AdjointError(Exception):
    """Synthesis of the right map failed; `condition` is 1, 2 or 3."""

    def __init__(self, condition: int, witness: tuple[str, ...], detail: str):
        super().__init__(f"no adjoint: condition ({condition}) fails at "
                         f"{'/'.join(witness)}: {detail}")
        self.condition = condition
        self.witness = witness


class NotClosure(Exception):
    def __init__(self, operator: str, law: str, witness: str):
        super().__init__(f"{operator} is not a closure operator: "
                         f"{law} fails at {witness!r}")
        self.operator = operator
        self.law = law
        self.witness = witness


class NotIso(Exception):
    def __init__(self, detail: str, witness: tuple[str, ...]):
        super().__init__(f"not an order isomorphism: {detail} (witness {list(witness)})")
        self.witness = witness


class ComposeError(Exception):
    """A containment condition for chaining two connections failed."""

    def __init__(self, side: str, witness: str):
        which = ("image of the left connection's alpha" if side == "left"
                 else "image of the right connection's gamma")
        super().__init__(f"composition rejected: the {which} is not closed "
                         f"under the middle round trip (witness {witness!r})")
        self.side = side
        self.witness = witness


class CoarsenError(Exception):
    """kind is one of not-refinement, no-largest-element, representative-mismatch."""

    def __init__(self, kind: str, witness: tuple[str, ...], detail: str):
        super().__init__(f"coarsening rejected ({kind}): {detail}")
        self.kind = kind
        self.witness = witness


class NotSemiInverse(Exception):
    def __init__(self, witness: str):
        super().__init__(f"alpha . gamma . alpha differs from alpha at {witness!r}")
        self.witness = witness


class MonotoneMap:
    """A total order-preserving function between two lattices."""

    __slots__ = ("source", "target", "_table")

    def __init__(self, source: Lattice, target: Lattice, table: Mapping[str, str],
                 where: str = "map"):
        missing = tuple(c for c in source.classes if c not in table)
        if missing:
            raise PartialMap(missing, where)
        for key, value in table.items():
            if key not in source:
                raise UnknownClass(key, f"{where} domain")
            if value not in target:
                raise UnknownClass(value, f"{where} range")
        for lo, hi in source.covers:
            if not target.leq(table[lo], table[hi]):
                raise NotMonotone((lo, hi), where)
        self.source = source
        self.target = target
        self._table = dict(table)

    def __call__(self, c: str) -> str:
        try:
            return self._table[c]
        except KeyError:
            raise UnknownClass(c, "map domain") from None

    def mapping(self) -> dict[str, str]:
        """The underlying table, keyed in source declaration order."""
        return {c: self._table[c] for c in self.source.classes}

    def image(self) -> tuple[str, ...]:
        return self.target.sorted_by_index(set(self._table.values()))

    def preimage(self, value: str) -> tuple[str, ...]:
        return tuple(c for c in self.source.classes if self._table[c] == value)

    def then(self, other: "MonotoneMap") -> "MonotoneMap":
        """Composition: first self, then other."""
        if other.source != self.target:
            raise LatticeMismatch("cannot compose maps across different lattices")
        return MonotoneMap(self.source, other.target,
                           {c: other(self._table[c]) for c in self.source.classes})

    def __eq__(self, other) -> bool:
        if not isinstance(other, MonotoneMap):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and self._table == other._table)

    def __repr__(self) -> str:
        return f"MonotoneMap({self.source.name} -> {self.target.name})"


@dataclass(frozen=True)
class LagoisConnection:
    """A verified connection with its budpoint sets and kernel partitions.

    budpoints_left is gamma[M] in left declaration order, budpoints_right is
    alpha[L]; kernels group classes that share an image.  Only
    :func:`check_connection` and the constructors in this module build these.
    """
    left: Lattice
    right: Lattice
    alpha: MonotoneMap
    gamma: MonotoneMap
    budpoints_left: tuple[str, ...]
    budpoints_right: tuple[str, ...]
    kernel_left: tuple[tuple[str, ...], ...]
    kernel_right: tuple[tuple[str, ...], ...]

    def __repr__(self) -> str:
        return (f"LagoisConnection({self.left.name} <-> {self.right.name}, "
                f"{len(self.budpoints_left)} budpoint pairs)")

    def transpose(self) -> "LagoisConnection":
        """The same agreement viewed from the other domain."""
        return LagoisConnection(self.right, self.left, self.gamma, self.alpha,
                                self.budpoints_right, self.budpoints_left,
                                self.kernel_right, self.kernel_left)

    def round_trip_left(self, c: str) -> str:
        return self.gamma(self.alpha(c))

    def round_trip_right(self, c: str) -> str:
        return self.alpha(self.gamma(c))

    def to_dict(self) -> dict:
        return {
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
            "alpha": self.alpha.mapping(),
            "gamma": self.gamma.mapping(),
        }


def connection_violations(left: Lattice, right: Lattice,
                          alpha: Mapping[str, str],
                          gamma: Mapping[str, str]) -> list[Violation]:
    """Evaluate order preservation and LC1-LC4, collecting every violation.

    Raises PartialMap/UnknownClass for maps that are not even total functions
    between the two class sets; those are input errors, not check outcomes.
    Runtime is linear in the lattice sizes plus the cover counts.
    """
    _require_total(left, right, alpha, "alpha")
    _require_total(right, left, gamma, "gamma")

    out: list[Violation] = []
    for lo, hi in left.covers:
        if not right.leq(alpha[lo], alpha[hi]):
            out.append(Violation("Monotone-alpha", (lo, hi)))
    for lo, hi in right.covers:
        if not left.leq(gamma[lo], gamma[hi]):
            out.append(Violation("Monotone-gamma", (lo, hi)))
    for l in left.classes:
        if not left.leq(l, gamma[alpha[l]]):
            out.append(Violation("LC1", (l,)))
    for m in right.classes:
        if not right.leq(m, alpha[gamma[m]]):
            out.append(Violation("LC2", (m,)))
    for l in left.classes:
        if alpha[gamma[alpha[l]]] != alpha[l]:
            out.append(Violation("LC3", (l,)))
    for m in right.classes:
        if gamma[alpha[gamma[m]]] != gamma[m]:
            out.append(Violation("LC4", (m,)))
    return out


def _require_total(source: Lattice, target: Lattice,
                   table: Mapping[str, str], where: str) -> None:
    missing = tuple(c for c in source.classes if c not in table)
    if missing:
        raise PartialMap(missing, where)
    for key, value in table.items():
        if key not in source:
            raise UnknownClass(key, f"{where} domain")
        if value not in target:
            raise UnknownClass(value, f"{where} range")


def _kernel_blocks(lat: Lattice, table: Mapping[str, str]) -> tuple[tuple[str, ...], ...]:
    blocks: dict[str, list[str]] = {}
    for c in lat.classes:
        blocks.setdefault(table[c], []).append(c)
    ordered = sorted(blocks.values(), key=lambda b: lat.index(b[0]))
    return tuple(tuple(b) for b in ordered)


def check_connection(left: Lattice, right: Lattice,
                     alpha: Mapping[str, str],
                     gamma: Mapping[str, str]) -> LagoisConnection:
    """Verify a raw map pair; return the connection or raise NotLagois with
    every violation found."""
    violations = connection_violations(left, right, alpha, gamma)
    if violations:
        raise NotLagois(violations)
    amap = MonotoneMap(left, right, alpha, "alpha")
    gmap = MonotoneMap(right, left, gamma, "gamma")
    return LagoisConnection(
        left, right, amap, gmap,
        budpoints_left=left.sorted_by_index(set(gamma[m] for m in right.classes)),
        budpoints_right=right.sorted_by_index(set(alpha[l] for l in left.classes)),
        kernel_left=_kernel_blocks(left, alpha),
        kernel_right=_kernel_blocks(right, gamma),
    )


def identity_connection(lat: Lattice) -> LagoisConnection:
    ident = {c: c for c in lat.classes}
    return check_connection(lat, lat, ident, ident)


def budpoint_representative(conn: LagoisConnection, side: str, c: str) -> str:
    """The least budpoint above c: gamma(alpha(c)) on the left side,
    alpha(gamma(c)) on the right."""
    if side == "left":
        return conn.round_trip_left(c)
    if side == "right":
        return conn.round_trip_right(c)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


# -- tightness ------------------------------------------------------------

@dataclass(frozen=True)
class TightnessReport:
    passed: bool
    failures: tuple[str, ...]
    subsets_checked: int


def check_tightness(conn: LagoisConnection, max_exhaustive: int = 12,
                    samples: int = 200, seed: int = 0) -> TightnessReport:
    """Check that each round trip lands on the least budpoint above its
    argument, and that budpoint sets are closed under meets with joins given
    by the round trip of the ambient join.

    Subsets of each budpoint set are enumerated exhaustively up to
    2**max_exhaustive, otherwise sampled pseudo-randomly from `seed`.
    """
    import itertools
    import random

    failures: list[str] = []
    checked = 0

    for side in ("left", "right"):
        view = conn if side == "left" else conn.transpose()
        lat = view.left
        buds = view.budpoints_left
        budset = set(buds)
        for c in lat.classes:
            rep = view.round_trip_left(c)
            above = [b for b in buds if lat.leq(c, b)]
            if rep != lat.meet_all(above):
                failures.append(f"{side}:{c}: round trip is not the meet of "
                                f"dominating budpoints")
        if len(buds) <= max_exhaustive:
            subsets: Iterable[tuple[str, ...]] = itertools.chain.from_iterable(
                itertools.combinations(buds, k) for k in range(len(buds) + 1))
        else:
            rng = random.Random(seed)
            subsets = (tuple(b for b in buds if rng.random() < 0.5)
                       for _ in range(samples))
        for subset in subsets:
            checked += 1
            ambient_meet = lat.meet_all(subset)
            if ambient_meet not in budset:
                failures.append(f"{side}:{subset}: meet escapes the budpoint set")
                continue
            below = [b for b in buds if all(lat.leq(b, s) for s in subset)]
            greatest_below = [b for b in below if all(lat.leq(x, b) for x in below)]
            if greatest_below != [ambient_meet]:
                failures.append(f"{side}:{subset}: inside-meet differs from ambient meet")
            above = [b for b in buds if all(lat.leq(s, b) for s in subset)]
            least_above = [b for b in above if all(lat.leq(b, x) for x in above)]
            if least_above != [view.round_trip_left(lat.join_all(subset))]:
                failures.append(f"{side}:{subset}: join inside budpoints is not the "
                                f"round trip of the ambient join")
    return TightnessReport(not failures, tuple(failures), checked)


# -- adjoint synthesis -----------------------------------------------------

def find_adjoint(alpha: MonotoneMap) -> MonotoneMap:
    """Synthesise the unique right map making (L, alpha, gamma, M) a verified
    connection, or raise AdjointError naming the first failed condition.

    The three conditions, checked in dependency order:
      1. every nonempty preimage of alpha has a largest member;
      2. for every m, the image classes above m have a smallest member;
      3. the largest-preimage elements, ordered as in L, mirror the image
         order exactly (an order isomorphism onto alpha[L]).
    The map is then gamma(m) = largest preimage of (least image class above m).
    """
    left, right = alpha.source, alpha.target
    image = alpha.image()

    largest: dict[str, str] = {}
    for m in image:
        members = alpha.preimage(m)
        tops = [u for u in members if all(left.leq(v, u) for v in members)]
        if not tops:
            raise AdjointError(1, (m,), f"preimage {list(members)} has no largest member")
        largest[m] = tops[0]

    least_above: dict[str, str] = {}
    for m in right.classes:
        above = [t for t in image if right.leq(m, t)]
        if not above:
            raise AdjointError(2, (m,), "no image class above it")
        inf = right.meet_all(above)
        if inf not in above:
            raise AdjointError(2, (m,), f"image classes above it have no smallest member "
                                        f"(minimal ones: {_minimals(right, above)})")
        least_above[m] = inf

    for m1 in image:
        for m2 in image:
            if right.leq(m1, m2) and not left.leq(largest[m1], largest[m2]):
                raise AdjointError(3, (m1, m2),
                                   "largest-preimage elements do not mirror the image order")

    gamma = {m: largest[least_above[m]] for m in right.classes}
    conn = check_connection(left, right, alpha.mapping(), gamma)
    return conn.gamma


def _minimals(lat: Lattice, items: list[str]) -> list[str]:
    return [u for u in items
            if not any(v != u and lat.leq(v, u) for v in items)]


# -- ab-initio construction -------------------------------------------------

def build_from_closures(left: Lattice, right: Lattice,
                        c: Mapping[str, str], i: Mapping[str, str],
                        h: Mapping[str, str]) -> LagoisConnection:
    """Build a connection from closure operators c on L and i on M whose
    images are order-isomorphic via h: the maps are h.c and inverse(h).i."""
    _require_closure(left, c, "c")
    _require_closure(right, i, "i")
    image_c = left.sorted_by_index(set(c[x] for x in left.classes))
    image_i = right.sorted_by_index(set(i[x] for x in right.classes))

    if set(h.keys()) != set(image_c):
        raise NotIso("h must be defined exactly on the image of c",
                     tuple(sorted(set(h.keys()) ^ set(image_c))))
    if set(h.values()) != set(image_i) or len(set(h.values())) != len(h):
        raise NotIso("h must map one-to-one onto the image of i",
                     tuple(sorted(set(h.values()) ^ set(image_i))))
    for a in image_c:
        for b in image_c:
            if left.leq(a, b) != right.leq(h[a], h[b]):
                raise NotIso("h does not preserve and reflect order", (a, b))

    h_inv = {v: k for k, v in h.items()}
    alpha = {l: h[c[l]] for l in left.classes}
    gamma = {m: h_inv[i[m]] for m in right.classes}
    return check_connection(left, right, alpha, gamma)


def _require_closure(lat: Lattice, table: Mapping[str, str], name: str) -> None:
    _require_total(lat, lat, table, name)
    for lo, hi in lat.covers:
        if not lat.leq(table[lo], table[hi]):
            raise NotClosure(name, "monotone", lo)
    for x in lat.classes:
        if not lat.leq(x, table[x]):
            raise NotClosure(name, "increasing", x)
    for x in lat.classes:
        if table[table[x]] != table[x]:
            raise NotClosure(name, "idempotent", x)


# -- composition -------------------------------------------------------------

@dataclass(frozen=True)
class Composition:
    connection: LagoisConnection
    admitted_by: str  # "image-subset" or "containment-conditions"


def compose(ab: LagoisConnection, bc: LagoisConnection) -> Composition:
    """Chain two connections sharing a middle lattice.

    The chained maps are a valid connection exactly when each outer image is
    closed under the other connection's round trip through the middle
    lattice; a one-sided subset relation between the two middle images is a
    sufficient shortcut.  The result is re-verified from scratch.
    """
    if ab.right != bc.left:
        raise LatticeMismatch("middle lattices differ; cannot compose")

    image_a = set(ab.alpha.image())
    image_g = set(bc.gamma.image())
    for x in ab.right.sorted_by_index(image_a):
        if bc.round_trip_left(x) not in image_a:
            raise ComposeError("left", x)
    for y in ab.right.sorted_by_index(image_g):
        if ab.round_trip_right(y) not in image_g:
            raise ComposeError("right", y)

    admitted = ("image-subset" if image_g <= image_a or image_a <= image_g
                else "containment-conditions")
    alpha = {l: bc.alpha(ab.alpha(l)) for l in ab.left.classes}
    gamma = {q: ab.gamma(bc.gamma(q)) for q in bc.right.classes}
    return Composition(check_connection(ab.left, bc.right, alpha, gamma), admitted)


# -- decomposition ------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """insertion_left . iso . insertion_right recover the original maps.

    insertion_left runs L onto its budpoints (round trip one way, inclusion
    back); iso is the mutually inverse budpoint bijection; insertion_right
    embeds the right budpoints into M with the round trip as its inverse leg.
    """
    insertion_left: LagoisConnection
    iso: tuple[MonotoneMap, MonotoneMap]
    insertion_right: LagoisConnection

    def recomposed_alpha(self, c: str) -> str:
        return self.insertion_right.alpha(self.iso[0](self.insertion_left.alpha(c)))

    def recomposed_gamma(self, c: str) -> str:
        return self.insertion_left.gamma(self.iso[1](self.insertion_right.gamma(c)))


def sublattice(lat: Lattice, subset: Iterable[str], name: str) -> Lattice:
    """The restriction of lat to subset, with the inherited order."""
    subset = lat.sorted_by_index(set(subset))
    covers = [(a, b) for a in subset for b in subset if a != b and lat.leq(a, b)]
    return build_lattice(name, subset, covers)


def decompose(conn: LagoisConnection) -> Decomposition:
    lstar = sublattice(conn.left, conn.budpoints_left, f"{conn.left.name}*")
    mstar = sublattice(conn.right, conn.budpoints_right, f"{conn.right.name}*")

    r1 = {l: conn.round_trip_left(l) for l in conn.left.classes}
    e1 = {b: b for b in lstar.classes}
    insertion_left = check_connection(conn.left, lstar, r1, e1)

    i1 = MonotoneMap(lstar, mstar, {b: conn.alpha(b) for b in lstar.classes}, "iso")
    i2 = MonotoneMap(mstar, lstar, {b: conn.gamma(b) for b in mstar.classes}, "iso-inverse")
    for b in lstar.classes:
        if i2(i1(b)) != b:
            raise NotIso("budpoint maps are not mutually inverse", (b,))
    for b in mstar.classes:
        if i1(i2(b)) != b:
            raise NotIso("budpoint maps are not mutually inverse", (b,))

    e2 = {b: b for b in mstar.classes}
    r2 = {m: conn.round_trip_right(m) for m in conn.right.classes}
    insertion_right = check_connection(mstar, conn.right, e2, r2)

    return Decomposition(insertion_left, (i1, i2), insertion_right)


# -- maintenance --------------------------------------------------------------

def coarsen(conn: LagoisConnection, alpha2: MonotoneMap) -> LagoisConnection:
    """Replace alpha with a coarser map and rebuild the right map as
    gamma . alpha' . gamma.

    alpha' must merge whole kernel blocks of alpha, each merged block must
    have a largest member, and alpha' must send the block where alpha sent
    that largest member.
    """
    if alpha2.source != conn.left or alpha2.target != conn.right:
        raise LatticeMismatch("replacement map must connect the same lattices")

    for block in conn.kernel_left:
        values = {alpha2(c) for c in block}
        if len(values) > 1:
            a, b = block[0], block[1]
            for c in block[1:]:
                if alpha2(c) != alpha2(a):
                    b = c
                    break
            raise CoarsenError("not-refinement", (a, b),
                               f"{a!r} and {b!r} shared an image before but not after")

    left = conn.left
    for block in _kernel_blocks(left, alpha2.mapping()):
        tops = [u for u in block if all(left.leq(v, u) for v in block)]
        if not tops:
            raise CoarsenError("no-largest-element", tuple(block),
                               f"merged class {list(block)} has no largest member")
        rep = tops[0]
        if alpha2(rep) != conn.alpha(rep):
            raise CoarsenError("representative-mismatch", (rep,),
                               f"largest member {rep!r} must keep its old image "
                               f"{conn.alpha(rep)!r}, got {alpha2(rep)!r}")

    gamma2 = {m: conn.gamma(alpha2(conn.gamma(m))) for m in conn.right.classes}
    return check_connection(conn.left, conn.right, alpha2.mapping(), gamma2)


def semi_inverse_connection(alpha1: MonotoneMap, gamma1: MonotoneMap) -> LagoisConnection:
    """Given alpha with a semi-inverse (alpha . gamma . alpha = alpha), build
    the candidate pair (alpha, gamma . alpha . gamma) and verify it.

    The construction always restores the two composition identities, but not
    necessarily LC1/LC2; verification runs in full and NotLagois reports any
    residual violations.
    """
    if gamma1.source != alpha1.target or gamma1.target != alpha1.source:
        raise LatticeMismatch("gamma must run opposite to alpha")
    for l in alpha1.source.classes:
        if alpha1(gamma1(alpha1(l))) != alpha1(l):
            raise NotSemiInverse(l)
    gamma2 = {m: gamma1(alpha1(gamma1(m))) for m in gamma1.source.classes}
    return check_connection(alpha1.source, alpha1.target, alpha1.mapping(), gamma2)
