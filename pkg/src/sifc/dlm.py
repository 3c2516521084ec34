"""Decentralized labels over acts-for hierarchies, and their transport across
a connection between two hierarchies.

Principals are ordered by a reflexive-transitive acts-for relation (a
pre-order: mutual acts-for is allowed).  A policy is an owner together with a
reader set; a label is a conjunction of policies.  Relabeling L1 -> L2 is
permitted when every policy of L1 is subsumed by some policy of L2; labels
are joined by set union.

A verified connection between two hierarchies lifts pointwise to labels:
each policy's owner and readers are pushed through the principal maps.  The
lifted maps again satisfy the connection laws, with the two composition
identities holding up to label equivalence, and the declassification rule
transports across the connection for authority sets that mirror each other.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .connection import Violation

TOP = "TOP"
BOT = "BOT"

PRINCIPAL_RE = re.compile(r"[A-Za-z0-9_]+\Z")


class DlmError(Exception):
    pass


class UnknownPrincipal(DlmError):
    def __init__(self, name: str):
        super().__init__(f"unknown principal {name!r}")
        self.name = name


class LabelSyntaxError(DlmError):
    pass


class NotLagoisHierarchy(DlmError):
    def __init__(self, violations: list[Violation]):
        lines = ", ".join(f"{v.condition}@{'/'.join(v.witness)}" for v in violations)
        super().__init__(f"principal maps are not a valid connection: {lines}")
        self.violations = violations


class AuthorityMismatch(DlmError):
    pass


class CorollaryViolation(DlmError):
    """The two sides of the cross-domain declassification test disagreed."""

    def __init__(self, detail: str):
        super().__init__(detail)


class PrincipalsHierarchy:
    """A finite set of principals under the acts-for pre-order, with TOP
    acting for everyone and everyone acting for BOT."""

    __slots__ = ("principals", "edges", "_acts_for")

    def __init__(self, principals: Sequence[str], acts_for_edges: Iterable[tuple[str, str]]):
        names = list(principals)
        for required in (TOP, BOT):
            if required not in names:
                names.append(required)
        seen = set()
        for p in names:
            if not PRINCIPAL_RE.match(p or ""):
                raise DlmError(f"invalid principal name {p!r}")
            if p in seen:
                raise DlmError(f"duplicate principal {p!r}")
            seen.add(p)
        edges = []
        for p, q in acts_for_edges:
            if p not in seen:
                raise UnknownPrincipal(p)
            if q not in seen:
                raise UnknownPrincipal(q)
            edges.append((p, q))

        succ: dict[str, list[str]] = {p: [] for p in names}
        for p, q in edges:
            succ[p].append(q)  # p acts for q
        for p in names:
            succ[TOP].append(p)
            succ[p].append(BOT)

        table: dict[str, frozenset[str]] = {}
        for p in names:
            reached = {p}
            stack = [p]
            while stack:
                cur = stack.pop()
                for nxt in succ[cur]:
                    if nxt not in reached:
                        reached.add(nxt)
                        stack.append(nxt)
            table[p] = frozenset(reached)

        self.principals = tuple(names)
        self.edges = tuple(edges)
        self._acts_for = table

    def __contains__(self, name: str) -> bool:
        return name in self._acts_for

    def acts_for(self, p: str, q: str) -> bool:
        """True iff p may perform any action q may (p is at least as trusted)."""
        row = self._acts_for.get(p)
        if row is None:
            raise UnknownPrincipal(p)
        if q not in self._acts_for:
            raise UnknownPrincipal(q)
        return q in row

    def equiv(self, p: str, q: str) -> bool:
        return self.acts_for(p, q) and self.acts_for(q, p)

    def to_dict(self) -> dict:
        return {"principals": [p for p in self.principals if p not in (TOP, BOT)],
                "acts_for": [[p, q] for p, q in self.edges]}

    @staticmethod
    def from_dict(data: Mapping) -> "PrincipalsHierarchy":
        if not isinstance(data, Mapping) or "principals" not in data:
            raise DlmError('hierarchy document must carry "principals"')
        return PrincipalsHierarchy(list(data["principals"]),
                                   [tuple(e) for e in data.get("acts_for", [])])

    def __repr__(self) -> str:
        return f"PrincipalsHierarchy({len(self.principals)} principals)"


@dataclass(frozen=True, order=True)
class Policy:
    owner: str
    readers: frozenset[str]

    def effective_readers(self) -> frozenset[str]:
        return self.readers | {self.owner}

    def __str__(self) -> str:
        readers = ", ".join(sorted(self.readers))
        return f"{self.owner}: {readers}" if readers else f"{self.owner}:"


@dataclass(frozen=True)
class Label:
    policies: frozenset[Policy]

    @staticmethod
    def of(*policies: Policy) -> "Label":
        return Label(frozenset(policies))

    @staticmethod
    def empty() -> "Label":
        return Label(frozenset())

    def __str__(self) -> str:
        return format_label(self)


def policy(owner: str, *readers: str) -> Policy:
    return Policy(owner, frozenset(readers))


def _check_principals(h: PrincipalsHierarchy, label: Label) -> None:
    for pol in label.policies:
        if pol.owner not in h:
            raise UnknownPrincipal(pol.owner)
        for r in pol.readers:
            if r not in h:
                raise UnknownPrincipal(r)


def policy_leq(h: PrincipalsHierarchy, i: Policy, j: Policy) -> bool:
    """j subsumes i: j's owner acts for i's owner and every effective reader
    of j acts for some effective reader of i."""
    if not h.acts_for(j.owner, i.owner):
        return False
    ri = i.effective_readers()
    return all(any(h.acts_for(rj, r) for r in ri) for rj in j.effective_readers())


def label_leq(h: PrincipalsHierarchy, l1: Label, l2: Label) -> bool:
    _check_principals(h, l1)
    _check_principals(h, l2)
    return all(any(policy_leq(h, i, j) for j in l2.policies) for i in l1.policies)


def label_equiv(h: PrincipalsHierarchy, l1: Label, l2: Label) -> bool:
    return label_leq(h, l1, l2) and label_leq(h, l2, l1)


def label_join(l1: Label, l2: Label) -> Label:
    return Label(l1.policies | l2.policies)


# -- label literals -------------------------------------------------------------

def parse_label(src: str) -> Label:
    """Parse '{o1: r1, r2; o2: r4}'; '{}' is the empty label, '{o:}' owner-only."""
    text = src.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise LabelSyntaxError(f"label must be brace-delimited: {src!r}")
    inner = text[1:-1].strip()
    if not inner:
        return Label.empty()
    policies = []
    for part in inner.split(";"):
        if ":" not in part:
            raise LabelSyntaxError(f"policy needs 'owner:' in {part.strip()!r}")
        owner, readers_src = part.split(":", 1)
        owner = owner.strip()
        if not PRINCIPAL_RE.match(owner):
            raise LabelSyntaxError(f"bad owner {owner!r}")
        readers = []
        for r in readers_src.split(","):
            r = r.strip()
            if not r:
                continue
            if not PRINCIPAL_RE.match(r):
                raise LabelSyntaxError(f"bad reader {r!r}")
            readers.append(r)
        policies.append(Policy(owner, frozenset(readers)))
    return Label(frozenset(policies))


def format_label(label: Label) -> str:
    if not label.policies:
        return "{}"
    parts = [str(p) for p in sorted(label.policies,
                                    key=lambda p: (p.owner, sorted(p.readers)))]
    return "{" + "; ".join(parts) + "}"


# -- connections between hierarchies ----------------------------------------------

def hierarchy_violations(left: PrincipalsHierarchy, right: PrincipalsHierarchy,
                         alpha: Mapping[str, str],
                         gamma: Mapping[str, str]) -> list[Violation]:
    """Connection laws over the acts-for pre-orders.  Monotonicity and the
    increasing laws use the closure; the two composition identities compare
    up to mutual acts-for (plain equality on partial orders)."""
    for p in left.principals:
        if p not in alpha:
            raise DlmError(f"alpha leaves principal {p!r} unmapped")
        if alpha[p] not in right:
            raise UnknownPrincipal(alpha[p])
    for q in right.principals:
        if q not in gamma:
            raise DlmError(f"gamma leaves principal {q!r} unmapped")
        if gamma[q] not in left:
            raise UnknownPrincipal(gamma[q])

    out = []
    for p in left.principals:
        for p2 in left.principals:
            if left.acts_for(p2, p) and not right.acts_for(alpha[p2], alpha[p]):
                out.append(Violation("Monotone-alpha", (p, p2)))
    for q in right.principals:
        for q2 in right.principals:
            if right.acts_for(q2, q) and not left.acts_for(gamma[q2], gamma[q]):
                out.append(Violation("Monotone-gamma", (q, q2)))
    for p in left.principals:
        if not left.acts_for(gamma[alpha[p]], p):
            out.append(Violation("LC1", (p,)))
    for q in right.principals:
        if not right.acts_for(alpha[gamma[q]], q):
            out.append(Violation("LC2", (q,)))
    for p in left.principals:
        if not right.equiv(alpha[gamma[alpha[p]]], alpha[p]):
            out.append(Violation("LC3", (p,)))
    for q in right.principals:
        if not left.equiv(gamma[alpha[gamma[q]]], gamma[q]):
            out.append(Violation("LC4", (q,)))
    return out


@dataclass(frozen=True)
class PrincipalMapPair:
    """A verified connection between two principals hierarchies."""
    left: PrincipalsHierarchy
    right: PrincipalsHierarchy
    alpha: Mapping[str, str]
    gamma: Mapping[str, str]

    @staticmethod
    def check(left: PrincipalsHierarchy, right: PrincipalsHierarchy,
              alpha: Mapping[str, str], gamma: Mapping[str, str]) -> "PrincipalMapPair":
        violations = hierarchy_violations(left, right, alpha, gamma)
        if violations:
            raise NotLagoisHierarchy(violations)
        return PrincipalMapPair(left, right, dict(alpha), dict(gamma))

    def budpoint_pairs(self) -> list[tuple[str, str]]:
        return [(p, self.alpha[p]) for p in self.left.principals
                if self.gamma[self.alpha[p]] == p]


def lift_label(pm: PrincipalMapPair, direction: str, label: Label) -> Label:
    """Map a label pointwise through the principal maps: 'lr' pushes a left
    label right through alpha, 'rl' pulls a right label left through gamma."""
    if direction == "lr":
        h, table = pm.left, pm.alpha
    elif direction == "rl":
        h, table = pm.right, pm.gamma
    else:
        raise ValueError(f"direction must be 'lr' or 'rl', got {direction!r}")
    _check_principals(h, label)
    return Label(frozenset(
        Policy(table[p.owner], frozenset(table[r] for r in p.readers))
        for p in label.policies))


# -- lifted-connection sampling ------------------------------------------------------

PROPERTY_NAMES = ("1a", "1b", "2a", "2b", "3a", "3b")


@dataclass(frozen=True)
class LiftedReport:
    passed: bool
    samples: int
    seed: int
    checks: dict[str, int]
    failures: tuple[tuple[str, str], ...]  # (property, witness)


def random_label(rng: random.Random, principals: Sequence[str],
                 max_policies: int = 4, max_readers: int = 3) -> Label:
    """Policy count geometric with mean two (capped), readers uniform small
    subsets.  Covers the empty label."""
    count = 1
    while count < max_policies and rng.random() < 0.5:
        count += 1
    if rng.random() < 0.1:
        count = 0
    policies = []
    for _ in range(count):
        owner = rng.choice(principals)
        size = rng.randint(0, min(max_readers, len(principals)))
        readers = frozenset(rng.sample(list(principals), size))
        policies.append(Policy(owner, readers))
    return Label(frozenset(policies))


def _related_label(rng: random.Random, h: PrincipalsHierarchy,
                   principals: Sequence[str], base: Label) -> Label:
    """A label above `base` in the relabeling order, by adding policies,
    dropping readers, or upgrading owners."""
    policies = set(base.policies)
    move = rng.randrange(3)
    if move == 0 or not policies:
        size = rng.randint(0, min(3, len(principals)))
        policies.add(Policy(rng.choice(principals),
                            frozenset(rng.sample(list(principals), size))))
    elif move == 1:
        victim = rng.choice(sorted(policies, key=str))
        if victim.readers:
            policies.discard(victim)
            dropped = frozenset(sorted(victim.readers)[1:])
            policies.add(Policy(victim.owner, dropped))
    else:
        victim = rng.choice(sorted(policies, key=str))
        uppers = [p for p in h.principals if h.acts_for(p, victim.owner)]
        policies.discard(victim)
        policies.add(Policy(rng.choice(uppers), victim.readers))
    return Label(frozenset(policies))


def check_lifted_connection(pm: PrincipalMapPair, samples: int,
                            seed: int) -> LiftedReport:
    """Sample labels over both hierarchies and check the six lifted laws:
    monotonicity of both lifted maps (1a/1b), both round trips increasing
    (2a/2b), and both composition identities up to label equivalence (3a/3b).

    Owner-only singleton labels for every principal are always included as
    canonical cases alongside the random draws.
    """
    rng = random.Random(seed)
    failures: list[tuple[str, str]] = []
    checks = {name: 0 for name in PROPERTY_NAMES}

    def alpha_hat(lab: Label) -> Label:
        return lift_label(pm, "lr", lab)

    def gamma_hat(lab: Label) -> Label:
        return lift_label(pm, "rl", lab)

    sides = (
        ("a", pm.left, pm.right, alpha_hat, gamma_hat),
        ("b", pm.right, pm.left, gamma_hat, alpha_hat),
    )
    for suffix, h_src, h_dst, push, pull in sides:
        pool = [p for p in h_src.principals]
        labels = [Label.of(Policy(p, frozenset())) for p in pool]
        labels.append(Label.empty())
        while len(labels) < samples:
            labels.append(random_label(rng, pool))
        for lab in labels:
            checks["2" + suffix] += 1
            if not label_leq(h_src, lab, pull(push(lab))):
                failures.append(("2" + suffix, format_label(lab)))
            checks["3" + suffix] += 1
            if not label_equiv(h_dst, push(lab), push(pull(push(lab)))):
                failures.append(("3" + suffix, format_label(lab)))
            bigger = _related_label(rng, h_src, pool, lab)
            if label_leq(h_src, lab, bigger):
                checks["1" + suffix] += 1
                if not label_leq(h_dst, push(lab), push(bigger)):
                    failures.append(("1" + suffix,
                                     f"{format_label(lab)} <= {format_label(bigger)}"))
    return LiftedReport(not failures, samples, seed, checks, tuple(failures))


# -- declassification ------------------------------------------------------------------

def authority_label(authority: Iterable[str]) -> Label:
    return Label(frozenset(Policy(p, frozenset()) for p in authority))


def declassify_check(h: PrincipalsHierarchy, authority: Iterable[str],
                     l1: Label, l2: Label) -> bool:
    """May data labeled l1 be released at l2 by owners in `authority`?
    True iff l1 flows to l2 joined with the authority's owner-only label."""
    authority = list(authority)
    for p in authority:
        if p not in h:
            raise UnknownPrincipal(p)
    return label_leq(h, l1, label_join(l2, authority_label(authority)))


@dataclass(frozen=True)
class CrossDeclassifyResult:
    allowed: bool
    near_side: bool   # verdict evaluated in the label's home domain
    far_side: bool    # verdict evaluated across the connection
    direction: str


def cross_declassify_check(pm: PrincipalMapPair,
                           authority_left: Iterable[str],
                           authority_right: Iterable[str],
                           l1: Label, l2: Label,
                           direction: str = "lr") -> CrossDeclassifyResult:
    """Evaluate a declassification across the connection from both ends.

    For direction 'lr', l1 lives in the left domain and l2 in the right:
    the left view asks whether l1 declassifies to the pulled-back l2, the
    right view whether the pushed-forward l1 declassifies to l2.  The two
    verdicts must agree when the authority sets mirror each other and the
    labels stay on transfer principals; disagreement raises
    CorollaryViolation.
    """
    a_left = sorted(set(authority_left))
    a_right = sorted(set(authority_right))
    for p in a_left:
        if p not in pm.left:
            raise UnknownPrincipal(p)
    for q in a_right:
        if q not in pm.right:
            raise UnknownPrincipal(q)
    if {pm.alpha[p] for p in a_left} != set(a_right):
        raise AuthorityMismatch("alpha image of the left authority must equal "
                                "the right authority")
    if {pm.gamma[q] for q in a_right} != set(a_left):
        raise AuthorityMismatch("gamma image of the right authority must equal "
                                "the left authority")

    if direction == "lr":
        near = declassify_check(pm.left, a_left, l1, lift_label(pm, "rl", l2))
        far = declassify_check(pm.right, a_right, lift_label(pm, "lr", l1), l2)
    elif direction == "rl":
        near = declassify_check(pm.right, a_right, l1, lift_label(pm, "lr", l2))
        far = declassify_check(pm.left, a_left, lift_label(pm, "rl", l1), l2)
    else:
        raise ValueError(f"direction must be 'lr' or 'rl', got {direction!r}")

    if near != far:
        raise CorollaryViolation(
            f"cross-domain declassification verdicts disagree for "
            f"{format_label(l1)} -> {format_label(l2)} ({direction}): "
            f"near={near}, far={far}")
    return CrossDeclassifyResult(near, near, far, direction)
