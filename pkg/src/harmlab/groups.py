"""Concrete group families with normal forms, symmetric measures, transversal
decompositions and Cayley-ball construction.

Families: free abelian Z^d, finite cyclic Z/m (quotient targets and weighted
circulant examples), virtually cyclic groups Z x| C_k where the finite
cyclic part acts on Z by a sign (the infinite dihedral group is order=2 with
twist), and the lamplighter group Z |x (sum of Z/2).

Elements are plain hashable tuples in a family-specific normal form, so
equality of elements is equality of encodings.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import (
    GraphParseError,
    PreconditionError,
    StructuralError,
    UnsupportedFeatureError,
)
from .graphs import GraphFamily, WeightedGraph, parse_rat, rat_str

Element = tuple


class GroupModel:
    """Base class: a finitely generated group with a computable normal form."""

    family = "abstract"

    def identity(self) -> Element:
        raise NotImplementedError

    def mul(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def inv(self, a: Element) -> Element:
        raise NotImplementedError

    def generators(self) -> Dict[str, Element]:
        raise NotImplementedError

    def name(self, g: Element) -> str:
        raise NotImplementedError

    def parse(self, s: str) -> Element:
        raise NotImplementedError

    def check(self, g: Element) -> Element:
        """Validate that g is a normal form of this model."""
        raise NotImplementedError

    def key(self, g: Element):
        """Deterministic sort key for elements."""
        return g

    # generic helpers ------------------------------------------------------

    def word(self, text: str) -> Element:
        """Evaluate a dot-separated generator word, e.g. "a.c.a" or "x^-1.y".

        "e" denotes the identity.
        """
        g = self.identity()
        text = text.strip()
        if text in ("", "e", "identity"):
            return g
        gens = self.generators()
        for tok in text.split("."):
            tok = tok.strip()
            invert = False
            if tok.endswith("^-1"):
                tok, invert = tok[:-3], True
            elif tok.endswith("'"):
                tok, invert = tok[:-1], True
            if tok == "e":
                continue
            if tok not in gens:
                raise GraphParseError(f"unknown generator {tok!r} in word")
            s = gens[tok]
            g = self.mul(g, self.inv(s) if invert else s)
        return g

    def conjugate(self, g: Element, by: Element) -> Element:
        return self.mul(self.mul(by, g), self.inv(by))


class FreeAbelian(GroupModel):
    """Z^d with componentwise addition; normal form is an int d-tuple."""

    family = "free_abelian"

    def __init__(self, d: int):
        if d < 1:
            raise PreconditionError("dimension must be >= 1")
        self.d = d

    def identity(self) -> Element:
        return (0,) * self.d

    def check(self, g: Element) -> Element:
        if len(g) != self.d or not all(isinstance(c, int) for c in g):
            raise StructuralError(f"{g!r} is not a Z^{self.d} normal form")
        return g

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(self.check(a), self.check(b)))

    def inv(self, a):
        return tuple(-x for x in self.check(a))

    def generators(self) -> Dict[str, Element]:
        names = ["x", "y", "z"] + [f"x{i}" for i in range(4, self.d + 1)]
        out = {}
        for i in range(self.d):
            e = [0] * self.d
            e[i] = 1
            out[names[i]] = tuple(e)
        return out

    def name(self, g) -> str:
        return ",".join(str(c) for c in g)

    def parse(self, s: str) -> Element:
        if s in ("e", "identity"):
            return self.identity()
        parts = s.split(",")
        if len(parts) != self.d:
            raise GraphParseError(f"{s!r} is not a Z^{self.d} element")
        return tuple(int(p) for p in parts)

    def zeta_vec(self, g) -> Tuple[int, ...]:
        return self.check(g)


class FiniteCyclic(GroupModel):
    """Z/m, additive; normal form is a 1-tuple (k,) with 0 <= k < m."""

    family = "finite_cyclic"

    def __init__(self, m: int):
        if m < 1:
            raise PreconditionError("modulus must be >= 1")
        self.m = m

    def identity(self):
        return (0,)

    def check(self, g):
        if len(g) != 1 or not 0 <= g[0] < self.m:
            raise StructuralError(f"{g!r} is not a Z/{self.m} normal form")
        return g

    def mul(self, a, b):
        return ((self.check(a)[0] + self.check(b)[0]) % self.m,)

    def inv(self, a):
        return ((-self.check(a)[0]) % self.m,)

    def generators(self):
        return {"x": (1 % self.m,)}

    def name(self, g):
        return str(g[0])

    def parse(self, s):
        if s in ("e", "identity"):
            return self.identity()
        return (int(s) % self.m,)


class VirtuallyCyclic(GroupModel):
    """Z x| C_k: elements (n, j), j indexing the finite cyclic transversal.

    The finite generator u satisfies u^k = e and acts on Z by -1 when
    `twist` is set (which requires k even); multiplication is
    (n, j)(n', j') = (n + sigma(j) n', j + j' mod k), sigma(j) = (-1)^j if
    twisted.  order=2 with twist is the infinite dihedral group with
    involutions a = u = (0,1) and c = (1,1); the infinite cyclic subgroup is
    generated by t = (1,0) = a c^-1 ... = (ac reversed orientation aside).
    """

    family = "virtually_cyclic"

    def __init__(self, order: int = 2, twist: bool = True):
        if order < 1:
            raise PreconditionError("finite part must have order >= 1")
        if twist and order % 2 != 0:
            raise PreconditionError("a twist needs an even-order finite part")
        self.order = order
        self.twist = twist

    def sigma(self, j: int) -> int:
        return -1 if (self.twist and j % 2 == 1) else 1

    def identity(self):
        return (0, 0)

    def check(self, g):
        if len(g) != 2 or not 0 <= g[1] < self.order:
            raise StructuralError(f"{g!r} is not a normal form for this group")
        return g

    def mul(self, a, b):
        (n, j), (n2, j2) = self.check(a), self.check(b)
        return (n + self.sigma(j) * n2, (j + j2) % self.order)

    def inv(self, a):
        n, j = self.check(a)
        ji = (-j) % self.order
        return (-self.sigma(ji) * n, ji)

    def generators(self):
        gens = {"t": (1, 0), "u": (0, 1 % self.order)}
        if self.order == 2 and self.twist:
            gens.update({"a": (0, 1), "c": (1, 1)})
        return gens

    def name(self, g):
        return f"{g[0]};{g[1]}"

    def parse(self, s):
        if s in ("e", "identity"):
            return self.identity()
        n, j = s.split(";")
        return (int(n), int(j) % self.order)

    def zeta(self, g) -> int:
        return self.check(g)[0]

    def tau(self, g) -> Element:
        return (0, self.check(g)[1])


def infinite_dihedral() -> VirtuallyCyclic:
    return VirtuallyCyclic(order=2, twist=True)


class Lamplighter(GroupModel):
    """Z |x (sum over Z of Z/2): elements (m, lamps) with lamps a sorted
    tuple of distinct lit positions.

    Group law (m, f)(m', f') = (m + m', f + m.f') where m.f' shifts the lamp
    set by m and + is symmetric difference.
    """

    family = "lamplighter"

    def identity(self):
        return (0, ())

    def check(self, g):
        if len(g) != 2 or not isinstance(g[1], tuple):
            raise StructuralError(f"{g!r} is not a lamplighter normal form")
        if list(g[1]) != sorted(set(g[1])):
            raise StructuralError(f"lamp set {g[1]!r} not sorted and deduplicated")
        return g

    def mul(self, a, b):
        (m, f), (m2, f2) = self.check(a), self.check(b)
        shifted = {p + m for p in f2}
        return (m + m2, tuple(sorted(set(f) ^ shifted)))

    def inv(self, a):
        m, f = self.check(a)
        return (-m, tuple(sorted(p - m for p in f)))

    def generators(self):
        return {"t": (1, ()), "l": (0, (0,))}

    def name(self, g):
        return f"{g[0]}|{','.join(str(p) for p in g[1])}"

    def parse(self, s):
        if s in ("e", "identity"):
            return self.identity()
        m, _, lamps = s.partition("|")
        pos = tuple(sorted(int(p) for p in lamps.split(",") if p.strip() != ""))
        return (int(m), pos)

    def zeta(self, g) -> int:
        return self.check(g)[0]

    def kappa(self, g) -> Element:
        m, f = self.check(g)
        return (0, f)

    def key(self, g):
        return (g[0], len(g[1]), g[1])


# -- symmetric measures ---------------------------------------------------------


@dataclass(frozen=True)
class SymmetricMeasure:
    """Finitely supported symmetric generating probability measure.

    Identity mass (a lazy walk) is permitted only when allow_identity is
    set; Cayley-ball construction skips the self-loop while the walk engine
    keeps the hold probability.
    """

    model: GroupModel
    support: Tuple[Tuple[Element, Fraction], ...]

    @classmethod
    def make(
        cls,
        model: GroupModel,
        weights: Iterable[Tuple[Element, Fraction]],
        allow_identity: bool = False,
    ) -> "SymmetricMeasure":
        accum: Dict[Element, Fraction] = {}
        for g, w in weights:
            model.check(g)
            accum[g] = accum.get(g, Fraction(0)) + Fraction(w)
        e = model.identity()
        if e in accum and not allow_identity:
            raise PreconditionError(
                "identity in measure support; pass allow_identity for a lazy walk"
            )
        for g, w in accum.items():
            if w <= 0:
                raise PreconditionError(f"weight of {model.name(g)} must be positive")
            gi = model.inv(g)
            if accum.get(gi) != w:
                raise PreconditionError(
                    f"measure not symmetric at {model.name(g)}"
                )
        total = sum(accum.values(), Fraction(0))
        if total != 1:
            raise PreconditionError(f"weights sum to {total}, expected 1")
        support = tuple(sorted(accum.items(), key=lambda kv: model.key(kv[0])))
        return cls(model=model, support=support)

    @classmethod
    def uniform(cls, model: GroupModel, gens: Sequence[Element]) -> "SymmetricMeasure":
        """Uniform measure on the symmetrized generator list."""
        sym: Set[Element] = set()
        for g in gens:
            sym.add(g)
            sym.add(model.inv(g))
        w = Fraction(1, len(sym))
        return cls.make(model, [(g, w) for g in sorted(sym, key=model.key)])

    @property
    def hold(self) -> Fraction:
        for g, w in self.support:
            if g == self.model.identity():
                return w
        return Fraction(0)

    def moving_support(self) -> List[Tuple[Element, Fraction]]:
        e = self.model.identity()
        return [(g, w) for g, w in self.support if g != e]

    def weight(self, g: Element) -> Fraction:
        for h, w in self.support:
            if h == g:
                return w
        return Fraction(0)

    def inverse(self) -> "SymmetricMeasure":
        return self  # symmetric by construction

    def generation_probe(self, radius: int = 6) -> Dict[str, object]:
        """Reports ball growth under support words; growth that has not yet
        saturated is evidence (not proof) that the support generates."""
        sizes = []
        ball: Set[Element] = {self.model.identity()}
        for _ in range(radius):
            nxt = set(ball)
            for g in ball:
                for s, _w in self.support:
                    nxt.add(self.model.mul(g, s))
            sizes.append(len(nxt))
            if len(nxt) == len(ball):
                break
            ball = nxt
        return {"sizes": sizes, "saturated": len(sizes) >= 2 and sizes[-1] == sizes[-2]}


def standard_measure(model: GroupModel) -> SymmetricMeasure:
    """The family's standard symmetric measure."""
    if isinstance(model, FreeAbelian):
        return SymmetricMeasure.uniform(model, list(model.generators().values()))
    if isinstance(model, FiniteCyclic):
        return SymmetricMeasure.uniform(model, [(1 % model.m,)])
    if isinstance(model, VirtuallyCyclic):
        if model.order == 2 and model.twist:
            return SymmetricMeasure.uniform(model, [(0, 1), (1, 1)])
        return SymmetricMeasure.uniform(model, [(1, 0), (0, 1 % model.order)])
    if isinstance(model, Lamplighter):
        return SymmetricMeasure.uniform(model, [(1, ()), (0, (0,))])
    raise UnsupportedFeatureError(f"no standard measure for {model.family}")


def is_standard_lamplighter_measure(measure: SymmetricMeasure) -> bool:
    model = measure.model
    if not isinstance(model, Lamplighter):
        return False
    want = {(1, ()), (-1, ()), (0, (0,))}
    return {g for g, _ in measure.support} == want


# -- transversal and the kappa/zeta/tau decomposition ---------------------------


@dataclass(frozen=True)
class Transversal:
    """Finite right-transversal T for the decomposition g = kappa zeta tau.

    zeta lives in the distinguished infinite cyclic subgroup, tau in T, and
    kappa in the kernel K of the quotient onto the virtually cyclic image
    (trivial for the virtually cyclic families themselves).
    """

    model: GroupModel
    elements: Tuple[Element, ...]

    @classmethod
    def standard(cls, model: GroupModel) -> "Transversal":
        if isinstance(model, VirtuallyCyclic):
            return cls(model, tuple((0, j) for j in range(model.order)))
        if isinstance(model, Lamplighter):
            return cls(model, (model.identity(),))
        if isinstance(model, FreeAbelian) and model.d == 1:
            return cls(model, (model.identity(),))
        raise UnsupportedFeatureError(
            f"no distinguished cyclic subgroup for {model.family}"
        )

    def zeta_element(self, n: int) -> Element:
        m = self.model
        if isinstance(m, VirtuallyCyclic):
            return (n, 0)
        if isinstance(m, Lamplighter):
            return (n, ())
        if isinstance(m, FreeAbelian):
            return (n,)
        raise UnsupportedFeatureError(m.family)

    def decompose(self, g: Element) -> Tuple[Element, int, Element]:
        """Returns (kappa, zeta, tau) with kappa * zeta * tau == g exactly."""
        m = self.model
        if isinstance(m, VirtuallyCyclic):
            n, j = m.check(g)
            return (m.identity(), n, (0, j))
        if isinstance(m, Lamplighter):
            pos, lamps = m.check(g)
            return ((0, lamps), pos, m.identity())
        if isinstance(m, FreeAbelian) and m.d == 1:
            return (m.identity(), m.check(g)[0], m.identity())
        raise UnsupportedFeatureError(m.family)

    def recompose(self, kappa: Element, n: int, tau: Element) -> Element:
        m = self.model
        return m.mul(m.mul(kappa, self.zeta_element(n)), tau)

    def zeta(self, g: Element) -> int:
        return self.decompose(g)[1]

    def tau(self, g: Element) -> Element:
        return self.decompose(g)[2]

    def kappa(self, g: Element) -> Element:
        return self.decompose(g)[0]


def decompose_knt(model: GroupModel, g: Element, tr: Optional[Transversal] = None):
    tr = tr or Transversal.standard(model)
    kappa, n, tau = tr.decompose(g)
    if tr.recompose(kappa, n, tau) != g:
        raise StructuralError("decomposition failed to recompose")
    return kappa, n, tau


def conj_shift(model: GroupModel, k: Element, n: int) -> Element:
    """phi^n(k) = n k n^{-1} for k in the kernel of the cyclic quotient."""
    tr = Transversal.standard(model)
    kk, z, tt = tr.decompose(k)
    if z != 0 or tt != model.identity():
        raise PreconditionError("conj_shift argument must lie in the kernel subgroup")
    zn = tr.zeta_element(n)
    return model.mul(model.mul(zn, k), model.inv(zn))


# -- U_n subgroups of the lamplighter kernel ------------------------------------


def kernel_window(model: Lamplighter, measure: SymmetricMeasure) -> int:
    """Smallest lamp offset among the kappa(ts) of the generating data.

    For the standard generators this is 0 and membership in U_n is exactly
    "all lamps at positions >= n"; for other generator sets U_n is reported
    through the same shifted-window rule.
    """
    tr = Transversal.standard(model)
    offsets = [0]
    for t in tr.elements:
        for s, _w in measure.support:
            kappa, _, _ = tr.decompose(model.mul(t, s))
            offsets.extend(kappa[1])
    return min(offsets)


def un_membership(
    model: GroupModel,
    k: Element,
    n: int,
    measure: Optional[SymmetricMeasure] = None,
) -> bool:
    """Support-window test for membership of a kernel element in U_n."""
    if not isinstance(model, Lamplighter):
        raise UnsupportedFeatureError("U_n subgroups are lamplighter-specific")
    pos, lamps = model.check(k)
    if pos != 0:
        raise PreconditionError("U_n membership is asked of kernel elements")
    w_min = 0
    if measure is not None and not is_standard_lamplighter_measure(measure):
        w_min = kernel_window(model, measure)
    return all(p >= n + w_min for p in lamps)


# -- pushforward measures --------------------------------------------------------


def pushforward_measure(
    model: GroupModel, hom: str, measure: SymmetricMeasure
) -> Tuple[GroupModel, SymmetricMeasure]:
    """Pushforward along a built-in quotient; weights of preimages are summed.

    Supported descriptors: "identity"; "mod:<m>" on Z (free abelian d=1);
    "base" for lamplighter -> Z; "proj:<i>" for Z^d -> Z.
    """
    if hom == "identity":
        return model, measure

    def push(target: GroupModel, image) -> SymmetricMeasure:
        acc: Dict[Element, Fraction] = {}
        for g, w in measure.support:
            h = image(g)
            acc[h] = acc.get(h, Fraction(0)) + w
        items = sorted(acc.items(), key=lambda kv: target.key(kv[0]))
        return SymmetricMeasure.make(target, items, allow_identity=True)

    if hom.startswith("mod:") and isinstance(model, FreeAbelian) and model.d == 1:
        m = int(hom.split(":", 1)[1])
        target = FiniteCyclic(m)
        return target, push(target, lambda g: (g[0] % m,))
    if hom == "base" and isinstance(model, Lamplighter):
        target = FreeAbelian(1)
        return target, push(target, lambda g: (g[0],))
    if hom.startswith("proj:") and isinstance(model, FreeAbelian):
        i = int(hom.split(":", 1)[1])
        if not 0 <= i < model.d:
            raise UnsupportedFeatureError(f"coordinate {i} out of range")
        target = FreeAbelian(1)
        return target, push(target, lambda g: (g[i],))
    raise UnsupportedFeatureError(f"unsupported homomorphism {hom!r} for {model.family}")


# -- Cayley balls -----------------------------------------------------------------


def cayley_ball(
    model: GroupModel, measure: SymmetricMeasure, n: int
) -> Tuple[WeightedGraph, List[Element]]:
    """Ball of radius n in the weighted Cayley graph (G, mu).

    Vertices are normal forms at word distance <= n from the identity, edge
    weights are mu(x^{-1} y), the base is the identity, and each vertex is
    tagged with its word distance.  The identity mass of a lazy measure is
    carried as the graph's hold probability rather than a loop.
    """
    if n < 0:
        raise PreconditionError("radius must be >= 0")
    e = model.identity()
    dist: Dict[Element, int] = {e: 0}
    order: List[Element] = [e]
    q = deque([e])
    moving = measure.moving_support()
    while q:
        g = q.popleft()
        if dist[g] == n:
            continue
        for s, _w in moving:
            h = model.mul(g, s)
            if h not in dist:
                dist[h] = dist[g] + 1
                order.append(h)
                q.append(h)
    order.sort(key=model.key)
    ids = [model.name(g) for g in order]
    idx = {g: i for i, g in enumerate(order)}
    edges = []
    for g in order:
        for s, w in moving:
            h = model.mul(g, s)
            j = idx.get(h)
            if j is not None and idx[g] < j:
                edges.append((model.name(g), model.name(h), w))
    graph = WeightedGraph(
        ids,
        edges,
        model.name(e),
        radius=n,
        hold=measure.hold,
        vertex_transitive=True,
    )
    return graph, order


def word_ball_oracle(model: GroupModel, gens: Sequence[Element], n: int) -> Set[Element]:
    """Brute-force enumeration of all products of at most n generators."""
    out: Set[Element] = {model.identity()}
    layer: Set[Element] = {model.identity()}
    for _ in range(n):
        nxt: Set[Element] = set()
        for g in layer:
            for s in gens:
                nxt.add(model.mul(g, s))
        layer = nxt - out
        out |= nxt
    return out


@dataclass
class CayleyFamily(GraphFamily):
    """Balls of a weighted Cayley graph as a graph family."""

    model: GroupModel
    measure: SymmetricMeasure
    name: str = "cayley"
    vertex_transitive: bool = True

    def ball(self, m: int) -> WeightedGraph:
        return cayley_ball(self.model, self.measure, m)[0]

    def ball_with_elements(self, m: int) -> Tuple[WeightedGraph, List[Element]]:
        return cayley_ball(self.model, self.measure, m)


# -- boundary constant (virtually abelian) -----------------------------------------


def boundary_constant(
    model: GroupModel, measure: SymmetricMeasure, tr: Optional[Transversal] = None
) -> int:
    """max over s in supp mu and t in T of |zeta(ts)|, the one-step drift
    bound of the cyclic coordinate."""
    tr = tr or Transversal.standard(model)
    best = 0
    for t in tr.elements:
        for s, _w in measure.support:
            _, z, _ = tr.decompose(model.mul(t, s))
            best = max(best, abs(z))
    return best


# -- JSON ingestion ------------------------------------------------------------------


def load_group(doc) -> Tuple[GroupModel, SymmetricMeasure]:
    """Build (model, measure) from {"family", "params", "measure"} JSON.

    Measure entries are [word, "p/q"] pairs with dot-separated generator
    words; an omitted measure means the family standard.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise GraphParseError(f"invalid group JSON: {exc}") from exc
    family = doc.get("family")
    params = doc.get("params", {})
    if family == "free_abelian":
        model: GroupModel = FreeAbelian(int(params.get("d", 1)))
    elif family == "finite_cyclic":
        model = FiniteCyclic(int(params["m"]))
    elif family == "virtually_cyclic":
        model = VirtuallyCyclic(
            order=int(params.get("order", 2)), twist=bool(params.get("twist", True))
        )
    elif family == "lamplighter":
        model = Lamplighter()
    else:
        raise GraphParseError(f"unknown family {family!r}")
    if "measure" not in doc:
        return model, standard_measure(model)
    entries = []
    for k, item in enumerate(doc["measure"]):
        if len(item) != 2:
            raise GraphParseError(f"measure entry {k} malformed: {item!r}")
        word, w = item
        entries.append((model.word(word), parse_rat(w, where=f" in measure entry {k}")))
    allow = bool(doc.get("lazy", False))
    return model, SymmetricMeasure.make(model, entries, allow_identity=allow)
