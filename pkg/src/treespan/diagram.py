"""Skeletons and unitrivalent graph diagrams.

A skeleton is an ordered list of oriented 1-manifold components (intervals
and circles).  A diagram on a skeleton consists of legs (univalent ends
attached at ordered slots along the skeleton components), internal trivalent
vertices carrying a cyclic order on their three half-edges, and a perfect
matching of all half-edges into edges.

Interval slot order is linear and anchored (endpoints are fixed); circle
slot order is rotational.  All values are immutable after validation and
every operation here is pure, so concurrent reads are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DanglingHalfEdge,
    DuplicateSlot,
    EmptySlot,
    NonTrivalentVertex,
    UnmatchedHalfEdge,
    ValidationError,
)

INTERVAL = "interval"
CIRCLE = "circle"


@dataclass(frozen=True)
class SkeletonComponent:
    id: str
    kind: str

    def __post_init__(self):
        if self.kind not in (INTERVAL, CIRCLE):
            raise ValidationError("unknown component kind %r" % self.kind, token=self.id)


@dataclass(frozen=True)
class Skeleton:
    """Ordered, oriented 1-manifold components housing the leg slots."""

    components: tuple

    def __post_init__(self):
        seen = set()
        for comp in self.components:
            if comp.id in seen:
                raise ValidationError("duplicate component id %r" % comp.id, token=comp.id)
            seen.add(comp.id)

    @property
    def ids(self):
        return tuple(c.id for c in self.components)

    def index_of(self, cid):
        for i, comp in enumerate(self.components):
            if comp.id == cid:
                return i
        raise ValidationError("unknown skeleton component %r" % cid, token=cid)

    def signature(self):
        """Stable identity string: component ids and kinds in order."""
        return ";".join("%s:%s" % (c.id, "I" if c.kind == INTERVAL else "O") for c in self.components)


def skeleton(*pairs):
    """Convenience constructor: skeleton(("c1", "interval"), ...)."""
    return Skeleton(tuple(SkeletonComponent(cid, kind) for cid, kind in pairs))


# Half-edge references.  A leg half-edge is identified by its slot
# ("s", component_index, position); an internal half-edge by its vertex
# index and position in the cyclic triple ("v", vertex_index, position).

def slot_ref(ci, pos):
    return ("s", ci, pos)


def vertex_ref(k, i):
    return ("v", k, i)


@dataclass(frozen=True)
class Diagram:
    """A validated unitrivalent graph diagram on a skeleton.

    ``legs[ci]`` is the ordered tuple of leg tokens on component ``ci``;
    ``vertex_ids`` / ``triples`` give internal vertices in input order with
    their cyclic half-edge triples; ``partner`` maps every half-edge ref to
    the ref it is matched with.
    """

    skeleton: Skeleton
    legs: tuple                 # tuple per component of leg tokens
    vertex_ids: tuple           # vertex tokens in input order
    triples: tuple              # per vertex: (h1, h2, h3) half-edge tokens
    partner: dict = field(compare=False)   # ref -> ref
    tokens: dict = field(compare=False)    # half-edge token -> ref

    # -- derived counts ------------------------------------------------

    @property
    def leg_count(self):
        return sum(len(ls) for ls in self.legs)

    @property
    def vertex_count(self):
        return len(self.vertex_ids)

    @property
    def degree(self):
        return (self.leg_count + self.vertex_count) // 2

    @property
    def edge_count(self):
        return (self.leg_count + 3 * self.vertex_count) // 2

    def ref_token(self, ref):
        """Token naming a ref: leg token for slots, half-edge token for vertices."""
        if ref[0] == "s":
            return self.legs[ref[1]][ref[2]]
        return self.triples[ref[1]][ref[2]]

    def slot_of_leg(self, token):
        for ci, ls in enumerate(self.legs):
            for pos, t in enumerate(ls):
                if t == token:
                    return (ci, pos)
        raise ValidationError("unknown leg token %r" % token, token=token)

    # -- connectivity --------------------------------------------------

    def component_partition(self):
        """Partition legs and internal vertices by graph connectivity.

        Returns a list of (leg_refs, vertex_indices) pairs, ordered by the
        smallest slot ref (components with legs first) then smallest vertex
        index.  Chords form their own two-leg components.
        """
        parent = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        nodes = []
        for ci, ls in enumerate(self.legs):
            for pos in range(len(ls)):
                nodes.append(("L", ci, pos))
        for k in range(self.vertex_count):
            nodes.append(("V", k))
        for n in nodes:
            parent[n] = n

        def owner(ref):
            if ref[0] == "s":
                return ("L", ref[1], ref[2])
            return ("V", ref[1])

        for ref, other in self.partner.items():
            union(owner(ref), owner(other))

        groups = {}
        for n in nodes:
            groups.setdefault(find(n), []).append(n)
        comps = []
        for members in groups.values():
            legs = sorted(m[1:] for m in members if m[0] == "L")
            verts = sorted(m[1] for m in members if m[0] == "V")
            comps.append((tuple(slot_ref(ci, pos) for ci, pos in legs), tuple(verts)))
        comps.sort(key=lambda c: (c[0][0][1:] if c[0] else (len(self.legs), 0), c[1][0] if c[1] else -1))
        return comps

    def internal_edges(self):
        """Matched pairs with both ends at internal vertices, loops included."""
        seen = set()
        out = []
        for ref, other in self.partner.items():
            if ref[0] == "v" and other[0] == "v":
                key = tuple(sorted((ref, other)))
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out

    def betti(self):
        """First Betti number of the internal graph (legs removed)."""
        e_int = len(self.internal_edges())
        comps = 0
        for _, verts in self.component_partition():
            if verts:
                comps += 1
        return e_int - self.vertex_count + comps

    def component_betti(self, vertex_indices):
        """Betti number of the internal graph restricted to one component."""
        vset = set(vertex_indices)
        e_int = sum(1 for a, b in self.internal_edges() if a[1] in vset)
        return e_int - len(vset) + (1 if vset else 0)

    def is_forest(self):
        """True iff every component's internal graph is a tree (or a chord)."""
        for _, verts in self.component_partition():
            if verts and self.component_betti(verts) > 0:
                return False
        return True


def build_diagram(skel, legs, vertices, matching):
    """Validate and construct a Diagram.

    ``legs``     -- mapping component id -> ordered sequence of leg tokens.
    ``vertices`` -- mapping (or item sequence) vertex id -> half-edge triple,
                    read as a cyclic order.
    ``matching`` -- iterable of token pairs covering every half-edge once.
    """
    legs = dict(legs)
    vert_items = list(vertices.items()) if isinstance(vertices, dict) else list(vertices)

    for cid in legs:
        skel.index_of(cid)

    leg_tuples = []
    token_ref = {}
    for ci, comp in enumerate(skel.components):
        ls = tuple(legs.get(comp.id, ()))
        for pos, tok in enumerate(ls):
            if not tok:
                raise EmptySlot("empty leg slot %d on component %r" % (pos, comp.id), token=comp.id)
            if tok in token_ref:
                raise DuplicateSlot("leg token %r occupies more than one slot" % tok, token=tok)
            token_ref[tok] = slot_ref(ci, pos)
        leg_tuples.append(ls)

    vertex_ids = []
    triples = []
    for k, (vid, triple) in enumerate(vert_items):
        triple = tuple(triple)
        if len(triple) != 3 or len(set(triple)) != 3:
            raise NonTrivalentVertex("vertex %r needs three distinct half-edges" % vid, token=vid)
        for i, tok in enumerate(triple):
            if tok in token_ref:
                raise DuplicateSlot("half-edge token %r used twice" % tok, token=tok)
            token_ref[tok] = vertex_ref(k, i)
        vertex_ids.append(vid)
        triples.append(triple)

    partner = {}
    for a, b in matching:
        for tok in (a, b):
            if tok not in token_ref:
                raise DanglingHalfEdge("edge endpoint %r is not a declared half-edge" % tok, token=tok)
        ra, rb = token_ref[a], token_ref[b]
        if ra == rb:
            raise UnmatchedHalfEdge("half-edge %r matched with itself" % a, token=a)
        for tok, ref in ((a, ra), (b, rb)):
            if ref in partner:
                raise UnmatchedHalfEdge("half-edge %r matched more than once" % tok, token=tok)
        partner[ra] = rb
        partner[rb] = ra

    for tok, ref in token_ref.items():
        if ref not in partner:
            raise UnmatchedHalfEdge("half-edge %r is not matched" % tok, token=tok)

    u = sum(len(ls) for ls in leg_tuples)
    t = len(vertex_ids)
    if (u + t) % 2 != 0 or (u + t) < 2:
        raise ValidationError("diagram needs (legs + vertices)/2 to be a positive integer; got %d legs, %d vertices" % (u, t))

    return Diagram(
        skeleton=skel,
        legs=tuple(leg_tuples),
        vertex_ids=tuple(vertex_ids),
        triples=tuple(triples),
        partner=partner,
        tokens=token_ref,
    )


def degree(d):
    """Half the number of univalent plus trivalent constituents."""
    return d.degree


def betti(d):
    return d.betti()


def internal_components(d):
    """Connected pieces of the diagram, as records on the shared skeleton.

    Each record carries the leg tokens (in slot order), vertex tokens, the
    component's degree and its internal Betti number.
    """
    out = []
    for leg_refs, verts in d.component_partition():
        legs = tuple(d.ref_token(r) for r in leg_refs)
        vids = tuple(d.vertex_ids[k] for k in verts)
        deg = (len(legs) + len(vids)) // 2
        out.append({
            "legs": legs,
            "leg_slots": tuple((r[1], r[2]) for r in leg_refs),
            "vertices": vids,
            "vertex_indices": verts,
            "degree": deg,
            "betti": d.component_betti(verts),
        })
    return out
