"""Rewriting engine: reduce a diagram to a combination of tree diagrams.

Reduction is an induction on edge count.  Expanding at a leg adjacent to an
internal vertex replaces a term by the two STU resolutions; if the expanded
piece stays connected the engine recurses on both resolutions, and if it
splits into two parts the engine reduces the first resolution while tracking
the slot blocks descended from the two fresh legs, then converts each
terminal forest minus its block-swapped twin into a telescoping sum of
connected join terms (one per adjacent transposition, each joining the
transposed leg pair with a new internal vertex).  The swapped resolution is
reduced independently; its terms typically cancel the twins.

Every emitted step lands in the certificate; slide steps also append ledger
entries with the total degrees of the components owning the two blocks.
Join terms glue two trees into a tree, so the recursion terminates: edge
count drops by one on every expansion.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .canonical import canonicalize, diagram_from_digest
from .certificate import Certificate, Step
from .diagram import CIRCLE, build_diagram
from .errors import (
    LeglessComponent,
    NoEligibleLeg,
    NotSlidePair,
    StepBudgetExhausted,
    TreespanError,
)
from .linear import LinearCombination
from .stu import leg_resolutions

STRATEGIES = ("cycle-first", "nearest-cycle", "first-leg")
FALLBACKS = ("error", "linear-solve")


@dataclass(frozen=True)
class ReductionOptions:
    strategy: str = "cycle-first"
    max_steps: int = 10000
    fallback: str = "linear-solve"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError("unknown strategy %r" % self.strategy)
        if self.fallback not in FALLBACKS:
            raise ValueError("unknown fallback %r" % self.fallback)
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class ExpansionOutcome:
    """The two resolutions at a leg, with the connectivity classification."""

    t_term: object
    u_term: object
    slot: tuple                  # (component index, position) of the removed leg
    connected: bool
    part_degrees: tuple          # () when connected, else (deg1, deg2)

    @property
    def split(self):
        return not self.connected


@dataclass(frozen=True)
class LedgerEntry:
    kind: str                    # "slide" | "zip-absorption"
    n1: int
    n2: int

    @property
    def bound(self):
        return self.n1 + self.n2


# -- leg selection -----------------------------------------------------------


def _internal_adjacency(d):
    adj = {k: [] for k in range(d.vertex_count)}
    loops = set()
    edges = []
    for a, b in d.internal_edges():
        if a[1] == b[1]:
            loops.add(a[1])
        else:
            adj[a[1]].append(b[1])
            adj[b[1]].append(a[1])
            edges.append((a[1], b[1]))
    return adj, edges, loops


def _on_cycle_vertices(d):
    """Vertices lying on an internal cycle (loops count as cycles)."""
    adj, edges, loops = _internal_adjacency(d)
    on = set(loops)
    for idx, (a, b) in enumerate(edges):
        # non-bridge test: are a, b still connected with this edge removed?
        seen = {a}
        stack = [a]
        while stack:
            x = stack.pop()
            if x == b:
                on.add(a)
                on.add(b)
                break
            for jdx, (p, q) in enumerate(edges):
                if jdx == idx:
                    continue
                if p == x and q not in seen:
                    seen.add(q)
                    stack.append(q)
                elif q == x and p not in seen:
                    seen.add(p)
                    stack.append(p)
    return on


def _distance_to_cycle(d, start, on_cycle):
    if start in on_cycle:
        return 0
    adj, _, _ = _internal_adjacency(d)
    seen = {start}
    frontier = [start]
    dist = 0
    while frontier:
        dist += 1
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if y in seen:
                    continue
                if y in on_cycle:
                    return dist
                seen.add(y)
                nxt.append(y)
        frontier = nxt
    return None


def choose_leg(d, strategy="cycle-first", legs=None):
    """Pick the leg to expand at, deterministically.

    Candidates are legs whose edge ends at an internal vertex, in slot
    order, optionally restricted to the given leg tokens.  cycle-first
    prefers a leg whose vertex lies on a cycle and otherwise falls back to
    nearest-cycle; nearest-cycle minimises the distance from the leg's
    vertex to a cycle; first-leg takes slot order as-is.  All ties break by
    slot order.
    """
    if strategy not in STRATEGIES:
        raise ValueError("unknown strategy %r" % strategy)
    restrict = set(legs) if legs is not None else None
    candidates = []
    for ci, ls in enumerate(d.legs):
        for pos, tok in enumerate(ls):
            if restrict is not None and tok not in restrict:
                continue
            ref = d.partner[("s", ci, pos)]
            if ref[0] == "v":
                candidates.append((ci, pos, tok, ref[1]))
    if not candidates:
        raise NoEligibleLeg("no leg is adjacent to an internal vertex")
    if strategy == "first-leg":
        return candidates[0][2]
    on_cycle = _on_cycle_vertices(d)
    if strategy == "cycle-first":
        for ci, pos, tok, k in candidates:
            if k in on_cycle:
                return tok
        # fall back to the nearest-cycle rule
    ranked = []
    for ci, pos, tok, k in candidates:
        dist = _distance_to_cycle(d, k, on_cycle)
        ranked.append((dist if dist is not None else float("inf"), ci, pos, tok))
    ranked.sort(key=lambda r: (r[0], r[1], r[2]))
    return ranked[0][3]


# -- expansion ---------------------------------------------------------------


def expand_at_leg(d, leg_token):
    """Expand at a leg and classify whether the affected piece splits."""
    t_term, u_term, slot = leg_resolutions(d, leg_token)
    assert t_term.edge_count == d.edge_count - 1
    assert u_term.edge_count == d.edge_count - 1
    assert t_term.degree == d.degree and u_term.degree == d.degree
    ci, pos = slot
    comp_of = {}
    for idx, (leg_refs, verts) in enumerate(t_term.component_partition()):
        for ref in leg_refs:
            comp_of[(ref[1], ref[2])] = idx
    comps = t_term.component_partition()
    ia, ib = comp_of[(ci, pos)], comp_of[(ci, pos + 1)]
    if ia == ib:
        return ExpansionOutcome(t_term, u_term, slot, True, ())
    def comp_degree(idx):
        leg_refs, verts = comps[idx]
        return (len(leg_refs) + len(verts)) // 2
    return ExpansionOutcome(t_term, u_term, slot, False,
                            (comp_degree(ia), comp_degree(ib)))


# -- slot-block machinery ------------------------------------------------------


def _permute_component_legs(d, ci, new_order):
    """Rebuild ``d`` with component ci's legs re-slotted by ``new_order``.

    ``new_order[j]`` is the old position whose leg moves to position j.
    """
    legs = {}
    for cj, comp in enumerate(d.skeleton.components):
        ls = d.legs[cj]
        if cj == ci:
            ls = tuple(d.legs[ci][old] for old in new_order)
        legs[comp.id] = ls
    pairs = []
    seen = set()
    for ref, other in d.partner.items():
        key = frozenset((ref, other))
        if key not in seen:
            seen.add(key)
            pairs.append((d.ref_token(ref), d.ref_token(other)))
    return build_diagram(d.skeleton, legs, list(zip(d.vertex_ids, d.triples)), pairs)


def _region_order(d, ci, a_set, b_set):
    """Ordered position lists (A first, then B) of a cyclically contiguous region."""
    size = len(d.legs[ci])
    region = set(a_set) | set(b_set)
    if d.skeleton.components[ci].kind == CIRCLE and len(region) < size:
        starts = [p for p in region if (p - 1) % size not in region]
    elif len(region) == size:
        starts = [p for p in b_set if (p + 1) % size in a_set]
        starts = [(s + 1) % size for s in starts]
    else:
        starts = [min(region)]
    for start in sorted(starts):
        ordered = []
        p = start
        for _ in range(len(region)):
            ordered.append(p)
            p = (p + 1) % size
        if set(ordered) == region:
            a_list = [p for p in ordered if p in a_set]
            b_list = [p for p in ordered if p in b_set]
            if ordered == a_list + b_list:
                return a_list, b_list
    raise NotSlidePair("blocks are not adjacent contiguous slot ranges")


def block_swap(d, ci, a_set, b_set):
    """Move block B in front of block A; returns the re-slotted diagram."""
    a_list, b_list = _region_order(d, ci, a_set, b_set)
    region = a_list + b_list
    new_order = list(range(len(d.legs[ci])))
    source = b_list + a_list
    for slot, old in zip(region, source):
        new_order[slot] = old
    return _permute_component_legs(d, ci, new_order)


def _rotate_component(d, ci, offset):
    """Rotate a circle component's slots so old position ``offset`` becomes 0."""
    size = len(d.legs[ci])
    if offset % size == 0:
        return d, {p: p for p in range(size)}
    order = [(offset + j) % size for j in range(size)]
    rotated = _permute_component_legs(d, ci, order)
    return rotated, {old: (old - offset) % size for old in range(size)}


def _join_at(d, ci, pos):
    """Join the legs at positions pos, pos+1 with a new internal vertex.

    The new vertex's cyclic order is (edge to the new leg, edge to the first
    leg's partner, edge to the second leg's partner); the new leg takes the
    first slot and the pair's two slots collapse into one.
    """
    x = d.legs[ci][pos]
    y = d.legs[ci][pos + 1]
    newleg = "@j"
    w = ("@w0", "@w1", "@w2")
    legs = {}
    for cj, comp in enumerate(d.skeleton.components):
        ls = list(d.legs[cj])
        if cj == ci:
            ls[pos:pos + 2] = [newleg]
        legs[comp.id] = tuple(ls)
    vertices = list(zip(d.vertex_ids, d.triples)) + [("@w", w)]
    pairs = [(newleg, w[0])]
    seen = set()
    for ref, other in d.partner.items():
        key = frozenset((ref, other))
        if key in seen:
            continue
        seen.add(key)
        a, b = d.ref_token(ref), d.ref_token(other)
        if x in (a, b) and y in (a, b):
            pairs.append((w[1], w[2]))     # the pair was a chord between them
        elif x in (a, b):
            pairs.append((w[1], b if a == x else a))
        elif y in (a, b):
            pairs.append((w[2], b if a == y else a))
        else:
            pairs.append((a, b))
    return build_diagram(d.skeleton, legs, vertices, pairs)


def slide_join_terms(d, ci, a_set, b_set):
    """Join diagrams telescoping d minus its block-swapped twin.

    Walks the adjacent-transposition path from the swapped arrangement back
    to ``d``: each step moves one A-block leg left past one B-block leg and
    contributes the diagram joining the transposed pair.  Returns a list of
    (join diagram, position map) pairs; the position map sends every slot
    position of ``d`` on component ci to its slot in that join term.
    """
    a_list, b_list = _region_order(d, ci, a_set, b_set)
    size = len(d.legs[ci])
    base_map = {p: p for p in range(size)}
    if a_list and (a_list + b_list)[-1] < a_list[0]:
        # wrapped region on a circle: rotate it to the front first
        d, base_map = _rotate_component(d, ci, a_list[0])
        a_list = [base_map[p] for p in a_list]
        b_list = [base_map[p] for p in b_list]
    a, b = len(a_list), len(b_list)
    region = a_list + b_list
    arr = list(range(a, a + b)) + list(range(a))   # twin order: B then A
    out = []
    for i in range(a):
        pos = b + i
        for _ in range(b):
            arr[pos - 1], arr[pos] = arr[pos], arr[pos - 1]
            pos -= 1
            # region slot region[j] holds the leg from old position region[arr[j]]
            order = list(range(size))
            for j, idx in enumerate(arr):
                order[region[j]] = region[idx]
            arranged = _permute_component_legs(d, ci, order)
            join_slot = region[pos]
            joined = _join_at(arranged, ci, join_slot)
            placed = {}
            for j, idx in enumerate(arr):
                placed[region[idx]] = region[j]
            for q in range(size):
                if q not in placed:
                    placed[q] = q

            def collapse(p):
                if p <= join_slot:
                    return p
                return p - 1

            pos_map = {old: collapse(placed[base_map[old]]) for old in base_map}
            out.append((joined, pos_map))
    return out


@dataclass(frozen=True)
class InterleaveRecord:
    """Slot blocks of a split: block A's positions, then block B's, one component."""

    component_index: int
    block_a: frozenset
    block_b: frozenset


def slide_expansion(t_term, u_term, interleave):
    """Expand T - U as the signed sum of join terms along the slide path.

    Raises NotSlidePair unless ``u_term`` is ``t_term`` with block B moved in
    front of block A.  Identical terms (an empty block) give the empty
    combination.  Signs are folded through canonicalisation.
    """
    ci = interleave.component_index
    a_set, b_set = interleave.block_a, interleave.block_b
    if not a_set or not b_set:
        if canonicalize(t_term)[0].digest != canonicalize(u_term)[0].digest:
            raise NotSlidePair("empty block but the two terms differ")
        return LinearCombination()
    twin = block_swap(t_term, ci, a_set, b_set)
    if canonicalize(twin)[0].digest != canonicalize(u_term)[0].digest:
        raise NotSlidePair("u_term is not t_term with the blocks exchanged")
    out = LinearCombination()
    for joined, _ in slide_join_terms(t_term, ci, a_set, b_set):
        cd, _ = canonicalize(joined)
        if cd.sign:
            out = out + LinearCombination({cd.digest: Fraction(1)})
    return out


class _BudgetHit(Exception):
    pass


class _Reducer:
    """One reduction run: accumulates certificate steps and ledger entries."""

    def __init__(self, opts):
        self.opts = opts
        self.steps = []
        self.ledger = []
        self.work = 0

    def _emit(self, kind, parent, at, children):
        self.steps.append(Step(index=len(self.steps) + 1, kind=kind,
                               parent=parent, at=at, children=tuple(children)))

    def _tick(self):
        self.work += 1
        if self.work > self.opts.max_steps:
            raise _BudgetHit()

    def _shift_ranges(self, ranges, ci, pos):
        """Slot ``pos`` of component ci is replaced by two slots pos, pos+1."""
        out = {}
        for rid, (rci, posset) in ranges.items():
            if rci != ci:
                out[rid] = (rci, posset)
                continue
            acc = set()
            for p in posset:
                if p < pos:
                    acc.add(p)
                elif p == pos:
                    acc.add(pos)
                    acc.add(pos + 1)
                else:
                    acc.add(p + 1)
            out[rid] = (rci, frozenset(acc))
        return out

    def _witness_remap(self, ranges, pre, witness):
        maps = witness.slot_map(pre)
        return {rid: (rci, frozenset(maps[rci][p] for p in posset))
                for rid, (rci, posset) in ranges.items()}

    def _map_ranges(self, ranges, pos_map, ci):
        return {rid: (rci, frozenset(pos_map[p] for p in posset) if rci == ci else posset)
                for rid, (rci, posset) in ranges.items()}

    def reduce(self, digest, ranges, nested):
        """Contributions (digest, coeff, ranges) with input == sum of them."""
        rep = diagram_from_digest(digest)
        if rep.is_forest():
            return [(digest, Fraction(1), ranges)]
        comp_legs = None
        for leg_refs, verts in rep.component_partition():
            if verts and rep.component_betti(verts) > 0:
                comp_legs = [rep.ref_token(r) for r in leg_refs]
                break
        leg = choose_leg(rep, self.opts.strategy, legs=comp_legs)
        outcome = expand_at_leg(rep, leg)
        ci, pos = outcome.slot
        self._tick()
        cT, wT = canonicalize(outcome.t_term)
        cU, wU = canonicalize(outcome.u_term)
        self._emit("STU-EXPAND", digest, "s%dp%d" % (ci, pos),
                   [(1, cT.digest), (-1, cU.digest)])
        for child in (cT, cU):
            if child.sign == 0:
                self._emit("CANONICAL-ZERO", child.digest, "-", ())
        shifted = self._shift_ranges(ranges, ci, pos)
        out = []
        if outcome.connected:
            if cT.sign:
                rangesT = self._witness_remap(shifted, outcome.t_term, wT)
                out.extend(self.reduce(cT.digest, rangesT, nested))
            if cU.sign:
                rangesU = self._witness_remap(shifted, outcome.u_term, wU)
                out.extend((dg, -c, rg) for dg, c, rg in self.reduce(cU.digest, rangesU, nested))
            return out
        if cT.sign:
            blocks = dict(shifted)
            blocks["@A"] = (ci, frozenset((pos,)))
            blocks["@B"] = (ci, frozenset((pos + 1,)))
            rangesT = self._witness_remap(blocks, outcome.t_term, wT)
            for fdg, fc, frg in self.reduce(cT.digest, rangesT, True):
                frg = dict(frg)
                a_ci, a_set = frg.pop("@A")
                b_ci, b_set = frg.pop("@B")
                out.extend((dg, fc * c, rg)
                           for dg, c, rg in self._slide(fdg, a_ci, a_set, b_set, frg, nested))
        if cU.sign:
            rangesU = self._witness_remap(shifted, outcome.u_term, wU)
            out.extend((dg, -c, rg) for dg, c, rg in self.reduce(cU.digest, rangesU, nested))
        return out

    def _slide(self, fdg, ci, a_set, b_set, other_ranges, nested):
        """Rewrite a terminal forest as join terms plus its swapped twin."""
        rep = diagram_from_digest(fdg)
        self._tick()
        twin = block_swap(rep, ci, a_set, b_set)
        ctw, wtw = canonicalize(twin)
        if ctw.sign == 0:
            raise TreespanError("block swap of a nonzero forest became zero")
        comps = rep.component_partition()
        n1 = n2 = 0
        for leg_refs, verts in comps:
            positions = {(r[1], r[2]) for r in leg_refs}
            deg = (len(leg_refs) + len(verts)) // 2
            if any((ci, p) in positions for p in a_set):
                n1 += deg
            if any((ci, p) in positions for p in b_set):
                n2 += deg
        self.ledger.append(LedgerEntry(kind="zip-absorption" if nested else "slide",
                                       n1=n1, n2=n2))
        a_list, _ = _region_order(rep, ci, a_set, b_set)
        children = []
        contribs = []
        zero_digests = []
        for joined, pos_map in slide_join_terms(rep, ci, a_set, b_set):
            cj, wj = canonicalize(joined)
            children.append((1, cj.digest))
            if cj.sign:
                jranges = self._map_ranges(other_ranges, pos_map, ci)
                jranges = self._witness_remap(jranges, joined, wj)
                contribs.append((cj.digest, Fraction(1), jranges))
            else:
                zero_digests.append(cj.digest)
        children.append((1, ctw.digest))
        self._emit("SLIDE-JOIN", fdg,
                   "b%dp%da%db%d" % (ci, a_list[0], len(a_set), len(b_set)), children)
        for z in zero_digests:
            self._emit("CANONICAL-ZERO", z, "-", ())
        twin_ranges = self._witness_remap(other_ranges, twin, wtw)
        contribs.append((ctw.digest, Fraction(1), twin_ranges))
        return contribs


def _validate_grounded(d):
    for leg_refs, verts in d.component_partition():
        if verts and not leg_refs:
            raise LeglessComponent(
                "internal piece %s has no leg to expand at"
                % ",".join(d.vertex_ids[k] for k in verts),
                token=d.vertex_ids[verts[0]])


def _reduce_full(d, opts):
    """Engine entry: returns (combination, certificate, ledger entries)."""
    _validate_grounded(d)
    cd, _ = canonicalize(d)
    reducer = _Reducer(opts)
    if cd.sign == 0:
        reducer._emit("CANONICAL-ZERO", cd.digest, "-", ())
        result = LinearCombination()
        cert = Certificate(input_digest=cd.digest, steps=tuple(reducer.steps), result=result)
        return result, cert, tuple(reducer.ledger)
    try:
        contributions = reducer.reduce(cd.digest, {}, False)
    except _BudgetHit:
        if opts.fallback == "error":
            raise StepBudgetExhausted(
                "reduction exceeded the %d-step budget" % opts.max_steps)
        return _oracle_solve(d, cd)
    result = LinearCombination((dg, c) for dg, c, _ in contributions)
    cert = Certificate(input_digest=cd.digest, steps=tuple(reducer.steps), result=result)
    return result, cert, tuple(reducer.ledger)


def _oracle_solve(d, cd):
    from .enumeration import DEFAULT_DEGREE_BUDGET
    from .stu import express_in_tree_basis, generate_relations

    sys = generate_relations(d.skeleton, d.degree, budget=DEFAULT_DEGREE_BUDGET)
    expr = express_in_tree_basis(d, sys)
    if expr is None:
        raise TreespanError("budget exhausted and the oracle found no tree expression")
    children = tuple((1 if c > 0 else -1, dg) for dg, c in expr)
    step = Step(index=1, kind="ORACLE-SOLVED", parent=cd.digest, at="-", children=children)
    cert = Certificate(input_digest=cd.digest, steps=(step,), result=expr)
    return expr, cert, ()


def reduce_to_trees(d, opts=None):
    """Reduce a diagram to an equal combination of forest diagrams.

    Returns (combination, certificate).  Every internal piece of the input
    must own a leg; inputs whose class is antisymmetry-zero reduce to the
    empty combination.
    """
    opts = opts or ReductionOptions()
    lc, cert, _ = _reduce_full(d, opts)
    return lc, cert


def reduce_all(inputs, opts=None):
    """Element-wise reduce_to_trees with per-element failure isolation.

    Returns a list of (ok, value) pairs: (True, (combination, certificate))
    or (False, exception).
    """
    opts = opts or ReductionOptions()
    out = []
    for d in inputs:
        try:
            out.append((True, reduce_to_trees(d, opts)))
        except TreespanError as exc:
            out.append((False, exc))
    return out
