"""Exhaustive enumeration of diagram classes on a skeleton.

Diagrams are generated by internal vertex count: for t internal vertices and
u = 2n - t legs, every degree-constrained multigraph on the slot nodes
(degree 1) and vertex nodes (degree 3, loops allowed) is produced once, then
expanded over the two cyclic orderings of each vertex triple, canonicalised
and deduplicated.  Only diagrams in which every connected piece touches the
skeleton are enumerated; a piece with no legs is not a diagram *on* the
skeleton and no relation ever reaches it.

Generation is deterministic; the resulting class lists are digest-ordered.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .canonical import CanonicalDiagram, canonicalize, diagram_from_digest
from .diagram import Skeleton, build_diagram
from .errors import DegreeTooLargeForBudget

DEFAULT_DEGREE_BUDGET = 4

FILTER_NAMES = ("connected", "trees", "nonzero", "all")


@dataclass(frozen=True)
class EnumerationSpec:
    skeleton: Skeleton
    degree: int
    filters: frozenset = frozenset()
    budget: int = DEFAULT_DEGREE_BUDGET

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        for f in self.filters:
            if f not in FILTER_NAMES:
                raise ValueError("unknown filter %r" % f)


def _multigraphs(degrees):
    """All labeled multigraphs with the given degree sequence, once each.

    Nodes are completed in index order; each node's partner multiset is
    chosen nondecreasing, with a loop consuming two degree units.
    """
    n = len(degrees)

    def fill(rem, i, edges):
        while i < n and rem[i] == 0:
            i += 1
        if i == n:
            yield tuple(edges)
            return
        yield from pick(rem, i, i, edges)

    def pick(rem, i, jmin, edges):
        if rem[i] == 0:
            yield from fill(rem, i + 1, edges)
            return
        for j in range(jmin, n):
            if j == i:
                if rem[i] >= 2:
                    rem[i] -= 2
                    edges.append((i, i))
                    yield from pick(rem, i, j, edges)
                    edges.pop()
                    rem[i] += 2
            elif rem[j] >= 1:
                rem[i] -= 1
                rem[j] -= 1
                edges.append((i, j))
                yield from pick(rem, i, j, edges)
                edges.pop()
                rem[i] += 1
                rem[j] += 1

    yield from fill(list(degrees), 0, [])


def _grounded(u, t, edges):
    """Every connected piece containing a vertex node must reach a slot node."""
    parent = list(range(u + t))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    reached = {find(s) for s in range(u)}
    return all(find(v) in reached for v in range(u, u + t))


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multigraph_key(u, t, edges):
    """Canonical key of a multigraph over vertex relabelings, slots anchored.

    Slots keep their indices; vertices are renamed in first-visit order along
    a scan that emits each node's sorted partner multiset.  When a node
    references several not-yet-named vertices the naming order is branched
    and the lexicographically smallest stream wins.  Only defined for
    grounded graphs (every vertex reachable from a slot).
    """
    adj = {i: [] for i in range(u + t)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    best = [None]

    def walk(names, order, stream, node_pos, tight):
        while node_pos < u + len(order):
            node = node_pos if node_pos < u else order[node_pos - u]
            partners = adj[node]
            fresh = []
            for p in partners:
                if p >= u and p not in names and p not in fresh:
                    fresh.append(p)
            if len(fresh) > 1:
                import itertools as _it
                for perm in _it.permutations(fresh):
                    names2 = dict(names)
                    order2 = list(order)
                    for p in perm:
                        names2[p] = (1, len(order2))
                        order2.append(p)
                    walk(names2, order2, list(stream), node_pos, tight)
                return
            if fresh:
                names = dict(names)
                order = list(order)
                names[fresh[0]] = (1, len(order))
                order.append(fresh[0])
            entry = tuple(sorted((0, p) if p < u else names[p] for p in partners))
            stream.append(entry)
            ref = best[0]
            if ref is not None:
                pos = len(stream) - 1
                if tight is None:
                    tight = tuple(stream[:pos]) == ref[0][:pos]
                if tight:
                    if entry > ref[0][pos]:
                        return
                    tight = entry == ref[0][pos]
            node_pos += 1
        key = (tuple(stream), tuple(order))
        if best[0] is None or key[0] < best[0][0]:
            best[0] = key

    walk({}, [], [], 0, None)
    if best[0] is None or len(best[0][1]) != t:
        return None
    return best[0][0]


def _candidates(skel, n):
    """Yield concrete diagrams covering every class of degree n, with repeats."""
    ncomp = len(skel.components)
    for t in range(0, 2 * n):
        u = 2 * n - t
        if u < 1:
            continue
        degrees = [1] * u + [3] * t
        for edges in _multigraphs(degrees):
            if not _grounded(u, t, edges):
                continue
            for split in _compositions(u, ncomp):
                legs = {}
                pos = 0
                for ci, comp in enumerate(skel.components):
                    legs[comp.id] = tuple("x%d" % (pos + k) for k in range(split[ci]))
                    pos += split[ci]
                # half-edge tokens per vertex, in edge-list order
                counters = [0] * t
                pair_tokens = []
                for a, b in edges:
                    pair = []
                    for node in (a, b):
                        if node < u:
                            pair.append("x%d" % node)
                        else:
                            k = node - u
                            pair.append("w%d.%d" % (k, counters[k]))
                            counters[k] += 1
                    pair_tokens.append(tuple(pair))
                base_triples = [("w%d.0" % k, "w%d.1" % k, "w%d.2" % k) for k in range(t)]
                for flips in itertools.product((False, True), repeat=t):
                    vertices = []
                    for k in range(t):
                        a, b, c = base_triples[k]
                        vertices.append(("w%d" % k, (a, c, b) if flips[k] else (a, b, c)))
                    yield build_diagram(skel, legs, vertices, pair_tokens)


def enumerate_classes(skel, n, budget=DEFAULT_DEGREE_BUDGET, skip_loops=False):
    """Canonical classes of degree n as a dict digest -> CanonicalDiagram."""
    if n > budget:
        raise DegreeTooLargeForBudget(
            "degree %d exceeds the enumeration budget %d" % (n, budget))
    out = {}
    for d in _candidates(skel, n):
        if skip_loops and any(ref[0] == "v" and other[0] == "v" and ref[1] == other[1]
                              for ref, other in d.partner.items()):
            continue
        cd, _ = canonicalize(d)
        if cd.digest not in out:
            out[cd.digest] = cd
    return out


def enumerate_diagrams(spec):
    """Complete, duplicate-free, digest-ordered class list matching the filters."""
    filters = set(spec.filters) - {"all"}
    classes = enumerate_classes(spec.skeleton, spec.degree, budget=spec.budget,
                                skip_loops=("nonzero" in filters))
    out = []
    for digest in sorted(classes):
        cd = classes[digest]
        if "nonzero" in filters and cd.sign == 0:
            continue
        if filters - {"nonzero"}:
            rep = diagram_from_digest(digest)
            if "connected" in filters and len(rep.component_partition()) != 1:
                continue
            if "trees" in filters and not rep.is_forest():
                continue
        out.append(cd)
    return out


def dimension_report(skel, n, budget=DEFAULT_DEGREE_BUDGET):
    """Class counts and exact ranks for the degree-n relation system.

    Ranks are computed twice (sparse rational and dense fraction-free
    elimination); both are reported so callers can assert agreement.
    """
    from .linear import dense_rank, sparse_rank
    from .stu import express_in_tree_basis, generate_relations

    sys = generate_relations(skel, n, budget=budget)
    rows = [dict(r.terms) for r in sys.rows]
    total = len(sys.basis)
    r_sparse = sparse_rank(rows, sys.basis)
    r_dense = dense_rank(rows, sys.basis)
    tree_units = [{d: 1} for d in sys.basis if d in sys.tree_digests]
    r_tree = sparse_rank(rows + tree_units, sys.basis)
    connected = [d for d in sys.basis
                 if len(diagram_from_digest(d).component_partition()) == 1]
    in_span_count = 0
    for digest in connected:
        if express_in_tree_basis(diagram_from_digest(digest), sys) is not None:
            in_span_count += 1
    return {
        "degree": n,
        "total_classes": total,
        "quotient_rank": total - r_sparse,
        "quotient_rank_dense": total - r_dense,
        "relation_rank_sparse": r_sparse,
        "relation_rank_dense": r_dense,
        "tree_span_rank": r_tree - r_sparse,
        "connected_classes": len(connected),
        "connected_in_tree_span": in_span_count,
    }
