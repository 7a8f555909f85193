"""STU relation rows and the exact relation algebra.

A relation row is generated at a leg whose edge ends at an internal vertex
v.  Reading v's cyclic order as (leg edge, e1, e2), the row is

    D - T + U

where T replaces the leg and v by two new legs for e1 then e2 on consecutive
slots at the removed leg's position, and U uses the order e2 then e1.  Both
resolutions drop the edge count by one and preserve the degree.  The fixed
sign and ordering convention is what the rest of the package (and the IHX
instances derived from it) is checked against; any consistent convention
yields the same quotient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .canonical import canonicalize, diagram_from_digest
from .diagram import Diagram, build_diagram
from .enumeration import DEFAULT_DEGREE_BUDGET, enumerate_classes
from .errors import BasisMismatch, LegNotAdjacentToVertex
from .linear import LinearCombination, SparseEchelon, solve_in_rowspan


def _fresh(token_ref, base):
    tok = base
    i = 0
    while tok in token_ref:
        i += 1
        tok = "%s_%d" % (base, i)
    return tok


def _pairs_by_token(d):
    seen = set()
    out = []
    for ref, other in d.partner.items():
        key = frozenset((ref, other))
        if key not in seen:
            seen.add(key)
            out.append((d.ref_token(ref), d.ref_token(other)))
    return out


def leg_resolutions(d, leg_token):
    """The two resolutions (t_term, u_term) of the vertex at ``leg_token``.

    Raises LegNotAdjacentToVertex when the leg's edge is a chord.  Returns
    raw (uncanonicalised) diagrams; the new legs sit at the removed leg's
    slot and the slot after it.
    """
    ci, pos = d.slot_of_leg(leg_token)
    vref = d.partner[("s", ci, pos)]
    if vref[0] != "v":
        raise LegNotAdjacentToVertex(
            "leg %r is matched to another leg, not an internal vertex" % leg_token,
            token=leg_token)
    k, i = vref[1], vref[2]
    triple = d.triples[k]
    h1 = triple[(i + 1) % 3]
    h2 = triple[(i + 2) % 3]
    p1 = d.partner[d.tokens[h1]]
    p2 = d.partner[d.tokens[h2]]

    new1 = _fresh(d.tokens, "@a")
    new2 = _fresh(d.tokens, "@b")

    def resolution(first, second):
        legs = {}
        for cj, comp in enumerate(d.skeleton.components):
            ls = list(d.legs[cj])
            if cj == ci:
                ls[pos:pos + 1] = [first, second]
            legs[comp.id] = tuple(ls)
        vertices = [(vid, t) for m, (vid, t) in enumerate(zip(d.vertex_ids, d.triples)) if m != k]
        pairs = []
        for a, b in _pairs_by_token(d):
            if leg_token in (a, b) or h1 in (a, b) or h2 in (a, b):
                continue
            pairs.append((a, b))
        if p1 == ("v", k, (i + 2) % 3):
            # loop at the removed vertex: the two resolutions coincide
            pairs.append((new1, new2))
        else:
            pairs.append((new1, d.ref_token(p1)))
            pairs.append((new2, d.ref_token(p2)))
        return build_diagram(d.skeleton, legs, vertices, pairs)

    t_term = resolution(new1, new2)
    u_term = resolution(new2, new1)
    return t_term, u_term, (ci, pos)


def stu_row(d, leg_token):
    """The relation row D - T + U at a leg, canonicalised with signs folded."""
    t_term, u_term, _ = leg_resolutions(d, leg_token)
    cd, _ = canonicalize(d)
    ct, _ = canonicalize(t_term)
    cu, _ = canonicalize(u_term)
    terms = []
    if cd.sign:
        terms.append((cd.digest, Fraction(1)))
    if ct.sign:
        terms.append((ct.digest, Fraction(-1)))
    if cu.sign:
        terms.append((cu.digest, Fraction(1)))
    return LinearCombination(terms)


@dataclass
class RelationSystem:
    """All STU rows at one degree over the nonzero classes on a skeleton."""

    skeleton: object
    degree: int
    basis: tuple                 # digests, sorted
    rows: tuple                  # LinearCombination per deduplicated row
    tree_digests: frozenset
    _echelon: object = field(default=None, repr=False, compare=False)
    _tree_echelon: object = field(default=None, repr=False, compare=False)

    def basis_index(self, digest):
        try:
            return self.basis.index(digest)
        except ValueError:
            raise BasisMismatch("digest not in the degree-%d basis: %s" % (self.degree, digest))

    def check_vector(self, lc):
        basis = set(self.basis)
        for digest in lc.terms:
            if digest not in basis:
                raise BasisMismatch(
                    "combination mentions a digest outside the degree-%d basis: %s"
                    % (self.degree, digest))

    def echelon(self):
        """Echelonised rows (cached; systems are immutable once built)."""
        if self._echelon is None:
            rank_of = {col: i for i, col in enumerate(self.basis)}
            ech = SparseEchelon(rank_of)
            for i, row in enumerate(self.rows):
                ech.insert(dict(row.terms), i)
            self._echelon = ech
        return self._echelon

    def tree_echelon(self):
        """Rows plus tree unit vectors, trees inserted after all relations."""
        if self._tree_echelon is None:
            order = [d for d in self.basis if d not in self.tree_digests]
            order += [d for d in self.basis if d in self.tree_digests]
            rank_of = {col: i for i, col in enumerate(order)}
            ech = SparseEchelon(rank_of)
            for i, row in enumerate(self.rows):
                ech.insert(dict(row.terms), ("row", i))
            for digest in sorted(self.tree_digests):
                ech.insert({digest: Fraction(1)}, ("tree", digest))
            self._tree_echelon = ech
        return self._tree_echelon


def generate_relations(skel, n, budget=DEFAULT_DEGREE_BUDGET):
    """Build the degree-n relation system on a skeleton.

    One row per (nonzero class, leg adjacent to an internal vertex), with
    duplicate rows removed by their serialised form.
    """
    classes = enumerate_classes(skel, n, budget=budget, skip_loops=False)
    basis = tuple(sorted(d for d, cd in classes.items() if cd.sign != 0))
    rows = []
    seen = set()
    tree_digests = set()
    for digest in basis:
        rep = diagram_from_digest(digest)
        if rep.is_forest():
            tree_digests.add(digest)
        for ci, ls in enumerate(rep.legs):
            for pos, tok in enumerate(ls):
                if rep.partner[("s", ci, pos)][0] != "v":
                    continue
                row = stu_row(rep, tok)
                if not row:
                    continue
                key = row.serialize()
                if key not in seen:
                    seen.add(key)
                    rows.append(row)
    return RelationSystem(skeleton=skel, degree=n, basis=basis,
                          rows=tuple(rows), tree_digests=frozenset(tree_digests))


def in_span(lc, sys):
    """Coefficients over sys.rows expressing ``lc``, or None if outside the span."""
    sys.check_vector(lc)
    if not lc:
        return {}
    ech = sys.echelon()
    residual, combo = ech.reduce(dict(lc.terms))
    if residual:
        return None
    return {idx: -val for idx, val in combo.items()}


def diagram_vector(d):
    """Canonical one-term combination of a diagram, zero classes folded away."""
    cd, _ = canonicalize(d)
    if cd.sign == 0:
        return LinearCombination()
    return LinearCombination({cd.digest: Fraction(1)})


def express_in_tree_basis(d, sys):
    """A tree-diagram combination equal to ``d`` modulo the relation rows.

    Tree diagrams return themselves; antisymmetry-zero inputs return the
    empty combination.  Returns None when no tree expression exists.
    """
    if isinstance(d, Diagram):
        if d.degree != sys.degree:
            raise BasisMismatch("diagram degree %d does not match system degree %d"
                                % (d.degree, sys.degree))
        vec = diagram_vector(d)
    else:
        vec = d
    sys.check_vector(vec)
    if not vec:
        return LinearCombination()
    if len(vec) == 1:
        digest, coeff = next(iter(vec))
        if digest in sys.tree_digests:
            return LinearCombination({digest: coeff})
    ech = sys.tree_echelon()
    residual, combo = ech.reduce(dict(vec.terms))
    if residual:
        return None
    expr = LinearCombination()
    for tag, val in combo.items():
        if tag[0] == "tree":
            expr = expr + LinearCombination({tag[1]: -val})
    return expr


def ihx_instances(skel, n, budget=DEFAULT_DEGREE_BUDGET):
    """IHX triples (I, H, X) at every internal edge of every nonzero class.

    The triple is normalised so that I - H + X lies in the STU span: writing
    the edge's vertex orders as (p, a, b) and (q, c, d), H rewires to
    (p', b, c) / (q', d, a) and X to (p', a, c) / (q', d, b).
    Loops are skipped (no IHX applies).  Returns a list of
    (I_digest, lcI, lcH, lcX) records with signs folded.
    """
    classes = enumerate_classes(skel, n, budget=budget, skip_loops=True)
    out = []
    for digest in sorted(classes):
        if classes[digest].sign == 0:
            continue
        rep = diagram_from_digest(digest)
        for (aref, bref) in rep.internal_edges():
            k, i = aref[1], aref[2]
            l, j = bref[1], bref[2]
            if k == l:
                continue
            lcH = _rewire(rep, k, i, l, j, _H_WIRING)
            lcX = _rewire(rep, k, i, l, j, _X_WIRING)
            out.append((digest, diagram_vector(rep), lcH, lcX))
    return out


# Positions of the four dangling half-edges (a, b, c, d) on the two new
# vertices: each entry is (new vertex 0 or 1, position 1 or 2).
_H_WIRING = {"a": (1, 2), "b": (0, 1), "c": (0, 2), "d": (1, 1)}
_X_WIRING = {"a": (0, 1), "b": (1, 2), "c": (0, 2), "d": (1, 1)}


def _rewire(d, k, i, l, j, wiring):
    """Replace the internal edge (k.i)-(l.j) by the given local rewiring."""
    names = {
        "a": (k, (i + 1) % 3), "b": (k, (i + 2) % 3),
        "c": (l, (j + 1) % 3), "d": (l, (j + 2) % 3),
    }
    home = {}
    new_tokens = [["@n0.0", "@n0.1", "@n0.2"], ["@n1.0", "@n1.1", "@n1.2"]]
    for label, (v, p) in wiring.items():
        old = d.triples[names[label][0]][names[label][1]]
        home[old] = new_tokens[v][p]
    edge_tokens = {d.triples[k][i], d.triples[l][j]}

    legs = {comp.id: d.legs[ci] for ci, comp in enumerate(d.skeleton.components)}
    vertices = [(vid, t) for m, (vid, t) in enumerate(zip(d.vertex_ids, d.triples))
                if m not in (k, l)]
    vertices.append(("@n0", tuple(new_tokens[0])))
    vertices.append(("@n1", tuple(new_tokens[1])))
    pairs = [(new_tokens[0][0], new_tokens[1][0])]
    for a, b in _pairs_by_token(d):
        if a in edge_tokens and b in edge_tokens:
            continue
        pairs.append((home.get(a, a), home.get(b, b)))
    rewired = build_diagram(d.skeleton, legs, vertices, pairs)
    return diagram_vector(rewired)
