"""Canonical forms for diagrams.

The canonical key (digest) is a self-describing byte string computed by a
first-visit traversal anchored at the skeleton slots: slots are scanned in
order (minimising over rotations on circle components), internal vertices
are numbered in discovery order, and each vertex's cyclic triple is rotated
so its first-discovered half-edge sits at position 0.  Cyclic rotations are
free; reversals are not, so the digest separates the two orientation classes
of each vertex ordering and digest equality is exactly slot-preserving
oriented isomorphism.

Antisymmetry enters through the sign: a second scan allows per-vertex
reversals and tracks their parity across all labelings achieving the
minimal unoriented code.  If two such labelings disagree in parity the
diagram admits an orientation-reversing self-map and its class is zero.

Digest strings are decodable: ``diagram_from_digest`` rebuilds the canonical
representative, which re-canonicalises to the same digest.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .diagram import CIRCLE, Skeleton, SkeletonComponent, build_diagram
from .errors import ParseError

ZERO = 0


@dataclass(frozen=True)
class CanonicalDiagram:
    """Digest plus antisymmetry sign (+1, or 0 for a self-cancelling class)."""

    digest: str
    sign: int

    @property
    def is_zero(self):
        return self.sign == 0


@dataclass(frozen=True)
class Witness:
    """Relabeling taking the input diagram onto the canonical representative."""

    rotations: tuple        # per component: slot rotation offset applied
    leg_map: dict           # input leg token -> canonical leg token
    vertex_map: dict        # input vertex token -> canonical vertex token
    halfedge_map: dict      # input half-edge token -> canonical half-edge token

    def slot_map(self, d):
        """Per component: dict old slot position -> canonical position."""
        maps = []
        for ci, ls in enumerate(d.legs):
            size = len(ls)
            r = self.rotations[ci]
            maps.append({j: (j - r) % size for j in range(size)} if size else {})
        return maps


def _scan_labelings(d, rotations, orient, best):
    """Yield (stream, vmap, vrot, vflip, parity) labelings, pruned on ``best``."""
    sizes = [len(ls) for ls in d.legs]
    slot_events = []
    for ci, size in enumerate(sizes):
        for jc in range(size):
            slot_events.append((ci, (jc + rotations[ci]) % size))
    t = d.vertex_count

    def name_of(ref, vmap, vrot, vflip):
        if ref[0] == "s":
            ci, j = ref[1], ref[2]
            return (0, ci, (j - rotations[ci]) % sizes[ci])
        k, i = ref[1], ref[2]
        m = vmap.get(k)
        if m is None:
            return None
        if vflip.get(k, 1) < 0:
            pos = (-(i - vrot[k])) % 3
        else:
            pos = (i - vrot[k]) % 3
        return (1, m, pos)

    def emit(stream, name, tight):
        """Append with lexicographic pruning.

        ``tight`` records whether the stream so far equals the prefix of the
        reference ``best[0]`` it was last checked against; branches are only
        abandoned when they are provably >= a completed stream, so ties (and
        anything smaller) always survive.
        """
        stream.append(name)
        ref = best[0]
        if ref is None:
            return True, False
        pos = len(stream) - 1
        if tight is None:
            tight = tuple(stream[:pos]) == ref[:pos]
        if not tight:
            return True, False
        if name > ref[pos]:
            return False, True
        return True, name == ref[pos]

    def walk(stream, vmap, vrot, vflip, parity, slot_i, agenda_pos, agenda_sub, tight):
        stream = list(stream)
        vmap = dict(vmap)
        vrot = dict(vrot)
        vflip = dict(vflip)
        order = [None] * t
        for k, m in vmap.items():
            order[m] = k

        def ordered(k, sub):
            if vflip[k] < 0:
                i = (vrot[k] - sub) % 3
            else:
                i = (vrot[k] + sub) % 3
            return d.partner[("v", k, i)]

        si, ap, asub = slot_i, agenda_pos, agenda_sub
        while True:
            if si < len(slot_events):
                ci, j = slot_events[si]
                ref = d.partner[("s", ci, j)]
                si += 1
            elif ap < len(vmap):
                k = order[ap]
                ref = ordered(k, asub)
                asub += 1
                if asub == 3:
                    ap += 1
                    asub = 0
            else:
                break
            nm = name_of(ref, vmap, vrot, vflip)
            if nm is None:
                # unseen vertex: anchor at this half-edge, fork orientations
                k, i = ref[1], ref[2]
                m = len(vmap)
                choices = (1, -1) if orient else (1,)
                for eps in choices:
                    vmap2 = dict(vmap)
                    vrot2 = dict(vrot)
                    vflip2 = dict(vflip)
                    vmap2[k] = m
                    vrot2[k] = i
                    vflip2[k] = eps
                    st2 = list(stream)
                    ok, tight2 = emit(st2, (1, m, 0), tight)
                    if not ok:
                        continue
                    yield from walk(st2, vmap2, vrot2, vflip2,
                                    parity * eps, si, ap, asub, tight2)
                return
            ok, tight = emit(stream, nm, tight)
            if not ok:
                return
        if len(vmap) == t:
            yield (tuple(stream), vmap, vrot, vflip, parity)
            return
        # leftover legless pieces: branch over seeds and their rotations
        for k in range(t):
            if k in vmap:
                continue
            epss = (1, -1) if orient else (1,)
            for rot in (0, 1, 2):
                for eps in epss:
                    vmap2 = dict(vmap)
                    vrot2 = dict(vrot)
                    vflip2 = dict(vflip)
                    vmap2[k] = len(vmap)
                    vrot2[k] = rot
                    vflip2[k] = eps
                    yield from walk(stream, vmap2, vrot2, vflip2,
                                    parity * eps, si, ap, asub, tight)

    yield from walk([], {}, {}, {}, 1, 0, 0, 0, None)


def _rotation_choices(d):
    out = []
    for ci, comp in enumerate(d.skeleton.components):
        size = len(d.legs[ci])
        if comp.kind == CIRCLE and size > 1:
            out.append(range(size))
        else:
            out.append((0,))
    return out


def _best_oriented(d):
    best = [None]
    winner = None
    for rotations in itertools.product(*_rotation_choices(d)):
        for stream, vmap, vrot, vflip, _ in _scan_labelings(d, rotations, False, best):
            if best[0] is None or stream < best[0]:
                best[0] = stream
                winner = (stream, vmap, vrot, rotations)
    return winner


def _unoriented_profile(d):
    """(min stream, reference parity, zero?) over orientation-free labelings."""
    best = [None]
    parities = set()
    for rotations in itertools.product(*_rotation_choices(d)):
        for stream, _, _, _, parity in _scan_labelings(d, rotations, True, best):
            if best[0] is None or stream < best[0]:
                best[0] = stream
                parities = {parity}
            elif stream == best[0]:
                parities.add(parity)
    has_odd = len(parities) == 2
    ref_parity = 1 if has_odd else next(iter(parities))
    return best[0], ref_parity, has_odd


def _render_digest(d, stream):
    def render(name):
        if name[0] == 0:
            return "s%dp%d" % (name[1], name[2])
        return "v%dh%d" % (name[1], name[2])

    sizes = [len(ls) for ls in d.legs]
    parts = []
    pos = 0
    for size in sizes:
        parts.append(".".join(render(n) for n in stream[pos:pos + size]))
        pos += size
    verts = []
    for _ in range(d.vertex_count):
        verts.append(".".join(render(n) for n in stream[pos:pos + 3]))
        pos += 3
    return "g[%s][%s][%s]" % (d.skeleton.signature(), ";".join(parts), ";".join(verts))


@lru_cache(maxsize=65536)
def _sign_of_digest(digest):
    rep = diagram_from_digest(digest)
    if rep.vertex_count == 0:
        return 1
    _, _, has_odd = _unoriented_profile(rep)
    return ZERO if has_odd else 1


@lru_cache(maxsize=65536)
def _unoriented_key(digest):
    rep = diagram_from_digest(digest)
    stream, ref_parity, _ = _unoriented_profile(rep)
    return stream, ref_parity


def canonicalize(d):
    """Return (CanonicalDiagram, Witness) for a validated diagram.

    The digest is invariant under token relabeling and circle rotation, and
    idempotent; the sign is 0 exactly when the diagram admits an
    orientation-reversing self-map.
    """
    stream, vmap, vrot, rotations = _best_oriented(d)
    digest = _render_digest(d, stream)
    sign = _sign_of_digest(digest)

    sizes = [len(ls) for ls in d.legs]
    leg_map = {}
    counter = 1
    for ci, size in enumerate(sizes):
        for jc in range(size):
            j = (jc + rotations[ci]) % size
            leg_map[d.legs[ci][j]] = "l%d" % counter
            counter += 1
    vertex_map = {}
    halfedge_map = {}
    inv = {m: k for k, m in vmap.items()}
    for m in range(d.vertex_count):
        k = inv[m]
        vertex_map[d.vertex_ids[k]] = "v%d" % (m + 1)
        for p in range(3):
            i = (p + vrot[k]) % 3
            halfedge_map[d.triples[k][i]] = "h%d" % (3 * m + p + 1)
    witness = Witness(rotations=rotations, leg_map=leg_map,
                      vertex_map=vertex_map, halfedge_map=halfedge_map)
    return CanonicalDiagram(digest=digest, sign=sign), witness


def digest_of(d):
    return canonicalize(d)[0].digest


def _parse_name(text):
    if text.startswith("s"):
        ci, pos = text[1:].split("p")
        return (0, int(ci), int(pos))
    if text.startswith("v"):
        m, p = text[1:].split("h")
        return (1, int(m), int(p))
    raise ParseError("bad half-edge name %r in digest" % text)


def _split_digest(digest):
    if not digest.startswith("g[") or not digest.endswith("]"):
        raise ParseError("malformed digest %r" % digest)
    body = digest[1:]
    sections = []
    depth = 0
    start = None
    for i, ch in enumerate(body):
        if ch == "[":
            if depth == 0:
                start = i + 1
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                sections.append(body[start:i])
    if len(sections) != 3:
        raise ParseError("digest %r does not have three sections" % digest)
    return sections


def skeleton_from_digest(digest):
    inner = _split_digest(digest)[0]
    comps = []
    if inner:
        for part in inner.split(";"):
            cid, kind = part.split(":")
            comps.append(SkeletonComponent(cid, "interval" if kind == "I" else "circle"))
    return Skeleton(tuple(comps))


@lru_cache(maxsize=65536)
def diagram_from_digest(digest):
    """Rebuild the canonical representative encoded by a digest."""
    _, legs_part, verts_part = _split_digest(digest)
    skel = skeleton_from_digest(digest)

    leg_names = legs_part.split(";")
    if len(leg_names) != len(skel.components):
        raise ParseError("digest %r: leg sections do not match skeleton" % digest)
    vert_names = [v for v in verts_part.split(";") if v != ""]

    t = len(vert_names)
    leg_tokens = []
    counter = 1
    for names in leg_names:
        row = []
        for _ in [n for n in names.split(".") if n]:
            row.append("l%d" % counter)
            counter += 1
        leg_tokens.append(row)

    def token_of(name):
        kind, a, b = _parse_name(name)
        if kind == 0:
            try:
                return leg_tokens[a][b]
            except IndexError:
                raise ParseError("digest %r references missing slot s%dp%d" % (digest, a, b))
        if a >= t or b >= 3:
            raise ParseError("digest %r references missing half-edge v%dh%d" % (digest, a, b))
        return "h%d" % (3 * a + b + 1)

    pairs = set()
    pos_token = []
    partners = []
    for ci, names in enumerate(leg_names):
        entries = [n for n in names.split(".") if n]
        for j, n in enumerate(entries):
            pos_token.append(leg_tokens[ci][j])
            partners.append(n)
    for m, names in enumerate(vert_names):
        entries = names.split(".")
        if len(entries) != 3:
            raise ParseError("digest %r: vertex %d is not trivalent" % (digest, m))
        for p, n in enumerate(entries):
            pos_token.append("h%d" % (3 * m + p + 1))
            partners.append(n)
    for tok, pname in zip(pos_token, partners):
        other = token_of(pname)
        if other == tok:
            raise ParseError("digest %r: half-edge matched with itself" % digest)
        pairs.add(frozenset((tok, other)))

    legs = {comp.id: tuple(leg_tokens[ci]) for ci, comp in enumerate(skel.components)}
    vertices = [("v%d" % (m + 1), ("h%d" % (3 * m + 1), "h%d" % (3 * m + 2), "h%d" % (3 * m + 3)))
                for m in range(t)]
    return build_diagram(skel, legs, vertices,
                         [tuple(sorted(p)) for p in sorted(pairs, key=sorted)])


def degree_of_digest(digest):
    _, legs_part, verts_part = _split_digest(digest)
    u = sum(1 for section in legs_part.split(";") for n in section.split(".") if n)
    t = sum(1 for v in verts_part.split(";") if v)
    return (u + t) // 2


def is_isomorphic(d1, d2):
    """Sign s with d1 isomorphic to s * d2, or None.

    Digest equality is plain slot-preserving isomorphism (+1).  Otherwise the
    orientation-free codes are compared: equal codes mean the diagrams agree
    after reversing some vertex orderings, and the sign is the parity of the
    reversals.  Zero classes compare as +1.
    """
    if d1.skeleton.signature() != d2.skeleton.signature():
        return None
    c1, _ = canonicalize(d1)
    c2, _ = canonicalize(d2)
    if c1.digest == c2.digest:
        return 1
    key1 = _unoriented_key(c1.digest)
    key2 = _unoriented_key(c2.digest)
    if key1[0] != key2[0]:
        return None
    if c1.sign == 0 or c2.sign == 0:
        return 1
    return key1[1] * key2[1]
