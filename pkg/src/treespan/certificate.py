"""Replayable reduction certificates: format, round-trip, verification.

A certificate records the input class, the ordered rewrite steps, and the
resulting combination.  Verification regenerates every step from the
recorded location alone (never from strategy code), telescopes the rewrites,
and finally checks that input minus result lies in the relation span.

Line format (UTF-8, LF):

    INPUT <digest>
    STEP <k> <KIND> parent=<digest> at=<token> -> +<digest>,-<digest>
    RESULT <digest>:<p/q>, ...

Kinds: STU-EXPAND, SLIDE-JOIN, CANONICAL-ZERO, ORACLE-SOLVED.  The RESULT
of the empty combination is ``RESULT 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .canonical import canonicalize, degree_of_digest, diagram_from_digest
from .errors import DegreeMismatch, ParseError, UnknownDigest
from .linear import LinearCombination

STEP_KINDS = ("STU-EXPAND", "SLIDE-JOIN", "CANONICAL-ZERO", "ORACLE-SOLVED")


@dataclass(frozen=True)
class Step:
    index: int
    kind: str
    parent: str
    at: str
    children: tuple     # ((sign, digest), ...)


@dataclass(frozen=True)
class Certificate:
    input_digest: str
    steps: tuple
    result: LinearCombination


def serialize_certificate(cert):
    lines = ["INPUT %s" % cert.input_digest]
    for step in cert.steps:
        head = "STEP %d %s parent=%s at=%s ->" % (step.index, step.kind, step.parent, step.at)
        if step.children:
            kids = ",".join("%s%s" % ("+" if s > 0 else "-", dg) for s, dg in step.children)
            lines.append("%s %s" % (head, kids))
        else:
            lines.append(head)
    lines.append("RESULT %s" % cert.result.serialize())
    return "\n".join(lines) + "\n"


def parse_certificate(text):
    input_digest = None
    steps = []
    result = None
    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("INPUT "):
            if input_digest is not None:
                raise ParseError("duplicate INPUT header", line=lineno)
            input_digest = line[len("INPUT "):].strip()
        elif line.startswith("STEP "):
            if input_digest is None:
                raise ParseError("STEP before INPUT", line=lineno)
            if result is not None:
                raise ParseError("STEP after RESULT", line=lineno)
            steps.append(_parse_step(line, lineno))
        elif line.startswith("RESULT"):
            body = line[len("RESULT"):].strip()
            try:
                result = LinearCombination.parse(body)
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno)
        else:
            raise ParseError("unrecognised line %r" % line, line=lineno)
    if input_digest is None:
        raise ParseError("missing INPUT header", line=len(lines))
    if result is None:
        raise ParseError("missing RESULT footer (truncated file?)", line=len(lines))
    for i, step in enumerate(steps, start=1):
        if step.index != i:
            raise ParseError("step numbering gap at STEP %d" % step.index)
    return Certificate(input_digest=input_digest, steps=tuple(steps), result=result)


def _parse_step(line, lineno):
    head, sep, tail = line.partition(" -> ")
    if not sep:
        if line.endswith(" ->"):
            head, tail = line[:-3], ""
        else:
            raise ParseError("STEP line missing '->'", line=lineno)
    fields = head.split()
    if len(fields) != 5:
        raise ParseError("malformed STEP line", line=lineno)
    _, index, kind, parent_f, at_f = fields
    try:
        index = int(index)
    except ValueError:
        raise ParseError("bad step index %r" % index, line=lineno)
    if kind not in STEP_KINDS:
        raise ParseError("unknown step kind %r" % kind, line=lineno)
    if not parent_f.startswith("parent=") or not at_f.startswith("at="):
        raise ParseError("malformed STEP fields", line=lineno)
    parent = parent_f[len("parent="):]
    at = at_f[len("at="):]
    children = []
    tail = tail.strip()
    if tail:
        for chunk in tail.split(","):
            chunk = chunk.strip()
            if not chunk or chunk[0] not in "+-":
                raise ParseError("bad child term %r" % chunk, line=lineno)
            children.append((1 if chunk[0] == "+" else -1, chunk[1:]))
    return Step(index=index, kind=kind, parent=parent, at=at, children=tuple(children))


def _parse_slot_token(at):
    if not at.startswith("s") or "p" not in at:
        raise ParseError("bad slot token %r" % at)
    ci, pos = at[1:].split("p")
    return int(ci), int(pos)


def _parse_block_token(at):
    # b<ci>p<start>a<lenA>b<lenB>
    try:
        rest = at[1:]
        ci, rest = rest.split("p", 1)
        start, rest = rest.split("a", 1)
        la, lb = rest.split("b", 1)
        return int(ci), int(start), int(la), int(lb)
    except ValueError:
        raise ParseError("bad block token %r" % at)


def block_positions(digest, at):
    """Decode a SLIDE-JOIN location against its parent diagram."""
    ci, start, la, lb = _parse_block_token(at)
    rep = diagram_from_digest(digest)
    size = len(rep.legs[ci])
    a_set = frozenset((start + k) % size for k in range(la))
    b_set = frozenset((start + la + k) % size for k in range(lb))
    return ci, a_set, b_set


def verify_certificate(cert, sys):
    """Replay a certificate against a relation system.

    Returns (ok, diagnostics).  Checks, in order: every step regenerates
    from its recorded location and matches the recorded children; the
    telescoped rewrites turn the input into the recorded result; and input
    minus result lies in the span of the relation rows.
    """
    from .reduction import block_swap, slide_join_terms
    from .stu import diagram_vector, in_span, leg_resolutions

    if degree_of_digest(cert.input_digest) != sys.degree:
        raise DegreeMismatch("certificate input has degree %d, system degree %d"
                             % (degree_of_digest(cert.input_digest), sys.degree))
    known = {cert.input_digest}
    try:
        input_rep = diagram_from_digest(cert.input_digest)
    except ParseError as exc:
        raise UnknownDigest(str(exc))
    work = LinearCombination({cert.input_digest: Fraction(1)})

    for step in cert.steps:
        if step.parent not in known:
            raise UnknownDigest("step %d parent digest was never introduced" % step.index)
        if step.kind == "ORACLE-SOLVED":
            if step.index != len(cert.steps):
                return False, "step %d: ORACLE-SOLVED must be the final step" % step.index
            coeff = work.get(step.parent)
            work = work - LinearCombination({step.parent: coeff}) + cert.result.scale(coeff)
            for _, dg in step.children:
                known.add(dg)
            continue
        try:
            parent_rep = diagram_from_digest(step.parent)
        except ParseError:
            raise UnknownDigest("step %d parent digest does not decode" % step.index)
        if step.kind == "CANONICAL-ZERO":
            cd, _ = canonicalize(parent_rep)
            if cd.sign != 0:
                return False, "step %d: class is not antisymmetry-zero" % step.index
            coeff = work.get(step.parent)
            work = work - LinearCombination({step.parent: coeff})
            continue
        if step.kind == "STU-EXPAND":
            try:
                ci, pos = _parse_slot_token(step.at)
                leg = parent_rep.legs[ci][pos]
            except (ParseError, IndexError):
                return False, "step %d: bad expansion location %r" % (step.index, step.at)
            t_term, u_term, _ = leg_resolutions(parent_rep, leg)
            expected = [(1, canonicalize(t_term)[0].digest),
                        (-1, canonicalize(u_term)[0].digest)]
        else:   # SLIDE-JOIN
            try:
                ci, a_set, b_set = block_positions(step.parent, step.at)
                twin = block_swap(parent_rep, ci, a_set, b_set)
                joins = slide_join_terms(parent_rep, ci, a_set, b_set)
            except (ParseError, IndexError, ValueError) as exc:
                return False, "step %d: bad slide location (%s)" % (step.index, exc)
            expected = [(1, canonicalize(j)[0].digest) for j, _ in joins]
            expected.append((1, canonicalize(twin)[0].digest))
        if sorted(step.children) != sorted(expected):
            return False, "step %d: regenerated children do not match" % step.index
        coeff = work.get(step.parent)
        delta = LinearCombination({step.parent: -coeff})
        for sign, dg in step.children:
            known.add(dg)
            delta = delta + LinearCombination({dg: Fraction(sign) * coeff})
        work = work + delta

    # antisymmetry-zero keys must have been discharged by CANONICAL-ZERO steps
    for dg in work.support():
        if canonicalize(diagram_from_digest(dg))[0].sign == 0 and work.get(dg):
            return False, "telescoped combination retains the zero class %s" % dg
    if work != cert.result:
        return False, "telescoped combination does not match the recorded result"
    vec = diagram_vector(input_rep) - cert.result
    if in_span(vec, sys) is None:
        return False, "input minus result is not in the relation span"
    return True, "OK"
