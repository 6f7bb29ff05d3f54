"""Text formats: circuits (.krc), rectangle families (.rects), schedules (.ksched), point sets."""
from __future__ import annotations

import hashlib
import io
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import Circuit, SparseVector
from .partitions import Explicit, Pred, RectangleFamily
from .semiring import Semiring


class FormatError(ValueError):
    pass


def _open_text(src):
    if isinstance(src, (str, Path)):
        return Path(src).read_text().splitlines()
    return src.read().splitlines()


def _emit(text: str, dest):
    if dest is None:
        return text
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)
    return text


# --------------------------------------------------------------------- .krc


def dumps_krc(c: Circuit) -> str:
    sr = c.semiring
    out = io.StringIO()
    out.write(f"krc v1 {c.n_rows} {c.n_cols} {c.n_gates} {sr.token()}\n")
    for k, (u, v) in enumerate(c.gates):
        for tag, vec in (("U", u), ("V", v)):
            body = " ".join(f"{i}:{sr.format(a)}" for i, a in vec.items())
            out.write(f"{tag} {k} {body}".rstrip() + "\n")
    return out.getvalue()


def write_krc(c: Circuit, dest=None) -> str:
    return _emit(dumps_krc(c), dest)


def read_krc(src) -> Circuit:
    lines = [ln for ln in _open_text(src) if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty circuit file")
    head = lines[0].split()
    if len(head) != 6 or head[:2] != ["krc", "v1"]:
        raise FormatError(f"bad header: {lines[0]!r}")
    try:
        n_rows, n_cols, n_gates = map(int, head[2:5])
        sr = Semiring.from_token(head[5])
    except ValueError as e:
        raise FormatError(f"bad header: {e}") from None
    if len(lines) != 1 + 2 * n_gates:
        raise FormatError(f"expected {2 * n_gates} gate lines, found {len(lines) - 1}")
    gates = []
    for k in range(n_gates):
        vecs = []
        for tag, ln, n in (("U", lines[1 + 2 * k], n_rows), ("V", lines[2 + 2 * k], n_cols)):
            parts = ln.split()
            if parts[:2] != [tag, str(k)]:
                raise FormatError(f"line {2 + 2 * k}: expected '{tag} {k}', got {ln[:20]!r}")
            try:
                items = []
                for p in parts[2:]:
                    i, _, val = p.partition(":")
                    items.append((int(i), sr.parse(val)))
                vecs.append(SparseVector(n, tuple(i for i, _ in items), tuple(a for _, a in items)))
            except ValueError as e:
                raise FormatError(f"gate {k} {tag}: {e}") from None
        gates.append(tuple(vecs))
    return Circuit(n_rows, n_cols, tuple(gates), sr)


def content_hash(c: Circuit) -> str:
    return hashlib.sha256(dumps_krc(c).encode()).hexdigest()[:16]


# -------------------------------------------------------------------- .rects


def _side_str(tag: str, side) -> str:
    if isinstance(side, Pred):
        return f"{tag}pred {side.minw} {side.maxw} {side.forbid} {side.require}"
    return " ".join([tag] + [str(x) for x in side.items])


def dumps_rects(fam: RectangleFamily) -> str:
    lines = [f"rects v1 {fam.d} {len(fam.rects)}"]
    lines += [f"{_side_str('R', r)} | {_side_str('C', c)}" for r, c in fam.rects]
    return "\n".join(lines) + "\n"


def write_rects(fam: RectangleFamily, dest=None) -> str:
    return _emit(dumps_rects(fam), dest)


def _parse_side(tok: list[str], tag: str, lineno: int):
    if not tok:
        raise FormatError(f"line {lineno}: empty side")
    if tok[0] == tag + "pred":
        if len(tok) not in (4, 5):
            raise FormatError(f"line {lineno}: predicate needs minw maxw forbid [require]")
        return Pred(*map(int, tok[1:]))
    if tok[0] != tag:
        raise FormatError(f"line {lineno}: expected {tag!r}, got {tok[0]!r}")
    return Explicit(tuple(int(x) for x in tok[1:]))


def read_rects(src) -> RectangleFamily:
    lines = [ln for ln in _open_text(src) if ln.strip() and not ln.startswith("#")]
    head = lines[0].split() if lines else []
    if len(head) != 4 or head[:2] != ["rects", "v1"]:
        raise FormatError("bad header; expected 'rects v1 <d> <count>'")
    d, count = int(head[2]), int(head[3])
    if len(lines) - 1 != count:
        raise FormatError(f"header announces {count} rectangles, found {len(lines) - 1}")
    rects = []
    for no, ln in enumerate(lines[1:], start=2):
        left, bar, right = ln.partition("|")
        if not bar:
            raise FormatError(f"line {no}: missing '|'")
        rects.append((_parse_side(left.split(), "R", no), _parse_side(right.split(), "C", no)))
    return RectangleFamily(d, rects)


# ------------------------------------------------------------------- .ksched


def dumps_ksched(sched, hashes: list[str]) -> str:
    lines = [f"ksched v1 {sched.n} {len(sched.profiles)}",
             f"lambda {sched.lam}", f"strategy {sched.strategy}"]
    lines += [f"profile {i} {h} {p.n_t} {p.label}".rstrip() for i, (p, h) in enumerate(zip(sched.profiles, hashes))]
    for (k, x), idx in sorted(sched.choices.items()):
        lines.append(f"state {k} {x} {idx}")
    return "\n".join(lines) + "\n"


def write_ksched(sched, dest=None, hashes=None) -> str:
    if hashes is None:
        hashes = [content_hash(p.circuit) if p.circuit is not None else "-" for p in sched.profiles]
    return _emit(dumps_ksched(sched, hashes), dest)


def read_ksched(src, profiles: list | None = None):
    """Returns (n, lam, strategy, hashes, choices); builds a schedule when ``profiles`` is given."""
    from .spectrum import RebalanceSchedule
    lines = [ln.split() for ln in _open_text(src) if ln.strip()]
    if lines[0][:2] != ["ksched", "v1"]:
        raise FormatError("bad header; expected 'ksched v1 <n> <n_profiles>'")
    n, n_prof = int(lines[0][2]), int(lines[0][3])
    lam, strategy, hashes, choices = Fraction(1), "exact", [None] * n_prof, {}
    for t in lines[1:]:
        if t[0] == "lambda":
            lam = Fraction(t[1])
        elif t[0] == "strategy":
            strategy = t[1]
        elif t[0] == "profile":
            hashes[int(t[1])] = t[2]
        elif t[0] == "state":
            choices[(int(t[1]), Fraction(t[2]))] = int(t[3])
        else:
            raise FormatError(f"unknown record {t[0]!r}")
    if profiles is None:
        return n, lam, strategy, hashes, choices
    if len(profiles) != n_prof:
        raise FormatError(f"schedule references {n_prof} profiles, {len(profiles)} supplied")
    for i, (p, h) in enumerate(zip(profiles, hashes)):
        if h != "-" and p.circuit is not None and content_hash(p.circuit) != h:
            raise FormatError(f"profile {i} does not match hash {h}")
    return RebalanceSchedule(n, lam, list(profiles), choices, strategy)


# -------------------------------------------------------------------- points


def read_points(src, m: int = 2):
    """Binary points are digit strings; Z_m points are space-separated digits."""
    from .solvers import PointSet
    rows = []
    for no, ln in enumerate(_open_text(src), start=1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        digits = ln.split() if " " in ln else list(ln)
        try:
            rows.append([int(x) for x in digits])
        except ValueError:
            raise FormatError(f"line {no}: non-digit entry") from None
    if len({len(r) for r in rows}) > 1:
        raise FormatError("points have different lengths")
    return PointSet(np.array(rows, dtype=np.int64).reshape(len(rows), -1), m)


def write_points(ps, dest=None) -> str:
    sep = "" if ps.m == 2 else " "
    text = "".join(sep.join(str(int(x)) for x in row) + "\n" for row in ps.points)
    return _emit(text, dest)
