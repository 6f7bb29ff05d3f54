"""Command-line interface: ``kroncirc <command> ...`` (also ``python -m kroncirc``)."""
from __future__ import annotations

import argparse
import csv
import math
import sys
from fractions import Fraction

from . import degree, fileio, interval, partitions, solvers, spectrum
from .core import DFT, Disjointness, Hadamard, Identity, apply, verify
from .semiring import Semiring

PLACES = 7


def _up(x) -> str:
    return f"<= {interval.upper_decimal(x, PLACES)} (outward)"


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x)


# ------------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    if args.kind == "simple":
        fam = partitions.simple_partition(args.d, args.word)
    elif args.kind == "merged":
        fam = partitions.merged_partition(args.d, args.word, _ints(args.a), data_dir=args.codes)
    else:
        c = degree.r2_partition_circuit()
        if args.transpose:
            c = c.transpose()
        fileio.write_krc(c, args.emit or sys.stdout)
        return 0
    if args.transpose:
        fam = fam.transpose()
    print(f"# d={fam.d} rectangles={len(fam)} covered={fam.covered()} (3^d = {3 ** fam.d})", file=sys.stderr)
    if args.emit and args.emit.endswith(".krc"):
        fileio.write_krc(partitions.as_circuit(fam), args.emit)
    else:
        fileio.write_rects(fam, args.emit or sys.stdout)
    return 0


# ------------------------------------------------------------------ verify


def _target(spec: str):
    kind, *rest = spec.split(":")
    vals = [int(x) for x in rest]
    if kind == "disjointness":
        return Disjointness(*vals)
    if kind == "hadamard":
        return Hadamard(*vals)
    if kind == "dft":
        return DFT(*vals)
    if kind == "identity":
        return Identity(*vals)
    raise SystemExit(f"unknown target {spec!r}; use disjointness:d, hadamard:d, dft:m:d or identity:n")


def cmd_verify(args) -> int:
    try:
        if args.rects:
            fam = fileio.read_rects(args.rects)
            rep = partitions.validate_partition(fam, mode=args.mode, samples=args.samples, seed=args.seed)
            print(f"{'OK' if rep.ok else 'FAIL'} mode={rep.mode} checked={rep.checked} {rep.message}")
            if not rep.ok and rep.counterexample is not None:
                print(f"counterexample: {rep.counterexample}")
            return 0 if rep.ok else 1
        c = fileio.read_krc(args.circuit)
    except fileio.FormatError as e:
        print(f"FAIL malformed input: {e}")
        return 1
    target = _target(args.target) if args.target else Disjointness(round(math.log2(c.n_rows)))
    mode = Semiring.from_token(args.semiring) if args.semiring else None
    rep = verify(c, target, mode, samples=args.samples if args.mode == "sample" else None, seed=args.seed)
    print(f"{'OK' if rep.ok else 'FAIL'} mode={rep.mode} exhaustive={rep.exhaustive} checked={rep.checked} {rep.message}")
    if not rep.ok and rep.counterexample is not None:
        print(f"counterexample: {rep.counterexample}")
    return 0 if rep.ok else 1


# ------------------------------------------------------------------- curve


def _profiles(args) -> list:
    out = []
    for w in (args.words.split(",") if args.words else []):
        out.append(spectrum.word_profile(args.d, w))
    if args.merged:
        out.append(spectrum.word_profile(args.d, args.merged, _ints(args.a), label="merged"))
    for path in (args.profiles.split(",") if args.profiles else []):
        c = fileio.read_krc(path)
        out.append(spectrum.AlphaProfile.from_circuit(c, args.levels, label=path))
    if args.transposes:
        out += [p.transpose() for p in out]
    if not out:
        raise SystemExit("no profiles given; use --words, --merged or --profiles")
    return out


def cmd_curve(args) -> int:
    profs = _profiles(args)
    env = spectrum.Envelope(profs)
    (a_lo, a_hi), peak = spectrum.envelope_argmax(env, grid_size=args.grid)
    best = min(range(args.grid + 1), key=lambda k: abs(Fraction(k, args.grid) - (a_lo + a_hi) / 2))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["alpha"] + [f"log2_{p.label}" for p in profs] + ["log2_envelope", "argmax"])
    for k in range(args.grid + 1):
        a = k / args.grid
        vals = [p.log_norm(a) / math.log(2) for p in profs]
        w.writerow([f"{a:.6f}"] + [f"{v:.9f}" for v in vals] + [f"{min(vals):.9f}", "*" if k == best else ""])
    if args.out:
        out.close()
    alpha = Fraction(args.alpha) if args.alpha else (a_lo + a_hi) / 2
    val = interval.log2(env.eval(interval.exact(alpha)))
    print(f"# advisory argmax alpha in [{float(a_lo):.6f}, {float(a_hi):.6f}]; "
          f"sup log2 envelope {_up(interval.log2(peak))}", file=sys.stderr)
    print(f"# log2 envelope at alpha={alpha}: {_up(val)}", file=sys.stderr)
    return 0


# --------------------------------------------------------------- rebalance


def cmd_rebalance(args) -> int:
    circuits = [fileio.read_krc(p) for p in args.profiles.split(",")]
    profs = [spectrum.AlphaProfile.from_circuit(c, args.levels, label=f"p{i}") for i, c in enumerate(circuits)]
    sched = spectrum.build_schedule(profs, args.n, Fraction(args.lam), strategy=args.strategy)
    print(f"skew size {sched.skew_size()}  leaves {sched.leaf_count()}  strategy {sched.strategy}")
    if args.strategy == "exact":
        print(f"F_n(lambda) = {spectrum.f_exact(profs, args.n, Fraction(args.lam))}")
    if args.ksched:
        fileio.write_ksched(sched, args.ksched)
    if args.emit:
        c = spectrum.expand_schedule(sched)
        fileio.write_krc(c, args.emit)
        print(f"gates {c.n_gates}  size {c.size}")
    return 0


# ---------------------------------------------------------- cover, density


def cmd_cover(args) -> int:
    try:
        plan = degree.random_cover(args.d, args.p, args.q, args.mu, seed=args.seed,
                                   verify=args.verify == "exhaustive")
    except degree.CoverFailure as e:
        print(f"FAIL {e}")
        return 1
    rows, cols = plan.rect_shape
    print(f"# seed={args.seed}")
    print(f"d={plan.d} p*d={plan.pd} q*d={plan.qd} mu*d={plan.mud} t={plan.t} rectangles of shape {rows}x{cols}")
    print(f"verified={plan.verified} attempts={plan.attempts}")
    if plan.verified:
        print(f"max row coverage {plan.max_row_cover}  expected {float(plan.expected_row_cover):.3f}")
    return 0


def cmd_density(args) -> int:
    c = fileio.read_krc(args.circuit) if args.circuit else degree.r2_partition_circuit()
    d0 = args.d0 or round(math.log2(c.n_rows))
    spec = degree.DensitySpec.for_disjointness(c, d0)
    for side, poly in (("row", degree.density_row(spec)), ("col", degree.density_col(spec))):
        print(f"{side}: {_show_poly(poly)}")
        if args.sup:
            if poly.is_rational():
                pt, val = degree.density_sup_exact(poly)
                print(f"  max {val} at (q, p) = ({pt[0]}, {pt[1]})  exact")
            else:
                pt, val = degree.density_sup(poly)
                print(f"  best found {val:.9f} at {[round(x, 6) for x in pt]}")
    return 0


def _show_poly(poly) -> str:
    parts = []
    for prime, terms in poly.parts:
        body = " + ".join(f"{c}*q^{e[0]}" for e, c in terms)
        parts.append(body if prime == 2 else f"log2({prime})*({body})")
    return " + ".join(parts) or "0"


def cmd_exponents(args) -> int:
    r = degree.cover_exponents()
    closed = {"sigma_or_opt": ("sqrt(5)", math.sqrt(5)), "delta_or_opt": ("2/sqrt(3)", 2 / math.sqrt(3))}
    for name, (ref, exact) in closed.items():
        p, q, mu = r[name]["point"]
        print(f"{name}: {r[name]['value']:.12f} at p={p:.6f} q={q:.6f} mu={mu:.6f}  "
              f"(closed form {ref} = {exact:.12f})")
    return 0


# ---------------------------------------------------------------------- ov


def cmd_ov(args) -> int:
    m = args.mod or 2
    U = fileio.read_points(args.u, m)
    V = fileio.read_points(args.v, m)
    if args.mod:
        res = solvers.ov_count_mod(U, V, m)
    elif args.decide:
        res = solvers.ov_decide(U, V, seed=args.seed)
    else:
        plan = None
        if args.circuit:
            c = fileio.read_krc(args.circuit)
            d0 = round(math.log2(c.n_rows))
            if U.d % d0:
                raise SystemExit(f"circuit dimension {d0} does not divide d={U.d}")
            plan = solvers.VmvPlan([c] * (U.d // d0))
        res = solvers.ov_count(U, V, plan)
    print(res.value)
    if args.stats:
        print(f"# work {res.work}  seed {args.seed}", file=sys.stderr)
    return 0


def cmd_apply(args) -> int:
    c = fileio.read_krc(args.circuit)
    raw = open(args.vector).read().split() if args.vector else sys.stdin.read().split()
    x = [c.semiring.parse(t) for t in raw]
    y = apply(c, x)
    print(" ".join(c.semiring.format(v) for v in y))
    return 0


# ------------------------------------------------------------------- repro


def repro_rows():
    half = Fraction(1, 2)
    rows = []
    rows.append(("Yates (6^{1/2} per level)", interval.log2(interval.root(6, 2)), "1.293"))
    rows.append(("one-sided rho(1/2) = 1+sqrt(2)",
                 interval.log2(spectrum.r1_profiles()[0].rho(interval.exact(half))), "1.272"))
    for d, ref in ((15, "1.251"), (18, "1.2503")):
        v = partitions.simple_alpha_volume(d, partitions.alternating_word(d), half)
        rows.append((f"alternating word CRCR... d={d}, rho(1/2)^(1/d)", interval.log2(interval.root(v, d)), ref))
    env = spectrum.Envelope([spectrum.word_profile(18, w) for w in (partitions.W1, partitions.W2, partitions.W3)])
    env = spectrum.Envelope(env.profiles + [p.transpose() for p in env.profiles])
    rows.append(("three simple words d=18, envelope at 1/2", interval.log2(env.eval(interval.exact(half))), "1.25026"))
    v = partitions.merged_alpha_volume(18, partitions.MERGED_WORD, partitions.MERGED_A, half)
    rows.append(("merged d=18, rho(1/2)^(1/18)", interval.log2(interval.root(v, 18)), "1.2495 (1.249424)"))
    return rows


def cmd_repro(args) -> int:
    partitions.code_lookup(18, 4, 4, 198, data_dir=args.codes)
    partitions.code_lookup(18, 4, 6, 1260, data_dir=args.codes)
    print(f"{'construction':48s} {'computed exponent':34s} reference")
    for name, val, ref in repro_rows():
        print(f"{name:48s} {interval.upper_decimal(val, PLACES)} (outward up)      {ref}")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kroncirc", description="Depth-2 circuits for Kronecker powers.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("synth", help="build a rectangle partition or a small circuit")
    s.add_argument("kind", choices=["simple", "merged", "r2"])
    s.add_argument("--d", type=int, default=18)
    s.add_argument("--word", default=partitions.W1)
    s.add_argument("--a", default=",".join(map(str, partitions.MERGED_A)))
    s.add_argument("--codes", default=None, help="directory with code tables")
    s.add_argument("--transpose", action="store_true")
    s.add_argument("--emit", help="output .rects (or .krc) path; stdout if omitted")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("verify", help="check a .rects family or a .krc circuit")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--rects")
    g.add_argument("--circuit")
    s.add_argument("--target", help="disjointness:d | hadamard:d | dft:m:d | identity:n")
    s.add_argument("--semiring", help="rational | modP | cycloM | or | par")
    s.add_argument("--mode", choices=["exhaustive", "sample"], default="exhaustive")
    s.add_argument("--samples", type=int, default=10 ** 5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("curve", help="CSV of per-level log2 alpha-volumes and their envelope")
    s.add_argument("--d", type=int, default=18)
    s.add_argument("--words", help="comma-separated words")
    s.add_argument("--merged", help="merged word (with --a)")
    s.add_argument("--a", default=",".join(map(str, partitions.MERGED_A)))
    s.add_argument("--profiles", help="comma-separated .krc files")
    s.add_argument("--levels", type=int, default=1, help="Kronecker levels per .krc profile")
    s.add_argument("--transposes", action="store_true", help="add the transpose of every profile")
    s.add_argument("--grid", type=int, default=64)
    s.add_argument("--alpha", help="certify the envelope at this alpha")
    s.add_argument("--out")
    s.set_defaults(func=cmd_curve)

    s = sub.add_parser("rebalance", help="schedule base circuits over n Kronecker levels")
    s.add_argument("--profiles", required=True)
    s.add_argument("--levels", type=int, default=1)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--lambda", dest="lam", default="1")
    s.add_argument("--strategy", choices=["exact", "asymptotic"], default="exact")
    s.add_argument("--emit")
    s.add_argument("--ksched")
    s.set_defaults(func=cmd_rebalance)

    s = sub.add_parser("cover", help="random covering of a weight class of R^(x)d")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--p", type=int, required=True, help="row weight")
    s.add_argument("--q", type=int, required=True, help="column weight")
    s.add_argument("--mu", type=int, required=True, help="size of the sampled sets")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--verify", choices=["exhaustive", "none"], default="exhaustive")
    s.set_defaults(func=cmd_cover)

    s = sub.add_parser("density", help="degree density polynomials of a circuit for R^(x)d0")
    s.add_argument("--circuit", help=".krc file (default: the four-rectangle partition of R^(x)2)")
    s.add_argument("--d0", type=int)
    s.add_argument("--sup", action="store_true")
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("exponents", help="optimize the covering size and degree exponents")
    s.set_defaults(func=cmd_exponents)

    s = sub.add_parser("ov", help="orthogonal vectors: count, decide, or count mod m")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--count", action="store_true")
    g.add_argument("--decide", action="store_true")
    g.add_argument("--mod", type=int)
    s.add_argument("--u", required=True)
    s.add_argument("--v", required=True)
    s.add_argument("--circuit")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stats", action="store_true")
    s.set_defaults(func=cmd_ov)

    s = sub.add_parser("apply", help="apply a .krc circuit to a vector")
    s.add_argument("--circuit", required=True)
    s.add_argument("--vector", help="whitespace-separated entries; stdin if omitted")
    s.set_defaults(func=cmd_apply)

    s = sub.add_parser("repro", help="table of exponents computed from the constructions")
    s.add_argument("--codes", default=None)
    s.set_defaults(func=cmd_repro)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except partitions.CodeUnavailable as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (fileio.FormatError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
