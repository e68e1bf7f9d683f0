"""Command-line front end.

Subcommands: sieve, spectrum, secular, element, stats (pairs | moments |
wkl2 | landau | hecke), filter, decay, greens.  Output is CSV (default)
or JSONL; every output starts with header lines carrying the package
version and the fully resolved configuration, so identical configurations
produce byte-identical files.  Floats are printed with repr (shortest
round trip).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__, arith, cache, ergostat, greens, spectral
from .errors import CacheError, ConfigError, NumericalError, TorscatError


class Emitter:
    """CSV/JSONL writer with a deterministic config header."""

    def __init__(self, stream, fmt: str, config: dict):
        if fmt not in ("csv", "jsonl"):
            raise ConfigError(f"unknown format {fmt!r}")
        self.stream = stream
        self.fmt = fmt
        header = json.dumps(config, sort_keys=True, separators=(",", ":"))
        if fmt == "csv":
            stream.write(f"# torscat {__version__}\n# config: {header}\n")
        else:
            stream.write(json.dumps({"meta": {"torscat": __version__,
                                              "config": config}},
                                    sort_keys=True, separators=(",", ":")) + "\n")
        self.columns: Optional[list] = None

    def set_columns(self, columns: list) -> None:
        self.columns = columns
        if self.fmt == "csv":
            self.stream.write(",".join(columns) + "\n")

    @staticmethod
    def _fmt_val(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    def row(self, values: list) -> None:
        if self.fmt == "csv":
            self.stream.write(",".join(self._fmt_val(v) for v in values) + "\n")
        else:
            obj = {c: v for c, v in zip(self.columns, values)}
            self.stream.write(json.dumps(obj, sort_keys=True,
                                         separators=(",", ":")) + "\n")

    def note(self, text: str) -> None:
        if self.fmt == "csv":
            self.stream.write(f"# {text}\n")
        else:
            self.stream.write(json.dumps({"note": text},
                                         separators=(",", ":")) + "\n")


def _load_table(args, need: int) -> arith.SumsOfTwoSquaresTable:
    if getattr(args, "cache", None):
        table = cache.read_cache(args.cache)
        if table.limit < need:
            raise ConfigError(f"cache limit {table.limit} below required {need}")
        return table
    return arith.build_table(need)


def _open_out(args):
    if getattr(args, "out", None) and args.out != "-":
        return open(args.out, "w"), True
    return sys.stdout, False


def _config_dict(args, **extra) -> dict:
    skip = {"func", "out"}
    d = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    d.update(extra)
    return d


def _secular_table_limit(lam_max: float, tol: float) -> int:
    """Table size covering the doubled truncation ladder at lam_max."""
    n = max(4.0 * lam_max, lam_max + 1e4, 1e4)
    while spectral.GAUSS_C * math.sqrt(n) / (n - lam_max) ** 2 >= tol:
        n *= 2.0
    return int(2 * n) + spectral._BLOCK


def cmd_sieve(args) -> int:
    table = arith.build_table(args.limit)
    cache.write_cache(table, args.out)
    sys.stdout.write(f"wrote {args.out}: limit={table.limit} "
                     f"members={table.count(table.limit)}\n")
    return 0


def cmd_spectrum(args) -> int:
    need = max(_secular_table_limit(args.limit, args.tol), args.limit + 10**4)
    table = _load_table(args, need)
    config = spectral.CouplingConfig.create(args.mode, args.phi, args.delta, table)
    records = spectral.spectrum(config, table, args.limit, tol=args.tol,
                                threads=args.threads)
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        em.set_columns(["m", "m_minus", "lambda", "residual", "iterations"])
        for r in records:
            em.row([r.m, r.m_minus, r.lambda_, r.residual, r.iterations])
    finally:
        if close:
            stream.close()
    return 0


def cmd_secular(args) -> int:
    lam_max = max(abs(args.from_), abs(args.to))
    table = _load_table(args, _secular_table_limit(lam_max, args.tol))
    config = spectral.CouplingConfig.create(args.mode, args.phi, args.delta, table)
    grid = np.linspace(args.from_, args.to, args.samples)
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        em.set_columns(["lambda", "value"])
        for lam in grid.tolist():
            try:
                ev = spectral.secular(config, table, lam, tol=args.tol)
                em.row([lam, ev.value])
            except NumericalError:
                em.row([lam, None])  # hole at a pole
    finally:
        if close:
            stream.close()
    return 0


def cmd_element(args) -> int:
    zeta = (0, 0)
    if args.zeta:
        parts = args.zeta.split(",")
        if len(parts) != 2:
            raise ConfigError("--zeta expects A,B")
        zeta = (int(parts[0]), int(parts[1]))
    if args.lambda_ is None and not args.all:
        raise ConfigError("element needs --lambda X or --all --limit N")

    lam_max = args.lambda_ if args.lambda_ is not None else float(args.limit)
    need = int(max(4 * lam_max + 2 * 10**4, 2 * 10**6))
    table = _load_table(args, need)
    lams = []
    if args.lambda_ is not None:
        lams = [args.lambda_]
    else:
        config = spectral.CouplingConfig.create("weak", args.phi, None, table)
        lams = [r.lambda_ for r in spectral.spectrum(config, table, args.limit,
                                                     threads=args.threads)]
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        em.set_columns(["zeta_x", "zeta_y", "k", "lambda", "re", "im",
                        "trunc", "tail"])
        for lam in lams:
            if zeta == (0, 0):
                el = greens.pure_momentum_element(table, lam, args.k, args.tol)
            else:
                el = greens.mixed_element(table, lam, zeta, args.k, args.tol)
            em.row([zeta[0], zeta[1], args.k, lam, el.value.real, el.value.imag,
                    el.truncation_radius, el.tail_bound])
    finally:
        if close:
            stream.close()
    return 0


def cmd_stats(args) -> int:
    table = _load_table(args, args.x + (args.hmax if args.kind == "pairs" else 0))
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        if args.kind == "pairs":
            rep = ergostat.pair_correlation(table, args.hmax, x=args.x)
            em.set_columns(["h", "count", "c_h", "normalized"])
            for h in range(1, rep.hmax + 1):
                em.row([h, int(rep.counts[h - 1]), float(rep.c_values[h - 1]),
                        float(rep.normalized[h - 1])])
        elif args.kind == "moments":
            rep = ergostat.moments_omega1(table, args.x)
            em.set_columns(["x", "count", "mean_omega1", "second_moment"])
            for t in sorted(rep.mean_omega1):
                em.row([t, rep.counts[t], rep.mean_omega1[t],
                        rep.second_moment_omega1[t]])
        elif args.kind == "wkl2":
            val = ergostat.wk_l2(table, args.k, args.x)
            em.set_columns(["k", "x", "wk_l2"])
            em.row([args.k, args.x, val])
        elif args.kind == "landau":
            rep = ergostat.landau_report(table, args.x)
            em.set_columns(["x", "count", "ratio"])
            for t in sorted(rep.counts):
                em.row([t, rep.counts[t], rep.landau_ratio[t]])
            em.note(f"extrapolated_constant: {rep.extrapolated_constant!r}")
        elif args.kind == "hecke":
            rep = ergostat.theta_equidist(table, args.k, args.x)
            em.set_columns(["k", "x", "count", "mean_cos", "mean_cos_sq"])
            em.row([rep.k, rep.x, rep.count, rep.mean_cos, rep.mean_cos_sq])
        else:
            raise ConfigError(f"unknown stats kind {args.kind!r}")
    finally:
        if close:
            stream.close()
    return 0


def _profile_from_args(args) -> ergostat.PropertyProfile:
    if getattr(args, "profile", None):
        with open(args.profile) as f:
            data = json.load(f)
        return ergostat.PropertyProfile(**data)
    eps = getattr(args, "eps", None)
    if eps is not None:
        return ergostat.PropertyProfile(eps1=eps, eps2=eps, eps3=eps, eps4=eps,
                                        eps5=eps, eps6=eps, eps9=eps,
                                        k=getattr(args, "k", 4))
    return ergostat.PropertyProfile(k=getattr(args, "k", 4))


def cmd_filter(args) -> int:
    table = _load_table(args, args.x + 4 * 10**5)
    profile = _profile_from_args(args)
    rep = ergostat.filter_s1(table, profile, args.x)
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        em.set_columns(["key", "value"])
        for p in sorted(rep.removed_per_property):
            em.row([f"removed_property_{p}", rep.removed_per_property[p]])
        em.row(["survivors", len(rep.survivors)])
        em.row(["total", rep.total])
        em.row(["density", rep.density])
        if args.emit_survivors:
            for m in rep.survivors.tolist():
                em.row(["survivor", m])
    finally:
        if close:
            stream.close()
    return 0


def cmd_decay(args) -> int:
    hi = 2 ** args.jmax
    table = _load_table(args, max(4 * hi + 2 * 10**4, 2 * 10**6))
    config = spectral.CouplingConfig.create("weak", args.phi, None, table)
    els = table.elements_positive
    anchors = els[(els > 2 ** (args.jmin - 1)) & (els <= hi)]
    records = spectral.weak_clump_batch(config, table, anchors)
    profile = _profile_from_args(args) if (args.profile or args.eps) else None
    rep = ergostat.decay_report(table, records, args.k, profile=profile,
                                jmin=args.jmin, jmax=args.jmax,
                                sample_size=None if args.census else args.sample,
                                seed=args.seed)
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        em.set_columns(["j", "count", "median", "comparison_curve"])
        for (j, cnt, med, curve) in rep.medians:
            em.row([j, cnt, med, curve])
        em.note(rep.note)
        if rep.s1_count is not None:
            em.note(f"s1_count: {rep.s1_count} "
                    f"s1_envelope_constant: {rep.s1_envelope_constant!r}")
    finally:
        if close:
            stream.close()
    return 0


def cmd_greens(args) -> int:
    x0 = (0.0, 0.0)
    if args.x0:
        parts = args.x0.split(",")
        x0 = (float(parts[0]), float(parts[1]))
    stream, close = _open_out(args)
    try:
        em = Emitter(stream, args.format, _config_dict(args))
        em.set_columns(["i", "j", "x1", "x2", "value"])
        tau = 2.0 * math.pi
        for i in range(args.grid):
            for j in range(args.grid):
                x = (tau * i / args.grid, tau * j / args.grid)
                try:
                    gv = greens.eval_greens(args.lambda_, x, x0, args.radius)
                    em.row([i, j, x[0], x[1], gv.value])
                except NumericalError:
                    em.row([i, j, x[0], x[1], None])
    finally:
        if close:
            stream.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torscat",
                                description="point-scatterer numerics on the square torus")
    p.add_argument("--version", action="version", version=f"torscat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, tol_default=1e-9):
        q.add_argument("--out", default="-", help="output file (default stdout)")
        q.add_argument("--format", default="csv", choices=("csv", "jsonl"))
        q.add_argument("--cache", default=None, help="sieve cache to load")
        q.add_argument("--tol", type=float, default=tol_default)
        q.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    q = sub.add_parser("sieve", help="build and cache the arithmetic table")
    q.add_argument("--limit", type=int, required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_sieve)

    q = sub.add_parser("spectrum", help="solve the interlacing spectrum")
    q.add_argument("--limit", type=int, required=True)
    q.add_argument("--phi", type=float, required=True)
    q.add_argument("--mode", choices=("weak", "strong"), default="weak")
    q.add_argument("--delta", type=float, default=None)
    common(q)
    q.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("secular", help="sample the secular function (figure data)")
    q.add_argument("--from", dest="from_", type=float, required=True)
    q.add_argument("--to", type=float, required=True)
    q.add_argument("--samples", type=int, required=True)
    q.add_argument("--phi", type=float, required=True)
    q.add_argument("--mode", choices=("weak", "strong"), default="weak")
    q.add_argument("--delta", type=float, default=None)
    common(q, tol_default=1e-6)
    q.set_defaults(func=cmd_secular)

    q = sub.add_parser("element", help="phase-space matrix elements")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--zeta", default=None, help="A,B (default 0,0)")
    q.add_argument("--lambda", dest="lambda_", type=float, default=None)
    q.add_argument("--all", action="store_true",
                   help="evaluate at every weak eigenvalue below --limit")
    q.add_argument("--limit", type=int, default=100)
    q.add_argument("--phi", type=float, default=0.0)
    common(q, tol_default=1e-7)
    q.set_defaults(func=cmd_element)

    q = sub.add_parser("stats", help="counting and correlation statistics")
    q.add_argument("kind", choices=("pairs", "moments", "wkl2", "landau", "hecke"))
    q.add_argument("--x", type=int, default=10**6)
    q.add_argument("--hmax", type=int, default=100)
    q.add_argument("--k", type=int, default=4)
    common(q)
    q.set_defaults(func=cmd_stats)

    q = sub.add_parser("filter", help="nine-property full-density filter")
    q.add_argument("--x", type=int, default=10**6)
    q.add_argument("--k", type=int, default=4)
    q.add_argument("--profile", default=None, help="JSON file of PropertyProfile fields")
    q.add_argument("--eps", type=float, default=None, help="uniform eps override")
    q.add_argument("--emit-survivors", action="store_true")
    common(q)
    q.set_defaults(func=cmd_filter)

    q = sub.add_parser("decay", help="matrix-element decay diagnostics")
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--jmin", type=int, default=10)
    q.add_argument("--jmax", type=int, default=16)
    q.add_argument("--phi", type=float, default=0.0)
    q.add_argument("--sample", type=int, default=10**4)
    q.add_argument("--census", action="store_true",
                   help="use every gap instead of the fixed-seed sample")
    q.add_argument("--seed", type=int, default=20260810)
    q.add_argument("--profile", default=None)
    q.add_argument("--eps", type=float, default=None)
    common(q, tol_default=1e-6)
    q.set_defaults(func=cmd_decay)

    q = sub.add_parser("greens", help="position-space eigenfunction grid")
    q.add_argument("--lambda", dest="lambda_", type=float, required=True)
    q.add_argument("--grid", type=int, default=32)
    q.add_argument("--radius", type=float, default=60.0)
    q.add_argument("--x0", default=None, help="scatterer position A,B")
    common(q, tol_default=1e-6)
    q.set_defaults(func=cmd_greens)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, CacheError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except NumericalError as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return 3
    except TorscatError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
