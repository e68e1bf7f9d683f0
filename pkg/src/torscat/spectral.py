"""Secular equations of the point scatterer and the interlacing spectrum.

Weak coupling solves

    F(lambda) = sum over n in S of r2(n) (1/(n - lambda) - n/(n^2+1))
              = c0 tan(phi/2),        c0 = sum r2(n)/(n^2+1),

with the sum taken over the full table up to a cut N(lambda, tol) plus the
analytic tail -pi log((N-lambda)/sqrt(N^2+1)) and an exact boundary
correction from the known lattice-count remainder at the cut.  Strong
coupling replaces the sum by the finite window |n - n_plus(lambda)| <=
n_plus(lambda)^delta, evaluated exactly.

F is strictly increasing between consecutive elements of S and runs from
-inf to +inf across each gap, so every gap (m_-, m) carries exactly one
root lambda_m < m; the half line left of 0 carries the lowest eigenvalue
(always negative in weak coupling).

Heavy evaluation goes through PoleSumEngine, which stores per-block
Chebyshev-style moments of the weight array and expands 1/(n - lambda)
and 1/(n - lambda)^2 in inverse powers of the block-center distance; only
blocks near lambda are summed term by term.  Results are deterministic
and identical for serial and threaded spectrum runs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import isqrt
from typing import Optional

import numpy as np

from . import arith
from .errors import (ConfigError, DomainError, PoleProximityError, RangeError,
                     SolverError)

# Pole guard: evaluation rejects lambda within this distance of S.
POLE_EPS = 1e-12

# Gauss-circle fluctuation constant in the truncation error bound
# C sqrt(N) / (N - lambda)^2.
GAUSS_C = 10.0

_BLOCK = 512
_QMAX = 24  # inverse-distance expansion order; ratio <= 1/4 per term


def _c0_lattice(tol: float) -> tuple[float, int]:
    """c0 by direct lattice enumeration, no table required.

    sum_{n in S} r2(n)/(n^2+1) = sum over xi in Z^2, |xi|^2 <= N of
    1/(|xi|^4 + 1) plus an integral tail with an exact boundary term from
    the enumerated lattice count.
    """
    N = max(1000, int(math.ceil((25.0 / tol) ** (2.0 / 3.0))))
    total = 0.0
    count = 0
    amax = isqrt(N)
    for a in range(amax + 1):
        bmax = isqrt(N - a * a)
        b = np.arange(-bmax, bmax + 1, dtype=np.int64)
        n = a * a + b * b
        terms = 1.0 / (n.astype(np.float64) ** 2 + 1.0)
        w = 1.0 if a == 0 else 2.0  # +-a halves
        total += w * float(terms.sum())
        count += w * len(b)
    x0 = N + 0.5
    tail = math.pi * (math.pi / 2.0 - math.atan(x0))
    excess = (count - 1) - math.pi * x0  # lattice count minus area, origin removed
    boundary = -excess / (x0 * x0 + 1.0)
    return total + tail + boundary, N


_c0_cache: dict[float, float] = {}


def compute_c0(tol: float, table: Optional[arith.SumsOfTwoSquaresTable] = None) -> float:
    """The secular constant c0 with absolute error <= tol.

    Explicit summation to N = (25/tol)^(2/3) with the Gauss-mean integral
    tail; the table, when supplied and large enough, provides r2 directly,
    otherwise the sum runs over the lattice.
    """
    if not (1e-14 < tol < 1.0):
        raise ConfigError("tol must lie in (1e-14, 1)")
    key = float(tol)
    if key in _c0_cache:
        return _c0_cache[key]
    N = max(1000, int(math.ceil((25.0 / tol) ** (2.0 / 3.0))))
    if table is not None and table.limit >= N:
        n = np.arange(N + 1, dtype=np.float64)
        main = float(np.dot(table.r2[:N + 1].astype(np.float64), 1.0 / (n * n + 1.0)))
        x0 = N + 0.5
        tail = math.pi * (math.pi / 2.0 - math.atan(x0))
        excess = float(table.r2[:N + 1].sum()) - 1.0 - math.pi * x0
        val = main + tail - excess / (x0 * x0 + 1.0)
    else:
        val, _ = _c0_lattice(tol)
    _c0_cache[key] = val
    return val


@dataclass(frozen=True)
class CouplingConfig:
    """Coupling mode, extension parameter phi, and the cached right side."""

    mode: str                  # "weak" | "strong"
    phi: float
    delta: Optional[float]
    c0: float
    rhs: float

    @staticmethod
    def create(mode: str, phi: float, delta: Optional[float] = None,
               table: Optional[arith.SumsOfTwoSquaresTable] = None,
               c0_tol: float = 1e-9) -> "CouplingConfig":
        if mode not in ("weak", "strong"):
            raise ConfigError(f"unknown mode {mode!r}")
        if not (-math.pi < phi < math.pi):
            raise ConfigError("phi must lie strictly inside (-pi, pi); "
                              "phi = pi is the unperturbed Laplacian")
        if mode == "strong":
            if delta is None:
                delta = 0.25
            if not (0.0 < delta < 1.0):
                raise ConfigError("delta must lie in (0, 1)")
        else:
            delta = None
        c0 = compute_c0(c0_tol, table)
        return CouplingConfig(mode=mode, phi=phi, delta=delta,
                              c0=c0, rhs=c0 * math.tan(phi / 2.0))


@dataclass(frozen=True)
class SecularEvaluation:
    lambda_: float
    value: float
    truncation_bound: int
    tail_estimate: float
    error_bound: float


@dataclass(frozen=True)
class EigenvalueRecord:
    """Solved root in the gap (m_minus, m); m_minus None marks -inf.

    offset holds m - lambda_m at full precision (the solver works in the
    distance-to-pole variable, which stays accurate when the root hugs m).
    """

    m: int
    m_minus: Optional[int]
    lambda_: float
    residual: float
    iterations: int
    offset: float = 0.0


@dataclass(frozen=True)
class InterlacingSequence:
    values: tuple
    source: str = "solver"

    @staticmethod
    def from_records(records: list) -> "InterlacingSequence":
        return InterlacingSequence(values=tuple(r.lambda_ for r in records), source="solver")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    message: Optional[str] = None


class PoleSumEngine:
    """Block-moment evaluation of sum_n w(n)/(n-lambda)^s for s = 1, 2.

    Blocks of _BLOCK integers store scaled moments M[q, j] =
    sum_{n in block j} w(n) ((n - c_j)/h)^q; for blocks at distance
    >= 2*_BLOCK from lambda the kernels are geometric series in
    (n - c_j)/(c_j - lambda) with term ratio <= 1/4, truncated at _QMAX.
    Near blocks are summed exactly.
    """

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=np.float64)
        self.size = len(w)
        nb = (self.size + _BLOCK - 1) // _BLOCK
        pad = nb * _BLOCK - self.size
        if pad:
            w = np.concatenate([w, np.zeros(pad)])
        self.weights = w
        self.nblocks = nb
        self.h = _BLOCK / 2.0
        self.centers = np.arange(nb, dtype=np.float64) * _BLOCK + (_BLOCK - 1) / 2.0
        t = (np.arange(_BLOCK, dtype=np.float64) - (_BLOCK - 1) / 2.0) / self.h
        tp = np.vstack([t**q for q in range(_QMAX + 1)])      # (Q+1, B)
        M = tp @ w.reshape(nb, _BLOCK).T                       # (Q+1, nb)
        self.m1 = M
        self.m2 = M * np.arange(1, _QMAX + 2, dtype=np.float64)[:, None]
        bsums = w.reshape(nb, _BLOCK).sum(axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(bsums)])   # cum[j] = sum below j*B

    def max_cut(self) -> int:
        return self.nblocks * _BLOCK

    def cum_below(self, ncut: int) -> float:
        """sum of weights over [0, ncut), ncut a block multiple."""
        return float(self.cum[ncut // _BLOCK])

    def _near_range(self, lam: float, nb: int):
        lo = (lam - 2.0 * _BLOCK - (_BLOCK - 1) / 2.0) / _BLOCK
        hi = (lam + 2.0 * _BLOCK - (_BLOCK - 1) / 2.0) / _BLOCK
        ja = max(0, min(nb, int(math.floor(lo)) + 1))
        jb = max(ja, min(nb, int(math.ceil(hi))))
        return ja, jb

    def sums(self, anchor: float, d: float, ncut: int) -> tuple[float, float]:
        """(S1, S2) = (sum w/(n-lam), sum w/(n-lam)^2) over n in [0, ncut).

        The spectral parameter is lam = anchor - d.  With anchor an integer
        (the right gap endpoint) every kernel distance is formed as the
        exact integer difference n - anchor plus d, so evaluations stay
        fully accurate arbitrarily close to the pole.  anchor = lam, d = 0
        recovers the plain evaluation.
        """
        lam = anchor - d
        nb = ncut // _BLOCK
        if nb > self.nblocks:
            raise RangeError(f"cut {ncut} exceeds engine size {self.max_cut()}")
        ja, jb = self._near_range(lam, nb)
        h = self.h
        u = ((self.centers[:nb] - anchor) + d) / h
        inv = np.zeros(nb)
        np.divide(1.0, u, out=inv, where=np.abs(u) >= 4.0)
        if ja < jb:
            inv[ja:jb] = 0.0  # near blocks go through the exact path below
        minus_inv = -inv
        w1 = self.m1[_QMAX, :nb].copy()
        w2 = self.m2[_QMAX, :nb].copy()
        for q in range(_QMAX - 1, -1, -1):
            w1 *= minus_inv
            w1 += self.m1[q, :nb]
            w2 *= minus_inv
            w2 += self.m2[q, :nb]
        s1 = float(np.dot(w1, inv)) / h
        s2 = float(np.dot(w2, inv * inv)) / (h * h)
        if ja < jb:
            lo = ja * _BLOCK
            hi = min(jb * _BLOCK, self.size)
            if lo < hi:
                dv = (np.arange(lo, hi, dtype=np.float64) - anchor) + d
                # lam may sit on an integer outside the weight support;
                # dodge the 0/0 there (the weight is zero).
                dv[dv == 0.0] = 1.0
                wn = self.weights[lo:hi]
                s1 += float(np.sum(wn / dv))
                s2 += float(np.sum(wn / (dv * dv)))
        return s1, s2


class SpectralContext:
    """Per-table evaluation state for the weak secular function."""

    def __init__(self, table: arith.SumsOfTwoSquaresTable):
        self.table = table
        w = table.r2.astype(np.float64)
        self.engine = PoleSumEngine(w)
        n = np.arange(len(w), dtype=np.float64)
        kterm = w * (n / (n * n + 1.0))
        nb = self.engine.nblocks
        pad = nb * _BLOCK - len(kterm)
        if pad:
            kterm = np.concatenate([kterm, np.zeros(pad)])
        self.kcum = np.concatenate([[0.0], np.cumsum(kterm.reshape(nb, _BLOCK).sum(axis=1))])

    def choose_cut(self, lam: float, tol: float) -> int:
        """Doubling ladder from max(4 lam, lam + 1e4) until the bound < tol."""
        n0 = max(4.0 * lam, lam + 1e4, 1e4)
        n = int(math.ceil(n0 / _BLOCK)) * _BLOCK
        nmax = self.engine.max_cut()
        while True:
            x0 = n - 0.5
            bound = GAUSS_C * math.sqrt(x0) / (x0 - lam) ** 2
            if bound < tol:
                return n
            if n >= nmax:
                raise RangeError(
                    f"table limit {self.table.limit} too small for tol={tol} at lambda={lam}")
            n = min(2 * n, nmax)

    def evaluate_weak(self, lam: float, tol: float, ncut: Optional[int] = None,
                      anchor: Optional[float] = None,
                      d: float = 0.0) -> tuple[float, float, int, float, float]:
        """Returns (value, derivative, N, tail_estimate, error_bound).

        When anchor is given the evaluation point is lam = anchor - d with
        kernel distances formed exactly relative to the integer anchor.
        """
        if anchor is None:
            anchor, d = lam, 0.0
        else:
            lam = anchor - d
        n = self.choose_cut(lam, tol) if ncut is None else ncut
        s1, s2 = self.engine.sums(anchor, d, n)
        kpart = float(self.kcum[n // _BLOCK])
        x0 = n - 0.5
        dist = (x0 - anchor) + d  # x0 - lam, exactly
        excess = self.engine.cum_below(n) - math.pi * x0  # R(N-1) - pi x0
        g = 1.0 / dist - x0 / (x0 * x0 + 1.0)
        tail = -math.pi * math.log(dist / math.sqrt(x0 * x0 + 1.0)) - excess * g
        value = s1 - kpart + tail
        deriv = s2 + math.pi / dist - excess / (dist * dist)
        bound = GAUSS_C * math.sqrt(x0) / (dist * dist)
        return value, deriv, n, tail, bound


def _context(table: arith.SumsOfTwoSquaresTable) -> SpectralContext:
    ctx = table._engines.get("spectral")
    if ctx is None:
        ctx = SpectralContext(table)
        table._engines["spectral"] = ctx
    return ctx


def _check_pole(table: arith.SumsOfTwoSquaresTable, lam: float) -> None:
    c = int(round(lam))
    if 0 <= c <= table.limit and table.membership[c] and abs(lam - c) < POLE_EPS:
        raise PoleProximityError(f"lambda={lam} within {POLE_EPS} of eigenvalue {c}")


def _strong_window(table: arith.SumsOfTwoSquaresTable, config: CouplingConfig,
                   lam: float) -> tuple[np.ndarray, np.ndarray, int]:
    m = table.next_above(lam)
    width = float(m) ** config.delta
    lo = max(0.0, m - width)
    hi = m + width
    if hi > table.limit:
        raise RangeError(f"strong window [{lo}, {hi}] exceeds table limit {table.limit}")
    els = table.elements
    i0 = int(np.searchsorted(els, lo, side="left"))
    i1 = int(np.searchsorted(els, hi, side="right"))
    nvals = els[i0:i1].astype(np.float64)
    rvals = table.r2[els[i0:i1]].astype(np.float64)
    return nvals, rvals, int(math.floor(hi))


def secular(config: CouplingConfig, table: arith.SumsOfTwoSquaresTable,
            lam: float, tol: float = 1e-9) -> SecularEvaluation:
    """Evaluate the secular sum at lambda (left side of the quantization)."""
    if tol <= 0:
        raise ConfigError("tol must be positive")
    _check_pole(table, lam)
    if config.mode == "weak":
        value, _, n, tail, bound = _context(table).evaluate_weak(lam, tol)
        return SecularEvaluation(lambda_=lam, value=value, truncation_bound=n,
                                 tail_estimate=tail, error_bound=bound)
    nvals, rvals, hi = _strong_window(table, config, lam)
    value = float(np.sum(rvals * (1.0 / (nvals - lam) - nvals / (nvals * nvals + 1.0))))
    return SecularEvaluation(lambda_=lam, value=value, truncation_bound=hi,
                             tail_estimate=0.0, error_bound=0.0)


def _eval_f_at_offset(config: CouplingConfig, ctx: SpectralContext, anchor: int,
                      d: float, tol: float, ncut: Optional[int]) -> tuple[float, float]:
    """(F - rhs, dF/d(offset)) at lam = anchor - d; note dF/dd = -F'(lam)."""
    if config.mode == "weak":
        value, deriv, _, _, _ = ctx.evaluate_weak(0.0, tol, ncut=ncut, anchor=anchor, d=d)
    else:
        nvals, rvals, _ = _strong_window(ctx.table, config, anchor - d)
        dist = (nvals - anchor) + d
        value = float(np.sum(rvals * (1.0 / dist - nvals / (nvals * nvals + 1.0))))
        deriv = float(np.sum(rvals / (dist * dist)))
    return value - config.rhs, -deriv


def solve_interval(config: CouplingConfig, table: arith.SumsOfTwoSquaresTable,
                   left: Optional[int], right: int, tol: float = 1e-9,
                   max_iter: int = 200) -> EigenvalueRecord:
    """Unique root of F = rhs in the gap (left, right); left None means -inf.

    Bisection-safeguarded Newton on F as a function of the offset
    d = right - lambda, on which F is strictly decreasing from +inf; a
    fixed truncation cut per gap keeps F exactly monotone across solver
    steps.  The bracket starts a guard of 1e-9 gap widths inside the
    endpoints; in the lowest interval the far end doubles outward until
    the sign changes.
    """
    ctx = _context(table)
    residual_target = tol / 10.0
    ncut = None
    if config.mode == "weak":
        midpoint = right - 0.5 if left is None else 0.5 * (left + right)
        ncut = ctx.choose_cut(midpoint, tol)

    # F(d) - rhs is positive at small d (pole at the anchor) and the root
    # lies where it crosses zero going right.
    if left is None:
        a = 1e-9  # d measured from the anchor = right
        fa, _ = _eval_f_at_offset(config, ctx, right, a, tol, ncut)
        if fa <= 0.0:
            raise SolverError(f"no sign change at right guard of lowest interval (F-rhs={fa})")
        b = 1.0
        fb, _ = _eval_f_at_offset(config, ctx, right, b, tol, ncut)
        expansions = 0
        while fb > 0.0:
            b *= 2.0
            expansions += 1
            if expansions > 80:
                raise SolverError("lowest interval: no sign change found while expanding left")
            if config.mode == "weak":
                ncut = ctx.choose_cut(right - b, tol)
            fb, _ = _eval_f_at_offset(config, ctx, right, b, tol, ncut)
    else:
        g = right - left
        a = g * 1e-9
        b = g * (1.0 - 1e-9)
        fa, _ = _eval_f_at_offset(config, ctx, right, a, tol, ncut)
        fb, _ = _eval_f_at_offset(config, ctx, right, b, tol, ncut)
        if not (fb < 0.0 < fa):
            raise SolverError(f"no sign change inside gap ({left}, {right}): "
                              f"F-rhs = [{fb}, {fa}]")

    d = 0.5 * (a + b)
    fx, dfx = _eval_f_at_offset(config, ctx, right, d, tol, ncut)
    iterations = 1
    while abs(fx) > residual_target and iterations < max_iter:
        if fx > 0.0:
            a = d
        else:
            b = d
        if b - a <= 2.0 * math.ulp(b):
            break
        step = fx / dfx if dfx < 0.0 else math.inf
        dn = d - step
        if not (a < dn < b):
            dn = 0.5 * (a + b)
        d = dn
        fx, dfx = _eval_f_at_offset(config, ctx, right, d, tol, ncut)
        iterations += 1
    return EigenvalueRecord(m=right, m_minus=left, lambda_=right - d,
                            residual=abs(fx), iterations=iterations, offset=d)


def recheck_residual(config: CouplingConfig, table: arith.SumsOfTwoSquaresTable,
                     record: EigenvalueRecord, tol: float = 1e-9,
                     factor: int = 2) -> float:
    """|F(lambda_m) - rhs| re-evaluated with the truncation cut scaled up.

    Strong mode has no truncation (the window sum is exact), so the
    residual is simply recomputed.
    """
    ctx = _context(table)
    if config.mode == "weak":
        lam = record.m - record.offset
        n = ctx.choose_cut(lam, tol)
        n = min(n * factor, ctx.engine.max_cut())
        value, _, _, _, _ = ctx.evaluate_weak(0.0, tol, ncut=n,
                                              anchor=record.m, d=record.offset)
        return abs(value - config.rhs)
    fx, _ = _eval_f_at_offset(config, ctx, record.m, record.offset, tol, None)
    return abs(fx)


def _gaps_below(table: arith.SumsOfTwoSquaresTable, limit: int) -> list[tuple[Optional[int], int]]:
    els = table.elements
    cut = int(np.searchsorted(els, limit, side="right"))
    gaps: list[tuple[Optional[int], int]] = [(None, int(els[0]))]
    for i in range(1, cut):
        gaps.append((int(els[i - 1]), int(els[i])))
    return gaps


def _spectrum_strong_batch(config: CouplingConfig, table: arith.SumsOfTwoSquaresTable,
                           gaps: list, tol: float) -> list[EigenvalueRecord]:
    """All strong-mode gap roots at once: lockstep bisection + Newton polish.

    The window of gap (m_-, m) is fixed (n_plus = m throughout the gap), so
    per-gap windows are precomputed and F evaluated for every gap per
    iteration with one segmented reduction.
    """
    els = table.elements
    rights = np.array([g[1] for g in gaps], dtype=np.int64)
    widths = rights.astype(np.float64) - np.array(
        [g[0] for g in gaps], dtype=np.float64)  # gap widths

    win = rights.astype(np.float64) ** config.delta
    hi = rights + win
    if float(hi.max()) > table.limit:
        bad = int(rights[np.argmax(hi)])
        raise RangeError(f"strong window for m={bad} exceeds table limit")
    idx_lo = np.searchsorted(els, np.maximum(0.0, rights - win), side="left")
    idx_hi = np.searchsorted(els, hi, side="right")
    counts = idx_hi - idx_lo
    bounds = np.concatenate([[0], np.cumsum(counts)])
    ptr = bounds[:-1]
    total = int(bounds[-1])
    flat_idx = (np.arange(total, dtype=np.int64)
                - np.repeat(ptr, counts) + np.repeat(idx_lo, counts))
    flat_els = els[flat_idx]
    nflat = flat_els.astype(np.float64)
    wflat = table.r2[flat_els].astype(np.float64)
    const = np.add.reduceat(wflat * nflat / (nflat * nflat + 1.0), ptr) + config.rhs
    gidx = np.repeat(np.arange(len(gaps)), counts)
    # offsets d = m - lambda; n - lambda = (n - m) + d held exactly
    base = (flat_els - np.repeat(rights, counts)).astype(np.float64)

    def f_all(d: np.ndarray) -> np.ndarray:
        terms = wflat / (base + d[gidx])
        return np.add.reduceat(terms, ptr) - const

    da = widths * 1e-9
    db = widths * (1.0 - 1e-9)
    fa = f_all(da)
    fb = f_all(db)
    # F decreases in d from +inf at the anchor pole.  A gap whose window
    # misses the left pole can be rootless (the windowed sum never crosses
    # rhs); such gaps carry no new eigenvalue.
    good = (fa > 0.0) & (fb < 0.0)
    da = np.where(good, da, widths * 0.25)
    db = np.where(good, db, widths * 0.75)
    for _ in range(70):
        mid = 0.5 * (da + db)
        fm = f_all(mid)
        pos = fm > 0.0
        da = np.where(pos, mid, da)
        db = np.where(pos, db, mid)
    d = 0.5 * (da + db)
    for _ in range(3):
        dist = base + d[gidx]
        fx = np.add.reduceat(wflat / dist, ptr) - const
        dfx = np.add.reduceat(wflat / (dist * dist), ptr)  # = -dF/dd
        dn = d + fx / dfx
        ok = (dn > da) & (dn < db)
        d = np.where(ok, dn, d)
    res = np.abs(f_all(d))
    records = [EigenvalueRecord(m=g[1], m_minus=g[0], lambda_=float(g[1] - d[i]),
                                residual=float(res[i]), iterations=73,
                                offset=float(d[i]))
               for i, g in enumerate(gaps) if good[i]]
    for rec in records:
        if rec.residual > tol:
            raise SolverError(f"strong-mode residual {rec.residual} above {tol} at m={rec.m}")
    return records


def spectrum(config: CouplingConfig, table: arith.SumsOfTwoSquaresTable,
             limit: int, tol: float = 1e-9, threads: int = 1) -> list[EigenvalueRecord]:
    """One record per gap with right endpoint m <= limit, ordered by m.

    Weak mode always includes the lowest (negative) eigenvalue in the
    half-infinite interval.  Strong mode includes a lowest record only when
    the windowed equation has a root left of 0, which requires rhs > 0;
    otherwise the record list starts at the first gap.
    """
    if limit > table.limit:
        raise RangeError(f"limit {limit} exceeds table limit {table.limit}")
    gaps = _gaps_below(table, limit)
    lowest, finite_gaps = gaps[0], gaps[1:]

    records: list[EigenvalueRecord] = []
    if config.mode == "weak":
        records.append(solve_interval(config, table, *lowest, tol=tol))
    else:
        # Window left of 0 is {0}: F = -1/lambda ranges over (0, inf),
        # so a negative root exists only for rhs > 0.
        if config.rhs > 0.0:
            records.append(solve_interval(config, table, *lowest, tol=tol))

    if config.mode == "strong":
        records.extend(_spectrum_strong_batch(config, table, finite_gaps, tol))
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(
                lambda g: solve_interval(config, table, g[0], g[1], tol=tol), finite_gaps))
        records.extend(out)
    else:
        for g in finite_gaps:
            records.append(solve_interval(config, table, g[0], g[1], tol=tol))
    return records


def weak_clump_batch(config: CouplingConfig, table: arith.SumsOfTwoSquaresTable,
                     anchors: np.ndarray, window: int = 1024,
                     chunk: int = 8192) -> list[EigenvalueRecord]:
    """Bulk weak-mode roots for diagnostics, one per requested anchor m.

    Evaluates F on the exact window S intersect [m - window, m + window]
    plus a closed-form remainder (Gauss-mean integrals with the exact
    lattice-count boundary terms at both window edges).  The remainder
    model is good to a few tenths, which places each root to a relative
    offset error around 1e-3: ample for statistics over many gaps, far
    too loose for the per-gap solver contracts (use solve_interval for
    those).  Roots stay bracketed inside their gaps, so the output always
    interlaces.  Deterministic; independent of chunking.
    """
    if config.mode != "weak":
        raise ConfigError("weak_clump_batch runs in weak mode only")
    E = table.elements
    r2f = table.r2.astype(np.float64)
    anchors = np.asarray(anchors, dtype=np.int64)
    if len(anchors) == 0:
        return []
    if anchors.max() + window > table.limit:
        raise RangeError("anchor window exceeds the table")
    hi_need = int(anchors.max()) + window + 2
    cum = np.concatenate([[0.0], np.cumsum(r2f[:hi_need])])  # cum[t] = sum_{n<t} r2

    pos = np.searchsorted(E, anchors)
    if not np.array_equal(E[pos], anchors) or pos.min() < 1:
        raise DomainError("anchors must be members of S with a left neighbor")
    lefts = E[pos - 1]
    gapw = (anchors - lefts).astype(np.float64)

    def edge_remainder(m, d, lam, xlo, xhi, cum_lo, cum_hi, side_lo_empty):
        """Closed-form model of the sum outside [xlo, xhi] at lam = m - d."""
        # antiderivative of 1/(t-lam) - t/(t^2+1)
        def anti(t):
            return np.log(np.abs(t - lam)) - 0.5 * np.log(t * t + 1.0)

        out = np.zeros_like(lam)
        # upper part [xhi, inf): integral + boundary correction
        e_hi = cum_hi - math.pi * xhi
        g_hi = 1.0 / (xhi - lam) - xhi / (xhi * xhi + 1.0)
        out += -anti(xhi) * math.pi - e_hi * g_hi
        # lower part (0.5, xlo]: absent when the window reaches 0
        live = ~side_lo_empty
        if np.any(live):
            a = np.full_like(lam, 0.5)
            e_lo = cum_lo - math.pi * xlo
            g_lo = 1.0 / (xlo - lam) - xlo / (xlo * xlo + 1.0)
            e_a = 1.0 - math.pi * 0.5  # r2 mass below 0.5 is the n = 0 term
            g_a = 1.0 / (0.5 - lam) - 0.5 / 1.25
            low = (math.pi * (anti(xlo) - anti(a))
                   + e_lo * g_lo - e_a * g_a
                   - 1.0 / lam)  # n = 0 term, exact
            out += np.where(live, low, 0.0)
        return out

    records: list[EigenvalueRecord] = []
    for c0 in range(0, len(anchors), chunk):
        m = anchors[c0:c0 + chunk]
        g = gapw[c0:c0 + chunk]
        lo = np.maximum(m - window, 0)
        hi = m + window
        ilo = np.searchsorted(E, lo, side="left")
        ihi = np.searchsorted(E, hi, side="right")
        counts = ihi - ilo
        bounds = np.concatenate([[0], np.cumsum(counts)])
        ptr = bounds[:-1]
        total = int(bounds[-1])
        flat_idx = (np.arange(total, dtype=np.int64)
                    - np.repeat(ptr, counts) + np.repeat(ilo, counts))
        nf = E[flat_idx]
        base = (nf - np.repeat(m, counts)).astype(np.float64)
        wf = r2f[nf]
        nff = nf.astype(np.float64)
        kconst = np.add.reduceat(wf * nff / (nff * nff + 1.0), ptr) + config.rhs
        gidx = np.repeat(np.arange(len(m)), counts)

        mf = m.astype(np.float64)
        xlo = mf - window - 0.5
        xhi = mf + window + 0.5
        side_lo_empty = xlo <= 0.5
        cum_lo = cum[np.maximum(m - window, 0)]
        cum_hi = cum[m + window + 1]

        def f_all(d):
            lam = mf - d
            near = np.add.reduceat(wf / (base + d[gidx]), ptr)
            far = edge_remainder(mf, d, lam, xlo, xhi, cum_lo, cum_hi, side_lo_empty)
            return near + far - kconst

        da = g * 1e-9
        db = g * (1.0 - 1e-9)
        for _ in range(25):
            mid = 0.5 * (da + db)
            pos_f = f_all(mid) > 0.0
            da = np.where(pos_f, mid, da)
            db = np.where(pos_f, db, mid)
        d = 0.5 * (da + db)
        for _ in range(2):
            dist = base + d[gidx]
            fx = f_all(d)
            dfx = np.add.reduceat(wf / (dist * dist), ptr)  # = -dF/dd, near part
            dn = d + fx / dfx
            ok = (dn > da) & (dn < db)
            d = np.where(ok, dn, d)
        res = np.abs(f_all(d))
        for i in range(len(m)):
            records.append(EigenvalueRecord(
                m=int(m[i]), m_minus=int(lefts[c0 + i]), lambda_=float(m[i] - d[i]),
                residual=float(res[i]), iterations=27, offset=float(d[i])))
    return records


def validate_interlacing(seq: InterlacingSequence,
                         table: arith.SumsOfTwoSquaresTable) -> ValidationReport:
    """Accept iff strictly increasing with exactly one value per spanned gap.

    A value below min S sits in the half-infinite lowest interval; spanned
    means every gap between the first and last value's gaps inclusive.
    """
    vals = np.asarray(seq.values, dtype=np.float64)
    if len(vals) == 0:
        return ValidationReport(ok=False, message="empty sequence")
    if np.any(np.diff(vals) <= 0.0):
        i = int(np.flatnonzero(np.diff(vals) <= 0.0)[0])
        return ValidationReport(ok=False, message=f"not strictly increasing at index {i}")
    if vals[-1] > table.limit:
        return ValidationReport(ok=False, message="sequence exceeds table range")
    els = table.elements
    onel = np.isin(np.round(vals), els) & (np.abs(vals - np.round(vals)) == 0.0)
    if np.any(onel):
        i = int(np.flatnonzero(onel)[0])
        return ValidationReport(ok=False,
                                message=f"value {vals[i]} coincides with a Laplace eigenvalue")
    # gap index g: value in (els[g-1], els[g]); g = 0 is the lowest interval
    gidx = np.searchsorted(els, vals, side="left")
    counts = np.bincount(gidx, minlength=int(gidx[-1]) + 1)
    for g in range(int(gidx[0]), int(gidx[-1]) + 1):
        if counts[g] != 1:
            left = "-inf" if g == 0 else str(int(els[g - 1]))
            return ValidationReport(
                ok=False,
                message=f"gap ({left}, {int(els[g])}) contains {int(counts[g])} values")
    return ValidationReport(ok=True)
