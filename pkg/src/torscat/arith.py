"""Sums-of-two-squares arithmetic.

Sieve-backed table of the set S = {n >= 0 : n = a^2 + b^2}, the lattice
representation count r2(n), the count omega1(n) of distinct prime divisors
p = 1 mod 4, canonical Gaussian-prime representations with their angles
theta_p, and the exponential sums

    w_k(n) = sum over z in Z[i], |z|^2 = n, of (z/|z|)^k,

which vanish unless 4 | k and satisfy w_0 = r2, |w_k| <= r2.

Conventions: 0 belongs to S with r2(0) = 1.  Statistical code elsewhere
works with S(x) = S intersect [1, x] (0 excluded); spectral sums keep the
n = 0 term.  r2 is filled from the multiplicative prime-power rule
(r2(p^e)/4 = e+1 for p = 1 mod 4, 1 for p = 2 or even powers of p = 3
mod 4, 0 otherwise); direct lattice enumeration is kept separate as the
oracle path.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from math import isqrt
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError, RangeError

# Addressable-memory guard for table construction.
MEMORY_GUARD = 2**31

# Below this, sin(k*theta_p) is treated as an exact zero and the Dirichlet
# kernel is replaced by its limit value (e+1) * sign(cos)^e.
DEGENERATE_SIN_EPS = 1e-12


@dataclass(eq=False)
class SumsOfTwoSquaresTable:
    """Immutable arithmetic table over [0, limit].

    membership[n] is True iff n is a sum of two squares; r2 and omega1 hold
    the per-n representation count and the number of distinct prime factors
    p = 1 mod 4.  spf (smallest prime factor) is a build-time auxiliary; a
    cache round trip drops it and it is rebuilt lazily on first use.
    """

    limit: int
    membership: np.ndarray  # bool,   length limit+1
    r2: np.ndarray          # uint32, length limit+1
    omega1: np.ndarray      # uint8,  length limit+1
    spf: Optional[np.ndarray] = None  # uint32 or None

    _elements: Optional[np.ndarray] = field(default=None, repr=False)
    _split_reps: Optional[tuple] = field(default=None, repr=False)
    _wk_arrays: dict = field(default_factory=dict, repr=False)
    _engines: dict = field(default_factory=dict, repr=False)

    @property
    def elements(self) -> np.ndarray:
        """Sorted array of all members of S in [0, limit], 0 included."""
        if self._elements is None:
            self._elements = np.flatnonzero(self.membership)
        return self._elements

    @property
    def elements_positive(self) -> np.ndarray:
        """Members of S in [1, limit] (the S(x) convention)."""
        return self.elements[1:]

    def count(self, x: int) -> int:
        """|S(x)| = #{n in S : 1 <= n <= x}."""
        if x > self.limit:
            raise RangeError(f"count({x}) exceeds table limit {self.limit}")
        return int(np.searchsorted(self.elements_positive, x, side="right"))

    def contains(self, n: int) -> bool:
        return 0 <= n <= self.limit and bool(self.membership[n])

    def next_above(self, lam: float) -> int:
        """Smallest element of S strictly larger than lam."""
        els = self.elements
        i = int(np.searchsorted(els, lam, side="right"))
        if i >= len(els):
            raise RangeError(f"no element of S above {lam} within table limit {self.limit}")
        return int(els[i])

    def ensure_spf(self) -> np.ndarray:
        if self.spf is None:
            self.spf = _spf_sieve(self.limit)
        return self.spf

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization [(p, e), ...] of n via the spf array."""
        if not (1 <= n <= self.limit):
            raise RangeError(f"n={n} outside [1, {self.limit}]")
        spf = self.ensure_spf()
        out = []
        while n > 1:
            p = int(spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out


@dataclass(frozen=True)
class GaussianRep:
    """Canonical two-square representation p = x^2 + y^2 with 0 <= y <= x.

    theta = arccos(x/sqrt(p)) lies in [0, pi/4) for split primes; p = 2 is
    stored with (x, y) = (1, 1) and flagged special (theta = pi/4).
    """

    p: int
    x: int
    y: int
    theta: float
    special: bool = False


@dataclass(frozen=True)
class LatticePointSet:
    """All integer points (a, b) with a^2 + b^2 = n."""

    n: int
    points: tuple

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ExponentialSumValue:
    n: int
    k: int
    value: float


@dataclass(frozen=True)
class NeighborSet:
    """The four nearest S-neighbors of m; None marks a table edge."""

    m: int
    m_minus2: Optional[int]
    m_minus: Optional[int]
    m_plus: Optional[int]
    m_plus2: Optional[int]


def _spf_sieve(limit: int) -> np.ndarray:
    """Smallest-prime-factor sieve; spf[0] = 0, spf[1] = 1."""
    spf = np.zeros(limit + 1, dtype=np.uint32)
    if limit >= 2:
        spf[2::2] = 2
    for p in range(3, isqrt(limit) + 1, 2):
        if spf[p] == 0:
            sl = spf[p * p:: 2 * p]  # odd multiples; even ones already carry 2
            sl[sl == 0] = p
    unmarked = np.flatnonzero(spf == 0)
    spf[unmarked] = unmarked.astype(np.uint32)
    if limit >= 1:
        spf[1] = 1
    return spf


def _primes_from_spf(spf: np.ndarray) -> np.ndarray:
    n = np.arange(len(spf), dtype=np.uint32)
    primes = np.flatnonzero(spf == n)
    return primes[primes >= 2]


def build_table(limit: int, keep_spf: bool = True) -> SumsOfTwoSquaresTable:
    """Build the arithmetic table on [0, limit].

    r2 and omega1 come from prime-power data pushed through per-prime sieve
    passes (slice updates for p <= sqrt(limit), a divisor-hyperbola batch
    for larger primes), so the construction is a deterministic serial
    computation regardless of build strategy.
    """
    if limit < 1:
        raise ConfigError("limit must be >= 1")
    if limit >= MEMORY_GUARD:
        raise ConfigError(f"limit {limit} exceeds the 2^31 memory guard")

    spf = _spf_sieve(limit)
    primes = _primes_from_spf(spf).astype(np.int64)
    sq = isqrt(limit)

    res = primes % 4
    p1 = primes[res == 1]
    p3 = primes[res == 3]
    p1_small = p1[p1 <= sq]
    p1_large = p1[p1 > sq]
    p3_small = p3[p3 <= sq]
    p3_large = p3[p3 > sq]

    # r2m accumulates prod(e+1) over p = 1 mod 4; viol counts primes
    # p = 3 mod 4 dividing n to odd order.
    r2m = np.ones(limit + 1, dtype=np.float64)
    viol = np.zeros(limit + 1, dtype=np.int8)
    om1 = np.zeros(limit + 1, dtype=np.uint8)

    for p in p1_small.tolist():
        om1[p::p] += 1
        q, e = p, 1
        while q <= limit:
            r2m[q::q] *= (e + 1) / e
            q *= p
            e += 1
    for p in p3_small.tolist():
        q, e = p, 1
        while q <= limit:
            # net effect per n: +1 iff v_p(n) is odd
            viol[q::q] += 1 if e % 2 == 1 else -1
            q *= p
            e += 1

    # Primes above sqrt(limit) divide n at most once: batch by cofactor m.
    def _large_pass(plist: np.ndarray, kind: str) -> None:
        if len(plist) == 0:
            return
        pmin = int(plist[0])
        m = 1
        while m * pmin <= limit:
            cnt = int(np.searchsorted(plist, limit // m, side="right"))
            if cnt == 0:
                break
            idx = plist[:cnt] * m
            if kind == "split":
                r2m[idx] *= 2.0
                om1[idx] += 1
            else:
                viol[idx] += 1
            m += 1

    _large_pass(p1_large, "split")
    _large_pass(p3_large, "inert")

    r2f = np.where(viol == 0, np.rint(4.0 * r2m), 0.0)
    peak = float(r2f.max())
    if peak >= 2.0**32:
        raise ConfigError("r2 exceeds the 32-bit storage contract")
    r2 = r2f.astype(np.uint32)
    r2[0] = 1

    membership = r2 > 0
    membership[0] = True

    return SumsOfTwoSquaresTable(
        limit=limit,
        membership=membership,
        r2=r2,
        omega1=om1,
        spf=spf if keep_spf else None,
    )


def r2(table: SumsOfTwoSquaresTable, n: int) -> int:
    """Exact representation count, signs and order included."""
    if not (0 <= n <= table.limit):
        raise RangeError(f"n={n} outside [0, {table.limit}]")
    return int(table.r2[n])


def omega1(table: SumsOfTwoSquaresTable, n: int) -> int:
    """Number of distinct prime divisors of n congruent to 1 mod 4."""
    if not (1 <= n <= table.limit):
        raise RangeError(f"n={n} outside [1, {table.limit}]")
    return int(table.omega1[n])


def lattice_points(n: int) -> LatticePointSet:
    """Direct enumeration of all (a, b) with a^2 + b^2 = n (oracle path)."""
    if n < 0:
        raise RangeError("n must be >= 0")
    pts = set()
    for a in range(isqrt(n) + 1):
        b2 = n - a * a
        b = isqrt(b2)
        if b * b == b2:
            pts.update({(a, b), (-a, b), (a, -b), (-a, -b),
                        (b, a), (b, -a), (-b, a), (-b, -a)})
    return LatticePointSet(n=n, points=tuple(sorted(pts)))


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid far beyond table scale."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _sqrt_minus_one(p: int) -> int:
    """A square root of -1 mod p for p = 1 mod 4."""
    for c in range(2, p):
        if pow(c, (p - 1) // 2, p) == p - 1:
            z = pow(c, (p - 1) // 4, p)
            if z * z % p == p - 1:
                return z
    raise DomainError(f"no quadratic non-residue found mod {p}")


def _cornacchia(p: int) -> tuple[int, int]:
    """Descent solving x^2 + y^2 = p from a root of -1 mod p."""
    z = _sqrt_minus_one(p)
    a, b = p, z
    lim = isqrt(p)
    while b > lim:
        a, b = b, a % b
    x = b
    y2 = p - x * x
    y = isqrt(y2)
    if y * y != y2:
        raise ArithmeticError(f"descent failed for p={p}")
    return max(x, y), min(x, y)


def _brute_two_squares(p: int) -> tuple[int, int]:
    for a in range(isqrt(p), 0, -1):
        b2 = p - a * a
        b = isqrt(b2)
        if b * b == b2:
            return max(a, b), min(a, b)
    raise DomainError(f"{p} has no two-square representation")


@functools.lru_cache(maxsize=None)
def two_square_rep(p: int) -> GaussianRep:
    """Canonical representation of p = 2 or a split prime.

    Cornacchia descent seeded by a square root of -1 mod p; brute-force
    search stands in below 10^6 if the descent ever fails.
    """
    if p == 2:
        return GaussianRep(p=2, x=1, y=1, theta=math.atan2(1.0, 1.0), special=True)
    if p < 2 or p % 4 != 1 or not _is_prime(p):
        raise DomainError(f"p={p} is not 2 or a prime congruent to 1 mod 4")
    try:
        x, y = _cornacchia(p)
    except ArithmeticError:
        if p < 10**6:
            x, y = _brute_two_squares(p)
        else:
            raise
    return GaussianRep(p=p, x=x, y=y, theta=math.atan2(y, x))


def wk_direct(n: int, k: int) -> ExponentialSumValue:
    """w_k(n) by direct enumeration of the lattice points of norm n."""
    if n < 1:
        raise RangeError("n must be >= 1")
    total = 0.0 + 0.0j
    for (a, b) in lattice_points(n).points:
        z = complex(a, b)
        total += (z / abs(z)) ** k
    if abs(total.imag) > 1e-10:
        raise ArithmeticError(f"w_k imaginary part {total.imag} exceeds 1e-10")
    return ExponentialSumValue(n=n, k=k, value=total.real)


def _dirichlet_factor(alpha: float, e: int) -> float:
    """sum_{l=0..e} exp(i*alpha*(e-2l)), real by symmetry.

    Equals sin((e+1)alpha)/sin(alpha) away from the zeros of sin(alpha);
    the limit value (e+1)*sign(cos alpha)^e takes over below the
    degeneracy threshold to avoid catastrophic cancellation.
    """
    s = math.sin(alpha)
    if abs(s) < DEGENERATE_SIN_EPS:
        sgn = 1.0 if math.cos(alpha) >= 0.0 else -1.0
        return (e + 1) * sgn**e
    return math.sin((e + 1) * alpha) / s


def wk(table: SumsOfTwoSquaresTable, n: int, k: int) -> ExponentialSumValue:
    """w_k(n) through the factorization of n.

    w_k(n)/4 is multiplicative with prime-power factors
    (-1)^(k e / 4) at p = 2, the Dirichlet kernel in k*theta_p at split
    primes, 1 at even powers of p = 3 mod 4 and 0 at odd ones.
    """
    if not (1 <= n <= table.limit):
        raise RangeError(f"n={n} outside [1, {table.limit}]")
    if k == 0:
        return ExponentialSumValue(n=n, k=0, value=float(table.r2[n]))
    if k % 4 != 0:
        return ExponentialSumValue(n=n, k=k, value=0.0)
    val = 4.0
    for p, e in table.factorize(n):
        if p == 2:
            if ((k // 4) * e) % 2 == 1:
                val = -val
        elif p % 4 == 3:
            if e % 2 == 1:
                return ExponentialSumValue(n=n, k=k, value=0.0)
        else:
            val *= _dirichlet_factor(k * two_square_rep(p).theta, e)
    return ExponentialSumValue(n=n, k=k, value=val)


def neighbors(table: SumsOfTwoSquaresTable, m: int) -> NeighborSet:
    """The two nearest S-neighbors on each side of m."""
    if not (1 <= m <= table.limit):
        raise RangeError(f"m={m} outside [1, {table.limit}]")
    if not table.membership[m]:
        raise DomainError(f"m={m} is not a sum of two squares")
    els = table.elements
    i = int(np.searchsorted(els, m))

    def at(j: int) -> Optional[int]:
        return int(els[j]) if 0 <= j < len(els) else None

    return NeighborSet(m=m, m_minus2=at(i - 2), m_minus=at(i - 1),
                       m_plus=at(i + 1), m_plus2=at(i + 2))


def split_prime_reps(table: SumsOfTwoSquaresTable, x: int):
    """Canonical reps of all split primes p <= x, as parallel arrays.

    Enumerates a > b >= 1 over the quarter disk and keeps a^2 + b^2 prime
    (primality read off the spf sieve); every split prime appears exactly
    once this way.  Returns (p, x, y, theta) sorted by p.
    """
    if x > table.limit:
        raise RangeError(f"x={x} exceeds table limit {table.limit}")
    cached = table._split_reps
    if cached is not None and cached[0] >= x:
        p, xx, yy, th = cached[1]
        cut = int(np.searchsorted(p, x, side="right"))
        return p[:cut], xx[:cut], yy[:cut], th[:cut]

    spf = table.ensure_spf()
    ps, xs, ys = [], [], []
    for b in range(1, isqrt(x // 2) + 1):
        amax = isqrt(x - b * b)
        if amax <= b:
            break
        a = np.arange(b + 1, amax + 1, dtype=np.int64)
        vals = a * a + b * b
        mask = spf[vals] == vals
        if mask.any():
            ps.append(vals[mask])
            xs.append(a[mask])
            ys.append(np.full(int(mask.sum()), b, dtype=np.int64))
    if ps:
        p = np.concatenate(ps)
        xx = np.concatenate(xs)
        yy = np.concatenate(ys)
        order = np.argsort(p, kind="stable")
        p, xx, yy = p[order], xx[order], yy[order]
    else:
        p = xx = yy = np.zeros(0, dtype=np.int64)
    th = np.arctan2(yy.astype(np.float64), xx.astype(np.float64))
    table._split_reps = (x, (p, xx, yy, th))
    return p, xx, yy, th


def wk_array(table: SumsOfTwoSquaresTable, k: int, upto: Optional[int] = None) -> np.ndarray:
    """Vectorized w_k(n) for all n in [0, upto]; index 0 is stored as 0.

    Same multiplicative evaluation as wk(), pushed through per-prime sieve
    passes: exact-exponent slices for p <= sqrt(limit) and a hyperbola
    batch for larger split primes.  Cached per (table, k) and grown on
    demand.
    """
    L = table.limit if upto is None else int(upto)
    if L > table.limit:
        raise RangeError(f"upto={L} exceeds table limit {table.limit}")
    cached = table._wk_arrays.get(k)
    if cached is not None and len(cached) >= L + 1:
        return cached[:L + 1]

    if k % 4 != 0:
        out = np.zeros(L + 1, dtype=np.float64)
        table._wk_arrays[k] = out
        return out
    if k == 0:
        out = table.r2[:L + 1].astype(np.float64)
        out[0] = 0.0
        table._wk_arrays[k] = out
        return out

    V = np.ones(L + 1, dtype=np.float64)
    if (k // 4) % 2 == 1:
        q = 2
        while q <= L:
            V[q::q] *= -1.0
            q *= 2

    sq = isqrt(L)
    p_all, _, _, th_all = split_prime_reps(table, L)
    small_cut = int(np.searchsorted(p_all, sq, side="right"))

    for i in range(small_cut):
        p = int(p_all[i])
        alpha = k * float(th_all[i])
        q, e = p, 1
        while q <= L:
            f_e = _dirichlet_factor(alpha, e)
            if q * p > L:
                V[q::q] *= f_e  # cofactors here cannot contain another p
            else:
                mvals = np.arange(1, L // q + 1, dtype=np.int64)
                sel = mvals[mvals % p != 0] * q
                V[sel] *= f_e
            q *= p
            e += 1

    p_large = p_all[small_cut:]
    f_large = 2.0 * np.cos(k * th_all[small_cut:])
    if len(p_large) > 0:
        pmin = int(p_large[0])
        m = 1
        while m * pmin <= L:
            cnt = int(np.searchsorted(p_large, L // m, side="right"))
            if cnt == 0:
                break
            V[p_large[:cnt] * m] *= f_large[:cnt]
            m += 1

    V[~table.membership[:L + 1]] = 0.0
    V *= 4.0
    V[0] = 0.0
    table._wk_arrays[k] = V
    return V
