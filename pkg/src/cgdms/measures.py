"""Invariant measures and their quotient values.

Periodic-orbit measures are evaluated exactly up to a coding enclosure of
the cycle's fixed point; Bernoulli measures combine exact potential means
with per-symbol brackets of the geometric potential.  Enclosure endpoints
never depend on Monte Carlo sampling: seeded sampling only adds a separate
statistical estimate with a standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidWordError
from .potentials import PotentialVector, cycle_birkhoff
from .symbolic import Word, enumerate_words, find_irreducibility_witness
from .system import SystemDescriptor
from .util import Enclosure

BASEL_SUM = math.pi ** 2 / 6.0


@dataclass(frozen=True)
class PeriodicOrbitMeasure:
    """Equidistribution on one periodic orbit."""

    cycle: Word
    period: int
    birkhoff_J: tuple
    birkhoff_I: Enclosure

    def __post_init__(self):
        if self.birkhoff_I.lo <= 0.0:
            raise ValueError("per-period geometric sum must be positive")


@dataclass(frozen=True)
class BernoulliSpec:
    """Product measure from per-symbol weights.

    ``probs`` maps edge index to mass for finitely supported measures;
    ``rule`` names a closed-form infinite-support family with certified
    tail handling ('inverse-square': mass ~ k**-2 normalized by pi^2/6;
    'heavy-log': mass ~ 1/(k*log(k+1)**2), whose weighted geometric sums
    diverge).
    """

    probs: Optional[tuple] = None          # ((k, p), ...) sorted
    rule: Optional[str] = None
    entropy: float = math.nan

    @classmethod
    def finite(cls, probs: dict) -> "BernoulliSpec":
        items = tuple(sorted((int(k), float(p)) for k, p in probs.items()))
        if any(p < 0 for _, p in items):
            raise ValueError("probabilities must be nonnegative")
        total = math.fsum(p for _, p in items)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        h = -math.fsum(p * math.log(p) for _, p in items if p > 0)
        return cls(probs=items, entropy=h)

    @classmethod
    def named(cls, rule: str) -> "BernoulliSpec":
        if rule not in ("inverse-square", "heavy-log"):
            raise ValueError(f"unknown Bernoulli rule {rule!r}")
        return cls(rule=rule, entropy=_rule_entropy(rule))

    def mass(self, k: int) -> float:
        if self.probs is not None:
            for kk, p in self.probs:
                if kk == k:
                    return p
            return 0.0
        return _rule_mass(self.rule, k)


def _heavy_norm() -> float:
    # sum of 1/(k log(k+1)^2): partial sum plus integral-test remainder
    K = 200000
    ks = np.arange(1, K + 1, dtype=float)
    partial = math.fsum((1.0 / (ks * np.log(ks + 1.0) ** 2)).tolist())
    rem = 1.0 / math.log(K + 1.0)  # int_K^inf dx/(x log^2 x) = 1/log K, padded
    return partial + rem * 0.5


_HEAVY_NORM = None


def _rule_mass(rule: str, k: int) -> float:
    global _HEAVY_NORM
    if rule == "inverse-square":
        return (k ** -2.0) / BASEL_SUM
    if _HEAVY_NORM is None:
        _HEAVY_NORM = _heavy_norm()
    return 1.0 / (k * math.log(k + 1.0) ** 2) / _HEAVY_NORM


def _rule_entropy(rule: str) -> float:
    if rule == "heavy-log":
        # -p log p ~ 1/(k log k), whose sum diverges
        return math.inf
    ks = np.arange(1, 200001)
    ps = np.array([_rule_mass(rule, int(k)) for k in ks])
    return float(-(ps * np.log(ps)).sum())


@dataclass(frozen=True)
class MeasureSummary:
    Q_value: tuple        # per-component Enclosure
    I_mean: Enclosure
    J_mean: tuple         # per-component Enclosure
    entropy: float
    mc_estimate: Optional[float] = None
    mc_stderr: Optional[float] = None


def _divide(j: Enclosure, i: Enclosure) -> Enclosure:
    """Componentwise interval quotient with positive denominator."""
    if i.lo <= 0:
        raise ValueError("geometric mean enclosure must be positive")
    cands = []
    for a in (j.lo, j.hi):
        for b in (i.lo, i.hi):
            cands.append(0.0 if math.isinf(b) else a / b)
    return Enclosure(min(cands), max(cands))


def Q_of_periodic(sys: SystemDescriptor, J: PotentialVector, cycle,
                  fix_tol: float = 1e-14, max_iter: int = 400) -> MeasureSummary:
    """Quotient value of the periodic-orbit measure of a cycle.

    The potential sum over one period is exact; the geometric sum is
    bracketed by evaluating the period word's derivative on the cycle's
    own coding enclosure, obtained by iterating the period map until the
    interval stabilizes."""
    syms = _cyclable(sys, cycle)
    p = len(syms)
    fam = sys.family
    iv = fam.domain()
    for _ in range(max_iter):
        nxt = fam.word_image(syms, iv)
        if nxt[1] - nxt[0] <= fix_tol:
            iv = nxt
            break
        if nxt == iv:
            break
        iv = nxt
    ld_lo, ld_hi = fam.word_log_deriv_range(syms, iv)
    birkhoff_I = Enclosure(-ld_hi, -ld_lo)
    bj = cycle_birkhoff(J, syms)
    pom = PeriodicOrbitMeasure(cycle=Word(syms), period=p,
                               birkhoff_J=tuple(bj.tolist()),
                               birkhoff_I=birkhoff_I)
    I_mean = Enclosure(birkhoff_I.lo / p, birkhoff_I.hi / p)
    J_mean = tuple(Enclosure(v / p, v / p) for v in bj)
    Q = tuple(_divide(Enclosure(v, v), birkhoff_I) for v in bj)
    return MeasureSummary(Q_value=Q, I_mean=I_mean, J_mean=J_mean, entropy=0.0)


def _cyclable(sys: SystemDescriptor, cycle) -> tuple:
    syms = tuple(int(s) for s in cycle)
    if not syms:
        raise InvalidWordError("cycle must be nonempty")
    ring = syms + (syms[0],)
    for i in range(len(syms)):
        if not sys.incidence.entry(ring[i], ring[i + 1]):
            raise InvalidWordError(
                f"word {syms} does not close into an admissible cycle")
    return syms


def _symbol_I_bracket(sys: SystemDescriptor, k: int,
                      hull: Optional[tuple] = None) -> tuple:
    """Range of the geometric potential over the depth-1 cylinder of k.

    The continuation interval defaults to the ambient domain; callers that
    know the measure's support pass the support-subsystem hull, which is
    what makes single-symbol measures exact."""
    iv = sys.family.domain() if hull is None else hull
    lo, hi = sys.family.deriv_log_range(k, iv)
    return (-hi, -lo)


def _support_hull(sys: SystemDescriptor, symbols, iterations: int = 120) -> tuple:
    """Interval hull of the limit set of the subsystem spanned by the
    support symbols (full-shift systems)."""
    if not sys.is_full_shift:
        return sys.family.domain()
    a, b = sys.family.domain()
    for _ in range(iterations):
        lo, hi = math.inf, -math.inf
        for k in symbols:
            ia, ib = sys.family.image(k, (a, b))
            lo, hi = min(lo, ia), max(hi, ib)
        a, b = lo, hi
    pad = 1e-12 * max(1.0, abs(a), abs(b))
    return (a - pad, b + pad)


def Q_of_bernoulli(sys: SystemDescriptor, J: PotentialVector,
                   spec: BernoulliSpec, n_mc: int = 0, seed: int = 0,
                   rule_cutoff: int = 50000) -> MeasureSummary:
    """Quotient value of a Bernoulli measure.

    Potential means are exact for depth-1 potentials (weighted symbol
    sums); the geometric mean collects per-symbol brackets.  Closed-form
    infinite rules get integral-test tails; a divergent weighted sum is
    reported as an infinite upper endpoint, which legitimately squeezes
    the quotient enclosure onto zero.
    """
    if J.depth != 1:
        raise ValueError("Bernoulli quotients require a depth-1 potential")
    if spec.rule is not None and sys.is_finite:
        raise ValueError(
            "infinite-support Bernoulli rules need an infinite-alphabet "
            f"system; this one has {sys.alphabet_size} edges")
    if spec.probs is not None:
        items = [(k, p) for k, p in spec.probs if p > 0.0]
        hull = _support_hull(sys, [k for k, _ in items])
        J_lo = np.zeros(J.dim)
        i_lo = i_hi = 0.0
        for k, p in items:
            lo, hi = _symbol_I_bracket(sys, k, hull)
            i_lo += p * lo
            i_hi += p * hi
            J_lo = J_lo + p * J.value((k,))
        J_enc = tuple(Enclosure(v, v) for v in J_lo)
        I_enc = Enclosure(i_lo, i_hi)
    else:
        ks = np.arange(1, rule_cutoff + 1)
        ps = np.array([_rule_mass(spec.rule, int(k)) for k in ks])
        jvals = np.array([J.value((int(k),)) for k in ks])
        ilos = np.empty(ks.size)
        ihis = np.empty(ks.size)
        for idx, k in enumerate(ks):
            ilos[idx], ihis[idx] = _symbol_I_bracket(sys, int(k))
        tail_mass = 1.0 - math.fsum(ps.tolist())
        tail_mass = max(tail_mass, 0.0)
        jcenter = (ps[:, None] * jvals).sum(axis=0)
        J_enc = tuple(Enclosure(float(c - tail_mass * J.bound),
                                float(c + tail_mass * J.bound)) for c in jcenter)
        i_lo = float(math.fsum((ps * ilos).tolist()))  # dropped tail is >= 0
        i_hi_partial = float(math.fsum((ps * ihis).tolist()))
        i_hi_tail = _rule_I_tail_upper(sys, spec.rule, rule_cutoff)
        I_enc = Enclosure(i_lo, i_hi_partial + i_hi_tail)
    Q = tuple(_divide(j, I_enc) for j in J_enc)
    mc_est = mc_err = None
    if n_mc > 0:
        mc_est, mc_err = _mc_I_mean(sys, spec, n_mc, seed)
    return MeasureSummary(Q_value=Q, I_mean=I_enc, J_mean=J_enc,
                          entropy=spec.entropy, mc_estimate=mc_est,
                          mc_stderr=mc_err)


def _rule_I_tail_upper(sys: SystemDescriptor, rule: str, K: int) -> float:
    """Upper bound on the weighted geometric tail beyond the cutoff.

    For the inverse-square rule the summand p_k * sup I decays like
    log(k+1)/k**2 whose integral tail is closed form; the heavy-log rule
    diverges and honestly reports +inf."""
    if rule == "inverse-square":
        # sum_{k>K} 2 log(k+1) k^-2 / S <= 2/S * (log(K+1)/K + log(1+1/K))
        return 2.0 / BASEL_SUM * (math.log(K + 1.0) / K + math.log(1.0 + 1.0 / K))
    return math.inf


def _mc_I_mean(sys: SystemDescriptor, spec: BernoulliSpec, n_mc: int, seed: int):
    """Seeded sampling of the geometric potential under the product
    measure; statistical tightening only, never part of enclosures."""
    rng = np.random.default_rng(seed)
    depth = 30
    fam = sys.family
    if spec.probs is not None:
        syms = [k for k, _ in spec.probs]
        wts = np.array([p for _, p in spec.probs])
        draw = lambda size: rng.choice(syms, size=size, p=wts / wts.sum())
    else:
        # inverse-cdf on a truncated grid; the tail mass is re-thrown
        ks = np.arange(1, 100001)
        ps = np.array([_rule_mass(spec.rule, int(k)) for k in ks])
        cdf = np.cumsum(ps / ps.sum())
        draw = lambda size: ks[np.searchsorted(cdf, rng.random(size=size))]
    vals = np.empty(n_mc)
    for i in range(n_mc):
        word = tuple(int(x) for x in draw(depth))
        iv = fam.word_image(word[1:], fam.domain())
        lo, hi = fam.deriv_log_range(word[0], iv)
        vals[i] = -0.5 * (lo + hi)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else None


# ---------------------------------------------------------------------------
# generic word construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Checkpoint:
    index: int
    position: int
    quotient: tuple
    error: float
    epsilon: float


@dataclass(frozen=True)
class GenericWordReport:
    prefix: Word
    checkpoints: tuple
    status: str            # complete | partial
    achieved: float        # best quotient error reached


def construct_generic_word(sys: SystemDescriptor, J: PotentialVector,
                           target_alpha, schedule: Sequence[float],
                           budget: int = 200000, *,
                           max_period: int = 3,
                           truncation: Optional[int] = None,
                           connector_len: int = 2) -> GenericWordReport:
    """Assemble a word whose running Birkhoff quotient converges to the
    target by gluing growing blocks of approximating cycles.

    Cycles are searched among short periodic words below the truncation;
    block lengths are chosen so that the next block's one-period sums,
    divided by the accumulated length, fall below the next accuracy
    target.  Connectors come from an irreducibility witness, smallest
    first.  If no cycle approximates some target accuracy the construction
    stops and reports partial status with the accuracy achieved.
    """
    target = np.atleast_1d(np.asarray(target_alpha, dtype=float))
    N = sys.effective_truncation(truncation if truncation is not None else 6)
    eps = [float(e) for e in schedule]
    if not eps:
        raise ValueError("schedule must be nonempty")
    witness = find_irreducibility_witness(sys.incidence, N, connector_len)
    fam = sys.family

    # candidate cycles with quotient midpoints
    pool = []
    for p in range(1, max_period + 1):
        for w in enumerate_words(sys.incidence, p, N):
            syms = tuple(w)
            if not sys.incidence.entry(syms[-1], syms[0]):
                continue
            summ = Q_of_periodic(sys, J, syms)
            qmid = np.array([e.mid for e in summ.Q_value])
            ivec = summ.I_mean.mid * p
            jvec = np.array([e.mid for e in summ.J_mean]) * p
            pool.append((syms, qmid, ivec, jvec))
            if len(pool) >= budget:
                break

    def pick(eps_k):
        best = None
        for syms, qmid, ivec, jvec in pool:
            err = float(np.abs(qmid - target).max())
            if err <= eps_k / 2 and (best is None or err < best[0] or
                                     (err == best[0] and syms < best[1][0])):
                best = (err, (syms, qmid, ivec, jvec))
        return best[1] if best else None

    def connector(prev_last, nxt_first):
        for w in sorted(witness.connectors, key=lambda w: (len(w), tuple(w))):
            ring = (prev_last,) + tuple(w) + (nxt_first,)
            if all(sys.incidence.entry(ring[i], ring[i + 1])
                   for i in range(len(ring) - 1)):
                return tuple(w)
        return None

    log_s = math.log(sys.family.contraction_bound)
    prefix: list[int] = []
    checkpoints = []
    status = "complete"
    achieved = math.inf
    jacc = np.zeros(J.dim)
    for k, eps_k in enumerate(eps, start=1):
        choice = pick(eps_k)
        if choice is None:
            status = "partial"
            break
        syms, qmid, ivec, jvec = choice
        m_k = len(syms)
        if k == 1:
            reps = 1
        else:
            scale = max(abs(ivec), float(np.abs(jvec).max()))
            reps = max(1, math.ceil(scale / ((-log_s) * m_k * eps_k)))
        if prefix:
            conn = connector(prefix[-1], syms[0])
            if conn is None:
                status = "partial"
                break
            prefix.extend(conn)
        prefix.extend(syms * reps)
        # checkpoint: running quotient over the full prefix
        ld_lo, ld_hi = fam.word_log_deriv_range(tuple(prefix), fam.domain())
        i_mid = -0.5 * (ld_lo + ld_hi)
        jacc = _prefix_J(J, tuple(prefix))
        quot = jacc / i_mid
        err = float(np.abs(quot - target).max())
        achieved = min(achieved, err)
        checkpoints.append(Checkpoint(index=k, position=len(prefix),
                                      quotient=tuple(quot.tolist()),
                                      error=err, epsilon=eps_k))
    return GenericWordReport(prefix=Word(tuple(prefix)),
                             checkpoints=tuple(checkpoints),
                             status=status, achieved=achieved)


def _prefix_J(J: PotentialVector, syms: tuple) -> np.ndarray:
    """Potential sum over a finite prefix; trailing windows use the prefix
    itself as its own continuation, which is exact for depth 1."""
    n = len(syms)
    total = np.zeros(J.dim)
    for i in range(n):
        window = tuple(syms[(i + j) % n] for j in range(J.depth))
        total += J.value(window)
    return total


# ---------------------------------------------------------------------------
# failure of geometric-mean convergence along a weakly convergent sequence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleRow:
    n: int
    c_n: float
    top_mass: float
    I_lower: float
    I_upper: float
    valid_probability: bool


@dataclass(frozen=True)
class CounterexampleResult:
    rows: tuple
    limit_I: Enclosure
    verdict: str            # strict-gap | inconclusive
    M_param: float


def semicontinuity_counterexample(M_param: float, n_list: Sequence[int],
                                  cutoff: int = 1000000) -> CounterexampleResult:
    """Table demonstrating that geometric means need not converge along a
    weakly convergent sequence of Bernoulli measures.

    The n-th vector puts mass ``c_n k**-2 / S`` on k < n (S the Basel sum,
    ``c_n = 1 - M/log n``) and the remainder on k = n, so the top symbol
    carries mass about ``M / log n`` and contributes about 2M to the
    geometric mean, while the weak limit (mass ``k**-2 / S``) keeps a
    bounded mean.  Vectors are valid probability vectors only once
    ``log n >= M``; smaller n still evaluate the displayed bound chains
    but are flagged, since some entries turn negative.
    """
    if M_param <= 0:
        raise ValueError("M_param must be positive")
    S = BASEL_SUM
    limit = _limit_I_enclosure()
    rows = []
    for n in n_list:
        n = int(n)
        if n < 2:
            raise ValueError("each n must be >= 2")
        c_n = 1.0 - M_param / math.log(n)
        if n - 1 <= cutoff:
            ks = np.arange(1, n, dtype=float)
            part_sq = math.fsum((ks ** -2.0).tolist())
            part_lo = math.fsum((2.0 * np.log(ks) / ks ** 2).tolist())
            part_hi = math.fsum((2.0 * np.log(ks + 1.0) / ks ** 2).tolist())
        else:
            # analytic partial sums with one-sided integral-test remainders
            part_sq = S - 1.0 / n
            full_lo = 2.0 * 0.9375482543158437  # sum_k log(k)/k**2
            tail_lo_upper = 2.0 * (math.log(n) / n ** 2 + (math.log(n) + 1.0) / n)
            part_lo = full_lo - tail_lo_upper
            full_hi = 2.0 * _log_kp1_sum_upper()
            tail_hi_lower = 2.0 * (math.log(n + 1.0) / n + math.log(1.0 + 1.0 / n))
            part_hi = full_hi - tail_hi_lower
        top = 1.0 - c_n / S * part_sq
        lower = c_n / S * part_lo + top * 2.0 * math.log(n)
        upper = c_n / S * part_hi + top * 2.0 * math.log(n + 1.0)
        rows.append(CounterexampleRow(
            n=n, c_n=c_n, top_mass=top, I_lower=lower, I_upper=upper,
            valid_probability=bool(0.0 <= c_n <= 1.0)))
    ok = all(r.I_lower > limit.hi for r in rows)
    verdict = "strict-gap" if ok else "inconclusive"
    return CounterexampleResult(rows=tuple(rows), limit_I=limit,
                                verdict=verdict, M_param=float(M_param))


_LOG_KP1_SUM_UPPER = None


def _log_kp1_sum_upper(K: int = 1000000) -> float:
    """Upper value of sum_k log(k+1)/k**2 (partial sum plus integral tail)."""
    global _LOG_KP1_SUM_UPPER
    if _LOG_KP1_SUM_UPPER is None:
        ks = np.arange(1, K + 1, dtype=float)
        part = math.fsum((np.log(ks + 1.0) / ks ** 2).tolist())
        _LOG_KP1_SUM_UPPER = part + math.log(K + 1.0) / K + math.log(1.0 + 1.0 / K)
    return _LOG_KP1_SUM_UPPER


def _limit_I_enclosure(K: int = 1000000) -> Enclosure:
    """Geometric mean of the inverse-square Bernoulli measure."""
    ks = np.arange(1, K + 1, dtype=float)
    lo = math.fsum((2.0 * np.log(ks) / ks ** 2).tolist()) / BASEL_SUM
    hi = 2.0 * _log_kp1_sum_upper(K) / BASEL_SUM
    return Enclosure(lo, hi)


def cylinder_mass(M_param: float, n: int, k: int) -> float:
    """Mass the n-th counterexample vector puts on the depth-1 cylinder of
    k; converges to the inverse-square limit as n grows."""
    c_n = 1.0 - M_param / math.log(n)
    if k > n:
        return 0.0
    if k < n:
        return c_n / BASEL_SUM * k ** -2.0
    ks = np.arange(1, n, dtype=float)
    return 1.0 - c_n / BASEL_SUM * math.fsum((ks ** -2.0).tolist())
