"""Contraction families: derivative brackets, cylinder images, coding points.

All built-in families act on compact intervals of the real line.  Every
operation returns certified lower/upper pairs; tightness varies by family:

* similarities have constant derivatives, so brackets are exact;
* the continued-fraction family ``x -> 1/(x+k)`` composes to a Moebius map
  whose derivative is a monotone function of a single linear form, so word
  brackets are again exact (computed from the two trailing continuants);
* custom families are evaluated by composing interval images right to
  left, which yields valid but in general non-tight enclosures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainMismatchError, InvalidWordError
from .symbolic import Word


@dataclass(frozen=True)
class DerivativeBracket:
    """Enclosure of log|phi_w'| over the terminal domain, natural log."""

    word: Word
    sup_log_deriv: float
    inf_log_deriv: float


@dataclass(frozen=True)
class CodingPoint:
    """Midpoint/radius enclosure of the coded point of a word prefix."""

    word_prefix: Word
    point_estimate: float
    radius: float


class MapFamily:
    """Base class for 1-d contraction families.

    Attributes
    ----------
    contraction_bound : float
        Rate s in (0,1) with ``sup|phi_w'| <= prefactor * s**len(w)``.
    contraction_prefactor : float
        The constant in the bound above; 1 whenever every single map is
        an s-contraction, larger when only compositions contract at rate s
        (the continued-fraction family needs 2).
    distortion_constant : float
        K >= 1 bounding derivative ratios along any word.
    hoelder : tuple
        (exponent, constant) of the derivative regularity condition.
    """

    kind = "abstract"
    contraction_bound = 0.5
    contraction_prefactor = 1.0
    distortion_constant = 1.0
    hoelder = (1.0, 0.0)
    n_edges: Optional[int] = None
    distortion_free = False  # True when derivative brackets have zero width

    def domain(self, vertex=0) -> tuple:
        return (0.0, 1.0)

    def check_edge(self, e: int) -> None:
        if e < 1:
            raise InvalidWordError(f"edge index must be positive, got {e}")
        if self.n_edges is not None and e > self.n_edges:
            raise InvalidWordError(f"edge {e} out of range (n_edges={self.n_edges})")

    # -- single-edge interval primitives -------------------------------
    def image(self, e: int, iv: tuple) -> tuple:
        raise NotImplementedError

    def deriv_log_range(self, e: int, iv: tuple) -> tuple:
        """Range of log|phi_e'| over the interval iv."""
        raise NotImplementedError

    # -- word-level operations ------------------------------------------
    def word_log_deriv_range(self, word: Sequence[int], tail: tuple) -> tuple:
        """Enclosure of log|phi_w'| over the tail interval.

        Default implementation composes right to left via the chain rule;
        subclasses override when an exact form exists.
        """
        lo = hi = 0.0
        iv = tail
        for e in reversed(tuple(word)):
            dlo, dhi = self.deriv_log_range(e, iv)
            lo += dlo
            hi += dhi
            iv = self.image(e, iv)
        return lo, hi

    def word_image(self, word: Sequence[int], tail: tuple) -> tuple:
        iv = tail
        for e in reversed(tuple(word)):
            iv = self.image(e, iv)
        return iv

    # -- vectorized forms used by the pressure kernel --------------------
    def vec_word_log_deriv(self, syms: np.ndarray, tail: tuple):
        """Per-column enclosures for a (L, M) matrix of words.

        Falls back to the scalar path; overridden by the built-ins with
        closed forms.
        """
        L, M = syms.shape
        lo = np.empty(M)
        hi = np.empty(M)
        for j in range(M):
            lo[j], hi[j] = self.word_log_deriv_range(syms[:, j], tail)
        return lo, hi

    def vec_suffix_then_head(self, syms: np.ndarray, tail: tuple):
        """Per-column range of log|phi'_{w_1}| over phi_{w_2..w_L}(tail).

        This is the single-window contribution used by the fused kernel.
        """
        L, M = syms.shape
        lo = np.empty(M)
        hi = np.empty(M)
        for j in range(M):
            iv = self.word_image(syms[1:, j], tail)
            lo[j], hi[j] = self.deriv_log_range(syms[0, j], iv)
        return lo, hi


class SimilarityFamily(MapFamily):
    """Affine maps ``phi_e(x) = offset_e + sign_e * ratio_e * x``."""

    kind = "similarity"
    distortion_free = True

    def __init__(self, ratios, offsets=None, flips=None, domain=(0.0, 1.0)):
        ratios = tuple(float(r) for r in ratios)
        if not ratios:
            raise ValueError("need at least one map")
        if any(not (0.0 < r < 1.0) for r in ratios):
            raise ValueError("similarity ratios must lie in (0,1)")
        n = len(ratios)
        if offsets is None:
            # equally spaced placements inside the domain
            a, b = domain
            gap = ((b - a) - sum(r * (b - a) for r in ratios)) / max(n - 1, 1)
            offsets = []
            x = a
            for r in ratios:
                offsets.append(x)
                x += r * (b - a) + gap
            offsets = tuple(offsets)
        else:
            offsets = tuple(float(c) for c in offsets)
        flips = tuple(flips) if flips is not None else (1,) * n
        if len(offsets) != n or len(flips) != n:
            raise ValueError("ratios, offsets, flips must have equal length")
        self.ratios = ratios
        self.offsets = offsets
        self.flips = flips
        self._domain = (float(domain[0]), float(domain[1]))
        self.n_edges = n
        self.contraction_bound = max(ratios)
        self.contraction_prefactor = 1.0
        self.distortion_constant = 1.0
        self.hoelder = (1.0, 0.0)
        self._logr = np.array([0.0] + [math.log(r) for r in ratios])

    def domain(self, vertex=0):
        return self._domain

    def image(self, e, iv):
        self.check_edge(e)
        r, c, f = self.ratios[e - 1], self.offsets[e - 1], self.flips[e - 1]
        a = c + f * r * iv[0]
        b = c + f * r * iv[1]
        return (min(a, b), max(a, b))

    def deriv_log_range(self, e, iv):
        self.check_edge(e)
        lr = math.log(self.ratios[e - 1])
        return (lr, lr)

    def word_log_deriv_range(self, word, tail):
        s = sum(math.log(self.ratios[e - 1]) for e in word)
        return (s, s)

    def vec_word_log_deriv(self, syms, tail):
        s = self._logr[syms].sum(axis=0)
        return s.copy(), s

    def vec_suffix_then_head(self, syms, tail):
        s = self._logr[syms[0]]
        return s.copy(), s


class MoebiusCFFamily(MapFamily):
    """The family ``phi_k(x) = 1/(x+k)`` on [0,1], k = 1, 2, 3, ...

    Compositions are Moebius maps with unit determinant; writing the word
    map as ``(p + p1 x)/(q + q1 x)`` with the trailing continuants (q, q1),
    the derivative magnitude is ``(q + q1 x)**-2``, monotone in x, so word
    brackets are exact.

    The first map is not a strict contraction (its derivative reaches 1 at
    x=0) but every two-step composition contracts by at least 1/4, which
    gives ``sup|phi_w'| <= 2 * (1/2)**len(w)`` and cylinder diameters
    ``<= 2**-len(w)``; hence rate 1/2 with prefactor 2.
    """

    kind = "moebius-cf"
    contraction_bound = 0.5
    contraction_prefactor = 2.0
    distortion_constant = 4.0
    hoelder = (1.0, 8.0)
    n_edges = None

    def image(self, e, iv):
        self.check_edge(e)
        a, b = iv
        return (1.0 / (b + e), 1.0 / (a + e))

    def deriv_log_range(self, e, iv):
        self.check_edge(e)
        a, b = iv
        return (-2.0 * math.log(b + e), -2.0 * math.log(a + e))

    @staticmethod
    def _continuants(word):
        pj, pjm = 0, 1
        qj, qjm = 1, 0
        for k in word:
            pj, pjm = k * pj + pjm, pj
            qj, qjm = k * qj + qjm, qj
        return pj, pjm, qj, qjm

    def word_log_deriv_range(self, word, tail):
        word = tuple(word)
        for e in word:
            self.check_edge(e)
        _, _, qn, qn1 = self._continuants(word)
        a, b = tail
        return (-2.0 * math.log(qn + qn1 * b), -2.0 * math.log(qn + qn1 * a))

    def word_image(self, word, tail):
        word = tuple(word)
        if not word:
            return tail
        pn, pn1, qn, qn1 = self._continuants(word)
        a, b = tail
        x0 = (pn + pn1 * a) / (qn + qn1 * a)
        x1 = (pn + pn1 * b) / (qn + qn1 * b)
        return (min(x0, x1), max(x0, x1))

    @staticmethod
    def _vec_continuants(syms: np.ndarray):
        L, M = syms.shape
        pn = np.zeros(M)
        pn1 = np.ones(M)
        qn = np.ones(M)
        qn1 = np.zeros(M)
        for i in range(L):
            k = syms[i].astype(float)
            pn, pn1 = k * pn + pn1, pn
            qn, qn1 = k * qn + qn1, qn
        return pn, pn1, qn, qn1

    def vec_word_log_deriv(self, syms, tail):
        _, _, qn, qn1 = self._vec_continuants(syms)
        a, b = tail
        return (-2.0 * np.log(qn + qn1 * b), -2.0 * np.log(qn + qn1 * a))

    def vec_suffix_then_head(self, syms, tail):
        a, b = tail
        if syms.shape[0] == 1:
            ylo = np.full(syms.shape[1], a)
            yhi = np.full(syms.shape[1], b)
        else:
            pn, pn1, qn, qn1 = self._vec_continuants(syms[1:])
            x0 = (pn + pn1 * a) / (qn + qn1 * a)
            x1 = (pn + pn1 * b) / (qn + qn1 * b)
            ylo = np.minimum(x0, x1)
            yhi = np.maximum(x0, x1)
        k = syms[0].astype(float)
        return (-2.0 * np.log(yhi + k), -2.0 * np.log(ylo + k))


# ---------------------------------------------------------------------------
# Expression grammar for custom families
# ---------------------------------------------------------------------------
#
#   expr    := term (('+'|'-') term)*
#   term    := factor (('*'|'/') factor)*
#   factor  := ('-')? power
#   power   := atom ('^' factor)?
#   atom    := NUMBER | 'x' | 'k' | 'log' '(' expr ')' | 'exp' '(' expr ')'
#            | '(' expr ')'
#
# evaluated over intervals with outward-safe monotone rules; 'k' is the
# edge index, a constant per evaluation.

class _Tok:
    def __init__(self, kind, value=None):
        self.kind = kind
        self.value = value


def _tokenize(src: str):
    out = []
    i = 0
    while i < len(src):
        c = src[i]
        if c.isspace():
            i += 1
        elif c in "+-*/^()":
            out.append(_Tok(c))
            i += 1
        elif c.isdigit() or c == ".":
            j = i
            while j < len(src) and (src[j].isdigit() or src[j] in ".eE" or
                                    (src[j] in "+-" and src[j - 1] in "eE")):
                j += 1
            out.append(_Tok("num", float(src[i:j])))
            i = j
        elif c.isalpha():
            j = i
            while j < len(src) and src[j].isalnum():
                j += 1
            name = src[i:j]
            if name in ("x", "k", "log", "exp"):
                out.append(_Tok(name))
            else:
                raise ValueError(f"unknown name {name!r} in expression")
            i = j
        else:
            raise ValueError(f"unexpected character {c!r} in expression")
    out.append(_Tok("end"))
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def eat(self, kind):
        t = self.toks[self.pos]
        if t.kind != kind:
            raise ValueError(f"expected {kind!r}, got {t.kind!r}")
        self.pos += 1
        return t

    def parse(self):
        node = self.expr()
        self.eat("end")
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind in "+-":
            op = self.eat(self.peek().kind).kind
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind in "*/":
            op = self.eat(self.peek().kind).kind
            node = (op, node, self.factor())
        return node

    def factor(self):
        if self.peek().kind == "-":
            self.eat("-")
            return ("neg", self.factor())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek().kind == "^":
            self.eat("^")
            return ("^", node, self.factor())
        return node

    def atom(self):
        t = self.peek()
        if t.kind == "num":
            self.eat("num")
            return ("num", t.value)
        if t.kind in ("x", "k"):
            self.eat(t.kind)
            return (t.kind,)
        if t.kind in ("log", "exp"):
            self.eat(t.kind)
            self.eat("(")
            inner = self.expr()
            self.eat(")")
            return (t.kind, inner)
        if t.kind == "(":
            self.eat("(")
            inner = self.expr()
            self.eat(")")
            return inner
        raise ValueError(f"unexpected token {t.kind!r}")


def parse_expression(src: str):
    """Parse the config expression grammar into an AST."""
    return _Parser(_tokenize(src)).parse()


def _iv_mul(a, b):
    vals = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(vals), max(vals))


def eval_interval(node, x: tuple, k: int) -> tuple:
    """Evaluate an expression AST over the interval x with edge index k."""
    op = node[0]
    if op == "num":
        return (node[1], node[1])
    if op == "x":
        return x
    if op == "k":
        return (float(k), float(k))
    if op == "neg":
        a = eval_interval(node[1], x, k)
        return (-a[1], -a[0])
    if op == "+":
        a = eval_interval(node[1], x, k)
        b = eval_interval(node[2], x, k)
        return (a[0] + b[0], a[1] + b[1])
    if op == "-":
        a = eval_interval(node[1], x, k)
        b = eval_interval(node[2], x, k)
        return (a[0] - b[1], a[1] - b[0])
    if op == "*":
        return _iv_mul(eval_interval(node[1], x, k), eval_interval(node[2], x, k))
    if op == "/":
        a = eval_interval(node[1], x, k)
        b = eval_interval(node[2], x, k)
        if b[0] <= 0.0 <= b[1]:
            raise ValueError("division by an interval containing zero")
        return _iv_mul(a, (1.0 / b[1], 1.0 / b[0]))
    if op == "^":
        a = eval_interval(node[1], x, k)
        b = eval_interval(node[2], x, k)
        if b[0] == b[1] and float(b[0]).is_integer():
            p = int(b[0])
            if p == 0:
                return (1.0, 1.0)
            if p < 0 and a[0] <= 0.0 <= a[1]:
                raise ValueError("negative power of an interval containing zero")
            cand = (a[0] ** p, a[1] ** p)
            lo, hi = min(cand), max(cand)
            if p % 2 == 0 and p > 0 and a[0] <= 0.0 <= a[1]:
                lo = 0.0
            return (lo, hi)
        if a[0] <= 0:
            raise ValueError("non-integer power of a non-positive interval")
        la = (math.log(a[0]), math.log(a[1]))
        prod = _iv_mul(la, b)
        return (math.exp(prod[0]), math.exp(prod[1]))
    if op == "log":
        a = eval_interval(node[1], x, k)
        if a[0] <= 0:
            raise ValueError("log of a non-positive interval")
        return (math.log(a[0]), math.log(a[1]))
    if op == "exp":
        a = eval_interval(node[1], x, k)
        return (math.exp(a[0]), math.exp(a[1]))
    raise ValueError(f"bad AST node {node!r}")


class Custom1DFamily(MapFamily):
    """User-declared 1-d family given by map/derivative expressions.

    ``map_expr`` evaluates phi_k(x); ``abs_deriv_expr`` evaluates
    |phi_k'(x)|.  Both use the grammar with variables x (point) and k
    (edge index).  Contraction and distortion data must be declared; they
    are trusted, not verified analytically.
    """

    kind = "custom-1d"

    def __init__(self, map_expr: str, abs_deriv_expr: str, *,
                 contraction_bound: float, distortion_constant: float = 1.0,
                 contraction_prefactor: float = 1.0,
                 hoelder: tuple = (1.0, 0.0),
                 domain: tuple = (0.0, 1.0), n_edges: Optional[int] = None):
        if not (0.0 < contraction_bound < 1.0):
            raise ValueError("contraction_bound must lie in (0,1)")
        if distortion_constant < 1.0:
            raise ValueError("distortion_constant must be >= 1")
        self.map_ast = parse_expression(map_expr)
        self.deriv_ast = parse_expression(abs_deriv_expr)
        self.map_expr = map_expr
        self.abs_deriv_expr = abs_deriv_expr
        self.contraction_bound = float(contraction_bound)
        self.distortion_constant = float(distortion_constant)
        self.contraction_prefactor = float(contraction_prefactor)
        self.hoelder = tuple(hoelder)
        self._domain = (float(domain[0]), float(domain[1]))
        self.n_edges = n_edges

    def domain(self, vertex=0):
        return self._domain

    def image(self, e, iv):
        self.check_edge(e)
        lo, hi = eval_interval(self.map_ast, iv, e)
        return (lo, hi)

    def deriv_log_range(self, e, iv):
        self.check_edge(e)
        lo, hi = eval_interval(self.deriv_ast, iv, e)
        if lo <= 0:
            raise ValueError("declared |phi'| evaluator returned a non-positive value")
        return (math.log(lo), math.log(hi))


# ---------------------------------------------------------------------------
# Word-level operations
# ---------------------------------------------------------------------------

def log_deriv_bracket(family: MapFamily, word, tail: Optional[tuple] = None,
                      incidence=None) -> DerivativeBracket:
    """Enclosure of log|phi_w'| over the terminal domain (or ``tail``).

    The word must be nonempty; when an incidence matrix is supplied the
    word's chaining is verified and a violation raises
    :class:`DomainMismatchError`.
    """
    w = word if isinstance(word, Word) else Word(tuple(word))
    if len(w) == 0:
        raise InvalidWordError("word must be nonempty")
    for e in w:
        family.check_edge(e)
    if incidence is not None:
        syms = tuple(w)
        for i in range(len(syms) - 1):
            if not incidence.entry(syms[i], syms[i + 1]):
                raise DomainMismatchError(
                    f"edges {syms[i]} -> {syms[i+1]} do not chain")
    tail = family.domain() if tail is None else tail
    lo, hi = family.word_log_deriv_range(tuple(w), tail)
    return DerivativeBracket(word=w, sup_log_deriv=hi, inf_log_deriv=lo)


def approximate_pi(family: MapFamily, word_prefix, incidence=None) -> CodingPoint:
    """Midpoint/radius enclosure of the cylinder image of a word prefix."""
    w = word_prefix if isinstance(word_prefix, Word) else Word(tuple(word_prefix))
    if len(w) == 0:
        raise InvalidWordError("prefix must be nonempty")
    if incidence is not None and not _chain_ok(incidence, tuple(w)):
        raise InvalidWordError(f"prefix {tuple(w)} is not admissible")
    iv = family.word_image(tuple(w), family.domain())
    return CodingPoint(word_prefix=w,
                       point_estimate=0.5 * (iv[0] + iv[1]),
                       radius=0.5 * (iv[1] - iv[0]))


def _chain_ok(incidence, syms):
    return all(incidence.entry(syms[i], syms[i + 1]) for i in range(len(syms) - 1))


def geometric_potential_bracket(family: MapFamily, word,
                                tail: Optional[tuple] = None) -> tuple:
    """Enclosure of the Birkhoff sum of the geometric potential over the
    cylinder of the word: equals the negated derivative bracket."""
    br = log_deriv_bracket(family, word, tail)
    return (-br.sup_log_deriv, -br.inf_log_deriv)
