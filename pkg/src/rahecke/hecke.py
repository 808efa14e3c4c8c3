"""Multi-parameter Hecke algebra of a right-angled Coxeter group.

Elements are finitely supported maps ``GroupElement -> coefficient``.
Coefficients may be ``int``/``Fraction`` (exact), ``float``/``complex``,
or :class:`QPoly`, a polynomial in the parameters ``q_s`` with integer
coefficients.  Running both product algorithms over ``QPoly`` checks an
identity for every parameter vector at once.

Exponents of ``q`` and ``q - 1`` are multi-indices: one non-negative
integer per generator type, ``q**n = prod_s q_s**n_s``.
"""
from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from numbers import Number

from .coxeter import CoxeterError, CoxeterSystem, GroupElement, left_apply, multiply
from .walls import WallPoset, separating_walls


class QPoly:
    """Sparse polynomial in ``q_0 .. q_{n-1}`` with integer coefficients."""

    __slots__ = ("terms", "nvars")

    def __init__(self, terms: Mapping[tuple[int, ...], int], nvars: int):
        self.terms = {k: v for k, v in terms.items() if v}
        self.nvars = nvars

    @classmethod
    def const(cls, c: int, nvars: int) -> "QPoly":
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, i: int, nvars: int) -> "QPoly":
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars)

    def _lift(self, other) -> "QPoly":
        if isinstance(other, QPoly):
            return other
        if isinstance(other, int):
            return QPoly.const(other, self.nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return QPoly(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return QPoly({k: -v for k, v in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out: dict[tuple[int, ...], int] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return QPoly(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = QPoly.const(1, self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return False
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, reverse=True):
            mono = "*".join(f"q{i}^{e}" if e > 1 else f"q{i}" for i, e in enumerate(k) if e)
            parts.append(f"{self.terms[k]}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def __call__(self, values):
        """Evaluate at a sequence of parameter values."""
        total = 0
        for k, c in self.terms.items():
            term = c
            for x, e in zip(values, k):
                if e:
                    term = term * x**e
            total = total + term
        return total


class HeckeParams:
    """Per-generator parameters ``q_s``."""

    def __init__(self, q: Iterable, sys: CoxeterSystem):
        q = tuple(q)
        if len(q) != sys.rank:
            raise CoxeterError(f"need {sys.rank} parameters, got {len(q)}")
        self.q = q
        self.system = sys
        self._cache: dict = {}

    @classmethod
    def uniform(cls, q, sys: CoxeterSystem) -> "HeckeParams":
        return cls([q] * sys.rank, sys)

    @classmethod
    def symbolic(cls, sys: CoxeterSystem) -> "HeckeParams":
        return cls([QPoly.var(i, sys.rank) for i in range(sys.rank)], sys)

    def __getitem__(self, s: int):
        return self.q[s]

    def one(self):
        q0 = self.q[0]
        return QPoly.const(1, len(self.q)) if isinstance(q0, QPoly) else 1

    def monomial(self, qm1_exp: tuple[int, ...], q_exp: tuple[int, ...]):
        """``(q - 1)**qm1_exp * q**q_exp`` with multi-index exponents."""
        key = (qm1_exp, q_exp)
        val = self._cache.get(key)
        if val is None:
            val = self.one()
            for s, n in enumerate(qm1_exp):
                if n:
                    val = val * (self.q[s] - 1) ** n
            for s, n in enumerate(q_exp):
                if n:
                    val = val * self.q[s] ** n
            self._cache[key] = val
        return val


def _zero(c) -> bool:
    return not c if not isinstance(c, float | complex) else c == 0


class HeckeElement:
    """Finitely supported function on W; zero coefficients are never stored."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[GroupElement, object] | None = None):
        self.coeffs = {}
        if coeffs:
            for g, c in coeffs.items():
                if not _zero(c):
                    self.coeffs[g] = c

    @classmethod
    def basis(cls, w: GroupElement, one=1) -> "HeckeElement":
        return cls({w: one})

    def __getitem__(self, g):
        return self.coeffs.get(g, 0)

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def items(self):
        return self.coeffs.items()

    def support_radius(self) -> int:
        return max((g.length for g in self.coeffs), default=0)

    def __add__(self, other: "HeckeElement") -> "HeckeElement":
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            out[g] = out[g] + c if g in out else c
        return HeckeElement(out)

    def __sub__(self, other: "HeckeElement") -> "HeckeElement":
        return self + other.scale(-1)

    def scale(self, c) -> "HeckeElement":
        return HeckeElement({g: c * v for g, v in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, HeckeElement) and self.coeffs == other.coeffs

    def close_to(self, other: "HeckeElement", tol: float = 1e-12) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self[g] - other[g]) <= tol for g in keys)

    def __repr__(self):
        items = sorted(self.coeffs.items(), key=lambda kv: kv[0])
        return "HeckeElement({" + ", ".join(f"{g}: {c}" for g, c in items) + "})"

    def to_json(self) -> dict[str, str]:
        return {str(g): str(c) for g, c in sorted(self.coeffs.items(), key=lambda kv: kv[0])}


def mul_gen(s: int, f: HeckeElement, params: HeckeParams) -> HeckeElement:
    """``e_s f``: pointwise ``q f(su)`` if ``l(su) > l(u)``, else ``(q-1) f(u) + f(su)``."""
    q = params[s]
    out: dict[GroupElement, object] = {}
    for v, c in f.coeffs.items():
        sv = v.left_mul_gen(s)
        if sv.length > v.length:
            # e_s e_v = e_sv
            out[sv] = out[sv] + c if sv in out else c
        else:
            # e_s e_v = (q-1) e_v + q e_sv
            a, b = (q - 1) * c, q * c
            out[v] = out[v] + a if v in out else a
            out[sv] = out[sv] + b if sv in out else b
    return HeckeElement(out)


def mul_recursive(w: GroupElement, f: HeckeElement, params: HeckeParams, word: Iterable[int] | None = None) -> HeckeElement:
    """``e_w f`` by applying generators of a reduced word, rightmost first."""
    letters = tuple(w.word if word is None else word)
    if len(letters) != w.length:
        raise CoxeterError("word is not a reduced word of w")
    for s in reversed(letters):
        f = mul_gen(s, f, params)
    return f


class WallData:
    """Per-``w`` data for the anti-chain formula: P(1|w), its poset and anti-chains."""

    def __init__(self, w: GroupElement):
        sys = w.system
        self.w = w
        self.poset = WallPoset(separating_walls(w), sys)
        self.chains = self.poset.antichains()
        self.chain_idx = [frozenset(self.poset.index[H] for H in h.walls) for h in self.chains]
        self.chain_types = [h.type_counts() for h in self.chains]
        self.hw = [multiply(h.product, w) for h in self.chains]
        self.lw = w.multi_length
        n = len(self.poset)
        P = self.poset
        self.rank = sys.rank
        self.chain_mask = [sum(1 << i for i in idx) for idx in self.chain_idx]
        # walls strictly above some member of the chain
        self.above = [
            sum(1 << j for j in range(n) if any(P.less[i][j] for i in idx)) for idx in self.chain_idx
        ]
        self.type_mask = [sum(1 << j for j, H in enumerate(P.walls) if H.type == t) for t in range(sys.rank)]
        self._terms: dict[int, list] = {}


class HeapData:
    """The bitmask part of :class:`WallData` read off a reduced word.

    Wall ``i`` is the one crossed by letter ``i``.  In a right-angled group
    two walls of a reduced word cross exactly when their letters are
    incomparable in the heap order (the transitive closure of "earlier
    and equal or not commuting"); otherwise the earlier one is closer to 1.
    ``h w`` is the word with the letters of ``h`` deleted.
    """

    def __init__(self, word: Sequence[int], sys: CoxeterSystem):
        word = tuple(word)
        n = len(word)
        self.word = word
        self.rank = sys.rank
        cm = sys._cmask
        below = [0] * n
        for j, b in enumerate(word):
            m = 0
            for i in range(j):
                a = word[i]
                if a == b or not (cm[a] >> b) & 1:
                    m |= (1 << i) | below[i]
            below[j] = m
        succ = [0] * n
        for j in range(n):
            m = below[j]
            while m:
                low = m & -m
                succ[low.bit_length() - 1] |= 1 << j
                m ^= low
        comparable = [below[i] | succ[i] for i in range(n)]
        chains: list[int] = []

        def extend(mask: int, start: int, allowed: int):
            chains.append(mask)
            for j in range(start, n):
                if (allowed >> j) & 1:
                    extend(mask | (1 << j), j + 1, allowed & ~comparable[j])

        extend(0, 0, (1 << n) - 1)
        self.chain_mask = chains
        self.chain_idx = [tuple(i for i in range(n) if (m >> i) & 1) for m in chains]
        self.chain_types = [tuple(sum(1 for i in idx if word[i] == t) for t in range(sys.rank)) for idx in self.chain_idx]
        self.above = []
        for idx in self.chain_idx:
            m = 0
            for i in idx:
                m |= succ[i]
            self.above.append(m)
        self.type_mask = [sum(1 << i for i in range(n) if word[i] == t) for t in range(sys.rank)]
        self.lw = tuple(sum(1 for a in word if a == t) for t in range(sys.rank))
        self.less = [[bool((succ[i] >> j) & 1) for j in range(n)] for i in range(n)]
        self._terms: dict[int, list] = {}

    def deleted_word(self, k: int) -> tuple[int, ...]:
        m = self.chain_mask[k]
        return tuple(a for i, a in enumerate(self.word) if not (m >> i) & 1)


def wall_data(w: GroupElement, cache: bool = True) -> WallData:
    if not cache:
        return WallData(w)
    store = w.system._hecke_cache
    d = store.get(w.word)
    if d is None:
        d = store[w.word] = WallData(w)
    return d


def terms_for_mask(data: WallData, inside: int) -> list:
    """``(chain index, (q-1) exponent, q exponent)`` for anti-chains inside a subset of P(1|w).

    ``inside`` is a bitmask over ``data.poset.walls``; heights are taken
    relative to that subset.  Memoized per mask.
    """
    terms = data._terms.get(inside)
    if terms is None:
        terms = []
        for k, cm in enumerate(data.chain_mask):
            if cm & ~inside:
                continue
            below = inside & ~data.above[k]
            qexp = tuple(a - (below & tm).bit_count() for a, tm in zip(data.lw, data.type_mask))
            terms.append((k, data.chain_types[k], qexp))
        data._terms[inside] = terms
    return terms


def _antichain_terms(data: WallData, u: GroupElement):
    """Terms over anti-chains of P(1|u,w)."""
    sep_u = separating_walls(u)
    return terms_for_mask(data, sum(1 << i for i, H in enumerate(data.poset.walls) if H in sep_u))


def mul_antichain_at(w: GroupElement, f: HeckeElement, params: HeckeParams, u: GroupElement):
    """``(e_w f)(u)`` as a sum over anti-chains h of P(1|u,w) of
    ``(q-1)^#h q^(l(w)-ht(h)) f(w^-1 h u)``."""
    data = wall_data(w)
    winv = w.inverse()
    total = 0
    for k, qm1, qexp in _antichain_terms(data, u):
        x = multiply(winv, multiply(data.chains[k].product, u))
        c = f[x]
        if not _zero(c):
            total = total + params.monomial(qm1, qexp) * c
    return total


def mul_antichain(w: GroupElement, f: HeckeElement, params: HeckeParams) -> HeckeElement:
    """``e_w f`` from the anti-chain closed form.

    Output support is bounded by ``{h w v : h anti-chain of P(1|w), v in supp f}``:
    a term for ``(u, h)`` needs ``w^-1 h u = v`` in the support of ``f``.
    For each candidate ``u`` the value ``f(w^-1 h u)`` is looked up by
    matching ``h`` against ``w v u^-1``.
    """
    data = wall_data(w)
    candidates: dict[GroupElement, None] = {}
    for hw in data.hw:
        for v in f.coeffs:
            candidates[left_apply(hw.word, v)] = None
    # h is an involution, so h = w v u^-1 iff h = u (w v)^-1
    wv_inv = {v: multiply(w, v).inverse() for v in f.coeffs}
    out: dict[GroupElement, object] = {}
    for u in candidates:
        lookup: dict[tuple[int, ...], object] = {}
        for v, c in f.coeffs.items():
            lookup[left_apply(u.word, wv_inv[v]).word] = c
        total = None
        for k, qm1, qexp in _antichain_terms(data, u):
            c = lookup.get(data.chains[k].product.word)
            if c is None:
                continue
            term = params.monomial(qm1, qexp) * c
            total = term if total is None else total + term
        if total is not None and not _zero(total):
            out[u] = total
    return HeckeElement(out)


def mul_antichain_ball(w: GroupElement, f: HeckeElement, params: HeckeParams) -> HeckeElement:
    """Same product, evaluating the pointwise formula over the whole ball of
    radius ``l(w) + max |supp f|``.  Slow; used to validate the support bound."""
    from .coxeter import ball

    out = {}
    for u in ball(w.system, w.length + f.support_radius()):
        c = mul_antichain_at(w, f, params, u)
        if not _zero(c):
            out[u] = c
    return HeckeElement(out)


def mul(a: HeckeElement, b: HeckeElement, params: HeckeParams, method: str = "recursive") -> HeckeElement:
    """Bilinear product ``a b``."""
    left = {"recursive": mul_recursive, "antichain": mul_antichain}[method]
    out = HeckeElement()
    for w, c in a.coeffs.items():
        out = out + left(w, b, params).scale(c)
    return out


def parse_coefficient(text: str):
    """Exact rational when possible, else complex/float."""
    text = str(text).strip()
    try:
        return Fraction(text)
    except ValueError:
        pass
    z = complex(text.replace("i", "j"))
    return z.real if z.imag == 0 else z


def as_number(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    if isinstance(c, Number):
        return c
    return c
