"""Right-angled Coxeter systems: words, ShortLex normal forms, balls.

Generators are stored internally as integers ``0 .. n-1``; the label of
generator ``i`` is ``sys.labels[i]`` (``"s0"``, ``"s1"``, ... by default).
Every :class:`GroupElement` carries its ShortLex normal form, so equality
and hashing are plain tuple operations.
"""
from __future__ import annotations

import re
from collections.abc import Iterable, Sequence

import numpy as np


class CoxeterError(ValueError):
    """Bad input to a Coxeter-group operation."""


class CoxeterSystem:
    """A right-angled Coxeter system.

    Parameters
    ----------
    commute : array-like of bool, shape (n, n)
        ``commute[i][j]`` is true when generators i and j commute (m = 2).
        Off-diagonal false entries mean m = infinity.  Must be symmetric
        with a false diagonal.
    labels : sequence of str, optional
    polygon : int, optional
        Number of sides when the system is the reflection group of a
        right-angled hyperbolic polygon.
    """

    def __init__(self, commute, labels: Sequence[str] | None = None, polygon: int | None = None):
        m = np.asarray(commute, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise CoxeterError("commutation matrix must be square")
        if not np.array_equal(m, m.T):
            raise CoxeterError("commutation relation must be symmetric")
        if m.diagonal().any():
            raise CoxeterError("commutation relation must be irreflexive")
        self.rank = m.shape[0]
        self.commute_matrix = m
        if labels is None:
            labels = [f"s{i}" for i in range(self.rank)]
        if len(labels) != self.rank or len(set(labels)) != self.rank:
            raise CoxeterError("need one distinct label per generator")
        self.labels = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        self.polygon = polygon
        # bitmask of generators commuting with i
        self._cmask = [sum(1 << j for j in range(self.rank) if m[i, j]) for i in range(self.rank)]
        self._key = (self.labels, m.tobytes())
        self._interned: dict[tuple[int, ...], GroupElement] = {}
        self._wall_registry: dict = {}
        self._hecke_cache: dict = {}

    @classmethod
    def polygon_group(cls, k: int = 5) -> "CoxeterSystem":
        """Reflection group of the regular right-angled k-gon (k >= 5)."""
        if k < 5:
            raise CoxeterError(f"no compact right-angled hyperbolic {k}-gon; need k >= 5")
        m = np.zeros((k, k), dtype=bool)
        for i in range(k):
            m[i, (i + 1) % k] = m[(i + 1) % k, i] = True
        return cls(m, polygon=k)

    def __eq__(self, other):
        return isinstance(other, CoxeterSystem) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        if self.polygon is not None:
            return f"CoxeterSystem.polygon_group({self.polygon})"
        return f"CoxeterSystem(rank={self.rank})"

    def commutes(self, a: int, b: int) -> bool:
        return bool(self._cmask[a] >> b & 1)

    def elem(self, word: tuple[int, ...]) -> "GroupElement":
        """Interned element for a word already in normal form."""
        g = self._interned.get(word)
        if g is None:
            g = self._interned[word] = GroupElement(self, word)
        return g

    def clear_cache(self) -> None:
        self._interned.clear()
        self._wall_registry.clear()
        self._hecke_cache.clear()

    @property
    def identity(self) -> "GroupElement":
        return self.elem(())

    def gen(self, s) -> "GroupElement":
        return self.elem((self._letter(s),))

    def generators(self) -> list["GroupElement"]:
        return [self.elem((i,)) for i in range(self.rank)]

    def _letter(self, s) -> int:
        if isinstance(s, (int, np.integer)) and not isinstance(s, bool):
            if 0 <= s < self.rank:
                return int(s)
        elif isinstance(s, str) and s in self.index:
            return self.index[s]
        raise CoxeterError(f"unknown generator {s!r}")

    def parse(self, text: str) -> "GroupElement":
        """Parse ``"s0 s2 s0"``, ``"s0*s2"`` or ``"1"``/``""`` for the identity."""
        toks = text.replace("*", " ").replace(",", " ").split()
        if toks in ([], ["1"], ["e"]):
            return self.identity
        pattern = "|".join(re.escape(lab) for lab in sorted(self.labels, key=len, reverse=True))
        letters = []
        for tok in toks:
            parts = re.findall(pattern, tok)
            if "".join(parts) != tok:
                raise CoxeterError(f"cannot parse {tok!r} as a word in {self.labels}")
            letters.extend(parts)
        return self.element(letters)

    def element(self, raw: Iterable) -> "GroupElement":
        return reduce(raw, self)

    # -- word algorithms on integer tuples ---------------------------------

    def _reduce_word(self, word: Iterable[int]) -> list[int]:
        """Freely reduced word via left-to-right stack insertion.

        Appending ``a`` cancels the last occurrence of ``a`` that can be
        shuffled to the end (all later letters commute with ``a``).
        """
        out: list[int] = []
        cm = self._cmask
        for a in word:
            mask = cm[a]
            j = len(out) - 1
            while j >= 0:
                b = out[j]
                if b == a:
                    del out[j]
                    break
                if not (mask >> b & 1):
                    out.append(a)
                    break
                j -= 1
            else:
                out.append(a)
        return out

    def _shortlex(self, reduced: list[int]) -> tuple[int, ...]:
        """Lexicographically least rearrangement by commutations."""
        cm = self._cmask
        rest = list(reduced)
        out = []
        while rest:
            best = None
            seen_mask = 0
            for i, a in enumerate(rest):
                # a may move to the front iff it commutes with every earlier letter
                if seen_mask & ~cm[a] == 0:
                    if best is None or a < rest[best]:
                        best = i
                seen_mask |= 1 << a
            out.append(rest.pop(best))
        return tuple(out)

    def normal_form(self, word: Iterable[int]) -> tuple[int, ...]:
        return self._shortlex(self._reduce_word(word))


class GroupElement:
    """An element of a right-angled Coxeter group in ShortLex normal form."""

    __slots__ = ("system", "word", "_hash", "_lmul", "_walls")

    def __init__(self, system: CoxeterSystem, word: tuple[int, ...]):
        # callers guarantee ``word`` is already in normal form; use
        # CoxeterSystem.elem to get interned instances
        self.system = system
        self.word = word
        self._hash = hash(word)
        self._lmul = None
        self._walls = None

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return (
            isinstance(other, GroupElement)
            and self.word == other.word
            and (self.system is other.system or self.system == other.system)
        )

    def __lt__(self, other):
        return (len(self.word), self.word) < (len(other.word), other.word)

    def __repr__(self):
        return f"GroupElement({self})"

    def __str__(self):
        if not self.word:
            return "1"
        return "".join(self.system.labels[a] for a in self.word)

    def __len__(self):
        return len(self.word)

    @property
    def length(self) -> int:
        return len(self.word)

    @property
    def multi_length(self) -> tuple[int, ...]:
        """Number of letters of each generator type (walls of each type crossed)."""
        counts = [0] * self.system.rank
        for a in self.word:
            counts[a] += 1
        return tuple(counts)

    def labels(self) -> list[str]:
        return [self.system.labels[a] for a in self.word]

    def is_identity(self) -> bool:
        return not self.word

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return multiply(self, other)

    def inverse(self) -> "GroupElement":
        return self.system.elem(self.system.normal_form(reversed(self.word)))

    def left_mul_gen(self, s: int) -> "GroupElement":
        """``s * self``, memoized on the element."""
        lm = self._lmul
        if lm is None:
            lm = self._lmul = [None] * self.system.rank
        g = lm[s]
        if g is None:
            sys = self.system
            g = lm[s] = sys.elem(sys.normal_form((s,) + self.word))
            if g._lmul is None:
                g._lmul = [None] * sys.rank
            g._lmul[s] = self
        return g

    def descends_left(self, s: int) -> bool:
        """True iff l(s w) < l(w)."""
        cm = self.system._cmask[s]
        for b in self.word:
            if b == s:
                return True
            if not (cm >> b & 1):
                return False
        return False


def reduce(raw: Iterable, sys: CoxeterSystem) -> GroupElement:
    """ShortLex normal form of a word given by generator labels or indices."""
    letters = [sys._letter(s) for s in raw]
    return sys.elem(sys.normal_form(letters))


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    if not (a.system is b.system or a.system == b.system):
        raise CoxeterError("elements belong to different Coxeter systems")
    if not a.word:
        return b
    if not b.word:
        return a
    sys = a.system
    return sys.elem(sys.normal_form(a.word + b.word))


def product(elements: Iterable[GroupElement], sys: CoxeterSystem) -> GroupElement:
    word: tuple[int, ...] = ()
    for g in elements:
        word += g.word
    return sys.elem(sys.normal_form(word))


def spheres(sys: CoxeterSystem, radius: int) -> list[list[GroupElement]]:
    """Spheres of radius 0..radius, each sorted ShortLex, via BFS with dedup."""
    if radius < 0:
        raise CoxeterError("radius must be non-negative")
    layers = [[sys.identity]]
    for _ in range(radius):
        nxt = {}
        for w in layers[-1]:
            for s in range(sys.rank):
                if not w.descends_left(s):
                    g = w.left_mul_gen(s)
                    nxt[g.word] = g
        layers.append([nxt[wd] for wd in sorted(nxt)])
    return layers


def ball(sys: CoxeterSystem, radius: int) -> list[GroupElement]:
    """All elements of length <= radius, ShortLex ordered."""
    return [w for layer in spheres(sys, radius) for w in layer]


def left_apply(word: Sequence[int], g: GroupElement) -> GroupElement:
    """``(a_1 ... a_n) * g`` through memoized generator multiplications."""
    for a in reversed(word):
        g = g.left_mul_gen(a)
    return g
