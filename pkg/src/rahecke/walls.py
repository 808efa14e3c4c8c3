"""Walls of a right-angled Coxeter complex and the separation poset.

A wall is identified with its reflection ``t``.  Half-spaces are taken
relative to the base chamber ``1``: a chamber ``v`` is on the *far* side
of ``t`` when ``l(t v) < l(v)``.

For the poset on a set of walls separating ``1`` from some ``D`` we use
the gate test: two walls whose reflections commute cross and are
incomparable; otherwise ``H < H2`` exactly when the far-side chamber of
``H2`` adjacent to ``H2`` (its gate) lies beyond ``H``.
"""
from __future__ import annotations

import enum
from collections.abc import Callable, Iterable
from itertools import combinations

from .coxeter import CoxeterError, CoxeterSystem, GroupElement, multiply


class Side(str, enum.Enum):
    NEAR = "near"
    FAR = "far"


class DegenerateError(ValueError):
    """A boundary point sits on the limit set of a wall."""


class Wall:
    """A wall, hashed by the normal form of its reflection."""

    __slots__ = ("reflection", "_canon", "_hash")

    def __init__(self, reflection: GroupElement):
        self.reflection = reflection
        self._canon = None
        self._hash = hash(("wall", reflection.word))

    @property
    def system(self) -> CoxeterSystem:
        return self.reflection.system

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Wall) and self.reflection == other.reflection

    def __lt__(self, other):
        return self.reflection < other.reflection

    def __repr__(self):
        return f"Wall({self.reflection})"

    def _canonical(self):
        if self._canon is None:
            sys = self.system
            t = self.reflection.word
            prefix: list[int] = []
            while len(t) > 1:
                for a in sorted(set(_left_descents(sys, t))):
                    t2 = sys.normal_form((a,) + t + (a,))
                    if len(t2) == len(t) - 2:
                        prefix.append(a)
                        t = t2
                        break
                else:
                    raise CoxeterError(f"{self.reflection} is not a reflection")
            u = sys.elem(sys.normal_form(prefix))
            self._canon = (u, t[0])
        return self._canon

    @property
    def canonical(self) -> tuple[GroupElement, int]:
        """``(u, s)`` with ``t = u s u^-1`` and ``l(t) = 2 l(u) + 1``."""
        return self._canonical()

    @property
    def type(self) -> int:
        return self._canonical()[1]

    @property
    def gate(self) -> GroupElement:
        """Far-side chamber adjacent to the wall: ``u s``."""
        u, s = self._canonical()
        return multiply(u, self.system.gen(s))


def _left_descents(sys: CoxeterSystem, word: tuple[int, ...]) -> list[int]:
    out = []
    seen = 0
    for a in word:
        if seen & ~sys._cmask[a] == 0:
            out.append(a)
        seen |= 1 << a
    return out


def wall(reflection: GroupElement) -> Wall:
    """Interned wall for a reflection."""
    sys = reflection.system
    reg = sys._wall_registry
    H = reg.get(reflection.word)
    if H is None:
        if len(reflection.word) % 2 == 0:
            raise CoxeterError(f"{reflection} has even length; not a reflection")
        H = reg[reflection.word] = Wall(reflection)
    return H


def conjugate_wall(p: GroupElement, s: int) -> Wall:
    """The wall of ``p s p^-1``."""
    sys = p.system
    return wall(sys.elem(sys.normal_form(p.word + (s,) + tuple(reversed(p.word)))))


def side(H: Wall, v: GroupElement) -> Side:
    t = H.reflection
    if not (t.system is v.system or t.system == v.system):
        raise CoxeterError("wall and element belong to different systems")
    tv = t.system.normal_form(t.word + v.word)
    return Side.FAR if len(tv) < len(v.word) else Side.NEAR


def separating_walls(g: GroupElement) -> frozenset[Wall]:
    """P(1|g), memoized on ``g``.

    Shortlex words are prefix closed, so ``P(1|g) = P(1|g') + {g' a g'^-1}``
    for ``g = g' a``.
    """
    if g._walls is None:
        if not g.word:
            g._walls = frozenset()
        else:
            sys = g.system
            prefix = sys.elem(g.word[:-1])
            g._walls = separating_walls(prefix) | {conjugate_wall(prefix, g.word[-1])}
    return g._walls


def walls_separating(u: GroupElement, v: GroupElement) -> frozenset[Wall]:
    """P(u|v) by walking a reduced word of ``u^-1 v`` and conjugating back."""
    if not u.word:
        return separating_walls(v)
    sys = u.system
    d = multiply(u.inverse(), v)
    out = set()
    for i, a in enumerate(d.word):
        p = sys.elem(sys.normal_form(u.word + d.word[:i]))
        out.add(conjugate_wall(p, a))
    return frozenset(out)


SideOracle = Callable[[Wall], bool]


def walls_separating_from_set(w: GroupElement, targets: SideOracle) -> list[Wall]:
    """Walls of P(1|w) that ``targets`` reports on the far side (P(1|x,w)).

    ``targets`` may raise :class:`DegenerateError`; it propagates.
    """
    return sorted(H for H in separating_walls(w) if targets(H))


def commute(H: Wall, H2: Wall) -> bool:
    a, b = H.reflection, H2.reflection
    sys = a.system
    return sys.normal_form(a.word + b.word) == sys.normal_form(b.word + a.word)


def poset_less(H: Wall, H2: Wall) -> bool:
    """Strict order ``H < H2`` on walls separating 1 from a common set."""
    if H == H2:
        raise CoxeterError("poset_less needs two distinct walls")
    if commute(H, H2):
        return False
    return side(H, H2.gate) is Side.FAR


class AntiChain:
    """Pairwise commuting walls and the product of their reflections."""

    __slots__ = ("walls", "product")

    def __init__(self, walls: Iterable[Wall], sys: CoxeterSystem):
        self.walls = frozenset(walls)
        word: tuple[int, ...] = ()
        for H in sorted(self.walls):
            word += H.reflection.word
        self.product = sys.elem(sys.normal_form(word))

    def __len__(self):
        return len(self.walls)

    def __iter__(self):
        return iter(sorted(self.walls))

    def __eq__(self, other):
        return isinstance(other, AntiChain) and self.walls == other.walls

    def __hash__(self):
        return hash(self.walls)

    def __repr__(self):
        return "AntiChain({" + ", ".join(str(H.reflection) for H in self) + "})"

    def type_counts(self) -> tuple[int, ...]:
        counts = [0] * self.product.system.rank
        for H in self.walls:
            counts[H.type] += 1
        return tuple(counts)


class WallPoset:
    """A finite set of walls with cached commutation and order relations."""

    def __init__(self, walls: Iterable[Wall], sys: CoxeterSystem | None = None):
        self.walls = sorted(set(walls))
        if sys is None:
            if not self.walls:
                raise CoxeterError("empty wall set needs an explicit system")
            sys = self.walls[0].system
        self.system = sys
        n = len(self.walls)
        self.index = {H: i for i, H in enumerate(self.walls)}
        self.commutes = [[False] * n for _ in range(n)]
        self.less = [[False] * n for _ in range(n)]
        for i, j in combinations(range(n), 2):
            Hi, Hj = self.walls[i], self.walls[j]
            if commute(Hi, Hj):
                self.commutes[i][j] = self.commutes[j][i] = True
            elif side(Hi, Hj.gate) is Side.FAR:
                self.less[i][j] = True
            else:
                self.less[j][i] = True
        self._chains = None

    def __len__(self):
        return len(self.walls)

    def antichains(self) -> list[AntiChain]:
        if self._chains is None:
            self._chains = [AntiChain([self.walls[i] for i in c], self.system) for c in self._cliques()]
        return self._chains

    def _cliques(self) -> list[tuple[int, ...]]:
        n = len(self.walls)
        out: list[tuple[int, ...]] = []

        def extend(chosen: tuple[int, ...], start: int):
            out.append(chosen)
            for j in range(start, n):
                if all(self.commutes[i][j] for i in chosen):
                    extend(chosen + (j,), j + 1)

        extend((), 0)
        return out

    def interval(self, h: Iterable[Wall], within: Iterable[Wall] | None = None) -> list[Wall]:
        """[1, h]: walls of the set not strictly above any member of ``h``."""
        members = [self.index[H] for H in h]
        pool = self.walls if within is None else within
        return [H for H in pool if not any(self.less[i][self.index[H]] for i in members)]

    def height(self, h: Iterable[Wall], within: Iterable[Wall] | None = None) -> int:
        return len(self.interval(h, within))

    def multi_height(self, h: Iterable[Wall], within: Iterable[Wall] | None = None) -> tuple[int, ...]:
        counts = [0] * self.system.rank
        for H in self.interval(h, within):
            counts[H.type] += 1
        return tuple(counts)


def antichains(P: Iterable[Wall], sys: CoxeterSystem | None = None) -> list[AntiChain]:
    return WallPoset(P, sys).antichains()


def height(h: AntiChain | Iterable[Wall], P: Iterable[Wall]) -> int:
    walls = h.walls if isinstance(h, AntiChain) else h
    return WallPoset(P).height(walls) if P else 0


def multi_height(h: AntiChain | Iterable[Wall], P: Iterable[Wall], sys: CoxeterSystem) -> tuple[int, ...]:
    walls = h.walls if isinstance(h, AntiChain) else h
    return WallPoset(P, sys).multi_height(walls)


def gallery_busemann(x: GroupElement, y: GroupElement, far_side: SideOracle, multi: bool = False):
    """Gallery Busemann function toward the boundary point described by ``far_side``.

    Returns ``lim l(y, c) - l(x, c)`` as chambers ``c`` converge to the
    point: walls of P(x|y) with the point on x's side count +1, walls with
    it on y's side count -1.  With ``multi=True`` the count is split by
    wall type.
    """
    sys = x.system
    counts = [0] * sys.rank
    for H in walls_separating(x, y):
        b_far = far_side(H)
        x_far = side(H, x) is Side.FAR
        counts[H.type] += 1 if b_far == x_far else -1
    return tuple(counts) if multi else sum(counts)


def gallery_distance(x: GroupElement, y: GroupElement) -> int:
    return multiply(x.inverse(), y).length
