"""Split root systems, Weyl groups and the integrability criteria.

Roots are integer coordinate vectors in the basis of simple roots, with
Bourbaki numbering of the nodes (1-based in the public API). All linear
algebra is exact.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import ModelDiagnosticError, ResourceGuardError, ValidationError
from .intmat import bareiss_det, bareiss_rank

DEFAULT_WEYL_CAP = 10**6

# classified root counts, Weyl group orders and Cartan determinants
_ROOT_COUNT = {
    "A": lambda n: n * (n + 1),
    "B": lambda n: 2 * n * n,
    "C": lambda n: 2 * n * n,
    "D": lambda n: 2 * n * (n - 1),
    "E": lambda n: {6: 72, 7: 126, 8: 240}[n],
    "F": lambda n: 48,
    "G": lambda n: 12,
}


def _factorial(n: int) -> int:
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


_WEYL_ORDER = {
    "A": lambda n: _factorial(n + 1),
    "B": lambda n: 2**n * _factorial(n),
    "C": lambda n: 2**n * _factorial(n),
    "D": lambda n: 2 ** (n - 1) * _factorial(n),
    "E": lambda n: {6: 51840, 7: 2903040, 8: 696729600}[n],
    "F": lambda n: 1152,
    "G": lambda n: 12,
}

_CARTAN_DET = {
    "A": lambda n: n + 1,
    "B": lambda n: 2,
    "C": lambda n: 2,
    "D": lambda n: 4,
    "E": lambda n: 9 - n,
    "F": lambda n: 1,
    "G": lambda n: 1,
}


def classified_root_count(cartan_type: str, rank: int) -> int:
    return _ROOT_COUNT[cartan_type](rank)


def classified_weyl_order(cartan_type: str, rank: int) -> int:
    return _WEYL_ORDER[cartan_type](rank)


def classified_cartan_determinant(cartan_type: str, rank: int) -> int:
    return _CARTAN_DET[cartan_type](rank)


def _validate_type(cartan_type: str, rank: int) -> None:
    if cartan_type not in _ROOT_COUNT:
        raise ValidationError(f"unknown Cartan type {cartan_type!r}; expected one of A-G")
    if not isinstance(rank, (int, np.integer)) or rank < 1:
        raise ValidationError(f"rank must be a positive integer, got {rank!r}")
    ok = {
        "A": rank >= 1,
        "B": rank >= 2,
        "C": rank >= 2,
        "D": rank >= 3,
        "E": rank in (6, 7, 8),
        "F": rank == 4,
        "G": rank == 2,
    }[cartan_type]
    if not ok:
        raise ValidationError(f"({cartan_type},{rank}) is not a classified Dynkin type")


def _symmetric_form(cartan_type: str, n: int) -> list[list[int]]:
    """Gram matrix of the simple roots, scaled so every entry is an integer."""
    B = [[0] * n for _ in range(n)]

    def bond(i: int, j: int, value: int) -> None:
        B[i - 1][j - 1] = B[j - 1][i - 1] = value

    if cartan_type in "AD" or cartan_type == "E":
        for i in range(n):
            B[i][i] = 2
    if cartan_type == "A":
        for i in range(1, n):
            bond(i, i + 1, -1)
    elif cartan_type == "B":
        for i in range(n - 1):
            B[i][i] = 2
        B[n - 1][n - 1] = 1
        for i in range(1, n):
            bond(i, i + 1, -1)
    elif cartan_type == "C":
        for i in range(n - 1):
            B[i][i] = 2
        B[n - 1][n - 1] = 4
        for i in range(1, n - 1):
            bond(i, i + 1, -1)
        bond(n - 1, n, -2)
    elif cartan_type == "D":
        for i in range(1, n - 1):
            bond(i, i + 1, -1)
        bond(n - 2, n, -1)
    elif cartan_type == "E":
        bond(1, 3, -1)
        bond(2, 4, -1)
        for i in range(3, n):
            bond(i, i + 1, -1)
    elif cartan_type == "F":
        for i, d in enumerate((4, 4, 2, 2)):
            B[i][i] = d
        bond(1, 2, -2)
        bond(2, 3, -2)
        bond(3, 4, -1)
    elif cartan_type == "G":
        B[0][0], B[1][1] = 2, 6
        bond(1, 2, -3)
    return B


@dataclass(frozen=True)
class DynkinDiagram:
    cartan_type: str
    rank: int
    form: tuple[tuple[int, ...], ...]

    @classmethod
    def of(cls, cartan_type: str, rank: int) -> "DynkinDiagram":
        _validate_type(cartan_type, rank)
        B = _symmetric_form(cartan_type, int(rank))
        return cls(cartan_type, int(rank), tuple(tuple(r) for r in B))

    @cached_property
    def cartan(self) -> tuple[tuple[int, ...], ...]:
        """``cartan[i][j] = <α_i, α_j^∨>``."""
        B = self.form
        n = self.rank
        return tuple(tuple(2 * B[i][j] // B[j][j] for j in range(n)) for i in range(n))

    @cached_property
    def edges(self) -> tuple[tuple[int, int, int], ...]:
        """``(i, j, multiplicity)`` with 1-based nodes, ``i < j``."""
        A = self.cartan
        out = []
        for i in range(self.rank):
            for j in range(i + 1, self.rank):
                if A[i][j] != 0:
                    out.append((i + 1, j + 1, A[i][j] * A[j][i]))
        return tuple(out)

    def neighbors(self, node: int) -> list[int]:
        return sorted(j if i == node else i for i, j, _ in self.edges if node in (i, j))

    def degree(self, node: int) -> int:
        return len(self.neighbors(node))

    def is_connected(self) -> bool:
        seen = {1}
        todo = [1]
        while todo:
            a = todo.pop()
            for b in self.neighbors(a):
                if b not in seen:
                    seen.add(b)
                    todo.append(b)
        return len(seen) == self.rank

    def cartan_determinant(self) -> int:
        return bareiss_det(self.cartan)


@dataclass(frozen=True)
class WeylElement:
    word: tuple[int, ...]
    action: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.word)


@dataclass
class RootDatum:
    diagram: DynkinDiagram
    roots: list[tuple[int, ...]]
    coroots: dict[tuple[int, ...], tuple[int, ...]]
    weyl_order: int
    _index: dict[tuple[int, ...], int] = field(default_factory=dict, repr=False)

    @property
    def rank(self) -> int:
        return self.diagram.rank

    def index(self, root: Iterable[int]) -> int:
        return self._index[tuple(root)]

    def positive(self, root: tuple[int, ...]) -> bool:
        return sum(root) > 0

    def reflect(self, root: tuple[int, ...], j: int) -> tuple[int, ...]:
        """Simple reflection ``s_j`` (0-based ``j``) applied to a root."""
        A = self.diagram.cartan
        pairing = sum(root[i] * A[i][j] for i in range(self.rank))
        out = list(root)
        out[j] -= pairing
        return tuple(out)

    @cached_property
    def simple_actions(self) -> list[tuple[int, ...]]:
        return [
            tuple(self._index[self.reflect(r, j)] for r in self.roots) for j in range(self.rank)
        ]

    def weyl_elements(self, weyl_cap: int = DEFAULT_WEYL_CAP) -> list[WeylElement]:
        """All of W in breadth-first order over right multiplication by s_j.

        Breadth-first discovery makes every stored word reduced.
        """
        if self.weyl_order > weyl_cap:
            raise ResourceGuardError(
                f"enumeration refused: |W| = {self.weyl_order} exceeds weyl_cap = {weyl_cap}"
            )
        sims = [np.asarray(s, dtype=np.int32) for s in self.simple_actions]
        ident = np.arange(len(self.roots), dtype=np.int32)
        seen = {ident.tobytes()}
        out = [WeylElement((), tuple(ident.tolist()))]
        queue = deque([(ident, ())])
        while queue:
            perm, word = queue.popleft()
            for j, s in enumerate(sims):
                new = perm[s]
                key = new.tobytes()
                if key in seen:
                    continue
                seen.add(key)
                w = word + (j + 1,)
                out.append(WeylElement(w, tuple(new.tolist())))
                queue.append((new, w))
        if len(out) != self.weyl_order:
            raise ModelDiagnosticError(
                f"Weyl closure produced {len(out)} elements, expected {self.weyl_order}"
            )
        return out

    def element_from_word(self, word: Iterable[int]) -> WeylElement:
        perm = list(range(len(self.roots)))
        word = tuple(word)
        for j in word:
            s = self.simple_actions[j - 1]
            perm = [perm[s[b]] for b in range(len(perm))]
        return WeylElement(word, tuple(perm))

    def inversion_count(self, w: WeylElement) -> int:
        return sum(
            1 for b, r in enumerate(self.roots) if self.positive(r) and not self.positive(self.roots[w.action[b]])
        )


def build_root_datum(cartan_type: str, rank: int) -> RootDatum:
    cartan_type = str(cartan_type).upper()
    diagram = DynkinDiagram.of(cartan_type, rank)
    if cartan_type == "D" and rank == 3:
        warnings.warn("D3 is isomorphic to A3; nodes follow the D-type numbering", stacklevel=2)
    n = diagram.rank
    A = diagram.cartan
    simple = [tuple(int(i == j) for i in range(n)) for j in range(n)]
    found = set(simple)
    todo = list(simple)
    while todo:
        r = todo.pop()
        for j in range(n):
            pairing = sum(r[i] * A[i][j] for i in range(n))
            if pairing == 0:
                continue
            s = list(r)
            s[j] -= pairing
            s = tuple(s)
            if s not in found:
                found.add(s)
                todo.append(s)
    roots = sorted(found, key=lambda r: (sum(r), r))
    expected = classified_root_count(cartan_type, n)
    if len(roots) != expected:
        raise ModelDiagnosticError(f"generated {len(roots)} roots, expected {expected}")

    B = diagram.form
    coroots = {}
    for r in roots:
        norm = sum(r[i] * B[i][j] * r[j] for i in range(n) for j in range(n))
        co = []
        for i in range(n):
            num = r[i] * B[i][i]
            if num % norm:
                raise ModelDiagnosticError(f"non-integral coroot for {r}")
            co.append(num // norm)
        coroots[r] = tuple(co)
    datum = RootDatum(diagram, roots, coroots, classified_weyl_order(cartan_type, n))
    datum._index.update({r: i for i, r in enumerate(roots)})
    return datum


@dataclass(frozen=True)
class ParabolicChoice:
    """Maximal parabolic obtained by deleting the simple root ``alpha`` (1-based)."""

    datum: RootDatum
    alpha: int

    def __post_init__(self) -> None:
        if not 1 <= self.alpha <= self.datum.rank:
            raise ValidationError(f"alpha must lie in [1, {self.datum.rank}], got {self.alpha}")

    @property
    def theta(self) -> frozenset[int]:
        return frozenset(range(1, self.datum.rank + 1)) - {self.alpha}


@dataclass(frozen=True)
class ParabolicSubset:
    """Standard parabolic given by an arbitrary subset ``theta`` of simple roots."""

    datum: RootDatum
    theta: frozenset[int]


def parabolic(cartan_type: str, rank: int, alpha: int) -> ParabolicChoice:
    return ParabolicChoice(build_root_datum(cartan_type, rank), alpha)


def is_l1_integrable(choice: ParabolicChoice | ParabolicSubset) -> bool:
    return choice.datum.rank - len(choice.theta) == 1


def is_linf_integrable(choice: ParabolicChoice) -> bool:
    return choice.datum.rank == 1


def l2_necessary_neighbor_test(choice: ParabolicChoice) -> bool:
    return choice.datum.diagram.degree(choice.alpha) <= 1


@dataclass(frozen=True)
class L2Verdict:
    holds: bool
    witness: WeylElement | None
    character_rank: int
    scanned: int


def _parabolic_mask(datum: RootDatum, alpha: int) -> list[bool]:
    a = alpha - 1
    return [sum(r) > 0 or r[a] == 0 for r in datum.roots]


def character_rank(choice: ParabolicChoice, w: WeylElement) -> int:
    """Rank of the rational character group of the connected part of L_w."""
    datum = choice.datum
    a = choice.alpha - 1
    n = datum.rank
    roots = datum.roots
    inv = [0] * len(roots)
    for b, image in enumerate(w.action):
        inv[image] = b
    in_l = _parabolic_mask(datum, choice.alpha)
    in_w = [in_l[b] and in_l[inv[b]] for b in range(len(roots))]
    neg = [datum.index(tuple(-x for x in r)) for r in roots]
    levi = [b for b in range(len(roots)) if in_w[b] and in_w[neg[b]]]

    for b in levi:
        co = datum.coroots[roots[b]]
        co_back = datum.coroots[roots[inv[b]]]
        if co[a] != 0 or co_back[a] != 0:
            raise ModelDiagnosticError(
                f"Levi coroot of {roots[b]} is not contained in t_w (w = {w.word})"
            )

    simple_idx = [datum.index(tuple(int(i == j) for i in range(n))) for j in range(n)]
    gens = []
    for j in range(n):
        if j == a:
            continue
        gens.append(list(datum.coroots[roots[simple_idx[j]]]))
        gens.append(list(datum.coroots[roots[w.action[simple_idx[j]]]]))
    dim_tw = 2 * (n - 1) - bareiss_rank(gens) if gens else 0
    levi_rank = bareiss_rank([list(datum.coroots[roots[b]]) for b in levi]) if levi else 0
    return dim_tw - levi_rank


def l2_necessary_full_test(choice: ParabolicChoice, weyl_cap: int = DEFAULT_WEYL_CAP) -> L2Verdict:
    """Scan W for an element whose L_w carries a nontrivial rational character.

    The character rank depends on w only through the root set w(Φ_L): the
    stabilizer of Φ_L in W is the Levi Weyl group, which also preserves
    ker(ϖ_α). Ranks are therefore cached on that set, and the scan still
    reports the first failing element in breadth-first order.
    """
    datum = choice.datum
    elements = datum.weyl_elements(weyl_cap)
    in_l = np.asarray(_parabolic_mask(datum, choice.alpha), dtype=bool)
    cache: dict[bytes, int] = {}
    for count, w in enumerate(elements, start=1):
        inv = np.argsort(np.asarray(w.action))
        key = np.packbits(in_l[inv]).tobytes()
        r = cache.get(key)
        if r is None:
            r = cache[key] = character_rank(choice, w)
        if r != 0:
            return L2Verdict(False, w, r, count)
    return L2Verdict(True, None, 0, len(elements))


def reflection_levi_inclusion_check(choice: ParabolicChoice) -> bool:
    datum = choice.datum
    n = datum.rank
    a = choice.alpha - 1
    s_alpha = datum.element_from_word((choice.alpha,))
    ball = {a} | {j - 1 for j in datum.diagram.neighbors(choice.alpha)}
    in_l = _parabolic_mask(datum, choice.alpha)
    inv = [0] * len(datum.roots)
    for b, image in enumerate(s_alpha.action):
        inv[image] = b
    for b, r in enumerate(datum.roots):
        if not (in_l[b] and in_l[inv[b]]):
            continue
        if sum(r) > 0:
            continue
        if any(r[i] != 0 for i in ball if i < n):
            return False
    return True
