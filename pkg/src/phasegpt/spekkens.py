"""Exact-rational engine for the four-state toy model: stationary polytopes, volumes, measurements."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from fractions import Fraction

HALF = Fraction(1, 2)
ONTIC = 4


class HullWarning(UserWarning):
    """The vector is outside the convex hull of the pure epistemic states."""


@dataclass(frozen=True)
class EpistemicState:
    p: tuple

    def __post_init__(self):
        p = tuple(Fraction(x) for x in self.p)
        if len(p) != ONTIC:
            raise ValueError("an epistemic state has four entries")
        if sum(p) != 1:
            raise ValueError(f"entries must sum to 1, got {sum(p)}")
        object.__setattr__(self, "p", p)

    @property
    def in_hull(self) -> bool:
        return all(0 <= x <= HALF for x in self.p)

    def permuted(self, perm: "ToyTransformation") -> "EpistemicState":
        out = [Fraction(0)] * ONTIC
        for i, x in enumerate(self.p):
            out[perm.images[i]] = x
        return EpistemicState(tuple(out))

    def label(self) -> str:
        return "(" + ",".join(str(x) for x in self.p) + ")"


def pair_state(a: int, b: int) -> EpistemicState:
    """Pure epistemic state a v b with ontic labels 1..4."""
    if a == b or not (1 <= a <= ONTIC and 1 <= b <= ONTIC):
        raise ValueError("need two distinct ontic labels in 1..4")
    p = [Fraction(0)] * ONTIC
    p[a - 1] = p[b - 1] = HALF
    return EpistemicState(tuple(p))


PURE_STATES = tuple(pair_state(a, b) for a, b in itertools.combinations(range(1, ONTIC + 1), 2))
MAXIMALLY_MIXED = EpistemicState((Fraction(1, 4),) * ONTIC)


@dataclass(frozen=True)
class ToyTransformation:
    """Permutation of the ontic states; ``images[i]`` is where state i goes (0-based)."""

    images: tuple

    def __post_init__(self):
        if sorted(self.images) != list(range(ONTIC)):
            raise ValueError(f"not a permutation of four states: {self.images}")
        object.__setattr__(self, "images", tuple(self.images))

    @classmethod
    def from_cycles(cls, *cycles) -> "ToyTransformation":
        """Build from 1-based cycles, e.g. ``from_cycles((1, 2, 3))``."""
        images = list(range(ONTIC))
        seen = set()
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                if a in seen:
                    raise ValueError(f"label {a} appears in two cycles")
                seen.add(a)
                images[a - 1] = b - 1
        return cls(tuple(images))

    def cycles(self) -> list:
        """Disjoint cycles (0-based), fixed points included, in order of smallest element."""
        seen, out = set(), []
        for start in range(ONTIC):
            if start in seen:
                continue
            cyc, i = [], start
            while i not in seen:
                seen.add(i)
                cyc.append(i)
                i = self.images[i]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> tuple:
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))

    def notation(self) -> str:
        nontrivial = [c for c in self.cycles() if len(c) > 1]
        if not nontrivial:
            return "id"
        return "".join("(" + "".join(str(i + 1) for i in c) + ")" for c in nontrivial)


def all_permutations() -> list:
    return [ToyTransformation(p) for p in itertools.permutations(range(ONTIC))]


def stationary_polytope_vertices(perm: ToyTransformation) -> list:
    """Vertices of the hull intersected with the fixed points of ``perm``.

    Fixed points are constant on cycles, so the polytope is
    {0 <= x_c <= 1/2, sum_c |c| x_c = 1} in one variable per cycle. A vertex
    has every variable but one at a bound; the remaining one is solved for.
    """
    cycles = perm.cycles()
    sizes = [len(c) for c in cycles]
    found = []
    for free in range(len(cycles)):
        others = [c for c in range(len(cycles)) if c != free]
        for bounds in itertools.product((Fraction(0), HALF), repeat=len(others)):
            x = dict(zip(others, bounds))
            rest = 1 - sum(sizes[c] * x[c] for c in others)
            x[free] = rest / sizes[free]
            if not 0 <= x[free] <= HALF:
                continue
            p = [Fraction(0)] * ONTIC
            for c, members in enumerate(cycles):
                for i in members:
                    p[i] = x[c]
            state = EpistemicState(tuple(p))
            if state not in found:
                found.append(state)
    return sorted(found, key=lambda s: tuple(-x for x in s.p))


def dot(f: EpistemicState, g: EpistemicState) -> Fraction:
    return sum((a * b for a, b in zip(f.p, g.p)), Fraction(0))


def toy_state_volume(s: EpistemicState) -> Fraction:
    """V = 1 / sum p_i^2; warns for vectors outside the epistemic hull."""
    if not s.in_hull:
        warnings.warn(f"{s.label()} is outside the epistemic hull", HullWarning, stacklevel=2)
    return 1 / dot(s, s)


def toy_measure(g: EpistemicState, f: EpistemicState) -> Fraction:
    """Probability that the effect built from g fires on f: V_g (f . g)."""
    return toy_state_volume(g) * dot(f, g)


@dataclass(frozen=True)
class DualMeasurementResult:
    exists: bool
    effects: tuple = ()
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.exists


def state_dual_measurement_exists(perm: ToyTransformation) -> DualMeasurementResult:
    """Whether the pure stationary states of ``perm`` form a state-dual measurement.

    Every vertex has to take part, so the vertices must be pairwise
    orthogonal and sum_i V_i g_i must be the all-ones vector. On failure the
    witness is the first non-orthogonal pair, or None if the vertices are
    orthogonal but incomplete.
    """
    verts = stationary_polytope_vertices(perm)
    for a, b in itertools.combinations(verts, 2):
        if dot(a, b) != 0:
            return DualMeasurementResult(False, (), (a, b))
    total = [sum(toy_state_volume(v) * v.p[i] for v in verts) for i in range(ONTIC)]
    if total != [1] * ONTIC:
        return DualMeasurementResult(False, (), None)
    return DualMeasurementResult(True, tuple(verts))


def permutations_sharing_vertices(perm: ToyTransformation) -> list:
    """All permutations whose stationary vertex set equals that of ``perm``."""
    target = set(stationary_polytope_vertices(perm))
    return [q for q in all_permutations() if set(stationary_polytope_vertices(q)) == target]


def dynamics_determined(perm: ToyTransformation) -> bool:
    """True when the stationary vertices single out ``perm`` among all 24 permutations."""
    return len(permutations_sharing_vertices(perm)) == 1


def classification_table() -> list:
    """One row per permutation: cycle type, vertices, volumes, measurement and determinacy."""
    rows = []
    for perm in all_permutations():
        verts = stationary_polytope_vertices(perm)
        dual = state_dual_measurement_exists(perm)
        rows.append({
            "permutation": perm.notation(),
            "cycle_type": "".join(str(n) for n in perm.cycle_type()),
            "vertices": [v.label() for v in verts],
            "volumes": [str(toy_state_volume(v)) for v in verts],
            "dual_measurement": dual.exists,
            "witness": [w.label() for w in dual.witness] if dual.witness else None,
            "determined_by_stationary_states": dynamics_determined(perm),
        })
    return rows


def table_text(rows=None) -> str:
    rows = classification_table() if rows is None else rows
    lines = ["permutation\tcycle_type\tvertices\tvolumes\tdual_measurement\tdetermined"]
    for r in rows:
        lines.append("\t".join([r["permutation"], r["cycle_type"], " ".join(r["vertices"]),
                                " ".join(r["volumes"]), str(r["dual_measurement"]).lower(),
                                str(r["determined_by_stationary_states"]).lower()]))
    return "\n".join(lines) + "\n"
