"""Word-metric ball growth of integer matrix groups, exactly.

Two independent routes to the polynomial growth degree of a finitely
generated nilpotent group live here:

* :func:`ball_counts` enumerates the Cayley balls B(m) by breadth-first
  expansion with exact integer matrices as identity keys, and
  :func:`slow_growth_exponent` fits the degree of the resulting series;
* :func:`malcev_lcs_ranks` computes the torsion-free ranks of the lower
  central series through the logarithm correspondence with a rational
  nilpotent Lie algebra, and :func:`bass_guivarch` turns the ranks into
  the exact degree sum_k k*r_k.

Everything on the enumeration side is integer arithmetic and everything on
the Lie side is `fractions.Fraction`; no floats enter until the fit.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BudgetExceeded,
    NonInvertibleGenerator,
    NotUnitriangular,
)
from .fitting import fit_scaling


# ---------------------------------------------------------------------------
# exact matrix helpers (tuples of tuples of ints / Fractions)
# ---------------------------------------------------------------------------

def _as_int_matrix(rows):
    out = []
    for row in rows:
        new_row = []
        for v in row:
            iv = int(v)
            if iv != v:
                raise ValueError(f"non-integer matrix entry {v!r}")
            new_row.append(iv)
        out.append(tuple(new_row))
    mat = tuple(out)
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise ValueError("matrix must be square")
    return mat


def _identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def _matmul(a, b):
    n = len(a)
    bt = tuple(zip(*b))
    return tuple(
        tuple(sum(a[i][k] * bt[j][k] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def _det_exact(mat):
    """Determinant by fraction-free elimination; exact for integer input."""
    n = len(mat)
    m = [[Fraction(v) for v in row] for row in mat]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / inv
            if factor:
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return int(det) if det.denominator == 1 else det


def _int_inverse(mat):
    """Inverse of a matrix with det = +-1; exact integer result."""
    n = len(mat)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(mat)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise NonInvertibleGenerator("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col]
        aug[col] = [x / inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [x - factor * y for x, y in zip(aug[r], aug[col])]
    out = []
    for i in range(n):
        row = aug[i][n:]
        if any(v.denominator != 1 for v in row):
            raise NonInvertibleGenerator("inverse is not integral")
        out.append(tuple(int(v) for v in row))
    return tuple(out)


def _is_unitriangular(mat):
    n = len(mat)
    for i in range(n):
        if mat[i][i] != 1:
            return False
        for j in range(i):
            if mat[i][j] != 0:
                return False
    return True


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSet:
    """A finite generating set of an integer matrix group.

    Parameters
    ----------
    dimension : int
        Matrix size n.
    generators : sequence of n x n integer matrices
        Each must be invertible over the integers (determinant +-1).  The
        empty list is allowed and denotes the trivial group.
    unitriangular : bool
        Set when every generator is upper triangular with unit diagonal;
        checked on construction.
    """

    dimension: int
    generators: tuple
    unitriangular: bool

    def __init__(self, dimension, generators, unitriangular=None):
        mats = tuple(_as_int_matrix(g) for g in generators)
        for g in mats:
            if len(g) != dimension:
                raise ValueError("generator size does not match dimension")
            if _det_exact(g) not in (1, -1):
                raise NonInvertibleGenerator(
                    "generator determinant is not +-1: rows=" + repr(g)
                )
        all_uni = all(_is_unitriangular(g) for g in mats)
        if unitriangular is None:
            unitriangular = all_uni
        elif unitriangular and not all_uni:
            raise NotUnitriangular(
                "unitriangular flag set but a generator is not unit upper triangular"
            )
        object.__setattr__(self, "dimension", int(dimension))
        object.__setattr__(self, "generators", mats)
        object.__setattr__(self, "unitriangular", bool(unitriangular))

    def fingerprint(self):
        """Stable content hash, independent of process and platform."""
        text = f"{self.dimension};" + "|".join(
            ",".join(str(v) for row in g for v in row) for g in self.generators
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def symmetrized(self):
        """Generators together with their inverses, deduplicated."""
        seen = {}
        for g in self.generators:
            seen[g] = None
            seen[_int_inverse(g)] = None
        return list(seen)


@dataclass(frozen=True)
class GrowthSeries:
    """Exact ball sizes counts[m] = |B(m)| for m = 0..m_max."""

    counts: tuple
    generator_fingerprint: str = ""

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts or counts[0] != 1:
            raise ValueError("counts[0] must be 1 (the identity)")
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise ValueError("ball sizes must be non-decreasing")
        n = len(counts)
        for a in range(n):
            for b in range(a, n - a):
                if counts[a + b] > counts[a] * counts[b]:
                    raise ValueError(
                        f"submultiplicativity violated at ({a},{b})"
                    )

    @property
    def m_max(self):
        return len(self.counts) - 1


@dataclass(frozen=True)
class LcsRanks:
    """Torsion-free ranks r_1..r_c of the lower-central-series quotients."""

    ranks: tuple

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "ranks", ranks)
        if any(r < 0 for r in ranks):
            raise ValueError("ranks must be non-negative")
        if ranks and ranks[-1] <= 0:
            raise ValueError("trailing rank must be positive")


@dataclass(frozen=True)
class SlowGrowthFit:
    """Fitted growth degree over a trailing index window."""

    exponent: float
    window: tuple
    residual: float
    classification: str


# ---------------------------------------------------------------------------
# ball enumeration
# ---------------------------------------------------------------------------

def ball_counts(gens: GeneratorSet, m_max, element_budget=2_000_000):
    """Exact Cayley-ball sizes |B(m)| for m = 0..m_max.

    Breadth-first frontier expansion over products with S and S^-1;
    deduplication keys are the exact integer matrix entries, so counts are
    exact whatever the group.  Raises :class:`BudgetExceeded` (carrying the
    partial series) once more than ``element_budget`` distinct elements
    have been seen; hitting the budget on a modest ``m_max`` is the
    practical signature of exponential growth.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    steps = gens.symmetrized()
    identity = _identity(gens.dimension)
    seen = {identity}
    frontier = [identity]
    counts = [1]
    for m in range(1, m_max + 1):
        next_frontier = []
        for elem in frontier:
            for s in steps:
                prod = _matmul(elem, s)
                if prod not in seen:
                    seen.add(prod)
                    next_frontier.append(prod)
                    if len(seen) > element_budget:
                        raise BudgetExceeded(
                            f"ball size exceeded element budget {element_budget} "
                            f"at radius {m}",
                            partial=GrowthSeries(
                                tuple(counts),
                                generator_fingerprint=gens.fingerprint(),
                            ),
                        )
        frontier = next_frontier
        counts.append(len(seen))
    return GrowthSeries(tuple(counts), generator_fingerprint=gens.fingerprint())


def slow_growth_exponent(series: GrowthSeries, window_fraction=0.5):
    """Fit the growth degree from a ball-size series.

    The fit runs on the trailing ``window_fraction`` of the radii m >= 1
    (m = 0 has no log abscissa).  See :mod:`slowvol.fitting` for the
    polynomial/exponential/inconclusive classification rule.
    """
    counts = series.counts
    ms = list(range(1, len(counts)))
    fit = fit_scaling(ms, counts[1:], window_fraction=window_fraction)
    window = (int(fit.window[0]), int(fit.window[1]))
    return SlowGrowthFit(
        exponent=fit.exponent,
        window=window,
        residual=fit.residual,
        classification=fit.classification,
    )


# ---------------------------------------------------------------------------
# nilpotent ranks through the logarithm correspondence
# ---------------------------------------------------------------------------

def _frac_matrix(mat):
    return [[Fraction(v) for v in row] for row in mat]


def _frac_matmul(a, b):
    n = len(a)
    return [
        [sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
        for i in range(n)
    ]


def _nilpotent_log(mat):
    """log of a unit upper-triangular matrix; the series is finite."""
    n = len(mat)
    nil = [[Fraction(mat[i][j]) - (1 if i == j else 0) for j in range(n)]
           for i in range(n)]
    term = [row[:] for row in nil]
    total = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n):
        sign = Fraction((-1) ** (k + 1), k)
        for i in range(n):
            for j in range(n):
                total[i][j] += sign * term[i][j]
        if k < n - 1:
            term = _frac_matmul(term, nil)
    return total


def _bracket(a, b):
    ab = _frac_matmul(a, b)
    ba = _frac_matmul(b, a)
    n = len(a)
    return [[ab[i][j] - ba[i][j] for j in range(n)] for i in range(n)]


def _flatten(mat):
    return [v for row in mat for v in row]


class _RationalSpan:
    """Row-echelon basis over Q with exact Fraction arithmetic."""

    def __init__(self):
        self.rows = []  # reduced rows, each with its pivot index

    def _reduce(self, vec):
        vec = vec[:]
        for pivot, row in self.rows:
            if vec[pivot]:
                factor = vec[pivot]
                for i in range(len(vec)):
                    vec[i] -= factor * row[i]
        return vec

    def add(self, vec):
        """Insert vector; returns True when it enlarged the span."""
        vec = self._reduce(vec)
        pivot = next((i for i, v in enumerate(vec) if v), None)
        if pivot is None:
            return False
        inv = vec[pivot]
        vec = [v / inv for v in vec]
        for other_pivot, row in self.rows:
            if row[pivot]:
                factor = row[pivot]
                for i in range(len(row)):
                    row[i] -= factor * vec[i]
        self.rows.append((pivot, vec))
        return True

    @property
    def dim(self):
        return len(self.rows)


def malcev_lcs_ranks(gens: GeneratorSet):
    """Lower-central-series ranks of a unitriangular integer matrix group.

    The generators are mapped to the rational nilpotent Lie algebra through
    the (finite) matrix logarithm; the algebra they generate is closed
    under the bracket, its lower central series g_1 >= g_2 >= ... is
    computed by exact rational elimination, and the ranks are the
    consecutive dimension drops.  For lattices in simply connected
    nilpotent Lie groups these equal the group-theoretic torsion-free
    ranks, which is what feeds :func:`bass_guivarch`.
    """
    if not gens.unitriangular:
        raise NotUnitriangular("malcev_lcs_ranks requires unitriangular generators")
    logs = [_nilpotent_log(g) for g in gens.generators]

    span = _RationalSpan()
    basis = []
    queue = list(logs)
    while queue:
        candidate = queue.pop()
        if span.add(_flatten(candidate)):
            queue.extend(_bracket(candidate, b) for b in basis)
            basis.append(candidate)

    dims = []
    layer = basis
    layer_dim = span.dim
    while layer_dim > 0:
        dims.append(layer_dim)
        next_span = _RationalSpan()
        next_basis = []
        for a in basis:
            for b in layer:
                w = _bracket(a, b)
                if next_span.add(_flatten(w)):
                    next_basis.append(w)
        layer = next_basis
        layer_dim = next_span.dim
    ranks = [dims[i] - (dims[i + 1] if i + 1 < len(dims) else 0)
             for i in range(len(dims))]
    return LcsRanks(tuple(ranks))


def bass_guivarch(ranks):
    """Exact growth degree sum_k k * r_k of a nilpotent group."""
    seq = ranks.ranks if isinstance(ranks, LcsRanks) else tuple(ranks)
    return sum((k + 1) * r for k, r in enumerate(seq))


def hirsch_length(ranks):
    """Hirsch length sum_k r_k."""
    seq = ranks.ranks if isinstance(ranks, LcsRanks) else tuple(ranks)
    return sum(seq)


def hirsch_bound(ranks):
    """Upper bound 1 + (h-1)h/2 on the degree in terms of the Hirsch length."""
    h = hirsch_length(ranks)
    return 1 + (h - 1) * h // 2


# ---------------------------------------------------------------------------
# builtin generator sets
# ---------------------------------------------------------------------------

def heisenberg():
    """Discrete Heisenberg group: 3x3 unitriangular X = E(1,2), Y = E(2,3)."""
    x = ((1, 1, 0), (0, 1, 0), (0, 0, 1))
    y = ((1, 0, 0), (0, 1, 1), (0, 0, 1))
    return GeneratorSet(3, (x, y), unitriangular=True)


def lattice_translations(vectors):
    """Z^d-style group of translations by the given integer vectors.

    Each vector v becomes the (d+1) x (d+1) unitriangular matrix I + sum_j
    v_j E(1, j+1); these commute, so the group is the lattice they span.
    """
    vectors = [tuple(int(c) for c in v) for v in vectors]
    if not vectors:
        raise ValueError("need at least one translation vector")
    d = len(vectors[0])
    if any(len(v) != d for v in vectors):
        raise ValueError("translation vectors must share a dimension")
    mats = []
    for v in vectors:
        rows = [[1] + list(v)]
        for i in range(d):
            rows.append([0] + [1 if j == i else 0 for j in range(d)])
        mats.append(tuple(tuple(r) for r in rows))
    return GeneratorSet(d + 1, mats, unitriangular=True)


def integer_lattice(d):
    """Z^d with the standard basis translations."""
    return lattice_translations(
        [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    )


def unitriangular_group(n):
    """Full unit upper-triangular n x n integer group, all elementary generators."""
    mats = []
    for i in range(n):
        for j in range(i + 1, n):
            rows = [[1 if a == b else 0 for b in range(n)] for a in range(n)]
            rows[i][j] = 1
            mats.append(tuple(tuple(r) for r in rows))
    return GeneratorSet(n, mats, unitriangular=True)


def free_group_pair():
    """A free group of rank 2 inside SL(2, Z); exponential-growth contrast."""
    a = ((1, 2), (0, 1))
    b = ((1, 0), (2, 1))
    return GeneratorSet(2, (a, b), unitriangular=False)


BUILTIN_GENERATORS = {
    "heisenberg": heisenberg,
    "z1": lambda: integer_lattice(1),
    "z2": lambda: integer_lattice(2),
    "z3": lambda: integer_lattice(3),
    "z2_hex": lambda: lattice_translations([(1, 0), (0, 1), (1, 1)]),
    "ut4": lambda: unitriangular_group(4),
    "free2": free_group_pair,
}


# ---------------------------------------------------------------------------
# external formats
# ---------------------------------------------------------------------------

def load_generator_file(path):
    """Read the plain-text matrix format: "n k" then k blocks of n rows."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: expected a header line 'n k'")
    n, k = int(tokens[0]), int(tokens[1])
    need = 2 + k * n * n
    if len(tokens) != need:
        raise ValueError(
            f"{path}: expected {need - 2} matrix entries for {k} matrices "
            f"of size {n}, got {len(tokens) - 2}"
        )
    values = [int(t) for t in tokens[2:]]
    mats = []
    pos = 0
    for _ in range(k):
        rows = []
        for _ in range(n):
            rows.append(tuple(values[pos:pos + n]))
            pos += n
        mats.append(tuple(rows))
    return GeneratorSet(n, mats)


def save_generator_file(path, gens: GeneratorSet):
    with open(path, "w") as fh:
        fh.write(f"{gens.dimension} {len(gens.generators)}\n")
        for g in gens.generators:
            for row in g:
                fh.write(" ".join(str(v) for v in row) + "\n")


def write_growth_csv(path, series: GrowthSeries):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "count"])
        for m, c in enumerate(series.counts):
            writer.writerow([m, c])


def read_growth_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["m", "count"]:
            raise ValueError(f"{path}: expected header 'm,count'")
        counts = [int(row[1]) for row in reader]
    return GrowthSeries(tuple(counts))
