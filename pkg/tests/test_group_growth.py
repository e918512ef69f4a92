"""Cayley-ball growth of matrix groups and the degree formula.

Ball counts are cross-checked against closed forms (lattices, free group)
and an independent brute-force enumeration written directly on the
Heisenberg normal form, not through the matrix machinery under test.
"""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from slowvol.errors import (
    BudgetExceeded,
    NonInvertibleGenerator,
    NotUnitriangular,
)
from slowvol.group_growth import (
    GeneratorSet,
    ball_counts,
    bass_guivarch,
    free_group_pair,
    heisenberg,
    hirsch_bound,
    hirsch_length,
    integer_lattice,
    lattice_translations,
    load_generator_file,
    malcev_lcs_ranks,
    read_growth_csv,
    save_generator_file,
    slow_growth_exponent,
    unitriangular_group,
    write_growth_csv,
)


def _l1_count(d, m):
    """|{v in Z^d : |v|_1 <= m}|: choose the k nonzero axes, their signs,
    and a composition of the coordinate budget."""
    return sum(
        math.comb(d, k) * 2**k * math.comb(m, k) for k in range(0, d + 1)
    )


def heisenberg_ball_oracle(m_max):
    """BFS on normal-form triples (a, b, c): x = (1,0,0), y = (0,1,0).

    Right multiplication by the matrix generators acts on
    (a, b, c) -> upper-unitriangular entries (x-count, y-count, corner).
    """
    gens = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]

    def mul(g, h):
        a1, b1, c1 = g
        a2, b2, c2 = h
        return (a1 + a2, b1 + b2, c1 + c2 + a1 * b2)

    ball = {(0, 0, 0)}
    frontier = {(0, 0, 0)}
    counts = [1]
    for _ in range(m_max):
        frontier = {mul(g, s) for g in frontier for s in gens} - ball
        ball |= frontier
        counts.append(len(ball))
    return counts


class TestLatticeCounts:
    def test_z2_small_counts(self):
        series = ball_counts(integer_lattice(2), 2)
        assert series.counts == (1, 5, 13)

    def test_z3_counts_match_closed_form(self):
        series = ball_counts(integer_lattice(3), 4)
        assert series.counts == (1, 7, 25, 63, 129)
        for m, c in enumerate(series.counts):
            assert c == _l1_count(3, m)

    @given(d=st.integers(min_value=1, max_value=3), m=st.integers(min_value=1, max_value=6))
    @settings(max_examples=30, deadline=None)
    def test_lattice_counts_property(self, d, m):
        series = ball_counts(integer_lattice(d), m)
        assert series.counts[m] == _l1_count(d, m)
        assert series.counts[0] == 1

    def test_counts_monotone_and_bounded_by_regular_tree(self):
        for gens in (integer_lattice(2), heisenberg(), unitriangular_group(4)):
            counts = ball_counts(gens, 6).counts
            for a, b in zip(counts, counts[1:]):
                assert a < b
            # crude free-group bound on any word ball
            g = len(gens.generators)
            for m, c in enumerate(counts):
                assert c <= (2 * g + 1) ** m


class TestFreeAndHeisenberg:
    def test_free_group_counts_exponential(self):
        series = ball_counts(free_group_pair(), 8)
        assert series.counts == tuple(2 * 3**m - 1 for m in range(9))
        fit = slow_growth_exponent(series)
        assert fit.classification == "exponential"
        assert math.isinf(fit.exponent)

    def test_heisenberg_counts_frozen(self):
        series = ball_counts(heisenberg(), 8)
        assert series.counts == (1, 5, 17, 53, 135, 299, 593, 1069, 1793)

    def test_heisenberg_counts_vs_independent_bfs(self):
        ours = ball_counts(heisenberg(), 6).counts
        assert list(ours) == heisenberg_ball_oracle(6)

    def test_heisenberg_exponent_near_four(self):
        series = ball_counts(heisenberg(), 14)
        fit = slow_growth_exponent(series)
        assert fit.classification == "polynomial"
        assert 3.6 <= fit.exponent <= 4.4

    def test_element_budget_enforced(self):
        with pytest.raises(BudgetExceeded):
            ball_counts(free_group_pair(), 12, element_budget=1000)


class TestDegreeFormula:
    def test_heisenberg_ranks_and_degree(self):
        ranks = malcev_lcs_ranks(heisenberg())
        assert tuple(ranks.ranks) == (2, 1)
        assert bass_guivarch(ranks.ranks) == 4

    def test_ut4_ranks_and_degree(self):
        ranks = malcev_lcs_ranks(unitriangular_group(4))
        assert tuple(ranks.ranks) == (3, 2, 1)
        assert bass_guivarch(ranks.ranks) == 10

    def test_lattice_degree_is_dimension(self):
        for d in (1, 2, 3, 5):
            ranks = malcev_lcs_ranks(integer_lattice(d))
            assert tuple(ranks.ranks) == (d,)
            assert bass_guivarch([d]) == d

    def test_degree_accepts_fractions_exactly(self):
        assert bass_guivarch([Fraction(2), Fraction(1)]) == 4
        assert isinstance(bass_guivarch([2, 1]), int)

    def test_hirsch_length_and_bound(self):
        assert hirsch_length([2, 1]) == 3
        assert hirsch_length([3, 2, 1]) == 6
        # degree <= 1 + (h-1)h/2, tight for the 3-dimensional case
        assert bass_guivarch([2, 1]) == hirsch_bound([2, 1]) == 4
        assert bass_guivarch([3, 2, 1]) == 10 <= hirsch_bound([3, 2, 1]) == 16

    def test_free_group_is_not_unitriangular(self):
        with pytest.raises(NotUnitriangular):
            malcev_lcs_ranks(free_group_pair())

    def test_non_invertible_generator_rejected(self):
        singular = ((1, 0), (0, 0))
        with pytest.raises(NonInvertibleGenerator):
            GeneratorSet(2, (singular,))


class TestFingerprintAndFiles:
    def test_fingerprint_identifies_generator_set(self):
        a = ball_counts(integer_lattice(2), 3)
        b = ball_counts(integer_lattice(2), 5)
        # same generators -> same fingerprint regardless of m_max
        assert a.generator_fingerprint == b.generator_fingerprint
        other = ball_counts(heisenberg(), 3)
        assert other.generator_fingerprint != a.generator_fingerprint

    def test_generator_file_roundtrip(self, tmp_path):
        path = tmp_path / "heis.gens"
        save_generator_file(path, heisenberg())
        loaded = load_generator_file(path)
        assert loaded.dimension == 3
        assert loaded.generators == heisenberg().generators
        assert ball_counts(loaded, 5).counts == ball_counts(heisenberg(), 5).counts

    def test_growth_csv_roundtrip(self, tmp_path):
        path = tmp_path / "growth.csv"
        series = ball_counts(integer_lattice(2), 6)
        write_growth_csv(path, series)
        back = read_growth_csv(path)
        assert back.counts == series.counts
        # the m,count artifact does not carry the generator identity
        assert back.generator_fingerprint == ""
        first = path.read_bytes()
        write_growth_csv(path, series)
        assert path.read_bytes() == first
        assert first.startswith(b"m,count")

    def test_lattice_translations_shear(self):
        # hexagonal-style generators still fill Z^2 at degree 2
        gens = lattice_translations([(1, 0), (0, 1), (1, 1)])
        ranks = malcev_lcs_ranks(gens)
        assert bass_guivarch(ranks.ranks) == 2
        series = ball_counts(gens, 12)
        fit = slow_growth_exponent(series)
        assert fit.exponent == pytest.approx(2.0, abs=0.2)
