import random
from fractions import Fraction

import pytest

from motifkit.core import PatternOccurrence, PatternRecord, Point
from motifkit.evaluation import (
    boundary_prf,
    occurrence_recovery,
    truth_boundaries,
)

import _oracles

F = Fraction


def occ(*coords):
    return PatternOccurrence(tuple(Point(F(o), p) for o, p in coords))


def span_occ(start, length, pitch=60):
    return occ(*((start + i, pitch) for i in range(length)))


class TestBoundaryPrf:
    def test_perfect_within_tolerance(self):
        prf = boundary_prf([0, 4, 9], [0, 5, 8], 1)
        assert (prf.precision, prf.recall, prf.f1, prf.matches) == (1, 1, 1, 3)

    def test_partial_recall(self):
        prf = boundary_prf([0], [0, 8], 1)
        assert prf.precision == 1
        assert prf.recall == F(1, 2)
        assert prf.f1 == F(2, 3)

    def test_empty_predictions(self):
        prf = boundary_prf([], [1, 2], 1)
        assert (prf.precision, prf.recall, prf.f1) == (0, 0, 0)

    def test_empty_truth(self):
        prf = boundary_prf([1], [], 1)
        assert (prf.precision, prf.recall, prf.f1) == (0, 0, 0)

    def test_symmetry_swaps_precision_recall(self):
        rng = random.Random(0)
        for _ in range(40):
            a = sorted(rng.sample(range(20), rng.randrange(0, 6)))
            b = sorted(rng.sample(range(20), rng.randrange(0, 6)))
            ab = boundary_prf(a, b, 1)
            ba = boundary_prf(b, a, 1)
            assert ab.precision == ba.recall
            assert ab.recall == ba.precision
            assert ab.f1 == ba.f1

    def test_tolerance_zero_is_set_intersection(self):
        rng = random.Random(1)
        for _ in range(40):
            a = sorted(rng.sample(range(15), rng.randrange(0, 6)))
            b = sorted(rng.sample(range(15), rng.randrange(0, 6)))
            prf = boundary_prf(a, b, 0)
            assert prf.matches == len(set(a) & set(b))

    def test_matches_brute_force(self):
        rng = random.Random(2)
        for _ in range(200):
            a = sorted(rng.sample(range(12), rng.randrange(0, 7)))
            b = sorted(rng.sample(range(12), rng.randrange(0, 7)))
            tol = rng.randrange(0, 3)
            prf = boundary_prf(a, b, tol)
            assert prf.matches == _oracles.brute_max_matching(a, b, tol)

    def test_beats_naive_greedy_case(self):
        # greedy left-to-right would match 5 to 4 and strand 3
        prf = boundary_prf([3, 5], [4, 6], 1)
        assert prf.matches == 2

    def test_f1_identity(self):
        rng = random.Random(3)
        for _ in range(40):
            a = sorted(rng.sample(range(15), rng.randrange(0, 7)))
            b = sorted(rng.sample(range(15), rng.randrange(0, 7)))
            prf = boundary_prf(a, b, 1)
            if prf.precision + prf.recall > 0:
                assert prf.f1 == 2 * prf.precision * prf.recall / (prf.precision + prf.recall)
            else:
                assert prf.f1 == 0

    def test_fractional_positions(self):
        prf = boundary_prf([F(1, 2)], [F(3, 2)], F(1))
        assert prf.matches == 1

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ValueError):
            boundary_prf([1], [1], -1)


class TestTruthBoundaries:
    def test_single_occurrence(self):
        rec = PatternRecord("t", "p", (span_occ(2, 4),))
        assert truth_boundaries([rec]) == (2, 6)

    def test_shared_boundary_deduplicated(self):
        rec = PatternRecord("t", "p", (span_occ(2, 4), span_occ(6, 3)))
        assert truth_boundaries([rec]) == (2, 6, 9)

    def test_empty(self):
        assert truth_boundaries([]) == ()

    def test_snapping_ties_earlier(self):
        rec = PatternRecord("t", "p", (occ((F(5, 2), 60)),))
        # span [5/2, 7/2): both ends snap with the half-down rule
        assert truth_boundaries([rec]) == (2, 3)


class TestOccurrenceRecovery:
    def test_exact_recovery(self):
        planted = [span_occ(0, 5), span_occ(10, 5)]
        discovered = [PatternRecord("alg", "p", tuple(planted))]
        report = occurrence_recovery(discovered, planted, F(1))
        assert report.all_recovered
        assert report.spurious_patterns == 0

    def test_extra_point_threshold(self):
        planted = [span_occ(0, 20)]
        bigger = PatternOccurrence(planted[0].points + (Point(F(25), 70),))
        discovered = [PatternRecord("alg", "p", (bigger,))]
        high = occurrence_recovery(discovered, planted, F(1))
        low = occurrence_recovery(discovered, planted, F(9, 10))
        assert high.planted[0].best_jaccard == F(20, 21)
        assert not high.planted[0].recovered
        assert low.planted[0].recovered

    def test_spurious_pattern_counted(self):
        planted = [span_occ(0, 5)]
        stray = PatternRecord("alg", "q", (span_occ(50, 3, pitch=99),))
        report = occurrence_recovery([stray], planted, F(1, 2))
        assert report.spurious_patterns == 1
        assert not report.planted[0].recovered

    def test_jaccard_matches_oracle(self):
        rng = random.Random(4)
        for _ in range(30):
            planted = [span_occ(rng.randrange(0, 5), rng.randrange(2, 6))]
            disc_occ = span_occ(rng.randrange(0, 8), rng.randrange(2, 6))
            report = occurrence_recovery(
                [PatternRecord("a", "p", (disc_occ,))], planted, F(1, 2)
            )
            want = _oracles.brute_jaccard(
                [p.coord for p in planted[0].points],
                [p.coord for p in disc_occ.points],
            )
            assert report.planted[0].best_jaccard == want

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            occurrence_recovery([], [], F(0))
