import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metael.corpus import EntityAnnotation, GroundTruth, Mention
from metael.evaluation import (
    binary_metrics,
    el_prf,
    multilabel_metrics,
    paired_t_test,
    prf_from_counts,
    render_prf_table,
    rows_to_csv,
    split_ground_truth,
    t_from_differences,
)


def ann(doc, start, surface, entity):
    return EntityAnnotation(Mention(doc, surface, start), entity)


class TestPrfFromCounts:
    def test_fixture(self):
        s = prf_from_counts(2, 3, 4)
        assert s.precision == pytest.approx(2 / 3, abs=1e-4)
        assert s.recall == pytest.approx(0.5, abs=1e-4)
        assert s.f1 == pytest.approx(0.5714, abs=1e-4)

    def test_zero_conventions(self):
        assert prf_from_counts(0, 0, 5) == prf_from_counts(0, 0, 5)
        s = prf_from_counts(0, 0, 0)
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)

    @given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000))
    def test_harmonic_identity(self, correct, extra_rec, extra_gt):
        recognised = correct + extra_rec
        gt_total = correct + extra_gt
        s = prf_from_counts(correct, recognised, gt_total)
        assert abs(s.f1 * (s.precision + s.recall) - 2 * s.precision * s.recall) < 1e-12
        assert s.f1 <= 2 * s.precision + 1e-12 and s.f1 <= 2 * s.recall + 1e-12


class TestElPrf:
    GOLD = GroundTruth(
        (
            ann("d1", 0, "Michael Jordan", "Michael Jordan"),
            ann("d1", 30, "Washington Wizards", "Washington Wizards"),
            ann("d2", 5, "Amman", "Amman"),
            ann("d2", 20, "Jordan", "Jordan"),
        )
    )

    def test_identity(self):
        s = el_prf(self.GOLD, self.GOLD)
        assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)

    def test_partial(self):
        output = [
            ann("d1", 0, "Michael Jordan", "Michael Jordan"),
            ann("d2", 5, "Amman", "Jordan"),
            ann("d2", 20, "Jordan", "Jordan"),
        ]
        s = el_prf(output, self.GOLD)
        assert s.correct == 2 and s.recognised == 3 and s.gt_total == 4
        assert s.f1 == pytest.approx(0.5714, abs=1e-4)

    def test_empty_output(self):
        s = el_prf([], self.GOLD)
        assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)

    def test_overlap_mode_credits_overlapping_span(self):
        output = [ann("d1", 8, "Jordan", "Michael Jordan")]
        assert el_prf(output, self.GOLD, mode="strong").correct == 0
        assert el_prf(output, self.GOLD, mode="overlap").correct == 1

    def test_overlap_mode_single_credit(self):
        output = [
            ann("d1", 0, "Michael Jordan", "Michael Jordan"),
            ann("d1", 8, "Jordan", "Michael Jordan"),
        ]
        s = el_prf(output, self.GOLD, mode="overlap")
        assert s.correct == 1 and s.recognised == 2

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="matching mode"):
            el_prf([], self.GOLD, mode="loose")


class TestMultiLabelMetrics:
    def test_fixture(self):
        report = multilabel_metrics(
            [{"A"}, {"A", "B"}], [{"A", "B"}, {"A", "B"}], n_labels=3
        )
        assert report.jaccard == pytest.approx(0.75)
        assert report.hamming_loss == pytest.approx(1 / 6, abs=1e-4)
        assert report.exact_match == pytest.approx(0.5)

    def test_perfect(self):
        sets = [{"A"}, set(), {"B", "C"}]
        report = multilabel_metrics(sets, [set(s) for s in sets], n_labels=3)
        assert report.jaccard == 1.0
        assert report.hamming_loss == 0.0
        assert report.exact_match == 1.0

    def test_per_class(self):
        report = multilabel_metrics([{"A"}, {"A"}], [{"A"}, {"B"}], n_labels=2)
        assert report.per_class["A"].precision == 0.5
        assert report.per_class["A"].recall == 1.0
        assert report.per_class["B"].recall == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            multilabel_metrics([{"A"}], [], n_labels=1)

    def test_real_prediction_accuracy(self):
        from metael.alignment import MentionGroup

        g1 = MentionGroup(
            mention=Mention("d", "x", 0),
            annotations={"A": ann("d", 0, "x", "E1"), "B": ann("d", 0, "x", "E2")},
            gold_entity="E1",
        )
        g2 = MentionGroup(
            mention=Mention("d", "y", 5),
            annotations={"A": ann("d", 5, "y", "E3"), "B": ann("d", 5, "y", "E4")},
            gold_entity="E4",
        )
        report = multilabel_metrics(
            [{"A"}, {"A"}],
            [{"A"}, {"B"}],
            n_labels=2,
            chosen=["A", "A", ],
            groups=[g1, g2],
        )
        # chosen A is right on g1 (E1), wrong on g2 (E3 != E4)
        assert report.real_prediction_accuracy == 0.5

    @settings(max_examples=300)
    @given(
        st.lists(
            st.tuples(
                st.sets(st.sampled_from("ABCDEF"), max_size=6),
                st.sets(st.sampled_from("ABCDEF"), max_size=6),
            ),
            min_size=1,
            max_size=20,
        ),
        st.integers(6, 8),
    )
    def test_metric_inequalities(self, pairs, n_labels):
        predicted = [p for p, _ in pairs]
        truth = [t for _, t in pairs]
        r = multilabel_metrics(predicted, truth, n_labels=n_labels)
        assert r.exact_match <= r.jaccard + 1e-12
        assert r.jaccard <= 1 - r.hamming_loss + 1e-12


class TestBinaryMetrics:
    def test_fixture(self):
        r = binary_metrics([True, False, False, False], [True, True, False, False])
        assert r.true_class.precision == 1.0
        assert r.true_class.recall == 0.5
        assert r.true_class.f1 == pytest.approx(2 / 3)
        assert r.false_class.precision == pytest.approx(2 / 3)
        assert r.false_class.recall == 1.0
        assert r.false_class.f1 == pytest.approx(0.8)
        assert r.macro_f1 == pytest.approx(0.7333, abs=1e-4)

    def test_total_failure(self):
        truth = [True, False]
        r = binary_metrics([not t for t in truth], truth)
        assert r.true_class.f1 == 0.0 and r.false_class.f1 == 0.0 and r.macro_f1 == 0.0

    def test_absent_class_excluded_unless_predicted(self):
        r = binary_metrics([True, True], [True, True])
        # false never occurs in truth nor predictions: excluded
        assert r.macro_f1 == 1.0
        r2 = binary_metrics([True, False], [True, True])
        # false predicted but never true: scores 0 and is included
        assert r2.macro_f1 == pytest.approx((2 / 3) / 2)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            binary_metrics([True], [])


def t_cdf_oracle(t, df):
    """Student-t CDF via the regularized incomplete beta continued fraction.

    Independent of scipy: Lentz's algorithm on I_x(a,b) with
    x = df/(df+t^2), a = df/2, b = 1/2.
    """

    def log_beta(a, b):
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

    def betainc_cf(a, b, x):
        # continued fraction for I_x(a,b), Numerical-Recipes style Lentz
        tiny = 1e-300
        qab, qap, qam = a + b, a + 1.0, a - 1.0
        c = 1.0
        d = 1.0 - qab * x / qap
        if abs(d) < tiny:
            d = tiny
        d = 1.0 / d
        h = d
        for m in range(1, 400):
            m2 = 2 * m
            aa = m * (b - m) * x / ((qam + m2) * (a + m2))
            d = 1.0 + aa * d
            if abs(d) < tiny:
                d = tiny
            c = 1.0 + aa / c
            if abs(c) < tiny:
                c = tiny
            d = 1.0 / d
            h *= d * c
            aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
            d = 1.0 + aa * d
            if abs(d) < tiny:
                d = tiny
            c = 1.0 + aa / c
            if abs(c) < tiny:
                c = tiny
            d = 1.0 / d
            delta = d * c
            h *= delta
            if abs(delta - 1.0) < 1e-14:
                break
        return h

    def betainc(a, b, x):
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        front = math.exp(a * math.log(x) + b * math.log(1.0 - x) - log_beta(a, b))
        if x < (a + 1.0) / (a + b + 2.0):
            return front * betainc_cf(a, b, x) / a
        return 1.0 - math.exp(b * math.log(1.0 - x) + a * math.log(x) - log_beta(b, a)) * betainc_cf(
            b, a, 1.0 - x
        ) / b

    x = df / (df + t * t)
    tail = 0.5 * betainc(df / 2.0, 0.5, x)
    return 1.0 - tail if t > 0 else tail


class TestTTest:
    def test_fixture_vector(self):
        t, p, degenerate = t_from_differences([1.0, 2.0, 3.0, 4.0])
        assert t == pytest.approx(3.873, abs=1e-3)
        assert not degenerate
        assert 0 < p < 0.05

    def test_degenerate_zero(self):
        t, p, degenerate = t_from_differences([0.0, 0.0, 0.0])
        assert degenerate and p == 1.0 and t == 0.0

    def test_degenerate_constant_nonzero(self):
        t, p, degenerate = t_from_differences([0.5, 0.5, 0.5])
        assert degenerate and p == 0.0 and t == math.inf

    def test_p_value_against_continued_fraction_oracle(self):
        rng = random.Random(13)
        for _ in range(200):
            k = rng.randint(3, 25)
            diffs = [rng.gauss(0.02, 0.1) for _ in range(k)]
            t, p, degenerate = t_from_differences(diffs)
            if degenerate:
                continue
            expected = 2.0 * (1.0 - t_cdf_oracle(abs(t), k - 1))
            assert p == pytest.approx(expected, rel=1e-6, abs=1e-12)

    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=25))
    def test_antisymmetry(self, diffs):
        t, p, deg = t_from_differences(diffs)
        t2, p2, deg2 = t_from_differences([-d for d in diffs])
        assert deg == deg2
        assert t2 == -t or (math.isnan(t) and math.isnan(t2))
        assert p2 == pytest.approx(p, rel=1e-12) or (deg and p == p2)


def make_gt(n, doc="d"):
    return GroundTruth(tuple(ann(doc, 10 * i, "m", f"E{i}") for i in range(n)))


class TestSplitGroundTruth:
    def test_partition_properties(self):
        gt = make_gt(47)
        splits = split_ground_truth(gt, 20)
        sizes = [len(s) for s in splits]
        assert sum(sizes) == 47
        assert max(sizes) - min(sizes) <= 1
        # remainder goes to the first splits
        assert sizes == sorted(sizes, reverse=True)
        seen = [a for s in splits for a in s]
        assert len({(a.mention.doc_id, a.mention.position) for a in seen}) == 47

    def test_too_few_annotations(self):
        with pytest.raises(ValueError, match="cannot fill"):
            split_ground_truth(make_gt(5), 20)

    def test_shuffle_changes_order_not_content(self):
        gt = make_gt(40)
        plain = split_ground_truth(gt, 4)
        shuffled = split_ground_truth(gt, 4, shuffle_seed=3)
        assert plain != shuffled
        flat = sorted(a.mention.position for s in shuffled for a in s)
        assert flat == [10 * i for i in range(40)]


class TestPairedTTest:
    def test_identical_outputs_degenerate(self):
        gt = make_gt(40)
        out = list(gt.annotations[:30])
        res = paired_t_test(out, list(out), gt, n_splits=20)
        assert res.degenerate and res.p_value == 1.0
        assert res.split_scores_a == res.split_scores_b

    def test_clearly_better_output_is_significant(self):
        gt = make_gt(200)
        good = list(gt.annotations)
        rng = random.Random(5)
        bad = [
            a if rng.random() < 0.4 else EntityAnnotation(a.mention, "Wrong")
            for a in gt.annotations
        ]
        res = paired_t_test(good, bad, gt, n_splits=20)
        assert res.t_statistic > 0
        assert res.significant

    def test_swap_negates_t(self):
        gt = make_gt(100)
        rng = random.Random(6)
        a = [x if rng.random() < 0.8 else EntityAnnotation(x.mention, "W") for x in gt.annotations]
        b = [x if rng.random() < 0.5 else EntityAnnotation(x.mention, "W") for x in gt.annotations]
        r1 = paired_t_test(a, b, gt, n_splits=10)
        r2 = paired_t_test(b, a, gt, n_splits=10)
        assert r1.t_statistic == pytest.approx(-r2.t_statistic)
        assert r1.p_value == pytest.approx(r2.p_value)

    def test_unmatched_annotations_counted_in_precision(self):
        gt = make_gt(40)
        exact = list(gt.annotations)
        noisy = exact + [ann("zz", 3, "spurious", "Nope")]
        res = paired_t_test(exact, noisy, gt, n_splits=4)
        # the spurious annotation lowers exactly one split's precision
        worse = [i for i, (sa, sb) in enumerate(zip(res.split_scores_a, res.split_scores_b)) if sa > sb]
        assert len(worse) == 1


def test_render_helpers():
    rows = [("methodA", prf_from_counts(2, 3, 4)), ("b", prf_from_counts(1, 1, 1))]
    table = render_prf_table(rows)
    assert "methodA" in table and "F1" in table
    csv = rows_to_csv(rows)
    assert csv.startswith("name,precision")
    assert csv.count("\n") == 3
