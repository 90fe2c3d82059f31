import pytest

from metael.alignment import (
    agreement_statistics,
    build_mention_groups,
    render_agreement_table,
)
from metael.corpus import AnnotationSet, EntityAnnotation, GroundTruth, Mention


def ann(doc, start, surface, entity):
    return EntityAnnotation(Mention(doc, surface, start), entity)


def aset(system_id, *annotations):
    return AnnotationSet(system_id=system_id, annotations=tuple(annotations))


TEXT = "Michael Jordan played for the Washington Wizards in Washington."
# offsets: "Michael Jordan"=0..14, "Washington Wizards"=30..48, "Washington"=53..63


class TestStrongMatching:
    def test_same_key_merges(self):
        systems = [
            aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan")),
            aset("b", ann("d1", 0, "Michael Jordan", "Michael Jordan (mycologist)")),
            aset("c", ann("d1", 30, "Washington Wizards", "Washington Wizards")),
        ]
        groups = build_mention_groups(systems, mode="strong")
        assert len(groups) == 2
        first = groups[0]
        assert first.mention.position == 0
        assert set(first.annotations) == {"a", "b"}
        assert first.recognised_by == 2
        assert not first.unanimous
        assert groups[1].annotations["c"].entity == "Washington Wizards"

    def test_different_span_stays_separate(self):
        systems = [
            aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan")),
            aset("b", ann("d1", 8, "Jordan", "Jordan")),
        ]
        groups = build_mention_groups(systems, mode="strong")
        assert len(groups) == 2
        assert [g.recognised_by for g in groups] == [1, 1]

    def test_gold_attaches_by_key(self):
        systems = [aset("a", ann("d1", 0, "Michael Jordan", "Michael Jeffrey Jordan"))]
        gold = GroundTruth((ann("d1", 0, "Michael Jordan", "Michael Jordan"),))
        groups = build_mention_groups(systems, gold, mode="strong")
        assert groups[0].gold_entity == "Michael Jordan"

    def test_gold_only_mentions_form_zero_recogniser_groups(self):
        systems = [aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan"))]
        gold = GroundTruth(
            (
                ann("d1", 0, "Michael Jordan", "Michael Jordan"),
                ann("d1", 53, "Washington", "Washington, D.C."),
            )
        )
        groups = build_mention_groups(systems, gold, mode="strong")
        assert len(groups) == 2
        orphan = groups[1]
        assert orphan.recognised_by == 0
        assert orphan.annotations == {}
        assert orphan.gold_entity == "Washington, D.C."

    def test_sorted_output(self):
        systems = [
            aset(
                "a",
                ann("d2", 5, "x", "X"),
                ann("d1", 9, "y", "Y"),
                ann("d1", 2, "z", "Z"),
            )
        ]
        groups = build_mention_groups(systems, mode="strong")
        assert [(g.mention.doc_id, g.mention.position) for g in groups] == [
            ("d1", 2),
            ("d1", 9),
            ("d2", 5),
        ]


class TestOverlapMatching:
    def test_overlapping_spans_merge(self):
        systems = [
            aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan")),
            aset("b", ann("d1", 8, "Jordan", "Jordan")),
            aset("c", ann("d1", 30, "Washington Wizards", "Washington Wizards")),
        ]
        groups = build_mention_groups(systems, mode="overlap")
        assert len(groups) == 2
        assert set(groups[0].annotations) == {"a", "b"}
        # representative is the longest span
        assert groups[0].mention.surface == "Michael Jordan"

    def test_touching_spans_do_not_merge(self):
        systems = [
            aset("a", ann("d1", 0, "Michael", "Michael")),
            aset("b", ann("d1", 7, " Jordan", "Jordan")),
        ]
        # span a = [0,7), span b = [7,14): share no character
        groups = build_mention_groups(systems, mode="overlap")
        assert len(groups) == 2

    def test_chain_becomes_one_component(self):
        systems = [
            aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan")),
            aset("b", ann("d1", 8, "Jordan played", "Jordan")),
            aset("c", ann("d1", 15, "played for", "Play")),
        ]
        groups = build_mention_groups(systems, mode="overlap")
        assert len(groups) == 1
        assert set(groups[0].annotations) == {"a", "b", "c"}

    def test_gold_mention_becomes_representative(self):
        systems = [aset("a", ann("d1", 8, "Jordan", "Jordan"))]
        gold = GroundTruth((ann("d1", 0, "Michael Jordan", "Michael Jordan"),))
        groups = build_mention_groups(systems, gold, mode="overlap")
        assert groups[0].mention.surface == "Michael Jordan"
        assert groups[0].gold_entity == "Michael Jordan"

    def test_system_with_two_members_keeps_longest(self):
        systems = [
            aset(
                "a",
                ann("d1", 0, "Michael", "Michael"),
                ann("d1", 4, "ael Jordan", "Michael Jordan"),
            )
        ]
        groups = build_mention_groups(systems, mode="overlap")
        assert len(groups) == 1
        assert groups[0].annotations["a"].mention.surface == "ael Jordan"

    def test_gold_only_component_is_retained(self):
        systems = [aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan"))]
        gold = GroundTruth(
            (
                ann("d1", 0, "Michael Jordan", "Michael Jordan"),
                ann("d1", 53, "Washington", "Washington, D.C."),
            )
        )
        groups = build_mention_groups(systems, gold, mode="overlap")
        assert [g.recognised_by for g in groups] == [1, 0]
        assert groups[1].gold_entity == "Washington, D.C."

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="matching mode"):
            build_mention_groups([], mode="fuzzy")


class TestAgreementStatistics:
    def build(self):
        systems = [
            aset(
                "a",
                ann("d1", 0, "Michael Jordan", "Michael Jordan"),
                ann("d1", 30, "Washington Wizards", "Washington Wizards"),
                ann("d1", 53, "Washington", "Washington, D.C."),
            ),
            aset(
                "b",
                ann("d1", 0, "Michael Jordan", "Michael Jordan"),
                ann("d1", 30, "Washington Wizards", "Washington Wizards"),
            ),
            aset(
                "c",
                ann("d1", 0, "Michael Jordan", "Michael Jordan (mycologist)"),
            ),
        ]
        gold = GroundTruth((ann("d1", 0, "Michael Jordan", "Michael Jordan"),))
        return build_mention_groups(systems, gold, mode="strong")

    def test_counts(self):
        stats = agreement_statistics(self.build(), n_systems=3)
        assert stats.total_groups == 3
        assert stats.with_gold == 1
        by_r = {row.recognised_by: row for row in stats.rows}
        assert by_r[3].groups == 1
        assert by_r[3].unanimous == 0
        assert by_r[2].groups == 1
        assert by_r[2].unanimous == 1
        assert by_r[1].groups == 1
        assert by_r[1].unanimous == 1
        assert by_r[0].groups == 0
        assert by_r[3].share_of_total == pytest.approx(1 / 3)
        assert by_r[2].unanimous_share == 1.0

    def test_zero_recogniser_bucket_counts_orphan_gold(self):
        systems = [aset("a", ann("d1", 0, "Michael Jordan", "Michael Jordan"))]
        gold = GroundTruth(
            (
                ann("d1", 0, "Michael Jordan", "Michael Jordan"),
                ann("d1", 53, "Washington", "Washington, D.C."),
            )
        )
        groups = build_mention_groups(systems, gold, mode="strong")
        stats = agreement_statistics(groups, n_systems=1)
        by_r = {row.recognised_by: row for row in stats.rows}
        assert by_r[0].groups == 1
        assert by_r[1].groups == 1
        assert stats.total_groups == 2

    def test_render_table(self):
        stats = agreement_statistics(self.build(), n_systems=3)
        table = render_agreement_table(stats)
        assert "3/3" in table
        assert "total" in table
        assert str(stats.total_groups) in table

    def test_to_dict_roundtrips_counts(self):
        stats = agreement_statistics(self.build(), n_systems=3)
        d = stats.to_dict()
        assert d["total_groups"] == 3
        # one bucket per recogniser count, n down to zero
        assert len(d["rows"]) == 4
        assert d["rows"][0]["recognised_by"] == 3
        assert d["rows"][-1]["recognised_by"] == 0
