import pytest
from hypothesis import given, settings, strategies as st

from bcdlog.metrics import (
    EvalReport,
    ParseEntry,
    ParsedCorpus,
    build_report,
    parameter_mask_agreement,
    parsing_accuracy,
    template_f1,
)


def corpus(assignments):
    """assignments: list of (message_id, template); messages are synthetic."""
    return ParsedCorpus(
        [ParseEntry(mid, f"message {mid}", template) for mid, template in assignments]
    )


# Hand-computed 4-message, 2-ground-truth-template fixtures.
GT_PA = corpus(
    [(1, "ip <*> port <*>"), (2, "ip <*> port <*>"), (3, "disk full on <*>"), (4, "disk full on <*>")]
)
# message 4 mis-parsed: 3 of 4 exact -> PA 0.75
PRED_PA = corpus(
    [(1, "ip <*> port <*>"), (2, "ip <*> port <*>"), (3, "disk full on <*>"), (4, "disk full on s<*>")]
)

GT_FTA = GT_PA
# two predicted templates, one fully correct (string and grouping):
# precision 1/2, recall 1/2, f1 0.5
PRED_FTA = corpus(
    [(1, "ip <*> port <*>"), (2, "ip <*> port <*>"), (3, "disk full on s<*>"), (4, "disk full on s<*>")]
)


class TestParsingAccuracy:
    def test_identical_corpora_score_one(self):
        assert parsing_accuracy(GT_PA, GT_PA) == 1.0

    def test_three_of_four_exact(self):
        assert parsing_accuracy(PRED_PA, GT_PA) == 0.75

    def test_one_character_difference_counts_as_wrong(self):
        pred = corpus([(1, "disk full"), (2, "disk ful")])
        gt = corpus([(1, "disk ful"), (2, "disk full")])
        assert parsing_accuracy(pred, gt) == 0.0

    def test_mismatched_ids_are_a_hard_error(self):
        with pytest.raises(ValueError):
            parsing_accuracy(corpus([(1, "a")]), corpus([(2, "a")]))


class TestTemplateF1:
    def test_identical_corpora(self):
        assert template_f1(GT_PA, GT_PA) == (1.0, 1.0, 1.0)

    def test_one_of_two_predicted_templates_correct(self):
        assert template_f1(PRED_FTA, GT_FTA) == (0.5, 0.5, 0.5)

    def test_string_match_with_wrong_grouping_is_incorrect(self):
        # Prediction splits one ground-truth group: "disk full on <*>" matches
        # by string, but covers {3} instead of {3, 4}.
        pred = corpus(
            [(1, "ip <*> port <*>"), (2, "ip <*> port <*>"),
             (3, "disk full on <*>"), (4, "disk <*> on sdb")]
        )
        precision, recall, f1 = template_f1(pred, GT_FTA)
        assert (precision, recall) == (1 / 3, 1 / 2)
        assert f1 == pytest.approx(0.4)

    def test_string_only_mode_ignores_grouping(self):
        pred = corpus(
            [(1, "ip <*> port <*>"), (2, "ip <*> port <*>"),
             (3, "disk full on <*>"), (4, "disk <*> on sdb")]
        )
        precision, recall, _ = template_f1(pred, GT_FTA, string_only=True)
        assert (precision, recall) == (2 / 3, 1.0)

    def test_no_overlap_gives_zero_f1(self):
        pred = corpus([(1, "x"), (2, "x")])
        gt = corpus([(1, "y"), (2, "y")])
        assert template_f1(pred, gt) == (0.0, 0.0, 0.0)

    def test_adding_a_correct_template_never_lowers_recall(self):
        gt = corpus([(1, "a <*>"), (2, "a <*>"), (3, "b <*>")])
        partial = corpus([(1, "a <*>"), (2, "a <*>"), (3, "wrong")])
        complete = corpus([(1, "a <*>"), (2, "a <*>"), (3, "b <*>")])
        _, recall_partial, _ = template_f1(partial, gt)
        _, recall_complete, _ = template_f1(complete, gt)
        assert recall_complete >= recall_partial


class TestParameterMaskAgreement:
    def test_identical_masks(self):
        masks = [[0, 1, 0], [1, 1, 1]]
        assert parameter_mask_agreement(masks, masks) == (1.0, 1.0)

    def test_one_position_wrong_out_of_two_ten_char_messages(self):
        gt = [[0] * 10, [0] * 10]
        pred = [[0] * 10, [0] * 9 + [1]]
        assert parameter_mask_agreement(pred, gt) == (0.5, 0.95)

    def test_fully_opposite_masks(self):
        assert parameter_mask_agreement([[0, 0]], [[1, 1]]) == (0.0, 0.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            parameter_mask_agreement([[0, 1]], [[0, 1, 0]])

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            parameter_mask_agreement([[0]], [[0], [1]])

    @settings(max_examples=40)
    @given(
        st.lists(
            st.tuples(st.lists(st.integers(0, 1), min_size=1, max_size=8), st.integers(0, 1)),
            min_size=1,
            max_size=8,
        )
    )
    def test_rates_bounded(self, rows):
        gt = [mask for mask, _ in rows]
        pred = [
            [bit ^ flip for bit in mask] if flip else list(mask)
            for mask, flip in rows
        ]
        pma, per_char = parameter_mask_agreement(pred, gt)
        assert 0.0 <= pma <= 1.0
        assert 0.0 <= per_char <= 1.0


class TestMetricIndependence:
    def test_perfect_mask_agreement_with_imperfect_parsing_accuracy(self):
        # An annotated template whose placeholder matched the empty string:
        # the derived mask is all static, the prediction agrees per character,
        # but the rendered template cannot contain the placeholder.
        from bcdlog.mask_codec import derive_ground_truth_mask, render_template

        message, annotated = "ab", "a<*>b"
        gt_mask = derive_ground_truth_mask(message, annotated)
        pred_mask = [0, 0]
        assert parameter_mask_agreement([pred_mask], [gt_mask]) == (1.0, 1.0)
        pred = corpus([(1, render_template(message, pred_mask))])
        gt = corpus([(1, annotated)])
        assert parsing_accuracy(pred, gt) < 1.0


class TestReport:
    def test_aggregates_and_serializes(self):
        pred_masks = {1: [0, 1], 2: [0, 0], 3: [1, 1], 4: [0, 1]}
        gt_masks = {1: [0, 1], 2: [0, 0], 3: [1, 1], 4: [1, 1]}
        report = build_report(PRED_PA, GT_PA, pred_masks, gt_masks, alignment_failures=2)
        assert report.pa == 0.75
        assert report.pma == 0.75
        assert report.per_char == 0.875
        assert report.messages == 4
        assert report.gt_templates == 2
        assert report.predicted_templates == 3
        assert report.alignment_failures == 2
        csv_text = report.to_csv()
        header, row = csv_text.strip().splitlines()
        assert header == ",".join(EvalReport.CSV_COLUMNS)
        assert row.startswith("0.750000,")
        assert "alignment failures          2" in report.to_text()

    def test_identical_corpora_all_ones(self):
        masks = {i: [0, 1] for i in (1, 2, 3, 4)}
        report = build_report(GT_PA, GT_PA, masks, masks)
        assert (report.pa, report.fta, report.pma) == (1.0, 1.0, 1.0)
