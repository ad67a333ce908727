"""Factor arithmetic, ratio comparisons, and instance/split tables."""

from decimal import Decimal

import pytest

from _fixtures import (
    CLASSES,
    FACTOR_CASES,
    HOLO_AUTO,
    HOLO_MANUAL,
    HOLO_SPLITS,
    OPTICAL_AUTO,
    OPTICAL_MANUAL,
    OPTICAL_SPLITS,
    RATIO_CASES,
    build_manifest,
)
from holoprep import (
    Annotation,
    BBox,
    DatasetManifest,
    ImageRecord,
    Modality,
    Split,
    compare_runs,
    count_instances,
    expansion_factor,
    table_instances,
    table_splits,
)
from holoprep.report import round_display


class TestRounding:
    def test_half_away_from_zero(self):
        assert round_display(1.975) == "1.98"
        assert round_display(1.985) == "1.99"
        assert round_display(13.822540) == "13.82"
        assert round_display(25.8588) == "25.86"

    def test_display_equals_rounded_raw(self):
        import numpy as np

        rng = np.random.default_rng(5)
        for _ in range(100):
            x = float(rng.uniform(0.01, 100))
            shown = Decimal(round_display(x))
            assert abs(shown - Decimal(repr(x))) <= Decimal("0.005")


class TestExpansionFactor:
    @pytest.mark.parametrize("baseline,expanded,printed", FACTOR_CASES)
    def test_reference_factors(self, baseline, expanded, printed):
        fr = expansion_factor(baseline, expanded)
        assert abs(Decimal(fr.display) - Decimal(printed)) <= Decimal("0.01")
        assert fr.raw == pytest.approx(expanded / baseline, rel=1e-12)

    def test_zero_baseline(self):
        with pytest.raises(ValueError, match="baseline"):
            expansion_factor(0, 100)

    def test_factor_field_consistency(self):
        fr = expansion_factor(100, 250)
        assert fr.raw == 2.5
        assert fr.display == "2.50"


class TestCompareRuns:
    @pytest.mark.parametrize("a,b,printed,direction", RATIO_CASES)
    def test_reference_ratios(self, a, b, printed, direction):
        rr = compare_runs(a, b)
        assert rr.direction == direction
        assert abs(Decimal(rr.display) - Decimal(printed)) <= Decimal("0.01")

    def test_equal_inputs(self):
        rr = compare_runs(50.0, 50.0)
        assert rr.display == "1.00"
        assert rr.direction == "unchanged"

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            compare_runs(0.0, 10.0)


class TestTableInstances:
    def test_optical_table_cells(self):
        counts = count_instances(build_manifest(OPTICAL_MANUAL, OPTICAL_AUTO))
        table = table_instances(counts)
        assert table.headers == ("Classes", "Manual Labels", "Automated Labels")
        cells = {row[0]: (row[1], row[2]) for row in table.rows}
        assert cells["T1"] == ("790", "7364")
        assert cells["T2"] == ("766", "7751")
        assert cells["T5"] == ("1288", "9115")
        assert cells["T9"] == ("1692", "44038")
        assert cells["Total"] == ("4536", "68268")

    def test_holographic_table_cells(self):
        counts = count_instances(build_manifest(HOLO_MANUAL, HOLO_AUTO))
        table = table_instances(counts)
        cells = {row[0]: (row[1], row[2]) for row in table.rows}
        assert cells["T1"] == ("518", "6786")
        assert cells["T2"] == ("105", "7547")
        assert cells["T5"] == ("313", "8261")
        assert cells["T9"] == ("1501", "40424")
        assert cells["Total"] == ("2437", "63018")

    def test_empty_manifest_zero_table(self):
        m = DatasetManifest((ImageRecord("a.png", Modality.OPTICAL, "T1"),), CLASSES)
        table = table_instances(count_instances(m))
        assert table.rows[-1] == ("Total", "0", "0")

    def test_totals_equal_row_sums(self):
        counts = count_instances(build_manifest(OPTICAL_MANUAL, OPTICAL_AUTO))
        table = table_instances(counts)
        for col in (1, 2):
            body = sum(int(r[col]) for r in table.rows[:-1])
            assert body == int(table.rows[-1][col])

    def test_csv_round_trips_cells(self):
        counts = count_instances(build_manifest(HOLO_MANUAL, HOLO_AUTO))
        csv = table_instances(counts).to_csv()
        assert csv.splitlines()[0] == "Classes,Manual Labels,Automated Labels"
        assert "T2,105,7547" in csv


class TestTableSplits:
    def test_optical_split_cells(self):
        m = build_manifest(OPTICAL_MANUAL, OPTICAL_AUTO, OPTICAL_SPLITS)
        table = table_splits(count_instances(m))
        rows = {r[0]: r[1:] for r in table.rows}
        assert rows["Manual Labels"] == ("3174", "680", "682", "4536")
        assert rows["Automated Labels"] == ("47785", "10241", "10242", "68268")

    def test_holographic_split_cells(self):
        m = build_manifest(HOLO_MANUAL, HOLO_AUTO, HOLO_SPLITS)
        table = table_splits(count_instances(m))
        rows = {r[0]: r[1:] for r in table.rows}
        assert rows["Manual Labels"] == ("1704", "366", "367", "2437")
        assert rows["Automated Labels"] == ("44110", "9453", "9455", "63018")

    def test_single_item_manifest(self):
        ann = (Annotation(BBox(0.5, 0.5, 0.1, 0.1), 0),)
        rec = ImageRecord("a.png", Modality.OPTICAL, "T1", annotations=ann)
        m = DatasetManifest((rec,), CLASSES, {"a.png": Split.TRAIN})
        table = table_splits(count_instances(m))
        assert table.rows == (("Manual Labels", "1", "0", "0", "1"),)

    def test_unassigned_instances_rejected(self):
        m = build_manifest({"T1": 5}, {})
        with pytest.raises(ValueError, match="split"):
            table_splits(count_instances(m))

    def test_text_rendering_contains_cells(self):
        m = build_manifest(HOLO_MANUAL, HOLO_AUTO, HOLO_SPLITS)
        text = table_splits(count_instances(m)).to_text()
        assert "44110" in text and "Training" in text
