import pytest

from hdrtsp.report import RunRecord, gap_percent, gap_ratio, report_results


def runs(*costs):
    return [RunRecord("X", i, c, 1.5) for i, c in enumerate(costs)]


def test_gaps():
    rep = report_results(runs(100, 102), reference=100)
    assert f"{rep.best_gap:.4f}" == "0.0000"
    assert f"{rep.average_gap:.4f}" == "1.0000"
    assert rep.seconds == 3.0


def test_no_reference():
    rep = report_results(runs(100, 102))
    assert rep.best_gap is None
    assert "gap" not in rep.to_records_text()
    assert "gap" not in rep.to_table().splitlines()[0]


def test_published_gap():
    # E10k.0: best known 71865826, hierarchical run at 71868057
    assert f"{gap_percent(71868057, 71865826):.4f}" == "0.0031"


def test_table_rows():
    rep = report_results(runs(*range(1000, 1010)), reference=999)
    lines = rep.to_table().splitlines()
    assert len(lines) == 2 + 10 + 1 + 2
    recs = rep.to_records_text().splitlines()
    assert len(recs) == 11 and recs[-1].startswith("summary ")
    assert "gap=0.1001" in recs[0]


def test_empty():
    with pytest.raises(ValueError):
        report_results([])


def test_gap_ratio():
    assert gap_ratio([110, 130], [105, 100], reference=100) == pytest.approx(20 / 2.5)
    assert gap_ratio([101], [100]) == float("inf")
