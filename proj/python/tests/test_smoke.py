import json
from pathlib import Path

import pytest

import logtriage

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_example_report_scores_nine():
    result = logtriage.score_report((FIXTURES / "triage_report.md").read_text())
    assert result["score"] == 9
    assert sum(result["verdicts"].values()) == 9
    assert len(result["verdicts"]) == 15


def test_max_scores():
    assert logtriage.max_score("baseline") == 11
    assert logtriage.max_score("focused") == 8
    with pytest.raises(ValueError):
        logtriage.max_score("nonsense")


def test_maxmin_and_forest():
    assert logtriage.subsample_maxmin([[0, 0], [1, 0], [5, 5]], 2) == [1, 2]
    rows = [[0.01 * i, 0.02 * (i % 7)] for i in range(60)] + [[40.0, 40.0]]
    scores = logtriage.anomaly_scores(rows, seed=3)
    assert max(range(len(scores)), key=scores.__getitem__) == 60


def test_votes_and_metrics():
    assert logtriage.majority_vote([3, 3, 3, 2, 4]) == 3
    m = logtriage.weighted_metrics([1, 1, 1, 1, 0, 0, 0, 0, 0, 0], [1, 1, 1, 0, 1, 0, 0, 0, 0, 0])
    assert m["f1"] == pytest.approx(0.8, abs=1e-12)


def test_end_to_end(tmp_path):
    labels = logtriage.generate_corpus(str(tmp_path / "corpus"), 3, 2, 3, seed=5, max_records=300)
    assert len(labels) == 8
    out = tmp_path / "out"
    result = logtriage.analyze(
        str(tmp_path / "corpus"), str(FIXTURES / "ta_profile.yaml"), str(out), runs=2
    )
    assert result["exit_code"] == 0
    assert set(result["scores"]) == set(labels)
    for app, code in labels.items():
        assert (result["scores"][app] >= 3) == (code == 2)
    lines = (out / "classifications.jsonl").read_text().splitlines()
    assert [json.loads(line)["app_id"] for line in lines] == sorted(labels)
    with pytest.raises(ValueError):
        logtriage.analyze(str(tmp_path / "corpus"), str(FIXTURES / "ta_profile.yaml"), str(out), bogus=1)
