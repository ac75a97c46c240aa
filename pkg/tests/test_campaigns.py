from __future__ import annotations

import pytest

from augstab.campaigns import CHUNK, LEMMAS, CampaignSpec, run_campaign, worker_count


@pytest.mark.parametrize("lemma", sorted(LEMMAS))
def test_every_lemma_runs_cleanly(lemma):
    rep = run_campaign(CampaignSpec(lemma, 200, 11))
    assert rep.ok, rep.violations[:3]
    assert rep.trials == 200 and len(rep.margins) == 200
    assert rep.candidates >= 200


def test_reports_are_reproducible_and_worker_independent():
    spec = CampaignSpec("truncated", CHUNK + 300, 2 ** 63 + 5, {"family": "split"})
    one = run_campaign(spec, workers=1)
    two = run_campaign(spec, workers=2)
    assert one.dumps() == two.dumps() == run_campaign(spec, workers=1).dumps()
    assert one.to_csv() == two.to_csv()


def test_seeds_change_the_instances():
    a = run_campaign(CampaignSpec("gt", 50, 1))
    b = run_campaign(CampaignSpec("gt", 50, 2))
    assert a.margins != b.margins


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        CampaignSpec("nope", 1, 0)
    with pytest.raises(ValueError):
        CampaignSpec("gt", 0, 0)
    with pytest.raises(ValueError):
        CampaignSpec("gt", 1, 2 ** 64)
    spec = CampaignSpec("cosh", 3, 4, {"tol": 1e-9})
    assert CampaignSpec.from_json(spec.to_json()) == spec


def test_negative_tolerance_reports_violations():
    # a tolerance below every margin turns each trial into a recorded violation
    rep = run_campaign(CampaignSpec("gt", 5, 3, {"tol": -1e9}))
    assert not rep.ok and [v["trial"] for v in rep.violations] == list(range(5))


def test_worker_count(monkeypatch):
    monkeypatch.delenv("MSL_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("MSL_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("MSL_THREADS", "many")
    with pytest.raises(ValueError):
        worker_count()
