import json
from datetime import date

from carenet import pipeline, timebase
from carenet.params import default_parameters, parse_document
from carenet.storage import DatasetMeta, Store, atomic_write_text
from support import UTC, make_summary, tree_digest

US = 1_000_000
D1, D2, D3 = date(2026, 3, 2), date(2026, 3, 3), date(2026, 3, 4)

# occupancy plan shared by the two dense days:
# 00:00-05:00, 10:00-17:30 and 22:00-24:00 -> 174 of 288 windows
DENSE_IDX = list(range(0, 60)) + list(range(120, 210)) + list(range(264, 288))

MU_WAKE = 240 / 965  # first session at 10:00 -> 360 min past the anchor
MU_NIGHT = (16800 / 18000 - 0.2) / 0.8  # 84 night vs 90 day windows at 200 B
L4_DENSE = (13 * MU_WAKE + 1 * 0.0 + 3 * MU_NIGHT) / 17  # z missing -> renormalized


def day_rows(day, idx_list, extras=None):
    day_us = timebase.day_start_us(day, UTC)
    rows = []
    for i in idx_list:
        kw = dict(extras.get(i, {})) if extras else {}
        rows.append(make_summary(day_us + i * 300 * US, **kw))
    return rows


def write_day(store, dataset, day, rows):
    atomic_write_text(
        store.summary_file(dataset, day), "".join(r.to_json() + "\n" for r in rows)
    )


def seed_store(tmp_path) -> Store:
    store = Store(tmp_path / "data")
    store.save_dataset_meta(DatasetMeta("hand", 300, "UTC", []))
    write_day(store, "hand", D1, day_rows(D1, DENSE_IDX))
    write_day(store, "hand", D2, day_rows(D2, range(96, 106)))

    day3_us = timebase.day_start_us(D3, UTC)
    extras = {
        144: {"dns_events": [(day3_us + (43200 + i * 60) * US, "studyhelp.net") for i in range(10)]},
        150: {"gaps": [0.15] * 25},
    }
    write_day(store, "hand", D3, day_rows(D3, DENSE_IDX, extras))
    return store


def run_all(store):
    frep = pipeline.compute_features(store, "hand")
    srep = pipeline.compute_scores(store, "hand", store.load_parameters())
    return frep, srep


def test_feature_documents(tmp_path):
    store = seed_store(tmp_path)
    frep, _ = run_all(store)
    assert frep.users == ["u1"]
    assert frep.days == 3
    assert frep.files == 3

    f1 = pipeline.load_feature_doc(store, "hand", "u1", D1)
    assert f1["total_windows"] == 288
    assert f1["occupied_windows"] == 174
    assert f1["coverage"] == 174 / 288
    feats = f1["features"]
    assert feats["C4_F2_WakeAfter0400Min"] == 360.0
    assert feats["C4_F7_DaytimeIdleRatio0818"] == 0.25
    assert abs(feats["C4_F8_NightDayTrafficRatioBytes"] - 16800 / 18000) <= 1e-12
    assert f1["sleep_duration_min"] == 300.0
    assert feats["C4_F4_SleepDurationZAbs30d"] is None  # no history yet
    assert feats["C8_F2_DNSBurstRatePerHour"] == 0.0  # active but quiet
    assert feats["C8_F4_RepeatedQueryRatio60m"] is None
    assert feats["C8_F8_MedianIKSsec"] is None

    f3 = pipeline.load_feature_doc(store, "hand", "u1", D3)
    assert f3["features"]["C8_F4_RepeatedQueryRatio60m"] == 0.9
    assert f3["features"]["C8_F8_MedianIKSsec"] == 0.15


def test_score_documents(tmp_path):
    store = seed_store(tmp_path)
    run_all(store)
    s1 = pipeline.load_score_doc(store, "hand", "u1", D1)
    assert s1["valid"] is True
    assert abs(s1["likelihoods"]["C4"] - L4_DENSE) <= 1e-9
    assert s1["likelihoods"]["C8"] == 0.0
    assert s1["positives"] == {"C4": False, "C8": False}
    assert s1["present"] == {"C4": False, "C8": False}
    assert s1["episode"] is False
    assert abs(s1["mean_likelihood"] - s1["likelihoods"]["C4"] / 2) <= 1e-12
    assert s1["config_hash"] == store.load_parameters().config_hash

    s2 = pipeline.load_score_doc(store, "hand", "u1", D2)
    assert s2["valid"] is False
    assert s2["likelihoods"] == {"C4": None, "C8": None}
    assert s2["positives"] == {"C4": None, "C8": None}
    assert s2["mean_likelihood"] is None

    s3 = pipeline.load_score_doc(store, "hand", "u1", D3)
    mu_repeat = (0.9 - 0.8) / 0.2
    mu_typing = (0.15 - 0.12) / 0.1
    assert abs(s3["likelihoods"]["C8"] - (0.4 * mu_repeat + 0.2 * mu_typing)) <= 1e-9


def test_rerun_is_byte_identical(tmp_path):
    store = seed_store(tmp_path)
    run_all(store)
    first = tree_digest(store.root)
    run_all(store)
    assert tree_digest(store.root) == first


def test_recompute_under_new_calibration(tmp_path):
    store = seed_store(tmp_path)
    run_all(store)
    old_hash = pipeline.load_score_doc(store, "hand", "u1", D1)["config_hash"]

    doc = store.load_parameters().doc
    doc["gate"]["theta"] = 0.2
    new = parse_document(doc)
    store.save_parameters(new)
    rep = pipeline.recompute_scores(store, "hand")
    assert rep.config_hash == new.config_hash != old_hash

    s1 = pipeline.load_score_doc(store, "hand", "u1", D1)
    assert s1["config_hash"] == new.config_hash
    assert s1["positives"]["C4"] is True  # 0.35 clears the lowered threshold


def test_likelihood_view_covers_absent_days(tmp_path):
    store = seed_store(tmp_path)
    run_all(store)
    rows = pipeline.likelihood_view(
        store, "hand", "u1", "C4", date(2026, 3, 1), date(2026, 3, 5)
    )
    assert [r["date"] for r in rows] == [
        "2026-03-01", "2026-03-02", "2026-03-03", "2026-03-04", "2026-03-05",
    ]
    assert rows[0] == {"date": "2026-03-01", "likelihood": None, "valid": False, "positive": None}
    assert abs(rows[1]["likelihood"] - L4_DENSE) <= 1e-9
    assert rows[2]["likelihood"] is None and rows[2]["valid"] is False
    assert rows[4]["likelihood"] is None


def test_gate_view_shape(tmp_path):
    store = seed_store(tmp_path)
    run_all(store)
    pset = store.load_parameters()
    gv = pipeline.gate_view(store, "hand", "u1", D3, pset)
    assert gv["window_days"] == 14
    assert gv["threshold"] == 0.6
    assert gv["config_hash"] == pset.config_hash
    c4 = gv["criteria"]["C4"]
    assert len(c4["days"]) == 14
    statuses = [d["status"] for d in c4["days"]]
    assert statuses[:11] == ["missing"] * 11
    assert statuses[11:] == ["negative", "missing", "negative"]
    assert c4["present"] is False
    assert gv["present_count"] == 0
    assert gv["episode"] is False


def test_episode_view_shape(tmp_path):
    store = seed_store(tmp_path)
    run_all(store)
    ev = pipeline.episode_view(store, "hand", "u1", D3, store.load_parameters())
    assert ev["present"] == {"C4": False, "C8": False}
    assert ev["core_present"] == []
    assert ev["episode"] is False
    assert ev["min_criteria"] == 5
    assert ev["core_criteria"] == ["C1", "C2"]


def test_scores_for_unknown_dataset_are_empty(tmp_path):
    store = Store(tmp_path / "data")
    rep = pipeline.compute_scores(store, "ghost", default_parameters())
    assert rep.files == 0
    assert rep.users == []
