import json
import time
import xml.etree.ElementTree as ET

import pytest

from qfock import suite
from qfock.report import Report


def test_every_operation_is_covered():
    assert suite.uncovered_operations() == []


def test_ids_are_unique_and_anchored():
    ids = [c.id for c in suite.REGISTRY]
    assert len(ids) == len(set(ids))
    assert all(c.anchor in suite.OPERATIONS for c in suite.REGISTRY)


def test_register_rejects_unknown_anchor():
    with pytest.raises(ValueError):
        suite.register("bogus", "nowhere.op")


def test_quick_profile_green_and_fast():
    start = time.perf_counter()
    records = suite.run_all("quick")
    assert time.perf_counter() - start < 60
    assert all(r.passed for r in records), [r.id for r in records if not r.passed]


def test_runs_are_reproducible():
    only = {"qcoeff.decomposition_independence", "fock.symmetrizer_projection"}
    a = suite.run_all("quick", seed=7, only=only)
    assert len(a) == 2
    b = suite.run_all("quick", seed=7, workers=2, only=only)
    assert [(r.id, r.residual) for r in a] == [(r.id, r.residual) for r in b]


def test_failures_become_records():
    def boom(rng, profile):
        raise RuntimeError("broken")

    rec = suite.run_check(suite.Check("x.boom", "linalg.matmul", boom), "quick", 1)
    assert not rec.passed and "RuntimeError" in rec.error

    def bad(rng, profile):
        return Report("bad", 1.0, 0.5)

    assert not suite.run_check(suite.Check("x.bad", "linalg.matmul", bad), "quick", 1).passed


def test_serialisation():
    records = suite.run_all("quick", only={suite.REGISTRY[0].id})
    payload = json.loads(suite.records_to_json(records))
    assert payload["pass"] and set(payload["records"][0]) >= {"id", "anchor", "residual", "bound", "pass", "runtime", "seed"}
    fail = suite.CheckRecord("a", "linalg.matmul", 1.0, 0.0, False, 0.0, 1)
    root = ET.fromstring(suite.records_to_junit(records + [fail]))
    assert root.get("tests") == str(len(records) + 1) and root.get("failures") == "1"


def test_unknown_profile():
    with pytest.raises(ValueError):
        suite.run_all("huge")
