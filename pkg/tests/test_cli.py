import csv
import io
import json
import math

import numpy as np
import pytest

from qfock import cli
from qfock.dilation import weyl_pair_generator, weyl_q
from qfock.piece import OperatorTuple


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def weyl_config(tmp_path, scale, M, **extra):
    cfg = {"n": 2, "M": M, "q": weyl_q(2).to_dict(), "tuple": weyl_pair_generator(2, scale).to_dict()}
    cfg.update(extra)
    return write_json(tmp_path / "cfg.json", cfg)


def test_fock_verb(capsys):
    code, out = run(["fock", "--n", "2", "--level", "3", "--theta", str(math.pi / 2)], capsys)
    assert code == 0
    payload = json.loads(out.out)
    assert payload["pass"] and payload["verb"] == "fock"
    assert payload["operators"]["dim"] == 10


def test_fock_level_zero(capsys):
    code, out = run(["fock", "--level", "0"], capsys)
    assert code == 0 and json.loads(out.out)["skipped"]


def test_bad_q_is_config_error(tmp_path, capsys):
    path = write_json(tmp_path / "q.json", {"n": 2, "mode": "matrix", "entries": [[1, 0], [2, 0], [0.5, 0], [1, 0]]})
    code, out = run(["fock", "--q-file", path], capsys)
    assert code == 2 and "configuration error" in out.err


def test_missing_tuple_and_bad_flags(tmp_path, capsys):
    assert run(["piece"], capsys)[0] == 2
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["fock", "--config", str(tmp_path / "missing.json")], capsys)[0] == 2
    assert run(["fock", "--n", "0"], capsys)[0] == 2


def test_malformed_tuple(tmp_path, capsys):
    bad = {"n": 2, "dim": 2, "matrices": [{"rows": 2, "cols": 2, "entries": [[1, 0]]}]}
    path = write_json(tmp_path / "t.json", bad)
    assert run(["piece", "--tuple-file", path], capsys)[0] == 2


def test_piece_verb_on_counterexample(tmp_path, capsys):
    from qfock.dilation import counterexample_builder
    T = counterexample_builder(None, (0.5, 0.5), weyl_q(2), M=3)
    path = write_json(tmp_path / "cfg.json", {"n": 2, "q": weyl_q(2).to_dict(), "tuple": T.to_dict()})
    code, out = run(["piece", "--config", path, "--word-cap", "6"], capsys)
    payload = json.loads(out.out)
    assert code == 0 and payload["piece"]["rank"] == T.dim - 2


def test_dilate_pure(tmp_path, capsys):
    path = weyl_config(tmp_path, 0.3, 5, tolerances={"eps_tail": 1e-4})
    code, out = run(["dilate", "--config", path], capsys)
    payload = json.loads(out.out)
    assert code == 0 and payload["pass"]
    assert {c["check"] for c in payload["checks"]} >= {"main_theorem", "block_adjoint"}


def test_dilate_spherical_exits_three(tmp_path, capsys):
    path = weyl_config(tmp_path, 1.0, 4)
    code, out = run(["dilate", "--config", path], capsys)
    payload = json.loads(out.out)
    assert code == 3
    names = {c["check"] for c in payload["checks"]}
    assert names == {"purity_tail", "spherical_unitary"}
    sph = next(c for c in payload["checks"] if c["check"] == "spherical_unitary")
    assert sph["pass"]


def test_dilate_non_q_commuting(tmp_path, capsys):
    rng = np.random.default_rng(0)
    mats = [0.15 * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) for _ in range(2)]
    cfg = {"n": 2, "M": 5, "tuple": OperatorTuple(tuple(mats)).to_dict(), "tolerances": {"eps_tail": 0.05}}
    code, out = run(["dilate", "--config", write_json(tmp_path / "c.json", cfg)], capsys)
    assert code == 0
    assert "dilation_intersection" in {c["check"] for c in json.loads(out.out)["checks"]}


def test_zero_tuple(tmp_path, capsys):
    cfg = {"n": 2, "M": 2, "tuple": OperatorTuple((np.zeros((2, 2)), np.zeros((2, 2)))).to_dict()}
    assert run(["dilate", "--config", write_json(tmp_path / "z.json", cfg)], capsys)[0] == 0


def test_moments_csv(capsys):
    code, out = run(["moments", "--n", "2", "--level", "4", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.out)))
    assert [round(float(r["moment"]), 10) for r in rows] == [0, 1, 0, 2, 0, 5, 0, 14]
    assert list(rows[0]) == ["p", "moment", "catalan_reference", "abs_error"]


def test_moments_json_to_file(tmp_path, capsys):
    target = tmp_path / "m.json"
    code, _ = run(["moments", "--level", "3", "--out", str(target)], capsys)
    payload = json.loads(target.read_text())
    assert code == 0 and len(payload["moments"]) == 6 and "note" in payload


def test_suite_quick_junit(tmp_path, capsys):
    target = tmp_path / "s.xml"
    code, _ = run(["suite", "--profile", "quick", "--format", "junit", "--out", str(target)], capsys)
    assert code == 0
    assert target.read_text().startswith("<testsuite") or "<testsuite" in target.read_text()


def test_config_overrides(tmp_path):
    path = write_json(tmp_path / "cfg.json", {"n": 3, "M": 2, "seed": 5, "tolerances": {"tol_exact": 1e-9}})
    args = cli.build_parser().parse_args(["fock", "--config", path, "--level", "4"])
    cfg = cli.load_config(args)
    assert (cfg.n, cfg.M, cfg.seed, cfg.tol_exact) == (3, 4, 5, 1e-9)
    assert np.array_equal(cfg.q.q, np.ones((3, 3)))


def test_config_dimension_clash(tmp_path):
    path = write_json(tmp_path / "cfg.json", {"n": 3, "q": weyl_q(2).to_dict()})
    args = cli.build_parser().parse_args(["fock", "--config", path])
    with pytest.raises(cli.ConfigError):
        cli.load_config(args)
