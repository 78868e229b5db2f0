"""Command-line entry point: ``qfock <verb> [--config file.json] [overrides]``.

Verbs are ``fock``, ``piece``, ``dilate``, ``moments`` and ``suite``.  Exit
codes: 0 all checks pass, 1 a check failed, 2 configuration error, 3 the
Fock truncation is too low for the requested tail tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import dilation, fock, linalg, moments, piece, suite
from .fock import FockContext, QFockSpace
from .piece import OperatorTuple
from .qcoeff import InvalidQParams, QParams
from .report import Report

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_TAIL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 2
    M: int = 3
    q: QParams | None = None
    tuple: OperatorTuple | None = None
    tol_exact: float = linalg.TOL_EXACT
    eps_tail: float = dilation.EPS_TAIL
    seed: int = 0
    word_cap: int | None = None
    out: str | None = None
    format: str = "json"
    profile: str = "desk"

    def validate(self) -> "RunConfig":
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.M < 0:
            raise ConfigError("M must be >= 0")
        if self.tol_exact <= 0 or self.eps_tail <= 0:
            raise ConfigError("tolerances must be positive")
        if self.q is None:
            self.q = QParams.trivial(self.n)
        if self.q.n != self.n:
            raise ConfigError(f"q is {self.q.n} x {self.q.n} but n = {self.n}")
        if self.tuple is not None and self.tuple.n != self.n:
            raise ConfigError(f"tuple has {self.tuple.n} operators but n = {self.n}")
        if self.word_cap is not None and self.word_cap < 0:
            raise ConfigError("word_cap must be >= 0")
        return self

    def summary(self) -> dict:
        return {"n": self.n, "M": self.M, "q": self.q.to_dict(), "tol_exact": self.tol_exact,
                "eps_tail": self.eps_tail, "seed": self.seed, "word_cap": self.word_cap}


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge a JSON config file with command-line overrides."""
    raw = _read_json(args.config) if args.config else {}
    tols = raw.get("tolerances", {})
    output = raw.get("output", {})
    cfg = RunConfig(
        n=int(raw.get("n", 2)),
        M=int(raw.get("M", 3)),
        tol_exact=float(tols.get("tol_exact", linalg.TOL_EXACT)),
        eps_tail=float(tols.get("eps_tail", dilation.EPS_TAIL)),
        seed=int(raw.get("seed", 0)),
        word_cap=raw.get("word_cap"),
        out=output.get("path"),
        format=output.get("format", "json"),
    )
    if "q" in raw:
        cfg.q = QParams.from_dict(raw["q"])
    if "tuple" in raw:
        cfg.tuple = OperatorTuple.from_dict(raw["tuple"])
    for key in ("n", "seed", "word_cap", "out", "format"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.level is not None:
        cfg.M = args.level
    if args.tol is not None:
        cfg.tol_exact = args.tol
    if args.eps_tail is not None:
        cfg.eps_tail = args.eps_tail
    if args.theta is not None:
        cfg.q = QParams.uniform(cfg.n, args.theta)
    if args.q_file:
        cfg.q = QParams.from_dict(_read_json(args.q_file))
    if args.tuple_file:
        cfg.tuple = OperatorTuple.from_dict(_read_json(args.tuple_file))
    if cfg.q is None and "q" not in raw:
        cfg.q = QParams.trivial(cfg.n)
    if getattr(args, "profile", None):
        cfg.profile = args.profile
    return cfg.validate()


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _payload(verb: str, cfg: RunConfig, reports: list[Report], **extra) -> dict:
    reports = sorted(reports, key=lambda r: r.name)
    out = {"verb": verb, "config": cfg.summary(), "checks": [r.to_dict() for r in reports],
           "pass": all(r.passed for r in reports)}
    out.update(extra)
    return out


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_default)


def _default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _reports_csv(reports: list[Report]) -> str:
    lines = ["check,residual,bound,pass"]
    for rep in sorted(reports, key=lambda r: r.name):
        for r in rep.flatten():
            lines.append(f"{r.name},{r.residual!r},{r.bound!r},{int(r.passed)}")
    return "\n".join(lines) + "\n"


def _finish(verb: str, cfg: RunConfig, reports: list[Report], **extra) -> int:
    if cfg.format == "csv":
        _emit(_reports_csv(reports), cfg)
    else:
        _emit(_dump(_payload(verb, cfg, reports, **extra)), cfg)
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


# -- verbs ----------------------------------------------------------------------------

def cmd_fock(cfg: RunConfig) -> int:
    ctx = FockContext(cfg.n, cfg.M)
    space = QFockSpace(ctx, cfg.q)
    tol = cfg.tol_exact
    idem, herm = space.projector.residuals() if space.dim else (0.0, 0.0)
    ranks = [linalg.orthonormal_range(b).rank if b.size else 0 for b in space.blocks]
    expected = [math.comb(cfg.n + m - 1, m) for m in range(cfg.M + 1)]
    s = space.shifts
    qrel = max((float(np.max(np.abs(s[j] @ s[i] - cfg.q.q[i, j] * s[i] @ s[j])))
                for i in range(cfg.n) for j in range(i + 1, cfg.n)), default=0.0)
    reports = [
        Report("projector", max(idem, herm), tol),
        Report("fixed_space_ranks", sum(abs(a - b) for a, b in zip(ranks, expected)), 0,
               details={"ranks": ranks, "expected": expected}),
        Report("q_commutation", qrel, tol),
        fock.weighted_shift_model_check(ctx, cfg.q, tol),
        Report("intertwiner", fock.intertwining_residual(ctx, cfg.q), tol),
    ]
    skipped = []
    if cfg.M >= 2:
        reports.append(fock.number_operator_diagnostics(ctx, cfg.q, tol))
    else:
        skipped.append("number_operator_diagnostics needs M >= 2")
    ops = {"S": [piece.matrix_to_dict(m) for m in s], "dim": space.dim}
    return _finish("fock", cfg, reports, operators=ops, skipped=skipped)


def _require_tuple(cfg: RunConfig) -> OperatorTuple:
    if cfg.tuple is None:
        raise ConfigError("this verb needs a tuple (--tuple-file or 'tuple' in the config)")
    return cfg.tuple


def cmd_piece(cfg: RunConfig) -> int:
    R = _require_tuple(cfg)
    res = piece.maximal_q_piece(R, cfg.q)
    dual = piece.dual_characterization_check(R, cfg.q, res, word_cap=cfg.word_cap, seed=cfg.seed)
    extra = {
        "piece": {
            "rank": res.rank, "dim": R.dim, "iterations": res.iterations, "kernel_ranks": res.kernel_ranks,
            "projector": piece.matrix_to_dict(res.projector.matrix),
            "compressed": res.compressed.to_dict() if res.compressed is not None else None,
        }
    }
    return _finish("piece", cfg, [dual], **extra)


def cmd_dilate(cfg: RunConfig) -> int:
    T = _require_tuple(cfg)
    if not T.contractive:
        raise ConfigError("tuple is not a row contraction")
    tail = dilation.purity_deficit(T, cfg.M + 1)
    q_commuting = T.q_commutator_residual(cfg.q) <= cfg.tol_exact
    if tail > cfg.eps_tail:
        reports = [Report("purity_tail", tail, cfg.eps_tail)]
        spherical = linalg.operator_norm(T.row_gram() - np.eye(T.dim)) <= cfg.tol_exact
        if spherical and q_commuting:
            reports.append(dilation.spherical_unitary_check(T, cfg.q, M=max(cfg.M, 2), seed=cfg.seed))
        _finish("dilate", cfg, reports, advice=f"purity deficit {tail:.3e} exceeds eps_tail; raise M")
        return EXIT_TAIL
    dil, space = dilation.noncommuting_dilation(T, cfg.M)
    cap = min(cfg.M, 4) if cfg.word_cap is None else cfg.word_cap
    emb = space.embedding
    reports = [
        Report("block_adjoint", dilation.adjoint_residual(T, dil, emb), cfg.tol_exact),
        Report("block_compression", dilation.compression_residual(T, dil, emb, cap), cfg.tol_exact),
        Report("block_isometry_below_top", dilation.isometry_residual(dil, space), cfg.tol_exact),
    ]
    if q_commuting:
        reports.append(dilation.main_theorem_check(T, cfg.q, cfg.M, eps_tail=cfg.eps_tail))
    else:
        reports.append(piece.dilation_intersection_check(T, dil, cfg.q, emb))
    return _finish("dilate", cfg, reports, dims={"H": T.dim, "dilation": space.total_dim})


def cmd_moments(cfg: RunConfig) -> int:
    space = QFockSpace(FockContext(cfg.n, cfg.M), cfg.q)
    p_max = 2 * cfg.M
    rows = moments.moment_rows(0, p_max, space) if p_max else []
    if cfg.format == "csv":
        _emit(moments.moments_csv(rows), cfg)
    rng = np.random.default_rng(cfg.seed)
    reports = []
    if p_max:
        reports.append(moments.moments_check(space, 0, p_max, cfg.tol_exact))
    if cfg.M >= 1:
        a = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)) for _ in range(cfg.n)]
        reports.append(moments.field_norm_bounds(a, space))
    if cfg.format == "csv":
        return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL
    note = {"displayed_constant": [moments.displayed_constant(p) for p in range(1, p_max + 1)],
            "remark": "computed moments follow the Catalan numbers; the alternative constant is listed for comparison"}
    return _finish("moments", cfg, reports, moments=rows, note=note)


def cmd_suite(cfg: RunConfig) -> int:
    workers = max(1, int(os.environ.get("QFOCK_THREADS", "1")))
    records = suite.run_all(cfg.profile, seed=cfg.seed or suite.DEFAULT_SEED, workers=workers)
    if cfg.format == "junit":
        _emit(suite.records_to_junit(records), cfg)
    elif cfg.format == "csv":
        lines = ["id,anchor,residual,bound,pass,runtime"]
        lines += [f"{r.id},{r.anchor},{r.residual!r},{r.bound!r},{int(r.passed)},{r.runtime:.3f}" for r in records]
        _emit("\n".join(lines) + "\n", cfg)
    else:
        _emit(suite.records_to_json(records), cfg)
    return EXIT_PASS if all(r.passed for r in records) else EXIT_FAIL


VERBS = {"fock": cmd_fock, "piece": cmd_piece, "dilate": cmd_dilate, "moments": cmd_moments, "suite": cmd_suite}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfock", description="q-commuting Fock space and dilation checks")
    parser.add_argument("verb", choices=sorted(VERBS))
    parser.add_argument("--config")
    parser.add_argument("--n", type=int)
    parser.add_argument("--level", type=int, help="Fock truncation level M")
    parser.add_argument("--theta", type=float, help="uniform q_ij = exp(i theta) for i < j")
    parser.add_argument("--q-file")
    parser.add_argument("--tuple-file")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--eps-tail", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--word-cap", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("json", "csv", "junit"))
    parser.add_argument("--profile", choices=suite.PROFILES)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        cfg = load_config(args)
        return VERBS[args.verb](cfg)
    except (ConfigError, InvalidQParams, piece.MalformedTuple, linalg.LinAlgError) as exc:
        print(f"qfock: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dilation.TailTooLarge, moments.TruncationLeak) as exc:
        print(f"qfock: {exc}", file=sys.stderr)
        return EXIT_TAIL


if __name__ == "__main__":
    sys.exit(main())
