"""Command-line front end: ``qcap detect|sweep|verify|reproduce|rank-scan``."""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import io as qio
from .channels import ComplementaryPair, complement, minimal_env_dim, minimal_out_dim, tensor_pair
from .detector import (
    DetectionReport,
    Verdict,
    default_probes,
    nshot_search,
    probe,
    search,
)
from .numerics import (
    DEFAULT_TOL,
    ToleranceConfig,
    UnsupportedError,
    ValidationError,
    as_pure_state,
    maximally_mixed,
)
from .verifier import perturbation_slopes, sweep
from .zoo import FamilySpec, ProbeState, family_pair

EXIT_OK = 0
EXIT_INPUT = 2

TABLES = (
    "depolarizing", "transpose-depolarizing", "werner-holevo", "pauli",
    "mad", "dephasing", "cduc", "unitary-dilation",
)


@dataclass
class RunConfig:
    command: str
    family: Optional[FamilySpec]
    channel_file: Optional[str]
    tol: ToleranceConfig
    out_dir: Path
    fmt: str
    nshot: int = 1
    probes_file: Optional[str] = None
    workers: int = 1


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, source: bool = True) -> None:
    if source:
        p.add_argument("--family", help="channel family, e.g. werner-holevo")
        p.add_argument("--d", type=int, help="dimension")
        p.add_argument("--p", type=float, help="depolarizing parameter")
        p.add_argument("--q", type=float, help="transpose-depolarizing parameter")
        p.add_argument("--gamma-file", help="JSON list of {from, to, rate} decay rates")
        p.add_argument("--ab-file", help='JSON object {"A": ..., "B": ...} for (C)DUC channels')
        p.add_argument("--b-file", help="JSON correlation matrix for dephasing channels")
        p.add_argument("--b", choices=("identity", "ones"), help="named correlation matrix")
        p.add_argument("--pauli-file", help="JSON d x d probability matrix for Pauli channels")
        p.add_argument("--unitary-file", help="JSON d^2 x d^2 unitary for unitary dilations")
        p.add_argument("--family-file", help="FamilySpec JSON")
        p.add_argument("--channel-file", help="channel JSON with Kraus operators")
        p.add_argument("--probes", help="JSON list of probe state vectors (replaces the defaults)")
        p.add_argument("--nshot", type=int, choices=(1, 2), default=1)
    p.add_argument("--haar-samples", type=int, default=DEFAULT_TOL.haar_samples)
    p.add_argument("--seed", type=int, default=DEFAULT_TOL.rng_seed)
    p.add_argument("--rank-rtol", type=float, default=DEFAULT_TOL.rank_rtol)
    p.add_argument("--detection-gap", type=float, default=DEFAULT_TOL.detection_gap)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcap", description="Certify positive quantum capacity.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("detect", "run the detector"),
                        ("sweep", "coherent-information sweep at the witness"),
                        ("verify", "detector plus sweep and perturbation checks"),
                        ("rank-scan", "maximal pure-output rank and minimal dimensions")):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--direction", choices=("auto", "channel", "complement"), default="auto")
    p = sub.add_parser("reproduce", help="regenerate a reference table")
    p.add_argument("table", choices=TABLES + ("all",))
    _add_common(p, source=False)
    return parser


def _seed(args) -> int:
    env = os.environ.get("QCAP_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"QCAP_SEED must be an integer, got {env!r}") from None
    return args.seed


def _tol(args) -> ToleranceConfig:
    return DEFAULT_TOL.with_(haar_samples=args.haar_samples, rng_seed=_seed(args),
                             rank_rtol=args.rank_rtol, detection_gap=args.detection_gap)


def _family_from_args(args) -> Optional[FamilySpec]:
    if args.family_file:
        return qio.family_from_dict(qio.load_json(args.family_file))
    if not args.family:
        return None
    if args.d is None:
        raise ValidationError("--family needs --d")
    fam = args.family.replace("-", "_")
    d = args.d
    params: Dict[str, Any] = {}
    if fam == "depolarizing":
        if args.p is None:
            raise ValidationError("depolarizing needs --p")
        params["p"] = args.p
    elif fam == "transpose_depolarizing":
        if args.q is None:
            raise ValidationError("transpose-depolarizing needs --q")
        params["q"] = args.q
    elif fam == "mad":
        params["gamma"] = qio.load_json(args.gamma_file) if args.gamma_file else []
    elif fam in ("duc", "cduc"):
        if not args.ab_file:
            raise ValidationError(f"{args.family} needs --ab-file")
        params = qio.load_json(args.ab_file)
    elif fam == "dephasing":
        if args.b == "identity":
            params["B"] = np.eye(d).tolist()
        elif args.b == "ones":
            params["B"] = np.ones((d, d)).tolist()
        elif args.b_file:
            params["B"] = qio.load_json(args.b_file)
        else:
            raise ValidationError("dephasing needs --b or --b-file")
    elif fam == "pauli":
        if not args.pauli_file:
            raise ValidationError("pauli needs --pauli-file")
        params["P"] = qio.load_json(args.pauli_file)
    elif fam == "unitary_dilation":
        if args.unitary_file:
            params["unitary"] = qio.load_json(args.unitary_file)
        else:
            params["seed"] = _seed(args)
    return qio.family_from_dict({"family": fam, "d": d, "params": params})


def config_from_args(args) -> RunConfig:
    tol = _tol(args)
    workers = args.workers if args.workers else (os.cpu_count() or 1)
    if args.command == "reproduce":
        return RunConfig("reproduce", None, None, tol, Path(args.out_dir), args.format, workers=workers)
    family = _family_from_args(args)
    if (family is None) == (args.channel_file is None):
        raise ValidationError("give exactly one channel source: --family/--family-file or --channel-file")
    return RunConfig(args.command, family, args.channel_file, tol, Path(args.out_dir), args.format,
                     nshot=args.nshot, probes_file=args.probes, workers=workers)


def _pair(cfg: RunConfig) -> ComplementaryPair:
    if cfg.family is not None:
        return family_pair(cfg.family, cfg.tol)
    return complement(qio.load_channel(cfg.channel_file), cfg.tol)


def _probe_list(cfg: RunConfig, d: int) -> List[ProbeState]:
    if cfg.probes_file:
        raw = qio.load_json(cfg.probes_file)
        if not isinstance(raw, list) or not raw:
            raise ValidationError("probe file must hold a nonempty list of state vectors")
        out = []
        for i, v in enumerate(raw):
            vec = as_pure_state(qio.decode_vector(v, f"probes[{i}]"))
            if vec.size != d:
                raise ValidationError(f"probes[{i}]: dimension {vec.size}, expected {d}")
            out.append(ProbeState(f"probes[{i}]", vec))
        return out
    return default_probes(d, cfg.tol, cfg.family)


def run_detection(cfg: RunConfig) -> tuple[ComplementaryPair, DetectionReport]:
    pair = _pair(cfg)
    if cfg.nshot == 2:
        return pair, nshot_search(pair, cfg.tol, count=max(cfg.tol.haar_samples, 1), family=cfg.family)
    return pair, search(pair, _probe_list(cfg, pair.d_in), cfg.tol, cfg.family)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _emit(obj_json: Dict[str, Any], csv_text: str, fmt: str) -> None:
    if fmt == "csv":
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(json.dumps(obj_json, indent=2) + "\n")


def _summary(report: DetectionReport) -> Dict[str, Any]:
    row = qio.report_csv_row(report)
    row["implications"] = report.implications
    row["message"] = report.message
    return row


def cmd_detect(cfg: RunConfig) -> int:
    _, report = run_detection(cfg)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    qio.dump_json(qio.report_to_dict(report), cfg.out_dir / "report.json")
    (cfg.out_dir / "report.csv").write_text(qio.report_to_csv(report))
    _emit(_summary(report), qio.report_to_csv(report), cfg.fmt)
    return EXIT_OK


def sweep_witness(pair, report: DetectionReport, direction: str):
    """Probe state, reference state and direction for the sweep."""
    if direction == "auto":
        direction = "complement" if report.verdict is Verdict.POSITIVE_Q_COMPLEMENT else "channel"
    idx = report.fwd_probe if direction == "channel" else report.rev_probe
    if idx is None:
        p = report.probes[0]
        return p, maximally_mixed(pair.d_in), direction
    p = report.probes[idx]
    # the reference state certifies whenever its gap has the right sign
    gap = p.reference_gap if direction == "channel" else -p.reference_gap
    if gap > report.probes[idx].detection_gap:
        return p, maximally_mixed(pair.d_in), direction
    sigma = p.witness_sigma_fwd if direction == "channel" else p.witness_sigma_rev
    return p, sigma, direction


def _detected_pair(cfg: RunConfig):
    pair, report = run_detection(cfg)
    if report.n_copies == 2:
        pair = tensor_pair(pair, 2, cfg.tol)
    return pair, report


def cmd_sweep(cfg: RunConfig, direction: str = "auto") -> int:
    pair, report = _detected_pair(cfg)
    p, sigma, direction = sweep_witness(pair, report, direction)
    result = sweep(pair, p.psi, sigma, cfg.tol, direction)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "sweep.csv").write_text(qio.sweep_to_csv(result))
    payload = qio.sweep_to_dict(result)
    payload["witness_psi_label"] = p.label
    payload["verdict"] = report.verdict.value
    _emit(payload, qio.sweep_to_csv(result), cfg.fmt)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    pair, report = _detected_pair(cfg)
    checks = []
    directions = []
    if report.verdict in (Verdict.POSITIVE_Q, Verdict.BOTH_POSITIVE):
        directions.append("channel")
    if report.verdict in (Verdict.POSITIVE_Q_COMPLEMENT, Verdict.BOTH_POSITIVE):
        directions.append("complement")
    for direction in directions:
        p, sigma, direction = sweep_witness(pair, report, direction)
        sw = sweep(pair, p.psi, sigma, cfg.tol, direction)
        perts = [perturbation_slopes(pair, p.psi, sigma, side, cfg.tol) for side in ("channel", "complement")]
        checks.append({
            "direction": direction,
            "witness_psi_label": p.label,
            "sweep": qio.sweep_to_dict(sw),
            "sweep_positive": sw.positive,
            "perturbation": [qio.perturbation_to_dict(x) for x in perts],
        })
    payload = {"report": _summary(report), "checks": checks,
               "all_passed": all(c["sweep_positive"] and all(x["passed"] for x in c["perturbation"])
                                 for c in checks)}
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    qio.dump_json(payload, cfg.out_dir / "verify.json")
    qio.dump_json(qio.report_to_dict(report), cfg.out_dir / "report.json")
    _emit(payload, qio.report_to_csv(report), cfg.fmt)
    return EXIT_OK


def rank_scan(pair: ComplementaryPair, tol: ToleranceConfig, family: Optional[FamilySpec] = None) -> Dict[str, Any]:
    d_out = minimal_out_dim(pair.channel, tol)
    d_env = minimal_env_dim(pair.channel, tol)
    best_rank, best_label = -1, ""
    for s in default_probes(pair.d_in, tol, family):
        r = probe(pair, s.vector, tol, label=s.label).out_rank
        if r > best_rank:
            best_rank, best_label = r, s.label
    return {
        "max_rank_found": best_rank,
        "argmax_label": best_label,
        "d_out_min": d_out,
        "d_env_min": d_env,
        "rank_bound": min(d_out, d_env),
        "max_rank_hypothesis_met": best_rank == min(d_out, d_env) and d_out != d_env,
    }


def cmd_rank_scan(cfg: RunConfig) -> int:
    pair = _pair(cfg)
    result = rank_scan(pair, cfg.tol, cfg.family)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    qio.dump_json(result, cfg.out_dir / "rank_scan.json")
    csv_text = qio.rows_to_csv([{k: str(v) for k, v in result.items()}], columns=list(result))
    _emit(result, csv_text, cfg.fmt)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduction tables
# ---------------------------------------------------------------------------

REPRO_COLUMNS = qio.CSV_COLUMNS + ("expected", "match", "claim")


def load_manifest() -> Dict[str, Any]:
    text = resources.files("capdetect").joinpath("data/reproduce.json").read_text(encoding="utf-8")
    return json.loads(text)


def _repro_row(job) -> Dict[str, str]:
    row, tol = job
    spec = qio.family_from_dict(row)
    pair = family_pair(spec, tol)
    report = search(pair, default_probes(pair.d_in, tol, spec), tol, spec)
    out = qio.report_csv_row(report)
    out["params"] = json.dumps(row.get("params", {}), sort_keys=True, separators=(",", ":"))
    out["expected"] = row["expected"]
    out["match"] = str(report.verdict.value == row["expected"]).lower()
    out["claim"] = row.get("claim", "")
    return out


def reproduce_table(name: str, tol: ToleranceConfig, workers: int = 1) -> List[Dict[str, str]]:
    manifest = load_manifest()
    if name not in manifest["tables"]:
        raise ValidationError(f"unknown table {name!r}")
    rows = manifest["tables"][name]["rows"]
    jobs = [(r, tol) for r in rows]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_repro_row, jobs))
    return [_repro_row(j) for j in jobs]


def cmd_reproduce(cfg: RunConfig, table: str) -> int:
    names = TABLES if table == "all" else (table,)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name in names:
        rows = reproduce_table(name, cfg.tol, cfg.workers)
        text = qio.rows_to_csv(rows, REPRO_COLUMNS)
        (cfg.out_dir / f"reproduce_{name}.csv").write_text(text)
        summary[name] = {"rows": len(rows), "matches": sum(r["match"] == "true" for r in rows)}
        if cfg.fmt == "csv":
            sys.stdout.write(text)
    if cfg.fmt == "json":
        sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.command == "detect":
            return cmd_detect(cfg)
        if cfg.command == "sweep":
            return cmd_sweep(cfg, args.direction)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        if cfg.command == "rank-scan":
            return cmd_rank_scan(cfg)
        return cmd_reproduce(cfg, args.table)
    except (ValidationError, UnsupportedError) as exc:
        print(f"qcap: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
