"""JSON and CSV serialization for channels, family specs, reports and checks.

Complex numbers are written as ``[re, im]`` pairs; plain real numbers are
accepted on input wherever a complex entry is expected.
"""
from __future__ import annotations

import csv
import io
import json
from typing import Any, Dict, List

import numpy as np

from .channels import TP_TOL, Channel
from .detector import DetectionReport, ProbeResult
from .numerics import ValidationError
from .verifier import PerturbationCheck, SweepResult
from .zoo import FamilySpec, MadParams

CSV_COLUMNS = (
    "family", "params", "d", "d_out_min", "d_env_min", "verdict", "rule_fired",
    "best_gap_fwd", "best_gap_rev", "witness_psi_label",
)


def fmt_real(x: float) -> str:
    """Fixed 12-significant-digit scientific notation."""
    return f"{float(x) + 0.0:.11e}"


# ---------------------------------------------------------------------------
# complex arrays
# ---------------------------------------------------------------------------

def encode_complex(a) -> Any:
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        return [float(arr.real), float(arr.imag)]
    return [encode_complex(x) for x in arr]


def _decode_scalar(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ValidationError(f"{where}: expected a number or [re, im] pair, got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        return complex(x[0], x[1])
    raise ValidationError(f"{where}: expected a number or [re, im] pair, got {x!r}")


def decode_matrix(m, where: str = "matrix") -> np.ndarray:
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ValidationError(f"{where}: expected a nonempty list of rows")
    width = len(m[0])
    rows = []
    for i, row in enumerate(m):
        if len(row) != width:
            raise ValidationError(f"{where}[{i}]: row has {len(row)} entries, expected {width}")
        rows.append([_decode_scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(row)])
    out = np.asarray(rows, dtype=complex)
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{where}: non-finite entry")
    return out


def decode_vector(v, where: str = "vector") -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ValidationError(f"{where}: expected a nonempty list")
    return np.asarray([_decode_scalar(x, f"{where}[{i}]") for i, x in enumerate(v)], dtype=complex)


def _real_or_complex(a) -> Any:
    arr = np.asarray(a, dtype=complex)
    if np.all(arr.imag == 0):
        return arr.real.tolist()
    return encode_complex(arr)


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

def channel_to_dict(ch: Channel) -> Dict[str, Any]:
    return {"d_in": ch.d_in, "d_out": ch.d_out, "kraus": encode_complex(ch.kraus)}


def channel_from_dict(data: Dict[str, Any]) -> Channel:
    if not isinstance(data, dict):
        raise ValidationError("channel JSON must be an object")
    for key in ("d_in", "d_out", "kraus"):
        if key not in data:
            raise ValidationError(f"channel JSON is missing {key!r}")
    d_in, d_out = data["d_in"], data["d_out"]
    if not (isinstance(d_in, int) and isinstance(d_out, int) and d_in > 0 and d_out > 0):
        raise ValidationError("d_in and d_out must be positive integers")
    kraus = data["kraus"]
    if not isinstance(kraus, list) or not kraus:
        raise ValidationError("kraus must be a nonempty list")
    ops = []
    for k, op in enumerate(kraus):
        m = decode_matrix(op, f"kraus[{k}]")
        if m.shape != (d_out, d_in):
            raise ValidationError(f"kraus[{k}]: shape {m.shape}, expected {(d_out, d_in)}")
        ops.append(m)
    ops = np.asarray(ops)
    gram = np.einsum("kab,kac->bc", ops.conj(), ops)
    err = float(np.linalg.norm(gram - np.eye(d_in)))
    if np.max(np.abs(gram - np.eye(d_in))) > TP_TOL:
        raise ValidationError(f"Kraus operators are not trace preserving "
                              f"(||sum A^dagger A - 1||_F = {err:.3e})")
    return Channel(d_in, d_out, ops)


def load_channel(path) -> Channel:
    return channel_from_dict(load_json(path))


def save_channel(ch: Channel, path) -> None:
    dump_json(channel_to_dict(ch), path)


# ---------------------------------------------------------------------------
# family specs
# ---------------------------------------------------------------------------

_MATRIX_KEYS = ("A", "B", "unitary")


def family_params_from_json(family: str, d: int, params: Dict[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, val in params.items():
        if key in _MATRIX_KEYS:
            m = decode_matrix(val, f"params.{key}")
            out[key] = m.real if np.all(m.imag == 0) and key == "A" else m
        elif key == "P":
            arr = np.asarray(val, dtype=float)
            if arr.size != d * d:
                raise ValidationError(f"params.P must have {d * d} entries")
            out[key] = arr.reshape(d, d)
        elif key == "gamma":
            if not isinstance(val, list):
                raise ValidationError("params.gamma must be a list of {from, to, rate}")
            for i, e in enumerate(val):
                if not isinstance(e, dict) or not {"from", "to", "rate"} <= set(e):
                    raise ValidationError(f"params.gamma[{i}] must have keys from, to, rate")
            out[key] = MadParams.from_list(d, val)
        else:
            out[key] = val
    return out


def family_from_dict(data: Dict[str, Any]) -> FamilySpec:
    if not isinstance(data, dict) or "family" not in data or "d" not in data:
        raise ValidationError("family JSON needs 'family' and 'd'")
    fam = str(data["family"])
    d = data["d"]
    if not isinstance(d, int) or d < 1:
        raise ValidationError("d must be a positive integer")
    params = data.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ValidationError("params must be an object")
    return FamilySpec(fam, d, family_params_from_json(fam, d, params))


def family_params_to_json(spec: FamilySpec) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, val in spec.params.items():
        if isinstance(val, MadParams):
            out[key] = val.to_list()
        elif key == "P":
            out[key] = np.asarray(val, dtype=float).reshape(-1).tolist()
        elif isinstance(val, np.ndarray):
            out[key] = _real_or_complex(val)
        else:
            out[key] = val
    return out


def family_to_dict(spec: FamilySpec) -> Dict[str, Any]:
    return {"family": spec.family, "d": spec.d, "params": family_params_to_json(spec)}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def probe_to_dict(p: ProbeResult) -> Dict[str, Any]:
    return {
        "label": p.label,
        "psi": encode_complex(p.psi),
        "out_rank": p.out_rank,
        "env_rank": p.env_rank,
        "lambda_max": p.lambda_max,
        "lambda_min": p.lambda_min,
        "trace_fwd": p.trace_fwd,
        "trace_rev": p.trace_rev,
        "status": p.status,
        "unstable": p.unstable,
        "witness_sigma_fwd": None if p.witness_sigma_fwd is None else encode_complex(p.witness_sigma_fwd),
        "witness_sigma_rev": None if p.witness_sigma_rev is None else encode_complex(p.witness_sigma_rev),
    }


def report_to_dict(report: DetectionReport) -> Dict[str, Any]:
    return {
        "verdict": report.verdict.value,
        "rule_fired": report.rule_fired.value,
        "rules_fired": [r.value for r in report.rules_fired],
        "message": report.message,
        "family": None if report.family is None else family_to_dict(report.family),
        "n_copies": report.n_copies,
        "d_in": report.d_in,
        "d_out_min": report.d_out_min,
        "d_env_min": report.d_env_min,
        "max_rank_found": report.max_rank_found,
        "best_gap_fwd": report.best_gap_fwd,
        "best_gap_rev": report.best_gap_rev,
        "witness_psi_label": report.witness_psi_label,
        "fwd_probe": report.fwd_probe,
        "rev_probe": report.rev_probe,
        "implications": list(report.implications),
        "probes": [probe_to_dict(p) for p in report.probes],
    }


def report_csv_row(report: DetectionReport) -> Dict[str, str]:
    fam = report.family
    params = "" if fam is None else json.dumps(family_params_to_json(fam), sort_keys=True,
                                               separators=(",", ":"))
    return {
        "family": "channel_file" if fam is None else fam.family,
        "params": params,
        "d": str(report.d_in if fam is None else fam.d),
        "d_out_min": str(report.d_out_min),
        "d_env_min": str(report.d_env_min),
        "verdict": report.verdict.value,
        "rule_fired": report.rule_fired.value,
        "best_gap_fwd": fmt_real(report.best_gap_fwd),
        "best_gap_rev": fmt_real(report.best_gap_rev),
        "witness_psi_label": report.witness_psi_label,
    }


def rows_to_csv(rows: List[Dict[str, str]], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def report_to_csv(report: DetectionReport) -> str:
    return rows_to_csv([report_csv_row(report)])


def sweep_to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eps", "ic_bits"])
    for e, v in zip(result.eps_values, result.ic_values):
        w.writerow([fmt_real(e), fmt_real(v)])
    return buf.getvalue()


def sweep_to_dict(result: SweepResult) -> Dict[str, Any]:
    return {
        "direction": result.direction,
        "eps_values": list(result.eps_values),
        "ic_values": list(result.ic_values),
        "best_eps": result.best_eps,
        "best_ic": result.best_ic,
        "slope_predicted": result.slope_predicted,
        "slope_fitted": result.slope_fitted,
        "anchor_ic": result.anchor_ic,
    }


def perturbation_to_dict(check: PerturbationCheck) -> Dict[str, Any]:
    return {
        "direction": check.direction,
        "predicted_slopes": list(check.predicted_slopes),
        "fitted_slopes": list(check.fitted_slopes),
        "max_rel_err": check.max_rel_err if np.isfinite(check.max_rel_err) else None,
        "block_trace": check.block_trace,
        "passed": check.passed,
    }


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")

