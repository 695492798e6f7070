"""Result records on disk: JSON lines for checks, CSV for curves, a text summary.

Writers emit keys in sorted order with fixed float formatting (repr), so two
runs with the same config and seeds produce byte-identical files.  Readers
re-validate every record against the invariants of its type.
"""

import csv
import json
import math
from pathlib import Path

from .errors import ConfigError

CURVE_FIELDS = ("family", "n", "epsilon_n", "tail_mass", "log_tail_mass", "q_radius",
                "slope", "slope_lo", "slope_hi", "predicted", "r")


def _clean(value):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python ones."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "tolist"):
        return _clean(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _restore(value):
    if isinstance(value, dict):
        return {k: _restore(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_restore(v) for v in value]
    if value in ("inf", "-inf", "nan"):
        return float(value)
    return value


def dumps(record):
    return json.dumps(_clean(record), sort_keys=True, separators=(",", ":"))


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
    return path


def read_jsonl(path):
    with Path(path).open(encoding="utf-8") as fh:
        return [_restore(json.loads(line)) for line in fh if line.strip()]


def curve_rows(curve):
    """One CSV row per sample size of a RateCurve record."""
    rec = curve if isinstance(curve, dict) else curve.to_record()
    rows = []
    for i, n in enumerate(rec["n_grid"]):
        rows.append({
            "family": rec["family"],
            "n": n,
            "epsilon_n": rec["epsilon_n"][i],
            "tail_mass": rec["tail_mass"][i],
            "log_tail_mass": rec["log_tail_mass"][i],
            "q_radius": rec["q_radius"][i],
            "slope": rec["slope"],
            "slope_lo": rec["slope_lo"],
            "slope_hi": rec["slope_hi"],
            "predicted": rec["predicted"],
            "r": rec["r"],
        })
    return rows


def write_curves_csv(path, curves):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_FIELDS, lineterminator="\n")
        w.writeheader()
        for c in curves:
            for row in curve_rows(c):
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return path


def read_curves_csv(path):
    """Group CSV rows back into curve dicts keyed by family, in file order."""
    curves = {}
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            fam = row["family"]
            c = curves.setdefault(fam, {"family": fam, "n_grid": [], "epsilon_n": [], "tail_mass": [],
                                        "log_tail_mass": [], "q_radius": []})
            c["n_grid"].append(int(row["n"]))
            for k in ("epsilon_n", "tail_mass", "log_tail_mass", "q_radius"):
                c[k].append(float(row[k]))
            for k in ("slope", "slope_lo", "slope_hi", "predicted", "r"):
                c[k] = float(row[k])
    return list(curves.values())


# -- validation ---------------------------------------------------------------------------


def _require(cond, msg):
    if not cond:
        raise ConfigError(f"invalid record: {msg}")


def validate_check(rec):
    """Re-derive the verdict of a bound-check, identity, shell or r-sweep record from its fields."""
    name = rec.get("name")
    _require(isinstance(name, str) and name, "missing name")
    if "r_passes" in rec:
        _require(len(rec["rs"]) == len(rec["r_passes"]), "ragged r-sweep record")
        first = next((r for r, ok in zip(rec["rs"], rec["r_passes"]) if ok), None)
        _require(rec["smallest_r"] == first, f"{name}: smallest passing r mismatch")
        _require(rec["verdict"] == ("pass" if first is not None else "fail"), f"{name}: verdict mismatch")
        return rec
    if "passes" in rec:
        _require(len(rec["js"]) == len(rec["lhs"]) == len(rec["rhs"]) == len(rec["passes"]), "ragged shell record")
        _require(rec["verdict"] == ("pass" if all(rec["passes"]) else "fail"), "shell verdict mismatch")
        return rec
    if "kind" in rec:
        from .verifier.identities import IdentityRecord

        ir = IdentityRecord(rec["name"], rec["lhs"], rec["rhs"], rec["tol"], rec["kind"], rec.get("config", {}))
        _require(("pass" if ir.passed else "fail") == rec["verdict"], f"{name}: verdict mismatch")
        return rec
    from .verifier.checks import BoundCheck

    _require(rec["lhs_stderr"] >= 0, f"{name}: negative stderr")
    bc = BoundCheck(rec["name"], rec["lhs"], rec["lhs_stderr"], rec["rhs"], rec["slack_sigmas"],
                    rec.get("config", {}), rec.get("oracle"), rec.get("oracle_stderr"))
    _require(bc.verdict == rec["verdict"], f"{name}: verdict mismatch")
    _require(bc.oracle_agrees == rec.get("oracle_agrees"), f"{name}: oracle agreement mismatch")
    return rec


def validate_curve(rec):
    from .verifier.rates import RateCurve

    try:
        RateCurve(rec["family"], rec["n_grid"], rec["epsilon_n"], rec["tail_mass"], rec["q_radius"],
                  rec["slope"], rec["slope_lo"], rec["slope_hi"], rec["predicted"], rec["r"],
                  rec.get("log_tail_mass", []))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid curve record: {exc}") from None
    _require(len(rec["n_grid"]) == len(rec["q_radius"]) == len(rec["tail_mass"]), "ragged curve")
    return rec


def summary_text(checks=(), curves=()):
    lines = []
    checks, curves = list(checks), list(curves)
    if checks:
        failed = [c for c in checks if c.get("verdict") != "pass"]
        lines.append(f"checks: {len(checks) - len(failed)}/{len(checks)} pass")
        for c in failed:
            lines.append(f"  FAIL {c['name']}: {dumps(c.get('config', {}))}")
    for c in curves:
        lines.append(f"curve {c['family']}: slope {c['slope']:.4f} "
                     f"[{c['slope_lo']:.4f}, {c['slope_hi']:.4f}] predicted {c['predicted']:.4f}")
        for n, t, q in zip(c["n_grid"], c["tail_mass"], c["q_radius"]):
            lines.append(f"  n={n:<6d} tail={t:.4e} radius={q:.4e}")
    return "\n".join(lines) + "\n"
