"""Result bundles and the flat-file writers (CSV, JSON, SVG)."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.12e"


def clean(obj):
    """Recursively convert numpy scalars/arrays and tuples to plain JSON types.

    Non-finite floats become ``None`` so the JSON stays standard and reloads
    to the same structure.
    """
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def timestamp() -> str:
    """UTC timestamp; pinned by SOURCE_DATE_EPOCH when that is set."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        when = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        when = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return when.isoformat()


@dataclass
class ResultBundle:
    command: str
    config: dict
    checks: dict = field(default_factory=dict)
    spectrum: dict | None = None
    evolution: dict | None = None
    continuity: dict | None = None
    provenance: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    exit_code: int = 0

    _PAYLOAD = ("config", "checks", "spectrum", "evolution", "continuity", "provenance",
                "messages")

    def __setattr__(self, name, value):
        # keep payloads JSON-native so a reload compares equal
        if name in self._PAYLOAD:
            value = clean(value)
        super().__setattr__(name, value)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ResultBundle":
        return cls(**json.loads(text))

    def add_check(self, name: str, passed: bool, residual: float, tolerance: float) -> None:
        self.checks[name] = clean({"passed": passed, "residual": residual,
                                   "tolerance": tolerance})

    @property
    def all_checks_pass(self) -> bool:
        return all(c["passed"] for c in self.checks.values())


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def spectrum_rows(report) -> list[tuple]:
    return [(p.index, p.eigenvalue.real, p.eigenvalue.imag, p.krein_norm,
             p.classification.value, p.residual) for p in report.pairs]


SPECTRUM_HEADER = ["index", "re_lambda", "im_lambda", "krein_norm", "class", "residual"]
TRACE_HEADER = ["t", "krein_norm", "dirac_norm", "max_continuity_residual"]
CHECK_HEADER = ["check", "passed", "residual", "tolerance"]


def snapshot_csv(times, nodes, snapshots) -> str:
    rows = ((t, x, a.real, a.imag)
            for t, row in zip(times, snapshots) for x, a in zip(nodes, row))
    return csv_text(["t", "x", "re_psi", "im_psi"], rows)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "kreinqm"
    return plt


def _save_svg(fig, plt) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def norms_svg(times, krein, dirac, title: str = "") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(times, krein, label="Krein norm <psi, J psi>")
    ax.plot(times, dirac, label="Dirac norm <psi|psi>", linestyle="--")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    return _save_svg(fig, plt)


def spectrum_svg(report, title: str = "") -> str:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    markers = {"positive": "o", "negative": "s", "null": "x", "unresolved": "."}
    for cls, m in markers.items():
        pts = [p.eigenvalue for p in report.pairs if p.classification.value == cls]
        if pts:
            z = np.array(pts)
            ax.scatter(z.real, z.imag, marker=m, s=14, label=cls)
    ax.set_xlabel("Re lambda")
    ax.set_ylabel("Im lambda")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    return _save_svg(fig, plt)


def write_outputs(out_dir: Path, files: dict[str, str], force: bool) -> list[Path]:
    """Write every file or none: existing targets abort unless ``force``."""
    out_dir = Path(out_dir)
    targets = {name: out_dir / name for name in files}
    clash = [str(p) for p in targets.values() if p.exists()]
    if clash and not force:
        raise FileExistsError(f"refusing to overwrite {', '.join(clash)} (use --force)")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        targets[name].write_text(text)
    return list(targets.values())
