"""
Command-line front end.

    krein spectrum|evolve|check|report --config FILE [--plot] [--force]
          [--out DIR] [--set key=value]...

Exit codes: 0 success, 1 invalid input or runtime failure, 2 a check or the
reality theorem failed (results are still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bundle import (CHECK_HEADER, SPECTRUM_HEADER, TRACE_HEADER, ResultBundle, csv_text,
                     norms_svg, snapshot_csv, spectrum_rows, spectrum_svg, timestamp,
                     write_outputs)
from .config import COMMANDS, ConfigError, RunConfig, read_complex_column_file
from .evolution import (check_hilbert_unitarity, check_krein_unitarity, continuity_residual,
                        evolve, gaussian_state, propagator)
from .hamiltonians import (build_hamiltonian, build_kinetic, is_pt_symmetric_potential,
                           is_real_potential, sample_potential)
from .krein import (Involution, StateVector, adjoint_axiom_residuals,
                    dirac_j_product_identity, is_j_hermitian, j_product_adjoint_identity)
from .spectrum import (EigenClass, PreconditionError, classify_spectrum, eigendecompose,
                       verify_reality_theorem)

log = logging.getLogger("kreinqm")

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2

# sample scalar for the conjugate-homogeneity axiom
_AXIOM_LAMBDA = 0.3 + 0.7j


class Problem:
    """Everything derived from a config that several commands share."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.spec = cfg.hamiltonian_spec()
        self.grid = self.spec.grid
        self.constants = self.spec.constants
        self.potential = sample_potential(self.spec.potential, self.grid, self.constants)
        self.H = build_hamiltonian(self.spec)
        self.J = Involution.parity(self.grid)
        self._report = None

    def spectrum_report(self):
        if self._report is None:
            raw = eigendecompose(self.H)
            self._report = classify_spectrum(raw, self.J, self.cfg.null_tol, self.cfg.reality_tol)
        return self._report


def _provenance(extra: dict | None = None) -> dict:
    d = {"version": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
         "timestamp": timestamp()}
    d.update(extra or {})
    return d


# -- individual pipelines ----------------------------------------------------

def _run_checks(p: Problem, bundle: ResultBundle, names) -> None:
    cfg = p.cfg
    U = None
    for name in names:
        if name == "pt_symmetric":
            r = is_pt_symmetric_potential(p.potential, p.grid)
        elif name == "j_hermitian":
            r = is_j_hermitian(p.H, p.J)
        elif name == "real_potential":
            r = is_real_potential(p.potential)
        elif name in ("krein_unitary", "hilbert_unitary"):
            if U is None:
                U = propagator(p.H, cfg.check_time, p.constants)
            r = (check_krein_unitarity(U, p.J, cfg.unitarity_tol) if name == "krein_unitary"
                 else check_hilbert_unitarity(U, cfg.unitarity_tol))
        elif name in ("adjoint_identity", "adjoint_identity_dirac"):
            tol = cfg.axiom_tol * max(1.0, p.H.scale)
            f = j_product_adjoint_identity if name == "adjoint_identity" else dirac_j_product_identity
            res = f(p.H, p.J)
            r = (res <= tol, res, tol)
        elif name == "adjoint_axioms":
            T = build_kinetic(p.grid, p.constants, cfg.stencil_order)
            ax = adjoint_axiom_residuals(p.H, T, _AXIOM_LAMBDA, p.J)
            res = ax.max()
            r = (res <= cfg.axiom_tol, res, cfg.axiom_tol)
        else:  # pragma: no cover - names are validated by the config parser
            raise ValueError(name)
        bundle.add_check(name, bool(r[0]), float(r[1]), float(r[2]))


def _check_table(bundle: ResultBundle) -> str:
    rows = [(n, c["passed"], c["residual"], c["tolerance"]) for n, c in bundle.checks.items()]
    return csv_text(CHECK_HEADER, rows)


def _spectrum_section(p: Problem, bundle: ResultBundle) -> None:
    _run_checks(p, bundle, ("pt_symmetric", "j_hermitian"))
    report = p.spectrum_report()
    holds, violations = None, list(report.theorem_violations)
    try:
        holds, violations = verify_reality_theorem(report)
    except PreconditionError as exc:
        bundle.messages.append(str(exc))
    ev = report.eigenvalues
    bundle.spectrum = {
        "re_lambda": ev.real, "im_lambda": ev.imag,
        "krein_norm": [q.krein_norm for q in report.pairs],
        "class": [q.classification.value for q in report.pairs],
        "residual": [q.residual for q in report.pairs],
        "condition": [q.condition for q in report.pairs],
        "imag_uncertainty": [q.imag_uncertainty for q in report.pairs],
        "counts": report.counts,
        "max_imag_non_null": report.max_imag_non_null,
        "conjugate_pairs": report.conjugate_pairs,
        "unpaired": report.unpaired,
        "degenerate_groups": report.degenerate_groups,
        "theorem_holds": holds,
        "theorem_violations": violations,
        "outside_validated_range": p.spec.potential.outside_validated_range,
    }
    bundle.provenance["max_eig_residual"] = max((q.residual for q in report.pairs), default=0.0)
    if not bundle.all_checks_pass or holds is not True:
        bundle.exit_code = EXIT_FAILED


def _initial_state(p: Problem) -> tuple[StateVector, str]:
    cfg = p.cfg
    if cfg.initial_state == "gaussian":
        psi = gaussian_state(p.grid, cfg.gaussian_center, cfg.gaussian_width,
                             cfg.gaussian_momentum)
        return psi, (f"gaussian(center={cfg.gaussian_center!r}, width={cfg.gaussian_width!r}, "
                     f"momentum={cfg.gaussian_momentum!r})")
    if cfg.initial_state == "file":
        amp = read_complex_column_file(cfg.resolve(cfg.initial_file), p.grid)
        if not np.any(amp):
            raise ConfigError("initial state file is all zeros", cfg.initial_file)
        return StateVector(p.grid, amp).normalized(), f"file({cfg.initial_file})"
    report = p.spectrum_report()
    pool = [q for q in report.pairs
            if cfg.include_null_states or q.classification is not EigenClass.NULL]
    if cfg.eigenstate_index >= len(pool):
        raise ConfigError(f"eigenstate_index {cfg.eigenstate_index} out of range "
                          f"({len(pool)} selectable states)")
    pair = pool[cfg.eigenstate_index]
    if pair.classification is EigenClass.UNRESOLVED:
        log.warning("selected eigenstate %d is unresolved", pair.index)
    return pair.eigenvector, f"eigenstate({cfg.eigenstate_index}, lambda={pair.eigenvalue!r})"


def _evolve_section(p: Problem, bundle: ResultBundle):
    cfg = p.cfg
    psi0, label = _initial_state(p)
    trace = evolve(psi0, p.H, cfg.t_final, cfg.n_steps, p.J, p.constants, keep_snapshots=True)
    rows = trace.times.size
    per_step = np.full(rows, np.nan)
    cont = None
    if rows >= 3 and p.grid.n_points >= 5:
        dt = cfg.t_final / cfg.n_steps
        cont = continuity_residual(trace.snapshots, p.grid, dt, p.potential, p.constants)
        per_step = cont.max_residual_per_step(rows)
        bundle.continuity = {
            "max_residual": cont.max_residual,
            "max_source": float(np.max(np.abs(cont.source))),
            "max_residual_minus_source": float(np.max(np.abs(cont.residual - cont.source))),
            "max_residual_per_step": per_step,
        }
    bundle.evolution = {"initial_state": label, "times": trace.times,
                        "krein_norms": trace.krein_norms, "dirac_norms": trace.dirac_norms,
                        **trace.drift_summary()}
    return trace, per_step


# -- commands ----------------------------------------------------------------

def _outputs_for(cfg: RunConfig, plot: bool) -> list[str]:
    names = []
    if cfg.command in ("check", "report"):
        names.append("checks.csv")
    if cfg.command in ("spectrum", "report"):
        names += ["spectrum.csv"] + (["spectrum.svg"] if plot else [])
    if cfg.command in ("evolve", "report"):
        names += ["trace.csv"] + (["snapshots.csv"] if cfg.save_snapshots else [])
        names += ["norms.svg"] if plot else []
    names += [f"{cfg.command}.json", f"{cfg.command}.cfg"]
    return names


def run(cfg: RunConfig, plot: bool = False) -> tuple[ResultBundle, dict[str, str]]:
    """Run one command and return its bundle plus the files to write."""
    p = Problem(cfg)
    bundle = ResultBundle(cfg.command, cfg.to_dict(), provenance=_provenance(
        {"grid_spacing": p.grid.spacing, "stencil_order": cfg.stencil_order}))
    files: dict[str, str] = {}
    title = f"{cfg.potential} (N={cfg.n_points}, L={cfg.half_width:g})"

    if cfg.command in ("check", "report"):
        _run_checks(p, bundle, cfg.checks)
        if not bundle.all_checks_pass:
            bundle.exit_code = EXIT_FAILED
        files["checks.csv"] = _check_table(bundle)
    if cfg.command in ("spectrum", "report"):
        _spectrum_section(p, bundle)
        report = p.spectrum_report()
        files["spectrum.csv"] = csv_text(SPECTRUM_HEADER, spectrum_rows(report))
        if plot:
            files["spectrum.svg"] = spectrum_svg(report, title)
    if cfg.command in ("evolve", "report"):
        trace, per_step = _evolve_section(p, bundle)
        files["trace.csv"] = csv_text(TRACE_HEADER, zip(trace.times, trace.krein_norms,
                                                         trace.dirac_norms, per_step))
        if cfg.save_snapshots:
            files["snapshots.csv"] = snapshot_csv(trace.times, p.grid.nodes, trace.snapshots)
        if plot:
            files["norms.svg"] = norms_svg(trace.times, trace.krein_norms, trace.dirac_norms,
                                           title)
    files[f"{cfg.command}.json"] = bundle.to_json()
    files[f"{cfg.command}.cfg"] = cfg.to_text()
    return bundle, files


def run_spectrum(cfg: RunConfig, plot: bool = False) -> ResultBundle:
    return run(_with_command(cfg, "spectrum"), plot)[0]


def run_evolve(cfg: RunConfig, plot: bool = False) -> ResultBundle:
    return run(_with_command(cfg, "evolve"), plot)[0]


def run_check(cfg: RunConfig) -> ResultBundle:
    return run(_with_command(cfg, "check"))[0]


def _with_command(cfg: RunConfig, command: str) -> RunConfig:
    return dataclasses.replace(cfg, command=command)


def _summary(bundle: ResultBundle) -> str:
    lines = [f"krein {bundle.command}: exit {bundle.exit_code}"]
    for name, c in bundle.checks.items():
        verdict = "pass" if c["passed"] else "FAIL"
        lines.append(f"  {name:<23} {verdict:<4}  residual {c['residual']!s:<24} "
                     f"tol {c['tolerance']}")
    if bundle.spectrum is not None:
        s = bundle.spectrum
        lines.append(f"  eigenpairs: {s['counts']}; max |Im| (definite norm) "
                     f"{s['max_imag_non_null']}")
        lines.append(f"  reality theorem: {s['theorem_holds']}"
                     + (f" ({len(s['theorem_violations'])} violations)"
                        if s["theorem_violations"] else ""))
    if bundle.evolution is not None:
        e = bundle.evolution
        lines.append(f"  Krein norm drift {e['krein_drift_abs']}, "
                     f"Dirac norm drift {e['dirac_drift_abs']}")
    lines.extend(f"  note: {m}" for m in bundle.messages)
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="krein", description="Krein-space spectra and dynamics "
                                 "for 1-D PT-symmetric Hamiltonians.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"spectrum": "eigenvalues with Krein-norm classes",
             "evolve": "time evolution with both norms and the continuity residual",
             "check": "Hermiticity, PT-symmetry, unitarity and adjoint checks",
             "report": "check, spectrum and evolve in one run"}
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", metavar="FILE", help="key = value config file")
        sp.add_argument("--plot", action="store_true", help="also write SVG figures")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        sp.add_argument("--out", metavar="DIR", default=".", help="output directory")
        sp.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override a config value (repeatable)")
    return ap


def _setup_logging() -> None:
    level = os.environ.get("KREIN_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    elif not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.command, args.config, args.overrides)
        out = Path(args.out)
        clash = [str(out / n) for n in _outputs_for(cfg, args.plot) if (out / n).exists()]
        if clash and not args.force:
            raise FileExistsError(f"refusing to overwrite {', '.join(clash)} (use --force)")
        bundle, files = run(cfg, args.plot)
        write_outputs(out, files, args.force)
    except ConfigError as exc:
        print(f"krein: invalid config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileExistsError, OSError, FloatingPointError, ValueError) as exc:
        print(f"krein: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(_summary(bundle))
    return bundle.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
