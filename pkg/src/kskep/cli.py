"""Command-line surface: transform states, propagate, rotating-frame demo,
invariant audits, and quick plots.

Exit codes: 0 success, 2 usage/parse error, 3 domain error (collision, pole,
constraint violation, unbound orbit), 4 numerical failure.  Outputs are
byte-deterministic for identical inputs and configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import partial

import numpy as np

from . import recordio
from .canon import (
    bilinear_invariant,
    cartesian_from_phase,
    phase_from_cartesian,
    project_constraint,
    validate_phase,
)
from .config import RunConfig, build_run_config, load_config, resolve_perturbation
from .dynamics import NO_PERTURBATION, fix_energy_manifold, make_eom
from .errors import KSError, NoConvergence, StepLimitExceeded
from .invariants import invariant_report
from .propagator import TrajectorySample, integrate, sample_at, tau_at_time
from .recordio import RecordError
from .rotframe import (
    closed_form_sample,
    h_invariant,
    make_rot_eom,
    rot_frequency,
    RotatingFrameModified,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--chart", dest="defining_vector", metavar="KS1|KS3|c1,c2,c3",
                   help="defining vector of the chart (default KS3)")
    p.add_argument("--alpha", help="chart length scale, or 'auto' for 2a of the initial orbit")
    p.add_argument("--mu", type=float, help="gravitational parameter (default 1.0)")
    p.add_argument("--format", choices=("csv", "jsonl"), help="record format (default csv)")
    p.add_argument("-o", "--output", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kskep",
        description="KS regularization of the perturbed Kepler problem "
                    "with an arbitrary defining vector",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="convert Cartesian records to KS phases or back")
    _add_common(p)
    p.add_argument("input", help="input records file, or '-' for stdin")
    p.add_argument("--rep", choices=("sks", "rule1"), default=None,
                   help="fiber representative for Cartesian -> KS (default sks)")
    p.add_argument("--project-constraint", action="store_true",
                   help="project KS records violating J.c = 0 instead of failing")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers over records")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("propagate", help="fixed-step propagation of one initial state")
    _add_common(p)
    p.add_argument("input", help="file with exactly one initial record")
    p.add_argument("--rep", choices=("sks", "rule1"), default=None)
    span = p.add_mutually_exclusive_group(required=True)
    span.add_argument("--tau-span", type=float, help="Sundman-time span")
    span.add_argument("--t-span", type=float, help="physical-time span (inverted via v*)")
    p.add_argument("--step", type=float, help="Sundman-time step")
    p.add_argument("--scheme", choices=("rk4", "split"), help="integration scheme")
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--samples", type=int, help="downsample output to at most N rows")
    p.add_argument("--perturbation", choices=("none", "rotating_frame", "rotating_frame_raw"),
                   default="none")
    p.add_argument("--omega", type=float, help="frame rate for rotating_frame perturbation")
    p.add_argument("--axis", help="frame axis (defaults to the chart's defining vector)")
    p.add_argument("--compare-oracle", action="store_true",
                   help="add a universal-variable oracle position-error column")
    p.add_argument("--project-constraint", action="store_true",
                   help="project a KS input record violating J.c = 0 instead of failing")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("rotating", help="closed-form Kepler motion in a rotating frame")
    _add_common(p)
    p.add_argument("input", help="file with exactly one initial record (rotating-frame coords)")
    p.add_argument("--rep", choices=("sks", "rule1"), default=None)
    p.add_argument("--omega", type=float, help="frame angular rate (default 0)")
    p.add_argument("--axis", help="rotation axis (defaults to the chart's defining vector)")
    p.add_argument("--tau-span", type=float, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--compare-numerical", action="store_true",
                   help="also integrate numerically and report the deviation")
    p.add_argument("--step", type=float, help="step for --compare-numerical")
    p.set_defaults(func=cmd_rotating)

    p = sub.add_parser("check", help="invariant report for state records")
    _add_common(p)
    p.add_argument("input", help="input records file, or '-' for stdin")
    p.add_argument("--jobs", type=int, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("plot", help="render an orbit or invariant-drift figure")
    p.add_argument("input", help="trajectory file written by propagate/rotating")
    p.add_argument("-o", "--output", required=True, help="image path (.png or .svg)")
    p.add_argument("--what", choices=("orbit", "drift"), default="orbit")
    p.set_defaults(func=cmd_plot)

    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    file_options = load_config(args.config) if getattr(args, "config", None) else {}
    flag_options = {
        key: getattr(args, key, None)
        for key in ("defining_vector", "alpha", "mu", "format", "rep",
                    "step", "scheme", "max_steps", "omega", "axis", "jobs")
    }
    return build_run_config(file_options, flag_options)


def _read_input(args: argparse.Namespace, cfg: RunConfig) -> tuple[str, list[dict]]:
    text = sys.stdin.read() if args.input == "-" else open(args.input).read()
    return recordio.parse_records(text, cfg.format)


def _open_output(args: argparse.Namespace):
    if args.output:
        return open(args.output, "w"), True
    return sys.stdout, False


def _single_record(kind: str, records: list[dict]) -> dict:
    if kind == "empty" or len(records) != 1:
        raise RecordError(0, f"expected exactly one initial record, got {len(records)}")
    return records[0]


def _initial_phase(kind: str, rec: dict, cfg: RunConfig, pert=NO_PERTURBATION,
                   project: bool = False):
    """Chart + phase from the single input record.

    Cartesian records are lifted with V* fixed on the K = 0 manifold; KS
    records are taken as-is (their V* defines the manifold) after the
    constraint check.
    """
    if kind == "cartesian":
        state = recordio.state_from_record(rec, 0, cfg.mu)
        chart = cfg.chart(state)
        phase = phase_from_cartesian(state, chart, rep=cfg.rep)
        phase = replace(phase, V_star=fix_energy_manifold(phase, chart, state.mu, pert))
        return chart, phase, state.mu
    chart = cfg.chart(None)  # alpha=auto is rejected here: needs a Cartesian record
    phase = recordio.phase_from_record(rec)
    if project:
        phase = project_constraint(phase, chart)
    else:
        validate_phase(phase, chart)
    return chart, phase, cfg.mu


# --- transform -------------------------------------------------------------

def _resolve_batch_chart(kind: str, records: list[dict], cfg: RunConfig):
    """One chart per run; alpha = auto is taken from the first record."""
    initial = (
        recordio.state_from_record(records[0], 0, cfg.mu)
        if kind == "cartesian" and records
        else None
    )
    return cfg.chart(initial)


def _transform_one(item: tuple[int, dict], kind: str, chart, cfg: RunConfig, project: bool) -> dict:
    i, rec = item
    try:
        if kind == "cartesian":
            state = recordio.state_from_record(rec, i, cfg.mu)
            phase = phase_from_cartesian(state, chart, rep=cfg.rep)
            return {
                "v": phase.v, "V": phase.V,
                "v_star": phase.v_star, "V_star": phase.V_star,
                "Jc": bilinear_invariant(phase.v, phase.V, chart.c),
            }
        phase = recordio.phase_from_record(rec)
        jc = bilinear_invariant(phase.v, phase.V, chart.c)
        if project:
            phase = project_constraint(phase, chart)
        else:
            validate_phase(phase, chart)
        state = cartesian_from_phase(phase, chart, cfg.mu)
        return {"x": state.x, "X": state.X, "mu": state.mu, "Jc": jc}
    except KSError as exc:
        raise exc.__class__(f"record {i}: {exc}") from exc


def cmd_transform(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    kind, records = _read_input(args, cfg)
    out, close = _open_output(args)
    try:
        if kind == "empty":
            return 0
        chart = _resolve_batch_chart(kind, records, cfg)
        work = partial(_transform_one, kind=kind, chart=chart, cfg=cfg,
                       project=args.project_constraint)
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                rows = list(pool.map(work, enumerate(records)))
        else:
            rows = [work(item) for item in enumerate(records)]
        if kind == "cartesian":
            recordio.write_ks_records(rows, cfg.out_format, out)
        else:
            recordio.write_cartesian_records(rows, cfg.out_format, out)
        return 0
    finally:
        if close:
            out.close()


# --- propagate ---------------------------------------------------------------

def _downsample_indices(total: int, n: int | None) -> np.ndarray:
    if n is None or n >= total:
        return np.arange(total)
    return np.unique(np.linspace(0, total - 1, max(n, 2)).round().astype(int))


def _drift_summary(samples: list[TrajectorySample]) -> dict:
    jc = np.array([s.report.jc for s in samples])
    k = np.array([s.report.k for s in samples])
    k0 = np.array([s.report.k0 for s in samples])
    return {
        "samples": len(samples),
        "tau_final": samples[-1].tau,
        "t_final": samples[-1].t,
        "max_abs_Jc": float(np.max(np.abs(jc))),
        "max_abs_K": float(np.max(np.abs(k))),
        "max_K0_drift": float(np.max(np.abs(k0 - k0[0]))),
    }


def _emit_summary(summary: dict, to_file: bool) -> None:
    # Samples on stdout push the summary to stderr; with -o both are clean.
    print(json.dumps(summary, indent=2), file=sys.stdout if to_file else sys.stderr)


def cmd_propagate(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    kind, records = _read_input(args, cfg)
    rec = _single_record(kind, records)
    chart_for_frame = cfg.chart(
        recordio.state_from_record(rec, 0, cfg.mu) if kind == "cartesian" else None
    )
    pert = resolve_perturbation(args.perturbation, cfg.frame(chart_for_frame))
    chart, phase, mu = _initial_phase(kind, rec, cfg, pert,
                                      project=args.project_constraint)
    eom = make_eom(chart, mu, pert)
    icfg = cfg.integrator()

    if args.tau_span is not None:
        samples = list(integrate(phase, eom, icfg, args.tau_span, chart, mu, pert))
        tau_span_of_t = None
    else:
        samples = list(integrate(phase, eom, icfg, None, chart, mu, pert,
                                 stop_time=args.t_span))
        tau_span_of_t = tau_at_time(samples, args.t_span, chart)

    errs = None
    if args.compare_oracle:
        from .propagator import kepler_oracle

        s0 = samples[0].state
        errs = [
            float(np.linalg.norm(s.state.x - kepler_oracle(s0, s.t - samples[0].t).x))
            for s in samples
        ]

    idx = _downsample_indices(len(samples), args.samples)
    samples_out = [samples[i] for i in idx]
    extra = {"oracle_err": [errs[i] for i in idx]} if errs is not None else None

    out, close = _open_output(args)
    try:
        recordio.write_trajectory(samples_out, cfg.out_format, out, extra=extra)
    finally:
        if close:
            out.close()

    summary = _drift_summary(samples)
    if errs is not None:
        summary["max_oracle_position_error"] = max(errs)
    if tau_span_of_t is not None:
        summary["tau_at_t_span"] = tau_span_of_t
    _emit_summary(summary, to_file=close)
    return 0


# --- rotating ----------------------------------------------------------------

def cmd_rotating(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    kind, records = _read_input(args, cfg)
    rec = _single_record(kind, records)
    chart0 = cfg.chart(
        recordio.state_from_record(rec, 0, cfg.mu) if kind == "cartesian" else None
    )
    spec = cfg.frame(chart0)
    pert = RotatingFrameModified(spec)
    chart, phase, mu = _initial_phase(kind, rec, cfg, pert)
    h0 = h_invariant(phase.v, phase.V, chart.c)
    w = rot_frequency(phase.V_star, h0, chart, spec)

    taus = np.linspace(0.0, args.tau_span, max(args.samples, 2))
    samples = [
        sample_at(float(tau), closed_form_sample(phase, float(tau), chart, spec, w),
                  chart, mu, pert)
        for tau in taus
    ]
    out, close = _open_output(args)
    try:
        recordio.write_trajectory(samples, cfg.out_format, out)
    finally:
        if close:
            out.close()

    summary = _drift_summary(samples)
    summary.update({"omega": spec.omega, "w": w, "H": h0, "V_star": phase.V_star})

    if args.compare_numerical:
        icfg = cfg.integrator()
        eom = make_rot_eom(chart, spec)
        dev = 0.0
        h_drift = 0.0
        w_drift = 0.0
        for s in integrate(phase, eom, icfg, args.tau_span, chart, mu, pert):
            ref = closed_form_sample(phase, s.tau, chart, spec, w)
            dev = max(dev, float(np.max(np.abs(ref.to_array() - s.phase.to_array()))))
            h_k = h_invariant(s.phase.v, s.phase.V, chart.c)
            h_drift = max(h_drift, abs(h_k - h0))
            w_drift = max(w_drift, abs(rot_frequency(s.phase.V_star, h_k, chart, spec) - w))
        summary["max_closed_form_vs_numerical"] = dev
        summary["H_drift"] = h_drift
        summary["w_drift"] = w_drift

    _emit_summary(summary, to_file=close)
    return 0


# --- check -------------------------------------------------------------------

def _check_one(item: tuple[int, dict], kind: str, chart, cfg: RunConfig) -> dict:
    i, rec = item
    try:
        if kind == "cartesian":
            state = recordio.state_from_record(rec, i, cfg.mu)
            phase = phase_from_cartesian(state, chart, rep=cfg.rep)
            mu = state.mu
        else:
            phase = recordio.phase_from_record(rec)
            mu = cfg.mu
        report = invariant_report(phase, chart, mu)
        report["record"] = i
        report["constraint_violated"] = bool(
            abs(report["Jc"])
            > 1e-10 * max(1.0, float(np.linalg.norm(phase.v)) * float(np.linalg.norm(phase.V)))
        )
        return report
    except KSError as exc:
        raise exc.__class__(f"record {i}: {exc}") from exc


def cmd_check(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    kind, records = _read_input(args, cfg)
    out, close = _open_output(args)
    try:
        if kind == "empty":
            out.write(json.dumps({"records": [], "summary": {}}, indent=2) + "\n")
            return 0
        chart = _resolve_batch_chart(kind, records, cfg)
        work = partial(_check_one, kind=kind, chart=chart, cfg=cfg)
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                reports = list(pool.map(work, enumerate(records)))
        else:
            reports = [work(item) for item in enumerate(records)]
        summary = {
            "records": len(reports),
            "constraint_violations": sum(r["constraint_violated"] for r in reports),
            "unbound": sum(r["unbound"] for r in reports),
            "max_laplace_route_spread": max(r["laplace"]["max_disagreement"] for r in reports),
            "max_angular_momentum_disagreement": max(
                r["angular_momentum"]["disagreement"] for r in reports
            ),
        }
        out.write(json.dumps({"records": reports, "summary": summary}, indent=2) + "\n")
        return 3 if summary["unbound"] else 0
    finally:
        if close:
            out.close()


# --- plot ----------------------------------------------------------------------

def cmd_plot(args: argparse.Namespace) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    text = open(args.input).read()
    cols = recordio.parse_trajectory(text)
    fig, ax = plt.subplots(figsize=(6, 5))
    if args.what == "orbit":
        ax.plot(cols["x1"], cols["x2"], lw=0.8)
        ax.plot([0.0], [0.0], "k+", ms=10)
        ax.plot(cols["x1"][:1], cols["x2"][:1], "o", ms=5)
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title("orbit projection")
    else:
        tau = cols["tau"]
        ax.semilogy(tau, np.abs(cols["Jc"]) + 1e-300, label="|J.c|")
        ax.semilogy(tau, np.abs(cols["K0"] - cols["K0"][0]) + 1e-300, label="|K0 drift|")
        ax.set_xlabel("tau")
        ax.set_ylabel("drift")
        ax.legend()
        ax.set_title("invariant drift")
    fig.tight_layout()
    fig.savefig(args.output)
    plt.close(fig)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RecordError as exc:
        print(f"kskep: {exc}", file=sys.stderr)
        return 2
    except (StepLimitExceeded, NoConvergence) as exc:
        print(f"kskep: numerical failure: {exc}", file=sys.stderr)
        return 4
    except KSError as exc:
        print(f"kskep: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"kskep: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
