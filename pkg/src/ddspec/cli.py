"""Command-line front end: simulation, reconstruction, and validation.

Every command reads/writes the JSON and CSV formats defined by the
library modules, embeds provenance (version, seed, config hash) in its
outputs, and writes files atomically so schema failures never leave
partial artifacts.  Exit codes: 0 success, 1 usage or schema error,
2 numerical failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, evaluate, filters, forward, oracle, sequences, spectroscopy
from ._quadrature import IntegrationError
from .model import (
    CoherenceTrace,
    NuclearCoupling,
    environment_from_dict,
    environment_to_dict,
    khz_to_rad_us,
    rad_us_to_khz,
)

USAGE_ERROR = 1
NUMERICAL_ERROR = 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# small I/O helpers

def _config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _meta(config=None, seed=None):
    m = {"tool": "ddspec", "version": __version__}
    if config is not None:
        m["config_sha256"] = _config_hash(config)
    if seed is not None:
        m["seed"] = seed
    return m


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text, out):
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"{what} file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path} is not valid JSON: {exc}") from exc


def _meta_lines(meta):
    return [f"{k}: {v}" for k, v in meta.items()]


def _trace_meta(text):
    """Parse '# key: value' comment lines of a trace CSV into a dict."""
    meta = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if ":" in body:
            key, _, val = body.partition(":")
            meta[key.strip()] = val.strip()
    return meta


def _load_traces(path):
    """All trace CSVs under a directory (or a single file), with metadata."""
    p = Path(path)
    files = [p] if p.is_file() else sorted(p.glob("*.csv"))
    if not files:
        raise UsageError(f"no trace CSV files found under {path}")
    out = []
    for f in files:
        text = f.read_text()
        try:
            trace = forward.trace_from_csv(text)
        except ValueError as exc:
            raise UsageError(f"{f}: {exc}") from exc
        out.append((f, trace, _trace_meta(text)))
    return out


def _parse_int_list(text, flag):
    try:
        return [int(x) for x in str(text).split(",") if x != ""]
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from exc


def _parse_float_list(text, flag):
    try:
        return [float(x) for x in str(text).split(",") if x != ""]
    except ValueError as exc:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from exc


def _n_list(spec, what="n_list"):
    if isinstance(spec, dict):
        try:
            return list(range(int(spec["start"]), int(spec["stop"]) + 1, int(spec.get("step", 1))))
        except KeyError as exc:
            raise UsageError(f"{what} range needs start/stop, missing {exc}") from exc
    if isinstance(spec, list):
        return [int(n) for n in spec]
    raise UsageError(f"{what} must be a list or a start/stop/step object")


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    config = _load_json(args.config, "config")
    try:
        env = environment_from_dict(config["environment"])
        trace_specs = config["traces"]
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad simulate config: {exc}") from exc
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    meta = _meta(config, seed)

    def build(idx_spec):
        idx, spec = idx_spec
        try:
            family = spec.get("family", "cpmg")
            t1 = float(spec["t1_us"])
            ns = _n_list(spec["n"], "trace n")
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"bad trace spec #{idx}: {exc}") from exc
        trace = forward.decay_dataset(
            t1, ns, env, family=family,
            shot_sigma=spec.get("shot_sigma"), rng_seed=seed + idx,
        )
        lines = _meta_lines(meta)
        if "harmonic_hint" in spec:
            lines.append(f"harmonic_hint: {spec['harmonic_hint']}")
        name = spec.get("name", f"trace_{idx:03d}")
        return name, forward.trace_to_csv(trace, comments=lines)

    jobs = list(enumerate(trace_specs))
    if args.threads and args.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(build, jobs))
    else:
        results = [build(j) for j in jobs]

    outdir = Path(args.out or ".")
    for name, csv_text in results:
        _atomic_write(outdir / f"{name}.csv", csv_text)
    print(f"wrote {len(results)} trace file(s) to {outdir}")
    return 0


def cmd_filter(args):
    seq = _load_sequence(args.seq)
    omegas_khz = _parse_float_list(args.omega_khz, "--omega-khz")
    if not omegas_khz:
        raise UsageError("--omega-khz needs at least one frequency")
    om = khz_to_rad_us(np.array(omegas_khz))
    y2 = filters.filter_y_squared(seq, om)
    lines = ["omega_khz,y_squared"]
    lines += [f"{float(k)!r},{float(v)!r}" for k, v in zip(omegas_khz, np.atleast_1d(y2))]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _load_sequence(path):
    d = _load_json(path, "sequence")
    try:
        return sequences.sequence_from_dict(d)
    except ValueError as exc:
        raise UsageError(f"bad sequence spec in {path}: {exc}") from exc


def _load_bath(path):
    d = _load_json(path, "bath")
    try:
        omega0 = khz_to_rad_us(float(d["omega0_khz"]))
        if "random" in d:
            r = d["random"]
            return oracle.random_bath(
                int(r["n_spins"]), float(r["ratio"]), omega0,
                rng_seed=int(r.get("seed", 0)), par_ratio=float(r.get("par_ratio", 0.0)),
            )
        spins = tuple(
            NuclearCoupling(
                omega_par=khz_to_rad_us(float(s["omega_par_khz"])),
                omega_perp=khz_to_rad_us(float(s["omega_perp_khz"])),
            )
            for s in d["spins"]
        )
        return oracle.SpinBath(spins=spins, omega0=omega0)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad bath spec in {path}: {exc}") from exc


def cmd_oracle(args):
    bath = _load_bath(args.bath)
    seq = _load_sequence(args.seq)
    n = max(seq.n_pulses, 1)
    if args.cycle_times_us:
        cycle_times = _parse_float_list(args.cycle_times_us, "--cycle-times-us")
    else:
        base = seq.total_time / n
        cycle_times = list(np.linspace(0.25 * base, 2.0 * base, 60))
    rows = oracle.sweep(bath, n, cycle_times)
    lines = ["total_time_us,p_exact,p_magnus"]
    lines += [f"{float(t)!r},{float(pe)!r},{float(pm)!r}" for t, pe, pm in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_scan_plan(args):
    harmonics = _parse_int_list(args.harmonics, "--harmonics")
    plan = spectroscopy.plan_scan(args.nu_l_khz, harmonics, args.window_khz, args.points)
    lines = ["t1_us,harmonic"]
    lines += [f"{t1!r},{l}" for t1, l in plan]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _rate_points(traces, n_min, w_floor):
    pts, skipped = [], 0
    for f, trace, meta in traces:
        hint = meta.get("harmonic_hint")
        hint = int(hint) if hint is not None else None
        try:
            pts.append(
                spectroscopy.trace_rate_point(trace, n_min=n_min, w_floor=w_floor, harmonic_hint=hint)
            )
        except spectroscopy.FitError:
            skipped += 1
    return pts, skipped


def _model_document(fit, env, config=None, seed=None, extra=None):
    doc = {
        "meta": _meta(config, seed),
        "environment": environment_to_dict(env),
        "fit": {
            "param_names": list(fit.param_names),
            "values": [float(v) for v in fit.values],
            "errors": [float(e) for e in fit.errors],
            "chi_nu": fit.chi_nu,
            "n_points": fit.n_points,
            "warnings": list(fit.warnings),
        },
    }
    if extra:
        doc.update(extra)
    return doc


def cmd_reconstruct(args):
    traces = _load_traces(args.traces)
    pts, skipped = _rate_points(traces, args.n_min, args.w_floor)
    fit = spectroscopy.reconstruct_nsd(
        pts, l_max=args.l_max,
        fixed_nu_l=args.fixed_nu_l_khz,
    )
    nsd = fit.params
    from .model import DEFAULT_GAMMA_C_KHZ_PER_G, EnvironmentModel

    env = EnvironmentModel(
        b_field=nsd.nu_l_khz / DEFAULT_GAMMA_C_KHZ_PER_G, nsd=nsd, nuclei=()
    )
    doc = _model_document(fit, env, extra={"rate_points_used": len(pts), "traces_skipped": skipped})
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _env_from_model_doc(doc, path):
    try:
        return environment_from_dict(doc["environment"])
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad model file {path}: {exc}") from exc


def cmd_nuclei(args):
    from .model import DEFAULT_GAMMA_C_KHZ_PER_G, GaussianNSD

    traces = _load_traces(args.traces)
    nu_l_khz = args.b_field * DEFAULT_GAMMA_C_KHZ_PER_G
    omega_l = khz_to_rad_us(nu_l_khz)
    if args.model:
        env = _env_from_model_doc(_load_json(args.model, "model"), args.model)
        bath_nsd = env.nsd
    else:
        bath_nsd = GaussianNSD(y0=0.0, a=0.0, nu_l_khz=nu_l_khz, sigma_khz=1.0)
    results = []
    for f, trace, _ in traces:
        probe = math.pi / (2.0 * trace.t1)
        guess = NuclearCoupling(
            omega_par=-2.0 * (probe - omega_l), omega_perp=0.05 * omega_l
        )
        fit = spectroscopy.fit_coupling(trace, guess, bath_nsd, omega_l)
        c = fit.params
        results.append(
            {
                "trace": f.name,
                "omega_par_khz": rad_us_to_khz(c.omega_par),
                "omega_perp_khz": rad_us_to_khz(c.omega_perp),
                "errors_khz": [rad_us_to_khz(e) for e in fit.errors],
                "chi_nu": fit.chi_nu,
                "warnings": list(fit.warnings),
            }
        )
    doc = {"meta": _meta(), "couplings": results}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_fit_direct(args):
    traces = [t for _, t, _ in _load_traces(args.traces)]
    doc = _load_json(args.model, "model")
    env = _env_from_model_doc(doc, args.model)
    fit = spectroscopy.fit_nsd_direct(
        traces, env.nuclei, env.nsd.nu_l_khz,
        initial=env.nsd,
    )
    new_env = env.with_nsd(fit.params)
    out_doc = _model_document(fit, new_env, extra={"method": "direct"})
    _emit(json.dumps(out_doc, indent=2) + "\n", args.out)
    return 0


def cmd_validate(args):
    traces = [t for _, t, _ in _load_traces(args.traces)]
    env1 = _env_from_model_doc(_load_json(args.model, "model"), args.model)
    if args.model2:
        env2 = _env_from_model_doc(_load_json(args.model2, "model"), args.model2)
        report = evaluate.regime_report(env1, env2, traces)
        print(evaluate.format_report(report))
    else:
        sim, data = [], []
        for tr in traces:
            for rec in tr.records:
                seq = sequences.equidistant(int(rec.n), tr.t1, family=tr.family)
                sim.append(forward.coherence(seq, env1))
                data.append((rec.p, rec.sigma_p))
        report = {
            "pooled_chi_nu": evaluate.chi_nu_squared(sim, data),
            "n_points": len(sim),
        }
        print(f"pooled chi2_nu = {report['pooled_chi_nu']:.3f} over {report['n_points']} points")
    report["meta"] = _meta()
    if args.report:
        _atomic_write(args.report, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_pipeline(args):
    config = _load_json(args.config, "config")
    try:
        env = environment_from_dict(config["environment"])
        scan = config["scan"]
        harmonics = [int(l) for l in scan["harmonics"]]
        plan = spectroscopy.plan_scan(
            float(scan["nu_l_khz"]), harmonics,
            float(scan["window_khz"]), int(scan["points"]),
        )
        ns = _n_list(config["n_list"])
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad pipeline config: {exc}") from exc
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    shot = config.get("shot_sigma", 0.005)
    fit_cfg = config.get("fit", {})
    n_min = args.n_min if args.n_min is not None else fit_cfg.get("n_min", 8)
    w_floor = fit_cfg.get("w_floor", spectroscopy.W_FLOOR)
    l_max = args.l_max if args.l_max is not None else fit_cfg.get("l_max", 2)
    meta = _meta(config, seed)
    outdir = Path(args.out or "pipeline_out")

    # stage 1: simulate the scan
    trace_blobs = []
    traces = []
    for i, (t1, l) in enumerate(plan):
        trace = forward.decay_dataset(t1, ns, env, shot_sigma=shot, rng_seed=seed + i)
        traces.append((trace, l))
        lines = _meta_lines(meta) + [f"harmonic_hint: {l}"]
        trace_blobs.append((f"scan_{i:03d}.csv", forward.trace_to_csv(trace, comments=lines)))

    # stage 2: reduce and fit
    pts, skipped = [], 0
    for trace, l in traces:
        try:
            pts.append(spectroscopy.trace_rate_point(trace, n_min=n_min, w_floor=w_floor, harmonic_hint=l))
        except spectroscopy.FitError:
            skipped += 1
    try:
        fit = spectroscopy.reconstruct_nsd(pts, l_max=l_max)
    except spectroscopy.FitError as exc:
        raise spectroscopy.FitError(f"reconstruction stage: {exc}") from exc
    nsd = fit.params
    fitted_env = env.with_nsd(nsd)
    model_doc = _model_document(
        fit, fitted_env, config, seed,
        extra={"rate_points_used": len(pts), "traces_skipped": skipped},
    )

    # stage 3: validate the fitted model against the simulated traces
    sim, data = [], []
    for trace, _ in traces:
        for rec in trace.records:
            seq = sequences.equidistant(int(rec.n), trace.t1)
            sim.append(forward.coherence(seq, fitted_env))
            data.append((rec.p, rec.sigma_p))
    report = {
        "meta": meta,
        "pooled_chi_nu": evaluate.chi_nu_squared(sim, data),
        "n_points": len(sim),
    }

    for name, blob in trace_blobs:
        _atomic_write(outdir / "traces" / name, blob)
    _atomic_write(outdir / "model.json", json.dumps(model_doc, indent=2) + "\n")
    _atomic_write(outdir / "report.json", json.dumps(report, indent=2) + "\n")
    print(
        f"pipeline done: {len(trace_blobs)} traces, model.json, report.json in {outdir} "
        f"(pooled chi2_nu = {report['pooled_chi_nu']:.3f})"
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="ddspec", description=__doc__)
    p.add_argument("--version", action="version", version=f"ddspec {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp_sim = sub.add_parser("simulate", help="simulate coherence traces from a config")
    sp_sim.add_argument("--config", required=True)
    sp_sim.add_argument("--out", default=None)
    sp_sim.add_argument("--seed", type=int, default=None)
    sp_sim.add_argument("--threads", type=int, default=1)
    sp_sim.set_defaults(func=cmd_simulate)

    sp_f = sub.add_parser("filter", help="evaluate |Y(omega)|^2 for a sequence")
    sp_f.add_argument("--seq", required=True)
    sp_f.add_argument("--omega-khz", required=True)
    sp_f.add_argument("--out", default=None)
    sp_f.set_defaults(func=cmd_filter)

    sp_o = sub.add_parser("oracle", help="exact vs Magnus bath coherence sweep")
    sp_o.add_argument("--bath", required=True)
    sp_o.add_argument("--seq", required=True)
    sp_o.add_argument("--cycle-times-us", default=None)
    sp_o.add_argument("--out", default=None)
    sp_o.set_defaults(func=cmd_oracle)

    sp_sp = sub.add_parser("scan-plan", help="interpulse spacings for harmonic windows")
    sp_sp.add_argument("--nu-l-khz", type=float, required=True)
    sp_sp.add_argument("--harmonics", required=True)
    sp_sp.add_argument("--window-khz", type=float, default=30.0)
    sp_sp.add_argument("--points", type=int, default=17)
    sp_sp.add_argument("--out", default=None)
    sp_sp.set_defaults(func=cmd_scan_plan)

    sp_r = sub.add_parser("reconstruct", help="Method 1: comb fit of rate points")
    sp_r.add_argument("--traces", required=True)
    sp_r.add_argument("--harmonics", default=None, help="unused hint list (kept for symmetry)")
    sp_r.add_argument("--l-max", type=int, default=2)
    sp_r.add_argument("--n-min", type=int, default=8)
    sp_r.add_argument("--w-floor", type=float, default=spectroscopy.W_FLOOR)
    sp_r.add_argument("--fixed-nu-l-khz", type=float, default=None)
    sp_r.add_argument("--out", default=None)
    sp_r.set_defaults(func=cmd_reconstruct)

    sp_n = sub.add_parser("nuclei", help="refine hyperfine couplings from traces")
    sp_n.add_argument("--traces", required=True)
    sp_n.add_argument("--b-field", type=float, required=True)
    sp_n.add_argument("--model", default=None, help="model.json with the bath NSD")
    sp_n.add_argument("--out", default=None)
    sp_n.set_defaults(func=cmd_nuclei)

    sp_d = sub.add_parser("fit-direct", help="Method 2: direct multi-trace NSD fit")
    sp_d.add_argument("--traces", required=True)
    sp_d.add_argument("--model", required=True)
    sp_d.add_argument("--out", default=None)
    sp_d.set_defaults(func=cmd_fit_direct)

    sp_v = sub.add_parser("validate", help="score model(s) against traces")
    sp_v.add_argument("--model", required=True)
    sp_v.add_argument("--model2", default=None)
    sp_v.add_argument("--traces", required=True)
    sp_v.add_argument("--report", default=None)
    sp_v.set_defaults(func=cmd_validate)

    sp_p = sub.add_parser("pipeline", help="scan-plan > simulate > fit > validate")
    sp_p.add_argument("--config", required=True)
    sp_p.add_argument("--out", default=None)
    sp_p.add_argument("--seed", type=int, default=None)
    sp_p.add_argument("--l-max", type=int, default=None)
    sp_p.add_argument("--n-min", type=int, default=None)
    sp_p.add_argument("--threads", type=int, default=1)
    sp_p.set_defaults(func=cmd_pipeline)

    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"ddspec: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (spectroscopy.FitError, IntegrationError, oracle.ResonanceSingularityError) as exc:
        print(f"ddspec: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except ValueError as exc:
        print(f"ddspec: error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
