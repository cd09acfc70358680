"""Command-line front end: ``ga-wqed <subcommand> [options]``.

Configuration comes from an INI file (``--config``) with sections
``[atom]``, ``[schedule]``, ``[packet]``, ``[numerics]`` and ``[sweep]``;
command-line flags override file values.  Dense arrays are written as CSV,
sweep records as JSON lines.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from xml.etree import ElementTree as ET

import numpy as np

from . import darkstate, experiments, protocol, scattering
from .dynamics import ProbeTone, field_snapshot, integrate_beta
from .errors import InvalidConfigurationError, NumericalFailure
from .kernel import build_delay_table
from .laplace import find_poles, wide_window
from .model import AtomLayout, ControlSchedule, total_decay_and_span, uniform_layout

from . import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    return "%.17g" % x


def write_csv(rows, header, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------- configuration

ATOM_KEYS = {"n_legs": int, "tau": float, "pattern": str, "omega": float, "gamma": float,
             "positions": "floats", "weights": "floats"}


def _parse_value(raw: str, kind):
    if kind == "floats":
        return [float(v) for v in raw.replace(";", ",").split(",") if v.strip()]
    if kind is int:
        return int(float(raw))
    return kind(raw)


def load_config(path: str | None) -> dict:
    """Read an INI file into ``{section: {key: str}}``; missing path gives an empty config."""
    cp = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise InvalidConfigurationError(f"config file {path!r} not found")
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise InvalidConfigurationError(f"cannot parse {path!r}: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def parse_layout_spec(spec: str) -> dict:
    """``"N=1,gamma=0.1"`` style shortcut for the ``[atom]`` section."""
    out = {}
    for item in filter(None, (p.strip() for p in spec.split(","))):
        if "=" not in item:
            raise InvalidConfigurationError(f"layout item {item!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        out["n_legs" if k.upper() == "N" else k] = v
    return out


def build_layout(atom: dict) -> AtomLayout:
    try:
        vals = {k: _parse_value(v, ATOM_KEYS[k]) for k, v in atom.items() if k in ATOM_KEYS}
    except ValueError as exc:
        raise InvalidConfigurationError(f"bad [atom] value: {exc}") from exc
    unknown = set(atom) - set(ATOM_KEYS)
    if unknown:
        raise InvalidConfigurationError(f"unknown [atom] keys: {sorted(unknown)}")
    omega = vals.get("omega", 1.0)
    gamma = vals.get("gamma", 0.02)
    if "positions" in vals:
        pos = vals["positions"]
        w = vals.get("weights", [1.0] * len(pos))
        return AtomLayout(omega, gamma, tuple(pos), tuple(w))
    n = vals.get("n_legs", 2)
    tau = vals.get("tau", 2 * math.pi)
    return uniform_layout(n, tau, vals.get("pattern", "uniform"), omega, gamma)


def build_schedule(sec: dict) -> ControlSchedule:
    if not sec:
        return ControlSchedule.always_on()
    get = lambda k: float(sec[k]) if k in sec and sec[k] != "" else None  # noqa: E731
    return ControlSchedule.switched(get("t_on"), get("t_off"), get("omega_on"), get("omega_off"))


def _sweep_values(raw: str) -> list:
    raw = raw.strip()
    if not raw:
        return []
    if ":" in raw:
        a, b, n = raw.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    return [float(v) for v in raw.split(",") if v.strip()]


# ---------------------------------------------------------------- subcommand points

def point_kernel(cfg):
    lay = build_layout(cfg.get("atom", {}))
    table = build_delay_table(lay)
    rows = [(float(d), float(w), 0.5 * lay.gamma_single * float(w)) for d, w in table]
    gtot, span = total_decay_and_span(lay)
    return {"n_delays": len(rows), "gamma_tot": gtot, "span": span}, \
        (("delay", "weight_sum", "rate"), rows)


def point_poles(cfg):
    lay = build_layout(cfg.get("atom", {}))
    num = cfg.get("numerics", {})
    branches = int(num.get("n_branches", 0) or 0)
    window = wide_window(lay, branches) if branches else None
    poles = find_poles(lay, window)
    if len(poles) == 0:
        raise NumericalFailure(poles.diagnostic or "no poles found")
    res = poles.residues
    rows = [(float(s.real), float(s.imag), float(r.real), float(r.imag), int(d))
            for s, r, d in zip(poles.s, res, poles.is_dark)]
    lead = poles.s[0]
    return {"n_poles": len(rows), "leading_re": float(lead.real), "leading_im": float(lead.imag)}, \
        (("re_s", "im_s", "re_residue", "im_residue", "dark"), rows)


def point_evolve(cfg):
    lay = build_layout(cfg.get("atom", {}))
    num = cfg.get("numerics", {})
    sched = build_schedule(cfg.get("schedule", {}))
    t_end = float(num.get("t_end", 100.0))
    dt = float(num["dt"]) if num.get("dt") else None
    drive = ProbeTone(float(num["probe"])) if num.get("probe") else None
    beta0 = 0.0 if drive is not None else 1.0
    tr = integrate_beta(lay, sched, drive, t_end=t_end, dt=dt, beta0=beta0)
    n_out = int(num.get("samples", 1001))
    ts = np.linspace(0.0, tr.t_end, n_out)
    b = tr.beta_at(ts)
    rows = [(float(t), float(v.real), float(v.imag), float(abs(v) ** 2)) for t, v in zip(ts, b)]
    return {"dt": tr.dt, "final_abs2": float(abs(b[-1]) ** 2)}, \
        (("t", "re_beta", "im_beta", "abs2_beta"), rows)


def point_scatter(cfg):
    lay = build_layout(cfg.get("atom", {}))
    num = cfg.get("numerics", {})
    if num.get("time"):
        wd = float(num.get("omega_d", 0.9 * lay.omega))
        t_max = float(num["time"])
        ts = np.linspace(0.0, t_max, int(num.get("samples", 201)))
        rec = scattering.response_record(lay, wd, ts)
        rows = [(float(t), float(r), float(tt)) for t, r, tt in zip(rec.t, rec.R_t, rec.T_t)]
        return {"omega_d": wd, "R_end": float(rec.R_t[-1]), "T_end": float(rec.T_t[-1])}, \
            (("t", "R", "T"), rows)
    if num.get("omega_d") and not num.get("points"):
        wd = np.array([float(num["omega_d"])])
    else:
        lo = float(num.get("omega_min", 0.5 * lay.omega))
        hi = float(num.get("omega_max", 1.5 * lay.omega))
        wd = np.linspace(lo, hi, int(num.get("points", 401)))
    sp = scattering.scatter_spectrum(lay, wd)
    rows = list(zip(*(a.astype(float) for a in (sp.omega_d, sp.R_inf, sp.T_inf,
                                                   sp.delta_L, sp.gamma_eff))))
    summary = {"R_inf": float(sp.R_inf[0]), "T_inf": float(sp.T_inf[0])} if len(wd) == 1 else \
        {"R_max": float(sp.R_inf.max()), "omega_at_R_max": float(wd[int(np.argmax(sp.R_inf))])}
    return summary, (("omega_d", "R", "T", "lamb_shift", "gamma_eff"), rows)


def point_dark(cfg):
    atom = cfg.get("atom", {})
    num = cfg.get("numerics", {})
    n_legs = int(float(atom.get("n_legs", 2)))
    gt = float(num.get("gamma_tau", 0.1))
    pattern = atom.get("pattern", "uniform")
    if num.get("profile"):
        n = int(num["profile"])
        tau = float(atom.get("tau", 1.0))
        prof = darkstate.sample_bound_profile(n_legs, n, gt / tau, tau,
                                              int(num.get("points_per_segment", 400)))
        rows = [(float(x), float(p)) for x, p in zip(prof.x, prof.density)]
        return {"n": n, "I": prof.total}, (("x", "p"), rows)
    rows = []
    for n in range(1, n_legs):
        try:
            ot = darkstate.dark_condition(n_legs, n, gt, pattern)
        except InvalidConfigurationError:
            continue
        amp = darkstate.dark_amplitude(n_legs, n, gt, pattern)
        total = darkstate.bound_total(n_legs, n, gt) if pattern == "uniform" else float("nan")
        rows.append((n, ot, amp, total))
    return {"modes": len(rows)}, (("n", "omega_tau", "A", "I"), rows)


def point_catch(cfg):
    pk = cfg.get("packet", {})
    num = cfg.get("numerics", {})
    packets = int(pk.get("packets", 1))
    dx = float(pk.get("dx_over_lambda0", 5.0))
    k0 = float(pk.get("k0", 1.0))
    gamma_ratio = float(pk.get("gamma_ratio", protocol.DEFAULT_GAMMA_RATIO))
    n_phase = int(pk["n_phase"]) if pk.get("n_phase") and pk.get("auto_optimal") != "1" \
        else protocol.optimal_phase(dx)
    layout = protocol.catch_layout(n_phase, k0, gamma_ratio)
    packet = protocol.catch_packet(layout, dx, packets)
    t_on = abs(0.5 * layout.span - packet.x0)
    t_measure = float(num["t_measure"]) if num.get("t_measure") else None
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        res = protocol.run_catch(layout, packet, t_on=t_on, t_measure=t_measure)
    out = {"P": res.P, "n_phase": n_phase, "n": (n_phase - 1) // 2, "dx": dx,
           "packets": packets,
           "diagnostics": {k: v for k, v in res.diagnostics.items() if k != "window"}}
    rows = []
    if num.get("release_at"):
        rel = protocol.run_release(res, float(num["release_at"]))
        out["release"] = {"left": rel.released_left, "right": rel.released_right,
                          "atom": rel.atom_retained, "trapped_at_release": rel.trapped_at_release}
    if num.get("spacetime"):
        nt, nx = (int(v) for v in num["spacetime"].split("x"))
        traj = res.beta_trace
        ts = np.linspace(0.0, traj.t_end, nt)
        xs = np.linspace(-layout.span, 2 * layout.span, nx)
        for t in ts:
            dens = np.abs(field_snapshot(layout, traj, xs, float(t), free_field=packet).phi) ** 2
            rows.extend((float(t), float(x), float(d)) for x, d in zip(xs, dens))
    return out, (("t", "x", "abs2_phi"), rows) if rows else None


POINTS = {"kernel": point_kernel, "poles": point_poles, "evolve": point_evolve,
          "scatter": point_scatter, "dark": point_dark, "catch": point_catch}


def _apply_sweep_key(cfg: dict, key: str, value) -> dict:
    out = {s: dict(v) for s, v in cfg.items()}
    if "." not in key:
        raise InvalidConfigurationError(f"sweep key {key!r} must be section.key")
    sec, k = key.split(".", 1)
    out.setdefault(sec, {})[k] = fmt(value)
    return out


def _run_point(args):
    sub, cfg, key = args
    try:
        summary, _ = POINTS[sub](cfg)
        return key, "ok", summary
    except Exception as exc:  # isolated per point: recorded, never raised
        return key, "error", {"error": f"{type(exc).__name__}: {exc}"}


def sweep(sub: str, cfg: dict, parallelism: int = 1):
    """Yield ``(key, status, record)`` for the cartesian product of ``[sweep]`` entries.

    Results arrive in completion order; each record carries its parameter tuple.
    """
    spec = cfg.get("sweep", {})
    keys = sorted(spec)
    grids = [_sweep_values(spec[k]) for k in keys]
    base = {s: v for s, v in cfg.items() if s != "sweep"}
    jobs = []
    for combo in itertools.product(*grids) if keys else []:
        c = base
        for k, v in zip(keys, combo):
            c = _apply_sweep_key(c, k, v)
        jobs.append((sub, c, tuple(zip(keys, combo))))
    if parallelism <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield _run_point(job)
        return
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(_run_point, job) for job in jobs]
        for fut in as_completed(futures):
            yield fut.result()


# ---------------------------------------------------------------- argument parsing

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.add_argument("--parallelism", type=int, help="sweep worker count")
    p.add_argument("--dt", type=float, help="integration step")
    p.add_argument("--t-end", type=float, help="integration horizon")
    p.add_argument("--layout", help="atom shortcut such as N=2,tau=6.28,gamma=0.02")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ga-wqed", description="Giant-atom waveguide QED simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("kernel", help="delay table of the memory kernel")
    _common(p)
    p = subs.add_parser("poles", help="poles and residues of the atom amplitude")
    _common(p)
    p.add_argument("--n-branches", type=int, help="use a wide window reaching this many branches")
    p = subs.add_parser("evolve", help="integrate the delayed atom equation")
    _common(p)
    p.add_argument("--probe", type=float, help="drive with a weak probe at this frequency")
    p.add_argument("--samples", type=int)
    p = subs.add_parser("scatter", help="reflection and transmission")
    _common(p)
    p.add_argument("--omega-d", type=float)
    p.add_argument("--omega-min", type=float)
    p.add_argument("--omega-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--time", type=float, help="time-resolved R(t), T(t) up to this time")
    p.add_argument("--samples", type=int)
    p = subs.add_parser("dark", help="dark modes and bound-state profiles")
    _common(p)
    p.add_argument("--gamma-tau", type=float)
    p.add_argument("--profile", type=int, metavar="N_MODE", help="emit (x, p) for this mode")
    p = subs.add_parser("catch", help="catch-and-release protocol")
    _common(p)
    p.add_argument("--packets", type=int, choices=(1, 2))
    p.add_argument("--dx-over-lambda0", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--n-phase", type=int, help="odd Omega tau / pi")
    g.add_argument("--auto-optimal", action="store_true")
    p.add_argument("--gamma-ratio", type=float)
    p.add_argument("--t-measure", type=float)
    p.add_argument("--release-at", type=float)
    p.add_argument("--spacetime", metavar="NTxNX", help="emit a spacetime CSV, e.g. 200x400")
    p = subs.add_parser("repro", help="run reproduction cases")
    _common(p)
    p.add_argument("cases", nargs="*", help=f"case names ({', '.join(experiments.CASES)})")
    p.add_argument("--all", action="store_true")
    p.add_argument("--junit", help="write a JUnit-style XML summary here")
    return parser


def _resolve(args) -> dict:
    cfg = load_config(args.config)
    if args.layout:
        cfg.setdefault("atom", {}).update(parse_layout_spec(args.layout))
    num = cfg.setdefault("numerics", {})
    pk = cfg.setdefault("packet", {})
    flag_map = {"dt": num, "t_end": num, "probe": num, "samples": num, "omega_d": num,
                "omega_min": num, "omega_max": num, "points": num, "time": num,
                "gamma_tau": num, "profile": num, "n_branches": num, "t_measure": num,
                "release_at": num, "spacetime": num, "packets": pk,
                "dx_over_lambda0": pk, "n_phase": pk, "gamma_ratio": pk}
    for name, sec in flag_map.items():
        val = getattr(args, name, None)
        if val is not None:
            sec[name] = val if isinstance(val, str) else fmt(val) if isinstance(val, float) \
                else str(val)
    if getattr(args, "auto_optimal", False):
        pk["auto_optimal"] = "1"
    return cfg


def _parallelism(args, cfg) -> int:
    if args.parallelism is not None:
        return max(1, args.parallelism)
    num = cfg.get("numerics", {})
    if num.get("parallelism"):
        return max(1, int(num["parallelism"]))
    env = os.environ.get("GA_WQED_PARALLELISM")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InvalidConfigurationError(f"GA_WQED_PARALLELISM={env!r} is not an integer") from exc
    return 1


class _Sink:
    """Writes named outputs to a directory, or to stdout when none is given."""

    def __init__(self, out: str | None, stdout):
        self.dir = Path(out) if out else None
        self.stdout = stdout
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        if self.dir:
            with open(self.dir / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            self.stdout.write(text)

    def manifest(self, data: dict):
        if self.dir:
            with open(self.dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
                json.dump(data, fh, indent=2, sort_keys=True, default=str)
                fh.write("\n")


def _run_repro(args, sink, manifest) -> int:
    names = list(experiments.CASES) if args.all else args.cases
    if not names:
        raise InvalidConfigurationError("name at least one case or pass --all")
    for n in names:
        if n not in experiments.CASES:
            raise InvalidConfigurationError(f"unknown case {n!r}")
    reports = []
    lines = io.StringIO()
    for n in names:
        rep = experiments.run_case(n)
        reports.append(rep)
        manifest["points"].append({"case": n, "status": "pass" if rep.passed else "fail"})
        lines.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
        print(rep.summary_line(), file=sys.stderr)
    sink.write("repro.jsonl", lines.getvalue())
    manifest["outputs"].append("repro.jsonl")
    if args.junit:
        suite = ET.Element("testsuite", name="ga-wqed-repro", tests=str(len(reports)),
                           failures=str(sum(not r.passed for r in reports)))
        for r in reports:
            tc = ET.SubElement(suite, "testcase", name=r.name, classname=f"criterion{r.criterion}",
                               time=f"{r.runtime:.3f}")
            if not r.passed:
                ET.SubElement(tc, "failure", message="; ".join(
                    f"{c.name}={c.measured:.6g}" for c in r.failures()))
        ET.ElementTree(suite).write(args.junit, encoding="utf-8", xml_declaration=True)
        manifest["outputs"].append(args.junit)
    return EXIT_OK


def dispatch(argv=None, stdout=None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    stdout = stdout or sys.stdout
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    start = time.time()
    try:
        cfg = _resolve(args)
        sink = _Sink(args.out, stdout)
        manifest = {"subcommand": args.command, "config": cfg, "tool_version": __version__,
                    "outputs": [], "points": [], "started": start}
        sink.manifest(manifest)
        if args.command == "repro":
            code = _run_repro(args, sink, manifest)
        elif cfg.get("sweep"):
            par = _parallelism(args, cfg)
            records = []
            statuses = []
            for key, status, rec in sweep(args.command, cfg, par):
                line = {"key": {k: v for k, v in key}, "status": status, **rec}
                records.append((key, json.dumps(line, sort_keys=True) + "\n"))
                statuses.append(status)
                manifest["points"].append({"key": dict(key), "status": status})
            # completion order varies with the worker count; emit by parameter key
            sink.write("sweep.jsonl", "".join(text for _, text in sorted(records)))
            manifest["outputs"].append("sweep.jsonl")
            code = EXIT_NUMERIC if statuses and all(s != "ok" for s in statuses) else EXIT_OK
        else:
            summary, table = POINTS[args.command](cfg)
            if table is not None and table[1]:
                buf = io.StringIO()
                write_csv(table[1], table[0], buf)
                sink.write(f"{args.command}.csv", buf.getvalue())
                manifest["outputs"].append(f"{args.command}.csv")
                if sink.dir:
                    sink.write("summary.json", json.dumps(summary, sort_keys=True) + "\n")
            else:
                sink.write(f"{args.command}.jsonl", json.dumps(summary, sort_keys=True) + "\n")
                manifest["outputs"].append(f"{args.command}.jsonl")
            code = EXIT_OK
    except InvalidConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest["wall_clock"] = time.time() - start
    sink.manifest(manifest)
    return code


def main(argv=None) -> int:
    code = dispatch(argv)
    sys.exit(code)


if __name__ == "__main__":
    main()
