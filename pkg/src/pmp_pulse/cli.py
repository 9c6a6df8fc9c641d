"""Command-line entry point: pmp-pulse <command> [options].

Exit codes: 0 success, 2 optimization failure, 3 verification failure, 4 config error.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import abnormal, grape
from .cases import CASES, get_case
from .errors import OptimizationFailed, PMPError, RecordError, Stalled
from .extremals import phase_nodes, verify_pmp
from .io import RunConfig, gnuplot_script, write_csv
from .optimize import PARAM_NAMES, scan_crossings, synthesize, write_trace_csv
from .propagator import blockade_reduction_error, propagate_piecewise
from .records import load_record
from .targets import target_from_dict

EXIT_OK, EXIT_OPT, EXIT_VERIFY, EXIT_CONFIG = 0, 2, 3, 4

log = logging.getLogger("pmp_pulse")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parse_range(text):
    lo, _, hi = text.partition("-")
    return (int(lo), int(hi or lo))


def _add_common(p, target=True):
    p.add_argument("--config", help="JSON RunConfig; command-line options override it")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--dt", type=float, help="time step (default 1e-3)")
    p.add_argument("--gnuplot", action="store_true", help="also write gnuplot scripts next to the CSVs")
    if target:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--case", choices=sorted(CASES))
        g.add_argument("--target", help="JSON file with a custom target description")
        p.add_argument("--crossings", type=int)
        p.add_argument("--sign", type=int, choices=(1, -1))
        p.add_argument("--record", help="reuse a saved record instead of synthesizing")


def build_parser():
    parser = _Parser(prog="pmp-pulse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synthesize", help="optimize a normal extremal for a target")
    _add_common(p)

    p = sub.add_parser("grape", help="GRAPE at the semi-analytic duration")
    _add_common(p)
    p.add_argument("--segments", type=int)

    p = sub.add_parser("compare", help="semi-analytic pulse vs GRAPE after gauge alignment")
    _add_common(p)
    p.add_argument("--segments", type=int)
    p.add_argument("--tol", type=float, default=0.05, help="L-inf tolerance in rad (exit 3 above it)")

    p = sub.add_parser("verify", help="check the PMP relations on a record")
    p.add_argument("record")

    p = sub.add_parser("abnormal", help="enumerate constant-detuning candidates")
    _add_common(p, target=False)
    p.add_argument("--lmax", type=int)

    p = sub.add_parser("blockade", help="replay a pulse on the 9-level two-atom model")
    _add_common(p)
    p.add_argument("--B", type=float, action="append", help="blockade shift; repeatable")

    p = sub.add_parser("bloch-export", help="Bloch-sphere trajectories of each TLS")
    _add_common(p)

    p = sub.add_parser("scan", help="scan the number of zero crossings")
    _add_common(p)
    p.add_argument("--range", dest="crossings_range", type=_parse_range, help="e.g. 1-6")
    p.add_argument("--both-signs", action="store_true")
    return parser


def _config(args):
    try:
        cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
        over = {}
        for key in ("out", "dt", "case", "crossings", "sign", "segments", "crossings_range"):
            val = getattr(args, key, None)
            if val is not None:
                over[key] = val
        if getattr(args, "lmax", None) is not None:
            over["l_max"] = args.lmax
        if getattr(args, "B", None):
            over["B"] = tuple(args.B)
        if getattr(args, "both_signs", False):
            over["sign"] = 0
        if getattr(args, "target", None):
            with open(args.target) as fh:
                over["target"] = json.load(fh)
            over["case"] = None
        d = cfg.to_dict()
        d.update(over)
        return RunConfig.from_dict(d)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _problem(cfg):
    """(tag, target, crossings, sign) from a case name or a custom target."""
    if cfg.case is not None:
        case = get_case(cfg.case)
        return case.name, case.target, cfg.crossings or case.crossings, cfg.sign or case.sign
    if cfg.target is None:
        raise ConfigError("give --case or --target")
    try:
        target = target_from_dict(cfg.target)
    except (PMPError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"target: {exc}") from None
    return "custom", target, cfg.crossings, cfg.sign or 1


def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _synthesize(cfg, chash, write=True):
    tag, target, crossings, sign = _problem(cfg)
    if crossings is None:
        lo, hi = cfg.crossings_range
        per, best = scan_crossings(target, range(lo, hi + 1), (1, -1) if cfg.sign == 0 else (sign,), dt=cfg.dt)
        if best is None:
            raise OptimizationFailed(f"no crossing count in {lo}-{hi} reaches the fidelity threshold")
        crossings, sign = best.crossings, best.sign
    res = synthesize(target, crossings=crossings, sign=sign, dt=cfg.dt, grid=cfg.grid, case=tag)
    rec = res.record
    rec.config_hash = chash
    if write:
        out = _outdir(cfg)
        rec.save(os.path.join(out, f"{tag}_record.json"))
        p = rec.pulse
        write_csv(os.path.join(out, f"{tag}_pulse.csv"), ["t", "phi"], zip(p.midpoints, p.phi), chash)
        c = rec.curve
        nodes = phase_nodes(c, rec.phi0)
        write_csv(os.path.join(out, f"{tag}_detuning.csv"), ["t", "delta", "ddelta", "phi"],
                  zip(c.times, c.delta, c.ddelta, nodes), chash)
        lo, hi = rec.potential.real_roots()[[0, -1]] if rec.potential.real_roots().size else (-2.0, 2.0)
        span = hi - lo
        grid = np.linspace(lo - 0.25 * span, hi + 0.25 * span, 401)
        write_csv(os.path.join(out, f"{tag}_potential.csv"), ["delta", "V"], zip(grid, rec.potential(grid)), chash)
        names = PARAM_NAMES[rec.parametrization]
        trace = res.trace_rows(target, crossings, sign, cfg.dt, rec.parametrization)
        write_trace_csv(os.path.join(out, f"{tag}_trace.csv"), trace, len(names), f"config_hash={chash}")
    return tag, rec


def _record(cfg, args, chash):
    if getattr(args, "record", None):
        rec = load_record(args.record)
        return rec.case or "record", rec
    return _synthesize(cfg, chash, write=False)


def _gnuplot(cfg, name, xcol, ycols, title):
    path = os.path.join(cfg.out, name)
    with open(os.path.splitext(path)[0] + ".gp", "w") as fh:
        fh.write(gnuplot_script(name, xcol, ycols, title))


def cmd_synthesize(args, cfg):
    chash = cfg.hash_for("synthesize")
    tag, rec = _synthesize(cfg, chash)
    if args.gnuplot:
        _gnuplot(cfg, f"{tag}_pulse.csv", 1, [2], "phase")
        _gnuplot(cfg, f"{tag}_detuning.csv", 1, [2], "detuning")
        _gnuplot(cfg, f"{tag}_potential.csv", 1, [2], "potential")
    print(rec.summary())
    return EXIT_OK


def _grape(cfg, args, chash):
    tag, rec = _record(cfg, args, chash)
    gcfg = grape.GrapeConfig(T=rec.T, segments=cfg.segments, seed=cfg.seed)
    return tag, rec, grape.grape_optimize(gcfg, rec.target)


def cmd_grape(args, cfg):
    chash = cfg.hash_for("grape")
    tag, rec, res = _grape(cfg, args, chash)
    out = _outdir(cfg)
    p = res.pulse
    write_csv(os.path.join(out, f"{tag}_grape_pulse.csv"), ["t", "phi"], zip(p.midpoints, p.phi), chash)
    if args.gnuplot:
        _gnuplot(cfg, f"{tag}_grape_pulse.csv", 1, [2], "GRAPE phase")
    print(f"case={tag}, T={rec.T:.6f}, segments={cfg.segments}, fidelity={res.fidelity:.9f}, iterations={res.n_iter}")
    return EXIT_OK if res.fidelity >= 0.999 else EXIT_OPT


def cmd_compare(args, cfg):
    chash = cfg.hash_for("compare")
    tag, rec, res = _grape(cfg, args, chash)
    al = grape.compare_pulses(rec.pulse, res.pulse)
    out = _outdir(cfg)
    write_csv(os.path.join(out, f"{tag}_overlay.csv"), ["t", "semi", "grape_aligned"],
              zip(al.times, al.semi, al.grape_aligned), chash)
    if args.gnuplot:
        _gnuplot(cfg, f"{tag}_overlay.csv", 1, [2, 3], "semi-analytic vs GRAPE")
    print(f"case={tag}, grape_fidelity={res.fidelity:.9f}, linf={al.linf:.6f}, l2={al.l2:.6f}, "
          f"offset={al.offset:.6f}, variant={al.variant}")
    if res.fidelity < 0.999:
        return EXIT_OPT
    return EXIT_OK if al.linf <= args.tol else EXIT_VERIFY


def cmd_verify(args, cfg):
    rec = load_record(args.record, require_potential=True)
    if rec.curve is None:
        raise RecordError("missing detuning samples", path="delta")
    rep = verify_pmp(rec)
    print(rep.table())
    if not rep.passed:
        print("FAILED: " + ", ".join(rep.failures))
        return EXIT_VERIFY
    return EXIT_OK


def cmd_abnormal(args, cfg):
    chash = cfg.hash_for("abnormal")
    cands = abnormal.abnormal_case2_scan(cfg.l_max)
    out = _outdir(cfg)
    abnormal.write_candidates_csv(os.path.join(out, "abnormal_candidates.csv"), cands, f"config_hash={chash}")
    print(f"{'l':>3} {'l_prime':>7} {'delta':>10} {'T':>10} {'closure':>12} gate")
    for c in cands[:10]:
        print(f"{c.l:>3} {c.l_prime:>7} {c.delta:>10.6f} {c.T:>10.6f} {c.closure:>12.10f} {int(c.gate_phase_achieved)}")
    print(f"candidates={len(cands)}, min_T={cands[0].T:.6f}, bound={abnormal.LOWER_BOUND:.6f}")
    return EXIT_OK


def cmd_blockade(args, cfg):
    chash = cfg.hash_for("blockade")
    tag, rec = _record(cfg, args, chash)
    rows = []
    for B in cfg.B:
        rep = blockade_reduction_error(rec.pulse, B)
        rows.append((B, rep.infidelity[1], rep.infidelity[2], rep.double_excitation))
        print(f"B={B:g}, infidelity_k1={rep.infidelity[1]:.3e}, infidelity_k2={rep.infidelity[2]:.3e}, "
              f"double_excitation={rep.double_excitation:.3e}")
    write_csv(os.path.join(_outdir(cfg), f"{tag}_blockade.csv"),
              ["B", "infidelity_k1", "infidelity_k2", "double_excitation"], rows, chash)
    return EXIT_OK


def cmd_bloch_export(args, cfg):
    chash = cfg.hash_for("bloch-export")
    tag, rec = _record(cfg, args, chash)
    out = _outdir(cfg)
    for k in range(1, rec.target.n_tls + 1):
        tr = propagate_piecewise(rec.pulse, k)
        xyz = tr.bloch()
        name = f"{tag}_bloch_k{k}.csv"
        write_csv(os.path.join(out, name), ["t", "x", "y", "z"],
                  ((t, *v) for t, v in zip(tr.times, xyz)), chash)
        if args.gnuplot:
            path = os.path.join(out, f"{tag}_bloch_k{k}.gp")
            with open(path, "w") as fh:
                fh.write("set datafile separator ','\nset view equal xyz\n"
                         f"splot '{name}' using 2:3:4 with lines title 'k={k}'\npause -1\n")
    print(f"case={tag}, wrote Bloch trajectories for k=1..{rec.target.n_tls}")
    return EXIT_OK


def cmd_scan(args, cfg):
    chash = cfg.hash_for("scan")
    tag, target, _, sign = _problem(cfg)
    lo, hi = cfg.crossings_range
    signs = (1, -1) if cfg.sign == 0 else (sign,)
    per, best = scan_crossings(target, range(lo, hi + 1), signs, dt=cfg.dt, grid=cfg.grid)
    rows = []
    for n in range(lo, hi + 1):
        if n in per:
            r = per[n]
            rows.append((n, r.sign, r.T, r.fidelity))
            print(f"crossings={n}, sign={r.sign:+d}, T={r.T:.6f}, fidelity={r.fidelity:.9f}")
        else:
            print(f"crossings={n}, no passing record")
    write_csv(os.path.join(_outdir(cfg), f"{tag}_scan.csv"), ["crossings", "sign", "T", "fidelity"], rows, chash)
    if best is None:
        print("no passing record")
        return EXIT_OPT
    print(f"best: crossings={best.crossings}, sign={best.sign:+d}, T={best.T:.6f}")
    return EXIT_OK


COMMANDS = {
    "synthesize": cmd_synthesize,
    "grape": cmd_grape,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "abnormal": cmd_abnormal,
    "blockade": cmd_blockade,
    "bloch-export": cmd_bloch_export,
    "scan": cmd_scan,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RecordError as exc:
        print(f"record error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except (OptimizationFailed, Stalled) as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_OPT


if __name__ == "__main__":
    sys.exit(main())
