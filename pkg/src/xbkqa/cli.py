"""Command-line interface.

    xbkqa [--config run.json] [--seed N] [--out-dir DIR] <subcommand> [options]

Exit codes: 0 success, 2 partial, 3 failed, 4 stage or usage error.  Commands
without an energy classification exit 0 when they complete.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .annealer import METHODS, make_schedule, write_schedule_json
from .embedding import best_of, chain_stats, write_embedding_json, write_stats_csv
from .pauli import write_pauli_file
from .pipeline import (EXIT_STAGE_ERROR, ConfigError, RunConfig, StageError, format_table, gap_report, prepare,
                       run_pipeline, scaling_report, schedule_report, sector_logical_model, write_csv)
from .polyopt import write_ising_json, write_qubo_file
from .tapering import tapering_report
from .topology import generate_graph
from .xbk import XbkConfig, xbk_expand

COMMANDS = ("encode", "taper", "xbk", "quadratize", "embed", "solve", "pipeline", "scaling", "gaps", "schedules")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_STAGE_ERROR)


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run options (override --config)")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON run configuration")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--out-dir", default=argparse.SUPPRESS)
    g.add_argument("--input", default=argparse.SUPPRESS, help="fermion file or fixture name (h2, h2o)")
    g.add_argument("--encoding", choices=("parity", "jordan_wigner"), default=argparse.SUPPRESS)
    g.add_argument("--no-taper", dest="taper", action="store_false", default=argparse.SUPPRESS)
    g.add_argument("--sector-policy", default=argparse.SUPPRESS, help="hf, scan or comma-separated +1/-1 list")
    g.add_argument("-r", "--r", type=int, default=argparse.SUPPRESS)
    g.add_argument("--sectors", type=_int_list, default=argparse.SUPPRESS)
    g.add_argument("--backend", choices=("exact", "sa", "svmc"), default=argparse.SUPPRESS)
    g.add_argument("--num-reads", type=int, default=argparse.SUPPRESS)
    g.add_argument("--sweeps", type=int, default=argparse.SUPPRESS)
    g.add_argument("--runs", type=int, default=argparse.SUPPRESS)
    g.add_argument("--hardware", choices=("chimera", "pegasus", "zephyr"), default=argparse.SUPPRESS)
    g.add_argument("--hardware-size", type=int, default=argparse.SUPPRESS)
    g.add_argument("--embedding-attempts", type=int, default=argparse.SUPPRESS)
    g.add_argument("--chain-strength", type=float, default=argparse.SUPPRESS)
    g.add_argument("--reference", choices=("hf", "fci"), default=argparse.SUPPRESS)
    g.add_argument("--analysis-sector", type=int, default=argparse.SUPPRESS)
    g.add_argument("--analysis-lambda", type=float, default=argparse.SUPPRESS)

    parser = _Parser(prog="xbkqa", description="XBK quantum-annealing chemistry toolkit", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "encode": "encode a fermion Hamiltonian as a Pauli sum",
        "taper": "remove symmetry qubits and write the tapered Hamiltonian",
        "xbk": "dump the XBK sector polynomials",
        "quadratize": "write each sector as a QUBO file and Ising JSON",
        "embed": "embed a sector's logical graph on a hardware graph",
        "solve": "estimate the ground energy, one row per run",
        "pipeline": "run every stage and write a run record",
        "scaling": "XBK, logical and physical qubit counts per r",
        "gaps": "objective gap per r and sector",
        "schedules": "compare forward, paused and reverse anneals",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name in ("scaling", "gaps"):
            p.add_argument("--r-values", type=_int_list, default=[1, 2, 3])
        if name == "schedules":
            p.add_argument("--policy", choices=("best", "per-sample"), default="best")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.from_json_file(args.config) if getattr(args, "config", None) else RunConfig()
    keys = {"seed", "out_dir", "input", "encoding", "taper", "r", "sectors", "backend", "num_reads", "sweeps",
            "runs", "hardware", "hardware_size", "embedding_attempts", "chain_strength", "reference",
            "analysis_sector", "analysis_lambda"}
    over = {k: v for k, v in vars(args).items() if k in keys}
    if hasattr(args, "sector_policy"):
        sp = args.sector_policy
        over["sector_policy"] = sp if sp in ("hf", "scan") else _int_list(sp)
    return cfg.replace(**over)


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=1))


def cmd_encode(cfg: RunConfig, args) -> int:
    prob = prepare(cfg.replace(taper=False))
    path = _out(cfg) / "hamiltonian.pauli"
    write_pauli_file(prob.encoded, path)
    print(f"{cfg.encoding}: {prob.encoded.n_qubits} qubits, {len(prob.encoded)} terms -> {path}")
    return 0


def cmd_taper(cfg: RunConfig, args) -> int:
    prob = prepare(cfg.replace(taper=True))
    out = _out(cfg)
    write_pauli_file(prob.hamiltonian, out / "tapered.pauli")
    rep = tapering_report(prob.symmetries, prob.encoded.n_qubits, prob.m)
    _dump(out / "tapering.json", rep)
    print(f"{rep['n_qubits_before']} -> {rep['n_qubits_after']} qubits; generators {rep['generators']}")
    return 0


def cmd_xbk(cfg: RunConfig, args) -> int:
    prob = prepare(cfg)
    sectors = xbk_expand(prob.hamiltonian, XbkConfig(cfg.r, prob.m), cfg.sectors)
    _dump(_out(cfg) / "sectors.json", [s.to_json() for s in sectors])
    for s in sectors:
        print(f"p={s.p} signs={list(s.sign_vector)} H' terms={len(s.h_prime)} C terms={len(s.c_p)}")
    return 0


def cmd_quadratize(cfg: RunConfig, args) -> int:
    prob = prepare(cfg)
    out = _out(cfg)
    rows = []
    for sec in xbk_expand(prob.hamiltonian, XbkConfig(cfg.r, prob.m), cfg.sectors):
        _, q, qmap, ising = sector_logical_model(prob, cfg.r, sec.p, cfg.analysis_lambda)
        write_qubo_file(q, out / f"sector_p{sec.p}.qubo")
        write_ising_json(ising, out / f"sector_p{sec.p}.ising.json")
        _dump(out / f"sector_p{sec.p}.ancillas.json", qmap.to_json())
        rows.append({"p": sec.p, "xbk_vars": qmap.n_original, "ancillas": qmap.n_ancillas,
                     "logical_vars": ising.n_vars, "couplers": len(ising.J)})
    print(format_table(rows))
    return 0


def cmd_embed(cfg: RunConfig, args) -> int:
    prob = prepare(cfg)
    _, _, _, logical = sector_logical_model(prob, cfg.r, cfg.analysis_sector, cfg.analysis_lambda)
    hw = generate_graph(cfg.hardware or "zephyr", cfg.hardware_size)
    embs = best_of(logical, hw, cfg.embedding_attempts, cfg.seed)
    out = _out(cfg)
    rows = [{"label": f"r{cfg.r}_p{cfg.analysis_sector}", "family": hw.family, "size": hw.size,
             "seed": e.seed, **chain_stats(e)} for e in embs]
    write_stats_csv(rows, out / "embedding_stats.csv")
    best = min(embs, key=lambda e: e.score())
    write_embedding_json(best, out / "embedding.json")
    st = chain_stats(best)
    print(f"{len(embs)}/{cfg.embedding_attempts} embeddings on {hw.family}({hw.size}); best max chain "
          f"{st['max_length']}, {st['physical_qubit_count']} physical qubits"
          + ("; chains at or above the reliability threshold" if st["unreliable"] else ""))
    return 0


def cmd_solve(cfg: RunConfig, args) -> int:
    report = run_pipeline(cfg, write_record=False)
    out = _out(cfg)
    _dump(out / "report.json", report.to_json())
    write_csv(out / "runs.csv", report.runs)
    _print_report(report)
    return report.exit_code


def cmd_pipeline(cfg: RunConfig, args) -> int:
    cfg = cfg.replace(out_dir=str(_out(cfg)))
    report = run_pipeline(cfg, write_record=True)
    _print_report(report)
    print(f"run record: {Path(cfg.out_dir) / 'manifest.json'}")
    return report.exit_code


def _print_report(report) -> None:
    for s in report.sectors:
        flag = "" if s["converged"] else "  (not converged)"
        print(f"sector p={s['p']}: lambda' = {s['lambda_prime']:.10f}{flag}")
    print(f"energy {report.energy:.10f} Ha; reference ({report.reference}) "
          f"{report.reference_energy}; deviation {report.deviation}; {report.classification}")
    for f in report.flags:
        print(f"warning: {f}")


def cmd_scaling(cfg: RunConfig, args) -> int:
    rows = scaling_report(cfg, args.r_values)
    write_csv(_out(cfg) / "scaling.csv", rows)
    print(format_table(rows, ["r", "xbk_qubits", "logical_qubits", "physical_qubits", "logical_per_xbk",
                              "physical_per_logical", "max_chain_length"]))
    return 0


def cmd_gaps(cfg: RunConfig, args) -> int:
    rows = gap_report(cfg, args.r_values)
    write_csv(_out(cfg) / "gaps.csv", rows)
    print(format_table(rows, ["r", "p", "lambda", "gap", "available"]))
    return 0


def cmd_schedules(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    for kind in ("forward", "paused", "reverse"):
        write_schedule_json(make_schedule(kind), out / f"schedule_{kind}.json")
    rep = schedule_report(cfg, policy=args.policy)
    write_csv(out / "schedule_comparison.csv", rep.rows())
    per_run = []
    for i in range(rep.sample_sets["forward"].num_reads):
        row = {"run": i, **{k: float(rep.sample_sets[k].energies[i]) for k in METHODS}}
        low = min(row[k] for k in METHODS)
        row["winner"] = next(k for k in METHODS if row[k] <= low + 1e-9)
        per_run.append(row)
    write_csv(out / "schedule_runs.csv", per_run)
    imp = []
    for k in ("reverse_from_forward", "reverse_from_paused"):
        ss = rep.sample_sets[k]
        imp += [{"method": k, "read": i, "initial_energy": float(ss.initial_energies[i]),
                 "final_energy": float(ss.raw_energies[i]),
                 "change": float(ss.raw_energies[i] - ss.initial_energies[i])} for i in range(ss.num_reads)]
    write_csv(out / "reverse_improvement.csv", imp)
    for k, ss in rep.sample_sets.items():
        ss.write_jsonl(out / f"samples_{k}.jsonl")
    print(format_table(rep.rows()))
    return 0


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        return HANDLERS[args.command](cfg, args)
    except (StageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_ERROR
    except Exception as exc:  # any other failure is still a stage error for the caller
        print(f"error: [{args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
