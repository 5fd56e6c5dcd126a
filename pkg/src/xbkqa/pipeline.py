"""End-to-end workflow: parse, encode, taper, XBK, quadratise, embed, solve, report.

A run writes a line-delimited JSON record (one line per stage) and a manifest
holding the configuration, its hash and the final report.  Replaying the
manifest's configuration reproduces every reported energy exactly.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .annealer import compare_schedules, make_schedule, ScheduleReport
from .backends import BACKENDS, make_backend
from .embedding import Embedding, chain_stats, find_embedding, best_of
from .fermion import FIXTURES, FermionHamiltonian, encode, fixture_path, hf_state_in_encoding, parse_fermion_file
from .pauli import OperatorSum, expectation, ground_energy_exact, DENSE_QUBIT_CAP
from .polyopt import EXACT_VAR_CAP, PolynomialError, qubo_to_ising, quadratize, spectral_gap
from .tapering import SymmetrySet, find_symmetries, sector_scan, select_sector, taper, taper_state, tapering_report
from .topology import DEFAULT_SIZES, FAMILIES, HardwareGraph, generate_graph
from .xbk import XbkConfig, XbkResult, XbkSector, ground_energy_xbk, xbk_expand

CHEMICAL_ACCURACY = 1.6e-3
PARTIAL_BAND = 10.0
EXIT_CODES = {"success": 0, "partial": 2, "failed": 3}
EXIT_STAGE_ERROR = 4


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def classify(energy: float, reference: float) -> str:
    dev = abs(energy - reference)
    if dev <= CHEMICAL_ACCURACY:
        return "success"
    if dev <= PARTIAL_BAND:
        return "partial"
    return "failed"


# -- configuration ------------------------------------------------------------------

@dataclass
class RunConfig:
    input: str = "h2"
    encoding: str = "parity"
    taper: bool = True
    sector_policy: Any = "hf"
    r: int = 1
    sectors: list[int] | None = None
    backend: str = "exact"
    num_reads: int = 100
    sweeps: int = 200
    beta_range: list[float] | None = None
    beta: float = 10.0
    sweeps_per_us: float = 1.0
    schedule: dict = field(default_factory=lambda: {"kind": "forward"})
    hardware: str | None = None
    hardware_size: int | None = None
    embedding_attempts: int = 1
    chain_strength: float | None = None
    seed: int = 0
    runs: int = 1
    reference: str = "hf"
    lambda_tolerance: float | None = None
    max_lambda_iterations: int = 100
    lambda_init: Any = 0.0
    analysis_lambda: float = 0.0
    analysis_sector: int = 0
    out_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RunConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def config_hash(self) -> str:
        body = {k: v for k, v in self.to_dict().items() if k != "out_dir"}
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()

    def input_path(self) -> Path:
        return fixture_path(self.input) if self.input in FIXTURES else Path(self.input)

    def validate(self) -> None:
        if not self.input_path().is_file():
            raise ConfigError(f"input file {self.input_path()} does not exist")
        if self.encoding not in ("parity", "jordan_wigner"):
            raise ConfigError(f"unknown encoding {self.encoding!r}")
        if int(self.r) < 1:
            raise ConfigError("r must be >= 1")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.hardware is not None and self.hardware not in FAMILIES:
            raise ConfigError(f"unknown hardware family {self.hardware!r}")
        if self.reference not in ("hf", "fci"):
            raise ConfigError("reference must be 'hf' or 'fci'")
        if self.runs < 1 or self.num_reads < 1 or self.embedding_attempts < 1:
            raise ConfigError("runs, num_reads and embedding_attempts must be >= 1")
        if not (self.sector_policy in ("hf", "scan") or isinstance(self.sector_policy, (list, tuple))):
            raise ConfigError("sector_policy must be 'hf', 'scan' or a list of +1/-1 eigenvalues")

    def check_scale(self, m: int) -> None:
        if self.backend == "exact" and self.r * m > EXACT_VAR_CAP:
            raise ConfigError(f"exact backend handles at most {EXACT_VAR_CAP} XBK variables, "
                              f"r*m = {self.r}*{m} = {self.r * m}")

    def xbk_config(self, m: int, e_hf: float | None = None) -> XbkConfig:
        tol = self.lambda_tolerance
        if tol is None:
            tol = 1e-9 if self.backend == "exact" else 1e-4
        lam0 = self.lambda_init
        if lam0 == "hf":
            if e_hf is None:
                raise ConfigError("lambda_init 'hf' needs a Hartree-Fock reference energy")
            lam0 = e_hf
        return XbkConfig(self.r, m, tol, self.max_lambda_iterations, float(lam0))

    def hardware_graph(self) -> HardwareGraph | None:
        if self.hardware is None:
            return None
        return generate_graph(self.hardware, self.hardware_size)

    def backend_for(self, hw: HardwareGraph | None = None):
        if self.backend == "exact":
            return make_backend("exact")
        kw = dict(num_reads=self.num_reads, hardware=hw, embedding_tries=self.embedding_attempts,
                  chain_strength=self.chain_strength)
        if self.backend == "sa":
            kw.update(sweeps=self.sweeps, beta_range=tuple(self.beta_range) if self.beta_range else None)
        else:
            sched = dict(self.schedule)
            kw.update(schedule=make_schedule(sched.pop("kind", "forward"), **sched), beta=self.beta,
                      sweeps_per_us=self.sweeps_per_us)
        return make_backend(self.backend, **kw)


# -- stages -----------------------------------------------------------------------------

@dataclass
class Problem:
    """Everything upstream of XBK for one input file."""

    fermion: FermionHamiltonian
    encoded: OperatorSum
    symmetries: SymmetrySet | None
    hamiltonian: OperatorSum
    e_hf: float | None
    e_fci: float | None

    @property
    def m(self) -> int:
        return self.hamiltonian.n_qubits


class StageLog:
    """Collects per-stage records and wraps failures with the stage name."""

    def __init__(self):
        self.records: list[dict] = []

    def run(self, stage: str, fn: Callable[[], Any], summary: Callable[[Any], dict] | None = None):
        t0 = time.perf_counter()
        try:
            out = fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
        rec = {"stage": stage, "seconds": round(time.perf_counter() - t0, 6)}
        if summary is not None:
            rec["artifact"] = summary(out)
        self.records.append(rec)
        return out


def _sector_values(cfg: RunConfig, h: OperatorSum, s: SymmetrySet, f: FermionHamiltonian):
    if not s.generators:
        return ()
    if isinstance(cfg.sector_policy, (list, tuple)):
        return tuple(int(v) for v in cfg.sector_policy)
    if cfg.sector_policy == "scan" or f.hf_occupation is None:
        return sector_scan(h, s)[0]
    return select_sector(h, s, hf_state_in_encoding(f, cfg.encoding))


def prepare(cfg: RunConfig, log: StageLog | None = None) -> Problem:
    log = log or StageLog()
    f = log.run("parse", lambda: parse_fermion_file(cfg.input_path()),
                lambda f: {"n_modes": f.n_modes, "n_electrons": f.n_electrons, "label": f.label})
    h = log.run("encode", lambda: encode(f, cfg.encoding),
                lambda h: {"encoding": cfg.encoding, "n_qubits": h.n_qubits, "n_terms": len(h)})

    def do_taper():
        if not cfg.taper:
            return None, h
        s = find_symmetries(h)
        s = s.with_assignments(_sector_values(cfg, h, s, f))
        return s, taper(h, s)

    s, ht = log.run("taper", do_taper, lambda out: (
        tapering_report(out[0], h.n_qubits, out[1].n_qubits) if out[0] is not None
        else {"n_qubits_before": h.n_qubits, "n_qubits_after": h.n_qubits, "generators": []}))
    e_hf = f.e_hf
    if e_hf is None and f.hf_occupation is not None:
        e_hf = expectation(h, hf_state_in_encoding(f, cfg.encoding))
    e_fci = f.e_fci
    if e_fci is None and h.n_qubits <= DENSE_QUBIT_CAP:
        e_fci = ground_energy_exact(h)
    return Problem(f, h, s, ht, e_hf, e_fci)


def sector_logical_model(prob: Problem, r: int, p: int = 0, lam: float = 0.0):
    """Quadratised Ising model of sector ``p`` at a fixed ``lambda``."""
    sec = xbk_expand(prob.hamiltonian, XbkConfig(r, prob.m), [p])[0]
    q, qmap = quadratize(sec.objective(lam).to_binary())
    return sec, q, qmap, qubo_to_ising(q)


@dataclass
class EnergyReport:
    energy: float
    converged: bool
    sectors: list[dict]
    reference: str
    reference_energy: float | None
    e_hf: float | None
    e_fci: float | None
    deviation: float | None
    deviation_from_hf: float | None
    classification: str
    qubits: dict
    chain_stats: dict | None = None
    runs: list[dict] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.classification]

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def energies(self) -> list[float]:
        """Every reported energy, in a fixed order, for replay comparisons."""
        out = [self.energy]
        for s in self.sectors:
            out.append(s["lambda_prime"])
        out.extend(r["energy"] for r in self.runs)
        return out


def _solve_once(cfg: RunConfig, prob: Problem, hw: HardwareGraph | None, seed: int) -> tuple[XbkResult, Any]:
    backend = cfg.backend_for(hw)
    xcfg = cfg.xbk_config(prob.m, prob.e_hf)
    res = ground_energy_xbk(prob.hamiltonian, xcfg, backend, cfg.sectors, seed)
    return res, backend


def run_pipeline(cfg: RunConfig, write_record: bool = True) -> EnergyReport:
    """Execute every stage; ``cfg.runs`` independent solves with seeds ``seed + k``."""
    log = StageLog()
    log.run("config", cfg.validate, lambda _: {"config_hash": cfg.config_hash()})
    prob = prepare(cfg, log)
    log.run("xbk", lambda: cfg.check_scale(prob.m), lambda _: {"r": cfg.r, "m": prob.m, "n_xbk_qubits": cfg.r * prob.m})
    _, q, _, logical = log.run(
        "quadratize", lambda: sector_logical_model(prob, cfg.r, cfg.analysis_sector, cfg.analysis_lambda),
        lambda out: {"sector": cfg.analysis_sector, "lambda": cfg.analysis_lambda,
                     "n_logical": out[3].n_vars, "n_couplers": len(out[3].J)})
    hw = log.run("hardware", cfg.hardware_graph, lambda g: g.summary() if g is not None else {})
    emb: Embedding | None = None
    if hw is not None:
        emb = log.run("embed", lambda: find_embedding(logical, hw, seed=cfg.seed, tries=cfg.embedding_attempts,
                                                      chain_strength=cfg.chain_strength),
                      lambda e: chain_stats(e))

    def solve_all():
        out = []
        for k in range(cfg.runs):
            res, backend = _solve_once(cfg, prob, hw, cfg.seed + k)
            out.append((cfg.seed + k, res, backend))
        return out

    solved = log.run("solve", solve_all, lambda out: {"runs": [
        {"seed": s, "energy": r.energy, "best_sector": r.best_sector, "converged": r.converged}
        for s, r, _ in out]})
    report = log.run("report", lambda: _report(cfg, prob, logical, emb, solved), lambda rep: rep.to_json())
    if write_record and cfg.out_dir:
        write_run_record(cfg, log.records, report)
    return report


def _report(cfg: RunConfig, prob: Problem, logical, emb, solved) -> EnergyReport:
    ref = prob.e_hf if cfg.reference == "hf" else prob.e_fci
    runs = []
    flags = []
    for seed, res, backend in solved:
        row = {"seed": seed, "energy": res.energy, "best_sector": res.best_sector, "converged": res.converged}
        if ref is not None:
            row["deviation"] = abs(res.energy - ref)
            row["classification"] = classify(res.energy, ref)
        embs = list(getattr(backend, "embeddings", {}).values())
        if embs:
            row["max_chain_length"] = max(max(e.lengths) for e in embs)
        if getattr(backend, "last_chain_breaks", None) is not None:
            row["chain_break_fraction"] = backend.last_chain_breaks
        if not res.converged:
            flags.append(f"run seed={seed}: lambda iteration did not converge")
        runs.append(row)
    best_seed, best, _ = min(solved, key=lambda t: (t[1].energy, t[0]))
    sectors = [s.to_json() | {"seed": best_seed} for s in best.sectors]
    for s in best.sectors:
        if s.valid and not s.converged:
            flags.append(f"sector p={s.p}: lambda not converged after {s.iterations} iterations")
    cls = classify(best.energy, ref) if ref is not None else "failed"
    if ref is None:
        flags.append(f"no {cfg.reference} reference energy available")
    qubits = {"n_qubits_encoded": prob.encoded.n_qubits, "n_qubits_tapered": prob.m,
              "xbk": cfg.r * prob.m, "logical": logical.n_vars,
              "physical": sum(emb.lengths) if emb is not None else None}
    return EnergyReport(
        energy=best.energy, converged=best.converged, sectors=sectors, reference=cfg.reference,
        reference_energy=ref, e_hf=prob.e_hf, e_fci=prob.e_fci,
        deviation=abs(best.energy - ref) if ref is not None else None,
        deviation_from_hf=abs(best.energy - prob.e_hf) if prob.e_hf is not None else None,
        classification=cls, qubits=qubits, chain_stats=chain_stats(emb) if emb is not None else None,
        runs=runs, flags=flags)


# -- run records ----------------------------------------------------------------------------

def write_run_record(cfg: RunConfig, records: Sequence[dict], report: EnergyReport) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "run.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, default=_json_default) + "\n")
    manifest = {"config": cfg.to_dict(), "config_hash": cfg.config_hash(),
                "seeds": [cfg.seed + k for k in range(cfg.runs)],
                "stages": [r["stage"] for r in records], "files": ["run.jsonl", "manifest.json"],
                "report": report.to_json()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, default=_json_default))
    return out / "manifest.json"


def replay(manifest_path: str | Path) -> tuple[EnergyReport, bool]:
    """Re-run a recorded configuration; report whether every energy matches bit for bit."""
    manifest = json.loads(Path(manifest_path).read_text())
    cfg = RunConfig.from_dict(manifest["config"]).replace(out_dir=None)
    if cfg.config_hash() != manifest["config_hash"]:
        raise ConfigError("manifest configuration does not match its hash")
    report = run_pipeline(cfg, write_record=False)
    old = manifest["report"]
    recorded = [old["energy"], *(s["lambda_prime"] for s in old["sectors"]), *(r["energy"] for r in old["runs"])]
    return report, recorded == report.energies()


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_csv(path: str | Path, rows: Sequence[dict]) -> None:
    keys: list[str] = []
    for row in rows:
        keys.extend(k for k in row if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for row in rows:
            w.writerow({k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in row.items()})


def format_table(rows: Sequence[dict], keys: Sequence[str] | None = None) -> str:
    if not rows:
        return "(empty)"
    if keys is None:
        keys = []
        for row in rows:
            keys.extend(k for k in row if k not in keys)

    def cell(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return "-" if v is None else str(v)

    body = [[cell(r.get(k)) for k in keys] for r in rows]
    widths = [max(len(k), *(len(b[i]) for b in body)) for i, k in enumerate(keys)]
    lines = ["  ".join(k.ljust(w) for k, w in zip(keys, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


# -- reports ------------------------------------------------------------------------------------

def scaling_report(cfg: RunConfig, r_values: Sequence[int], prob: Problem | None = None) -> list[dict]:
    """Qubit counts per r: XBK, logical after quadratisation, best-of-N physical.

    The logical model is sector ``cfg.analysis_sector`` at ``cfg.analysis_lambda``.
    Embedding uses ``cfg.hardware`` (zephyr when unset) with ``cfg.embedding_attempts``
    seeded tries; a failure is recorded in the row.
    """
    if not r_values:
        raise ConfigError("r_values must be non-empty")
    prob = prob or prepare(cfg)
    family = cfg.hardware or "zephyr"
    hw = generate_graph(family, cfg.hardware_size)
    rows = []
    for r in r_values:
        _, _, _, logical = sector_logical_model(prob, r, cfg.analysis_sector, cfg.analysis_lambda)
        row = {"r": r, "m": prob.m, "xbk_qubits": r * prob.m, "logical_qubits": logical.n_vars,
               "logical_per_xbk": logical.n_vars / (r * prob.m), "hardware": f"{family}({hw.size})"}
        try:
            embs = best_of(logical, hw, cfg.embedding_attempts, cfg.seed)
            best = min(embs, key=lambda e: (sum(e.lengths), e.score()))
            st = chain_stats(best)
            row.update(physical_qubits=st["physical_qubit_count"],
                       physical_per_logical=st["physical_qubit_count"] / logical.n_vars,
                       max_chain_length=min(e.score()[0] for e in embs),
                       embeddings_found=len(embs), embedding_error=None)
        except Exception as exc:
            row.update(physical_qubits=None, physical_per_logical=None, max_chain_length=None,
                       embeddings_found=0, embedding_error=str(exc))
        rows.append(row)
    return rows


def gap_report(cfg: RunConfig, r_values: Sequence[int], prob: Problem | None = None) -> list[dict]:
    """Gap between the two lowest objective levels per (r, p) at ``cfg.analysis_lambda``."""
    if not r_values:
        raise ConfigError("r_values must be non-empty")
    prob = prob or prepare(cfg)
    rows = []
    for r in r_values:
        for sec in xbk_expand(prob.hamiltonian, XbkConfig(r, prob.m)):
            obj = sec.objective(cfg.analysis_lambda)
            row = {"r": r, "p": sec.p, "lambda": cfg.analysis_lambda, "n_vars": obj.n_vars}
            try:
                row.update(gap=spectral_gap(obj), available=True, reason=None)
            except PolynomialError as exc:
                row.update(gap=None, available=False, reason=str(exc))
            rows.append(row)
    return rows


def schedule_report(cfg: RunConfig, prob: Problem | None = None, policy: str = "best",
                    num_reads: int | None = None) -> ScheduleReport:
    """Forward, paused and reverse SVMC runs on the sector's quadratised model at its exact ratio."""
    from .xbk import ExactBackend, solve_sector
    prob = prob or prepare(cfg)
    xcfg = XbkConfig(cfg.r, prob.m)
    p = cfg.analysis_sector if cfg.analysis_sector >= 0 else cfg.r // 2
    sec = xbk_expand(prob.hamiltonian, xcfg, [p])[0]
    lam = solve_sector(sec, ExactBackend(), xcfg).lambda_prime
    q, _ = quadratize(sec.objective(lam).to_binary())
    return compare_schedules(qubo_to_ising(q), num_reads=num_reads or cfg.num_reads, seed=cfg.seed,
                             policy=policy, beta=cfg.beta, sweeps_per_us=cfg.sweeps_per_us)
