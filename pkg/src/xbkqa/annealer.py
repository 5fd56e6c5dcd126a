"""Classical annealing samplers: spin-vector Monte Carlo and simulated annealing.

Spin-vector Monte Carlo (SVMC) gives every variable a planar angle ``theta``
and samples the effective energy

    E(theta, s) = -A(s) sum_i sin(theta_i) + B(s) E_ising(cos(theta))

with Metropolis moves at fixed inverse temperature while ``s`` follows a
piecewise-linear schedule.  Final angles are projected to ``sign(cos theta)``.
One Monte Carlo sweep is taken per microsecond of schedule time by default.

All reads are advanced together as rows of one array, drawing from a single
seeded generator, so a (model, schedule, seed) triple fixes every read.
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .polyopt import IsingModel

KINDS = ("forward", "paused", "reverse")


class ScheduleError(ValueError):
    pass


class SamplerError(ValueError):
    pass


# -- schedules ---------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear ``s(t)`` given as ``(time_us, s)`` points."""

    points: tuple[tuple[float, float], ...]
    kind: str = "forward"
    name: str = ""

    def __post_init__(self):
        pts = tuple((float(t), float(s)) for t, s in self.points)
        object.__setattr__(self, "points", pts)
        if not self.name:
            object.__setattr__(self, "name", self.kind)
        if self.kind not in KINDS:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if len(pts) < 2:
            raise ScheduleError("a schedule needs at least two points")
        ts = [t for t, _ in pts]
        if ts[0] < 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ScheduleError("schedule times must start at >= 0 and strictly increase")
        if any(not 0.0 <= s <= 1.0 for _, s in pts):
            raise ScheduleError("schedule s values must lie in [0, 1]")
        first, last = pts[0][1], pts[-1][1]
        if last != 1.0:
            raise ScheduleError("schedules must end at s = 1")
        if self.kind == "reverse" and first != 1.0:
            raise ScheduleError("reverse schedules start at s = 1")
        if self.kind != "reverse" and first != 0.0:
            raise ScheduleError(f"{self.kind} schedules start at s = 0")

    @property
    def duration(self) -> float:
        return self.points[-1][0] - self.points[0][0]

    def s_at(self, t) -> np.ndarray:
        ts, ss = zip(*self.points)
        return np.interp(t, ts, ss)

    def steps(self, sweeps_per_us: float = 1.0) -> np.ndarray:
        """``s`` at the midpoint of each sweep."""
        n = max(1, int(round(self.duration * sweeps_per_us)))
        t0 = self.points[0][0]
        return self.s_at(t0 + (np.arange(n) + 0.5) * self.duration / n)

    def to_json(self) -> list[list[float]]:
        return [[t, s] for t, s in self.points]

    @classmethod
    def from_json(cls, data, kind: str | None = None, name: str = "") -> "Schedule":
        if isinstance(data, Mapping):
            return cls(tuple(map(tuple, data["points"])), data.get("kind", kind or "forward"),
                       data.get("name", name))
        pts = tuple(tuple(p) for p in data)
        if kind is None:
            kind = "reverse" if pts and pts[0][1] == 1.0 else "forward"
        return cls(pts, kind, name)


def make_schedule(kind: str, **params) -> Schedule:
    """Preset schedules.

    forward: ``anneal_time`` (100).  paused: ``pause_start`` (80), ``pause_s``
    (0.5), ``pause_duration`` (100), ``ramp_time`` (20).  reverse: ``dip_s``
    (0.3), ``dip_time`` (2), ``hold_s`` (0.5), ``hold_time`` (150),
    ``quench_time`` (2).
    """
    def get(key, default):
        v = float(params.pop(key, default))
        if not math.isfinite(v):
            raise ScheduleError(f"{key} must be finite")
        return v

    name = params.pop("name", "")
    if kind == "forward":
        T = get("anneal_time", 100.0)
        pts = [(0.0, 0.0), (T, 1.0)]
    elif kind == "paused":
        t0, sp = get("pause_start", 80.0), get("pause_s", 0.5)
        dur, ramp = get("pause_duration", 100.0), get("ramp_time", 20.0)
        pts = [(0.0, 0.0), (t0, sp), (t0 + dur, sp), (t0 + dur + ramp, 1.0)]
    elif kind == "reverse":
        sd, td = get("dip_s", 0.3), get("dip_time", 2.0)
        sh, th, tq = get("hold_s", 0.5), get("hold_time", 150.0), get("quench_time", 2.0)
        pts = [(0.0, 1.0), (td, sd), (td + th, sh), (td + th + tq, 1.0)]
    else:
        raise ScheduleError(f"unknown schedule kind {kind!r}; expected one of {KINDS}")
    if params:
        raise ScheduleError(f"unknown {kind} schedule parameters: {sorted(params)}")
    return Schedule(tuple(pts), kind, name)


def write_schedule_json(sched: Schedule, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sched.to_json()))


def read_schedule_json(path: str | Path, kind: str | None = None) -> Schedule:
    return Schedule.from_json(json.loads(Path(path).read_text()), kind)


@dataclass(frozen=True)
class AnnealingCurves:
    """Driver and problem weights ``A(s)``, ``B(s)``; linear unless tabulated."""

    s: tuple[float, ...] = (0.0, 1.0)
    a: tuple[float, ...] = (1.0, 0.0)
    b: tuple[float, ...] = (0.0, 1.0)

    def __call__(self, s) -> tuple[np.ndarray, np.ndarray]:
        return np.interp(s, self.s, self.a), np.interp(s, self.s, self.b)

    @classmethod
    def from_csv(cls, path: str | Path) -> "AnnealingCurves":
        """Two columns ``A, B`` sampled on an even ``s`` grid from 0 to 1."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if rows:
                        raise SamplerError(f"bad annealing curve row {row!r}") from None
        if len(rows) < 2:
            raise SamplerError("annealing curve file needs at least two rows")
        grid = np.linspace(0.0, 1.0, len(rows))
        a, b = zip(*rows)
        return cls(tuple(grid), tuple(a), tuple(b))


LINEAR = AnnealingCurves()


# -- sample sets --------------------------------------------------------------------

@dataclass
class SampleSet:
    """Reads from one sampler call.

    ``initial_energies`` is set for reverse anneals; ``raw_energies`` then holds
    the energy of each read's final state before the best-so-far rule.
    """

    states: np.ndarray
    energies: np.ndarray
    schedule_id: str
    seed: int | None
    timing: dict = field(default_factory=dict)
    initial_energies: np.ndarray | None = None
    raw_energies: np.ndarray | None = None

    @property
    def num_reads(self) -> int:
        return len(self.energies)

    def best(self) -> tuple[float, np.ndarray]:
        i = int(np.argmin(self.energies))
        return float(self.energies[i]), self.states[i]

    def order(self) -> np.ndarray:
        """Read indices by energy then by state, for reproducible ranking."""
        keys = [tuple(s) for s in self.states]
        return np.array(sorted(range(self.num_reads), key=lambda i: (self.energies[i], keys[i])), dtype=int)

    def verify(self, model: IsingModel, tol: float = 1e-9) -> bool:
        return bool(np.allclose(model.energies(self.states), self.energies, atol=tol, rtol=0))

    def improvement_fraction(self, tol: float = 1e-9) -> float | None:
        """Share of reverse reads whose final state is no worse than their start."""
        if self.initial_energies is None or self.raw_energies is None:
            return None
        return float(np.mean(self.raw_energies <= self.initial_energies + tol))

    def records(self) -> Iterable[dict]:
        for i in range(self.num_reads):
            rec = {"read": i, "assignment": [int(v) for v in self.states[i]],
                   "energy": float(self.energies[i]), "seed": self.seed,
                   "schedule": self.schedule_id}
            if self.initial_energies is not None:
                rec["initial_energy"] = float(self.initial_energies[i])
            yield rec

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


# -- samplers ------------------------------------------------------------------------

def _scaled_arrays(model: IsingModel, auto_scale: bool) -> tuple[np.ndarray, np.ndarray]:
    hv, jm = model.arrays()
    if auto_scale:
        top = model.max_abs_coefficient()
        if top > 0:
            hv, jm = hv / top, jm / top
    return hv, jm


def _initial_spins(model: IsingModel, initial_state, num_reads: int) -> np.ndarray:
    init = np.asarray(initial_state, dtype=float)
    if init.ndim == 1:
        init = np.broadcast_to(init, (num_reads, len(init)))
    if init.shape != (num_reads, model.n_vars):
        raise SamplerError(f"initial states must have shape ({num_reads}, {model.n_vars}), got {init.shape}")
    if not np.all(np.abs(init) == 1):
        raise SamplerError("initial states must be +1/-1 spins")
    return init.copy()


def svmc_sample(model: IsingModel, sched: Schedule, num_reads: int = 100, seed: int | None = 0,
                initial_state=None, beta: float = 10.0, sweeps_per_us: float = 1.0,
                curves: AnnealingCurves = LINEAR, auto_scale: bool = False) -> SampleSet:
    """Spin-vector Monte Carlo along ``sched``.

    ``initial_state`` (one spin vector, or one per read) is required for reverse
    schedules and refused otherwise.  With ``auto_scale`` the couplings are divided
    by their largest magnitude before sampling, so ``beta`` is in units of the
    strongest term.  Reverse reads return the better of their start and their
    final state.
    """
    if num_reads < 1:
        raise SamplerError("num_reads must be >= 1")
    if beta <= 0:
        raise SamplerError("beta must be positive")
    reverse = sched.kind == "reverse"
    if reverse and initial_state is None:
        raise SamplerError("reverse schedules need an initial state")
    if not reverse and initial_state is not None:
        raise SamplerError(f"{sched.kind} schedules start from the driver ground state; no initial state allowed")
    t_start = time.perf_counter()
    rng = np.random.default_rng(seed)
    n = model.n_vars
    hv, jm = _scaled_arrays(model, auto_scale)
    if reverse:
        init = _initial_spins(model, initial_state, num_reads)
        theta = np.where(init > 0, 0.0, math.pi)
    else:
        theta = np.full((num_reads, n), math.pi / 2)
    c, sn = np.cos(theta), np.sin(theta)
    fld = hv + c @ jm
    s_values = sched.steps(sweeps_per_us)
    a_values, b_values = curves(s_values)
    for a, b in zip(a_values, b_values):
        for i in range(n):
            new = rng.uniform(0.0, math.pi, num_reads)
            cn, sn_new = np.cos(new), np.sin(new)
            dc = cn - c[:, i]
            de = -a * (sn_new - sn[:, i]) + b * dc * fld[:, i]
            ok = (de <= 0) | (rng.random(num_reads) < np.exp(-beta * np.maximum(de, 0)))
            dc = np.where(ok, dc, 0.0)
            c[:, i] += dc
            sn[:, i] = np.where(ok, sn_new, sn[:, i])
            fld += np.outer(dc, jm[i])
    spins = np.where(c >= 0, 1, -1).astype(np.int8)
    energies = model.energies(spins)
    out = SampleSet(spins, energies, sched.name, seed)
    if reverse:
        init_e = model.energies(init)
        keep = init_e < energies
        out.raw_energies = energies.copy()
        out.initial_energies = init_e
        out.states = np.where(keep[:, None], init.astype(np.int8), spins)
        out.energies = np.where(keep, init_e, energies)
    out.timing = {"seconds": time.perf_counter() - t_start, "sweeps": len(s_values),
                  "beta": beta, "duration_us": sched.duration}
    return out


def default_beta_range(model: IsingModel) -> tuple[float, float]:
    """Hot end accepts the largest single flip half the time, cold end the smallest 1%."""
    hv, jm = model.arrays()
    big = np.abs(hv) + np.abs(jm).sum(axis=1)
    coeffs = [abs(v) for v in (*model.h.values(), *model.J.values()) if v]
    if not coeffs:
        return 0.1, 1.0
    hot = math.log(2) / (2 * float(big.max()))
    cold = math.log(100) / (2 * min(coeffs))
    return hot, max(cold, 2 * hot)


def sa_sample(model: IsingModel, sweeps: int = 1000, beta_range: tuple[float, float] | None = None,
              num_reads: int = 100, seed: int | None = 0, initial_state=None) -> SampleSet:
    """Single-spin-flip Metropolis with a geometric inverse-temperature ramp."""
    if num_reads < 1 or sweeps < 1:
        raise SamplerError("num_reads and sweeps must be >= 1")
    beta_range = default_beta_range(model) if beta_range is None else tuple(map(float, beta_range))
    b0, b1 = beta_range
    if not 0 < b0 < b1:
        raise SamplerError(f"need 0 < beta_min < beta_max, got {beta_range}")
    t_start = time.perf_counter()
    rng = np.random.default_rng(seed)
    n = model.n_vars
    hv, jm = model.arrays()
    if initial_state is None:
        spins = rng.choice(np.array([-1.0, 1.0]), size=(num_reads, n))
    else:
        spins = _initial_spins(model, initial_state, num_reads)
    fld = hv + spins @ jm
    for beta in np.geomspace(b0, b1, sweeps):
        for i in range(n):
            de = -2.0 * spins[:, i] * fld[:, i]
            ok = (de <= 0) | (rng.random(num_reads) < np.exp(-beta * np.maximum(de, 0)))
            ds = np.where(ok, -2.0 * spins[:, i], 0.0)
            spins[:, i] += ds
            fld += np.outer(ds, jm[i])
    states = spins.astype(np.int8)
    out = SampleSet(states, model.energies(states), f"sa-{sweeps}", seed)
    out.timing = {"seconds": time.perf_counter() - t_start, "sweeps": sweeps, "beta_range": list(beta_range)}
    return out


# -- schedule comparison --------------------------------------------------------------

METHODS = ("forward", "paused", "reverse_from_forward", "reverse_from_paused")


@dataclass
class ScheduleReport:
    methods: dict[str, dict]
    winners: dict[str, int]
    sample_sets: dict[str, SampleSet] = field(repr=False, default_factory=dict)

    def rows(self) -> list[dict]:
        return [{"method": k, **v, "wins": self.winners.get(k, 0)} for k, v in self.methods.items()]

    def to_json(self) -> dict:
        return {"methods": self.methods, "winners": self.winners}


def _reverse_init(ss: SampleSet, policy: str) -> np.ndarray:
    if policy == "best":
        return np.broadcast_to(ss.states[ss.order()[0]], ss.states.shape).copy()
    if policy == "per-sample":
        return ss.states.copy()
    raise SamplerError(f"unknown reinitialisation policy {policy!r}; expected 'best' or 'per-sample'")


def compare_schedules(model: IsingModel, schedules: Mapping[str, Schedule] | None = None,
                      num_reads: int = 100, seed: int = 0, policy: str = "best",
                      sampler: Callable[..., SampleSet] = svmc_sample, **kw) -> ScheduleReport:
    """Forward, paused and the two reverse variants on one model.

    ``schedules`` may override any of ``forward``, ``paused`` and ``reverse``.
    Reverse reads start from the forward (or paused) reads: all from the best
    one with ``policy="best"``, read ``k`` from read ``k`` with ``"per-sample"``.
    Each read index is a run for the winner tally; ties share the win.
    """
    scheds = {"forward": make_schedule("forward"), "paused": make_schedule("paused"),
              "reverse": make_schedule("reverse")}
    if schedules is not None:
        if not schedules:
            raise SamplerError("schedule set is empty")
        unknown = set(schedules) - set(scheds)
        if unknown:
            raise SamplerError(f"unknown schedule roles {sorted(unknown)}")
        scheds.update(schedules)
    sets: dict[str, SampleSet] = {}
    sets["forward"] = sampler(model, scheds["forward"], num_reads, seed, **kw)
    sets["paused"] = sampler(model, scheds["paused"], num_reads, seed + 1, **kw)
    for k, src in (("reverse_from_forward", "forward"), ("reverse_from_paused", "paused")):
        init = _reverse_init(sets[src], policy)
        sets[k] = sampler(model, scheds["reverse"], num_reads, seed + 2 + (src == "paused"),
                          initial_state=init, **kw)
    methods = {}
    for k in METHODS:
        e = sets[k].energies
        row = {"best": float(e.min()), "median": float(np.median(e)), "mean": float(e.mean())}
        frac = sets[k].improvement_fraction()
        if frac is not None:
            row["improvement_fraction"] = frac
        methods[k] = row
    table = np.stack([sets[k].energies for k in METHODS])
    winners = {k: 0 for k in METHODS}
    low = table.min(axis=0)
    for j, k in enumerate(METHODS):
        winners[k] = int(np.sum(np.isclose(table[j], low, rtol=0, atol=1e-9)))
    return ScheduleReport(methods, winners, sets)
