import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xbkqa.annealer import (
    LINEAR,
    METHODS,
    AnnealingCurves,
    SamplerError,
    Schedule,
    ScheduleError,
    compare_schedules,
    default_beta_range,
    make_schedule,
    read_jsonl,
    read_schedule_json,
    sa_sample,
    svmc_sample,
    write_schedule_json,
)
from xbkqa.polyopt import IsingModel, minimize_ising_exact

SINGLE = IsingModel.from_dicts({0: -1.0}, {})
PAIR = IsingModel.from_dicts({0: -1.0, 1: -1.0}, {(0, 1): -2.0})


def ferro_chain(n=10):
    return IsingModel.from_dicts({}, {(i, i + 1): -1.0 for i in range(n - 1)})


def integer_glass(seed: int, n_max: int) -> IsingModel:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, n_max + 1))
    h = {i: float(rng.choice([-1, 1])) for i in range(n)}
    J = {(i, j): float(rng.choice([-1, 1])) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.5}
    return IsingModel.from_dicts(h, J, 0.0, n)


def frustrated_100(seed=5):
    rng = np.random.default_rng(seed)
    n = 100
    J = {}
    for i in range(n):
        for j in rng.choice(n, 4, replace=False):
            if i != j:
                J[(min(i, j), max(i, j))] = float(rng.choice([-1.0, 1.0]))
    return IsingModel({}, J, n_vars=n)


# -- schedules ------------------------------------------------------------------------

def test_preset_schedules():
    assert make_schedule("forward").points == ((0, 0), (100, 1))
    assert make_schedule("forward", anneal_time=20).points == ((0, 0), (20, 1))
    paused = make_schedule("paused")
    assert paused.points == ((0, 0), (80, 0.5), (180, 0.5), (200, 1))
    assert paused.s_at([80, 130, 180]).tolist() == [0.5, 0.5, 0.5] and paused.duration == 200
    rev = make_schedule("reverse")
    assert rev.points == ((0, 1), (2, 0.3), (152, 0.5), (154, 1))
    assert rev.s_at(2) == 0.3


@pytest.mark.parametrize("points,kind", [
    (((0, 0), (0, 1)), "forward"),
    (((0, 0), (10, 1.2)), "forward"),
    (((0, 0.2), (10, 1)), "forward"),
    (((0, 0), (10, 0.9)), "forward"),
    (((0, 0), (10, 1)), "reverse"),
    (((0, 1),), "reverse"),
    (((0, 0), (10, 1)), "sideways"),
])
def test_schedule_invariants_enforced(points, kind):
    with pytest.raises(ScheduleError):
        Schedule(points, kind)


def test_schedule_parameter_checks():
    with pytest.raises(ScheduleError):
        make_schedule("paused", pause_s=1.5)
    with pytest.raises(ScheduleError):
        make_schedule("forward", anneal_time=-1)
    with pytest.raises(ScheduleError):
        make_schedule("forward", speed=3)


def test_schedule_json_round_trip(tmp_path):
    for kind in ("forward", "paused", "reverse"):
        s = make_schedule(kind)
        write_schedule_json(s, tmp_path / f"{kind}.json")
        back = read_schedule_json(tmp_path / f"{kind}.json", kind)
        assert back.points == s.points and back.kind == kind


def test_sweep_discretisation():
    s = make_schedule("forward")
    assert len(s.steps()) == 100 and len(s.steps(4.0)) == 400
    assert s.steps()[0] == pytest.approx(0.005)


def test_curves_from_csv(tmp_path):
    path = tmp_path / "curves.csv"
    path.write_text("A,B\n2.0,0.0\n1.0,1.0\n0.0,4.0\n")
    c = AnnealingCurves.from_csv(path)
    a, b = c(0.25)
    assert (a, b) == (pytest.approx(1.5), pytest.approx(0.5))
    assert LINEAR(0.3) == (pytest.approx(0.7), pytest.approx(0.3))
    path.write_text("A,B\n1.0,0.0\n")
    with pytest.raises(SamplerError):
        AnnealingCurves.from_csv(path)


# -- SVMC -------------------------------------------------------------------------------

def test_svmc_single_spin():
    ss = svmc_sample(SINGLE, make_schedule("forward"), 100, seed=0)
    assert np.mean(ss.states[:, 0] == 1) >= 0.99


def test_svmc_reverse_retains_ground_state():
    ss = svmc_sample(PAIR, make_schedule("reverse"), 100, seed=0, initial_state=[1, 1])
    assert np.mean((ss.states == 1).all(axis=1)) >= 0.9
    assert np.mean(ss.raw_energies == PAIR.energy([1, 1])) >= 0.9


def test_svmc_initial_state_rules():
    with pytest.raises(SamplerError):
        svmc_sample(SINGLE, make_schedule("reverse"), 10)
    with pytest.raises(SamplerError):
        svmc_sample(SINGLE, make_schedule("forward"), 10, initial_state=[1])
    with pytest.raises(SamplerError):
        svmc_sample(PAIR, make_schedule("reverse"), 10, initial_state=[1, 0])


def test_svmc_seed_determinism_and_energies():
    model = integer_glass(3, 8)
    a = svmc_sample(model, make_schedule("paused"), 20, seed=11)
    b = svmc_sample(model, make_schedule("paused"), 20, seed=11)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.energies, b.energies)
    assert a.verify(model)
    c = svmc_sample(model, make_schedule("paused"), 20, seed=12)
    assert c.verify(model)


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_long_forward_anneal_reaches_minimum_small_models(seed):
    model = integer_glass(seed, 6)
    e0, _ = minimize_ising_exact(model)
    ss = svmc_sample(model, make_schedule("forward", anneal_time=1000), 100, seed=seed)
    assert np.mean(ss.energies <= e0 + 1e-9) >= 0.95


@pytest.mark.xfail(strict=True, reason="metastable trap: single-flip dynamics stay in the first excited "
                                       "manifold; simulated annealing also misses it")
def test_long_forward_anneal_reaches_minimum_trap_instance():
    rng = np.random.default_rng(32)
    n = int(rng.integers(2, 13))
    h = {i: float(rng.choice([-1, 1])) for i in range(n)}
    J = {(i, j): -1.0 for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4}
    model = IsingModel.from_dicts(h, J, 0.0, n)
    e0, _ = minimize_ising_exact(model)
    ss = svmc_sample(model, make_schedule("forward", anneal_time=10000), 100, seed=32)
    assert np.mean(ss.energies <= e0 + 1e-9) >= 0.95


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6), st.sampled_from(["best", "per-sample"]))
def test_reverse_keeps_best_so_far(seed, policy):
    model = integer_glass(seed, 10)
    rng = np.random.default_rng(seed)
    init = rng.choice([-1, 1], size=(30, model.n_vars))
    if policy == "best":
        init = np.broadcast_to(init[0], init.shape)
    ss = svmc_sample(model, make_schedule("reverse"), 30, seed=seed, initial_state=init)
    assert (ss.energies <= model.energies(init) + 1e-12).all()
    assert ss.energies.min() <= model.energies(init).min()
    assert ss.verify(model)


@pytest.mark.xfail(strict=True, reason="at one sweep per microsecond about a quarter of reads "
                                       "end above their starting energy")
def test_reverse_improves_frustrated_100_default_rate():
    model = frustrated_100()
    fw = svmc_sample(model, make_schedule("forward"), 100, seed=0)
    rv = svmc_sample(model, make_schedule("reverse"), 100, seed=1, initial_state=fw.states[fw.order()[0]])
    assert rv.improvement_fraction() >= 0.9


def test_reverse_improves_frustrated_100_finer_steps():
    model = frustrated_100()
    fw = svmc_sample(model, make_schedule("forward"), 100, seed=0, sweeps_per_us=4.0)
    rv = svmc_sample(model, make_schedule("reverse"), 100, seed=1, sweeps_per_us=4.0,
                     initial_state=fw.states[fw.order()[0]])
    assert rv.improvement_fraction() >= 0.9


# -- simulated annealing ------------------------------------------------------------------

def test_sa_single_spin():
    ss = sa_sample(SINGLE, sweeps=100, num_reads=100, seed=0)
    assert np.mean(ss.states[:, 0] == 1) >= 0.99


def test_sa_ferromagnetic_chain():
    ss = sa_sample(ferro_chain(), sweeps=1000, num_reads=100, seed=0)
    aligned = (ss.states == ss.states[:, :1]).all(axis=1)
    assert aligned.sum() >= 95


def test_sa_beta_range_checks():
    with pytest.raises(SamplerError):
        sa_sample(SINGLE, beta_range=(2.0, 1.0))
    with pytest.raises(SamplerError):
        sa_sample(SINGLE, beta_range=(0.0, 1.0))
    hot, cold = default_beta_range(ferro_chain())
    assert 0 < hot < cold


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20)
def test_sa_deterministic_and_verified(seed):
    model = integer_glass(seed, 12)
    a = sa_sample(model, 50, None, 10, seed)
    b = sa_sample(model, 50, None, 10, seed)
    assert np.array_equal(a.states, b.states)
    assert a.verify(model)


# -- schedule comparison --------------------------------------------------------------------

def test_easy_model_all_methods_tie():
    rep = compare_schedules(PAIR, num_reads=20, seed=0)
    e0, _ = minimize_ising_exact(PAIR)
    for k in METHODS:
        assert rep.methods[k]["best"] == e0
    assert all(v == 20 for v in rep.winners.values())
    assert set(rep.methods["reverse_from_forward"]) >= {"best", "median", "improvement_fraction"}


def test_comparison_validation():
    with pytest.raises(SamplerError):
        compare_schedules(PAIR, schedules={})
    with pytest.raises(SamplerError):
        compare_schedules(PAIR, schedules={"sideways": make_schedule("forward")})
    with pytest.raises(SamplerError):
        compare_schedules(PAIR, num_reads=5, policy="worst")


def test_comparison_is_seeded_and_rows_complete():
    model = integer_glass(7, 10)
    a = compare_schedules(model, num_reads=10, seed=4, policy="per-sample")
    b = compare_schedules(model, num_reads=10, seed=4, policy="per-sample")
    assert a.to_json() == b.to_json()
    assert [r["method"] for r in a.rows()] == list(METHODS)


def test_sample_jsonl(tmp_path):
    ss = svmc_sample(PAIR, make_schedule("reverse"), 5, seed=0, initial_state=[1, -1])
    ss.write_jsonl(tmp_path / "s.jsonl")
    rows = read_jsonl(tmp_path / "s.jsonl")
    assert len(rows) == 5 and rows[0]["schedule"] == "reverse" and rows[0]["seed"] == 0
    assert rows[0]["initial_energy"] == PAIR.energy([1, -1])
    assert all(PAIR.energy(r["assignment"]) == r["energy"] for r in rows)
