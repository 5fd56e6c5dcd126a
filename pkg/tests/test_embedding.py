import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xbkqa.embedding import (
    Embedding,
    EmbeddingError,
    chain_stats,
    default_chain_strength,
    embed_ising,
    embedding_problems,
    find_embedding,
    logical_edges,
    read_embedding_json,
    unembed,
    validate_embedding,
    write_embedding_json,
    write_stats_csv,
)
from xbkqa.pipeline import RunConfig, prepare, sector_logical_model
from xbkqa.polyopt import IsingModel
from xbkqa.topology import chimera_graph, generate_graph

K3 = IsingModel.from_dicts({0: 0.5}, {(0, 1): 1.0, (0, 2): -1.0, (1, 2): 0.5})


def random_model(seed: int, n: int, density: float = 0.5) -> IsingModel:
    rng = np.random.default_rng(seed)
    h = {i: float(rng.normal()) for i in range(n)}
    J = {(i, i + 1): float(rng.normal()) for i in range(n - 1)}
    J.update({(i, j): float(rng.normal()) for i in range(n) for j in range(i + 2, n)
              if rng.random() < density})
    return IsingModel.from_dicts(h, J, float(rng.normal()), n)


def test_triangle_into_unit_cell():
    hw = chimera_graph(1)
    e = find_embedding(K3, hw, seed=0)
    validate_embedding(e, K3, hw)
    assert sorted(e.lengths) == [1, 1, 2]


def test_subgraph_needs_no_chains():
    hw = chimera_graph(2)
    # a 6-cycle alternates between the two sides of neighbouring cells
    cycle = IsingModel.from_dicts({}, {(i, (i + 1) % 6): 1.0 for i in range(6)})
    for seed in range(3):
        assert find_embedding(cycle, hw, seed=seed).lengths == [1] * 6
    path = IsingModel.from_dicts({}, {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0})
    assert find_embedding(path, chimera_graph(1), seed=0).lengths == [1] * 4


def test_too_many_variables_fails():
    with pytest.raises(EmbeddingError):
        find_embedding(random_model(0, 9), chimera_graph(1))
    with pytest.raises(EmbeddingError):
        # K6 needs more room than a single cell offers
        find_embedding(IsingModel.from_dicts({}, {(i, j): 1.0 for i in range(6) for j in range(i + 1, 6)}),
                       chimera_graph(1), tries=3)


def test_seeded_determinism():
    hw = generate_graph("zephyr", 2)
    model = random_model(1, 12, 0.6)
    a = find_embedding(model, hw, seed=7)
    b = find_embedding(model, hw, seed=7)
    assert a.chains == b.chains


@given(st.integers(0, 10 ** 6), st.integers(2, 10), st.sampled_from(["chimera", "pegasus", "zephyr"]))
def test_emitted_embeddings_are_valid(seed, n, family):
    hw = generate_graph(family, 2)
    model = random_model(seed, n)
    e = find_embedding(model, hw, seed=seed)
    assert embedding_problems(e, logical_edges(model), hw, range(n)) == []
    nodes = [q for c in e.chains.values() for q in c]
    assert len(nodes) == len(set(nodes))


def test_h2o_logical_graph_on_zephyr():
    prob = prepare(RunConfig(input="h2o"))
    _, _, _, model = sector_logical_model(prob, 2, 0, 0.0)
    hw = generate_graph("zephyr", 4)
    e = find_embedding(model, hw, seed=0)
    validate_embedding(e, model, hw)
    assert max(e.lengths) <= 7


def test_validation_catches_defects():
    hw = chimera_graph(1)
    edges = [(0, 1)]
    left = [i for i, c in enumerate(hw.coordinates) if c[2] == 0]
    right = [i for i, c in enumerate(hw.coordinates) if c[2] == 1]
    good = Embedding({0: (left[0],), 1: (right[0],)}, 1.0)
    assert embedding_problems(good, edges, hw) == []
    shared = Embedding({0: (left[0],), 1: (left[0], right[0])}, 1.0)
    assert any("shared" in p for p in embedding_problems(shared, edges, hw))
    split = Embedding({0: (left[0], left[1]), 1: (right[0],)}, 1.0)
    assert any("disconnected" in p for p in embedding_problems(split, edges, hw))
    apart = Embedding({0: (left[0],), 1: (left[1],)}, 1.0)
    assert any("no physical edge" in p for p in embedding_problems(apart, edges, hw))
    weak = Embedding({0: (left[0],), 1: (right[0],)}, 0.0)
    assert any("positive" in p for p in embedding_problems(weak, edges, hw))


def test_single_chain_field_split():
    hw = chimera_graph(1)
    a, b = hw.edges[0]
    model = IsingModel.from_dicts({0: 1.0}, {})
    phys = embed_ising(model, Embedding({0: (a, b)}, 3.0), hw)
    assert phys.model.h == {0: 0.5, 1: 0.5}
    assert phys.model.J == {(0, 1): -3.0}
    assert phys.intra_chain_edges == 1


def test_default_chain_strength():
    assert default_chain_strength(K3) == 2.0
    e = find_embedding(K3, chimera_graph(1))
    assert e.chain_strength == 2.0
    assert find_embedding(K3, chimera_graph(1), chain_strength=5).chain_strength == 5.0


def test_unit_chains_reproduce_logical_model():
    hw = chimera_graph(1)
    left = [i for i, c in enumerate(hw.coordinates) if c[2] == 0]
    right = [i for i, c in enumerate(hw.coordinates) if c[2] == 1]
    model = IsingModel.from_dicts({0: 0.3, 1: -0.2, 2: 0.1}, {(0, 1): 1.0, (1, 2): -0.5}, 0.25)
    e = Embedding({0: (left[0],), 1: (right[0],), 2: (left[1],)}, 1.0)
    phys = embed_ising(model, e, hw)
    assert phys.intra_chain_edges == 0
    relabel = {phys.index[e.chains[v][0]]: v for v in range(3)}
    assert {relabel[i]: v for i, v in phys.model.h.items()} == model.h
    assert {tuple(sorted((relabel[i], relabel[j]))): v for (i, j), v in phys.model.J.items()} == model.J
    assert phys.model.offset == model.offset


@given(st.integers(0, 10 ** 6), st.integers(2, 8))
def test_unbroken_energy_bookkeeping(seed, n):
    hw = generate_graph("chimera", 2)
    model = random_model(seed, n)
    e = find_embedding(model, hw, seed=seed)
    phys = embed_ising(model, e, hw)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        s = rng.choice([-1, 1], size=n)
        ps = np.zeros(len(phys.nodes), dtype=int)
        for v in range(n):
            for q in e.chains[v]:
                ps[phys.index[q]] = s[v]
        want = model.energy(s) - e.chain_strength * phys.intra_chain_edges
        assert phys.model.energy(ps) == pytest.approx(want, abs=1e-9)
        back, stats = unembed(ps[None, :], e, model, phys)
        assert back[0].tolist() == s.tolist() and stats.broken_fraction == 0


def chain_of_three():
    hw = chimera_graph(2)
    model = IsingModel.from_dicts({0: 0.2, 1: -0.1}, {(0, 1): 1.0})
    # a path of three nodes: left -- right -- left within one cell
    left = [i for i, c in enumerate(hw.coordinates) if c[:3] == (0, 0, 0)]
    right = [i for i, c in enumerate(hw.coordinates) if c[:3] == (0, 0, 1)]
    e = Embedding({0: (left[0], right[0], left[1]), 1: (right[1],)}, 2.0)
    return hw, model, e, embed_ising(model, e, hw)


def test_majority_vote_repairs_chain():
    hw, model, e, phys = chain_of_three()
    row = np.zeros(len(phys.nodes), dtype=int)
    for q, val in zip(e.chains[0], (1, 1, -1)):
        row[phys.index[q]] = val
    row[phys.index[e.chains[1][0]]] = -1
    out, stats = unembed(row[None, :], e, model, phys)
    assert out[0].tolist() == [1, -1]
    assert stats.per_chain == {0: 1.0, 1: 0.0} and stats.samples_with_breaks == 1


def test_tied_chain_uses_logical_energy():
    hw = chimera_graph(1)
    a, b = hw.edges[0]
    model = IsingModel.from_dicts({0: -0.5}, {})
    e = Embedding({0: (a, b)}, 1.0)
    phys = embed_ising(model, e, hw)
    out, _ = unembed(np.array([[1, -1]]), e, model, phys)
    assert out[0].tolist() == [1]
    flat = IsingModel.from_dicts({}, {}, 0.0, 1)
    out, _ = unembed(np.array([[1, -1]]), e, flat, embed_ising(flat, e, hw))
    assert out[0].tolist() == [-1]


def test_sample_width_checked():
    hw, model, e, phys = chain_of_three()
    with pytest.raises(EmbeddingError):
        unembed(np.ones((1, 2)), e, model, phys)


@given(st.integers(0, 10 ** 6))
def test_planted_states_survive_minority_breaks(seed):
    rng = np.random.default_rng(seed)
    hw = generate_graph("chimera", 4)
    model = random_model(seed, 10, 0.8)
    e = find_embedding(model, hw, seed=seed)
    phys = embed_ising(model, e, hw)
    planted = rng.choice([-1, 1], size=10)
    rows = np.zeros((20, len(phys.nodes)), dtype=int)
    for k in range(20):
        for v in range(10):
            chain = list(e.chains[v])
            flips = set(rng.choice(len(chain), size=(len(chain) - 1) // 2, replace=False).tolist())
            for i, q in enumerate(chain):
                rows[k, phys.index[q]] = -planted[v] if i in flips else planted[v]
    out, _ = unembed(rows, e, model, phys)
    assert (out == planted).all()


def test_chain_statistics():
    unit = Embedding({0: (0,), 1: (1,)}, 1.0)
    s = chain_stats(unit)
    assert s["overhead_ratio"] == 1 and s["histogram"] == {1: 2} and not s["unreliable"]
    long = Embedding({0: tuple(range(8)), 1: (8, 9)}, 1.0)
    s = chain_stats(long)
    assert s["max_length"] == 8 and s["unreliable"]
    assert s["physical_qubit_count"] == 10 and s["overhead_ratio"] == 5
    assert not chain_stats(Embedding({0: tuple(range(7))}, 1.0))["unreliable"]


def test_embedding_io(tmp_path):
    e = find_embedding(K3, chimera_graph(1), seed=3)
    write_embedding_json(e, tmp_path / "e.json")
    assert read_embedding_json(tmp_path / "e.json") == e
    write_stats_csv([{"label": "k3", **chain_stats(e)}], tmp_path / "s.csv")
    rows = list(csv.DictReader(open(tmp_path / "s.csv")))
    assert rows[0]["label"] == "k3" and rows[0]["max_length"] == "2"
