"""Compute the reference values frozen into tests/data/oracles.json.

Every number here comes from a route that does not share code with the
package under test:

* fixture energies: dense second-quantised Hamiltonians built from Kronecker
  products of Jordan-Wigner ladder matrices, with their own file parser;
* XBK energies and gaps: direct enumeration of replica tuples as integer
  vectors ``a = sum_i S_i e_{b_i}`` with ratio ``a.H.a / a.a``, using only the
  dense tapered matrix from the package (tapering is checked separately);
* hardware graphs: dwave_networkx (needs a stub for its dimod import).

    python scripts/make_oracles.py [path/to/dwave_networkx/parent]
"""
from __future__ import annotations

import hashlib
import itertools
import json
import sys
import types
from functools import reduce
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "xbkqa" / "data"
OUT = ROOT / "tests" / "data" / "oracles.json"


def read_ferm(path):
    head, one, two = {}, {}, {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        tok = line.split()
        if not tok[0][0].isdigit():
            head[tok[0]] = tok[1]
            continue
        idx = [int(t.rstrip("^")) for t in tok[:-1]]
        (one if len(idx) == 2 else two)[tuple(idx)] = float(tok[-1])
    return head, one, two


def dense_hamiltonian(head, one, two):
    n = int(head["n_modes"])
    eye, z = np.eye(2), np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1| removes an occupied mode
    ann = [reduce(np.kron, [z] * p + [lower] + [eye] * (n - p - 1)) for p in range(n)]
    cre = [a.T for a in ann]
    h = float(head["constant"]) * np.eye(2 ** n)
    for (p, q), c in one.items():
        h += c * cre[p] @ ann[q]
    for (p, q, r, s), c in two.items():
        h += 0.5 * c * cre[p] @ cre[q] @ ann[r] @ ann[s]
    number = sum(cre[p] @ ann[p] for p in range(n))
    return h, np.diag(number).round().astype(int)


def fixture_values(name, fname):
    head, one, two = read_ferm(DATA / fname)
    h, number = dense_hamiltonian(head, one, two)
    occ = head["hf_occupation"]
    hf_index = int(occ, 2)
    k = int(head["n_electrons"])
    sector = np.flatnonzero(number == k)
    return {
        "n_modes": int(head["n_modes"]),
        "n_electrons": k,
        "e_hf_file": float(head["e_hf"]),
        "e_fci_file": float(head["e_fci"]),
        "e_hf_dense": float(h[hf_index, hf_index]),
        "e_fci_dense": float(np.linalg.eigvalsh(h[np.ix_(sector, sector)])[0]),
        "e_ground_dense": float(np.linalg.eigvalsh(h)[0]),
    }


def replica_vectors(m, r, p):
    """Integer vectors for every replica tuple of sector p, one row per tuple."""
    signs = np.array([-1] * p + [1] * (r - p))
    dim = 2 ** m
    tuples = np.array(list(itertools.product(range(dim), repeat=r)))
    vecs = np.zeros((len(tuples), dim), dtype=np.int64)
    for i in range(r):
        np.add.at(vecs, (np.arange(len(tuples)), tuples[:, i]), signs[i])
    return vecs


def xbk_oracle(hmat, r):
    m = int(np.log2(hmat.shape[0]))
    sectors = {}
    for p in range(r // 2 + 1):
        vecs = replica_vectors(m, r, p).astype(float)
        num = np.einsum("ti,ij,tj->t", vecs, hmat, vecs)
        den = np.einsum("ti,ti->t", vecs, vecs)
        ok = den > 0.5
        ratio = float((num[ok] / den[ok]).min()) if ok.any() else None
        levels = np.unique(np.round(num, 9))
        sectors[p] = {"lambda_prime": ratio,
                      "gap_lambda0": float(levels[1] - levels[0]) if len(levels) > 1 else None}
    valid = [s["lambda_prime"] for s in sectors.values() if s["lambda_prime"] is not None]
    return {"energy": min(valid), "sectors": {str(p): s for p, s in sectors.items()}}


def tapered_matrix(name):
    sys.path.insert(0, str(ROOT / "src"))
    from xbkqa.fermion import encode, hf_state_in_encoding, load_fixture
    from xbkqa.pauli import to_dense
    from xbkqa.tapering import find_symmetries, select_sector, taper

    f = load_fixture(name)
    h = encode(f, "parity")
    s = find_symmetries(h)
    s = s.with_assignments(select_sector(h, s, hf_state_in_encoding(f, "parity")))
    return to_dense(taper(h, s)).real


def topology_values(dnx_path):
    if dnx_path:
        sys.path.insert(0, dnx_path)
    sys.modules.setdefault("dimod", types.ModuleType("dimod"))
    sys.modules["dimod"].BinaryQuadraticModel = object
    import dwave_networkx as dnx

    makers = {"chimera": (dnx.chimera_graph, (1, 2, 4, 8)),
              "pegasus": (dnx.pegasus_graph, (2, 3, 4, 6)),
              "zephyr": (dnx.zephyr_graph, (1, 2, 3, 4))}
    out = {}
    for fam, (make, sizes) in makers.items():
        for size in sizes:
            g = make(size, coordinates=True)
            deg = np.array([d for _, d in g.degree()])
            edges = sorted(tuple(sorted(e)) for e in g.edges())
            out[f"{fam}_{size}"] = {
                "nodes": g.number_of_nodes(), "edges": g.number_of_edges(),
                "max_degree": int(deg.max()), "mean_degree": float(deg.mean()),
                "edge_sha256": hashlib.sha256(json.dumps(edges).encode()).hexdigest(),
            }
    return out


def main():
    result = {"fixtures": {"h2": fixture_values("h2", "h2_sto3g.ferm"),
                           "h2o": fixture_values("h2o", "h2o_sto3g_8_4.ferm")}}
    h2 = tapered_matrix("h2")
    h2o = tapered_matrix("h2o")
    result["xbk"] = {"h2": {str(r): xbk_oracle(h2, r) for r in range(1, 17)},
                     "h2o": {str(r): xbk_oracle(h2o, r) for r in range(1, 4)}}
    try:
        result["topology"] = topology_values(sys.argv[1] if len(sys.argv) > 1 else None)
    except ImportError as exc:
        print(f"skipping topology oracle: {exc}")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(result, indent=1, sort_keys=True))
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
