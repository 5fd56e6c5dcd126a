"""Generate the bundled fermion term-list fixtures with PySCF.

Run once; the outputs under src/xbkqa/data/ are committed.  PySCF is not a
runtime dependency of the package.

    python scripts/make_fixtures.py
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from pyscf import gto, mcscf, scf

DATA = Path(__file__).resolve().parents[1] / "src" / "xbkqa" / "data"
CUTOFF = 1e-12


def spin_orbital_integrals(h1, eri):
    """Spatial (chemist notation) integrals -> interleaved spin-orbital h_pq, h_pqrs.

    Spin orbital 2i is alpha, 2i+1 is beta.  h_pqrs is the coefficient of
    a+_p a+_q a_r a_s before the 1/2 prefactor, i.e. (ps|qr).
    """
    n = h1.shape[0]
    ns = 2 * n
    one = np.zeros((ns, ns))
    two = np.zeros((ns, ns, ns, ns))
    for p in range(ns):
        for q in range(ns):
            if p % 2 == q % 2:
                one[p, q] = h1[p // 2, q // 2]
    for p in range(ns):
        for q in range(ns):
            for r in range(ns):
                for s in range(ns):
                    if p % 2 == s % 2 and q % 2 == r % 2:
                        two[p, q, r, s] = eri[p // 2, s // 2, q // 2, r // 2]
    return one, two


def write(path, label, one, two, constant, n_electrons, e_hf, e_fci, occupation):
    ns = one.shape[0]
    lines = [
        f"# {label}",
        "# spin-orbital ordering: interleaved (2i alpha, 2i+1 beta)",
        f"n_modes {ns}",
        f"n_electrons {n_electrons}",
        f"constant {constant:.16e}",
        f"e_hf {e_hf:.16e}",
        f"e_fci {e_fci:.16e}",
        f"hf_occupation {occupation}",
        "ordering interleaved",
        f"active_space ({ns},{n_electrons})",
    ]
    for p in range(ns):
        for q in range(ns):
            if abs(one[p, q]) > CUTOFF:
                lines.append(f"{p}^ {q} {one[p, q]:.16e}")
    for p in range(ns):
        for q in range(ns):
            for r in range(ns):
                for s in range(ns):
                    if abs(two[p, q, r, s]) > CUTOFF:
                        lines.append(f"{p}^ {q}^ {r} {s} {two[p, q, r, s]:.16e}")
    path.write_text("\n".join(lines) + "\n")


def build(atom, label, ncas, nelecas, path):
    mol = gto.M(atom=atom, basis="sto-3g", unit="Angstrom", symmetry=False)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.kernel()
    cas = mcscf.CASCI(mf, ncas, nelecas)
    cas.fcisolver.conv_tol = 1e-12
    e_cas = cas.kernel()[0]
    h1, ecore = cas.get_h1eff()
    eri = cas.get_h2eff()
    from pyscf import ao2mo

    eri = ao2mo.restore(1, eri, ncas)
    one, two = spin_orbital_integrals(h1, eri)
    occ = "1" * nelecas + "0" * (2 * ncas - nelecas)
    write(path, label, one, two, ecore, nelecas, mf.e_tot, e_cas, occ)
    print(label, "E_HF", mf.e_tot, "E_CAS", e_cas, "ecore", ecore)


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    build("H 0 0 0; H 0 0 0.735", "H2 STO-3G, R = 0.735 A, full space (4,2)", 2, 2, DATA / "h2_sto3g.ferm")
    build(
        "O 0 0 0; H 0 0.757 0.587; H 0 -0.757 0.587",
        "H2O STO-3G, experimental geometry, active space (8,4)",
        4,
        4,
        DATA / "h2o_sto3g_8_4.ferm",
    )
