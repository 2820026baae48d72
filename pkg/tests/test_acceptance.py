"""Acceptance gate: every criterion at its stated tolerance.

Each test records a PASS/FAIL line that is printed in the terminal summary
(and immediately when run with ``-s``).
"""


import numpy as np

from conftest import ACCEPTANCE_LINES, ADMISSIBLE, M1, M1_SHIFT, M2, table_for
from susyosc.algebra import (
    NumberPolynomial,
    analyze_ladder_structure,
    build_ladder_set,
    number_eval,
    root_flags,
    spectrum_ladders,
    verify_linearized,
    verify_polynomial_algebra,
    verify_susy_block,
)
from susyosc.chain import (
    alpha1,
    oscillator_potential,
    partner_potential,
    riccati_ode_oracle,
)
from susyosc.cli import sweep_rows
from susyosc.numerics import (
    GridFunction,
    build_hamiltonian,
    inner_product,
    interior_max,
    tridiagonal_eigensolve,
)
from susyosc.specfun import gamma_ratio
from susyosc.states import oscillator_state, spectrum_assemble


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def lowest(V, k):
    return tridiagonal_eigensolve(build_hamiltonian(V), k).eigenvalues


_sets = {}


def ladder_setup(cfg, grid):
    if cfg not in _sets:
        t = table_for(cfg, grid)
        _sets[cfg] = (t, build_ladder_set(t), spectrum_assemble(t, 9))
    return _sets[cfg]


def test_c01_oscillator_baseline(grid):
    w = lowest(oscillator_potential(grid), 10)
    err = float(np.max(np.abs(w - (np.arange(10) + 0.5))))
    record(1, "oscillator baseline", err <= 1e-4, f"max |E_n - (n+1/2)| = {err:.2e} (tol 1e-4)")


def test_c02_shifted_chain(grid):
    t = table_for(M1_SHIFT, grid)
    a_err = float(np.max(np.abs(t.diagonal(1).values - grid.x)[grid.interior]))
    V = partner_potential(t, 1).values
    v_err = float(interior_max(V - GridFunction(grid, grid.x ** 2 / 2 - 1)))
    w = lowest(V, 10)
    e_err = float(np.max(np.abs(w - (np.arange(10) - 0.5))))
    ok = a_err <= 1e-8 and v_err <= 1e-8 and e_err <= 1e-4
    record(2, "shifted chain exactness", ok,
           f"alpha1-x {a_err:.1e}, V-(x^2/2-1) {v_err:.1e} (tol 1e-8); "
           f"spectrum {e_err:.1e} (tol 1e-4)")


def test_c03_closed_form_vs_ode(grid):
    rng = np.random.default_rng(20261016)
    V = oscillator_potential(grid)
    worst = 0.0
    for _ in range(20):
        eps = float(rng.uniform(-3.0, 0.4))
        nu = float(rng.uniform(-0.9, 0.9))
        closed = alpha1(eps, nu, grid)
        ode = riccati_ode_oracle(V, eps, 2 * nu * gamma_ratio(eps))
        worst = max(worst, float(interior_max(ode - closed)))
    record(3, "closed form vs ODE oracle", worst <= 1e-6,
           f"worst interior max-norm over 20 draws = {worst:.2e} (tol 1e-6)")


def test_c04_chain_recursion(fine_grid):
    worst, where = 0.0, ""
    for name, cfg in ADMISSIBLE.items():
        t = table_for(cfg, fine_grid)
        for key, r in t.residuals.items():
            if r > worst:
                worst, where = r, f"{name} {key}"
    record(4, "chain recursion validity", worst <= 1e-5,
           f"worst Riccati residual {worst:.2e} at {where}, {len(ADMISSIBLE)} configs, "
           f"{fine_grid.n_points} points (tol 1e-5)")


def test_c05_spectrum_reproduction(grid):
    worst = 0.0
    shape_ok = True
    for cfg in (M1, M2):
        t = table_for(cfg, grid)
        states = spectrum_assemble(t, 8)
        E = np.array([s.energy for s in states])
        expected = sorted(cfg.epsilons + [n + 0.5 for n in range(9)])
        shape_ok &= bool(np.array_equal(E, expected))
        w = lowest(partner_potential(t, cfg.m).values, len(states))
        worst = max(worst, float(np.max(np.abs(w - E))))
    record(5, "spectrum reproduction", shape_ok and worst <= 1e-3,
           f"m=1,2 ladder + singlets {'ok' if shape_ok else 'WRONG'}, "
           f"max level error {worst:.2e} (tol 1e-3)")


def test_c06_polynomial_algebra(grid):
    _, ops, states = ladder_setup(M1, grid)
    rep = verify_polynomial_algebra(ops, states[:7])
    comm = max(rep.max("commutator_lower"), rep.max("commutator_raise"),
               rep.max("ladder_commutator"))
    ann = max(rep.max("annihilation_D"), rep.max("annihilation_D_dagger"))
    tr = [s for s in states if s.kind == "transformed" and 1 <= s.index <= 5]
    poly = NumberPolynomial.from_config(M1)
    num = 0.0
    for s in tr:
        psi = s.wavefunction
        got = float(inner_product(psi, ops.D_dagger.apply(ops.D.apply(psi))))
        ne = number_eval(poly, s.energy)
        num = max(num, abs(got - ne) / abs(ne))
    ok = comm <= 5e-3 and num <= 1e-2 and ann <= 1e-3
    record(6, "polynomial Heisenberg algebra (m=1)", ok,
           f"commutators {comm:.1e} (tol 5e-3), number {num:.1e} (tol 1e-2), "
           f"annihilation {ann:.1e} (tol 1e-3)")


def test_c07_linearized_action(grid):
    worst = 0.0
    for cfg in (M1, M2):
        _, ops, states = ladder_setup(cfg, grid)
        worst = max(worst, verify_linearized(ops, states, range(6)).max())
    record(7, "linearized action", worst <= 1e-2,
           f"max |coefficient - sqrt(n)|, |.. - sqrt(n+1)| over m=1,2, n=0..5 = {worst:.1e} "
           f"(tol 1e-2)")


def test_c08_susy_block(grid):
    anti, eig = 0.0, 0.0
    for cfg in (M1, M2):
        _, ops, states = ladder_setup(cfg, grid)
        tr = [s for s in states if s.kind == "transformed"][:4]
        blocks = [(s, oscillator_state(s.index, grid)) for s in tr]
        rep = verify_susy_block(ops, blocks)
        anti = max(anti, rep.max("anticommutator"))
        eig = max(eig, rep.max("eigenvalue"))
    record(8, "SUSY block algebra", anti <= 1e-3 and eig <= 1e-2,
           f"{{Q1,Q2}} {anti:.1e} (tol 1e-3), H_ss eigenvalues {eig:.1e} (tol 1e-2)")


def test_c09_admissibility_boundary(grid):
    nus = [round(-1.5 + 0.1 * i, 12) for i in range(31)]
    rows = sweep_rows(0.0, nus, grid)
    wrong = [r["nu"] for r in rows if r["admissible"] != (abs(r["nu"]) < 1)]
    adm = [r["nu"] for r in rows if r["admissible"]]
    record(9, "admissibility boundary", not wrong,
           f"admissible nu in [{min(adm)}, {max(adm)}], misclassified: {wrong or 'none'}")


def test_c10_ladder_classifier(grid):
    bad = []
    for name, cfg in ADMISSIBLE.items():
        t = table_for(cfg, grid)
        roots, flags = root_flags(t)
        ok = sorted(roots) == sorted(NumberPolynomial.from_config(cfg).roots)
        ok &= analyze_ladder_structure(roots, flags).matches(
            spectrum_ladders(spectrum_assemble(t, 9)))
        if not ok:
            bad.append(name)
    record(10, "ladder classifier consistency", not bad,
           f"{len(ADMISSIBLE) - len(bad)}/{len(ADMISSIBLE)} configs agree")
