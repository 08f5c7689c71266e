"""Acceptance criteria, one test each; every test records a PASS/FAIL line for the summary."""
import time

import numpy as np

from nhmart.experiments import (gen_bmo_divergent, run_avg_experiment, run_commutator_experiment)
from nhmart.gspace import CoefSequence, bmoq_norm, carleson_operator, ginf_norm
from nhmart.lattice import uniform_radic
from nhmart.linop import LinearOp
from nhmart.mfunc import StepFunction, decompose, lp_norm, reconstruct
from nhmart.opnorm import indicator_lower, norm_2, norm_p
from nhmart.paraprod import (paraproduct_family_op, testing_constant, transform_operator,
                             verify_decomposition)
from nhmart.stopping import carleson_excess, stopping_generations, verify_lemma

import randgen


def fitted_slope(ns, ys):
    return float(np.polyfit(np.log2(ns), np.log2(ys), 1)[0])


def test_reconstruction_and_parseval(criterion):
    t0 = time.perf_counter()
    worst_rt = worst_parseval = 0.0
    for seed in range(1000):
        lat, f, _ = randgen.case(seed, max_depth=6)
        d = decompose(f)
        worst_rt = max(worst_rt, float(np.max(np.abs(reconstruct(d).values - f.values))))
        energy = float(np.sum(d.coefs ** 2 * lat.measure))
        total = lp_norm(f, 2) ** 2
        worst_parseval = max(worst_parseval, abs(energy - total) / total)
    elapsed = time.perf_counter() - t0
    ok = worst_rt < 1e-12 and worst_parseval < 1e-10 and elapsed < 10
    criterion(1, "reconstruction and Parseval", ok,
              f"round trip {worst_rt:.1e} (<1e-12), Parseval rel {worst_parseval:.1e} (<1e-10), {elapsed:.1f}s (<10s)")
    assert ok


def test_three_term_identity(criterion):
    t0 = time.perf_counter()
    worst = max(verify_decomposition(randgen.case(seed)[1]) for seed in range(200))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 30
    criterion(2, "product decomposition identities", ok,
              f"max residual {worst:.1e} (<1e-10), {elapsed:.1f}s (<30s)")
    assert ok


def test_burkholder(criterion):
    ps = (1.5, 2.0, 3.0, 4.0)
    violations = 0
    worst = 0.0
    for seed in range(500):
        lat, g, rng = randgen.case(seed)
        T = transform_operator(randgen.signs(lat, rng)).matrix
        d = decompose(g)
        f = StepFunction(lat, T @ g.values + lat.push_down(np.where(lat.parent < 0, d.coefs, 0.0)))
        for p in ps:
            bound = (max(p, p / (p - 1)) - 1) * lp_norm(g, p)
            worst = max(worst, lp_norm(f, p) / bound)
            violations += lp_norm(f, p) > bound + 1e-9
    ok = violations == 0
    criterion(3, "Burkholder bound for sign multipliers", ok,
              f"{violations} violations in 500 trials x {len(ps)} exponents, max ratio {worst:.3f}")
    assert ok


def test_carleson_embedding(criterion):
    bad = 0
    worst_upper = 0.0
    for seed in range(100):
        lat, rng = randgen.lattice(seed, max_depth=5, max_nodes=80)
        alpha = CoefSequence.from_dense(lat, rng.standard_normal(lat.n) * (rng.random(lat.n) < 0.7))
        if not len(alpha):
            continue
        K = ginf_norm(alpha, 2, 2)
        A = carleson_operator(alpha)
        lower, norm = indicator_lower(A, 2, 2), norm_2(A)
        worst_upper = max(worst_upper, norm / K)
        bad += not (K <= lower * (1 + 1e-12) and lower <= norm * (1 + 1e-12) and norm <= 2 * K + 1e-6)
    lat = uniform_radic(2, 3)
    ones = CoefSequence.from_dense(lat, np.ones(lat.n))
    K3 = ginf_norm(ones, 2, 2)
    ok = bad == 0 and K3 == 2.0
    criterion(4, "Carleson embedding at p=q=2", ok,
              f"{bad} failures of K <= indicator bound <= norm <= 2K, max norm/K {worst_upper:.3f}, "
              f"all-ones depth 3 K = {K3!r}")
    assert ok


def test_paraproduct_two_sided(criterion):
    t0 = time.perf_counter()
    bad = 0
    worst_ratio = 0.0
    for seed in range(100):
        _, b, _ = randgen.case(seed, max_depth=5, max_nodes=80)
        op = paraproduct_family_op(b)
        for p, q in ((2.0, 2.0), (3.0, 2.0), (1.5, 2.0)):
            K = testing_constant(b, p, q)
            rep = norm_p(op, p, restarts=16, seed=seed, q=q)
            bad += not K <= rep.lower_bound * (1 + 1e-12)
            if K > 0:
                worst_ratio = max(worst_ratio, rep.estimate / K)
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and np.isfinite(worst_ratio) and worst_ratio < 100
    criterion(5, "paraproduct testing constant vs norm", ok,
              f"{bad} cases with K above the certified bound, max norm/K {worst_ratio:.3f} (<100), {elapsed:.1f}s")
    assert ok


def test_averaged_square_function_counterexample(criterion):
    t0 = time.perf_counter()
    ns = [8, 16, 32, 64]
    up = run_avg_experiment(4.0, ns)
    down = run_avg_experiment(4 / 3, ns)
    elapsed = time.perf_counter() - t0
    rhs_up = max(r.measured["rhs"] for r in up)
    slope_up = fitted_slope(ns, [r.measured["ratio"] for r in up])
    rhs_down = min(r.measured["rhs"] for r in down)
    slope_down = fitted_slope(ns, [r.measured["lhs"] for r in down])
    ok = (rhs_up <= np.sqrt(2) and abs(slope_up - 0.25) <= 0.1
          and rhs_down >= 2 ** -0.75 and abs(slope_down + 0.25) <= 0.1 and elapsed < 5)
    criterion(6, "averaged square function counterexample", ok,
              f"p=4: max RHS {rhs_up:.4f} (<=1.4142), ratio slope {slope_up:.3f} (0.25+-0.1); "
              f"p=4/3: min RHS {rhs_down:.4f} (>=0.5946), LHS slope {slope_down:.3f} (-0.25+-0.1); {elapsed:.2f}s")
    assert ok


def test_stopping_lemma(criterion):
    violations = 0
    worst = 0.0
    for seed in range(1000):
        lat, rng = randgen.lattice(seed)
        f = StepFunction(lat, rng.exponential(size=lat.n_leaves) ** 2)
        forest = stopping_generations(f, int(rng.integers(-3, 3)))
        violations += len(verify_lemma(f, forest))
        worst = max(worst, carleson_excess(lat, forest))
    ok = violations == 0 and worst <= 2.0 + 1e-12
    criterion(7, "stopping lemma and Carleson packing", ok,
              f"{violations} violations, max packing ratio {worst:.3f} (<=2)")
    assert ok


def test_mixing_counterexample(criterion):
    t0 = time.perf_counter()
    deltas = [4.0 ** -1, 4.0 ** -2, 4.0 ** -3]
    rows = [r.measured for r in run_commutator_experiment(deltas, 2.0, K=10.0)]
    elapsed = time.perf_counter() - t0
    norms = [r["commutator_norm"] for r in rows]
    sups = [r["sup_diff_inf"] for r in rows]
    caps = [r["eps_cap"] for r in rows]
    band = max(norms) / min(norms) - 1.0
    exact_sup = all(abs(s - d ** -0.5) <= 1e-12 * s for s, d in zip(sups, deltas))
    nocap = all(abs(r["eps_nocap"] - 2 ** -0.5) <= 1e-6 for r in rows)
    # one-ulp differences are rounding, not a decrease
    decreasing = all(a - b > 1e-9 * a for a, b in zip(caps, caps[1:]))
    ok = band < 0.2 and exact_sup and nocap and decreasing and elapsed < 60
    criterion(8, "mixing counterexample", ok,
              f"commutator norms {[round(x, 4) for x in norms]} (spread {band:.1%} <20%), "
              f"sup |diff| {sups}, eps_nocap ok={nocap}, eps_cap {[round(x, 4) for x in caps]} "
              f"strictly decreasing={decreasing}, {elapsed:.1f}s")
    assert ok


def test_bmo_divergent_series(criterion):
    firsts, partial_ok = [], True
    for N in (5, 10, 20):
        _, d = gen_bmo_divergent(N)
        firsts.append(bmoq_norm(d, 2, 2)[0])
        partial_ok &= float(reconstruct(d).values.max()) == N
    ok = max(firsts) < np.sqrt(2) and partial_ok
    criterion(9, "BMO divergent series", ok,
              f"first components {[f'{x:.8f}' for x in firsts]} (<1.41421356), max partial sum = N: {partial_ok}")
    assert ok


def test_opnorm_cross_check(criterion):
    worst_rel = 0.0
    for seed in range(200):
        lat, rng = randgen.lattice(seed, max_depth=4, max_nodes=60)
        A = LinearOp(lat, rng.standard_normal((lat.n_leaves, lat.n_leaves)))
        n2 = norm_2(A)
        worst_rel = max(worst_rel, abs(norm_p(A, 2.0, restarts=4, seed=seed).estimate - n2) / n2)
    worst_gap = -np.inf
    for seed in range(50):
        lat, rng = randgen.lattice(1000 + seed, max_depth=3, max_nodes=20)
        n = lat.n_leaves
        A = LinearOp(lat, rng.standard_normal((n, n)))
        est = norm_p(A, 3.0, restarts=32, seed=seed).estimate
        X = rng.standard_normal((n, 20_000))
        w = lat.w[:, None]
        found = np.max(np.sum(np.abs(A.matrix @ X) ** 3 * w, 0) ** (1 / 3) / np.sum(np.abs(X) ** 3 * w, 0) ** (1 / 3))
        worst_gap = max(worst_gap, found - est)
    ok = worst_rel < 1e-8 and worst_gap <= 1e-6
    criterion(10, "operator norm estimator cross-check", ok,
              f"p=2 vs spectral max rel {worst_rel:.1e} (<1e-8), random search excess at p=3 {worst_gap:.1e} (<=1e-6)")
    assert ok
