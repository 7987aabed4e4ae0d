"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import io
import math
import time

import mpmath
import numpy as np
import pytest

from hedge_da import (DualState, LossBounds, RegretLedger, averaged_regret, certify, da_step, make_schedule,
                      mirror_project, run)
from hedge_da.cli import main
from hedge_da.experiment import ExperimentConfig, run_experiment
from hedge_da.simulation import (AdversarialOracle, MarketModel, RngSeed, ShiftSchedule, TapeOracle, cholesky,
                                 sample_losses)
from hedge_da.variants import VARIANTS, RecurrenceBeta, hedge_trajectory
from conftest import prox_rows, random_losses, simplex_grid

mpmath.mp.dps = 30


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return report


def test_criterion_1_hedge_equals_dual_averaging(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for trial in range(50):
        n, T = int(rng.choice([2, 5, 10])), int(rng.choice([50, 500]))
        bounds = LossBounds(*rng.uniform(0.05, 1.0, 2))
        losses = random_losses(rng, T, n, bounds)
        for variant in VARIANTS:
            sched = make_schedule(variant, n, bounds, T)
            state, ledger = DualState.initial(n), RegretLedger.empty(n)
            dual = [state.x.weights]
            for ell in losses:
                state, ledger = da_step(state, ledger, sched, ell)
                dual.append(state.x.weights)
            worst = max(worst, float(np.max(np.abs(hedge_trajectory(sched, losses) - np.array(dual)))))
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 1e-10 and elapsed < 10,
            f"Hedge vs dual averaging max entrywise gap {worst:.2e} over 50 trials x 4 variants ({elapsed:.1f}s)")


def test_criterion_2_regret_certificates(verdict):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    violations, worst = 0, 0.0
    for k in range(100):
        variant = VARIANTS[k % 4]
        n, T = int(rng.integers(2, 11)), int(rng.integers(7, 400))
        bounds = LossBounds(*rng.uniform(0.05, 1.0, 2))
        sched = make_schedule(variant, n, bounds, T)
        oracle = AdversarialOracle(bounds) if k % 2 else TapeOracle(random_losses(rng, T, n, bounds))
        ledger, _ = run(sched, oracle, T, bounds.mu, bounds.rho, n=n)
        rep = certify(ledger, sched, T, n, bounds)
        violations += not rep.empirical_regret <= rep.generic_rhs + 1e-9
        worst = max(worst, rep.empirical_regret / rep.generic_rhs)
    elapsed = time.perf_counter() - start
    verdict(2, violations == 0 and elapsed < 30,
            f"{violations} violations in 100 runs, worst regret/bound {worst:.3f} ({elapsed:.1f}s)")


def _bound_output(*argv):
    out = io.StringIO()
    code = main(["bound", *argv], out=out)
    return code, {k: float(v) for k, v in (l.split(" = ") for l in out.getvalue().splitlines()) if k != "variant"}


def test_criterion_3_closed_form_plug_ins(verdict, capsys):
    args = ["--n", "30", "--T", "31200", "--mu", "0.5133", "--rho", "0.5175"]
    w, r = mpmath.mpf("0.5133") + mpmath.mpf("0.5175"), mpmath.log(30) / 31200
    fs_ref = float(w * (r + mpmath.sqrt(2 * r)))
    stated_ref, derived_ref = float(w / 2 * mpmath.sqrt(r)), float(w / 2 * mpmath.sqrt(2 * r))
    _, fs = _bound_output("fs", *args)
    _, opt = _bound_output("optimal", *args)
    code, _ = _bound_output("aggressive", "--n", "30", "--T", "6", "--mu", "0.5133", "--rho", "0.5175")
    rejects = code == 2 and "requires T > 6" in capsys.readouterr().err

    def close(x, y):
        return abs(x - y) <= 1e-5 * abs(y)
    ok = (close(fs["stated"], fs_ref) and close(opt["stated"], stated_ref) and close(opt["derived"], derived_ref)
          and close(opt["ratio"], math.sqrt(2)) and rejects)
    verdict(3, ok, f"fs {fs['stated']:.7f} (ref {fs_ref:.7f}), optimal stated {opt['stated']:.7f} "
                   f"derived {opt['derived']:.7f} ratio {opt['ratio']:.6f}, aggressive T=6 rejected: {rejects}")


def test_criterion_4_beta_envelope(verdict):
    start = time.perf_counter()
    beta = RecurrenceBeta()
    t = np.arange(1, 10**5 + 1)
    values = np.array([beta(int(k)) for k in t])
    lower = np.sqrt(2 * t - 1)
    upper = 1 / (1 + math.sqrt(3)) + lower
    elapsed = time.perf_counter() - start
    ok = bool(np.all(lower <= values) and np.all(values <= upper)) and elapsed < 1
    verdict(4, ok, f"sqrt(2t-1) <= beta_t <= 1/(1+sqrt 3) + sqrt(2t-1) for t <= 1e5, "
                   f"min slack {np.min(values - lower):.3e} / {np.min(upper - values):.3e} ({elapsed:.2f}s)")


def test_criterion_5_sum_identities(verdict):
    squares = all(6 * sum((t + 1) ** 2 for t in range(T)) == T * (T + 1) * (2 * T + 1) for T in range(1, 201))
    quartic = all(7 * sum((t + 1) ** 4 for t in range(T)) <= 2 * T**5 for T in range(7, 201))
    verdict(5, squares and quartic, f"square-sum identity exact: {squares}; quartic bound for 7 <= T <= 200: {quartic}")


@pytest.mark.slow
def test_criterion_6_desk_scale_experiment(verdict):
    start = time.perf_counter()
    beats_original = {v: 0 for v in VARIANTS if v != "original"}
    beats_best, certified, total = 0, 0, 0
    margins = []
    for seed in range(10):
        report = run_experiment(ExperimentConfig(seed=seed))
        final = {name: values[-1] for name, values in report.snapshots.items()}
        for v in beats_original:
            beats_original[v] += final[v] <= final["original"]
        beats_best += final["aggressive"] < final["best"]
        margins.append(final["aggressive"] / final["best"])
        certified += sum(rep.satisfied for _, rep in report.certificates)
        total += len(report.certificates)
    elapsed = time.perf_counter() - start
    ok = (all(c >= 8 for c in beats_original.values()) and beats_best >= 7 and certified == total
          and elapsed < 120)
    verdict(6, ok, f"beat original {beats_original} of 10; aggressive beat best product {beats_best}/10 "
                   f"(median ratio {np.median(margins):.2f}); certificates {certified}/{total} ({elapsed:.0f}s)")


def test_criterion_7_mirror_map_oracle(verdict):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    X = simplex_grid(3, 1e-3)
    d = prox_rows(X)
    worst = 0.0
    for _ in range(20):
        s, beta = rng.normal(0, 2, 3), rng.uniform(0.1, 5.0)
        brute = X[np.argmax(X @ s - beta * d)]
        worst = max(worst, float(np.max(np.abs(mirror_project(s, beta).weights - brute))))
    elapsed = time.perf_counter() - start
    verdict(7, worst < 2e-3 and elapsed < 10, f"softmax vs grid argmax max gap {worst:.2e} ({elapsed:.1f}s)")


def test_criterion_8_generator_statistics(verdict):
    start = time.perf_counter()
    T, m = 50000, np.array([0.2, -0.1, 0.0, 0.4, -0.3])
    x = sample_losses(MarketModel(m, np.eye(5)), ShiftSchedule(period=T), T, RngSeed(8)).losses
    mean_z = np.abs(x.mean(axis=0) - m) * math.sqrt(T)
    var_z = np.abs(x.var(axis=0, ddof=1) - 1) / math.sqrt(2 / T)
    rng = np.random.default_rng(8)
    recon = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 30))
        B = rng.standard_normal((n, int(rng.integers(1, n + 1))))
        L = cholesky(B @ B.T)
        recon = max(recon, float(np.max(np.abs(L @ L.T - B @ B.T))))
    elapsed = time.perf_counter() - start
    ok = mean_z.max() <= 4 and var_z.max() <= 4 and recon < 1e-9 and elapsed < 10
    verdict(8, ok, f"max |z| mean {mean_z.max():.2f}, variance {var_z.max():.2f}; "
                   f"Cholesky reconstruction {recon:.1e} ({elapsed:.1f}s)")
