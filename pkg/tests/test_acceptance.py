"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).parent))
from conftest import dense_annihilator, double_loop_components  # noqa: E402

from manyterms.basis import build_basis, ladder, ladder_spec  # noqa: E402
from manyterms.cli import main as cli_main  # noqa: E402
from manyterms.companions import (  # noqa: E402
    IvSample,
    KernelSpec,
    isd_estimate,
    jive2_fit,
    jive2_u_statistic,
)
from manyterms.plm import fit_plm  # noqa: E402
from manyterms.projection import apply_annihilator, factorize, leverage_complements  # noqa: E402
from manyterms.simulation import DgpSpec, McConfig, draw_sample, rep_seed, simulate_draws, summarize  # noqa: E402
from manyterms.vstat import DecompositionReport, decompose_plm, u_statistic_variance_hom  # noqa: E402

Z975 = 1.959963984540054


def _report(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} | {detail}"
    capman = _CAPTURE.get("capsys")
    if capman is not None:
        with capman.disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)


_CAPTURE: dict = {}


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _CAPTURE["capsys"] = capsys
    yield
    _CAPTURE.pop("capsys", None)


def _mc_within(values: np.ndarray, target: float) -> tuple[bool, float]:
    se = values.std(ddof=1) / math.sqrt(values.size)
    z = (values.mean() - target) / se
    return abs(z) < 3.0, z


# -- 1 ---------------------------------------------------------------------------------


def check_projector_algebra() -> tuple[bool, str]:
    g = np.random.default_rng(101)
    start = time.perf_counter()
    worst = np.zeros(4)
    for _ in range(50):
        n = int(g.integers(10, 201))
        K = int(g.integers(1, min(60, n - 1) + 1))
        P = g.normal(size=(n, K)) * g.uniform(0.1, 10, K)
        w = factorize(P)
        M = apply_annihilator(w, np.eye(n))
        m_diag = leverage_complements(w).m_diag
        errs = (
            np.max(np.abs(M @ M - M)),
            np.max(np.abs(M - M.T)),
            abs(np.trace(M) - (n - K)),
            np.max(np.abs(np.sum(M * M, axis=1) - m_diag)),
        )
        worst = np.maximum(worst, errs)
    elapsed = time.perf_counter() - start
    ok = worst[0] < 1e-10 and worst[1] < 1e-12 and worst[2] < 1e-6 and worst[3] < 1e-8 and elapsed < 10
    return ok, (f"max |M^2-M|={worst[0]:.2e}, |M-M'|={worst[1]:.2e}, |tr M-(n-K)|={worst[2]:.2e}, "
                f"|sum_j M_ij^2-M_ii|={worst[3]:.2e}, {elapsed:.2f}s")


def test_criterion_1_projector_algebra():
    ok, detail = check_projector_algebra()
    _report(1, ok, detail)
    assert ok, detail


# -- 2 ---------------------------------------------------------------------------------


def check_frisch_waugh() -> tuple[bool, str]:
    g = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(g.integers(30, 200))
        K = int(g.integers(1, n // 2))
        d = int(g.integers(1, 4))
        P = g.normal(size=(n, K))
        X = g.normal(size=(n, d)) + P[:, :1] * g.normal(size=d)
        y = X @ g.normal(size=d) + P @ g.normal(size=K) + g.normal(size=n)
        joint, *_ = np.linalg.lstsq(np.column_stack([X, P]), y, rcond=None)
        beta = fit_plm(y, X, factorize(P)).beta_hat
        worst = max(worst, float(np.max(np.abs(beta - joint[:d]) / np.maximum(np.abs(joint[:d]), 1e-300))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and elapsed < 10
    return ok, f"max relative gap to joint OLS {worst:.2e} over 100 instances, {elapsed:.2f}s"


def test_criterion_2_frisch_waugh():
    ok, detail = check_frisch_waugh()
    _report(2, ok, detail)
    assert ok, detail


# -- 3 ---------------------------------------------------------------------------------


def check_exact_decomposition() -> tuple[bool, str]:
    start = time.perf_counter()
    worst_identity = 0.0
    worst_oracle = 0.0
    for r in range(100):
        K = (6, 11, 21)[r % 3]
        s = draw_sample(DgpSpec.for_model(1 + r % 6, n=60), rep_seed(303, r))
        P = build_basis(s.Z, ladder_spec(5, K)).values
        rep = decompose_plm(factorize(P), s.oracle)
        worst_identity = max(worst_identity, rep.identity_gap())
        oracle = double_loop_components(dense_annihilator(P), s.oracle)
        for name in DecompositionReport.FIELDS:
            got = float(getattr(rep, name)[0])
            gap = abs(got - oracle[name]) / max(1.0, abs(oracle[name]))
            worst_oracle = max(worst_oracle, gap)
    elapsed = time.perf_counter() - start
    ok = worst_identity < 1e-8 and worst_oracle < 1e-9 and elapsed < 30
    return ok, (f"identity gap {worst_identity:.2e}, component gap to double loop {worst_oracle:.2e}, "
                f"{elapsed:.2f}s")


def test_criterion_3_exact_decomposition():
    ok, detail = check_exact_decomposition()
    _report(3, ok, detail)
    assert ok, detail


# -- 4 ---------------------------------------------------------------------------------


def check_ladder() -> tuple[bool, str]:
    got = [s.K for s in ladder(5)]
    want = [6, 11, 21, 26, 56, 61, 126, 131, 252, 257, 262, 267, 272, 277]
    return got == want, f"K sequence {got}"


def test_criterion_4_ladder():
    ok, detail = check_ladder()
    _report(4, ok, detail)
    assert ok, detail


# -- 5 and 6 share the Model 1 run -------------------------------------------------------


@functools.lru_cache(maxsize=None)
def model_draws(model: int, ladder_ks: tuple[int, ...], S: int = 1000, seed: int = 5):
    cfg = McConfig(dgp=DgpSpec.for_model(model), S=S, ladder=ladder_ks, master_seed=seed)
    return simulate_draws(cfg)


def check_moment_targets() -> tuple[bool, str]:
    d = model_draws(1, (6, 131, 252))
    ok = True
    parts = []
    for K in (6, 131, 252):
        for name, target in (("gamma", 1 - K / 500), ("s2", 1.0), ("sigma2", 1 - (1 + K) / 500)):
            good, z = _mc_within(d.column(name, K), target)
            ok &= good
            parts.append(f"K={K} {name} mean {d.column(name, K).mean():.4f} vs {target:.4f} (z={z:+.1f})")
    return ok, "; ".join(parts)


def test_criterion_5_moment_targets():
    ok, detail = check_moment_targets()
    _report(5, ok, detail)
    assert ok, detail


def check_coverage() -> tuple[bool, str]:
    rows = {r.K: r for r in summarize(model_draws(1, (6, 131, 252)))}
    r131, r252 = rows[131], rows[252]
    target0 = 2 * stats.norm.cdf(Z975 * math.sqrt(1 - 253 / 500)) - 1
    checks = [
        (0.93 <= r131.cov_ci1 <= 0.97, f"M1 K=131 cov_ci1={r131.cov_ci1:.3f}"),
        (r131.cov_ci0 < r131.cov_ci1, f"M1 K=131 cov_ci0={r131.cov_ci0:.3f}"),
        (abs(r252.cov_ci0 - target0) <= 0.03, f"M1 K=252 cov_ci0={r252.cov_ci0:.3f} (target {target0:.3f})"),
        (0.93 <= r252.cov_ci1 <= 0.97, f"M1 K=252 cov_ci1={r252.cov_ci1:.3f}"),
    ]
    for model in (3, 4, 5, 6):
        (row,) = summarize(model_draws(model, (131,)))
        checks.append((0.93 <= row.cov_ci1 <= 0.97, f"M{model} K=131 cov_ci1={row.cov_ci1:.3f}"))
    ok = all(c for c, _ in checks)
    return ok, "; ".join(f"{msg}{'' if c else ' [x]'}" for c, msg in checks)


def test_criterion_6_coverage():
    ok, detail = check_coverage()
    _report(6, ok, detail)
    assert ok, detail


# -- 7 ---------------------------------------------------------------------------------


def check_u_normality() -> tuple[bool, str]:
    dgp = DgpSpec.for_model(1)
    spec = ladder_spec(5, 131)
    S = 2000
    psi = np.empty(S)
    u = np.empty(S)
    u_std = np.empty(S)
    for r in range(S):
        s = draw_sample(dgp, rep_seed(707, r))
        w = factorize(build_basis(s.Z, spec))
        rep = decompose_plm(w, s.oracle)
        psi[r] = rep.Psi_n[0]
        u[r] = rep.U_n[0]
        u_std[r] = u[r] / math.sqrt(u_statistic_variance_hom(w, 1.0, dgp.cond_var_v(s.Z)))
    corr = float(np.corrcoef(psi, u)[0, 1])
    ad = stats.anderson(u_std, dist="norm")
    crit_1pct = float(ad.critical_values[list(ad.significance_level).index(1.0)])
    ok = abs(corr) <= 3 / math.sqrt(S) and ad.statistic < crit_1pct
    return ok, (f"corr(Psi,U)={corr:+.4f} (bound {3 / math.sqrt(S):.4f}); AD={ad.statistic:.3f} "
                f"vs 1% critical {crit_1pct:.3f}; standardized U mean {u_std.mean():+.3f}, sd {u_std.std():.3f}")


def test_criterion_7_u_normality():
    ok, detail = check_u_normality()
    _report(7, ok, detail)
    assert ok, detail


# -- 8 ---------------------------------------------------------------------------------


def _jive2_double_loop(y, X, Z):
    Q = np.eye(len(y)) - dense_annihilator(Z)
    n, d = X.shape
    A = np.zeros((d, d))
    b = np.zeros(d)
    for i in range(n):
        for j in range(n):
            if i != j:
                A += Q[i, j] * np.outer(X[i], X[j])
                b += Q[i, j] * X[i] * y[j]
    return np.linalg.solve(A, b)


def check_companions() -> tuple[bool, str]:
    g = np.random.default_rng(808)
    worst_jive = 0.0
    for _ in range(50):
        n, K, d = 60, int(g.integers(2, 20)), int(g.integers(1, 3))
        Z = g.normal(size=(n, K))
        v = g.normal(size=(n, d))
        X = Z[:, :d] + 0.5 * Z @ g.normal(size=(K, d)) + v
        y = X @ g.normal(size=d) + 0.5 * v[:, 0] + g.normal(size=n)
        fast = jive2_fit(IvSample(y, X, Z)).beta_hat
        slow = _jive2_double_loop(y, X, Z)
        worst_jive = max(worst_jive, float(np.max(np.abs(fast - slow) / np.abs(slow))))

    worst_sign = 0.0
    for r in range(20):
        s = draw_sample(DgpSpec.for_model(1 + r % 6, n=200), rep_seed(809, r))
        w = factorize(build_basis(s.Z, ladder_spec(5, (21, 56, 131)[r % 3])))
        gap = decompose_plm(w, s.oracle).U_n + jive2_u_statistic(w, s.oracle.v, s.oracle.eps)
        worst_sign = max(worst_sign, float(np.max(np.abs(gap))))

    n = 2000
    k = KernelSpec("gaussian", 1, n ** (-1 / 3))
    unif = np.array([isd_estimate(np.random.default_rng([810, r]).uniform(0, 1, n), k) for r in range(200)])
    norm = np.array([isd_estimate(np.random.default_rng([811, r]).normal(size=n), k) for r in range(200)])
    ok_unif, z_unif = _mc_within(unif, 1.0)
    ok_norm, z_norm = _mc_within(norm, 1 / (2 * math.sqrt(math.pi)))

    checks = [
        (worst_jive < 1e-9, f"JIVE2 vs double loop {worst_jive:.2e}"),
        (worst_sign < 1e-10, f"PLM U_n + JIVE2-form U_n {worst_sign:.2e}"),
        (ok_unif, f"ISD Uniform mean {unif.mean():.4f} vs 1 (z={z_unif:+.1f})"),
        (ok_norm, f"ISD Normal mean {norm.mean():.4f} vs 0.2821 (z={z_norm:+.1f})"),
    ]
    return all(c for c, _ in checks), "; ".join(f"{m}{'' if c else ' [x]'}" for c, m in checks)


def test_criterion_8_companions():
    ok, detail = check_companions()
    _report(8, ok, detail)
    assert ok, detail


# -- 9 ---------------------------------------------------------------------------------


def check_determinism(tmp: Path) -> tuple[bool, str]:
    cfg = tmp / "determinism.cfg"
    cfg.write_text("model = 4\nn = 200\nS = 40\nseed = 9\nladder = 6, 11, 21, 56, 131\n")
    outputs = []
    for threads in (1, 8):
        out = tmp / f"threads{threads}.csv"
        code = cli_main(["simulate", str(cfg), "--threads", str(threads), "--out", str(out)])
        if code != 0:
            return False, f"simulate exited with {code}"
        outputs.append(out.read_bytes())
    same = outputs[0] == outputs[1]
    return same, f"1 vs 8 threads: {'byte-identical' if same else 'different'} ({len(outputs[0])} bytes)"


def test_criterion_9_determinism(tmp_path):
    ok, detail = check_determinism(tmp_path)
    _report(9, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    checks = [
        check_projector_algebra, check_frisch_waugh, check_exact_decomposition, check_ladder,
        check_moment_targets, check_coverage, check_u_normality, check_companions,
    ]
    results = []
    for number, fn in enumerate(checks, 1):
        ok, detail = fn()
        _report(number, ok, detail)
        results.append(ok)
    with tempfile.TemporaryDirectory() as tmp:
        ok, detail = check_determinism(Path(tmp))
        _report(9, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
