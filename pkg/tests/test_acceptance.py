"""Acceptance criteria 1-6, each at its stated sizes, tolerances and time limits.

Every test prints one ``CRITERION k: PASS|FAIL`` line (visible in ``pytest -v`` output)
and then asserts the same verdict.  Independent oracles are recomputed here from
closed forms or plain eigenvalue sums rather than taken from the library.
"""
import time

import numpy as np
import pytest

from nclab import cli
from nclab import regulators as rg
from nclab import suites


def make_cfg(model, N=None, suites_=("exact",), sweep=None, seed=0):
    over = {"model": {"name": model, "N": N, "N_sweep": sweep}, "suites": list(suites_), "seed": seed}
    cfg = cli._merge(cli.DEFAULTS, over)
    cfg["model"]["N"] = N
    cli.validate(cfg)
    return cfg


def failures(assertions):
    return [f"{a.name}={a.value:.4g}" for a in assertions if not a.passed]


def verdict(capsys, k, ok, elapsed, limit, detail=""):
    status = "PASS" if ok and elapsed < limit else "FAIL"
    with capsys.disabled():
        print(f"\nCRITERION {k}: {status} ({elapsed:.1f} s, limit {limit} s) {detail}".rstrip())
    return status == "PASS"


def test_criterion_1_exact_identities(capsys):
    t0 = time.perf_counter()
    fails = []
    for model, N in (("circle", 256), ("torus2", 16)):
        out, _ = suites.suite_exact(make_cfg(model, N))
        assert len(out) > 30
        fails += [f"{model}:{f}" for f in failures(out)]
    elapsed = time.perf_counter() - t0
    assert verdict(capsys, 1, not fails, elapsed, 30, " ".join(fails))


def test_criterion_2_regulators(capsys):
    t0 = time.perf_counter()
    out, _ = suites.suite_regulator(make_cfg("circle", 64))
    fails = failures(out)
    # independent spot checks of the closed forms
    x = np.linspace(0, 6, 61)
    if np.max(np.abs(rg.f_p(4, x) - (1 + x * x) * np.exp(-x * x))) > 1e-12:
        fails.append("f4_spot")
    elapsed = time.perf_counter() - t0
    assert verdict(capsys, 2, not fails, elapsed, 10, " ".join(fails))


def eigen_slope(N, p, t):
    """Slope of ||f_p(t|D_1|)||_1 from the explicit spectrum of the doubled model."""
    if p == 1:
        lam, mult = np.sqrt(np.arange(-N, N + 1) ** 2 + 1.0), 2
    else:
        n = np.arange(-N, N + 1)
        lam, mult = np.sqrt((n[:, None] ** 2 + n[None, :] ** 2).ravel() + 1.0), 4
    vals = [mult * np.sum(rg.f_p(p, s * lam)) for s in t]
    return np.polyfit(np.log(t), np.log(vals), 1)[0]


def test_criterion_3_scaling_laws(capsys):
    t0 = time.perf_counter()
    fails, detail = [], []
    for model, N in (("circle", 2048), ("torus2", 32)):
        cfg = make_cfg(model, N, ("scaling",))
        out, data = suites.suite_scaling(cfg)
        fails += [f"{model}:{f}" for f in failures(out)]
        p = cfg["model"]["p"]
        t = np.asarray(data["intable"]["t"])
        ref = eigen_slope(N, p, t)
        got = next(a.value for a in out if a.name == "slope_intable")
        if abs(got - ref) > 1e-6:
            fails.append(f"{model}:intable_vs_spectrum")
        detail.append(f"{model}: " + ", ".join(f"{a.name}={a.value:.3f}" for a in out))
    elapsed = time.perf_counter() - t0
    ok = verdict(capsys, 3, not fails, elapsed, 300, "; ".join(detail) + (" | failed " + " ".join(fails) if fails else ""))
    assert ok, fails


def circle_oracle(N):
    """Log-growth of sum_{|n|<=R} (2+n^2)^{-1/2} against log(2R+1)."""
    R = np.arange(N // 8, N + 1)
    partial = np.cumsum((2 + np.arange(0, N + 1) ** 2.0) ** -0.5)
    sums = 2 * partial[R] - partial[0]
    return np.polyfit(np.log(2 * R + 1.0), sums, 1)[0]


def torus_oracle(N):
    """Log-growth of sum over |n| <= R of 2/(1+|n|^2) against log of the mode count."""
    n = np.arange(-N, N + 1)
    r2 = np.sort((n[:, None] ** 2 + n[None, :] ** 2).ravel()).astype(float)
    R = np.arange(N // 4, N + 1)
    cut = np.searchsorted(r2, R ** 2.0, side="right")
    sums = np.cumsum(2 / (1 + r2))[cut - 1]
    return np.polyfit(np.log(2.0 * cut), sums, 1)[0]


def test_criterion_4_dixmier(capsys):
    t0 = time.perf_counter()
    fails, detail = [], []
    out, data = suites.suite_dixmier(make_cfg("circle", 2048, ("dixmier",)))
    fails += [f"circle:{f}" for f in failures(out)]
    est = data["estimate"]["value"]
    val = est[0] if isinstance(est, (list, tuple)) else complex(est).real
    if abs(val - circle_oracle(2048)) > 0.05 * circle_oracle(2048):
        fails.append("circle:independent_oracle")
    detail.append(f"circle value {val:.4f} oracle {circle_oracle(2048):.4f}")
    out, data = suites.suite_dixmier(make_cfg("torus2", 32, ("dixmier",)))
    fails += [f"torus2:{f}" for f in failures(out)]
    est = data["estimate"]["value"]
    val = est[0] if isinstance(est, (list, tuple)) else complex(est).real
    if abs(val - torus_oracle(32)) > 0.05 * torus_oracle(32):
        fails.append("torus2:independent_oracle")
    detail.append(f"torus2 value {val:.4f} oracle {torus_oracle(32):.4f} (2 pi = {2 * np.pi:.4f})")
    elapsed = time.perf_counter() - t0
    assert verdict(capsys, 4, not fails, elapsed, 120, "; ".join(detail + fails))


def test_criterion_5_main_theorem(capsys):
    t0 = time.perf_counter()
    fails, detail = [], []
    for model, sweep in (("circle", [512, 1024, 2048]), ("torus2", [16, 24, 32])):
        out, data = suites.suite_pairing(make_cfg(model, None, ("pairing",), sweep=sweep))
        fails += [f"{model}:{f}" for f in failures(out)]
        pts = data["report"]["points"]
        assert [p["N"] for p in pts] == sweep
        if model == "circle":
            # compressed shift on n >= 0 is the unilateral shift: index -1, integer -2 * (-1)
            if any(p["index_oracle"]["winding_integer"] != 2 for p in pts):
                fails.append("circle:index_integer_literal")
        worst = max(p["agreement"] for p in pts)
        detail.append(f"{model} worst agreement {worst:.4f}")
    elapsed = time.perf_counter() - t0
    assert verdict(capsys, 5, not fails, elapsed, 600, "; ".join(detail + fails))


def test_criterion_6_appendix(capsys):
    t0 = time.perf_counter()
    fails, detail = [], []
    for model, N in (("circle", 2048), ("torus2", 32)):
        out, data = suites.suite_appendix(make_cfg(model, N, ("appendix",)))
        fails += [f"{model}:{f}" for f in failures(out)]
        names = {a.name for a in out}
        assert any(n.startswith("nounit_") for n in names)
        if model == "torus2":
            assert "correction_mass_exponent" in names
            expo = next(a.value for a in out if a.name == "correction_mass_exponent")
            detail.append(f"mass exponent {expo:.3f}")
    elapsed = time.perf_counter() - t0
    assert verdict(capsys, 6, not fails, elapsed, 600, "; ".join(detail + fails))
