"""Verification suites run by the command-line driver.

Each suite takes a resolved configuration dict and returns a list of
:class:`Assertion` records plus a dict of supporting data.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from . import chern as ch
from . import hochschild as hs
from . import models as md
from . import operator_core as oc
from . import regulators as rg
from . import singular_trace as st

EXACT_TOL = 1e-9
T_MIN_FACTOR = {"circle": 8.0, "torus2": 3.0}
DEFAULT_SWEEP = {"circle": [512, 1024, 2048], "torus2": [16, 24, 32]}
CLAIM_MASSES = (0.5, 1.0, 2.0)


@dataclass
class Assertion:
    suite: str
    name: str
    value: float
    expected: float | str
    tol: float
    comparison: str  # abs | rel | le | ge
    passed: bool = False
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        v, e, t = self.value, self.expected, self.tol
        if not np.isfinite(v):
            self.passed = False
        elif self.comparison == "abs":
            self.passed = abs(v - e) <= t
        elif self.comparison == "rel":
            self.passed = abs(v - e) <= t * abs(e)
        elif self.comparison == "le":
            self.passed = v <= t
        elif self.comparison == "ge":
            self.passed = v >= t
        else:
            raise ValueError(f"unknown comparison {self.comparison!r}")
        self.passed = bool(self.passed)

    def to_dict(self) -> dict:
        return asdict(self)


def _ctx(cfg, **extra) -> dict:
    out = {"model": cfg["model"]["name"], "N": cfg["model"]["N"],
           "profiles": list(cfg["trace"]["profiles"]), "window": cfg["trace"]["window"]}
    out.update(extra)
    return out


def _random_words(rng, model, k: int, length: int = 2) -> list[str]:
    syms = sorted(model.generators)
    return ["".join(rng.choice(syms, size=rng.integers(0, length + 1))) or "1" for _ in range(k)]


def _vector_functional(model, rng, L: int = 12):
    """Phi(X) = <w, X v> with w, v random on the interior."""
    P = model.interior(L).diagonal().real > 0
    w = (rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)) * P
    v = (rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)) * P
    return lambda X: complex(np.vdot(w, X @ v))


def _cycle(cfg):
    name = cfg["cycle"] or ch.default_cycle(cfg["model"]["name"])
    lit = cfg["cycles"].get(name) or ch.CYCLES.get(name, (None, None))[1]
    if lit is None:
        raise oc.DomainError(f"unknown cycle {name!r}")
    return name, hs.HochschildChain.from_literal(lit)


# -- exact identities -----------------------------------------------------------

def suite_exact(cfg) -> tuple[list, dict]:
    rng = np.random.default_rng(cfg["seed"])
    name, N, m = cfg["model"]["name"], cfg["model"]["N"], cfg["model"]["m"]
    model = md.build_model(name, N)
    dm = md.double(model, m)
    out = []
    add = lambda key, val, **kw: out.append(Assertion("exact", key, float(val), 0.0, EXACT_TOL, "le",
                                                      context=_ctx(cfg, **kw)))

    # b o b = 0 on chains (symbolic) and cochains (evaluated)
    for deg in (2, 3):
        terms = [(complex(rng.standard_normal()), _random_words(rng, model, deg + 1)) for _ in range(4)]
        c = hs.HochschildChain.of(*terms)
        bb = hs.boundary(hs.boundary(c))
        add(f"bb_chain_deg{deg}", max((abs(cf) for cf, _ in bb.terms), default=0.0))
    Phi = _vector_functional(model, rng)
    R = ch.resolvent_power(model)
    phi1 = hs.dphi_cochain(1, model, R, Phi)
    args = [model.word(w) for w in _random_words(rng, model, 4)]
    bb = hs.coboundary(hs.coboundary(phi1))(args)
    add("bb_cochain_deg1", abs(bb) / max(1.0, abs(hs.coboundary(phi1)(args[:3]))))

    # <b phi, c> = 0 on the registered cycle
    cname, c = _cycle(cfg)
    phi = hs.dphi_cochain(model.p - 1, model, R, Phi)
    add(f"bphi_on_{cname}", abs(hs.pair(hs.coboundary(phi), c, model)))

    # closed coboundary formula for dphi cochains
    for k in (1, 2, 3):
        phik = hs.dphi_cochain(k, model, R, Phi)
        add(f"hochs_deg{k}", hs.hochs_residual(phik, [model.word(w) for w in _random_words(rng, model, k + 2)]))

    # almost-derivation identity, F_m^2 = 1, tau' = tau
    gens = [g for g in sorted(model.generators) if not g.endswith("*")]
    pairs = [(gens[0], gens[-1]), (gens[0], gens[0] + "*")]
    for x, y in pairs:
        add(f"almostder_{x}_{y}", ch.almostder_residual(dm, dm.word(x), dm.word(y), L=4), m=m)
    for mm in CLAIM_MASSES:
        dmm = md.double(model, mm)
        F = md.F_of(dmm)
        add(f"F_squared_m{mm}", oc.max_abs(F @ F - dmm.identity()), m=mm)
    T = sp.random(dm.dim, dm.dim, density=min(1.0, 2000 / dm.dim ** 2), random_state=int(rng.integers(2 ** 31)),
                  format="csr") * (1 + 1j)
    F = md.F_of(dm)
    add("tau_prime_equals_tau", abs(ch.conditional_trace(F, T) - oc.trace(T)) / max(1.0, abs(oc.trace(T))))

    # doubled product formula
    for mm in CLAIM_MASSES:
        dmm = md.double(model, mm)
        for n in (1, 2, 3, 4):
            a = [model.word(w) for w in _random_words(rng, model, n + 1)]
            scale = max(1.0, mm ** n * n ** 2)
            add(f"claim_n{n}_m{mm}", ch.appendix_claim_check(dmm, a) / scale, m=mm)

    # S-hat recursion and S^i phi = phi o S-hat^i
    for i in (1, 2):
        for n in (2, 3, 4):
            a = [model.word(w) for w in _random_words(rng, model, n + 1)]
            add(f"shat_result_i{i}_n{n}", hs.shat_result_residual(i, a, model))
    for q in (0, 1):
        phiq = hs.dphi_cochain(q, model, R, Phi)
        for i in (1, 2):
            a = [model.word(w) for w in _random_words(rng, model, q + 2 * i + 1)]
            ref = max(1.0, abs(phiq.form_value(hs.shat(i, a, model))))
            add(f"tedious_q{q}_i{i}", hs.s_power_consistency(phiq, i, a) / ref)
    return out, {}


# -- regulators ---------------------------------------------------------------------

def suite_regulator(cfg) -> tuple[list, dict]:
    k, l = cfg["regulator"]["tail"]["k"], cfg["regulator"]["tail"]["l"]
    out = []
    add = lambda key, val, tol, exp=0.0, cmp="le", **kw: out.append(
        Assertion("regulator", key, float(val), exp, tol, cmp, context=kw))
    for p in range(1, 6):
        add(f"erf_{p}_at_0", abs(rg.erf_p(p, 0.0)), 1e-12)
        add(f"erf_{p}_at_10", abs(rg.erf_p(p, 10.0) - 1), 1e-12)
        add(f"normalization_{p}", abs(rg.normalization_integral(p) - 1), 1e-10)
    x = np.linspace(0, 6, 601)
    add("f2_closed", np.max(np.abs(rg.f_p(2, x) - np.exp(-x * x))), 1e-12)
    add("f4_closed", np.max(np.abs(rg.f_p(4, x) - (1 + x * x) * np.exp(-x * x))), 1e-12)
    h = 1e-5
    for p in (1, 2, 3, 4):
        xs = np.array([0.5, 1.0, 2.0])
        fd = (rg.f_p(p, xs + h) - rg.f_p(p, xs - h)) / (2 * h)
        add(f"fprime_fd_{p}", np.max(np.abs(fd - rg.f_p_prime(p, xs))), 1e-6)
    for p in (1, 3, 5):
        tail = rg.build_odd_tail(p, k, l)
        add(f"odd_tail_C{l}_p{p}", np.max(rg.tail_residuals(p, tail)), 1e-8, k=k, l=l,
            condition=tail.condition)
    worst = 0.0
    for p in (1, 2, 3, 4):
        for xv in (0.3, 1.0, 2.5):
            worst = max(worst, abs(rg.better_form(p, xv) - (1 - rg.erf_p(p, xv))))
    add("better_quadrature", worst, 1e-8)
    xs = np.linspace(3, 5, 21)
    partial, nxt = rg.rapid_expansion(xs, 3)
    excess = np.max(np.abs(rg.f_p(1, xs) - partial) - nxt)
    add("rapid_expansion_excess", excess, 0.0)
    return out, {}


# -- scaling laws -------------------------------------------------------------------------

SCALING_EXPECT = {"intable": (0, 0.15), "commutator": (1, 0.2), "chainrule_defect": (2, 0.25)}


def scaling_grid(model, cfg):
    rc = cfg["regulator"]
    factor = rc["t_min_factor"] if rc["t_min_factor"] is not None else T_MIN_FACTOR.get(model.base.name, 8.0)
    return rg.default_t_grid(model, factor, rc["t_max"], 12)


def interpolation_constant(rng, p: float, trials: int = 100, size: int = 60) -> float:
    """max over random matrices of ||T||_(p,1) / (||T||_1^{1/p} ||T||^{1-1/p})."""
    worst = 0.0
    for _ in range(trials):
        A = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
        A = A @ np.diag(rng.uniform(0, 1, size) ** rng.uniform(0.5, 4))
        mu = oc.mu(A)
        ratio = oc.norm_p1(mu, p) / (oc.schatten_norm(mu, 1) ** (1 / p) * mu[0] ** (1 - 1 / p))
        worst = max(worst, ratio)
    return worst


def suite_scaling(cfg) -> tuple[list, dict]:
    name, N, m = cfg["model"]["name"], cfg["model"]["N"], cfg["model"]["m"]
    base = md.build_model(name, N)
    dm = md.double(base, m)
    p = dm.p
    t = scaling_grid(dm, cfg)
    a = dm.word("u")
    out, data = [], {}
    for q, (shift, tol) in SCALING_EXPECT.items():
        fit = rg.scaling_fit(dm, q, None if q == "intable" else a, t)
        expect = -p + shift
        out.append(Assertion("scaling", f"slope_{q}", fit["slope"], float(expect), tol, "abs",
                             context={"model": name, "N": N, "m": m,
                                      "t_window": [float(t[0]), float(t[-1])]}))
        data[q] = {"t": t.tolist(), "values": fit["values"].tolist(), "intercept": fit["intercept"],
                   "bound_constant_range": [float(np.min(fit["values"] * t ** (p - shift))),
                                            float(np.max(fit["values"] * t ** (p - shift)))]}
    rng = np.random.default_rng(cfg["seed"])
    C = interpolation_constant(rng, float(p))
    out.append(Assertion("scaling", "interpolation_constant", C, 2.0, 2.0, "le",
                         context={"p": p, "trials": 100}))
    return out, data


# -- Dixmier estimator ----------------------------------------------------------------------

def lattice_log_growth(values_by_radius, counts_by_radius, radii) -> float:
    """Slope of the partial sums against log(count) over the given radii."""
    return float(np.polyfit(np.log(counts_by_radius), values_by_radius, 1)[0])


def lattice_oracle(name: str, N: int, mass: float = 0.0) -> float:
    """Log-growth fit of sum over modes of mult/(1 + m^2 + |n|^2)^{p/2} against log(count)."""
    if name == "circle":
        R = np.arange(N // 8, N + 1)
        sums = np.array([np.sum((1 + mass ** 2 + np.arange(-r, r + 1) ** 2.0) ** -0.5) for r in R])
        counts = 2 * R + 1.0
    else:
        n = np.arange(-N, N + 1)
        r2 = (n[:, None] ** 2 + n[None, :] ** 2).ravel().astype(float)
        order = np.argsort(r2)
        vals = 2 / (1 + mass ** 2 + r2[order])  # spinor multiplicity 2
        R = np.arange(N // 4, N + 1)
        cut = np.searchsorted(r2[order], R.astype(float) ** 2, side="right")
        sums = np.cumsum(vals)[cut - 1]
        counts = 2.0 * cut
    return lattice_log_growth(sums, counts, R)


def _trace_kw(cfg, model) -> dict:
    w = cfg["trace"]["window"]
    return {"profiles": tuple(cfg["trace"]["profiles"]),
            "window": tuple(w) if w is not None else st.model_window(model)}


def suite_dixmier(cfg) -> tuple[list, dict]:
    name, N, m = cfg["model"]["name"], cfg["model"]["N"], cfg["model"]["m"]
    base = md.build_model(name, N)
    kw = _trace_kw(cfg, base)
    out, data = [], {}
    ctx = lambda **e: _ctx(cfg, **e)
    if name == "circle":
        dm = md.double(base, m)
        T = dm.unit @ dm.spectral(lambda x: (1 + x * x) ** -0.5)
        est = st.dixmier_direct(T, **kw)
        oracle = lattice_oracle("circle", N, m)
        out.append(Assertion("dixmier", "circle_resolvent_value", est.value.real, 2.0, 0.05, "rel",
                             context=ctx(oracle=oracle, window=list(est.window))))
        out.append(Assertion("dixmier", "circle_oracle_agreement", abs(est.value.real - oracle) / oracle, 0.0,
                             0.05, "le", context=ctx(oracle=oracle)))
        out.append(Assertion("dixmier", "circle_profile_spread", est.spread / abs(est.value), 0.0, 0.02, "le",
                             context=ctx()))
        heat = st.dixmier_heat(dm, dm.unit, profiles=kw["profiles"])
        out.append(Assertion("dixmier", "heat_vs_direct", abs(heat.value - est.value) / abs(est.value), 0.0,
                             0.05, "le", context=ctx(heat=heat.value.real, heat_window=list(heat.window))))
        rng = np.random.default_rng(cfg["seed"])
        fr = np.zeros(base.dim)
        fr[:10] = rng.uniform(0.5, 1.0, 10)
        fin = st.dixmier_direct(sp.diags(fr), profiles=kw["profiles"])
        out.append(Assertion("dixmier", "finite_rank_insensitivity", abs(fin.value), 0.0, 0.05, "le", context=ctx()))
        data["estimate"] = est.to_dict()
        data["heat"] = heat.to_dict()
    else:
        R = ch.resolvent_power(base)
        est = st.dixmier_direct(R, **kw)
        oracle = lattice_oracle("torus2", N)
        out.append(Assertion("dixmier", "torus_lattice_oracle", est.value.real, oracle, 0.05, "rel",
                             context=ctx(window=list(est.window))))
        out.append(Assertion("dixmier", "torus_oracle_vs_2pi", oracle, 2 * math.pi, 0.05, "rel", context=ctx()))
        heat = st.dixmier_heat(base, base.identity(), profiles=kw["profiles"])
        out.append(Assertion("dixmier", "heat_vs_direct", abs(heat.value - est.value) / abs(est.value), 0.0,
                             0.05, "le", context=ctx(heat=heat.value.real)))
        data["estimate"] = est.to_dict()
    a, b = base.word("u"), base.word("u*" if name == "circle" else "v")
    hyp = st.hypertrace_check(base, a, b, window=kw["window"])
    out.append(Assertion("dixmier", "hypertrace", hyp, 0.0, 0.02, "le", context=ctx()))
    s = np.arange(1, 2 ** 20 + 1, dtype=float)
    mu = (2 + np.sin(np.log(np.log(s + 2)))) / s
    probe = st.measurability_probe(mu, profiles=kw["profiles"])
    out.append(Assertion("dixmier", "nonmeasurable_witness_spread", probe["relative_spread"], 0.0, 0.05, "ge",
                         context={"n": int(s.size)}))
    return out, data


# -- main theorem --------------------------------------------------------------------------------

def suite_pairing(cfg) -> tuple[list, dict]:
    name = cfg["model"]["name"]
    sweep = cfg["model"]["N_sweep"] or DEFAULT_SWEEP[name]
    cname, c = _cycle(cfg)
    rep = ch.main_theorem_report(name, c.to_literal(), sweep, m=cfg["model"]["m"])
    rep.cycle = cname
    out = []
    degenerate = all(abs(complex(*v)) < 1e-12 for pt in rep.points for v in pt["values"].values())
    for pt in rep.points:
        N = pt["N"]
        ctx = {"model": name, "N": N, "cycle": cname, "profiles": list(st.DEFAULT_PROFILES)}
        out.append(Assertion("pairing", f"agreement_N{N}", pt["agreement"], 0.0, rep.tolerance, "le", context=ctx))
        if degenerate:
            vmax = max(abs(complex(*v)) for v in pt["values"].values())
            out.append(Assertion("pairing", f"degenerate_zero_N{N}", vmax, 0.0, 1e-8, "le", context=ctx))
            continue
        ch_val = complex(*pt["values"]["chern_F"])
        out.append(Assertion("pairing", f"nonzero_N{N}", abs(ch_val), 0.0, 0.1, "ge", context=ctx))
        out.append(Assertion("pairing", f"volume_nonvanishing_N{N}", abs(pt["volume"]["value"][0]), 0.0, 0.1,
                             "ge", context=ctx))
        zetas = [complex(*v) for k, v in pt["values"].items() if k.startswith("zeta_")]
        if len(zetas) > 1:
            zs = max(abs(a - b) for a in zetas for b in zetas) / max(abs(z) for z in zetas)
            out.append(Assertion("pairing", f"zeta_k_mutual_N{N}", zs, 0.0, 0.05, "le", context=ctx))
        if name == "circle":
            out.append(Assertion("pairing", f"phi_profile_spread_N{N}", pt["phi_relative_spread"], 0.0, 0.02,
                                 "le", context=ctx))
            ratio = (ch_val / ch.lambda_n(1)).real
            w = pt["index_oracle"]["winding_integer"]
            out.append(Assertion("pairing", f"index_integer_N{N}", ratio, float(w), 0.05, "abs", context=ctx))
    return out, {"report": rep.to_dict()}


# -- doubling ---------------------------------------------------------------------

NOUNIT_WORDS = {"circle": [["u*", "u"], ["u*u*", "uu"]],
                "torus2": [["u*v*", "u", "v"], ["u*v*", "v", "u"]]}


def suite_appendix(cfg) -> tuple[list, dict]:
    name, N, m = cfg["model"]["name"], cfg["model"]["N"], cfg["model"]["m"]
    base = md.build_model(name, N)
    rng = np.random.default_rng(cfg["seed"])
    out, data = [], {}
    for mm in CLAIM_MASSES:
        dmm = md.double(base, mm)
        for n in (1, 2, 3, 4):
            a = [base.word(w) for w in _random_words(rng, base, n + 1)]
            res = ch.appendix_claim_check(dmm, a) / max(1.0, mm ** n * n ** 2)
            out.append(Assertion("appendix", f"claim_n{n}_m{mm}", res, 0.0, EXACT_TOL, "le",
                                 context={"model": name, "N": N, "m": mm}))
    tol = 0.05 if base.p == 1 else 0.07
    for words in NOUNIT_WORDS[name]:
        a = [base.word(w) for w in words]
        r = ch.nounit_check(base, m, a)
        out.append(Assertion("appendix", "nounit_" + "_".join(words), r["residual"], 0.0, tol, "le",
                             context={"model": name, "N": N, "m": m, "phi_m": str(r["phi_m"]),
                                      "phi": str(r["phi"]), "correction": str(r["correction"])}))
    a = [base.word(w) for w in NOUNIT_WORDS[name][-1]]
    ms = np.array([0.25, 0.5, 1.0])
    mags = np.array([ch.correction_magnitude(base, x, a) for x in ms])
    data["correction_magnitudes"] = mags.tolist()
    if np.all(mags > 1e-12):
        expo = float(np.polyfit(np.log(ms), np.log(mags), 1)[0])
        out.append(Assertion("appendix", "correction_mass_exponent", expo, 2.0, 0.2, "abs",
                             context={"model": name, "N": N, "masses": ms.tolist()}))
    else:
        data["correction_mass_exponent"] = "no correction term (p = 1)"
    if base.p >= 2:
        dm = md.double(base, m)
        _, c = _cycle(cfg)
        first = c.resolve(dm)[0][1]
        for k in range(2, base.p + 1):
            r = ch.eta_defect(dm, k, first)
            out.append(Assertion("appendix", f"almostder_k{k}", r["almostder"], 0.0, 1e-10, "le",
                                 context={"model": name, "N": N}))
            out.append(Assertion("appendix", f"eta_coboundary_k{k}", r["estimator"], 0.0, 0.05, "le",
                                 context={"model": name, "N": N}))
        for words in NOUNIT_WORDS[name]:
            a = [base.word(w) for w in words]
            ft = ch.phi_tilde(dm, [dm.embed(x) for x in a]).value
            f = ch.phi_omega(base, a).value
            out.append(Assertion("appendix", "phi_tilde_" + "_".join(words), abs(ft - f) / max(abs(f), 1e-300),
                                 0.0, 0.05, "le", context={"model": name, "N": N}))
    return out, data


SUITES = {
    "exact": (suite_exact, "Exact finite identities to 1e-9: b o b = 0 on chains and cochains, <b phi, cycle> = 0, "
              "the closed coboundary formula for a0 d(a1)..d(ak) T cochains, the almost-derivation identity "
              "for [F, delta(.)], F_m^2 = 1, tau' = tau, the doubled product formula for n <= 4 and "
              "m in {0.5, 1, 2}, the S-hat recursion and S^i phi = phi o S-hat^i for i <= 2."),
    "regulator": (suite_regulator, "erf_p / f_p checks: endpoint values and normalization for p <= 5, even closed "
                  "forms, f_p' against finite differences, C^l matching of the odd tail, the quadrature form "
                  "1 - erf_p(x) = c(p) int_1^inf x^p s^{p-1} e^{-s^2 x^2} ds, and the asymptotic series of f_1."),
    "scaling": (suite_scaling, "log-log slopes in t of ||f_p(t|D_m|)||_1 (expected -p +- 0.15), "
                "||[f_p(t|D_m|), a]||_1 (-p+1 +- 0.2) and of the chain-rule defect "
                "||[f_p, a] - 1/2 {f_p', t[|D|, a]}||_1 (-p+2 +- 0.25) over t in [t_min_factor/N, t_max]; "
                "plus the (p,1) interpolation inequality with constant <= 2 on 100 random matrices."),
    "dixmier": (suite_dixmier, "Dixmier estimator: circle tau_w((1+D_m^2)^{-1/2}) = 2 +- 5% with profile spread "
                "< 2%, heat vs direct < 5%, finite rank < 0.05; torus tau_w((1+D^2)^{-1}) against the lattice "
                "log-growth oracle (+- 5%); hypertrace residual < 2%; oscillating witness spread > 5%."),
    "pairing": (suite_pairing, "Index pairing over an N sweep: Chern character of the doubled Fredholm module, "
                "extrapolated psi_t, zeta_k pairings and phi_omega pairing agree within 5% (circle) or 7% "
                "(torus); circle: profile spread < 2% and value/lambda_1 within 0.05 of the index integer; "
                "non-zero value and tau_w((1+D^2)^{-p/2}) >= 0.1."),
    "appendix": (suite_appendix, "Doubling identities: product formula residuals, phi_wm vs phi_w plus the "
                 "m^2 correction (< 5% for p = 1, < 7% for p = 2), correction exponent 2 +- 0.2, "
                 "eta_k coboundary and phi-tilde checks for p >= 2."),
}
