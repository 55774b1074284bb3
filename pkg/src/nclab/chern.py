"""Chern-character functionals and the pairing checks.

Functionals valued in a Dixmier trace are evaluated by building the operator
inside tau_omega (summed over chain terms first, since tau_omega is linear)
and passing it to :func:`singular_trace.dixmier_direct`.  Scalar prefactors
are applied after estimation.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import hochschild as hs
from . import models as md
from . import operator_core as oc
from . import regulators as rg
from . import singular_trace as st


def lambda_n(n: int) -> complex:
    """(-1)^{n(n-1)/2} Gamma(n/2+1), times sqrt(2i) = sqrt(2) e^{i pi/4} for odd n."""
    if n < 0:
        raise oc.DomainError("n must be >= 0")
    val = (-1) ** (n * (n - 1) // 2) * math.gamma(n / 2 + 1)
    if n % 2:
        val = val * cmath.sqrt(2j)
    return complex(val)


def conditional_trace(F, T, tol: float = 1e-8) -> complex:
    """tau'(T) = tau(F(FT + TF)) / 2; needs F^2 = 1."""
    if oc.max_abs(F @ F - oc.identity_like(F)) > tol:
        raise oc.DomainError("conditional trace needs F^2 = 1")
    return 0.5 * oc.trace(F @ (F @ T + T @ F))


def _graded(model, X):
    return model.grading @ X if model.grading is not None else X


def _chain_operator(build, c: hs.HochschildChain, model):
    total = None
    for coef, ops in c.resolve(model):
        X = coef * build(ops)
        total = X if total is None else total + X
    if total is None:
        return sp.csr_matrix((model.dim, model.dim), dtype=complex)
    return total


def _check_degree(model, args):
    if len(args) != model.p + 1:
        raise oc.DomainError(f"need p+1 = {model.p + 1} arguments, got {len(args)}")


def _as_chain(c, p):
    if isinstance(c, hs.HochschildChain):
        if c.degree != p:
            raise oc.DomainError(f"chain degree {c.degree} differs from p = {p}")
    return c


# -- Fredholm-module side ------------------------------------------------------

def chern_operator(dm, args, F=None):
    """Gamma a0 [F,a1] ... [F,ap]."""
    _check_degree(dm, args)
    F = md.F_of(dm) if F is None else F
    X = args[0]
    for a in args[1:]:
        X = X @ oc.commutator(F, a)
    return _graded(dm, X)


def chern_pair(dm, c: hs.HochschildChain) -> complex:
    """sum over terms of lambda_p tau'(Gamma a0 [F,a1] ... [F,ap]) on the double."""
    c = _as_chain(c, dm.p)
    if not c.terms:
        return 0j
    F = md.F_of(dm)
    X = _chain_operator(lambda ops: chern_operator(dm, ops, F), c, dm)
    return lambda_n(dm.p) * conditional_trace(F, X)


def psi_operator(dm, args, t: float, F=None):
    """Gamma a0 [F,a1] ... [F,a_{p-1}] F [f_p(t|D|), a_p]."""
    _check_degree(dm, args)
    F = md.F_of(dm) if F is None else F
    f = rg.apply_regulator(dm, t, "f")
    X = args[0]
    for a in args[1:-1]:
        X = X @ oc.commutator(F, a)
    return _graded(dm, X @ F @ oc.commutator(f, args[-1]))


def psi_t(dm, args, t: float) -> complex:
    """-lambda_p tau(Gamma a0 [F,a1] ... F [f_p(t|D|), a_p])."""
    return -lambda_n(dm.p) * oc.trace(psi_operator(dm, args, t))


def psi_t_chain(dm, c: hs.HochschildChain, t: float) -> complex:
    F = md.F_of(dm)
    X = _chain_operator(lambda ops: psi_operator(dm, ops, t, F), c, dm)
    return -lambda_n(dm.p) * oc.trace(X)


# (t_lo * N, t_hi, basis): t_lo = c/N keeps the truncation invisible to f_p(t|D|).
# The circle values are linear in t; on the torus the small-t form is
# psi_0 + a t^2 log t + b t^2 (mass corrections bring in the log).
PSI_WINDOWS = {"circle": (8.0, lambda N: 32.0 / N, "linear"),
               "torus2": (4.0, lambda N: 0.4, "t2log")}


def _psi_basis(t: np.ndarray, basis: str) -> np.ndarray:
    cols = [np.ones_like(t)]
    if basis == "linear":
        cols.append(t)
    elif basis == "t2log":
        cols += [t * t * np.log(t), t * t]
    else:
        raise oc.DomainError(f"unknown extrapolation basis {basis!r}")
    return np.stack(cols, axis=1)


def psi_limit(dm, c: hs.HochschildChain, t_grid=None, basis: str | None = None,
              n: int = 8) -> dict:
    """Richardson-style t -> 0 limit: least-squares fit in a small-t basis, value at t = 0."""
    c_lo, t_hi, default_basis = PSI_WINDOWS.get(dm.base.name, PSI_WINDOWS["circle"])
    basis = default_basis if basis is None else basis
    if t_grid is None:
        t_grid = np.geomspace(c_lo / dm.N, t_hi(dm.N), n)
    t = np.asarray(t_grid, dtype=float)
    vals = np.array([psi_t_chain(dm, c, ti) for ti in t])
    B = _psi_basis(t, basis)
    if B.shape[0] < B.shape[1] + 1:
        raise oc.DomainError("too few t points for the extrapolation basis")
    re = np.linalg.lstsq(B, vals.real, rcond=None)[0]
    im = np.linalg.lstsq(B, vals.imag, rcond=None)[0]
    return {"value": complex(re[0], im[0]), "t": t, "values": vals, "basis": basis,
            "window_mean": complex(vals.mean())}


# -- Dixmier-valued cocycles -----------------------------------------------------

def _inv_D(dm):
    return dm.spectral(lambda x: 1.0 / x)


def zeta_operator(dm, k: int, args, F=None, Dinv=None):
    """Gamma a0 [F,a1] ... D^{-1}[|D|,a_k] ... [F,a_p] (prefactor p lambda_p not included)."""
    _check_degree(dm, args)
    if not 1 <= k <= dm.p:
        raise oc.DomainError("k must lie in 1..p")
    F = md.F_of(dm) if F is None else F
    Dinv = _inv_D(dm) if Dinv is None else Dinv
    X = args[0]
    for j, a in enumerate(args[1:], start=1):
        X = X @ (Dinv @ md.delta_k(dm, a, 1) if j == k else oc.commutator(F, a))
    return _graded(dm, X)


def _window(model, kw: dict) -> dict:
    kw = dict(kw)
    kw.setdefault("window", st.model_window(model))
    return kw


def zeta_k(dm, k: int, args, **kw) -> st.DixmierEstimate:
    est = st.dixmier_direct(zeta_operator(dm, k, args), **_window(dm, kw))
    return _scaled(est, dm.p * lambda_n(dm.p))


def zeta_pair(dm, k: int, c: hs.HochschildChain, **kw) -> st.DixmierEstimate:
    F, Dinv = md.F_of(dm), _inv_D(dm)
    X = _chain_operator(lambda ops: zeta_operator(dm, k, ops, F, Dinv), c, dm)
    return _scaled(st.dixmier_direct(X, **_window(dm, kw)), dm.p * lambda_n(dm.p))


def _scaled(est: st.DixmierEstimate, s: complex) -> st.DixmierEstimate:
    return st.DixmierEstimate(
        est.value * s, est.method, est.window, [(n, v * s) for n, v in est.per_profile],
        est.spread * abs(s), est.raw * s, est.flagged, list(est.notes))


def eta_operator(dm, k: int, args, F=None, Dinv=None):
    """Gamma a0 [F,a1] .. [F, delta(a_{k-1})] .. [F,a_{p-1}] D^{-1}, k = 2..p.

    With prefactor (-1)^{p-1} p lambda_p this is the cochain eta_k whose
    coboundary is zeta_k - zeta_{k-1}.
    """
    p = dm.p
    if len(args) != p:
        raise oc.DomainError(f"eta takes p = {p} arguments")
    if not 2 <= k <= p:
        raise oc.DomainError("eta_k is defined for 2 <= k <= p")
    F = md.F_of(dm) if F is None else F
    Dinv = _inv_D(dm) if Dinv is None else Dinv
    X = args[0]
    for j, a in enumerate(args[1:], start=1):
        X = X @ oc.commutator(F, md.delta_k(dm, a, 1) if j == k - 1 else a)
    return _graded(dm, X @ Dinv)


def eta_prefactor(p: int) -> complex:
    return (-1) ** (p - 1) * p * lambda_n(p)


def almostder_residual(dm, x, y, L: int | None = None) -> float:
    """[F, delta(xy)] - R - x[F, delta(y)] - [F, delta(x)] y, interior-compressed max entry.

    R = [F,x] delta(y) + delta(x) [F,y].
    """
    F = md.F_of(dm)
    dl = lambda a: md.delta_k(dm, a, 1)
    Fc = lambda a: oc.commutator(F, a)
    R = Fc(x) @ dl(y) + dl(x) @ Fc(y)
    E = Fc(dl(x @ y)) - R - x @ Fc(dl(y)) - Fc(dl(x)) @ y
    if L is not None:
        P = dm.interior(L)
        E = P @ E @ P
    scale = max(oc.max_abs(Fc(dl(x @ y))), 1.0)
    return oc.max_abs(E) / scale


def eta_value(dm, k: int, args, F=None, Dinv=None) -> complex:
    """eta_k(a0, ..., a_{p-1}) = (-1)^{p-1} p lambda_p tau_omega(eta_operator)."""
    est = st.dixmier_direct(eta_operator(dm, k, args, F, Dinv), window=st.model_window(dm))
    return eta_prefactor(dm.p) * est.value


def eta_defect(dm, k: int, args) -> dict:
    """(i) almost-derivation identity residual; (ii) |<b eta_k - zeta_k + zeta_{k-1}, args>|.

    ``args`` is a list of p+1 operators or a chain.  Each functional value is
    estimated on its own and the coboundary is formed from those numbers, as
    in its definition.  (ii) is relative to |<zeta_k, args>|.
    """
    p = dm.p
    if p < 2:
        raise oc.DomainError("eta_k needs p >= 2")
    if not 2 <= k <= p:
        raise oc.DomainError("eta_k is defined for 2 <= k <= p")
    terms = args.resolve(dm) if isinstance(args, hs.HochschildChain) else [(1.0, list(args))]
    F, Dinv = md.F_of(dm), _inv_D(dm)
    W = st.model_window(dm)
    zeta = lambda j, ops: p * lambda_n(p) * st.dixmier_direct(zeta_operator(dm, j, ops, F, Dinv), window=W).value
    eta = lambda ops: eta_value(dm, k, ops, F, Dinv)
    exact = 0.0
    b_eta = zk = zk1 = 0j
    for coef, ops in terms:
        _check_degree(dm, ops)
        exact = max(exact, almostder_residual(dm, ops[k - 1], ops[k], L=4))
        b_eta += coef * hs.coboundary(hs.CochainFunctional(p - 1, eta))(list(ops))
        zk += coef * zeta(k, ops)
        zk1 += coef * zeta(k - 1, ops)
    scale = max(abs(zk), abs(zk1))
    diff = abs(b_eta - (zk - zk1))
    return {"almostder": exact, "estimator": float(diff / scale) if scale else float(diff),
            "b_eta": complex(b_eta), "zeta_diff": complex(zk - zk1), "zeta_k": complex(zk)}


def resolvent_power(model, p: int | None = None, mass: float = 1.0):
    """(mass^2 + D^2)^{-p/2}."""
    p = model.p if p is None else p
    return model.spectral(lambda x: (mass * mass + x * x) ** (-p / 2))


def phi_operator(model, args, R=None):
    """Gamma a0 [D,a1] ... [D,ap] (1+D^2)^{-p/2}."""
    _check_degree(model, args)
    R = resolvent_power(model) if R is None else R
    X = args[0]
    for a in args[1:]:
        X = X @ model.d(a)
    return _graded(model, X @ R)


def phi_omega(model, args, **kw) -> st.DixmierEstimate:
    return _scaled(st.dixmier_direct(phi_operator(model, args), **_window(model, kw)), lambda_n(model.p))


def phi_pair(model, c: hs.HochschildChain, **kw) -> st.DixmierEstimate:
    R = resolvent_power(model)
    X = _chain_operator(lambda ops: phi_operator(model, ops, R), c, model)
    return _scaled(st.dixmier_direct(X, **_window(model, kw)), lambda_n(model.p))


def phi_heat_pair(model, c: hs.HochschildChain) -> st.DixmierEstimate:
    """Heat-route variant: Gamma(p/2+1)^{-1} t^p tau(A e^{-t^2 D^2}) with A the chain operator."""
    p = model.p
    ident = model.identity()
    X = _chain_operator(lambda ops: phi_operator(model, ops, ident), c, model)
    return _scaled(st.dixmier_heat(model, X, p), lambda_n(p))


def phi_tilde_operator(dm, args, absinv=None):
    """Gamma a0 [D,a1]|D|^{-1} [D,a2]|D|^{-1} ... [D,ap]|D|^{-1}."""
    _check_degree(dm, args)
    absinv = dm.abs_spectral(lambda x: 1.0 / x) if absinv is None else absinv
    X = args[0]
    for a in args[1:]:
        X = X @ dm.d(a) @ absinv
    return _graded(dm, X)


def phi_tilde(dm, args, **kw) -> st.DixmierEstimate:
    if not dm.invertible_D:
        raise oc.DomainError("phi_tilde needs an invertible D")
    return _scaled(st.dixmier_direct(phi_tilde_operator(dm, args), **_window(dm, kw)), lambda_n(dm.p))


def phi_omega_m_operator(dm, args):
    """Gamma a0 [D_m,a1] ... [D_m,ap] |D_m|^{-p}."""
    _check_degree(dm, args)
    X = args[0]
    for a in args[1:]:
        X = X @ dm.d(a)
    return _graded(dm, X @ dm.abs_spectral(lambda x: x ** (-float(dm.p))))


# -- doubling identities ----------------------------------------------------------

def claim_blocks(dm, args):
    """Right-hand side blocks (top-left, top-right) of the doubled product formula.

    The top-right block carries -m: with D_m = [[D, m], [m, -D]] and
    a -> diag(a, 0) one has [D_m, a] = [[d(a), -m a], [m a, 0]].
    """
    base = dm.base
    m = dm.mass
    n = len(args) - 1
    coef = lambda i: (-1) ** i * m ** (2 * i) / math.factorial(i)
    tl = hs.shat(0, args, base)
    for i in range(1, n // 2 + 1):
        tl = tl + coef(i) * hs.shat(i, args, base)
    tr = m * hs.shat(0, args[:-1], base) @ args[-1]
    for i in range(1, (n - 1) // 2 + 1):
        tr = tr + m * coef(i) * hs.shat(i, args[:-1], base) @ args[-1]
    return tl, -tr


def appendix_claim_check(dm, args) -> float:
    """max |a0[D_m,a1]...[D_m,an] - RHS| over all four blocks; args are base operators."""
    n = len(args) - 1
    if n < 1:
        raise oc.DomainError("need n >= 1")
    emb = [dm.embed(a) for a in args]
    lhs = emb[0]
    for a in emb[1:]:
        lhs = lhs @ dm.d(a)
    tl, tr = claim_blocks(dm, args)
    rhs = dm.assemble(tl=tl, tr=tr)
    return oc.max_abs(lhs - rhs)


def nounit_check(model, m: float, args, **kw) -> dict:
    """|phi_wm - phi_w - sum_i (-1)^i m^{2i}/i! (S^i phi~^{p-2i})| / scale.

    ``model`` is the base triple and ``args`` base operators.
    """
    p = model.p
    if p not in (1, 2):
        raise oc.DomainError("nounit_check is implemented for p in {1, 2}")
    dm = md.double(model, m)
    lam = lambda_n(p)
    kw = _window(model, kw)
    emb = [dm.embed(a) for a in args]
    phim = lam * st.dixmier_direct(phi_omega_m_operator(dm, emb), **kw).value
    phi = lam * st.dixmier_direct(phi_operator(model, args), **kw).value
    correction = 0j
    R = resolvent_power(model, p)
    for i in range(1, p // 2 + 1):
        Phi = lambda X: lam * st.dixmier_direct(_graded(model, X), **kw).value
        tilde = hs.dphi_cochain(p - 2 * i, model, R, Phi)
        correction += (-1) ** i * m ** (2 * i) / math.factorial(i) * hs.s_power(tilde, i)(list(args))
    scale = max(abs(phi), abs(phim), 1e-300)
    return {"phi_m": phim, "phi": phi, "correction": correction,
            "residual": float(abs(phim - phi - correction) / scale)}


def correction_magnitude(model, m: float, args, **kw) -> float:
    """Dixmier size of |TL(a0[D_m,a1]...[D_m,ap]|D_m|^{-p}) - a0 da1...dap (m^2+D^2)^{-p/2}|."""
    dm = md.double(model, m)
    emb = [dm.embed(a) for a in args]
    X = emb[0]
    for a in emb[1:]:
        X = X @ dm.d(a)
    X = X @ dm.abs_spectral(lambda x: x ** (-float(dm.p)))
    tl = dm.blocks(X)[0]
    base = args[0]
    for a in args[1:]:
        base = base @ model.d(a)
    diff = tl - base @ resolvent_power(model, mass=m)
    return float(st.dixmier_direct(oc.mu(diff), **_window(model, kw)).value.real)


# -- index oracle and report --------------------------------------------------------

def kernel_vectors(X, tol: float = 1e-9):
    """Orthonormal kernel basis of X (columns), via the Gram operator."""
    G = (oc.adjoint(X) @ X)
    if oc.is_sparse(G):
        s = oc.block_size(sp.csr_matrix(G))
        if s is not None:
            blocks = oc.diagonal_blocks(sp.csr_matrix(G), s)
            w, V = np.linalg.eigh(blocks)
            out = []
            for b in range(blocks.shape[0]):
                for j in np.nonzero(w[b] < tol)[0]:
                    v = np.zeros(G.shape[0], dtype=complex)
                    v[b * s:(b + 1) * s] = V[b][:, j]
                    out.append(v)
            return np.array(out).T if out else np.zeros((G.shape[0], 0))
        G = G.toarray()
    w, V = np.linalg.eigh(np.asarray(G))
    return V[:, w < tol]


def index_oracle(model, L: int = 4) -> dict:
    """Index of the compressed shift P u P with P = 1_{D >= 0}, interior kernels only.

    Returns the integer -2 ind(PuP), the predicted value of tau(u*[F,u])
    for F = 2P - 1.
    """
    if model.name != "circle":
        raise oc.DomainError("the index oracle is implemented for the circle")
    P = model.spectral(lambda x: (x >= 0).astype(float))
    u = model.word("u")
    edge = model.identity() - model.interior(L)
    edge_diag = edge.diagonal().real

    def interior_count(V):
        if V.shape[1] == 0:
            return 0
        w = (np.abs(V) ** 2 * edge_diag[:, None]).sum(axis=0)
        return int(np.count_nonzero(w < 0.5))

    # restrict to the range of P
    keep = np.nonzero(P.diagonal().real > 0.5)[0]
    sub = lambda X: sp.csr_matrix(X)[keep][:, keep]
    PuP = sub(u)
    PusP = sub(oc.adjoint(u))
    ker = interior_count(_embed_cols(kernel_vectors(PuP), keep, model.dim))
    coker = interior_count(_embed_cols(kernel_vectors(PusP), keep, model.dim))
    ind = ker - coker
    return {"index": ind, "winding_integer": -2 * ind, "kernel": ker, "cokernel": coker}


def _embed_cols(V, keep, n):
    out = np.zeros((n, V.shape[1]), dtype=complex)
    out[keep] = V
    return out


CYCLES = {
    "winding": ("circle", [[1, ["u*", "u"]]]),
    "fundamental": ("torus2", [[1, ["u*v*", "u", "v"]], [-1, ["u*v*", "v", "u"]]]),
    "degenerate": ("circle", [[1, ["1", "1"]]]),
}


def default_cycle(model_name: str) -> str:
    return {"circle": "winding", "torus2": "fundamental"}[model_name]


@dataclass
class PairingReport:
    cycle: str
    model: str
    N_sweep: list
    points: list = field(default_factory=list)
    tolerance: float = 0.05
    spread_cap: float = 0.02

    def to_dict(self) -> dict:
        return {"cycle": self.cycle, "model": self.model, "N_sweep": list(self.N_sweep),
                "tolerance": self.tolerance, "spread_cap": self.spread_cap,
                "points": self.points}


def _c(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def pairing_point(model_name: str, N: int, cycle, m: float = 1.0) -> dict:
    """All four pairings of a cycle at one truncation."""
    base = md.build_model(model_name, N)
    c = cycle if isinstance(cycle, hs.HochschildChain) else hs.HochschildChain.from_literal(cycle)
    if not hs.is_cycle(c, base):
        raise oc.DomainError("chain is not a cycle on the interior")
    dm = md.double(base, m)
    ch = chern_pair(dm, c)
    psi = psi_limit(dm, c)
    zetas = {k: zeta_pair(dm, k, c) for k in range(1, base.p + 1)}
    phi = phi_pair(base, c)
    heat = phi_heat_pair(base, c)
    vol = st.dixmier_direct(resolvent_power(base), window=st.model_window(base))
    lam = lambda_n(base.p)
    point = {
        "N": N, "chern_F": _c(ch), "psi_t_limit": _c(psi["value"]),
        "psi_t_raw": [_c(v) for v in psi["values"]], "psi_t_grid": [float(t) for t in psi["t"]],
        "zeta": {str(k): z.to_dict() for k, z in zetas.items()},
        "phi_omega": phi.to_dict(), "phi_omega_heat": heat.to_dict(),
        "volume": vol.to_dict(),
        "values": {"chern_F": ch, "psi_t_limit": psi["value"],
                   **{f"zeta_{k}": z.value for k, z in zetas.items()}, "phi_omega": phi.value},
        "phi_relative_spread": float(phi.spread / abs(phi.value)) if abs(phi.value) else 0.0,
        "zeta_relative_spread": max(float(z.spread / abs(z.value)) if abs(z.value) else 0.0
                                    for z in zetas.values()),
        "value_over_lambda": _c(ch / lam),
    }
    if model_name == "circle":
        point["index_oracle"] = index_oracle(base)
    return point


def mutual_agreement(values: dict) -> float:
    """Max pairwise relative deviation of the computed values."""
    vals = list(values.values())
    scale = max(abs(v) for v in vals)
    if scale == 0:
        return 0.0
    return max(abs(a - b) for a in vals for b in vals) / scale


def main_theorem_report(model_name: str, cycle_name: str, N_sweep, m: float = 1.0,
                        tolerance: float | None = None) -> PairingReport:
    N_sweep = list(N_sweep)
    if any(b <= a for a, b in zip(N_sweep, N_sweep[1:])):
        raise oc.DomainError("N sweep must be strictly increasing")
    lit = CYCLES[cycle_name][1] if isinstance(cycle_name, str) else cycle_name
    if not isinstance(cycle_name, str):
        cycle_name = "custom"
    tol = tolerance if tolerance is not None else (0.05 if model_name == "circle" else 0.07)
    rep = PairingReport(str(cycle_name), model_name, N_sweep, tolerance=tol)
    for N in N_sweep:
        pt = pairing_point(model_name, N, lit, m)
        pt["agreement"] = mutual_agreement(pt["values"])
        pt["values"] = {k: _c(v) for k, v in pt["values"].items()}
        rep.points.append(pt)
    return rep
