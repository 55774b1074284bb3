"""Dixmier-trace estimation on truncations.

A Dixmier functional is an omega-limit of the log-means
``(1/log(1+t)) int_0^t mu_s ds``.  On a finite truncation the raw log-mean
carries an O(1/log t) bias from the constant term of the partial integral,
so the direct estimator fits ``S(t) = L log(1+t) + C`` over a window of t and
reports L.  Different weightings of the window play the role of different
omega; their disagreement is the measurability indicator.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma

from . import operator_core as oc

DEFAULT_PROFILES = ("flat", "ramp", "bump", "cesaro")
ALPHA = 0.5
WINDOW_DECADES = 128.0  # ratio t_hi / t_lo of the default direct window
HEAT_WINDOWS = {"circle": (8.0, 0.2), "torus2": (3.0, 0.3)}  # (c1 with t_lo = c1/N, t_hi)


@dataclass(frozen=True)
class WeightProfile:
    """Normalized non-negative weights over a log-spaced grid of a window."""

    name: str
    shape: Callable[[np.ndarray], np.ndarray]

    def weights(self, x: np.ndarray) -> np.ndarray:
        w = np.clip(np.asarray(self.shape(x), dtype=float), 0.0, None)
        return w / w.sum()


PROFILE_SHAPES = {
    "flat": WeightProfile("flat", lambda x: np.ones_like(x)),
    "ramp": WeightProfile("ramp", lambda x: 0.1 + x),
    "bump": WeightProfile("bump", lambda x: np.sin(np.pi * x) ** 2 + 1e-3),
    # Cesaro-composed: handled specially, weights used for the final average
    "cesaro": WeightProfile("cesaro", lambda x: (x >= 0.5).astype(float)),
}


@dataclass
class DixmierEstimate:
    value: complex
    method: str
    window: tuple
    per_profile: list
    spread: float
    raw: complex = 0.0
    flagged: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {
            "value": c(self.value), "method": self.method,
            "window": [float(w) for w in self.window],
            "per_profile": [[n, c(v)] for n, v in self.per_profile],
            "spread": float(self.spread), "raw": c(self.raw),
            "flagged": self.flagged, "notes": list(self.notes),
        }


def _spread(values) -> float:
    vals = list(values)
    if len(vals) < 2:
        return 0.0
    return float(max(abs(a - b) for a, b in combinations(vals, 2)))


# -- functional transforms --------------------------------------------------

def cesaro(g: np.ndarray, s: np.ndarray, start: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """M(g)(t) = (1/log(t/start)) int_start^t g(s) ds/s, trapezoid rule in log s.

    Samples with s < start are ignored and s = start itself is not returned;
    if the grid begins above ``start``, g is taken constant on the gap.
    Returns (s, M(g)(s)).
    """
    s = np.asarray(s, dtype=float)
    g = np.asarray(g)
    keep = s >= start
    s, g = s[keep], g[keep]
    ls = np.log(s / start)
    steps = np.diff(ls) * (g[1:] + g[:-1]) / 2
    integral = g[0] * ls[0] + np.concatenate([[0.0], np.cumsum(steps)])
    ok = ls > 0
    return s[ok], integral[ok] / ls[ok]


def dilation(g: Callable, a: float) -> Callable:
    """x -> g(a x)."""
    if not a > 0:
        raise oc.DomainError("dilation factor must be positive")
    return lambda x: g(a * np.asarray(x))


def power(g: Callable, a: float) -> Callable:
    """x -> g(x^a)."""
    if not a > 0:
        raise oc.DomainError("exponent must be positive")
    return lambda x: g(np.power(np.asarray(x, dtype=float), a))


# -- direct route -------------------------------------------------------------

def _log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.unique(np.round(np.geomspace(lo, hi, n)).astype(int))


def _fit_slope(S: np.ndarray, t: np.ndarray, w: np.ndarray) -> float:
    x = np.log1p(t)
    xm = np.sum(w * x)
    ym = np.sum(w * S)
    return float(np.sum(w * (x - xm) * (S - ym)) / np.sum(w * (x - xm) ** 2))


def log_mean_slopes(values: np.ndarray, window: tuple, profiles=DEFAULT_PROFILES,
                    n_grid: int = 256) -> dict:
    """Per-profile Dixmier value of the positive operator with singular values ``values``."""
    vals = np.sort(np.abs(np.asarray(values, dtype=float)))[::-1]
    S_all = oc.partial_integrals(vals)
    lo, hi = window
    if not 0 < lo < hi:
        raise oc.DomainError(f"window {window} needs 0 < lo < hi")
    t = _log_grid(lo, hi, n_grid)
    t = t[t < S_all.size]
    if t.size < 3:
        raise oc.DomainError(f"window {window} is empty for an operator with {vals.size} values")
    S = S_all[t]
    x = (np.log(t) - np.log(t[0])) / (np.log(t[-1]) - np.log(t[0]))
    out = {}
    for name in profiles:
        prof = PROFILE_SHAPES[name]
        w = prof.weights(x)
        if name == "cesaro":
            # Cesaro mean of the local slope dS/dlog(1+s), started at the window edge;
            # for a piecewise-linear S this is exactly the secant slope.
            ell = np.log1p(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                sec = np.where(ell > ell[0], (S - S[0]) / (ell - ell[0]), 0.0)
            out[name] = float(np.sum(w * sec))
        else:
            out[name] = _fit_slope(S, t, w)
    out["_raw"] = float(S[-1] / np.log1p(t[-1]))
    return out


def positive_parts(T) -> list[tuple[complex, np.ndarray]]:
    """T = T1 - T2 + i T3 - i T4 with Ti >= 0; returns (coefficient, spectrum of Ti)."""
    if isinstance(T, np.ndarray) and T.ndim == 1:
        return [(1.0, np.abs(T))]
    re = oc.hermitian_part(T)
    im = (T - oc.adjoint(T)) / 2j
    parts = []
    for coef, H in ((1.0, re), (1j, im)):
        if oc.max_abs(H) == 0:
            continue
        ev = oc.eigvalsh(H)
        parts.append((coef, ev[ev > 0]))
        parts.append((-coef, -ev[ev < 0]))
    return parts


def default_window(n_values: int, alpha: float = ALPHA) -> tuple:
    hi = max(alpha * n_values, 8.0)
    return (max(hi / WINDOW_DECADES, 2.0), hi)


def model_window(model, decades: float = 16.0) -> Callable:
    """Window rule tied to a lattice model: stay inside the inscribed ball of modes.

    Singular values from modes outside the ball of radius N (the corners of a
    square cutoff) no longer follow the asymptotic counting law, so the upper
    edge is the fraction vol(ball) / vol(cube) of the non-zero values.
    """
    d = model.modes.shape[1]
    frac = np.pi ** (d / 2) / gamma(d / 2 + 1) / 2 ** d

    def rule(n_nonzero: int) -> tuple:
        hi = max(frac * n_nonzero, 8.0)
        return (max(hi / decades, 2.0), hi)

    return rule


def _size(T) -> int:
    return int(T.size) if isinstance(T, np.ndarray) and T.ndim == 1 else int(T.shape[0])


def _is_zero(parts) -> bool:
    return all(p[1].size == 0 or p[1].max() == 0 for p in parts)


def dixmier_direct(T, profiles: Sequence[str] = DEFAULT_PROFILES, window=None,
                   alpha: float = ALPHA) -> DixmierEstimate:
    """Window-fitted log-mean estimate of tau_omega(T).

    ``T`` may be an operator or a 1-d array of singular values of a positive
    operator.  Non-positive operators go through :func:`positive_parts`.
    ``window`` is a (lo, hi) pair of singular-value indices, or a callable
    mapping the number of non-zero values of each positive part to one.
    """
    parts = positive_parts(T)
    n_total = _size(T)
    if window is None:
        window = default_window(_size(T), alpha)
    if _is_zero(parts):
        per = [(name, 0j) for name in profiles]
        return DixmierEstimate(0j, "direct", () if callable(window) else tuple(window), per, 0.0)
    per = {name: 0j for name in profiles}
    raw = 0j
    used = None
    for coef, vals in parts:
        if vals.size == 0 or vals.max() == 0:
            continue
        w = window
        if callable(window):
            w = window(int(np.count_nonzero(vals > 1e-12 * vals.max())))
        used = used or tuple(w)
        if vals.size < n_total:  # zero singular values still count
            vals = np.concatenate([vals, np.zeros(n_total - vals.size)])
        slopes = log_mean_slopes(vals, w, profiles)
        for name in profiles:
            per[name] += coef * slopes[name]
        raw += coef * slopes["_raw"]
    pp = [(name, complex(per[name])) for name in profiles]
    value = complex(np.mean([v for _, v in pp]))
    return DixmierEstimate(value, "direct", used, pp, _spread(v for _, v in pp), raw)


# -- heat route ---------------------------------------------------------------

@dataclass
class HeatTraceSeries:
    t: np.ndarray
    values: np.ndarray
    p: int


def _heat_coefficients(model, A):
    """Spectral data (w, c) with tau(A e^{-t^2 D^2}) = sum c e^{-t^2 w^2}."""
    s = oc.block_size(model.D) or model.block
    Db = oc.diagonal_blocks(model.D, s)
    w, V = np.linalg.eigh(Db)
    if np.isscalar(A) or (isinstance(A, np.ndarray) and A.ndim == 0):
        return w.ravel(), np.full(w.size, complex(A))
    Ab = oc.diagonal_blocks(A if oc.is_sparse(A) else oc.sp.csr_matrix(A), s)
    c = np.einsum("bji,bjk,bki->bi", V.conj(), Ab, V)
    return w.ravel(), c.ravel()


def heat_trace(model, A, t_grid) -> HeatTraceSeries:
    """tau(A e^{-t^2 D^2}) on each grid point."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise oc.DomainError("t grid must be strictly increasing")
    w, c = _heat_coefficients(model, A)
    vals = np.exp(-np.outer(t * t, w * w)) @ c
    return HeatTraceSeries(t, vals, model.p)


def heat_window(model) -> tuple:
    c1, hi = HEAT_WINDOWS.get(model.name.replace("-double", ""), (8.0, 0.2))
    return (c1 / model.N, hi)


def dixmier_heat(model, A, p: int | None = None, profiles: Sequence[str] = DEFAULT_PROFILES,
                 window=None, n_grid: int = 64, mode: str = "average") -> DixmierEstimate:
    """Gamma(p/2+1)^{-1} times a window average of t^p tau(A e^{-t^2 D^2}).

    mode="intercept" instead fits h(t) ~ c0 + c1 t^p with each profile's weights
    and reports c0. A rank-r part of A contributes r t^p / Gamma(p/2+1) to h,
    which the plain average keeps as a bias of order r <t^p> but the fit removes.
    """
    if mode not in ("average", "intercept"):
        raise oc.DomainError(f"unknown heat mode {mode!r}")
    p = model.p if p is None else p
    default = heat_window(model)
    window = default if window is None else tuple(window)
    lo, hi = window
    flagged = False
    notes = []
    if not (0 < lo < hi):
        raise oc.DomainError(f"bad heat window {window}")
    if lo < 0.5 * default[0] or hi > 2 * default[1]:
        flagged = True
        notes.append("heat window outside the validity window")
        warnings.warn(f"heat window {window} outside validity window {default}", stacklevel=2)
    t = np.geomspace(lo, hi, n_grid)
    series = heat_trace(model, A, t)
    h = t ** p * series.values / gamma(p / 2 + 1)
    # x = 0 at the small-t end, where the asymptotic regime is best
    x = (np.log(hi) - np.log(t)) / (np.log(hi) - np.log(lo))
    per = []
    for name in profiles:
        w = PROFILE_SHAPES[name].weights(x)
        if mode == "intercept":
            X = np.stack([np.ones_like(t), t ** p], axis=1) * np.sqrt(w)[:, None]
            coef = np.linalg.lstsq(X.astype(complex), np.sqrt(w) * h, rcond=None)[0]
            val = coef[0]
        elif name == "cesaro":
            lam = t[::-1] ** (-p)  # lambda = t^-p runs upward as t -> 0
            _, m = cesaro(h[::-1], lam, start=lam[0])
            val = np.mean(m[len(m) // 2:])
        else:
            val = np.sum(w * h)
        per.append((name, complex(val)))
    value = complex(np.mean([v for _, v in per]))
    return DixmierEstimate(value, "heat", window, per, _spread(v for _, v in per),
                           raw=complex(h[0]), flagged=flagged, notes=notes)


# -- measurability -----------------------------------------------------------

def probe_windows(n_values: int, alpha: float = ALPHA) -> list[tuple]:
    hi = max(alpha * n_values, 8.0)
    return [default_window(n_values, alpha), (max(hi / 1024, 2.0), hi / 8)]


def measurability_probe(T, profiles: Sequence[str] = DEFAULT_PROFILES, windows=None,
                        model=None, heat_A=None) -> dict:
    """Max pairwise deviation across profiles x windows x methods, relative to |value|."""
    windows = probe_windows(_size(T)) if windows is None else windows
    ests = [dixmier_direct(T, profiles, w) for w in windows]
    if model is not None and heat_A is not None:
        ests.append(dixmier_heat(model, heat_A, profiles=profiles))
    vals = [v for e in ests for _, v in e.per_profile]
    center = complex(np.mean(vals))
    spread = _spread(vals)
    rel = spread / abs(center) if abs(center) > 0 else float("inf") if spread > 0 else 0.0
    return {
        "value": center, "spread": spread, "relative_spread": rel,
        "estimates": ests, "windows": list(windows),
    }


def hypertrace_check(model, a, b, p: int | None = None, resolvent=None, window=None) -> float:
    """|tau_w(ab R) - tau_w(ba R)| / tau_w(R), R = (1+D^2)^{-p/2}."""
    p = model.p if p is None else p
    R = resolvent if resolvent is not None else model.spectral(lambda x: (1 + x * x) ** (-p / 2))
    X1, X2 = a @ b @ R, b @ a @ R
    if a is b or oc.max_abs(X1 - X2) == 0:
        return 0.0  # identical operators, identical estimates
    e1 = dixmier_direct(X1, window=window)
    e2 = dixmier_direct(X2, window=window)
    scale = abs(dixmier_direct(R, window=window).value)
    return float(abs(e1.value - e2.value) / scale)
