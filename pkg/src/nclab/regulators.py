"""The erf_p / f_p regulator family and t-scaling measurements.

``erf_p(x) = c(p) int_0^x r^{p-1} e^{-r^2} dr`` with ``c(p) = p / Gamma(p/2+1)``
is the regularized lower incomplete gamma function ``P(p/2, x^2)``, so both
erf_p and f_p = 1 - erf_p are evaluated in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import quad
from scipy.special import factorial, gamma, gammainc, gammaincc

from . import operator_core as oc

DEFAULT_TAIL = (2.0, 4)  # (k, l)


def c_p(p: float) -> float:
    """p / Gamma(p/2 + 1)."""
    return p / gamma(p / 2 + 1)


def erf_p(p: int, x):
    """c(p) int_0^x r^{p-1} e^{-r^2} dr for x >= 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise oc.DomainError("erf_p is defined for x >= 0")
    return gammainc(p / 2, x * x)


def normalization_integral(p: int) -> float:
    """c(p) int_0^inf r^{p-1} e^{-r^2} dr by quadrature; equals 1."""
    val, _ = quad(lambda r: r ** (p - 1) * np.exp(-r * r), 0, np.inf, epsabs=1e-13, epsrel=1e-13)
    return c_p(p) * val


def better_form(p: int, x: float) -> float:
    """c(p) int_1^inf x^p s^{p-1} e^{-s^2 x^2} ds by quadrature; equals 1 - erf_p(x) for x > 0."""
    if not x > 0:
        raise oc.DomainError("need x > 0")
    val, _ = quad(lambda s: s ** (p - 1) * np.exp(-s * s * x * x), 1, np.inf, epsabs=1e-14, epsrel=1e-12)
    return c_p(p) * x ** p * val


def rapid_expansion(x, terms: int = 3):
    """Asymptotic series of the complementary error function:
    e^{-x^2}/(sqrt(pi) x) sum_j (-1)^j (2j)! / (j! (2x)^{2j}).

    Returns (partial sum with ``terms`` terms, magnitude of the next term).
    """
    x = np.asarray(x, dtype=float)
    pref = np.exp(-x * x) / (np.sqrt(np.pi) * x)
    term = lambda j: (-1) ** j * factorial(2 * j) / (factorial(j) * (2 * x) ** (2 * j))
    total = sum(term(j) for j in range(terms))
    return pref * total, np.abs(pref * term(terms))


def moment_integral(p: int, m: int, tail: "OddTail | None" = None) -> float:
    """int |x|^m f_p(x) dx over the support region where f_p is non-trivial.

    For odd p the integral runs over the whole line (the tail decays), for
    even p over x >= 0.
    """
    pos, _ = quad(lambda x: x ** m * f_p(p, x), 0, np.inf, epsabs=1e-12, limit=200)
    if p % 2 == 0:
        return pos
    tail = tail if tail is not None else _default_tail(p)
    mid, _ = quad(lambda x: abs(x) ** m * f_p(p, x, tail), -tail.k, 0, epsabs=1e-12)
    neg, _ = quad(lambda x: abs(x) ** m * f_p(p, x, tail), -np.inf, -tail.k, epsabs=1e-12, limit=200)
    return pos + mid + neg


def f_p_even_closed(p: int, x):
    """sum_{i=0}^{(p-2)/2} c(p-2i)/2 x^{p-2-2i} e^{-x^2}; equals f_p for even p."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for i in range((p - 2) // 2 + 1):
        total = total + c_p(p - 2 * i) / 2 * x ** (p - 2 - 2 * i)
    return total * np.exp(-x * x)


def _deriv_chain(poly: np.ndarray, order: int) -> list[np.ndarray]:
    """Coefficients Q_j with (Q e^{-x^2})^{(j)} = Q_j e^{-x^2}, j = 0..order."""
    out = [np.asarray(poly, dtype=float)]
    two_x = np.array([0.0, 2.0])
    for _ in range(order):
        q = out[-1]
        out.append(P.polysub(P.polyder(q) if q.size > 1 else np.zeros(1), P.polymul(two_x, q)))
    return out


def _inner_branch_derivs(p: int, x: float, order: int) -> np.ndarray:
    """Derivatives 0..order of 1 + erf_p(-x) at x (p odd)."""
    vals = [1.0 + float(gammainc(p / 2, x * x))]
    if order:
        mono = np.zeros(p)
        mono[p - 1] = 1.0  # x^{p-1}
        chain = _deriv_chain(mono, order - 1)
        e = np.exp(-x * x)
        vals += [-c_p(p) * P.polyval(x, q) * e for q in chain]
    return np.array(vals)


@dataclass(frozen=True)
class OddTail:
    k: float
    l: int
    Q: np.ndarray  # ascending coefficients
    condition: float


def build_odd_tail(p: int, k: float = DEFAULT_TAIL[0], l: int = DEFAULT_TAIL[1]) -> OddTail:
    """Polynomial Q of degree l making Q(x)e^{-x^2} match 1 + erf_p(-x) to order l at -k."""
    if p % 2 == 0:
        raise oc.DomainError("the negative-axis tail is only used for odd p")
    if not k > 0 or l < 0:
        raise oc.DomainError("need k > 0 and l >= 0")
    x0 = -float(k)
    A = np.zeros((l + 1, l + 1))
    for i in range(l + 1):
        mono = np.zeros(i + 1)
        mono[i] = 1.0
        chain = _deriv_chain(mono, l)
        A[:, i] = [P.polyval(x0, q) for q in chain]
    rhs = _inner_branch_derivs(p, x0, l) * np.exp(x0 * x0)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e14:
        raise oc.NumericFailure(f"odd-tail matching system is singular (cond={cond:.3g})")
    return OddTail(float(k), int(l), np.linalg.solve(A, rhs), cond)


def tail_residuals(p: int, tail: OddTail) -> np.ndarray:
    """|d^j/dx^j (branch difference)| at -k, j = 0..l, relative to the inner branch."""
    x0 = -tail.k
    outer = np.array([P.polyval(x0, q) for q in _deriv_chain(tail.Q, tail.l)]) * np.exp(-x0 * x0)
    inner = _inner_branch_derivs(p, x0, tail.l)
    return np.abs(outer - inner) / np.maximum(1.0, np.abs(inner))


def f_p(p: int, x, tail: OddTail | None = None):
    """Regulator on the whole line; odd p uses the polynomial-Gaussian tail below -k."""
    x = np.asarray(x, dtype=float)
    pos = gammaincc(p / 2, x * x)
    if p % 2 == 0:
        return pos
    tail = tail if tail is not None else _default_tail(p)
    inner = 1.0 + gammainc(p / 2, x * x)
    outer = P.polyval(x, tail.Q) * np.exp(-x * x)
    return np.where(x >= 0, pos, np.where(x >= -tail.k, inner, outer))


def f_p_prime(p: int, x):
    """-c(p) x^{p-1} e^{-x^2}."""
    x = np.asarray(x, dtype=float)
    return -c_p(p) * x ** (p - 1) * np.exp(-x * x)


_TAILS: dict = {}


def _default_tail(p: int) -> OddTail:
    if p not in _TAILS:
        _TAILS[p] = build_odd_tail(p, *DEFAULT_TAIL)
    return _TAILS[p]


@dataclass(frozen=True)
class RegulatorFunction:
    """The pair (erf_p, f_p) with the odd-p tail parameters."""

    p: int
    tail: OddTail | None = None

    @classmethod
    def make(cls, p: int, k: float = DEFAULT_TAIL[0], l: int = DEFAULT_TAIL[1]):
        return cls(p, build_odd_tail(p, k, l) if p % 2 else None)

    def erf(self, x):
        return erf_p(self.p, x)

    def __call__(self, x):
        return f_p(self.p, x, self.tail)

    def prime(self, x):
        return f_p_prime(self.p, x)

    def sqrt(self, x):
        return np.sqrt(np.clip(self(x), 0.0, None))


# -- operators and scaling ---------------------------------------------------

def apply_regulator(model, t: float, which: str = "f", p: int | None = None):
    """h(t|D|) for h in {f, fprime, sqrt}; needs an invertible D."""
    if not t > 0:
        raise oc.DomainError("t must be positive")
    if not model.invertible_D:
        raise oc.DomainError("regulators act on |D| of an invertible (doubled) triple")
    p = model.p if p is None else p
    funcs = {
        "f": lambda x: gammaincc(p / 2, x * x),
        "fprime": lambda x: f_p_prime(p, x),
        "sqrt": lambda x: np.sqrt(gammaincc(p / 2, x * x)),
    }
    try:
        h = funcs[which]
    except KeyError:
        raise oc.DomainError(f"unknown regulator branch {which!r}") from None
    return model.abs_spectral(lambda x: h(t * x))


def scaling_quantity(model, quantity: str, a, t: float, p: int | None = None) -> float:
    """One of the three trace norms whose t-scaling the lemmas bound."""
    f = apply_regulator(model, t, "f", p)
    if quantity == "intable":
        X = f
    elif quantity == "commutator":
        X = oc.commutator(f, a)
    elif quantity == "chainrule_defect":
        fp = apply_regulator(model, t, "fprime", p)
        X = oc.commutator(f, a) - 0.5 * oc.anticommutator(fp, t * oc.commutator(model.abs_D, a))
    else:
        raise oc.DomainError(f"unknown quantity {quantity!r}")
    return oc.schatten_norm(X, 1)


def default_t_grid(model, t_min_factor: float = 8.0, t_max: float = 0.2, n: int = 12):
    lo = t_min_factor / model.N
    if not lo < t_max:
        raise oc.DomainError(f"empty t window [{lo:.3g}, {t_max}] at N={model.N}")
    return np.geomspace(lo, t_max, n)


def scaling_fit(model, quantity: str, a=None, t_grid=None, p: int | None = None) -> dict:
    """Least-squares slope and intercept of log(quantity) against log(t)."""
    t = default_t_grid(model) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.size < 2 or np.any(t <= 0) or np.ptp(np.log(t)) == 0:
        raise oc.DomainError("degenerate t grid")
    if a is None and quantity != "intable":
        raise oc.DomainError(f"{quantity} needs an algebra element")
    q = np.array([scaling_quantity(model, quantity, a, ti, p) for ti in t])
    if np.any(q <= 0):
        raise oc.NumericFailure(f"{quantity} vanished on the grid")
    slope, intercept = np.polyfit(np.log(t), np.log(q), 1)
    return {"slope": float(slope), "intercept": float(intercept), "t": t, "values": q}
