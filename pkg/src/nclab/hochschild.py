"""Hochschild chains and cochains over a model's generator algebra.

Chains are formal combinations of tensors of generator words, kept symbolic
(only identical words are collected) and resolved to matrices lazily.
Cochains are callables on lists of operators.  Cochains of the form
``a0 d(a1) ... d(an) T -> Phi(...)`` carry that structure explicitly
(``shape == "dphi"``) because the cup product with sigma and the S-hat
calculus act on this shape.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import operator_core as oc

_TOKEN = re.compile(r"[A-Za-z][0-9]*\*?")

Word = tuple  # tuple of generator symbols; () is the unit


def word(text) -> Word:
    """Tokenize ``"u*v"`` -> ("u*", "v"); ``"1"`` -> ()."""
    if isinstance(text, tuple):
        return text
    s = str(text).replace(" ", "")
    if s in ("", "1"):
        return ()
    toks = _TOKEN.findall(s)
    if "".join(toks) != s:
        raise ValueError(f"cannot tokenize word {text!r}")
    return tuple(toks)


def word_str(w: Word) -> str:
    return "".join(w) if w else "1"


@dataclass(frozen=True)
class HochschildChain:
    """sum_j coeff_j * (w_0 (x) ... (x) w_k)."""

    degree: int
    terms: tuple = ()

    @classmethod
    def of(cls, *terms) -> "HochschildChain":
        """Build from (coefficient, [word, ...]) pairs."""
        if not terms:
            raise ValueError("use HochschildChain(degree) for an empty chain")
        deg = len(terms[0][1]) - 1
        out = cls(deg)
        for coef, factors in terms:
            out = out + cls(deg, ((complex(coef), tuple(word(f) for f in factors)),))
        return out

    @classmethod
    def from_literal(cls, lit) -> "HochschildChain":
        """Parse a JSON literal ``[[coeff, [word, ...]], ...]``; coeff may be [re, im]."""
        terms = []
        for coef, factors in lit:
            if isinstance(coef, (list, tuple)):
                coef = complex(coef[0], coef[1])
            terms.append((coef, factors))
        return cls.of(*terms)

    def _check(self, other: "HochschildChain") -> None:
        if other.degree != self.degree:
            raise ValueError(f"degree mismatch {self.degree} vs {other.degree}")

    def __add__(self, other: "HochschildChain") -> "HochschildChain":
        self._check(other)
        acc: dict = {}
        for coef, fac in self.terms + other.terms:
            if len(fac) != self.degree + 1:
                raise ValueError("factor list length must equal degree + 1")
            acc[fac] = acc.get(fac, 0) + coef
        return HochschildChain(self.degree, tuple((c, f) for f, c in acc.items() if c != 0))

    def __rmul__(self, s) -> "HochschildChain":
        return HochschildChain(self.degree, tuple((s * c, f) for c, f in self.terms if s * c != 0))

    def __neg__(self):
        return (-1) * self

    def __sub__(self, other):
        return self + (-other)

    def resolve(self, model):
        """[(coefficient, [operators])] via the model's generator table."""
        cache: dict = {}
        out = []
        for coef, fac in self.terms:
            ops = []
            for w in fac:
                if w not in cache:
                    cache[w] = model.word(list(w))
                ops.append(cache[w])
            out.append((coef, ops))
        return out

    def max_word_length(self) -> int:
        return max((len(w) for _, fac in self.terms for w in fac), default=0)

    def to_literal(self) -> list:
        return [[[c.real, c.imag], [word_str(w) for w in fac]] for c, fac in self.terms]


def boundary(c: HochschildChain) -> HochschildChain:
    """b(a0 x ... x ak) = sum_i (-1)^i (... a_i a_{i+1} ...) + (-1)^k a_k a_0 x a_1 x ... ."""
    k = c.degree
    if k < 1:
        raise oc.DomainError("boundary needs degree >= 1")
    out = HochschildChain(k - 1)
    for coef, fac in c.terms:
        new = []
        for i in range(k):
            new.append(((-1) ** i * coef, fac[:i] + (fac[i] + fac[i + 1],) + fac[i + 2:]))
        new.append(((-1) ** k * coef, (fac[k] + fac[0],) + fac[1:k]))
        out = out + HochschildChain(k - 1, tuple(new))
    return out


# -- cochains -------------------------------------------------------------------

@dataclass(frozen=True)
class CochainFunctional:
    """An (n+1)-multilinear functional on operators.

    For ``shape == "dphi"`` the functional is ``Phi(a0 d(a1) ... d(an) T)``
    with ``derivations`` (one per slot) and ``T`` stored; ``shape == "cup"``
    marks a cup product with sigma of such a functional.
    """

    degree: int
    evaluator: Callable[[Sequence], complex]
    shape: str | None = None
    Phi: Callable | None = field(default=None, repr=False)
    derivations: tuple = field(default=(), repr=False)
    T: object = field(default=None, repr=False)
    base: "CochainFunctional | None" = field(default=None, repr=False)
    d: Callable | None = field(default=None, repr=False)

    def __call__(self, *args) -> complex:
        if len(args) == 1 and isinstance(args[0], (list, tuple)):
            args = tuple(args[0])
        if len(args) != self.degree + 1:
            raise ValueError(f"expected {self.degree + 1} arguments, got {len(args)}")
        return complex(self.evaluator(args))

    def form_value(self, omega):
        """Value on an operator-level form (dphi shape only): Phi(omega T)."""
        if self.shape != "dphi":
            raise oc.DomainError("form evaluation needs a dphi-shaped cochain")
        return complex(self.Phi(omega @ self.T if self.T is not None else omega))


def _derivation(d):
    """Accept a model (uses [D, .]) or a callable."""
    return d.d if hasattr(d, "d") else d


def dphi_cochain(degree: int, d, T=None, Phi: Callable = oc.trace) -> CochainFunctional:
    """phi(a0, ..., an) = Phi(a0 d(a1) ... d(an) T); ``d`` a derivation or a list of them."""
    if isinstance(d, (list, tuple)):
        ders = tuple(_derivation(x) for x in d)
        main = ders[0] if ders and all(x is ders[0] for x in ders) else None
    else:
        main = _derivation(d)
        ders = (main,) * degree
    if len(ders) != degree:
        raise ValueError("need one derivation per slot")

    def ev(args):
        X = args[0]
        for der, a in zip(ders, args[1:]):
            X = X @ der(a)
        return Phi(X @ T if T is not None else X)

    return CochainFunctional(degree, ev, "dphi", Phi, ders, T, d=main)


def coboundary(phi: CochainFunctional) -> CochainFunctional:
    """(b phi)(a0..a_{n+1}) = sum_i (-1)^i phi(..a_i a_{i+1}..) + (-1)^{n+1} phi(a_{n+1} a0, ..)."""
    n = phi.degree

    def ev(args):
        total = 0j
        for i in range(n + 1):
            total += (-1) ** i * phi(list(args[:i]) + [args[i] @ args[i + 1]] + list(args[i + 2:]))
        total += (-1) ** (n + 1) * phi([args[n + 1] @ args[0]] + list(args[1:n + 1]))
        return total

    return CochainFunctional(n + 1, ev)


def pair(phi: CochainFunctional, c: HochschildChain, model) -> complex:
    """<phi, c> = sum coeff * phi(factors)."""
    if not c.terms:
        return 0j
    if phi.degree != c.degree:
        raise ValueError(f"degree mismatch: cochain {phi.degree}, chain {c.degree}")
    return complex(sum(coef * phi(ops) for coef, ops in c.resolve(model)))


def is_cycle(c: HochschildChain, model, tol: float = 1e-10, probes: int = 3,
             seed: int = 0, L: int | None = None) -> bool:
    """bc = 0 on the interior, tested with random product functionals.

    Each probe pairs slot s with <w_s, x_s v_s> for random vectors supported
    on modes at distance >= L from the cutoff.
    """
    if c.degree == 0:
        return True
    bc = boundary(c)
    if not bc.terms:
        return True
    L = c.max_word_length() * 2 + 1 if L is None else L
    P = model.interior(L).diagonal().real > 0
    rng = np.random.default_rng(seed)
    resolved = bc.resolve(model)
    for _ in range(probes):
        vecs = []
        for _s in range(bc.degree + 1):
            v = (rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)) * P
            w = (rng.standard_normal(model.dim) + 1j * rng.standard_normal(model.dim)) * P
            vecs.append((w / np.linalg.norm(w), v / np.linalg.norm(v)))
        total, scale = 0j, 0.0
        for coef, ops in resolved:
            val = coef
            for (w, v), x in zip(vecs, ops):
                val *= np.vdot(w, x @ v)
            total += val
            scale += abs(coef)
        if abs(total) > tol * max(scale, 1.0):
            return False
    return True


# -- cup product with sigma and S-hat -------------------------------------------

def normalize_form(x0, items: list, coef: complex = 1.0):
    """Rewrite x0 * (item ...) into sum coef * x0' d(x1') ... d(xk').

    ``items`` holds ("d", X) for a differential and ("m", Y) for a plain
    algebra factor; plain factors are moved left with (dX) Y = d(XY) - X dY.
    """
    for j, (kind, Y) in enumerate(items):
        if kind != "m":
            continue
        if j == 0:
            return normalize_form(x0 @ Y, items[1:], coef)
        X = items[j - 1][1]
        head, tail = items[:j - 1], items[j + 1:]
        return (normalize_form(x0, head + [("d", X @ Y)] + tail, coef)
                + normalize_form(x0, head + [("m", X), ("d", Y)] + tail, -coef))
    return [(coef, [x0] + [X for _, X in items])]


def cup_sigma(phi: CochainFunctional) -> CochainFunctional:
    """(phi # sigma)(a0..a_{n+2}) = sum_{i=1}^{n+1} phi(a0 da1 .. (a_i a_{i+1}) .. da_{n+2} T).

    Each summand is a non-normalized form; it is brought to normal form and
    ``phi`` is evaluated on the resulting tuples, so the construction can be
    iterated.
    """
    if phi.shape not in ("dphi", "cup"):
        raise oc.DomainError("cup_sigma needs a cochain in a0 da1 ... dan T shape")
    n = phi.degree

    def ev(args):
        total = 0j
        for i in range(1, n + 2):
            items = [("d", a) for a in args[1:i]] + [("m", args[i] @ args[i + 1])]
            items += [("d", a) for a in args[i + 2:]]
            for coef, tup in normalize_form(args[0], items):
                total += coef * phi(tup)
        return total

    root = phi if phi.shape == "dphi" else phi.base
    return CochainFunctional(n + 2, ev, "cup", root.Phi, root.derivations, root.T, base=root, d=root.d)


def _zero_like(a):
    return sp.csr_matrix(a.shape, dtype=complex) if oc.is_sparse(a) else np.zeros(a.shape, dtype=complex)


def shat(i: int, args: Sequence, d) -> object:
    """S-hat^i(a0, ..., an) as an operator; ``d`` is a model or a derivation.

    S-hat^0 = a0 d(a1) ... d(an); S-hat(a0) = S-hat(a0, a1) = 0; higher powers
    follow the binomial recursion
    S^k(a) = sum_j C(k-1, j) sum_i S^j(a0..a_{i-1}) S^{k-j-1}(a_i a_{i+1}, a_{i+2}..a_n).
    """
    if i < 0:
        raise oc.DomainError("power must be >= 0")
    if not args:
        raise oc.DomainError("need at least one argument")
    der = _derivation(d)
    dcache: dict = {}

    def dd(a):
        key = id(a)
        if key not in dcache:
            dcache[key] = (a, der(a))
        return dcache[key][1]

    def rec(k, xs):
        n = len(xs) - 1
        if k == 0:
            X = xs[0]
            for a in xs[1:]:
                X = X @ dd(a)
            return X
        out = _zero_like(xs[0])
        for j in range(k):
            for pos in range(1, n):
                left = rec(j, xs[:pos])
                right = rec(k - j - 1, [xs[pos] @ xs[pos + 1]] + list(xs[pos + 2:]))
                out = out + comb(k - 1, j) * (left @ right)
        return out

    return rec(i, list(args))


def s_power(phi: CochainFunctional, i: int) -> CochainFunctional:
    """S^i phi by iterating the cup product with sigma."""
    out = phi
    for _ in range(i):
        out = cup_sigma(out)
    return out


def s_power_consistency(phi: CochainFunctional, i: int, args: Sequence) -> float:
    """|(S^i phi)(args) - Phi(S-hat^i(args) T)|."""
    if phi.shape != "dphi":
        raise oc.DomainError("s_power_consistency needs a dphi-shaped cochain")
    if phi.d is None:
        raise oc.DomainError("S-hat needs a single derivation d")
    if i == 0:
        return float(abs(phi(args) - phi.form_value(shat(0, args, phi.d))))
    lhs = s_power(phi, i)(list(args))
    rhs = phi.form_value(shat(i, args, phi.d))
    return float(abs(lhs - rhs))


def hochs_residual(phi: CochainFunctional, args: Sequence) -> float:
    """|(b phi)(a0..a_{k+1}) - (-1)^k Phi(a0 d1(a1)..dk(ak) [a_{k+1} T] - a_{k+1} a0 d1(a1)..dk(ak) T)|.

    The closed coboundary formula for a dphi-shaped cochain; ``[a T]`` means
    the product a_{k+1} T, not a commutator.
    """
    if phi.shape != "dphi":
        raise oc.DomainError("the coboundary formula is for dphi-shaped cochains")
    k = phi.degree
    if len(args) != k + 2:
        raise ValueError(f"expected {k + 2} arguments")
    X = args[0]
    for der, a in zip(phi.derivations, args[1:k + 1]):
        X = X @ der(a)
    last = args[k + 1]
    T = phi.T if phi.T is not None else oc.identity_like(last)
    rhs = (-1) ** k * (phi.Phi(X @ last @ T) - phi.Phi(last @ X @ T))
    lhs = coboundary(phi)(list(args))
    return float(abs(lhs - rhs))


def shat_result_residual(i: int, args: Sequence, d) -> float:
    """max |S^i(a0..an) - S^i(a0..a_{n-1}) d(an) - i S^{i-1}(a0..a_{n-2}) a_{n-1} a_n|, i >= 1."""
    if i < 1:
        raise oc.DomainError("the recursion is stated for i >= 1")
    if len(args) < 3:
        raise oc.DomainError("need n >= 2")
    der = _derivation(d)
    lhs = shat(i, args, d)
    rhs = shat(i, args[:-1], d) @ der(args[-1]) + i * (shat(i - 1, args[:-2], d) @ args[-2] @ args[-1])
    return oc.max_abs(lhs - rhs)
