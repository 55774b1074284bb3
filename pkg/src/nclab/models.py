"""Truncated spectral triples: circle (p=1), flat 2-torus (p=2) and the double.

Bases are ordered mode-major with the internal (copy, spinor) index running
fastest, so D, |D|, F and the grading are block diagonal with one small block
per mode, and generators are shifts between mode blocks.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import operator_core as oc

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _shift(K: int):
    """e_k -> e_{k+1} on K sites, dropping the overflow at the top."""
    return sp.diags([np.ones(K - 1)], [-1], shape=(K, K), dtype=complex, format="csr")


def parse_word(word, symbols) -> tuple[str, ...]:
    """Split a word such as ``"u*v*"`` or ``"u* v"`` into generator symbols.

    ``"1"`` (or an empty word) is the unit and parses to ``()``.
    """
    if isinstance(word, (tuple, list)):
        out = []
        for w in word:
            out.extend(parse_word(w, symbols))
        return tuple(out)
    text = str(word).replace(" ", "")
    if text in ("", "1"):
        return ()
    ordered = sorted(symbols, key=len, reverse=True)
    pattern = re.compile("|".join(re.escape(s) for s in ordered))
    out, pos = [], 0
    while pos < len(text):
        hit = pattern.match(text, pos)
        if hit is None:
            raise KeyError(f"cannot parse word {word!r} at position {pos}")
        out.append(hit.group(0))
        pos = hit.end()
    return tuple(out)


@dataclass(frozen=True, eq=False)
class SpectralTripleModel:
    """A truncated spectral triple with shift generators."""

    name: str
    N: int
    p: int
    generators: dict
    unitary: dict
    D: sp.csr_matrix
    grading: sp.csr_matrix | None
    invertible_D: bool
    modes: np.ndarray  # (num_modes, d) integer mode labels
    block: int  # size of the per-mode internal block
    mass: float = 0.0

    @property
    def dim(self) -> int:
        return self.D.shape[0]

    @property
    def even(self) -> bool:
        return self.grading is not None

    def identity(self):
        return sp.identity(self.dim, dtype=complex, format="csr")

    def word(self, w):
        """Resolve a generator word to its matrix (no compression)."""
        syms = parse_word(w, self.generators)
        out = self.identity()
        for s in syms:
            out = out @ self.generators[s]
        return out.tocsr()

    def interior(self, L: int):
        """Projection onto modes at distance >= L from the cutoff."""
        keep = np.abs(self.modes).max(axis=1) <= self.N - L
        return sp.diags(np.repeat(keep.astype(complex), self.block), format="csr")

    def d(self, a):
        """The derivation [D, a]."""
        return oc.commutator(self.D, a)

    @cached_property
    def abs_D(self):
        return oc.apply_function(self.D, np.abs)

    def spectral(self, f):
        """f(D) through block-wise functional calculus."""
        return oc.apply_function(self.D, f)

    def abs_spectral(self, f):
        """f(|D|)."""
        return oc.apply_function(self.D, lambda x: f(np.abs(x)))


def build_circle(N: int) -> SpectralTripleModel:
    """Circle: D e_n = n e_n on |n| <= N, u e_n = e_{n+1} (non-wrapping); odd, p=1."""
    if N < 8:
        raise oc.DomainError("circle truncation needs N >= 8")
    return _circle(N)


def _circle(N: int) -> SpectralTripleModel:
    ns = np.arange(-N, N + 1)
    u = _shift(2 * N + 1)
    return SpectralTripleModel(
        name="circle", N=N, p=1,
        generators={"u": u, "u*": oc.adjoint(u)},
        unitary={"u": True, "u*": True},
        D=sp.diags(ns.astype(complex), format="csr"),
        grading=None, invertible_D=False,
        modes=ns[:, None], block=1,
    )


def build_torus2(N: int) -> SpectralTripleModel:
    """Flat 2-torus: modes |n|,|m| <= N, D = n sigma_x + m sigma_y, grading sigma_z; p=2."""
    if N < 4:
        raise oc.DomainError("torus truncation needs N >= 4")
    K = 2 * N + 1
    ns = np.arange(-N, N + 1)
    nn, mm = np.meshgrid(ns, ns, indexing="ij")
    nn, mm = nn.ravel(), mm.ravel()
    blocks = nn[:, None, None] * SIGMA_X + mm[:, None, None] * SIGMA_Y
    D = oc.from_blocks(blocks).tocsr()
    I_K, I_2 = sp.identity(K, format="csr"), sp.identity(2, format="csr")
    u = sp.kron(sp.kron(_shift(K), I_K), I_2, format="csr")
    v = sp.kron(sp.kron(I_K, _shift(K)), I_2, format="csr")
    G = sp.kron(sp.identity(K * K), sp.csr_matrix(SIGMA_Z), format="csr")
    return SpectralTripleModel(
        name="torus2", N=N, p=2,
        generators={"u": u, "u*": oc.adjoint(u), "v": v, "v*": oc.adjoint(v)},
        unitary={k: True for k in ("u", "u*", "v", "v*")},
        D=D, grading=G.astype(complex), invertible_D=False,
        modes=np.stack([nn, mm], axis=1), block=2,
    )


MODEL_BUILDERS = {"circle": build_circle, "torus2": build_torus2}


def build_model(name: str, N: int) -> SpectralTripleModel:
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        raise oc.DomainError(f"unknown model {name!r}; known: {sorted(MODEL_BUILDERS)}") from None
    return builder(N)


@dataclass(frozen=True, eq=False)
class DoubledTriple(SpectralTripleModel):
    """The double (A, H+H, D_m), D_m = [[D, m], [m, -D]], a -> diag(a, 0)."""

    base: SpectralTripleModel | None = None
    J0: sp.csr_matrix | None = field(default=None, repr=False)
    J1: sp.csr_matrix | None = field(default=None, repr=False)

    def embed(self, a):
        """a -> [[a, 0], [0, 0]]."""
        return (self.J0 @ a @ self.J0.T).tocsr()

    def assemble(self, tl=None, tr=None, bl=None, br=None):
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for blk, L, R in ((tl, self.J0, self.J0), (tr, self.J0, self.J1),
                          (bl, self.J1, self.J0), (br, self.J1, self.J1)):
            if blk is not None:
                out = out + L @ sp.csr_matrix(blk) @ R.T
        return out.tocsr()

    def blocks(self, X):
        """(top-left, top-right, bottom-left, bottom-right) blocks of X."""
        X = sp.csr_matrix(X)
        J0, J1 = self.J0, self.J1
        return tuple((L.T @ X @ R).tocsr() for L, R in ((J0, J0), (J0, J1), (J1, J0), (J1, J1)))

    @cached_property
    def unit(self):
        """The represented unit diag(1, 0)."""
        return self.embed(self.base.identity())


def double(t: SpectralTripleModel, m: float) -> DoubledTriple:
    """Mass-deformed double of a triple; always invertible."""
    if not m > 0:
        raise oc.DomainError("the mass m must be positive")
    s = t.block
    M = t.dim // s
    I_M = sp.identity(M, format="csr")
    e0 = sp.csr_matrix(np.vstack([np.eye(s), np.zeros((s, s))]))
    e1 = sp.csr_matrix(np.vstack([np.zeros((s, s)), np.eye(s)]))
    J0 = sp.kron(I_M, e0, format="csr").astype(complex)
    J1 = sp.kron(I_M, e1, format="csr").astype(complex)
    D = t.D
    Dm = (J0 @ D @ J0.T - J1 @ D @ J1.T + m * (J0 @ J1.T + J1 @ J0.T)).tocsr()
    G = None
    if t.grading is not None:
        G = (J0 @ t.grading @ J0.T - J1 @ t.grading @ J1.T).tocsr()
    gens = {k: (J0 @ g @ J0.T).tocsr() for k, g in t.generators.items()}
    return DoubledTriple(
        name=f"{t.name}-double", N=t.N, p=t.p, generators=gens, unitary=dict(t.unitary),
        D=Dm, grading=G, invertible_D=True, modes=t.modes, block=2 * s, mass=float(m),
        base=t, J0=J0, J1=J1,
    )


def F_of(t: SpectralTripleModel):
    """F = D |D|^{-1}; needs invertible D."""
    if not t.invertible_D:
        raise oc.DomainError("F = D|D|^-1 needs an invertible D; build the double first")
    return t.spectral(np.sign)


def F_pre_of(t: SpectralTripleModel):
    """F_D = D (1 + D^2)^{-1/2}."""
    return t.spectral(lambda x: x / np.sqrt(1 + x * x))


def delta_k(t: SpectralTripleModel, a, k: int):
    """k-fold commutator with |D|."""
    if k < 0:
        raise oc.DomainError("k must be >= 0")
    out = a
    for _ in range(k):
        out = oc.commutator(t.abs_D, out)
    return out
