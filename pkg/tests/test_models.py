import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nclab import models as md
from nclab import operator_core as oc


def test_circle_D_is_mode_number():
    t = md.build_circle(8)
    assert np.allclose(t.D.diagonal().real, np.arange(-8, 9))
    assert t.p == 1 and not t.even and not t.invertible_D


def test_circle_rejects_small_N():
    with pytest.raises(oc.DomainError):
        md.build_circle(2)


def test_circle_commutator_D_u_equals_u_off_edge():
    t = md.build_circle(16)
    u = t.word("u").toarray()
    C = t.d(t.word("u")).toarray()
    # entrywise: (Du - uD)_{n+1,n} = (n+1) - n = 1 wherever u has an entry
    assert np.allclose(C, u)
    # the edge column n = N is zero in both (overflow dropped)
    assert np.all(u[:, -1] == 0)


def test_circle_heat_trace_direct_sum():
    t = md.build_circle(100)
    val = oc.trace(t.spectral(lambda x: np.exp(-0.01 * x * x))).real
    ref = sum(np.exp(-0.01 * n * n) for n in range(-100, 101))
    assert val == pytest.approx(ref, abs=1e-10)
    assert val == pytest.approx(17.7245, abs=1e-4)


def test_torus_structure():
    t = md.build_torus2(5)
    assert t.p == 2 and t.even
    D2 = (t.D @ t.D).toarray()
    n2 = (t.modes ** 2).sum(axis=1)
    assert np.allclose(D2, np.diag(np.repeat(n2, 2)), atol=1e-12)
    G = t.grading
    assert oc.max_abs(G @ G - t.identity()) < 1e-12
    assert oc.max_abs(G - oc.adjoint(G)) == 0
    assert oc.max_abs(G @ t.D + t.D @ G) < 1e-12
    for g in t.generators.values():
        assert oc.max_abs(oc.commutator(G, g)) == 0


def test_torus_generators_commute_on_interior():
    t = md.build_torus2(6)
    P = t.interior(1)
    X = t.word("v") @ t.word("u") - t.word("u") @ t.word("v")
    assert oc.max_abs(P @ X @ P) == 0


def test_torus_rejects_small_N():
    with pytest.raises(oc.DomainError):
        md.build_torus2(3)


def test_double_rejects_nonpositive_mass():
    with pytest.raises(oc.DomainError):
        md.double(md.build_circle(8), 0.0)


@pytest.mark.parametrize("name,N", [("circle", 16), ("torus2", 5)])
@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
def test_double_square_and_F(name, N, m):
    t = md.build_model(name, N)
    dm = md.double(t, m)
    D2 = t.D @ t.D + m * m * t.identity()
    ref = dm.assemble(tl=D2, br=D2)
    assert oc.max_abs(dm.D @ dm.D - ref) < 1e-12
    F = md.F_of(dm)
    assert oc.max_abs(F @ F - dm.identity()) < 1e-10
    assert oc.mu(dm.D)[-1] >= m - 1e-10
    if t.even:
        assert oc.max_abs(dm.grading @ dm.D + dm.D @ dm.grading) < 1e-12


def test_double_min_singular_value_circle():
    dm = md.double(md.build_circle(16), 1.0)
    ev = np.linalg.eigvalsh(dm.D.toarray())
    ref = np.sort(np.concatenate([s * np.sqrt(np.arange(-16, 17) ** 2 + 1.0) for s in (1, -1)]))
    assert np.allclose(ev, ref)
    assert oc.mu(dm.D)[-1] == pytest.approx(1.0)


def test_double_embedding_blocks():
    t = md.build_circle(8)
    dm = md.double(t, 1.0)
    u = t.word("u")
    tl, tr, bl, br = dm.blocks(dm.embed(u))
    assert oc.max_abs(tl - u) == 0
    assert all(oc.max_abs(b) == 0 for b in (tr, bl, br))
    assert oc.max_abs(dm.word("u") - dm.embed(u)) == 0


def test_F_of_examples():
    t = md.build_circle(8)
    with pytest.raises(oc.DomainError):
        md.F_of(t)
    FD = md.F_pre_of(t)
    assert np.allclose(FD.diagonal().real, np.arange(-8, 9) / np.sqrt(1 + np.arange(-8, 9) ** 2.0))
    # F = D|D|^{-1} on the small example diag(-1, 2)
    assert np.allclose(oc.apply_function(np.diag([-1.0, 2.0]), np.sign), np.diag([-1, 1]))


@pytest.mark.parametrize("name,N", [("circle", 32), ("torus2", 6)])
def test_F_pre_defect_is_resolvent(name, N):
    t = md.build_model(name, N)
    FD = md.F_pre_of(t)
    R = t.spectral(lambda x: 1 / (1 + x * x))
    assert oc.max_abs(t.identity() - FD @ FD - R) < 1e-10


def test_F_pre_defect_trace_norm_doubled_circle():
    dm = md.double(md.build_circle(64), 1.0)
    FD = md.F_pre_of(dm)
    val = oc.schatten_norm(dm.identity() - FD @ FD, 1)
    # |D_1|^2 = n^2 + 1 with multiplicity 2
    ref = sum(2 / (2 + n * n) for n in range(-64, 65))
    assert val == pytest.approx(ref, rel=1e-10)


def test_delta_examples():
    t = md.build_circle(32)
    u = t.word("u")
    assert oc.max_abs(md.delta_k(t, u, 0) - u) == 0
    d1 = md.delta_k(t, u, 1).toarray()
    ns = np.arange(-32, 33)
    ref = np.zeros_like(d1)
    for j, n in enumerate(ns[:-1]):
        ref[j + 1, j] = abs(n + 1) - abs(n)
    assert np.allclose(d1, ref)
    assert oc.opnorm(md.delta_k(t, u, 1)) == pytest.approx(1.0)
    with pytest.raises(oc.DomainError):
        md.delta_k(t, u, -1)


def test_delta_squared_norm_uniform_in_N():
    # entries (|n+1| - |n|)^2 are all 0 or 1, so the norm is 1 for every N
    norms = [oc.opnorm(md.delta_k(md.build_circle(N), md.build_circle(N).word("u"), 2)) for N in (16, 32, 64)]
    assert np.allclose(norms, 1.0)


def shift_norm(X):
    # X*X has zero net shift, hence is block diagonal
    return np.sqrt(oc.opnorm(oc.adjoint(X) @ X))


@pytest.mark.parametrize("name,N0", [("circle", 16), ("torus2", 4)])
def test_qc_norms_uniform_in_N(name, N0):
    for k in (1, 2):
        vals_a, vals_da = [], []
        for N in (N0, 2 * N0, 4 * N0):
            t = md.build_model(name, N)
            a = t.word("u")
            vals_a.append(shift_norm(md.delta_k(t, a, k)))
            vals_da.append(shift_norm(md.delta_k(t, t.d(a), k)))
        for v in (vals_a, vals_da):
            assert (max(v) - min(v)) <= 0.01 * max(v)


@pytest.mark.parametrize("name,N0", [("circle", 64), ("torus2", 8)])
def test_resolvent_weak_norm_bounded_in_N(name, N0):
    vals = []
    for N in (N0, 2 * N0, 4 * N0):
        t = md.build_model(name, N)
        R = t.spectral(lambda x: (1 + x * x) ** -0.5)
        vals.append(oc.norm_p_infty(R, t.p))
    assert max(vals) < 1.1 * min(vals)


def test_parse_word():
    syms = {"u": 0, "u*": 0, "v": 0, "v*": 0}
    assert md.parse_word("u*v*", syms) == ("u*", "v*")
    assert md.parse_word("1", syms) == ()
    assert md.parse_word(["u", "v"], syms) == ("u", "v")
    with pytest.raises(KeyError):
        md.parse_word("w", syms)


def test_unknown_model():
    with pytest.raises(oc.DomainError):
        md.build_model("sphere", 8)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.sampled_from(["u", "u*"]), min_size=1, max_size=4), st.integers(8, 24))
def test_word_matches_product(syms, N):
    t = md.build_circle(N)
    wordlist = "".join(syms)
    assert md.parse_word(wordlist, t.generators) == tuple(syms)
    ref = np.eye(t.dim)
    for s in syms:
        ref = ref @ t.generators[s].toarray()
    assert np.allclose(t.word(wordlist).toarray(), ref)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 5.0), st.integers(8, 40))
def test_double_invertible_property(m, N):
    dm = md.double(md.build_circle(N), m)
    assert oc.mu(dm.D)[-1] >= m - 1e-10
    assert oc.is_hermitian(dm.D)
