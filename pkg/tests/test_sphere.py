import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from rieszlab import circle, rw, sphere
from rieszlab.harmonics import build_basis, decompose, sphere_energy_sum
from rieszlab.poly import MonomialPoly, sphere_inner_product, uniform_sphere
from rieszlab.sphere import (RieszFactor, RieszTriple, bounds, dimension_bounds,
                             disintegration_check, factored_density, gamma_mass_bound,
                             gamma_projection_mass, gamma_set, mc_energy, monomial_triple,
                             partial_product, slice_spec, spectrum_report, triple_from_json,
                             validate)

z1 = MonomialPoly.coordinate(0)
z2 = MonomialPoly.coordinate(1)

LONG_J = [3 ** k for k in range(1, 51)]


def random_triple(seed, J=(1, 3, 9), scale=0.9):
    """Factors with random complex coefficients, normalised to certified sup one."""
    rng = np.random.default_rng(seed)
    factors = []
    for j in J:
        c = rng.standard_normal(j + 1) + 1j * rng.standard_normal(j + 1)
        c = c / rw.sup_norm_certify(c)
        a = scale * rng.uniform(0.2, 1) * np.exp(2j * np.pi * rng.uniform())
        factors.append(RieszFactor(j, a, c))
    return RieszTriple(factors, 0.1)


def z1_triple(a):
    return RieszTriple([RieszFactor(1, a, [0, 1])], 0.5)


def full_energy_oracle(f, t):
    """|mu_00|^2 + sum_j j^(t-3) sum_{p+q=j} sum_b |<f, b>|^2, with the inner
    products taken by exact quadrature against each basis element."""
    deg = f.degree()
    total = 0.0
    for p in range(deg + 1):
        for q in range(deg + 1 - p):
            mass = sum(abs(oracles.sphere_inner(f, b.poly)) ** 2 for b in build_basis(p, q).basis)
            total += mass if p + q == 0 else (p + q) ** (t - 3) * mass
    return total


# ------------------------------------------------------------------ validate

def test_validate_monomial_triple():
    rep = validate(monomial_triple([1, 3], [0.9, 0.9]))
    assert rep.valid
    assert rep.per_factor[0]["l2_norm"] == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    for pf in rep.per_factor:
        assert pf["sup_bound"] <= 1 + 1e-6


def test_validate_lacunarity():
    rep = validate(monomial_triple([1, 2], [0.5, 0.5]))
    assert rep.kinds() == ["lacunarity"]


def test_validate_coefficient_boundary():
    rep = validate(monomial_triple([1, 3], [1.0, 0.5]))
    assert rep.kinds() == ["coefficient"]
    assert rep.violations[0].index == 0


def test_validate_sup_and_l2_and_delta():
    fac = RieszFactor(1, 0.5, [0, 2])
    assert "sup_norm" in validate(RieszTriple([fac], 0.5)).kinds()
    assert validate(monomial_triple([1], [0.5], delta=0.9)).kinds() == ["l2_norm"]
    assert validate(monomial_triple([1], [0.5], delta=1.0)).kinds() == ["delta", "l2_norm"]


def test_validate_reports_each_violation():
    tr = RieszTriple([RieszFactor(1, 1.2, [0, 1]), RieszFactor(2, 0.3, rw.balanced_monomial(2))],
                     0.5)
    assert validate(tr).kinds() == ["coefficient", "lacunarity"]


def test_factor_rejects_wrong_length():
    with pytest.raises(ValueError):
        RieszFactor(3, 0.5, [1, 0])


# ---------------------------------------------------------- partial products

def test_partial_product_k0():
    pp = partial_product(monomial_triple([1, 3], [0.9, 0.9]), 0)
    assert pp.poly.allclose(MonomialPoly.constant(1.0), atol=0)


def test_partial_product_single_z1_factor():
    a = 0.7
    pp = partial_product(z1_triple(a), 1)
    want = MonomialPoly.constant(1.0) + (z1 + z1.conj()) * (a / 2)
    assert pp.poly.allclose(want, atol=1e-15)
    assert pp.mass() == pytest.approx(1, abs=1e-15)
    assert sphere_inner_product(pp.poly, pp.poly).real == pytest.approx(1 + a * a / 4, abs=1e-14)


def test_partial_product_range():
    with pytest.raises(ValueError):
        partial_product(z1_triple(0.5), 2)


@pytest.mark.parametrize("seed", range(3))
def test_partial_product_matches_factored_form(seed):
    tr = random_triple(seed)
    pp = partial_product(tr, 3)
    z = uniform_sphere(100, np.random.default_rng(seed))
    direct = oracles.dense_eval(pp.poly, z)
    want = np.ones(100)
    for f in tr.factors:
        rz = oracles.dense_eval(f.R.poly, z)
        want *= 1 + (f.a * rz).real
    assert np.max(np.abs(direct - want)) < 1e-9
    assert np.allclose(factored_density(tr, 3, z), want, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_partial_product_invariants(seed):
    tr = random_triple(seed)
    for K in range(4):
        pp = partial_product(tr, K)
        assert pp.mass() == pytest.approx(1, abs=1e-10)
        assert pp.is_real()
    z = uniform_sphere(10_000, np.random.default_rng(seed))
    assert pp.density(z).min() >= -1e-9


# -------------------------------------------------------------------- spectra

def test_gamma_set_examples():
    assert sorted(c.gamma for c in gamma_set([3], 1)) == [-3, 3]
    assert sorted(c.gamma for c in gamma_set([3, 9], 2)) == [-12, -9, -6, 6, 9, 12]
    g4 = [c.gamma for c in gamma_set([3, 9, 27, 81], 4)]
    assert len(g4) == 54 == len(set(g4))


@given(st.lists(st.integers(0, 4), min_size=1, max_size=6), st.data())
def test_gamma_set_properties(steps, data):
    J = [1 + steps[0]]
    for s in steps[1:]:
        J.append(3 * J[-1] + s)
    k = data.draw(st.integers(1, len(J)))
    gs = gamma_set(J, k)
    vals = [c.gamma for c in gs]
    assert len(vals) == 2 * 3 ** (k - 1) == len(set(vals))
    below = sum(J[:k - 1])
    for v in vals:
        assert J[k - 1] - below <= abs(v) <= J[k - 1] + below
    assert J[k - 1] - below >= J[k - 1] / 2


def test_gamma_mass_single_factor():
    a = 0.6
    tr = z1_triple(a)
    assert gamma_projection_mass(tr, (1,)) == pytest.approx((a / 2) ** 2 / 2, abs=1e-15)
    assert gamma_projection_mass(z1_triple(0.0), (1,)) == 0


def test_gamma_mass_two_monomials_exact():
    tr = monomial_triple([1, 3], [0.9, 0.5j])
    f1, f2 = tr.factors
    term = (f1.R.poly * (f1.a / 2)).conj() * f2.R.poly * (f2.a / 2)
    want = oracles.sphere_inner(term, term).real
    assert gamma_projection_mass(tr, (-1, 1)) == pytest.approx(want, abs=1e-14)


@pytest.mark.parametrize("seed", range(3))
def test_gamma_mass_bound_and_spectrum_agreement(seed):
    tr = random_triple(seed)
    dec = decompose(partial_product(tr, 3).poly)
    by_diff = dec.by_difference()
    for k in range(1, 4):
        for c in gamma_set(tr.J, k):
            m = gamma_projection_mass(tr, c)
            assert m <= gamma_mass_bound(tr, c) + 1e-12
            assert m == pytest.approx(by_diff.get(c.gamma, 0.0), abs=1e-9)


def test_gamma_term_rejects_zero_top():
    with pytest.raises(ValueError):
        gamma_projection_mass(z1_triple(0.5), (0,))


@pytest.mark.parametrize("seed", range(3))
def test_spectrum_structure(seed):
    tr = random_triple(seed)
    rep, dec = spectrum_report(partial_product(tr, 3))
    assert rep["off_structure_mass"] < 1e-10
    assert rep["parseval_error"] < 1e-9
    assert rep["observed_band"] >= sphere.banded_epsilon(tr.J) - 1e-12


def test_banded_epsilon_example():
    # j_1 = 1: (1 - 0)/1 = 1; j_2 = 3: (3 - 1)/4 = 1/2; j_3 = 9: (9 - 4)/13
    assert sphere.banded_epsilon([1, 3, 9]) == pytest.approx(5 / 13)


def test_allowed_differences():
    assert sphere.allowed_differences([1, 3], 2) == {0, 1, -1, 2, 3, 4, -2, -3, -4}


# --------------------------------------------------------------------- bounds

def test_bounds_zero_coefficients():
    rep = dimension_bounds([1, 3, 9, 27], [0, 0, 0, 0])
    assert rep.alpha0 == 0
    assert rep.lower_bound == 3


def test_bounds_boundary_family():
    rep = dimension_bounds(LONG_J, [1.0] * 50, K=50, window=10)
    assert rep.energy_lb == pytest.approx(3 - math.log(1.5) / math.log(3), abs=0.01)
    assert rep.energy_lb == rep.hausdorff_lb
    assert rep.aw22_floor == 2


@given(st.lists(st.floats(0, 0.999), min_size=12, max_size=12))
def test_bounds_floor(a):
    rep = dimension_bounds([3 ** k for k in range(1, 13)], a, window=4)
    assert rep.lower_bound >= 2
    assert rep.lower_bound == max(rep.energy_lb, rep.aw22_floor, rep.simplified_lb)


def test_bounds_from_triple():
    tr = monomial_triple([1, 3, 9], [0.5, 0.5, 0.5])
    assert bounds(tr).to_json() == dimension_bounds([1, 3, 9], [0.5] * 3).to_json()


# ------------------------------------------------------------------- energies

def test_energy_constant_matches_quadrature():
    for t in (0.3, 1.0, 2.0, 2.7):
        assert sphere.energy_constant(t) == pytest.approx(oracles.sphere_pair_distance_mean(t),
                                                          rel=1e-8)


def test_mc_uniform_lebesgue_t1():
    one = partial_product(z1_triple(0.5), 0)
    est = mc_energy(one, 1.0, 200_000, seed=3, method="uniform")
    assert abs(est.estimate - oracles.sphere_pair_distance_mean(1.0)) < 3 * est.stderr


def test_mc_importance_lebesgue_is_exact():
    one = partial_product(z1_triple(0.5), 0)
    est = mc_energy(one, 2.0, 1000, seed=0)
    assert est.estimate == pytest.approx(oracles.sphere_pair_distance_mean(2.0), rel=1e-8)
    assert est.stderr < 1e-10


def test_mc_small_t_is_mass_squared():
    pp = partial_product(monomial_triple([1, 3], [0.9, 0.9]), 2)
    est = mc_energy(pp, 1e-6, 100_000, seed=4, method="uniform")
    assert abs(est.estimate - 1) < 3 * est.stderr


def test_mc_methods_agree():
    pp = partial_product(monomial_triple([1, 3], [0.9, 0.9]), 2)
    a = mc_energy(pp, 1.0, 200_000, seed=1)
    b = mc_energy(pp, 1.0, 200_000, seed=2, method="uniform")
    assert abs(a.estimate - b.estimate) < 4 * math.hypot(a.stderr, b.stderr)


def test_mc_deterministic():
    pp = partial_product(monomial_triple([1, 3], [0.9, 0.9]), 2)
    assert mc_energy(pp, 1.5, 50_000, seed=9) == mc_energy(pp, 1.5, 50_000, seed=9)


def test_mc_rejects_t():
    pp = partial_product(z1_triple(0.5), 1)
    for t in (0.0, 3.0, 3.5):
        with pytest.raises(ValueError):
            mc_energy(pp, t, 10, seed=0)


def test_energy_sum_matches_spectral_oracle():
    pp = partial_product(monomial_triple([1, 3], [0.9, 0.7]), 2)
    dec = decompose(pp.poly)
    for t in (0.5, 1.5, 2.5):
        assert sphere_energy_sum(dec, t) == pytest.approx(full_energy_oracle(pp.poly, t),
                                                          abs=1e-10)


def test_energy_upper_shadow():
    al = circle.alpha0(LONG_J, [0.9] * 50, 50, 10)
    tr = monomial_triple([1, 3, 9, 27], [0.9] * 4)
    for gap in (0.05, 0.1, 0.3):
        t = 3 - (al + gap)
        vals = [sphere_energy_sum(decompose(partial_product(tr, K).poly), t) for K in range(5)]
        assert max(vals) <= 2 * vals[2]


# --------------------------------------------------------------------- slices

def test_slice_spec_examples():
    tr = z1_triple(0.6)
    assert slice_spec(tr, [1, 0]).c[0] == pytest.approx(0.6)
    assert slice_spec(tr, [0, 1]).c[0] == 0
    with pytest.raises(ValueError):
        slice_spec(tr, [1, 1])


@pytest.mark.parametrize("seed", range(3))
def test_slice_phase_rotation(seed):
    tr = random_triple(seed)
    rng = np.random.default_rng(seed)
    xi = uniform_sphere(1, rng)[0]
    psi = rng.uniform(0, 2 * np.pi)
    lam = np.exp(1j * psi)
    s0 = slice_spec(tr, xi)
    s1 = slice_spec(tr, lam * xi)
    for j, c0, c1 in zip(tr.J, s0.c, s1.c):
        assert abs(c1 - c0 * lam ** j) < 1e-12
        assert abs(c1) <= 0.9 + 1e-9
    w = np.exp(2j * np.pi * np.arange(64) / 64)
    p0 = circle.partial_product(s0, 3)
    p1 = circle.partial_product(s1, 3)
    assert np.allclose(p1(w), p0(lam * w), atol=1e-12)
    assert np.allclose(p0(w).real, factored_density(tr, 3, w[:, None] * xi[None, :]),
                       atol=1e-12)


def test_disintegration_constant_is_exact():
    tr = monomial_triple([1, 3], [0.9, 0.9])
    res = disintegration_check(tr, 2, MonomialPoly.constant(1.0), 1000, seed=0)
    assert abs(res.lhs - 1) < 1e-12 and abs(res.rhs - 1) < 1e-12


@pytest.mark.parametrize("f", [z1 * z1.conj(), z1.conj(), z1.conj() ** 2 * z2.conj(),
                               z2 * z1.conj(), z1 * z2.conj() ** 2],
                         ids=["abs_z1_sq", "z1bar", "z1bar2_z2bar", "z2_z1bar", "z1_z2bar2"])
def test_disintegration_monomials(f):
    tr = random_triple(5, J=(1, 3))
    res = disintegration_check(tr, 2, f, 10_000, seed=1)
    lhs = oracles.sphere_inner(partial_product(tr, 2).poly * f, MonomialPoly.constant(1.0))
    assert abs(res.lhs - lhs) < 1e-12
    assert res.discrepancy <= 4 * res.stderr


def test_disintegration_disjoint_spectrum():
    tr = monomial_triple([1, 3], [0.9, 0.9])
    f = z1.conj() ** 2
    res = disintegration_check(tr, 2, f, 10_000, seed=2)
    assert res.lhs == 0
    assert abs(res.rhs) <= 4 * res.stderr + 1e-15


# ---------------------------------------------------------------------- JSON

def test_triple_json_forms(tmp_path):
    cert = rw.make_certificate(rw.binomial_profile(3))
    (tmp_path / "r3.json").write_text(json.dumps(cert.to_json()))
    obj = {"delta": 0.3, "factors": [
        {"j": 1, "a": [0.5, 0], "R": {"coeffs": [[0, 0], [1, 0]]}},
        {"j": 3, "a": [0, 0.5], "R": {"rw_certificate": "r3.json"}},
        {"j": 9, "a": [0.2, 0.1], "R": {"monomial_seed": 4}},
        {"j": 27, "a": [0.2, 0], "R": {"balanced_monomial": True}},
        {"j": 81, "a": [0.2, 0], "R": {"terms": [{"exponents": [40, 41, 0, 0], "re": 1, "im": 0}]}},
    ]}
    tr = triple_from_json(obj, base_dir=tmp_path)
    assert tr.J == (1, 3, 9, 27, 81)
    assert np.allclose(tr.factors[1].coeffs, cert.coeffs)
    assert np.allclose(tr.factors[2].coeffs, rw.monomial_from_seed(9, 4))
    assert tr.factors[4].coeffs[40] == 1
    back = triple_from_json(tr.to_json())
    assert all(np.allclose(f.coeffs, g.coeffs) for f, g in zip(tr.factors, back.factors))


def test_triple_json_errors(tmp_path):
    cert = rw.make_certificate(rw.binomial_profile(2))
    (tmp_path / "r2.json").write_text(json.dumps(cert.to_json()))
    bad_degree = {"delta": 0.5, "factors": [{"j": 3, "a": [0.5, 0],
                                             "R": {"rw_certificate": "r2.json"}}]}
    with pytest.raises(ValueError):
        triple_from_json(bad_degree, base_dir=tmp_path)
    with pytest.raises(ValueError):
        triple_from_json({"delta": 0.5, "factors": [{"j": 1, "a": [0, 0], "R": {"x": 1}}]})
    with pytest.raises(ValueError):
        triple_from_json({"delta": 0.5, "factors": [
            {"j": 2, "a": [0, 0], "R": {"terms": [{"exponents": [1, 0, 0, 0], "re": 1, "im": 0}]}}]})
