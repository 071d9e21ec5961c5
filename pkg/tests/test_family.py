"""The C^2 -> R^6 family: explicit solutions, isotropic pairing, self-intersections."""

import numpy as np
import pytest

from conftest import random_family_inputs
from pluriminimal.exact import GaussRational
from pluriminimal.expr import HoloExpr, parse, to_polynomial
from pluriminimal.family import (
    FamilyInput,
    IsotropicPairs,
    RelationError,
    SixFunctions,
    cauchy_riemann_residual,
    certified_distance,
    family_data,
    self_intersect,
    solve_family,
    split_pairs,
    validate_pairs,
)
from pluriminimal.weierstrass import (
    check_closed,
    check_conformal,
    check_rank,
    conformality,
    immerse,
    immerse_batch,
    sample_polydisk,
)

Z = sample_polydisk(np.random.default_rng(0), 100, 2)


def poly(e):
    return {k: v for k, v in to_polynomial(e).items()}


def test_furuhata_functions_exact():
    six = solve_family(FamilyInput.parse("z1^3", "0"))
    assert poly(six.P[1]) == {(0, 2): GaussRational.coerce(-1.5)}
    assert poly(six.P[3]) == {(0, 3): GaussRational.coerce(-0.5)}
    assert poly(six.P[5]) == {(1, 2): GaussRational.coerce(-1.5)}
    assert str(six.P[1]) == "-1.5*z2^2"


def test_trivial_functions_vanish():
    six = solve_family(FamilyInput.parse("0", "0"))
    assert all(six.P[i].is_zero() for i in (1, 3, 5))


def test_quadratic_pair():
    six = solve_family(FamilyInput.parse("z1^2", "z1^2"))
    want = parse("-z1 - z2", 2)
    assert to_polynomial(six.P[1]) == to_polynomial(want)
    assert np.max(np.abs(six.system_residuals(Z))) < 1e-12


@pytest.mark.parametrize("inp", random_family_inputs(seed=3, count=5), ids=lambda _: "poly")
def test_random_system_and_relation(inp):
    six = solve_family(inp)
    assert np.max(np.abs(six.system_residuals(Z))) < 1e-11
    assert six.relation_residual(Z) < 1e-11


def test_transcendental_system():
    six = solve_family(FamilyInput.parse("exp(z1)", "sin(z1)"))
    assert np.max(np.abs(six.system_residuals(Z))) < 1e-11


def test_split_pairs_passes_conditions():
    for f, g in [("z1^3", "0"), ("0", "0"), ("exp(z1)", "sin(z1)")]:
        data = family_data(f, g)
        assert check_closed(data, Z).passed
        assert check_conformal(data, Z).passed
        assert check_rank(data, Z).passed


def test_trivial_is_realified_graph(trivial):
    for z in Z[:5]:
        x, y = z
        w = np.array([x * y, x, y])
        want = np.stack([w.real, w.imag], axis=1).ravel()
        np.testing.assert_allclose(immerse(trivial, z), want, atol=1e-13)
        assert conformality(trivial, z).residual == 0


def test_sign_flipped_pairing_rejected():
    """Pairing (P1, P2) instead of (P1, -P2) leaves 8 dP1.dP2 in the tensor."""
    six = solve_family(FamilyInput.parse("z1^3", "0"))
    P = six.P
    bad = IsotropicPairs(((P[0], P[1]), (P[2], P[3]), (P[4], P[5])))
    with pytest.raises(RelationError):
        validate_pairs(bad)
    z = np.array([0.7 + 0.2j, -0.4 + 1.1j])
    res = conformality(bad.data(), z).entries
    g1 = np.array([z[1], z[0]])
    g2 = np.array([0, -3 * z[1]])
    sym = 0.5 * (np.outer(g1, g2) + np.outer(g2, g1))
    np.testing.assert_allclose(res, 8 * sym, atol=1e-12)


def test_split_rejects_non_relation():
    x, y = HoloExpr.var(0, 2), HoloExpr.var(1, 2)
    six = SixFunctions((x * y, x, x, y, y, x))
    with pytest.raises(RelationError):
        split_pairs(six)


def test_family_input_json():
    inp = FamilyInput.parse("z1^3", "exp(z1)")
    assert FamilyInput.from_json(inp.to_json()) == inp
    with pytest.raises(Exception):
        FamilyInput.parse("z2", "0")


def test_not_holomorphic_for_standard_pairing(furuhata):
    assert cauchy_riemann_residual(furuhata, np.array([0.8 - 0.3j, 1.2 + 0.5j])) > 0.1


def test_holomorphic_for_trivial(trivial):
    assert cauchy_riemann_residual(trivial, np.array([0.8 - 0.3j, 1.2 + 0.5j])) < 1e-14


# -- self-intersections ------------------------------------------------------------------


def test_analytic_witness(furuhata):
    """p = (conj(y)^3 / 2, y), q = -p with |y|^4 = 4/3 have equal images."""
    y = (4 / 3) ** 0.25 * np.exp(0.7j)
    p = np.array([np.conj(y) ** 3 / 2, y])
    assert np.max(np.abs(immerse(furuhata, p) - immerse(furuhata, -p))) < 1e-14
    assert certified_distance(furuhata, p, -p) < 1e-15


def test_search_finds_furuhata_pair(furuhata):
    hit = self_intersect(furuhata, starts=64, seed=0)
    assert hit is not None
    assert hit.separation >= 0.1
    assert hit.certified_distance < 1e-8
    d = immerse_batch(furuhata, np.stack([hit.p, hit.q]))
    assert np.linalg.norm(d[0] - d[1]) < 1e-8


def test_search_trivial_none(trivial):
    assert self_intersect(trivial, starts=16, seed=1) is None


def test_search_translation_invariant(furuhata):
    a = self_intersect(furuhata, starts=64, seed=0)
    b = self_intersect(furuhata.with_constant(np.full(6, 3.5)), starts=64, seed=0)
    assert b is not None and b.certified_distance < 1e-8
    # additive constants cancel: the same pair has the same image distance
    assert certified_distance(furuhata.with_constant(np.full(6, 3.5)), a.p, a.q) < 1e-8


def test_search_deterministic(furuhata):
    a = self_intersect(furuhata, starts=16, seed=5)
    b = self_intersect(furuhata, starts=16, seed=5)
    assert (a is None and b is None) or a.to_json() == b.to_json()


def test_search_needs_primitives(furuhata):
    with pytest.raises(ValueError):
        self_intersect(furuhata.without_primitives())
