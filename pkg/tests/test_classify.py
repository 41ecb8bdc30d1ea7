"""Second-variation classification: goldens, probes, stability."""

import numpy as np
import pytest

from opq import classify, integrate
from opq.errors import SingularLegendre

THETA_I = np.pi - 0.5


def test_triple_set_kinds(sol9):
    assert [b.kind for b in sol9.branches] == ["MLP", "LLP", "MLP"]


def test_quintuple_set_kinds(sol18):
    assert [b.kind for b in sol18.branches] == \
        ["MLP", "MLP", "LLP", "MLP", "MLP"]


def test_septuple_set_single_central_llp(sol27):
    kinds = [b.kind for b in sol27.branches]
    assert kinds.count("LLP") == 1
    assert kinds.count("MLP") == 6
    # the sole LLP sits centrally, never at either end of the p_i ordering
    i = kinds.index("LLP")
    assert 0 < i < len(kinds) - 1


def test_second_variation_signs_match_kinds(sol9):
    for b in sol9.branches:
        if b.kind == "MLP":
            assert b.delta2_sine < 0 and b.delta2_poly < 0
        else:
            assert b.delta2_sine > 0 and b.delta2_poly > 0


def test_rotor_single_path_is_mlp(eq):
    path = integrate.integrate(eq, 0.0, 0.6, 2.0)
    assert classify.classify(path).kind == "MLP"


def test_classification_stable_under_grid_doubling(xz, sol9):
    for b in sol9.branches:
        dense = integrate.integrate(xz, THETA_I, b.p_i, 9.0, n_samples=4000)
        assert classify.classify(dense).kind == b.kind


def test_perturbation_probe_mlp_and_llp(sol9):
    # literal second-order probe: displacing by eps*eta lowers the action of
    # an MLP and raises that of an LLP, for both probe shapes
    eps = 1e-3
    for b in sol9.branches:
        base = classify.perturbed_action(b.path, "sine", 0.0)
        for eta_kind in classify.ETA_KINDS:
            for sign in (+1.0, -1.0):
                pert = classify.perturbed_action(b.path, eta_kind, sign * eps)
                if b.kind == "MLP":
                    assert pert < base
                else:
                    assert pert > base


def test_perturbed_action_at_zero_eps_matches_quadrature(sol9):
    b = sol9.branches[0]
    base = classify.perturbed_action(b.path, "sine", 0.0)
    # direct Lagrangian quadrature of the unperturbed path approximates S
    assert base == pytest.approx(b.S, rel=1e-5)


def test_singular_legendre_at_pole(dz):
    # a driven path sampled exactly at theta = 0 has a vanishing diffusion
    # coefficient: the Legendre transform is singular there
    path = integrate.integrate(dz, 0.0, 0.5, 0.5)
    with pytest.raises(SingularLegendre):
        classify.classify(path)


def test_unknown_probe_kind_rejected(sol9):
    with pytest.raises(ValueError):
        classify.second_variation(sol9.branches[0].path, "fourier")
