"""Walk spectrum, lazification choice, mixing length, and stationary distribution.

Frozen eigenvalues below were derived with an independent dense eigensolve on
hand-built walk matrices (numpy.linalg.eigvalsh on D^{1/2} A D^{-1/2}).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obroute.errors import GraphInputError
from obroute.graph import build_graph, complete, cycle, generate, hypercube, random_regular
from obroute.spectral import (
    lazify,
    lazify_if_needed,
    mixing_steps,
    routing_profile,
    spectral,
    stationary_distribution,
    walk_eigenvalues,
    walk_power,
)


def test_complete4_spectrum(k4):
    prof = spectral(k4)
    w = walk_eigenvalues(k4)
    # oracle: eigvalsh of the symmetric similar matrix of (J - I)/3
    oracle = np.linalg.eigvalsh((np.ones((4, 4)) - np.eye(4)) / 3)
    assert np.allclose(np.sort(w), np.sort(oracle), atol=1e-10)
    assert np.allclose(w, [-1 / 3, -1 / 3, -1 / 3, 1.0], atol=1e-10)
    assert abs(prof.lambda_value - 1 / 3) < 1e-10


def test_cycle4_spectrum_bipartite():
    prof = spectral(cycle(4))
    assert abs(prof.lambda2 - 0.0) < 1e-10
    assert abs(prof.lambda_n - (-1.0)) < 1e-10
    assert abs(prof.lambda_value - 1.0) < 1e-10


def test_two_vertex_spectrum():
    prof = spectral(build_graph([(0, 1, 1)], 2))
    assert abs(prof.lambda2 - (-1.0)) < 1e-10  # only eigenvalues are {1, -1}
    assert abs(prof.lambda_value - 1.0) < 1e-10


def test_spectral_rejects_disconnected():
    with pytest.raises(Exception):
        spectral(build_graph([(0, 1, 1)], 3))


def test_lazify_attaches_degree_loops(k4):
    lazy = lazify(k4)
    assert lazy.loops == k4.degrees
    assert np.allclose(lazy.transition_matrix, (np.eye(4) + k4.transition_matrix) / 2)
    with pytest.raises(GraphInputError):
        lazify(lazy)


def test_lazify_choice_cycle4():
    g, prof = lazify_if_needed(cycle(4))
    assert prof.lazified
    assert g.has_loops
    assert abs(prof.lambda_bar - 0.5) < 1e-10  # (1 + {1,0,0,-1})/2 has second value 1/2


def test_lazify_choice_keeps_complete4(k4):
    g, prof = lazify_if_needed(k4)
    assert not prof.lazified
    assert not g.has_loops
    assert abs(prof.lambda_bar - 1 / 3) < 1e-10  # lazy variant would sit at 2/3


def test_lazify_choice_two_vertices():
    # lazy spectrum is {1, 0}, so the adopted magnitude drops all the way to 0
    g, prof = lazify_if_needed(build_graph([(0, 1, 1)], 2))
    assert prof.lazified
    assert abs(prof.lambda_bar - 0.0) < 1e-10


def test_mixing_steps_arithmetic():
    assert mixing_steps(0.5, 1 / 8) == 4  # 0.5**4 = 1/16 = pi_min/2
    assert mixing_steps(0.9, 0.01) == 51  # ceil(ln 0.005 / ln 0.9)
    assert mixing_steps(0.0, 0.5) == 1


def test_mixing_steps_bounds():
    with pytest.raises(GraphInputError):
        mixing_steps(1.0, 0.5)
    with pytest.raises(GraphInputError):
        mixing_steps(-0.1, 0.5)
    with pytest.raises(GraphInputError):
        mixing_steps(0.5, 0.0)
    with pytest.raises(GraphInputError):
        mixing_steps(0.5, 1.5)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(min_value=0.01, max_value=0.999),
    st.floats(min_value=1e-6, max_value=1.0),
)
def test_mixing_steps_is_minimal(lam, pi_min):
    k = mixing_steps(lam, pi_min)
    assert k >= 1
    assert lam**k <= pi_min / 2 + 1e-12
    if k > 1:
        assert lam ** (k - 1) > pi_min / 2 - 1e-12


def test_routing_profile_frozen_lengths(h3_routed):
    cases = {
        "complete:4": 2,
        "cycle:5": 6,
        "hypercube:4": 13,
        "random_regular:10:3:0": 12,
    }
    for spec_str, expected in cases.items():
        _, prof = routing_profile(generate(spec_str))
        assert prof.k == expected, spec_str
    _, h3_prof = h3_routed
    assert h3_prof.k == 7
    _, k2_prof = routing_profile(build_graph([(0, 1, 1)], 2))
    assert k2_prof.k == 1


def test_routing_profile_cycle5_values(c5):
    routed, prof = routing_profile(c5)
    assert prof.lazified and routed.has_loops
    assert abs(prof.lambda_bar - (1 + math.cos(2 * math.pi / 5)) / 2) < 1e-10
    assert abs(prof.pi_min - 0.2) < 1e-12
    # adopted-graph spectrum: the reported magnitude matches the chosen graph
    assert abs(prof.lambda_value - prof.lambda_bar) < 1e-12


def test_profile_json_shape(k4_routed):
    _, prof = k4_routed
    obj = prof.to_json()
    assert set(obj) == {
        "lambda2", "lambdaN", "lambda", "lambda_bar", "lazified", "pi_min", "pi_max", "k",
    }
    assert obj["k"] == 2 and obj["lazified"] is False


def test_stationary_distribution_star(star4):
    pi = stationary_distribution(star4)
    assert np.allclose(pi, [0.5, 1 / 6, 1 / 6, 1 / 6])
    with pytest.raises(GraphInputError):
        stationary_distribution(build_graph([(0, 1, 1)], 3))


def test_walk_power_basics():
    routed, _ = routing_profile(build_graph([(0, 1, 1)], 2))
    A = routed.transition_matrix
    assert np.allclose(walk_power([1.0, 0.0], A, 1), [0.5, 0.5])
    v = np.array([0.3, 0.7])
    assert np.allclose(walk_power(v, A, 0), v)
    pi = stationary_distribution(routed)
    assert np.allclose(walk_power(pi, A, 5), pi)
    with pytest.raises(ValueError):
        walk_power([1.0, 0.0, 0.0], A, 1)
    with pytest.raises(ValueError):
        walk_power([1.0, 0.0], A, -1)


GENERATOR_SUITE = [
    "complete:4", "complete:6", "cycle:5", "cycle:8",
    "hypercube:3", "grid:3:3", "random_regular:10:3:0", "random_regular:16:4:0",
]


def test_row_stochastic_and_stationary_across_suite():
    for spec_str in GENERATOR_SUITE:
        g = generate(spec_str)
        A = g.transition_matrix
        pi = stationary_distribution(g)
        assert np.allclose(A.sum(axis=1), 1.0, atol=1e-9), spec_str
        assert np.allclose(pi @ A, pi, atol=1e-9), spec_str


def test_mixing_contraction_bound():
    rng = np.random.default_rng(7)
    for spec_str in GENERATOR_SUITE:
        routed, prof = routing_profile(generate(spec_str))
        pi = stationary_distribution(routed)
        v = rng.random(routed.n)
        v /= v.sum()
        drift = np.linalg.norm(walk_power(v, routed.transition_matrix, prof.k) - pi)
        assert drift <= prof.lambda_bar**prof.k + 1e-9, spec_str


def test_eigen_symmetry_matches_direct_eigenvalues():
    for spec_str in GENERATOR_SUITE:
        g = generate(spec_str)
        sym = np.sort(walk_eigenvalues(g))
        direct = np.sort(np.linalg.eigvals(g.transition_matrix).real)
        assert np.allclose(sym, direct, atol=1e-8), spec_str
