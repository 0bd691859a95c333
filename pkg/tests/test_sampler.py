"""Walk sample spaces, two-leg path selection, and edge-load accounting."""

import math

import numpy as np
import pytest

from obroute.errors import GraphInputError
from obroute.graph import build_graph
from obroute.sampler import (
    EdgeLoad,
    PathSpace,
    build_sample_space,
    draw_leg_assignment,
    edge_load,
    load_statistics,
    path_real_edges,
    select_path,
    tail_threshold,
    walk_budget,
)
from obroute.spectral import routing_profile, spectral, stationary_distribution
from obroute.util import substream


@pytest.fixture(scope="module")
def h3_space(h3_routed):
    routed, prof = h3_routed
    return build_sample_space(routed, prof, seed=0)


@pytest.fixture(scope="module")
def star_space(star4):
    routed, prof = routing_profile(star4)
    return build_sample_space(routed, prof, seed=0), prof


def test_walk_budget_value():
    # ceil(24 ln 8 / (1/8)^2) for the 3-cube
    assert walk_budget(8, 1 / 8) == 3195
    assert walk_budget(8, 1 / 8) == math.ceil(24 * math.log(8) * 64)
    with pytest.raises(GraphInputError):
        walk_budget(1, 0.5)


def test_space_walk_counts(h3_space, h3_routed):
    _, prof = h3_routed
    # regular graph: every vertex launches ceil(m/8) walks
    per_vertex = math.ceil(h3_space.m / 8)
    assert h3_space.total_walks == 8 * per_vertex == 3200
    assert np.array_equal(np.bincount(h3_space.origins, minlength=8),
                          np.full(8, per_vertex))
    assert h3_space.walks.shape == (3200, prof.k + 1)


def test_space_paths_are_valid_walks(h3_space, h3_routed):
    routed, _ = h3_routed
    caps = routed.capacity_matrix
    steps = caps[h3_space.walks[:, :-1], h3_space.walks[:, 1:]]
    assert (steps > 0).all()  # every step is an edge or a lazy loop
    assert np.array_equal(h3_space.walks[:, 0], h3_space.origins)


def test_bucket_endpoint_consistency(h3_space):
    n = 8
    seen = 0
    for a in range(n):
        for b in range(a, n):
            rows = h3_space.bucket_rows(a, b)
            seen += rows.size
            for row in rows:
                walk = h3_space.walks[row]
                assert {int(walk[0]), int(walk[-1])} == ({a, b} if a != b else {a})
    assert seen == h3_space.total_walks  # every walk lands in exactly one bucket
    assert np.array_equal(h3_space.bucket_rows(2, 5), h3_space.bucket_rows(5, 2))


def test_space_determinism(h3_routed):
    routed, prof = h3_routed
    a = build_sample_space(routed, prof, seed=9)
    b = build_sample_space(routed, prof, seed=9)
    c = build_sample_space(routed, prof, seed=10)
    assert np.array_equal(a.walks, b.walks)
    assert not np.array_equal(a.walks, c.walks)


def test_space_requires_walk_length(h3):
    prof = spectral(h3)
    with pytest.raises(Exception):
        build_sample_space(h3, prof, seed=0)


def test_empty_bucket_fraction_zero_on_dense_space(h3_space):
    assert h3_space.empty_bucket_fraction() == 0.0


def test_leg_from_reverses_orientation(h3_space):
    for a, b in ((0, 3), (1, 6)):
        rows = h3_space.bucket_rows(a, b)
        assert rows.size > 0
        row = int(rows[0])
        stored = h3_space.walks[row]
        leg = h3_space.leg_from(int(stored[-1]), row)
        if stored[0] != stored[-1]:
            assert leg[0] == stored[-1] and leg[-1] == stored[0]
            assert np.array_equal(leg, stored[::-1])


def test_select_path_shape_and_determinism(h3_space, h3_routed):
    _, prof = h3_routed
    p = select_path(h3_space, 0, 5, seed=4)
    assert p.source == 0 and p.target == 5
    assert p.vertices[0] == 0 and p.vertices[-1] == 5
    assert len(p.vertices) == 2 * prof.k + 1
    assert p.vertices[prof.k] == p.via
    assert p.resamples >= 0
    again = select_path(h3_space, 0, 5, seed=4)
    assert np.array_equal(p.vertices, again.vertices)
    other = select_path(h3_space, 0, 5, seed=5)
    assert p.via == other.via or not np.array_equal(p.vertices, other.vertices)
    with pytest.raises(ValueError):
        select_path(h3_space, 3, 3, seed=0)


def test_select_path_intermediate_matches_stationary(star_space):
    space, prof = star_space
    pi = prof.pi
    draws = np.array([select_path(space, 1, 2, seed=s).via for s in range(10_000)])
    freq = np.bincount(draws, minlength=4) / draws.size
    tv = 0.5 * np.abs(freq - pi).sum()
    assert tv <= 0.05


def test_select_path_singleton_buckets():
    g = build_graph([(0, 1, 1)], 2)
    routed, prof = routing_profile(g)  # lazified, k = 1
    walks = np.array([[0, 1], [0, 0], [1, 1]], dtype=np.int32)
    origins = np.array([0, 0, 1], dtype=np.int32)
    buckets = {0 * 2 + 1: np.array([0]), 0: np.array([1]), 1 * 2 + 1: np.array([2])}
    space = PathSpace(graph=routed, profile=prof, m=3, seed=0,
                      walks=walks, origins=origins, buckets=buckets)
    p = select_path(space, 0, 1, seed=1)
    # both possible intermediates leave a single choice per leg
    assert tuple(p.vertices) in {(0, 0, 1), (0, 1, 1)}
    assert p.resamples == 0


def test_path_real_edges_skips_loops():
    assert path_real_edges([0, 0, 1, 2, 2]) == {(0, 1), (1, 2)}
    assert path_real_edges([3]) == set()


def test_edge_load_star_hand_values(star_space, star4):
    space, prof = star_space
    k = prof.k
    legs = [
        [0, 1] + [1] * (k - 1),      # center crosses (0,1) then waits
        [1] * (k + 1),               # leaves wait in place
        [2] * (k + 1),
        [3] * (k + 1),
    ]
    load = edge_load(space, legs)
    assert load.edges == ((0, 1), (0, 2), (0, 3))
    assert np.allclose(load.values, [1.0, 0.0, 0.0])  # pi_center/pi_max = 1
    assert abs(load.mass_total - k / prof.pi_max) < 1e-12


def test_edge_load_regular_counts(k4, k4_routed):
    routed, prof = k4_routed
    space = build_sample_space(routed, prof, seed=1)
    legs = [[0, 1, 0], [1, 2, 1], [2, 3, 2], [3, 0, 3]]
    load = edge_load(space, legs)
    want = {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (0, 3): 1.0, (0, 2): 0.0, (1, 3): 0.0}
    for (u, v), val in zip(load.edges, load.values):
        assert val == want[(u, v)]
    assert abs(load.mass_total - prof.k / prof.pi_max) < 1e-12


def test_edge_load_validates_legs(h3_space):
    k = h3_space.k
    good = [[x] + [x ^ 1] * k for x in range(8)]
    with pytest.raises(ValueError):
        edge_load(h3_space, good[:4])  # one leg per vertex required
    bad_start = [leg.copy() for leg in good]
    bad_start[0][0] = 5
    with pytest.raises(ValueError):
        edge_load(h3_space, bad_start)
    bad_edge = [leg.copy() for leg in good]
    bad_edge[0][1] = 7  # 0 and 7 differ in three bits
    with pytest.raises(ValueError):
        edge_load(h3_space, bad_edge)


def test_edge_load_csv_format(star_space):
    space, prof = star_space
    k = prof.k
    legs = [[0, 1] + [1] * (k - 1), [1] * (k + 1), [2] * (k + 1), [3] * (k + 1)]
    text = edge_load(space, legs).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "edge,W_e"
    assert lines[1] == "0-1,1"


def test_space_json_export_schema():
    g = build_graph([(0, 1, 1)], 2)
    routed, prof = routing_profile(g)
    space = build_sample_space(routed, prof, seed=2)
    obj = space.to_json()
    assert set(obj) == {"m", "k", "seed", "buckets"}
    assert obj["k"] == 1 and obj["seed"] == 2
    total = 0
    for key, paths in obj["buckets"].items():
        a, b = key.split("-")
        for path in paths:
            assert len(path) == obj["k"] + 1
            assert {path[0], path[-1]} <= {int(a), int(b)}
            total += 1
    assert total == space.total_walks


def test_tail_threshold_arithmetic():
    val = tail_threshold(16, 10, 4.0, r=1.0)
    assert abs(val - (27 * math.log(16) + (18 * 10 / 4) * 10)) < 1e-12
    assert tail_threshold(16, 10, 4.0, r=2.0) > val


def test_draw_leg_assignment(h3_space):
    legs, vias, resamples = draw_leg_assignment(h3_space, substream(5, "legs"))
    assert len(legs) == 8
    for x, leg in enumerate(legs):
        assert leg[0] == x and leg.size == h3_space.k + 1
    assert vias.shape == (8,) and (vias >= 0).all() and (vias < 8).all()
    assert resamples >= 0


def test_load_statistics_mass_identity(h3):
    stats = load_statistics(h3, trials=50, seed=0)
    # per-trial step mass is conserved exactly, so the mean is exact too
    assert abs(stats.mass_total_mean - 56.0) < 1e-9
    assert abs(stats.expected_mass_total - 56.0) < 1e-12
    assert stats.trials == 50 and stats.k == 7
    assert stats.load_ratio >= 1.0
    assert stats.mean_second is not None
    assert stats.tail_counts[1.0] == 0


def test_load_statistics_first_leg_only(h3):
    stats = load_statistics(h3, trials=20, seed=3, second_legs=False)
    assert stats.mean_second is None
    obj = stats.to_json()
    assert obj["mean_second_leg"] is None
    assert obj["trials"] == 20
    csv_text = stats.to_csv()
    assert csv_text.startswith("edge,W_e\n")
    assert len(csv_text.strip().split("\n")) == 1 + len(stats.edges)


def test_load_statistics_deterministic(h3):
    a = load_statistics(h3, trials=10, seed=4)
    b = load_statistics(h3, trials=10, seed=4)
    assert np.array_equal(a.mean_first, b.mean_first)
    assert a.load_ratio == b.load_ratio
