import math
from collections import deque

import numpy as np
import pytest
import scipy.linalg

from contactpy import (
    ARROW,
    DEATH,
    ConstraintError,
    FormatError,
    Site,
    StreamId,
    WindowError,
    at_time,
    derive,
    during,
    edge_region,
    evolve,
    infected_time,
    is_joined,
    parse_rep,
    quenched,
    rect,
    rep_from_marks,
    run_trials,
    sample_rep,
    within_edges,
    within_sites,
)


def test_fixture_marks(three_site_rep):
    rep = three_site_rep
    assert rep.n_marks == 3
    assert rep.deaths(0).tolist() == [1.5]
    assert rep.arrows(0, 1).tolist() == [0.7]
    assert rep.arrows(1, 0).size == 0


def test_fixture_trajectory(three_site_rep):
    traj = evolve(three_site_rep, [0])
    assert traj.intervals(0) == [(0.0, 1.5)]
    assert traj.intervals(1) == [(0.7, 2.0)]
    assert traj.intervals(2) == []
    assert traj.infected_at(1.0) == {Site(0, 0), Site(1, 0)}
    assert traj.infected_at(1.5) == {Site(1, 0)}
    assert not traj.survived
    assert traj.extinction_time == 2.0
    assert traj.final == frozenset()
    assert traj.ever_infected == {Site(0, 0), Site(1, 0)}
    assert [e[2] for e in traj.events] == ["infect", "recover", "recover"]


@pytest.mark.parametrize("target, expected, hit", [
    (at_time([1], 1.0), True, 1.0),
    (at_time([1], 2.5), False, None),
    (at_time([0], 1.5), False, None),  # the death at 1.5 comes first
    (at_time([0], 1.4), True, 1.4),
    (during([1], 0.0, 3.0), True, 0.7),
    (at_time([2], 0.9), False, None),
])
def test_fixture_joins(three_site_rep, target, expected, hit):
    result = is_joined(three_site_rep, at_time([0], 0.0), target)
    assert result.joined is expected
    assert result.first_hit == hit


def test_constraint_blocks_the_arrow(three_site_rep):
    traj = evolve(three_site_rep, [0], within_sites([0]))
    assert traj.ever_infected == {Site(0, 0)}
    assert traj.extinction_time == 1.5
    assert not is_joined(three_site_rep, at_time([0], 0.0), at_time([1], 1.0),
                         within_sites(rect(0, 0)))


def test_initial_site_outside_the_constraint(three_site_rep):
    with pytest.raises(ConstraintError):
        evolve(three_site_rep, [2], within_sites([0, 1]))
    with pytest.raises(ConstraintError):
        evolve(three_site_rep, [7])


def test_evolve_past_the_horizon(three_site_rep):
    with pytest.raises(WindowError):
        evolve(three_site_rep, [0], until=4.0)


def test_growth_ignores_deaths(three_site_rep):
    traj = evolve(three_site_rep, [0], ignore_deaths=True)
    assert traj.survived
    assert traj.final == {Site(0, 0), Site(1, 0)}


def test_infected_time(three_site_rep):
    both = infected_time(three_site_rep, [0], None, [0, 1])
    assert both.intervals == ((0.0, 2.0),)
    assert both.measure == pytest.approx(2.0)
    assert infected_time(three_site_rep, [0], None, [1]).measure == \
        pytest.approx(1.3)


def test_marks_outside_the_window():
    with pytest.raises(WindowError):
        rep_from_marks(rect(0, 2), 3.0, [(5, 1.0)], [])
    with pytest.raises(WindowError):
        rep_from_marks(rect(0, 2), 3.0, [], [(0, 2, 1.0)])
    with pytest.raises(WindowError):
        rep_from_marks(rect(0, 2), 3.0, [(0, 4.0)], [])


def test_unsorted_fixture():
    with pytest.raises(FormatError):
        parse_rep("region=0:1\nhorizon=2\nD 0 0 1.5\nD 1 0 0.5\n")


def test_sample_rep_is_reproducible(random_env, stream):
    a = sample_rep(random_env, rect(0, 3 + 2j), 4.0, stream)
    b = sample_rep(random_env, rect(0, 3 + 2j), 4.0, stream)
    assert a.times.tolist() == b.times.tolist()
    assert a.owners.tolist() == b.owners.tolist()
    assert np.all((a.times >= 0) & (a.times <= 4.0))
    assert np.all(np.diff(a.times) >= 0)


def test_extension_keeps_earlier_marks(unit_env, stream):
    rep = sample_rep(unit_env, rect(0, 3 + 1j), 3.0, stream)
    longer = rep.extended(unit_env, 6.0)
    early = longer.times <= 3.0
    assert longer.times[early].tolist() == rep.times.tolist()
    assert longer.kinds[early].tolist() == rep.kinds.tolist()


def test_death_rate(zero_env, stream):
    rep = sample_rep(zero_env, rect(0, 9), 50.0, stream)
    assert not np.any(rep.kinds == ARROW)
    n_deaths = int(np.sum(rep.kinds == DEATH))
    assert abs(n_deaths - 500) < 4 * math.sqrt(500)


def test_wide_region_drops_the_end_column_edge():
    # arrows only along the end column: the wide region forbids them
    region = edge_region(0, 4 + 1j)
    rep = rep_from_marks(rect(0, 4 + 1j), 2.0, [], [(0, 1j, 0.5)])
    assert not is_joined(rep, at_time([0], 0.0), at_time([1j], 1.0),
                         within_edges(region))
    assert is_joined(rep, at_time([0], 0.0), at_time([1j], 1.0))


def _reachable(rep, x, horizon):
    """ Breadth-first search over (site, entry time) pairs """
    deaths = {s: rep.deaths(s).tolist() for s in rep.sites}
    arrows = {}
    for t, k, owner, p in zip(rep.times.tolist(), rep.kinds.tolist(),
                              rep.owners.tolist(), rep.pairs.tolist()):
        if k == ARROW:
            arrows.setdefault(rep.sites[owner], []).append(
                (t, rep.sites[int(rep.pair_dst[p])]))
    seen = {(x, 0.0)}
    queue = deque(seen)
    alive_at_end = set()
    while queue:
        s, entry = queue.popleft()
        end = min([d for d in deaths[s] if d > entry], default=math.inf)
        if end > horizon:
            alive_at_end.add(s)
        for t, y in arrows.get(s, []):
            if entry < t < end and (y, t) not in seen:
                seen.add((y, t))
                queue.append((y, t))
    return alive_at_end


def test_joins_agree_with_brute_force(unit_env, stream):
    for k in range(200):
        rep = sample_rep(unit_env, rect(0, 4 + 2j), 3.0, derive(stream, k))
        for x in (Site(0, 0), Site(2, 1), Site(4, 2)):
            reached = _reachable(rep, x, 3.0)
            for y in rep.sites:
                joined = is_joined(rep, at_time([x], 0.0), at_time([y], 3.0))
                assert joined.joined is (y in reached), (k, x, y)


def test_pure_death_survival(zero_env, stream):
    # three independent exponential clocks
    expected = 1 - (1 - math.exp(-2.0)) ** 3

    def survives(s: StreamId) -> bool:
        rep = sample_rep(zero_env, rect(0, 2), 2.0, s)
        return evolve(rep, [0, 1, 2]).survived

    n = 3000
    result = run_trials(survives, n, stream)
    sigma = math.sqrt(expected * (1 - expected) / n)
    assert abs(result.estimate.point - expected) < 4 * sigma


def test_two_site_chain_matches_the_generator(unit_env, stream):
    # states: empty, {0}, {1}, {0, 1}
    q = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [1.0, -2.0, 0.0, 1.0],
        [1.0, 0.0, -2.0, 1.0],
        [0.0, 1.0, 1.0, -2.0],
    ])
    expected = 1 - scipy.linalg.expm(3.0 * q)[1, 0]
    mode = quenched(unit_env)

    def survives(s: StreamId) -> bool:
        rep = sample_rep(mode.env_for(s), rect(0, 1), 3.0, s)
        return evolve(rep, [0]).survived

    n = 3000
    result = run_trials(survives, n, stream)
    sigma = math.sqrt(expected * (1 - expected) / n)
    assert abs(result.estimate.point - expected) < 4 * sigma
