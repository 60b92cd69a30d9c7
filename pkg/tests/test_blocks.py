import pytest

from contactpy import (
    SIDES,
    BlockEstimate,
    BoxSpec,
    ConditionReport,
    GeomError,
    Seed,
    Site,
    StreamId,
    WindowError,
    annealed,
    block_condition_report,
    box_rep,
    default_horizon,
    derive,
    edge_region,
    estimate_block,
    estimate_block_grid,
    estimate_block_mixed,
    event_probe,
    first_segment,
    make_env,
    phi,
    phi_theta,
    point,
    quenched,
    rect,
    rep_from_marks,
    sample_rep,
    seed_to_seed,
    unconstrained,
    wilson,
)


def test_box_geometry():
    spec = BoxSpec(2, 3, 1, 10.0)
    assert spec.box() == rect(-3, 3 + 2j)
    assert spec.source() == [Site(-1, 0), Site(0, 0), Site(1, 0)]
    assert spec.side("R") == [Site(3, 0), Site(3, 1), Site(3, 2)]
    assert spec.side("UR") == [Site(k, 2) for k in range(4)]
    assert spec.side("UL") == [Site(-k, 2) for k in range(3, -1, -1)]
    assert spec.side("L", origin=10 + 1j)[0] == Site(7, 1)


@pytest.mark.parametrize("h, w, r, T", [(0, 3, 1, 1.0), (2, 3, 4, 1.0),
                                        (2, 3, 1, 0.0)])
def test_box_validation(h, w, r, T):
    with pytest.raises(ValueError):
        BoxSpec(h, w, r, T)


def test_default_horizon():
    assert default_horizon(4, 16, 2.0) == 200.0
    assert default_horizon(4, 16, 0.5) == 400.0
    assert default_horizon(4, 16, 0.0) == 200.0


@pytest.fixture
def staircase_rep():
    # 0 -> 1 -> 2 -> 2+i, nobody dies
    return rep_from_marks(
        rect(-2, 2 + 1j), 5.0, [],
        [(0, 1, 0.5), (1, 2, 1.0), (2, 2 + 1j, 1.5)])


def test_phi_and_theta(staircase_rep):
    spec = BoxSpec(1, 2, 0, 5.0)
    phi_, theta_ = phi_theta(staircase_rep, spec)
    assert phi_.phiR == {Site(2, 0), Site(2, 1)}
    assert phi_.phiUR == {Site(2, 1)}
    assert phi_.phiL == frozenset()
    assert phi_.phiUL == frozenset()
    assert phi_.sizes == {"L": 0, "UL": 0, "UR": 1, "R": 2}
    assert theta_["R"].intervals == ((1.0, 5.0),)
    assert theta_.measures["UR"] == pytest.approx(3.5)


def test_phi_needs_the_whole_box(staircase_rep):
    with pytest.raises(WindowError):
        phi(staircase_rep, BoxSpec(1, 3, 0, 5.0))
    with pytest.raises(WindowError):
        phi(staircase_rep, BoxSpec(1, 2, 0, 6.0))


def test_nothing_spreads_without_rates(stream):
    mode = annealed(point(0.0))
    spec = BoxSpec(2, 4, 1, 5.0)
    for est in estimate_block_grid(mode, spec, [0, 1], 20, stream):
        assert est.point == 0.0
        assert est.estimate.n == 20
    mixed = estimate_block_mixed(mode, spec, 0.0, 0.0, 20, stream)
    assert all(mixed[d].point == 0.0 for d in SIDES)


def test_block_grid_is_monotone_in_N(stream):
    mode = annealed(point(4.0))
    spec = BoxSpec(2, 4, 1, 10.0)
    estimates = estimate_block_grid(mode, spec, [0, 2, 4], 30, stream)
    for d in SIDES:
        values = [e.point for e in estimates if e.side == d]
        assert values == sorted(values, reverse=True)


def test_estimate_block_rows(stream):
    spec = BoxSpec(1, 2, 0, 3.0)
    by_side = estimate_block(annealed(point(1.0)), spec, 0, 10, stream)
    assert set(by_side) == set(SIDES)
    row = by_side["R"].as_row()
    assert list(row) == ["event", "h", "w", "r", "N", "T", "mode", "trials",
                         "estimate", "ci_lo", "ci_hi"]
    assert row["event"] == "|Phi^R|>0"
    assert row["mode"] == "annealed"


def test_condition_report_without_rates(stream):
    report = block_condition_report(annealed(point(0.0)), 1, 0, 0, 0.1, 10,
                                     stream, horizon=2.0)
    assert set(report.estimates) == {"R(h,4h)", "R(h,8h)", "UR(h,8h)",
                                     "R(2h,8h)"}
    assert report.estimates["R(2h,8h)"].spec.h == 2
    assert not report.first and not report.second
    assert report.supported == "none"


def test_condition_report_flags():
    spec = BoxSpec(1, 4, 0, 1.0)

    def est(k):
        return BlockEstimate("x", "R", 0, spec, "annealed", wilson(k, 10))

    both = ConditionReport(0, 0.05, {
        "R(h,4h)": est(10), "R(h,8h)": est(10),
        "UR(h,8h)": est(10), "R(2h,8h)": est(10)})
    assert both.supported == "1+2"
    only_second = ConditionReport(0, 0.05, {
        "R(h,4h)": est(9), "R(h,8h)": est(10),
        "UR(h,8h)": est(10), "R(2h,8h)": est(10)})
    assert only_second.supported == "2"


def test_first_segment(three_site_rep):
    line = [Site(0, 0), Site(1, 0), Site(2, 0)]
    pair = first_segment(three_site_rep, [(Site(0, 0), 0.0, 0.0)],
                         unconstrained(), [line], 2, 3.0)
    assert pair.found == [(0, [Site(0, 0), Site(1, 0)], 0.7)]
    whole = first_segment(three_site_rep, [(Site(0, 0), 0.0, 0.0)],
                          unconstrained(), [line], 3, 3.0)
    assert whole.found == []
    assert whole.extinct


def test_seed_to_seed():
    rep = rep_from_marks(rect(0, 2), 5.0, [], [(0, 1, 0.5), (1, 2, 1.2)])
    spec = BoxSpec(1, 2, 0, 5.0)
    region = edge_region(0, 2)
    assert seed_to_seed(rep, Seed(Site(0, 0), 0), spec, region) == \
        (Site(2, 0), 1.2)
    late = Seed(Site(0, 0), 0, time=1.0)
    assert seed_to_seed(rep, late, spec, region) is None


def _corridor_rep(deaths=()):
    arrows = [(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3), (3, 4, 0.4),
              (4, 4 + 1j, 0.5)]
    return rep_from_marks(rect(0, 4 + 1j), 2.0, list(deaths), arrows)


def test_template_e():
    assert event_probe(_corridor_rep(), "E", N=1)
    assert not event_probe(_corridor_rep([(4 + 1j, 0.8)]), "E", N=1)


def test_template_t():
    hit = event_probe(_corridor_rep(), "T", x=0, t=0.0, m=4, K=0)
    assert hit.occurred
    assert hit.time == 0.4
    assert hit.site == Site(4, 0)


def test_template_t_below_the_bottom_row():
    with pytest.raises(GeomError):
        event_probe(_corridor_rep(), "T", x=1j, t=0.0, m=2, K=2)


def _l_path_rep(deaths=()):
    # up the column of 0, then right along Im = 3
    arrows = [(0, 1j, 0.1), (1j, 2j, 0.2), (2j, 3j, 0.3), (3j, 1 + 3j, 0.4),
              (1 + 3j, 2 + 3j, 0.5), (2 + 3j, 3 + 3j, 0.6)]
    return rep_from_marks(rect(0, 3 + 3j), 2.0, list(deaths), arrows)


def test_template_c():
    hit = event_probe(_l_path_rep(), "C", x=0, t=0.0, K=1)
    assert hit.occurred
    assert hit.time == 1.0
    assert hit.site == Site(3, 3)
    assert not event_probe(_l_path_rep([(3 + 3j, 0.8)]), "C", x=0, t=0.0, K=1)


def test_template_a():
    up_then_right = rep_from_marks(
        rect(-1, 4 + 4j), 2.0, [],
        [(0, 1j, 0.1), (1j, 2j, 0.2), (2j, 1 + 2j, 0.3), (1 + 2j, 2 + 2j, 0.4)])
    hit = event_probe(up_then_right, "A", x=0, t=0.0, m=0, n=0, K=1)
    assert hit.occurred
    assert (hit.time, hit.site) == (0.4, Site(2, 2))
    # the bottom row lies outside the corridor
    along_the_bottom = rep_from_marks(
        rect(-1, 4 + 4j), 2.0, [],
        [(0, 1, 0.1), (1, 2, 0.2), (2, 2 + 1j, 0.3), (2 + 1j, 2 + 2j, 0.4)])
    assert not event_probe(along_the_bottom, "A", x=0, t=0.0, m=0, n=0, K=1)


def _right_column_rep(deaths=()):
    arrows = [(0, 1, 0.1), (1, 2, 0.2), (2, 3, 0.3), (3, 3 + 1j, 0.4),
              (3 + 1j, 3 + 2j, 0.5), (3 + 2j, 3 + 3j, 0.6)]
    return rep_from_marks(rect(-3, 3 + 3j), 2.0, list(deaths), arrows)


def test_template_b():
    params = dict(m=3, n=0, side="R", r=0, K=1, N1=1)
    first = event_probe(_right_column_rep(), "B", **params)
    assert first.occurred and first.time == 0.6
    assert event_probe(_right_column_rep(), "B", t=1.0, **params).time == 1.0
    # 3 dies before 3+3i is reached
    broken = _right_column_rep([(3, 0.45)])
    assert not event_probe(broken, "B", **params)
    assert not event_probe(broken, "B", t=1.0, **params)
    # the segment would leave the ball
    assert not event_probe(_right_column_rep(), "B", **dict(params, n=1))


def test_template_errors(three_site_rep):
    with pytest.raises(ValueError):
        event_probe(three_site_rep, "Z")
    with pytest.raises(WindowError):
        event_probe(three_site_rep, "E", N=1)


def test_phi_sandwich_and_empty_theta(unit_env, stream):
    spec = BoxSpec(2, 4, 1, 3.0)
    for k in range(300):
        rep = box_rep(unit_env, spec, derive(stream, k))
        phi_, theta_ = phi_theta(rep, spec)
        total = sum(phi_.sizes.values())
        # the four sides share three corners
        assert len(phi_.phi) <= total <= len(phi_.phi) + 3, k
        for d in SIDES:
            assert (len(phi_[d]) == 0) is (theta_[d].intervals == ()), (k, d)


def test_longer_horizon_never_shrinks_phi(unit_env, stream):
    short, long = BoxSpec(2, 4, 1, 2.0), BoxSpec(2, 4, 1, 4.0)
    for k in range(200):
        rep = box_rep(unit_env, short, derive(stream, k))
        longer = rep.extended(unit_env, 4.0)
        before = phi(rep, short)
        assert phi(longer, short) == before, k
        after = phi(longer, long)
        for d in SIDES:
            assert before[d] <= after[d], (k, d)


def test_annealed_equals_quenched_for_a_point_law(stream):
    spec = BoxSpec(2, 4, 1, 3.0)
    a = estimate_block(annealed(point(1.0)), spec, 1, 100, stream)
    q = estimate_block(quenched(make_env(point(1.0), 99)), spec, 1, 100,
                       stream)
    for d in SIDES:
        assert a[d].estimate == q[d].estimate


def test_fast_spread_reaches_the_whole_boundary():
    env = make_env(point(50.0), 3)
    spec = BoxSpec(4, 4, 1, 1.0)
    full = 0
    for k in range(50):
        phi_ = phi(box_rep(env, spec, derive(StreamId(41), k)), spec)
        full += all(len(phi_[d]) == len(spec.side(d)) for d in SIDES)
    assert wilson(full, 50).hi >= 0.99


def test_fast_spread_forms_a_seed():
    env = make_env(point(50.0), 3)
    spec = BoxSpec(4, 16, 1, 1.0)
    region = edge_region(-16, 16 + 4j)
    formed = 0
    for k in range(50):
        rep = box_rep(env, spec, derive(StreamId(43), k))
        found = seed_to_seed(rep, Seed(Site(0, 0), 1), spec, region)
        if found is not None:
            formed += 1
            assert found[0].re == 16
    assert wilson(formed, 50).hi >= 0.99


def test_fast_spread_crosses_the_corridor():
    env = make_env(point(50.0), 3)
    hits = 0
    for k in range(50):
        rep = sample_rep(env, rect(-1, 7 + 7j), 1.0, derive(StreamId(47), k))
        hits += event_probe(rep, "A", x=0, t=0.0, m=3, n=3, K=1).occurred
    assert wilson(hits, 50).hi >= 0.95


def test_condition_report_separates_slow_and_fast_rates(stream):
    slow = block_condition_report(annealed(point(0.1)), 1, 0, 0, 0.1, 100,
                                  stream, horizon=5.0)
    fast = block_condition_report(annealed(point(4.0)), 1, 0, 0, 0.1, 100,
                                  stream, horizon=5.0)
    lo = fast.estimates["R(h,4h)"].estimate.lo
    assert lo > slow.estimates["R(h,4h)"].estimate.hi
