"""Radio environment: geometry, link operations, locator lifecycle."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mobsig.core import FE_ENVIRONMENT, QosSpec, qos_satisfies
from mobsig.environment import (
    ANNOTATION_LINK_DOWN,
    ANNOTATION_LINK_UP,
    Cell,
    Environment,
    Trajectory,
    clamp_qos,
)
from mobsig.simkernel import Kernel, TraceRecorder

from support import REQUESTED, make_cell, still_trajectory

qos_specs = st.builds(
    QosSpec,
    bandwidth_kbps=st.integers(min_value=0, max_value=10_000),
    max_latency_ms=st.integers(min_value=0, max_value=1_000),
)


def build_env(cells, trajectory=None, rng=None, jitter_us=0):
    recorder = TraceRecorder()
    kernel = Kernel(recorder=recorder)
    env = Environment(
        kernel, recorder, cells, trajectory or still_trajectory(), rng=rng, jitter_us=jitter_us
    )
    kernel.register(FE_ENVIRONMENT, env.handle)
    return kernel, recorder, env


def two_cells():
    return (
        make_cell(),  # cell-a / net-1 at (0, 0)
        make_cell(cell_id="cell-b", network_id="net-2", rat="cellular", center=(800.0, 0.0)),
    )


class TestCellValidation:
    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            make_cell(radius_m=0.0)

    def test_rejects_negative_latencies(self):
        with pytest.raises(ValueError):
            make_cell(setup_us=-1)
        with pytest.raises(ValueError):
            make_cell(teardown_us=-1)
        with pytest.raises(ValueError):
            make_cell(locator_us=-1)

    def test_rejects_duplicate_accesses(self):
        with pytest.raises(ValueError):
            build_env((make_cell(), make_cell()))


class TestTrajectory:
    def test_needs_a_waypoint(self):
        with pytest.raises(ValueError):
            Trajectory(waypoints=())

    def test_times_strictly_increasing(self):
        with pytest.raises(ValueError):
            Trajectory(waypoints=((0, (0.0, 0.0)), (0, (1.0, 0.0))))

    def test_clamps_outside_the_time_span(self):
        trajectory = Trajectory(waypoints=((1_000, (0.0, 0.0)), (2_000, (10.0, 0.0))))
        assert trajectory.position(0) == (0.0, 0.0)
        assert trajectory.position(5_000) == (10.0, 0.0)

    def test_linear_interpolation(self):
        trajectory = Trajectory(waypoints=((0, (0.0, 0.0)), (10, (100.0, 50.0))))
        assert trajectory.position(5) == (50.0, 25.0)
        assert trajectory.end_time_us == 10


class TestClampQos:
    def test_bandwidth_capped_latency_floored(self):
        capacity = QosSpec(bandwidth_kbps=800, max_latency_ms=90)
        granted = clamp_qos(REQUESTED, capacity)
        assert granted == QosSpec(bandwidth_kbps=800, max_latency_ms=90)

    def test_ample_capacity_grants_the_request(self):
        capacity = QosSpec(bandwidth_kbps=2000, max_latency_ms=40)
        assert clamp_qos(REQUESTED, capacity) == REQUESTED

    @given(requested=qos_specs, capacity=qos_specs)
    def test_grant_satisfies_request_iff_capacity_does(self, requested, capacity):
        granted = clamp_qos(requested, capacity)
        assert qos_satisfies(granted, requested) == qos_satisfies(capacity, requested)


class TestScan:
    def test_score_one_at_center_zero_at_edge(self):
        trajectory = Trajectory(waypoints=((0, (0.0, 0.0)), (10_000_000, (1000.0, 0.0))))
        _, _, env = build_env(two_cells(), trajectory)
        assert env.scan(0) == [(two_cells()[0].access, 1.0)]
        # x = 200: 200 m from cell-a's center, exactly on cell-b's edge
        found = env.scan(2_000_000)
        assert [a.cell_id for a, _ in found] == ["cell-a", "cell-b"]
        assert found[0][1] == pytest.approx(1.0 - 200.0 / 600.0)
        assert found[1][1] == 0.0

    def test_results_sorted_by_cell_id(self):
        cells = (
            make_cell(cell_id="cell-z", network_id="net-9"),
            make_cell(cell_id="cell-a", network_id="net-1"),
        )
        _, _, env = build_env(cells)
        assert [a.cell_id for a, _ in env.scan(0)] == ["cell-a", "cell-z"]

    def test_in_range_and_unknown_access(self):
        cells = two_cells()
        _, _, env = build_env(cells)
        assert env.in_range(cells[0].access, 0)
        assert not env.in_range(cells[1].access, 0)
        with pytest.raises(ValueError):
            env.cell(make_cell(cell_id="ghost", network_id="net-0").access)


class TestLinkAttach:
    def test_success_after_setup_delay_with_clamped_grant(self):
        cells = (make_cell(capacity=(800, 90)),)
        kernel, recorder, env = build_env(cells)
        outcomes = []
        env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: outcomes.append((r, q, kernel.now)))
        assert kernel.run_until_quiescent() == 50_000
        result, granted, at = outcomes[0]
        assert result.ok and at == 50_000
        assert granted == QosSpec(bandwidth_kbps=800, max_latency_ms=90)
        assert env.attached(1, cells[0].access)
        ups = [r for r in recorder.records if r.name == ANNOTATION_LINK_UP]
        assert len(ups) == 1
        assert ups[0].params == {
            "access": "net-1/cell-a",
            "flow": 1,
            "granted_qos": {"bandwidth_kbps": 800, "max_latency_ms": 90},
        }

    def test_already_attached_fails_immediately(self):
        cells = (make_cell(),)
        kernel, _, env = build_env(cells)
        env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: None)
        kernel.run_until_quiescent()
        outcomes = []
        env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: outcomes.append((r, kernel.now)))
        kernel.run_until_quiescent()
        result, at = outcomes[0]
        assert not result.ok and result.reason == "already_attached"
        assert at == 50_000  # no extra latency spent

    def test_out_of_coverage_fails_after_the_setup_attempt(self):
        cells = two_cells()
        kernel, _, env = build_env(cells)
        outcomes = []
        env.link_attach(1, cells[1].access, REQUESTED, lambda r, q: outcomes.append((r, kernel.now)))
        kernel.run_until_quiescent()
        result, at = outcomes[0]
        assert not result.ok and result.reason == "out_of_coverage"
        assert at == 50_000
        assert not env.attached(1, cells[1].access)


class TestLinkDetach:
    def test_not_attached_fails_immediately(self):
        cells = (make_cell(),)
        kernel, _, env = build_env(cells)
        outcomes = []
        env.link_detach(1, cells[0].access, lambda r: outcomes.append(r))
        assert kernel.run_until_quiescent() == 0
        assert not outcomes[0].ok and outcomes[0].reason == "not_attached"

    def test_success_after_teardown_and_locator_invalidation(self):
        cells = (make_cell(),)
        kernel, recorder, env = build_env(cells)
        access = cells[0].access
        env.link_attach(1, access, REQUESTED, lambda r, q: None)
        kernel.run_until_quiescent()
        locators = []
        env.allocate_locator(1, access, False, lambda r, loc: locators.append(loc))
        kernel.run_until_quiescent()
        locator = locators[0]
        assert env.locator_valid(locator)
        detach_at = []
        env.link_detach(1, access, lambda r: detach_at.append(kernel.now))
        kernel.run_until_quiescent()
        assert detach_at[0] == 50_000 + 100_000 + 10_000
        assert not env.attached(1, access)
        assert not env.locator_valid(locator)
        downs = [r for r in recorder.records if r.name == ANNOTATION_LINK_DOWN]
        assert downs[-1].params == {"access": "net-1/cell-a", "flow": 1}

    def test_locator_survives_while_another_flow_stays_attached(self):
        cells = (make_cell(),)
        kernel, _, env = build_env(cells)
        access = cells[0].access
        env.link_attach(1, access, REQUESTED, lambda r, q: None)
        env.link_attach(2, access, REQUESTED, lambda r, q: None)
        kernel.run_until_quiescent()
        locators = []
        env.allocate_locator(1, access, False, lambda r, loc: locators.append(loc))
        kernel.run_until_quiescent()
        env.link_detach(1, access, lambda r: None)
        kernel.run_until_quiescent()
        assert env.locator_valid(locators[0])


class TestAllocateLocator:
    def test_requires_attachment_when_not_proactive(self):
        cells = (make_cell(),)
        kernel, _, env = build_env(cells)
        outcomes = []
        env.allocate_locator(1, cells[0].access, False, lambda r, loc: outcomes.append((r, loc)))
        kernel.run_until_quiescent()
        assert outcomes[0] == (outcomes[0][0], None)
        assert outcomes[0][0].reason == "not_attached"

    def test_addresses_are_globally_numbered(self):
        cells = two_cells()
        trajectory = Trajectory(waypoints=((0, (400.0, 0.0)),))  # inside both cells
        kernel, _, env = build_env(cells, trajectory)
        env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: None)
        env.link_attach(1, cells[1].access, REQUESTED, lambda r, q: None)
        kernel.run_until_quiescent()
        allocated = []
        env.allocate_locator(1, cells[0].access, False, lambda r, loc: allocated.append(loc))
        kernel.run_until_quiescent()
        env.allocate_locator(1, cells[1].access, False, lambda r, loc: allocated.append(loc))
        kernel.run_until_quiescent()
        assert allocated[0].address == "net-1/cell-a/1"
        assert allocated[1].address == "net-2/cell-b/2"
        assert allocated[0].kind == "care_of"

    def test_ordinary_allocation_costs_locator_config_time(self):
        cells = (make_cell(),)
        kernel, _, env = build_env(cells)
        env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: None)
        kernel.run_until_quiescent()
        done_at = []
        env.allocate_locator(1, cells[0].access, False, lambda r, loc: done_at.append(kernel.now))
        kernel.run_until_quiescent()
        assert done_at[0] == 50_000 + 100_000

    def test_proactive_needs_fmip_support(self):
        cells = (make_cell(supports_fmip=False),)
        kernel, _, env = build_env(cells)
        outcomes = []
        env.allocate_locator(1, cells[0].access, True, lambda r, loc: outcomes.append(r))
        kernel.run_until_quiescent()
        assert outcomes[0].reason == "fmip_unsupported"

    def test_proactive_lifecycle_pending_then_consumed(self):
        cells = (make_cell(supports_fmip=True),)
        kernel, _, env = build_env(cells)
        access = cells[0].access
        allocated = []
        env.allocate_locator(1, access, True, lambda r, loc: allocated.append((r, loc, kernel.now)))
        kernel.run_until_quiescent()
        result, locator, at = allocated[0]
        assert result.ok and at == 0  # proactive allocation is free
        assert env.locator_valid(locator)  # pending, despite no attachment
        env.link_attach(1, access, REQUESTED, lambda r, q: None)
        kernel.run_until_quiescent()
        assert env.locator_valid(locator)  # now backed by the attachment
        env.link_detach(1, access, lambda r: None)
        kernel.run_until_quiescent()
        # the pending grace was consumed by the attach, so detach kills it
        assert not env.locator_valid(locator)


class TestJitter:
    def test_jitter_stays_within_the_configured_bound(self):
        cells = (make_cell(),)
        kernel, _, env = build_env(cells, rng=random.Random(7), jitter_us=5_000)
        done_at = []
        env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: done_at.append(kernel.now))
        kernel.run_until_quiescent()
        assert 50_000 <= done_at[0] <= 55_000

    def test_same_seed_same_latency(self):
        def attach_time(seed):
            cells = (make_cell(),)
            kernel, _, env = build_env(cells, rng=random.Random(seed), jitter_us=5_000)
            done_at = []
            env.link_attach(1, cells[0].access, REQUESTED, lambda r, q: done_at.append(kernel.now))
            kernel.run_until_quiescent()
            return done_at[0]

        assert attach_time(11) == attach_time(11)
