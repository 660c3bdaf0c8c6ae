"""Event-sourced job orchestration: planning, streaming selections, agreement."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sifter.errors import (
    CapExceededError,
    ConflictError,
    OutOfScopeError,
    StateError,
    ValidationError,
)
from sifter.pipeline import (
    CompilationJob,
    Job,
    PipelineParams,
    compute_agreement,
    plan_r2,
    read_event_log,
    replay_events,
    write_event_log,
)

POOL_SIZES = [329, 586, 1262, 980, 1508, 1185, 974, 1670, 1933, 426, 1672, 1390]
EXPECTED_WORKERS = [1, 1, 2, 1, 2, 2, 1, 2, 2, 1, 2, 2]


def vids(n: int) -> list[str]:
    return [f"v{i:04d}" for i in range(n)]


class TestPlanR2:
    @pytest.mark.parametrize("n, workers", [(1262, 2), (329, 1), (1000, 1), (1001, 2)])
    def test_worker_count_rule(self, n, workers):
        assert len(plan_r2(vids(n), PipelineParams(), seed=1)) == workers

    def test_reference_pool_sizes(self):
        # Twelve production-scale pools and the worker counts they require.
        params = PipelineParams()
        got = [len(plan_r2(vids(n), params, seed=1)) for n in POOL_SIZES]
        assert got == EXPECTED_WORKERS
        assert params.r3_workers == 2

    def test_selection_cap_rule(self):
        plans = plan_r2(vids(1000), PipelineParams(), seed=1)
        assert plans[0].select_cap == 100
        plans = plan_r2(vids(329), PipelineParams(), seed=1)
        assert plans[0].select_cap == 33  # ceil(0.1 * 329)

    def test_empty_pool_rejected(self):
        with pytest.raises(ValidationError):
            plan_r2([], PipelineParams(), seed=1)

    def test_deterministic_for_seed(self):
        a = plan_r2(vids(50), PipelineParams(r2_pool_per_worker=20), seed=9)
        b = plan_r2(vids(50), PipelineParams(r2_pool_per_worker=20), seed=9)
        assert a == b
        c = plan_r2(vids(50), PipelineParams(r2_pool_per_worker=20), seed=10)
        assert a != c

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=3000),
        per_worker=st.integers(min_value=1, max_value=1000),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    def test_partition_properties(self, n, per_worker, seed):
        pool = vids(n)
        plans = plan_r2(pool, PipelineParams(r2_pool_per_worker=per_worker), seed=seed)
        parts = [set(p.videos) for p in plans]
        union = set().union(*parts)
        assert union == set(pool)
        assert sum(len(p) for p in parts) == n  # disjoint given the union size
        sizes = [len(p.videos) for p in plans]
        assert max(sizes) - min(sizes) <= 1


def small_params(**overrides) -> PipelineParams:
    # Assignments of 30 videos leave a selection cap of ceil(0.1 * 30) = 3.
    defaults = dict(
        r2_pool_per_worker=30,
        r2_select_cap=100,
        r3_trigger_threshold=3,
        r3_min_select=2,
        r3_workers=2,
        final_min=1,
        final_max=20,
        page_size=8,
        page_time_limit=30.0,
        random_seed=3,
    )
    defaults.update(overrides)
    return PipelineParams(**defaults)


def make_job(n=60, **overrides) -> Job:
    job = Job(
        CompilationJob("j1", "Magic Wins", ("magic", "tricks"), small_params(**overrides)),
        created_at=0.0,
    )
    job.record_r1(vids(n), at=1.0)
    return job


def drain_pages(job: Job, worker: str, select: set[str], start: float, dwell: float = 10.0) -> float:
    """Page through a worker's whole queue, selecting the given ids on sight."""
    now = start
    while True:
        page = job.issue_page(worker, now)
        if page is None:
            return now
        now += dwell
        chosen = [v for v in page["videos"] if v in select]
        job.submit_page(worker, page["page_id"], chosen, at=now)


class TestSelectionStage:
    def test_first_selection_enters_pool(self):
        job = make_job()
        binding = job.join_worker("w1", 2.0)
        video = job.state.r2_slots[binding["slot"]].videos[0]
        assert job.record_r2_selection("w1", video, 3.0) == "selected"
        assert job.state.r3_pool == [video]

    def test_duplicate_selection_is_idempotent(self):
        job = make_job()
        job.join_worker("w1", 2.0)
        video = job.state.r2_slots[0].videos[0]
        job.record_r2_selection("w1", video, 3.0)
        assert job.record_r2_selection("w1", video, 4.0) == "already_selected"
        assert job.state.r3_pool == [video]
        assert sum(1 for e in job.events if e.kind == "selection") == 1

    def test_out_of_scope_selection(self):
        job = make_job()
        job.join_worker("w1", 2.0)
        job.join_worker("w2", 2.0)
        foreign = job.state.r2_slots[1].videos[0]
        with pytest.raises(OutOfScopeError):
            job.record_r2_selection("w1", foreign, 3.0)

    def test_cap_rule_at_scale(self):
        # One worker over a 1,000-video pool: the 100th selection succeeds,
        # the 101st exceeds the cap.
        job = Job(
            CompilationJob("j1", "t", ("k",), PipelineParams(random_seed=1)),
            created_at=0.0,
        )
        job.record_r1(vids(1000), at=1.0)
        job.join_worker("w1", 2.0)
        assignment = job.state.r2_slots[0].videos
        for i in range(100):
            assert job.record_r2_selection("w1", assignment[i], 3.0 + i) == "selected"
        with pytest.raises(CapExceededError):
            job.record_r2_selection("w1", assignment[100], 200.0)

    def test_selection_before_any_worker(self):
        job = make_job()
        with pytest.raises(StateError):
            job.record_r2_selection("w1", "v0000", 2.0)

    def test_join_is_idempotent(self):
        job = make_job()
        first = job.join_worker("w1", 2.0)
        again = job.join_worker("w1", 5.0)
        assert first["slot"] == again["slot"]
        assert sum(1 for e in job.events if e.kind == "r2_assigned") == 1

    def test_join_without_capacity(self):
        job = make_job()
        job.join_worker("w1", 2.0)
        job.join_worker("w2", 2.0)
        with pytest.raises(ConflictError):
            job.join_worker("w3", 2.0)  # both selection slots taken, agreement not open


class TestTrigger:
    def test_threshold_boundary(self):
        job = make_job()
        job.join_worker("w1", 2.0)
        assignment = job.state.r2_slots[0].videos
        job.record_r2_selection("w1", assignment[0], 3.0)
        job.record_r2_selection("w1", assignment[1], 4.0)
        assert job.maybe_trigger_r3(5.0) is False  # pool at 2 of 3, workers active
        job.record_r2_selection("w1", assignment[2], 6.0)
        assert job.maybe_trigger_r3(7.0) is True
        assert job.state.phase == "r3_running"
        assert job.state.r3_batch_count == 1

    def test_completion_rule_below_threshold(self):
        job = make_job(r3_trigger_threshold=100)
        job.join_worker("w1", 2.0)
        job.join_worker("w2", 2.0)
        sel1 = set(job.state.r2_slots[0].videos[:2])
        sel2 = set(job.state.r2_slots[1].videos[:2])
        drain_pages(job, "w1", sel1, 3.0)
        assert job.maybe_trigger_r3(100.0) is False  # w2 still has pages
        drain_pages(job, "w2", sel2, 3.0)
        # The final page submission triggers on completion despite pool < 100.
        assert job.state.phase == "r3_running"
        assert set(job.state.r3_pool) == sel1 | sel2

    def test_no_double_trigger_without_new_videos(self):
        job = make_job()
        job.join_worker("w1", 2.0)
        for i, video in enumerate(job.state.r2_slots[0].videos[:3]):
            job.record_r2_selection("w1", video, 3.0 + i)
        assert job.maybe_trigger_r3(10.0) is True
        assert job.maybe_trigger_r3(11.0) is False


class TestAgreementStage:
    def _to_agreement(self, selections=3) -> Job:
        """Single selection worker picking ``selections`` videos into the pool."""
        job = make_job(n=30)
        job.join_worker("w1", 2.0)
        chosen = set(job.state.r2_slots[0].videos[:selections])
        drain_pages(job, "w1", chosen, 3.0)
        assert job.state.phase == "r3_running"
        return job

    def test_agreement_worker_sees_whole_pool(self):
        job = self._to_agreement()
        binding = job.join_worker("w3", 100.0)
        assert binding["stage"] == "agreement"
        assert binding["assigned"] == len(job.state.r3_pool)

    def test_selection_worker_cannot_join_agreement(self):
        job = self._to_agreement()
        binding = job.join_worker("w1", 100.0)
        assert binding["stage"] == "selection"  # existing binding, not a new one
        job.join_worker("w3", 100.0)
        job.join_worker("w4", 100.0)
        with pytest.raises(ConflictError):
            job.join_worker("w2-again", 100.0)  # no slots left at all

    def test_r3_selection_by_selection_worker_rejected(self):
        job = self._to_agreement()
        job.join_worker("w3", 100.0)
        video = job.state.r3_pool[0]
        with pytest.raises(ConflictError):
            job.record_r3_selection("w1", video, 101.0)

    def test_r3_selection_outside_batch_rejected(self):
        job = self._to_agreement()
        job.join_worker("w3", 100.0)
        with pytest.raises(OutOfScopeError):
            job.record_r3_selection("w3", "not-a-video", 101.0)

    def test_unanimous_consent_intersection(self):
        # Pool {a, b, c}; one agreement worker picks {a, b}, the other {b, c}:
        # only b has unanimous consent.
        job = self._to_agreement(selections=3)
        pool = list(job.state.r3_pool)
        a, b, c = pool
        job.join_worker("w3", 100.0)
        job.join_worker("w4", 100.0)
        drain_pages(job, "w3", {a, b}, 101.0)
        drain_pages(job, "w4", {b, c}, 101.0)
        assert job.state.phase == "finalized"
        assert job.state.output["videos"] == [b]
        assert job.state.output["consent_counts"] == {b: 3}

    def test_ordering_with_explicit_timestamps(self):
        job = self._to_agreement(selections=3)
        pool = list(job.state.r3_pool)
        a, b, c = pool
        job.join_worker("w3", 100.0)
        job.join_worker("w4", 100.0)
        job.record_r3_selection("w3", b, 105.0)
        job.record_r3_selection("w3", a, 106.0)
        job.record_r3_selection("w4", a, 107.0)
        job.record_r3_selection("w4", b, 108.0)
        drain_pages(job, "w3", set(), 200.0)
        drain_pages(job, "w4", set(), 200.0)
        # Earliest timestamps: b at 105, a at 106.
        assert job.state.output["videos"] == [b, a]

    def test_under_supplied_flag(self):
        job = make_job(final_min=10)
        job.join_worker("w1", 2.0)
        job.join_worker("w2", 2.0)
        sel1 = set(job.state.r2_slots[0].videos[:2])
        sel2 = set(job.state.r2_slots[1].videos[:2])
        drain_pages(job, "w1", sel1, 3.0)
        drain_pages(job, "w2", sel2, 3.0)
        job.join_worker("w3", 100.0)
        job.join_worker("w4", 100.0)
        shared = set(list(job.state.r3_pool)[:2])
        drain_pages(job, "w3", shared, 101.0)
        drain_pages(job, "w4", shared, 101.0)
        assert job.state.output["under_supplied"] is True
        earliest = lambda v: (min(s.selected[v] for s in job.state.r3_slots), v)  # noqa: E731
        assert job.state.output["videos"] == sorted(shared, key=earliest)

    def test_truncation_to_final_max(self):
        job = make_job(final_max=2, final_min=1)
        job.join_worker("w1", 2.0)
        job.join_worker("w2", 2.0)
        sel1 = set(job.state.r2_slots[0].videos[:3])
        sel2 = set(job.state.r2_slots[1].videos[:3])
        drain_pages(job, "w1", sel1, 3.0)
        drain_pages(job, "w2", sel2, 3.0)
        job.join_worker("w3", 100.0)
        job.join_worker("w4", 100.0)
        everything = set(job.state.r3_pool)
        drain_pages(job, "w3", everything, 101.0)
        drain_pages(job, "w4", everything, 101.0)
        assert len(job.state.output["videos"]) == 2
        assert job.state.output["under_supplied"] is False

    def test_agreement_before_completion_is_an_error(self):
        job = self._to_agreement()
        with pytest.raises(StateError):
            compute_agreement(job.state)

    def test_min_select_enforced(self):
        job = self._to_agreement(selections=3)  # queue of 3, min(2, 3) = 2
        job.join_worker("w3", 100.0)
        job.join_worker("w4", 100.0)
        only_one = {job.state.r3_pool[0]}
        drain_pages(job, "w3", only_one, 101.0)
        drain_pages(job, "w4", only_one, 101.0)
        assert job.state.phase == "r3_running"  # auto-finalize refused
        with pytest.raises(ValidationError):
            compute_agreement(job.state)


class TestProgress:
    def test_fresh_job(self):
        job = Job(CompilationJob("j1", "t", ("k",), small_params()), created_at=0.0)
        snapshot = job.progress()
        assert snapshot["phase"] == "created"
        assert snapshot["r1_kept"] == 0
        assert snapshot["r2"]["selected_total"] == 0
        assert snapshot["output"] is None

    def test_r1_count_reported(self):
        job = Job(CompilationJob("j1", "t", ("k",), PipelineParams()), created_at=0.0)
        job.record_r1(vids(329), at=1.0)
        assert job.progress()["r1_kept"] == 329
        assert len(job.progress()["r2"]["slots"]) == 1

    def test_mid_run_selection_count(self):
        job = make_job()
        job.join_worker("w1", 2.0)
        for video in job.state.r2_slots[0].videos[:2]:
            job.record_r2_selection("w1", video, 3.0)
        assert job.progress()["r2"]["selected_total"] == 2


def scripted_run(seed: int = 3) -> Job:
    """A complete deterministic run: 2 selection workers, 2 agreement workers."""
    job = make_job(n=40, random_seed=seed)
    job.join_worker("w1", 2.0)
    job.join_worker("w2", 2.5)
    sel1 = set(job.state.r2_slots[0].videos[:3])
    sel2 = set(job.state.r2_slots[1].videos[:3])
    t = drain_pages(job, "w1", sel1, 3.0)
    drain_pages(job, "w2", sel2, t + 1.0)
    job.join_worker("w3", 400.0)
    job.join_worker("w4", 401.0)
    pool = list(job.state.r3_pool)
    drain_pages(job, "w3", set(pool[:4]), 402.0)
    drain_pages(job, "w4", set(pool[1:5]), 402.5)
    assert job.state.phase == "finalized"
    return job


class TestReplay:
    def test_replay_reproduces_state_and_output(self):
        job = scripted_run()
        replayed = replay_events(job.events)
        assert replayed.canonical_json() == job.state.canonical_json()
        recomputed = compute_agreement(replayed)
        assert list(recomputed.videos) == job.state.output["videos"]
        assert recomputed.to_dict() == job.state.output

    def test_event_log_file_round_trip(self, tmp_path):
        job = scripted_run()
        path = tmp_path / "events.jsonl"
        write_event_log(job.events, path)
        events = read_event_log(path)
        assert [e.to_dict() for e in events] == [e.to_dict() for e in job.events]
        assert replay_events(events).canonical_json() == job.state.canonical_json()

    def test_same_seed_same_log(self):
        log_a = [e.to_dict() for e in scripted_run(seed=11).events]
        log_b = [e.to_dict() for e in scripted_run(seed=11).events]
        assert json.dumps(log_a) == json.dumps(log_b)

    def test_from_events_rebuilds_live_job(self):
        job = scripted_run()
        clone = Job.from_events(job.events)
        assert clone.state.canonical_json() == job.state.canonical_json()
        assert clone.job.job_id == job.job.job_id


class TestInvariants:
    def test_subset_chain_and_consent(self):
        job = scripted_run()
        state = job.state
        r1 = set(state.r1_kept)
        r2_selected = set().union(*(set(s.selected) for s in state.r2_slots))
        pool = set(state.r3_pool)
        output = set(state.output["videos"])
        assert output <= pool <= r2_selected <= r1
        for video in output:
            selectors = [s.worker for s in state.r3_slots if video in s.selected]
            r2_owner = [s.worker for s in state.r2_slots if video in s.selected]
            assert len(selectors) == state.params.r3_workers
            assert len(r2_owner) == 1
            assert len(set(selectors + r2_owner)) == 1 + state.params.r3_workers

    def test_no_worker_overlap(self):
        job = scripted_run()
        assert not (job.state.r2_workers & job.state.r3_workers)

    def test_selection_after_finalization_rejected(self):
        job = scripted_run()
        leftover = next(v for v in job.state.r3_pool if v not in job.state.output["videos"])
        with pytest.raises(StateError):
            job.record_r3_selection("w3", leftover, 999.0)
        with pytest.raises(StateError):
            job.record_r2_selection("w1", job.state.r1_kept[0], 999.0)

    def test_r2_assignments_partition_r1(self):
        job = make_job(n=37)
        parts = [set(s.videos) for s in job.state.r2_slots]
        assert set().union(*parts) == set(job.state.r1_kept)
        assert sum(len(p) for p in parts) == 37
