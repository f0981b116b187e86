import numpy as np
import pytest

from hss_migration.config import InjectionSchedule, PopulationConfig, SizeSpec, WorkloadParams
from hss_migration.exceptions import CapacityError, PreconditionError
from hss_migration.models import FileRecord, RequestEntry, RequestTrace
from hss_migration.workload import (
    RequestGenerator,
    apply_temperature_dynamics,
    create_population,
    draw_sizes,
    gen_poisson_requests,
    gen_uniform_requests,
    inject_new_files,
)

from .helpers import build_hierarchy, place


def _files(temperatures):
    return [
        FileRecord(file_id=index, size=1.0, temperature=temp, tier_id=0)
        for index, temp in enumerate(temperatures)
    ]


def test_zero_rates_give_an_empty_trace():
    params = WorkloadParams(hot_rate=0.0, cold_rate=0.0)
    trace = gen_poisson_requests(_files([0.9, 0.1]), params, np.random.default_rng(0))
    assert trace.entries == []
    assert trace.total_requests == 0


def test_poisson_mean_of_a_hot_file():
    params = WorkloadParams(hot_rate=0.5)
    files = _files([0.9])
    rng = np.random.default_rng(11)
    total = sum(
        gen_poisson_requests(files, params, rng, timestep).total_requests
        for timestep in range(40000)
    )
    assert 0.48 <= total / 40000 <= 0.52


def test_poisson_offsets_are_sorted_in_unit_interval():
    params = WorkloadParams(hot_rate=5.0, cold_rate=5.0)
    trace = gen_poisson_requests(_files([0.9] * 20), params, np.random.default_rng(3), 4)
    assert trace.timestep == 4
    for entry in trace.entries:
        assert list(entry.offsets) == sorted(entry.offsets)
        assert all(0.0 <= offset < 1.0 for offset in entry.offsets)
    arrivals = trace.arrivals()
    assert arrivals == sorted(arrivals)


def test_poisson_requires_files():
    with pytest.raises(PreconditionError, match="empty population"):
        gen_poisson_requests([], WorkloadParams(), np.random.default_rng(0))


def test_uniform_exhaustive_draw():
    files = _files([0.5] * 50)
    trace = gen_uniform_requests(files, WorkloadParams(uniform_k=50), np.random.default_rng(0))
    assert sorted(entry.file_id for entry in trace.entries) == list(range(50))
    assert all(entry.count == 1 for entry in trace.entries)


def test_uniform_k_zero_and_too_large():
    files = _files([0.5] * 5)
    empty = gen_uniform_requests(files, WorkloadParams(uniform_k=0), np.random.default_rng(0))
    assert empty.total_requests == 0
    with pytest.raises(PreconditionError, match="exceeds"):
        gen_uniform_requests(files, WorkloadParams(uniform_k=6), np.random.default_rng(0))


def test_uniform_inclusion_frequency():
    files = _files([0.5] * 1000)
    params = WorkloadParams(uniform_k=200)
    rng = np.random.default_rng(5)
    hits = np.zeros(1000)
    trials = 500
    for _ in range(trials):
        for entry in gen_uniform_requests(files, params, rng).entries:
            hits[entry.file_id] += 1
    frequency = hits / trials
    assert frequency.mean() == pytest.approx(0.2)
    assert np.max(np.abs(frequency - 0.2)) < 0.1


def test_request_generator_dispatches_on_pattern():
    hierarchy = build_hierarchy()
    for file_id in range(10):
        place(hierarchy, file_id, 0, 0.5, 1.0)
    generator = RequestGenerator(WorkloadParams(pattern="uniform", uniform_k=3))
    trace = generator.generate(hierarchy, 2, np.random.default_rng(0))
    assert trace.total_requests == 3
    assert trace.timestep == 2


def _trace(timestep, *file_ids):
    return RequestTrace(timestep, [RequestEntry(file_id, (0.5,)) for file_id in file_ids])


def test_requested_hot_file_keeps_its_temperature():
    hierarchy = build_hierarchy()
    place(hierarchy, 1, 0, 0.9, 1.0)
    apply_temperature_dynamics(hierarchy, _trace(3, 1), 3, WorkloadParams(), np.random.default_rng(0))
    assert hierarchy.file(1).temperature == 0.9
    assert hierarchy.file(1).last_request_step == 3


def test_requested_cold_file_can_turn_hot():
    hierarchy = build_hierarchy()
    place(hierarchy, 1, 0, 0.2, 1.0)
    params = WorkloadParams(p_become_hot=1.0)
    apply_temperature_dynamics(hierarchy, _trace(1, 1), 1, params, np.random.default_rng(0))
    assert 0.5 <= hierarchy.file(1).temperature <= 1.0


def test_idle_file_cools_after_window():
    hierarchy = build_hierarchy()
    record = place(hierarchy, 1, 0, 0.35, 1.0)
    record.last_request_step = 0
    params = WorkloadParams(cooldown_window=10, decay_step=0.1)

    apply_temperature_dynamics(hierarchy, _trace(9), 9, params, np.random.default_rng(0))
    assert hierarchy.file(1).temperature == 0.35

    apply_temperature_dynamics(hierarchy, _trace(10), 10, params, np.random.default_rng(0))
    assert hierarchy.file(1).temperature == 0.25

    apply_temperature_dynamics(hierarchy, _trace(11), 11, params, np.random.default_rng(0))
    assert hierarchy.file(1).temperature == 0.15


def test_non_recurring_decay_waits_a_full_window():
    hierarchy = build_hierarchy()
    place(hierarchy, 1, 0, 0.35, 1.0)
    params = WorkloadParams(cooldown_window=10, decay_step=0.1, recurring_decay=False)
    rng = np.random.default_rng(0)
    for timestep in range(1, 21):
        apply_temperature_dynamics(hierarchy, _trace(timestep), timestep, params, rng)
    assert hierarchy.file(1).temperature == 0.15


def test_decay_floors_at_zero():
    hierarchy = build_hierarchy()
    place(hierarchy, 1, 0, 0.05, 1.0)
    params = WorkloadParams(cooldown_window=1)
    apply_temperature_dynamics(hierarchy, _trace(1), 1, params, np.random.default_rng(0))
    assert hierarchy.file(1).temperature == 0.0


def test_dynamics_reject_mismatched_timestep():
    hierarchy = build_hierarchy()
    with pytest.raises(PreconditionError, match="applied at timestep"):
        apply_temperature_dynamics(
            hierarchy, _trace(2), 3, WorkloadParams(), np.random.default_rng(0)
        )


def test_size_sensitivity_makes_large_files_read_hot_later():
    hierarchy = build_hierarchy(capacities=(100000.0, 100.0, 10.0))
    place(hierarchy, 1, 0, 0.2, 1.0)
    place(hierarchy, 2, 0, 0.2, 99999.0)
    params = WorkloadParams(p_become_hot=1.0)
    # mean size is 50000: the small file reads hot at once, the large one about half the time
    registered = 0
    for seed in range(20):
        hierarchy.set_temperature(2, 0.2)
        hierarchy.set_activity(2, 0.2)
        apply_temperature_dynamics(
            hierarchy, _trace(1, 2), 1, params, np.random.default_rng(seed), size_sensitivity=True
        )
        record = hierarchy.file(2)
        assert record.request_temperature >= 0.5
        assert record.temperature <= record.request_temperature
        registered += record.temperature >= 0.5
    assert 0 < registered < 20

    apply_temperature_dynamics(
        hierarchy, _trace(2, 1), 2, params, np.random.default_rng(0), size_sensitivity=True
    )
    assert hierarchy.file(1).temperature >= 0.5
    assert hierarchy.file(1).temperature == hierarchy.file(1).request_temperature


def test_lagging_temperature_catches_up_with_activity():
    hierarchy = build_hierarchy(capacities=(100000.0, 100.0, 10.0))
    place(hierarchy, 1, 0, 0.2, 1.0)
    large = place(hierarchy, 2, 0, 0.2, 99999.0)
    large.activity = 0.8
    params = WorkloadParams(p_become_hot=0.0)
    rng = np.random.default_rng(4)
    for timestep in range(1, 40):
        apply_temperature_dynamics(
            hierarchy, _trace(timestep, 2), timestep, params, rng, size_sensitivity=True
        )
    assert hierarchy.file(2).temperature == 0.8


def test_size_sensitive_decay_cools_both_together():
    hierarchy = build_hierarchy()
    record = place(hierarchy, 1, 0, 0.3, 1.0)
    record.activity = 0.7
    params = WorkloadParams(cooldown_window=1, decay_step=0.1)
    apply_temperature_dynamics(
        hierarchy, _trace(1), 1, params, np.random.default_rng(0), size_sensitivity=True
    )
    assert hierarchy.file(1).temperature == 0.2
    assert hierarchy.file(1).request_temperature == 0.6


def test_requests_follow_activity():
    files = _files([0.1])
    files[0].activity = 0.9
    params = WorkloadParams(hot_rate=50.0, cold_rate=0.0)
    trace = gen_poisson_requests(files, params, np.random.default_rng(0))
    assert trace.total_requests > 0


def test_hot_file_inter_request_gap():
    params = WorkloadParams(hot_rate=0.5)
    files = _files([0.9])
    rng = np.random.default_rng(17)
    requested = [
        timestep
        for timestep in range(40000)
        if gen_poisson_requests(files, params, rng, timestep).total_requests
    ]
    gaps = np.diff(requested)
    q = 1.0 - np.exp(-params.hot_rate)
    sigma = np.sqrt((1.0 - q) / q**2 / len(gaps))
    assert abs(gaps.mean() - 1.0 / q) <= 3 * sigma


def test_file_requested_every_timestep_never_cools():
    hierarchy = build_hierarchy()
    place(hierarchy, 1, 0, 0.35, 1.0)
    place(hierarchy, 2, 0, 0.9, 1.0)
    params = WorkloadParams(cooldown_window=2, decay_step=0.1, p_become_hot=0.0)
    rng = np.random.default_rng(0)
    for timestep in range(1, 51):
        apply_temperature_dynamics(hierarchy, _trace(timestep, 1, 2), timestep, params, rng)
    assert hierarchy.file(1).temperature == 0.35
    assert hierarchy.file(2).temperature == 0.9


def test_create_population_and_sizes():
    config = PopulationConfig(count=1000, sizes=SizeSpec(low=1, high=10000))
    files = create_population(config, np.random.default_rng(0))
    assert [record.file_id for record in files] == list(range(1000))
    assert all(1 <= record.size <= 10000 and record.size.is_integer() for record in files)
    assert all(0.4 <= record.temperature <= 0.6 for record in files)


def test_bounded_pareto_sizes_stay_in_range():
    spec = SizeSpec(low=1e4, high=2e8, distribution="bounded_pareto", shape=0.55)
    sizes = draw_sizes(spec, 20000, np.random.default_rng(0))
    assert sizes.min() >= 1e4
    assert sizes.max() <= 2e8
    assert spec.mean() == pytest.approx(1.05e6, rel=0.01)


def _schedule(**overrides):
    values = {"batch_size": 4, "period": 10, "sizes": {"low": 1, "high": 1}}
    values.update(overrides)
    return InjectionSchedule.model_validate(values)


def test_injection_off_period_creates_nothing():
    hierarchy = build_hierarchy()
    assert inject_new_files(hierarchy, 5, _schedule(), np.random.default_rng(0)) == []
    assert len(hierarchy) == 0


def test_injection_places_batch_in_slowest_tier():
    hierarchy = build_hierarchy()
    place(hierarchy, 0, 1, 0.5, 1.0)

    created = inject_new_files(hierarchy, 10, _schedule(), np.random.default_rng(0))

    assert created == [1, 2, 3, 4]
    for file_id in created:
        record = hierarchy.file(file_id)
        assert record.tier_id == 0
        assert 0.4 <= record.temperature <= 0.6
        assert record.created_step == 10
        assert record.last_request_step is None


def test_injection_spills_upward_when_slowest_is_full():
    hierarchy = build_hierarchy(capacities=(3.0, 2.0, 1.0))
    created = inject_new_files(hierarchy, 10, _schedule(batch_size=5), np.random.default_rng(0))
    assert [hierarchy.file(file_id).tier_id for file_id in created] == [0, 0, 0, 1, 1]


def test_injection_respects_total():
    hierarchy = build_hierarchy()
    schedule = _schedule(total=6)
    rng = np.random.default_rng(0)
    first = inject_new_files(hierarchy, 10, schedule, rng, already_injected=0)
    second = inject_new_files(hierarchy, 20, schedule, rng, already_injected=len(first))
    third = inject_new_files(hierarchy, 30, schedule, rng, already_injected=6)
    assert (len(first), len(second), len(third)) == (4, 2, 0)


def test_injection_beyond_capacity_fails():
    hierarchy = build_hierarchy(capacities=(2.0, 1.5, 1.0))
    with pytest.raises(CapacityError, match="free in the hierarchy"):
        inject_new_files(hierarchy, 10, _schedule(batch_size=5), np.random.default_rng(0))
    assert len(hierarchy) == 0
