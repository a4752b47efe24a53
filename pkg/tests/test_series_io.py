import math

import numpy as np
import pytest

from hyperevt.errors import ConfigError, DataError
from hyperevt.evt import estimate_ei
from hyperevt.geometry import LineSegment
from hyperevt.observables import ObservableKind, ObservableSpec
from hyperevt.systems.coupled import CoupledMapSystem
from hyperevt.systems.series import (
    IIDUniformSystem,
    generate_series,
    observable_trajectory_batch,
    state_trajectory,
    stream,
)
from hyperevt.systems.toral import cat_map
from hyperevt.systems.trajio import load_trajectory, save_trajectory

PERP = ObservableSpec(kind=ObservableKind.NEG_LOG_PERP)


class TestStreams:
    def test_deterministic(self):
        a = stream(123, 0).random(5)
        b = stream(123, 0).random(5)
        assert np.array_equal(a, b)

    def test_independent_indices(self):
        a = stream(123, 0).random(5)
        b = stream(123, 1).random(5)
        assert not np.array_equal(a, b)


class TestGenerateSeries:
    def test_single_value(self):
        T = cat_map()
        seg = LineSegment(p1=[0.0, 0.0], direction=[1.0, 0.0], length=0.25)
        obs = ObservableSpec(kind=ObservableKind.NEG_LOG_SEGMENT_DIST, segment=seg)
        out = generate_series(T, [0.1, 0.3], 1, obs, seed=0)
        assert out.shape == (1,)
        assert out[0] == pytest.approx(-math.log(0.3))

    def test_orbit_pinned_on_extremal_set_is_sentinel(self):
        # the origin is fixed and lies on a segment through it
        T = cat_map()
        seg = LineSegment(p1=[0.0, 0.0], direction=T.v_plus, length=0.3)
        obs = ObservableSpec(kind=ObservableKind.NEG_LOG_SEGMENT_DIST, segment=seg)
        out = generate_series(T, [0.0, 0.0], 10, obs, seed=0)
        assert np.all(np.isinf(out)) and np.all(out > 0)

    def test_bitwise_reproducible(self):
        sys2 = CoupledMapSystem(m=2, gamma=0.3, noise_eps=0.01)
        a = generate_series(sys2, None, 2000, PERP, seed=55)
        b = generate_series(sys2, None, 2000, PERP, seed=55)
        assert np.array_equal(a, b)
        c = generate_series(sys2, None, 2000, PERP, seed=56)
        assert not np.array_equal(a, c)

    def test_n_must_be_positive(self):
        with pytest.raises(ConfigError):
            generate_series(cat_map(), [0.1, 0.2], 0, PERP, seed=0)


class TestBatchComposition:
    def test_realization_independent_of_batch_width(self):
        """Lane b depends only on (seed, b), not on how many lanes run."""
        sys2 = CoupledMapSystem(m=2, gamma=0.2, noise_eps=0.01)
        wide = observable_trajectory_batch(sys2, PERP, 500, n_realizations=6, seed=9)
        for b in range(6):
            solo = observable_trajectory_batch(
                sys2, PERP, 500, n_realizations=1, seed=9, stream_index0=b
            )
            assert np.array_equal(wide[:, b], solo[:, 0])

    def test_chunk_size_does_not_change_output(self):
        sys2 = CoupledMapSystem(m=2, gamma=0.2, noise_eps=0.01)
        a = observable_trajectory_batch(sys2, PERP, 1000, n_realizations=2, seed=9, chunk=64)
        b = observable_trajectory_batch(sys2, PERP, 1000, n_realizations=2, seed=9, chunk=999)
        assert np.array_equal(a, b)

    def test_worker_limit_env(self, monkeypatch):
        sys2 = CoupledMapSystem(m=2, gamma=0.2, noise_eps=0.01)
        full = observable_trajectory_batch(sys2, PERP, 300, n_realizations=5, seed=9)
        monkeypatch.setenv("HYPEREVT_WORKERS", "2")
        split = observable_trajectory_batch(sys2, PERP, 300, n_realizations=5, seed=9)
        assert np.array_equal(full, split)

    def test_burn_in_advances(self):
        T = cat_map()
        seg = LineSegment(p1=[0.1, 0.3], direction=[1.0, 0.0], length=0.25)
        obs = ObservableSpec(kind=ObservableKind.NEG_LOG_SEGMENT_DIST, segment=seg)
        x0 = np.array([[0.123, 0.456]])
        plain = observable_trajectory_batch(T, obs, 20, seed=0, x0=x0, burn_in=0)
        burned = observable_trajectory_batch(T, obs, 10, seed=0, x0=x0, burn_in=10)
        assert np.array_equal(plain[10:, 0], burned[:, 0])


class TestIIDSurrogate:
    def test_estimators_near_one(self):
        # a raw uniform stream is the canonical no-clustering series
        series = stream(77, 0).random(100_000)
        for method, kwargs in [
            ("suveges", {}),
            ("blocks", {"block_len": 4}),
            ("runs", {"run_gap": 2}),
        ]:
            est = estimate_ei(series, 0.98, method=method, **kwargs)
            assert 0.95 <= est.theta_hat <= 1.0

    def test_surrogate_draws_are_iid(self):
        system = IIDUniformSystem(dim=2)
        phi = observable_trajectory_batch(system, PERP, 5000, seed=1)
        est = estimate_ei(phi[:, 0], 0.98)
        assert 0.9 <= est.theta_hat <= 1.0


class TestStateTrajectory:
    def test_matches_orbit(self):
        T = cat_map()
        traj = state_trajectory(T, 50, seed=4, index=0)
        x0 = traj[0]
        assert np.array_equal(T.orbit(x0, 50), traj)


class TestTrajectoryIO:
    def test_round_trip(self, tmp_path):
        arr = np.random.default_rng(3).random((100, 2))
        path = tmp_path / "traj.bin"
        save_trajectory(path, arr)
        back = load_trajectory(path)
        assert np.array_equal(arr, back)
        assert path.stat().st_size == 32 + 100 * 2 * 8

    def test_one_dimensional_series(self, tmp_path):
        path = tmp_path / "s.bin"
        save_trajectory(path, np.arange(5.0))
        assert load_trajectory(path).shape == (5, 1)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x00" * 64)
        with pytest.raises(DataError):
            load_trajectory(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "trunc.bin"
        save_trajectory(path, np.arange(10.0))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(DataError):
            load_trajectory(path)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "t.bin"
        save_trajectory(path, np.zeros((3, 2)))
        head = path.read_bytes()[:32]
        assert head[:8] == b"HEVTTRJ1"
        assert int.from_bytes(head[8:12], "little") == 1
        assert int.from_bytes(head[12:20], "little") == 3
        assert int.from_bytes(head[20:24], "little") == 2
