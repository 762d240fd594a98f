import math

import numpy as np
import pytest

from linetrace import imaging, sim
from linetrace.sim import worlds as stock
from linetrace.threshold_learn import Conjunct, HsvThreshold

import oracles


def straight_world(color_rgb=(40, 90, 200)):
    pts = [[-1.0, 0.0], [1.0, 0.0], [3.0, 0.0], [5.0, 0.0]]
    return sim.TrackWorld(name="straight", waypoints=pts, closed=False,
                          line_rgb=color_rgb, seed=3)


def circle_world(radius=1.0, n=16):
    a = np.linspace(0, 2 * np.pi, n + 1)[:-1]
    pts = np.stack([np.cos(a) * radius, np.sin(a) * radius], axis=1)
    return sim.TrackWorld(name="circle", waypoints=pts, closed=True, seed=4)


BLUE_CLAUSES = [[("h", "ge", 0.55), ("h", "lt", 0.72), ("v", "ge", 0.25)]]


def blue_threshold():
    return HsvThreshold("blue", [[Conjunct(a, c, v) for a, c, v in cl] for cl in BLUE_CLAUSES])


class TestKinematics:
    def test_straight_motion(self):
        s = sim.step_kinematics(sim.RobotState(0, 0, 0), v=1.0, omega=0.0, dt=1.0)
        assert (s.x, s.y, s.theta) == (1.0, 0.0, 0.0)

    def test_rotate_in_place(self):
        s = sim.step_kinematics(sim.RobotState(2.0, -1.0, 0.0), v=0.0, omega=math.pi / 2, dt=1.0)
        assert s.x == pytest.approx(2.0)
        assert s.y == pytest.approx(-1.0)
        assert s.theta == pytest.approx(math.pi / 2)

    def test_quarter_circle_arc(self):
        s = sim.step_kinematics(sim.RobotState(0, 0, 0), v=math.pi / 2, omega=math.pi / 2, dt=1.0)
        assert s.x == pytest.approx(1.0, abs=1e-12)
        assert s.y == pytest.approx(1.0, abs=1e-12)
        assert s.theta == pytest.approx(math.pi / 2, abs=1e-12)

    def test_half_steps_agree_with_full_step(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            st = sim.RobotState(*rng.uniform(-2, 2, 2), rng.uniform(-3, 3))
            v, w, dt = rng.uniform(-1, 1), rng.uniform(-2, 2), rng.uniform(0.05, 0.4)
            one = sim.step_kinematics(st, v, w, dt)
            half = sim.step_kinematics(sim.step_kinematics(st, v, w, dt / 2), v, w, dt / 2)
            assert abs(one.x - half.x) < 1e-12
            assert abs(one.y - half.y) < 1e-12
            assert abs(math.remainder(one.theta - half.theta, 2 * math.pi)) < 1e-12

    def test_theta_wrapped(self):
        s = sim.step_kinematics(sim.RobotState(0, 0, 3.0), v=0.0, omega=1.0, dt=1.0)
        assert -math.pi < s.theta <= math.pi

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            sim.step_kinematics(sim.RobotState(0, 0, 0), 1.0, 0.0, 0.0)


class TestTrackPath:
    def test_point_at_nearest_round_trip(self):
        path = stock.oval().path
        for s in np.linspace(0, path.length * 0.99, 25):
            p = path.point_at(s)
            s_back, dist = path.nearest(p)
            assert dist < 1e-9
            ds = abs(s_back - s)
            assert min(ds, path.length - ds) < 0.02

    def test_circle_curvature_analytic(self):
        for r in (0.8, 1.5):
            path = circle_world(radius=r, n=24).path
            ks = np.array([path.curvature_at(s) for s in np.linspace(0, path.length, 40)])
            assert np.allclose(ks, 1.0 / r, rtol=0.06)
            assert np.mean(ks) == pytest.approx(1.0 / r, rel=0.01)

    def test_length_of_circle(self):
        path = circle_world(radius=1.0, n=32).path
        assert path.length == pytest.approx(2 * math.pi, rel=0.005)

    def test_needs_three_waypoints(self):
        with pytest.raises(ValueError):
            sim.TrackPath([[0, 0], [1, 1]], closed=False)


class TestRenderer:
    def test_no_track_in_footprint_is_pure_background(self):
        world = straight_world()
        pose = (0.0, 5.0, 0.0)  # far to the side of the line
        frame = sim.render_camera(world, pose, sim.CameraModel())
        mask = imaging.apply_threshold(imaging.rgb_to_hsv(frame), blue_threshold())
        assert not mask.any()

    def test_deterministic(self):
        world = stock.oval()
        cam = sim.CameraModel()
        pose = sim.start_state(world).pose
        a = sim.render_camera(world, pose, cam)
        b = sim.render_camera(world, pose, cam)
        assert np.array_equal(a, b)

    def test_lighting_linearity(self):
        world = stock.oval()
        cam = sim.CameraModel()
        pose = sim.start_state(world).pose
        full = sim.render_camera(world, pose, cam, lighting=1.0)
        for lam in (0.5, 0.4):
            dim = sim.render_camera(world, pose, cam, lighting=lam)
            expected = np.clip(np.floor(lam * full.astype(np.float64) + 0.5), 0, 255)
            assert np.array_equal(dim, expected.astype(np.uint8))

    def test_straight_line_ahead_gives_centered_band(self):
        # compose the renderer with the independent imaging stage oracles
        world = straight_world()
        frame = sim.render_camera(world, (0.0, 0.0, 0.0), sim.CameraModel())
        vec = oracles.preprocess_oracle(frame, BLUE_CLAUSES)
        grid = vec.reshape(32, 32)
        rows_with_line = np.nonzero(grid.any(axis=1))[0]
        assert len(rows_with_line) >= 28  # line visible at nearly every depth
        for r in rows_with_line:
            cols = np.nonzero(grid[r])[0]
            assert cols.max() - cols.min() + 1 == len(cols), f"row {r} not contiguous"
            center = (cols.min() + cols.max()) / 2
            assert 14.0 <= center <= 17.0, f"row {r} band center {center}"

    def test_occluder_paints_over_line(self):
        world = straight_world().with_occluders([sim.Occluder(x=0.4, y=-0.3, w=0.5, h=0.6)])
        frame = sim.render_camera(world, (0.0, 0.0, 0.0), sim.CameraModel())
        mask = imaging.apply_threshold(imaging.rgb_to_hsv(frame), blue_threshold())
        clear = sim.render_camera(straight_world(), (0.0, 0.0, 0.0), sim.CameraModel())
        clear_mask = imaging.apply_threshold(imaging.rgb_to_hsv(clear), blue_threshold())
        assert mask.sum() < clear_mask.sum() * 0.8

    def test_invalid_lighting_rejected(self):
        with pytest.raises(ValueError):
            sim.render_camera(stock.oval(), (0, 0, 0), sim.CameraModel(), lighting=0.0)
        with pytest.raises(ValueError):
            sim.TrackWorld(name="x", waypoints=[[0, 0], [1, 0], [1, 1]], lighting=1.2)


class TestCameraModel:
    def test_footprint_range_matches_defaults(self):
        near, far = sim.CameraModel().footprint_range()
        assert near == pytest.approx(0.30, abs=0.005)
        assert far == pytest.approx(1.00, abs=0.005)

    def test_horizon_reaching_pitch_rejected(self):
        with pytest.raises(ValueError):
            sim.CameraModel(pitch=0.2, vfov=0.45)

    def test_frame_period(self):
        assert sim.CameraModel().frame_period == pytest.approx(1 / 6)


class TestOracleDriver:
    def test_straight_aligned_full_speed_no_turn(self):
        world = straight_world()
        v, w = sim.OracleDriver().decide(world, sim.RobotState(0.0, 0.0, 0.0))
        assert (v, w) == (1.0, 0.0)

    def test_displaced_left_steers_right(self):
        world = straight_world()
        v, w = sim.OracleDriver().decide(world, sim.RobotState(0.0, 0.08, 0.0))
        assert w < 0.0  # positive omega is counterclockwise

    def test_output_unit_norm(self):
        world = stock.oval()
        rng = np.random.default_rng(1)
        driver = sim.OracleDriver()
        for _ in range(20):
            s = rng.uniform(0, world.path.length)
            p = world.path.point_at(s)
            st = sim.RobotState(p[0] + rng.uniform(-0.05, 0.05),
                                p[1] + rng.uniform(-0.05, 0.05),
                                world.path.heading_at(s) + rng.uniform(-0.3, 0.3))
            v, w = driver.decide(world, st)
            assert math.hypot(v, w) == pytest.approx(1.0, abs=1e-9)

    def test_off_track_signals(self):
        with pytest.raises(sim.OffTrackError):
            sim.OracleDriver().decide(straight_world(), sim.RobotState(0.0, 2.0, 0.0))

    def test_circle_steady_state_ratio_approximates_curvature(self):
        # executed omega/v after denormalization should settle near the
        # track curvature on a constant-curvature circle
        radius = 1.2
        world = circle_world(radius=radius, n=24)
        trace, _ = sim.run_episode(world, sim.OracleDriver(), 400)
        assert trace.completed
        v = trace.cmd[200:, 0]
        w = trace.cmd[200:, 1]
        ratio = np.mean(w / v)
        assert ratio == pytest.approx(1.0 / radius, rel=0.10)


class TestRunEpisode:
    def test_oracle_oval_lap_within_line_width(self):
        world = stock.oval()
        trace, _ = sim.run_episode(world, sim.OracleDriver(), 600)
        assert trace.completed
        assert trace.laps(world.path.length) >= 1.0
        assert trace.max_xtrack < world.line_width

    def test_timestamps_at_six_fps(self):
        trace, _ = sim.run_episode(stock.oval(), sim.OracleDriver(), 20)
        assert np.allclose(trace.t, np.arange(20) / 6.0)

    def test_off_track_start_ends_immediately(self):
        world = stock.oval()
        start = sim.RobotState(10.0, 10.0, 0.0)
        trace, _ = sim.run_episode(world, sim.OracleDriver(), 50, start=start)
        assert len(trace) == 1
        assert not trace.on_track[0]
        assert not trace.completed

    def test_open_track_completes_at_end(self):
        world = stock.s_curve()
        trace, _ = sim.run_episode(world, sim.OracleDriver(), 600)
        assert trace.completed
        assert len(trace) < 600

    def test_collect_demos_rows_and_validity(self):
        world = stock.oval()
        driver = sim.OracleDriver()
        trace, demo = sim.collect_demos(world, driver, 30, threshold=blue_threshold())
        assert len(demo) == 30
        norms = np.hypot(demo.velocities[:, 0], demo.velocities[:, 1])
        assert np.all((norms == 0) | (np.abs(norms - 1) < 1e-9))
        assert demo.pixels.any()  # the line is visible

    def test_varied_pitch_changes_masks(self):
        world = stock.oval()
        pose = sim.start_state(world).pose
        thr = blue_threshold()
        vecs = []
        for pitch in (0.47, 0.52):
            cam = sim.CameraModel(pitch=pitch)
            frame = sim.render_camera(world, pose, cam)
            vecs.append(imaging.preprocess(frame, thr))
        assert not np.array_equal(vecs[0], vecs[1])

    def test_trace_csv_round_trip(self, tmp_path):
        trace, _ = sim.run_episode(stock.oval(), sim.OracleDriver(), 25)
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        back = sim.EpisodeTrace.from_csv(path)
        assert np.array_equal(back.t, trace.t)
        assert np.array_equal(back.pose, trace.pose)
        assert np.array_equal(back.cmd, trace.cmd)
        assert np.array_equal(back.pred, trace.pred)
        assert np.array_equal(back.on_track, trace.on_track)


class TestCompareTraces:
    def test_identical_traces_zero_mae(self):
        trace, _ = sim.run_episode(stock.oval(), sim.OracleDriver(), 40)
        assert sim.compare_traces(trace, trace) == (0.0, 0.0)

    def test_constant_angular_offset(self):
        trace, _ = sim.run_episode(stock.oval(), sim.OracleDriver(), 40)
        shifted = sim.EpisodeTrace(
            world_name=trace.world_name, driver_name="shifted", fps=trace.fps,
            t=trace.t, pose=trace.pose, cmd=trace.cmd,
            pred=trace.pred + np.array([0.0, 0.1]),
            xtrack=trace.xtrack, on_track=trace.on_track,
            arc_progress=trace.arc_progress,
        )
        lin, ang = sim.compare_traces(shifted, trace)
        assert lin == pytest.approx(0.0, abs=1e-12)
        assert ang == pytest.approx(0.1, abs=1e-12)

    def test_length_mismatch_raises(self):
        a, _ = sim.run_episode(stock.oval(), sim.OracleDriver(), 10)
        b, _ = sim.run_episode(stock.oval(), sim.OracleDriver(), 12)
        with pytest.raises(ValueError, match="mismatch"):
            sim.compare_traces(a, b)


class TestOcclusion:
    def test_no_occluders_unchanged(self):
        world = stock.test_loop()
        out = sim.occlusion_scenario(world, [])
        assert out.occluders == []
        assert np.array_equal(out.waypoints, world.waypoints)

    def test_stock_plan_passes_sweep(self):
        world = stock.occluded_test_loop()
        assert len(world.occluders) == 2

    def test_full_cover_rejected_with_pose(self):
        world = stock.test_loop()
        blanket = [sim.Occluder(x=-3.0, y=-3.0, w=6.0, h=6.0)]
        with pytest.raises(sim.OcclusionRejected) as exc_info:
            sim.occlusion_scenario(world, blanket)
        assert exc_info.value.visible == 0

    def test_occluders_actually_block_line_pixels(self):
        base = stock.test_loop()
        occluded = stock.occluded_test_loop()
        cam = sim.CameraModel()
        path = base.path
        # approach the first occluder along the track
        s_near, _ = path.nearest((1.65, 0.65))
        p = path.point_at(s_near - 0.5)
        pose = (float(p[0]), float(p[1]), path.heading_at(s_near - 0.5))
        thr = HsvThreshold("pink", [[Conjunct("h", "ge", 0.83)]])
        m_base = imaging.preprocess(sim.render_camera(base, pose, cam), thr)
        m_occ = imaging.preprocess(sim.render_camera(occluded, pose, cam), thr)
        assert m_occ.sum() < m_base.sum()
        assert m_occ.sum() >= 1  # some trajectory still visible
