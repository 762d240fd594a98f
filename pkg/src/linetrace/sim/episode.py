"""Closed-loop episode running, trace logging, trace comparison, and the
occlusion scenario guard."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dataset import DemoSet, normalize_velocity
from ..imaging import INPUT_LEN
from .camera import CameraModel, render_camera, world_points
from .drive import OffTrackError, SpeedLimits
from .kinematics import RobotState, step_kinematics
from .world import TrackWorld

TRACE_HEADER = "frame,t,x,y,theta,v_cmd,w_cmd,v_pred,w_pred,xtrack_err,on_track"


@dataclass
class EpisodeTrace:
    """Per-frame log of one simulated run.

    t: simulated seconds (frame k at k/fps); cmd velocities are the physical
    commands after denormalization; pred velocities are the driver's
    normalized outputs; xtrack is the distance to the nearest point of the
    track centerline.
    """

    world_name: str
    driver_name: str
    fps: float
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    pose: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    cmd: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    pred: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    xtrack: np.ndarray = field(default_factory=lambda: np.zeros(0))
    on_track: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    arc_progress: np.ndarray = field(default_factory=lambda: np.zeros(0))
    completed: bool = False

    def __len__(self):
        return len(self.t)

    @property
    def mean_xtrack(self) -> float:
        return float(np.mean(self.xtrack)) if len(self.t) else 0.0

    @property
    def max_xtrack(self) -> float:
        return float(np.max(self.xtrack)) if len(self.t) else 0.0

    def laps(self, track_length: float) -> float:
        if len(self.arc_progress) == 0:
            return 0.0
        return float(self.arc_progress[-1] - self.arc_progress[0]) / track_length

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(TRACE_HEADER + "\n")
            for k in range(len(self.t)):
                vals = [self.t[k], self.pose[k, 0], self.pose[k, 1], self.pose[k, 2],
                        self.cmd[k, 0], self.cmd[k, 1], self.pred[k, 0], self.pred[k, 1],
                        self.xtrack[k]]
                body = ",".join(repr(float(v)) for v in vals)
                f.write(f"{k},{body},{int(self.on_track[k])}\n")

    @classmethod
    def from_csv(cls, path, world_name="", driver_name="", fps=6.0):
        rows = []
        with open(path, encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            if header != TRACE_HEADER:
                raise ValueError(f"{path}: unexpected trace header")
            for line in f:
                rows.append([float(v) for v in line.rstrip("\n").split(",")])
        arr = np.array(rows) if rows else np.zeros((0, 11))
        return cls(
            world_name=world_name, driver_name=driver_name, fps=fps,
            t=arr[:, 1], pose=arr[:, 2:5], cmd=arr[:, 5:7], pred=arr[:, 7:9],
            xtrack=arr[:, 9], on_track=arr[:, 10] > 0.5,
            arc_progress=np.zeros(len(arr)),
        )


def start_state(world: TrackWorld, s: float = 0.0) -> RobotState:
    """On-line, tangent-aligned state at arclength s."""
    p = world.path.point_at(s)
    return RobotState(float(p[0]), float(p[1]), world.path.heading_at(s))


def run_episode(
    world: TrackWorld,
    driver,
    frames: int,
    cam: CameraModel | None = None,
    limits: SpeedLimits | None = None,
    start: RobotState | None = None,
    capture_radius: float = 0.30,
    record_inputs: bool = False,
    lighting: float | None = None,
    frame_hook=None,
    exec_noise: float = 0.0,
    noise_seed: int = 0,
):
    """Run up to `frames` steps of render -> decide -> denormalize -> step.

    Frames are rendered only when the driver needs them, inputs are being
    recorded, or a frame_hook is given. The episode ends early when the
    cross-track error exceeds `capture_radius` (off track) or, on open
    tracks, when the robot reaches the end (completed).

    `exec_noise` perturbs the EXECUTED command (normalized units, seeded
    Gaussian) while the recorded/predicted outputs stay clean; collection
    uses it so demonstrations cover off-center states with corrective
    labels, the way an imprecise human operator's would.

    Returns (trace, demo_set_or_None); the demo set carries the driver's
    normalized outputs as labels when record_inputs is set (requires a
    frame-consuming path, used by data collection).
    """
    cam = cam or CameraModel()
    limits = limits or SpeedLimits()
    state = start or start_state(world)
    path = world.path
    dt = cam.frame_period
    noise_rng = np.random.default_rng(noise_seed) if exec_noise > 0 else None

    needs_frames = getattr(driver, "needs_frames", False) or record_inputs or frame_hook
    t_list, pose_list, cmd_list, pred_list = [], [], [], []
    xtrack_list, ontrack_list, progress_list = [], [], []
    inputs, labels = [], []
    completed = False
    prev_s = None
    unwrapped = 0.0

    for k in range(frames):
        s0, dist = path.nearest((state.x, state.y))
        if prev_s is None:
            unwrapped = s0
        else:
            ds = s0 - prev_s
            if world.closed:
                ds = (ds + path.length / 2.0) % path.length - path.length / 2.0
            unwrapped += ds
        prev_s = s0

        on_track = dist <= capture_radius
        t_list.append(k * dt)
        pose_list.append(state.pose)
        xtrack_list.append(dist)
        ontrack_list.append(on_track)
        progress_list.append(unwrapped)
        if not on_track:
            cmd_list.append((0.0, 0.0))
            pred_list.append((0.0, 0.0))
            break

        frame = render_camera(world, state.pose, cam, lighting) if needs_frames else None
        if frame_hook is not None:
            frame_hook(k, frame, state)
        try:
            v_n, w_n = driver.decide(world, state, frame)
        except OffTrackError:
            cmd_list.append((0.0, 0.0))
            pred_list.append((0.0, 0.0))
            ontrack_list[-1] = False
            break
        pred_list.append((v_n, w_n))
        v_exec, w_exec = v_n, w_n
        if noise_rng is not None:
            v_exec = min(max(v_n + exec_noise * noise_rng.standard_normal(), -1.0), 1.0)
            w_exec = min(max(w_n + exec_noise * noise_rng.standard_normal(), -1.0), 1.0)
        v_cmd, w_cmd = v_exec * limits.v_max, w_exec * limits.w_max
        cmd_list.append((v_cmd, w_cmd))
        if record_inputs:
            vec = getattr(driver, "last_input", None)
            if vec is None:
                from ..imaging import preprocess  # oracle path: preprocess directly

                thr = getattr(driver, "threshold", None)
                if thr is None:
                    raise ValueError("record_inputs requires a threshold on the driver")
                vec = preprocess(frame, thr)
            inputs.append(vec)
            labels.append((v_n, w_n))

        state = step_kinematics(state, v_cmd, w_cmd, dt)

        if not world.closed and unwrapped >= path.length - 0.05:
            completed = True  # open track: reached the end on-track
            break
    else:
        # closed track: completion = ran the whole frame budget without
        # leaving the capture radius
        completed = world.closed and bool(ontrack_list) and bool(ontrack_list[-1])

    trace = EpisodeTrace(
        world_name=world.name,
        driver_name=type(driver).__name__,
        fps=cam.fps,
        t=np.array(t_list),
        pose=np.array(pose_list) if pose_list else np.zeros((0, 3)),
        cmd=np.array(cmd_list) if cmd_list else np.zeros((0, 2)),
        pred=np.array(pred_list) if pred_list else np.zeros((0, 2)),
        xtrack=np.array(xtrack_list),
        on_track=np.array(ontrack_list, dtype=bool),
        arc_progress=np.array(progress_list),
        completed=completed,
    )
    demo = None
    if record_inputs and inputs:
        demo = DemoSet(
            np.array(inputs, dtype=np.uint8),
            np.array(labels, dtype=np.float64),
            provenance="oracle",
        )
    return trace, demo


def compare_traces(model_trace: EpisodeTrace, ref_trace: EpisodeTrace):
    """Per-component MAE between two equal-length traces' normalized outputs."""
    if len(model_trace) != len(ref_trace):
        raise ValueError(
            f"trace length mismatch: {len(model_trace)} vs {len(ref_trace)} frames"
        )
    err = np.abs(model_trace.pred - ref_trace.pred)
    return float(err[:, 0].mean()), float(err[:, 1].mean())


def replay_on_trace(world, driver, ref_trace, cam=None, lighting=None):
    """Open-loop re-drive: run the driver on frames rendered at the reference
    trace's poses, producing a trace with identical poses and the driver's
    predictions (the comparison mode behind the human-vs-network tables)."""
    cam = cam or CameraModel()
    preds = []
    for k in range(len(ref_trace)):
        pose = tuple(ref_trace.pose[k])
        frame = render_camera(world, pose, cam, lighting) if driver.needs_frames else None
        state = RobotState(*pose)
        preds.append(driver.decide(world, state, frame))
    preds = np.array(preds) if preds else np.zeros((0, 2))
    limits = SpeedLimits()
    return EpisodeTrace(
        world_name=world.name,
        driver_name=type(driver).__name__,
        fps=ref_trace.fps,
        t=ref_trace.t.copy(),
        pose=ref_trace.pose.copy(),
        cmd=preds * np.array([limits.v_max, limits.w_max]),
        pred=preds,
        xtrack=ref_trace.xtrack.copy(),
        on_track=ref_trace.on_track.copy(),
        arc_progress=ref_trace.arc_progress.copy(),
        completed=ref_trace.completed,
    )


class OcclusionRejected(ValueError):
    def __init__(self, pose, visible):
        super().__init__(
            f"occlusion plan rejected: only {visible} visible line points at pose "
            f"({pose[0]:.3f}, {pose[1]:.3f}, {pose[2]:.3f})"
        )
        self.pose = pose
        self.visible = visible


def occlusion_scenario(
    world: TrackWorld,
    occluders,
    cam: CameraModel | None = None,
    sweep_step: float = 0.05,
    min_visible: int = 5,
    subsample: int = 8,
):
    """Return the world with `occluders` added, after validating that some
    section of trajectory stays visible in every camera frame along the
    track centerline.

    The sweep places the camera at tangent-aligned poses every `sweep_step`
    meters and counts subsampled footprint points that are on the line and
    not hidden by any occluder; a pose with fewer than `min_visible` such
    points rejects the plan.
    """
    cam = cam or CameraModel()
    out = world.with_occluders(occluders)
    if not occluders:
        return out
    path = out.path
    gx, gy = cam.ground_grid(cam.width // subsample, cam.height // subsample)
    half_w = out.line_width / 2.0
    for s in np.arange(0.0, path.length, sweep_step):
        p = path.point_at(s)
        pose = (float(p[0]), float(p[1]), path.heading_at(s))
        wx, wy = world_points(pose, gx, gy)
        visible = world.distance_field.sample(wx, wy) <= half_w
        for occ in occluders:
            visible &= ~occ.contains(wx, wy)
        count = int(visible.sum())
        if count < min_visible:
            raise OcclusionRejected(pose, count)
    return out


def collect_demos(
    world: TrackWorld,
    driver,
    frames: int,
    cam: CameraModel | None = None,
    threshold=None,
    limits: SpeedLimits | None = None,
    start: RobotState | None = None,
    exec_noise: float = 0.08,
    noise_seed: int = 0,
) -> tuple[EpisodeTrace, DemoSet]:
    """Run an episode recording (preprocessed frame, normalized velocity) pairs.

    For frame-free drivers (the oracle), `threshold` names the color predicate
    used to preprocess the rendered frames. Execution noise is on by default
    so the demonstrations include recovery behavior.
    """
    if threshold is not None and getattr(driver, "threshold", None) is None:
        driver.threshold = threshold
    trace, demo = run_episode(
        world, driver, frames, cam=cam, limits=limits, start=start, record_inputs=True,
        exec_noise=exec_noise, noise_seed=noise_seed,
    )
    if demo is None:
        demo = DemoSet.empty("oracle")
    return trace, demo
