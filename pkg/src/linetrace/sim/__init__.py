"""Desk-scale stand-in for the physical robot: track worlds, camera
rendering, differential-drive kinematics, scripted driving, and episodes."""

from .camera import CameraModel, render_camera, world_points
from .drive import ModelDriver, OffTrackError, OracleDriver, OracleParams, SpeedLimits
from .episode import (
    EpisodeTrace,
    OcclusionRejected,
    collect_demos,
    compare_traces,
    occlusion_scenario,
    replay_on_trace,
    run_episode,
    start_state,
)
from .kinematics import RobotState, step_kinematics
from .survey import read_survey_csv, survey_pixels, write_survey_csv
from .world import DistanceField, Occluder, TrackPath, TrackWorld, wrap_angle

__all__ = [
    "CameraModel",
    "DistanceField",
    "EpisodeTrace",
    "ModelDriver",
    "Occluder",
    "OcclusionRejected",
    "OffTrackError",
    "OracleDriver",
    "OracleParams",
    "RobotState",
    "SpeedLimits",
    "TrackPath",
    "TrackWorld",
    "collect_demos",
    "compare_traces",
    "occlusion_scenario",
    "read_survey_csv",
    "render_camera",
    "replay_on_trace",
    "run_episode",
    "start_state",
    "step_kinematics",
    "survey_pixels",
    "world_points",
    "wrap_angle",
]
