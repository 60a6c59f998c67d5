"""Mission configuration: defaults, YAML loading, and validation.

The config file is a nested YAML document mirroring the pipeline
stages. Every field has a default, so a minimal file can override
just a seed or a scene while the rest stays at the tuned values.
Validation is strict: unknown keys and out-of-range values raise
InvalidSpec with the offending path named.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .controller import Clamps, Gains, Tolerances
from .detector import DEPTH_VIEW_AXIS, DbscanParams, FilterParams
from .errors import InvalidSpec, IoFailure
from .geometry import CameraIntrinsics, Pose, Vec3
from .planner import CCW, CW
from .reconstructor import MODE_DENSE, MODE_SPARSE
from .simworld import ObjectSpec, SceneSpec
from .vehicle import VehicleParams

WAYPOINTS_BY_COUNT = "count"
WAYPOINTS_BY_SPACING = "spacing"


def _default_camera() -> CameraIntrinsics:
    # 640x360 with a 93 degree horizontal field of view, roughly a
    # small drone's wide front camera, plus strong barrel distortion.
    fx = 320.0 / math.tan(math.radians(93.0 / 2.0))
    return CameraIntrinsics(
        fx=fx, fy=fx, cx=320.0, cy=180.0, k1=-0.2, k2=0.05, width=640, height=360
    )


def _default_scene() -> SceneSpec:
    return SceneSpec(
        objects=(ObjectSpec(centroid=Vec3(0.0, 3.0, 1.0), radius=0.5, count=200),),
        background_count=300,
        background_lo=Vec3(-8.0, 6.0, 0.0),
        background_hi=Vec3(8.0, 14.0, 4.0),
    )


@dataclass(frozen=True)
class MissionConfig:
    seed: int = 7
    dt: float = 1.0 / 30.0
    start: Pose = field(default_factory=lambda: Pose(Vec3(0.0, 0.0, 1.0), 0.0))
    scene: SceneSpec = field(default_factory=_default_scene)
    camera: CameraIntrinsics = field(default_factory=_default_camera)
    map_sigma: float = 0.02
    pixel_sigma: float = 0.5
    vision_sigma: float = 0.01
    filter_params: FilterParams = field(default_factory=FilterParams)
    dbscan_params: DbscanParams = field(default_factory=DbscanParams)
    orbit_waypoints: int = 12
    orbit_direction: int = CCW
    orbit_min_radius: float = 0.5
    waypoint_mode: str = WAYPOINTS_BY_COUNT
    waypoint_spacing: float = 1.5
    gains: Gains = field(default_factory=Gains)
    clamps: Clamps = field(default_factory=Clamps)
    tolerances: Tolerances = field(default_factory=Tolerances)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    initial_variance: float = 0.01
    recon_mode: str = MODE_DENSE
    overlap_min: int = 1
    oracle_poses: bool = False
    min_map_points: int = 300
    mapping_timeout: float = 10.0
    detect_timeout: float = 5.0
    orbit_timeout: float = 90.0

    def __post_init__(self):
        if self.dt <= 0:
            raise InvalidSpec(f"dt must be > 0, got {self.dt}")
        if min(self.map_sigma, self.pixel_sigma, self.vision_sigma) < 0:
            raise InvalidSpec("noise sigmas must be >= 0")
        if self.vision_sigma == 0:
            raise InvalidSpec("vision_sigma must be > 0 (measurement variance feeds the filter)")
        if self.orbit_waypoints < 2:
            raise InvalidSpec(f"orbit needs >= 2 waypoints, got {self.orbit_waypoints}")
        if self.waypoint_mode not in (WAYPOINTS_BY_COUNT, WAYPOINTS_BY_SPACING):
            raise InvalidSpec(f"unknown waypoint_mode {self.waypoint_mode!r}")
        if self.recon_mode not in (MODE_DENSE, MODE_SPARSE):
            raise InvalidSpec(f"unknown reconstruction mode {self.recon_mode!r}")
        if self.initial_variance <= 0:
            raise InvalidSpec("initial_variance must be > 0")
        if self.min_map_points < 1:
            raise InvalidSpec("min_map_points must be >= 1")
        if min(self.mapping_timeout, self.detect_timeout) <= 0:
            raise InvalidSpec("mapping and detect timeouts must be > 0")
        if self.orbit_timeout < 0:
            raise InvalidSpec("orbit_timeout must be >= 0")


def default_config() -> MissionConfig:
    return MissionConfig()


class _Section:
    """Dict wrapper that tracks consumed keys and typed access."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise InvalidSpec(f"{path}: expected a mapping, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def get(self, key, default, kind):
        self.seen.add(key)
        if key not in self.data:
            return default
        value = self.data[key]
        try:
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                return float(value)
            if kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
                return value
            if kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
                return value
            if kind is str:
                if not isinstance(value, str):
                    raise TypeError
                return value
        except TypeError:
            raise InvalidSpec(
                f"{self.path}.{key}: expected {kind.__name__}, got {value!r}"
            ) from None
        raise AssertionError(f"unsupported kind {kind}")

    def section(self, key) -> "_Section | None":
        self.seen.add(key)
        if key not in self.data:
            return None
        return _Section(self.data[key], f"{self.path}.{key}")

    def finish(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise InvalidSpec(f"{self.path}: unknown keys {sorted(unknown)}")


def _parse_vec3(value, path: str) -> Vec3:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise InvalidSpec(f"{path}: expected [x, y, z] numbers, got {value!r}")
    return Vec3(float(value[0]), float(value[1]), float(value[2]))


def _parse_scene(sec: _Section | None, defaults: SceneSpec) -> SceneSpec:
    if sec is None:
        return defaults
    objects = defaults.objects
    sec.seen.add("objects")
    if "objects" in sec.data:
        raw = sec.data["objects"]
        if not isinstance(raw, list):
            raise InvalidSpec(f"{sec.path}.objects: expected a list")
        parsed = []
        for i, entry in enumerate(raw):
            obj = _Section(entry, f"{sec.path}.objects[{i}]")
            obj.seen.add("centroid")
            if "centroid" not in obj.data:
                raise InvalidSpec(f"{obj.path}: centroid is required")
            centroid = _parse_vec3(obj.data["centroid"], f"{obj.path}.centroid")
            radius = obj.get("radius", 0.5, float)
            count = obj.get("count", 200, int)
            obj.finish()
            parsed.append(ObjectSpec(centroid=centroid, radius=radius, count=count))
        objects = tuple(parsed)
    background = sec.section("background")
    count = defaults.background_count
    lo, hi = defaults.background_lo, defaults.background_hi
    if background is not None:
        count = background.get("count", count, int)
        box = background.section("box")
        if box is not None:
            box.seen.update(("lo", "hi"))
            if "lo" in box.data:
                lo = _parse_vec3(box.data["lo"], f"{box.path}.lo")
            if "hi" in box.data:
                hi = _parse_vec3(box.data["hi"], f"{box.path}.hi")
            box.finish()
        background.finish()
    sec.finish()
    return SceneSpec(objects=objects, background_count=count, background_lo=lo, background_hi=hi)


def _build(config_dict: dict) -> MissionConfig:
    root = _Section(config_dict, "config")
    d = default_config()

    seed = root.get("seed", d.seed, int)
    dt = root.get("dt", d.dt, float)

    start = d.start
    start_sec = root.section("start")
    if start_sec is not None:
        start_sec.seen.add("position")
        pos = (
            _parse_vec3(start_sec.data["position"], f"{start_sec.path}.position")
            if "position" in start_sec.data
            else d.start.position
        )
        yaw = start_sec.get("yaw", d.start.yaw, float)
        start_sec.finish()
        start = Pose(pos, yaw)

    scene = _parse_scene(root.section("scene"), d.scene)

    cam = d.camera
    cam_sec = root.section("camera")
    if cam_sec is not None:
        cam = CameraIntrinsics(
            fx=cam_sec.get("fx", cam.fx, float),
            fy=cam_sec.get("fy", cam.fy, float),
            cx=cam_sec.get("cx", cam.cx, float),
            cy=cam_sec.get("cy", cam.cy, float),
            k1=cam_sec.get("k1", cam.k1, float),
            k2=cam_sec.get("k2", cam.k2, float),
            width=cam_sec.get("width", cam.width, int),
            height=cam_sec.get("height", cam.height, int),
        )
        cam_sec.finish()

    noise = root.section("noise")
    map_sigma, pixel_sigma, vision_sigma = d.map_sigma, d.pixel_sigma, d.vision_sigma
    if noise is not None:
        map_sigma = noise.get("map_sigma", map_sigma, float)
        pixel_sigma = noise.get("pixel_sigma", pixel_sigma, float)
        vision_sigma = noise.get("vision_sigma", vision_sigma, float)
        noise.finish()

    det = root.section("detector")
    filter_params, dbscan_params = d.filter_params, d.dbscan_params
    if det is not None:
        filter_params = FilterParams(
            keep_fraction=det.get("keep_fraction", filter_params.keep_fraction, float),
            depth_axis=det.get("depth_axis", filter_params.depth_axis, str),
        )
        dbscan_params = DbscanParams(
            eps=det.get("eps", dbscan_params.eps, float),
            min_points=det.get("min_points", dbscan_params.min_points, int),
        )
        det.finish()

    plan = root.section("planner")
    waypoints, direction = d.orbit_waypoints, d.orbit_direction
    min_radius, mode, spacing = d.orbit_min_radius, d.waypoint_mode, d.waypoint_spacing
    if plan is not None:
        waypoints = plan.get("waypoints", waypoints, int)
        direction_name = plan.get("direction", "ccw" if direction == CCW else "cw", str)
        if direction_name not in ("ccw", "cw"):
            raise InvalidSpec(f"{plan.path}.direction: expected 'ccw' or 'cw'")
        direction = CCW if direction_name == "ccw" else CW
        min_radius = plan.get("min_radius", min_radius, float)
        mode = plan.get("mode", mode, str)
        spacing = plan.get("spacing", spacing, float)
        plan.finish()

    ctl = root.section("controller")
    gains, clamps, tolerances = d.gains, d.clamps, d.tolerances
    if ctl is not None:
        g = ctl.section("gains")
        if g is not None:
            gains = Gains(
                kx=g.get("kx", gains.kx, float),
                ky=g.get("ky", gains.ky, float),
                kz=g.get("kz", gains.kz, float),
                kyaw=g.get("kyaw", gains.kyaw, float),
            )
            g.finish()
        c = ctl.section("clamps")
        if c is not None:
            clamps = Clamps(
                vx=c.get("vx", clamps.vx, float),
                vy=c.get("vy", clamps.vy, float),
                vz=c.get("vz", clamps.vz, float),
                vyaw=c.get("vyaw", clamps.vyaw, float),
            )
            c.finish()
        t = ctl.section("tolerances")
        if t is not None:
            tolerances = Tolerances(
                pos_tol=t.get("pos_tol", tolerances.pos_tol, float),
                yaw_tol=t.get("yaw_tol", tolerances.yaw_tol, float),
            )
            t.finish()
        ctl.finish()

    veh = root.section("vehicle")
    vehicle, initial_variance = d.vehicle, d.initial_variance
    if veh is not None:
        vehicle = VehicleParams(
            tau=veh.get("tau", vehicle.tau, float),
            q=veh.get("q", vehicle.q, float),
            yaw_loss_threshold=veh.get("yaw_loss_threshold", vehicle.yaw_loss_threshold, float),
            min_tracked_points=veh.get("min_tracked_points", vehicle.min_tracked_points, int),
        )
        initial_variance = veh.get("initial_variance", initial_variance, float)
        veh.finish()

    rec = root.section("reconstruction")
    recon_mode, overlap_min, oracle_poses = d.recon_mode, d.overlap_min, d.oracle_poses
    if rec is not None:
        recon_mode = rec.get("mode", recon_mode, str)
        overlap_min = rec.get("overlap_min", overlap_min, int)
        oracle_poses = rec.get("oracle_poses", oracle_poses, bool)
        rec.finish()

    mis = root.section("mission")
    min_map_points, mapping_timeout = d.min_map_points, d.mapping_timeout
    detect_timeout, orbit_timeout = d.detect_timeout, d.orbit_timeout
    if mis is not None:
        min_map_points = mis.get("min_map_points", min_map_points, int)
        mapping_timeout = mis.get("mapping_timeout", mapping_timeout, float)
        detect_timeout = mis.get("detect_timeout", detect_timeout, float)
        orbit_timeout = mis.get("orbit_timeout", orbit_timeout, float)
        mis.finish()

    root.finish()
    try:
        return MissionConfig(
            seed=seed,
            dt=dt,
            start=start,
            scene=scene,
            camera=cam,
            map_sigma=map_sigma,
            pixel_sigma=pixel_sigma,
            vision_sigma=vision_sigma,
            filter_params=filter_params,
            dbscan_params=dbscan_params,
            orbit_waypoints=waypoints,
            orbit_direction=direction,
            orbit_min_radius=min_radius,
            waypoint_mode=mode,
            waypoint_spacing=spacing,
            gains=gains,
            clamps=clamps,
            tolerances=tolerances,
            vehicle=vehicle,
            initial_variance=initial_variance,
            recon_mode=recon_mode,
            overlap_min=overlap_min,
            oracle_poses=oracle_poses,
            min_map_points=min_map_points,
            mapping_timeout=mapping_timeout,
            detect_timeout=detect_timeout,
            orbit_timeout=orbit_timeout,
        )
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc


def load_config(path) -> MissionConfig:
    """Load and validate a YAML mission config."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise InvalidSpec(f"{path}: invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    try:
        return _build(data)
    except ValueError as exc:
        raise InvalidSpec(f"{path}: {exc}") from exc


def config_to_dict(cfg: MissionConfig) -> dict:
    """Render a config as the nested dict the YAML schema uses."""
    return {
        "seed": cfg.seed,
        "dt": cfg.dt,
        "start": {
            "position": [cfg.start.position.x, cfg.start.position.y, cfg.start.position.z],
            "yaw": cfg.start.yaw,
        },
        "scene": {
            "objects": [
                {
                    "centroid": [o.centroid.x, o.centroid.y, o.centroid.z],
                    "radius": o.radius,
                    "count": o.count,
                }
                for o in cfg.scene.objects
            ],
            "background": {
                "count": cfg.scene.background_count,
                "box": {
                    "lo": [cfg.scene.background_lo.x, cfg.scene.background_lo.y, cfg.scene.background_lo.z],
                    "hi": [cfg.scene.background_hi.x, cfg.scene.background_hi.y, cfg.scene.background_hi.z],
                },
            },
        },
        "camera": {
            "fx": cfg.camera.fx,
            "fy": cfg.camera.fy,
            "cx": cfg.camera.cx,
            "cy": cfg.camera.cy,
            "k1": cfg.camera.k1,
            "k2": cfg.camera.k2,
            "width": cfg.camera.width,
            "height": cfg.camera.height,
        },
        "noise": {
            "map_sigma": cfg.map_sigma,
            "pixel_sigma": cfg.pixel_sigma,
            "vision_sigma": cfg.vision_sigma,
        },
        "detector": {
            "keep_fraction": cfg.filter_params.keep_fraction,
            "depth_axis": cfg.filter_params.depth_axis,
            "eps": cfg.dbscan_params.eps,
            "min_points": cfg.dbscan_params.min_points,
        },
        "planner": {
            "waypoints": cfg.orbit_waypoints,
            "direction": "ccw" if cfg.orbit_direction == CCW else "cw",
            "min_radius": cfg.orbit_min_radius,
            "mode": cfg.waypoint_mode,
            "spacing": cfg.waypoint_spacing,
        },
        "controller": {
            "gains": {"kx": cfg.gains.kx, "ky": cfg.gains.ky, "kz": cfg.gains.kz, "kyaw": cfg.gains.kyaw},
            "clamps": {"vx": cfg.clamps.vx, "vy": cfg.clamps.vy, "vz": cfg.clamps.vz, "vyaw": cfg.clamps.vyaw},
            "tolerances": {"pos_tol": cfg.tolerances.pos_tol, "yaw_tol": cfg.tolerances.yaw_tol},
        },
        "vehicle": {
            "tau": cfg.vehicle.tau,
            "q": cfg.vehicle.q,
            "yaw_loss_threshold": cfg.vehicle.yaw_loss_threshold,
            "min_tracked_points": cfg.vehicle.min_tracked_points,
            "initial_variance": cfg.initial_variance,
        },
        "reconstruction": {
            "mode": cfg.recon_mode,
            "overlap_min": cfg.overlap_min,
            "oracle_poses": cfg.oracle_poses,
        },
        "mission": {
            "min_map_points": cfg.min_map_points,
            "mapping_timeout": cfg.mapping_timeout,
            "detect_timeout": cfg.detect_timeout,
            "orbit_timeout": cfg.orbit_timeout,
        },
    }


def dump_config(cfg: MissionConfig, path) -> None:
    """Write a config as YAML, usable directly with the simulate command."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
    except OSError as exc:
        raise IoFailure(f"cannot write config to {path}: {exc}") from exc
