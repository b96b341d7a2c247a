"""Episode rules on top of the track and bicycle model.

The env exposes a discrete action grid (steer x accel), computes shaped
rewards from the lateral offset, advances slower bot vehicles that follow
the centerline and hop lanes on a fixed period, and terminates on lap
completion, full off-track excursion, bot contact, or timeout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .kinematics import (VehicleParams, VehicleState, step as kin_step,
                         wheel_positions, wrap_angle)
from .track import Track


class Outcome(enum.Enum):
    RUNNING = "running"
    COMPLETED = "completed"
    OFF_TRACK = "off_track"
    CRASH = "crash"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class WorldParams:
    vehicle: VehicleParams = VehicleParams()
    reward: str = "centerline"      # "centerline" | "whiteline"
    n_steer: int = 5
    n_accel: int = 3
    max_steer: float = 0.5          # rad
    max_accel: float = 2.0          # m/s^2
    steer_change_factor: float = 0.8
    bot_count: int = 0
    bot_speed_frac: float = 0.5     # of v_max
    bot_lane_period: float = 5.0    # s between lane hops
    bot_length: float = 0.30        # m, same body as the ego car
    timeout_steps: int = 1000

    def __post_init__(self):
        if self.reward not in ("centerline", "whiteline"):
            raise ValueError(f"unknown reward variant {self.reward!r}")


def action_table(params: WorldParams) -> np.ndarray:
    """(n_steer * n_accel, 2) rows of (steer, accel); steer varies slowest."""
    steers = np.linspace(-params.max_steer, params.max_steer, params.n_steer)
    accels = np.linspace(-params.max_accel, params.max_accel, params.n_accel)
    grid = [(s, a) for s in steers for a in accels]
    return np.array(grid)


def reward_centerline(d: float, speed: float, steer_changed: bool,
                      track_width: float, params: WorldParams) -> float:
    base = max(0.0, 1.0 - 2.0 * abs(d) / track_width)
    speed_term = 0.5 + 0.5 * speed / params.vehicle.v_max
    factor = params.steer_change_factor if steer_changed else 1.0
    return base * speed_term * factor


def reward_whiteline(d: float, speed: float, track_width: float,
                     params: WorldParams) -> float:
    inside = abs(d) + params.vehicle.track_width / 2.0 < track_width / 2.0
    if inside:
        return 0.5 + 0.5 * speed / params.vehicle.v_max
    return 0.1


def is_off_track(state: VehicleState, track: Track,
                 params: WorldParams) -> bool:
    """Off only when every wheel is beyond the track edge."""
    half = track.width / 2.0
    # cheap reject: a wheel is at most half the diagonal from the CG
    reach = math.hypot(params.vehicle.length, params.vehicle.track_width) / 2.0
    _, d_cg = track.project(state.x, state.y)
    if abs(d_cg) + reach <= half:
        return False
    for wx, wy in wheel_positions(state, params.vehicle):
        _, d = track.project(wx, wy)
        if abs(d) <= half:
            return False
    return True


@dataclass
class BotState:
    s: float
    offset: float
    target_offset: float
    next_switch: float  # episode time of the next lane hop


class DrivingEnv:
    """Single-car episode with optional slower traffic.

    step() order: move car, move bots, then check crash, off-track, lap
    completion and timeout in that priority. Crash and off-track zero the
    step reward.
    """

    def __init__(self, track: Track, params: WorldParams = WorldParams(),
                 rng: np.random.Generator | None = None):
        self.track = track
        self.params = params
        self.rng = rng if rng is not None else np.random.default_rng()
        self.actions = action_table(params)
        self.n_actions = len(self.actions)
        self.state = VehicleState()
        self.bots: list[BotState] = []
        self.outcome = Outcome.RUNNING
        self.steps = 0
        self.cum_progress = 0.0
        self.cars_passed = 0
        self.time = 0.0
        self._last_s = 0.0
        self._last_steer_idx: int | None = None
        self._bot_gaps: list[float] = []

    # -- lifecycle ---------------------------------------------------------

    def reset(self, start_s: float | None = None, start_offset: float = 0.0,
              start_speed: float | None = None) -> VehicleState:
        """Place the car (random pose when start_s is None) and spawn bots."""
        track, p = self.track, self.params
        if start_s is None:
            s0 = float(self.rng.uniform(0.0, track.length))
            offset = float(self.rng.uniform(-track.width / 4, track.width / 4))
            jitter = float(self.rng.uniform(-0.15, 0.15))
            speed = float(self.rng.uniform(0.2, 0.6)) * p.vehicle.v_max
        else:
            s0, offset, jitter = start_s, start_offset, 0.0
            speed = 0.5 * p.vehicle.v_max if start_speed is None else start_speed
        x, y, heading = track.pose_at(s0, offset)
        self.state = VehicleState(x=x, y=y, heading=wrap_angle(heading + jitter),
                                  speed=speed)
        self.outcome = Outcome.RUNNING
        self.steps = 0
        self.cum_progress = 0.0
        self.cars_passed = 0
        self.time = 0.0
        self._last_s = s0
        self._last_steer_idx = None
        half_lane = track.width / 4.0
        self.bots = []
        for i in range(p.bot_count):
            gap = track.length * (i + 1) / (p.bot_count + 1)
            lane = half_lane if self.rng.random() < 0.5 else -half_lane
            self.bots.append(BotState(
                s=(s0 + gap) % track.length,
                offset=lane, target_offset=lane,
                next_switch=float(self.rng.uniform(0.0, p.bot_lane_period)),
            ))
        self._bot_gaps = [self._signed_gap(b.s, s0) for b in self.bots]
        return self.state

    # -- helpers -----------------------------------------------------------

    def _signed_gap(self, bot_s: float, car_s: float) -> float:
        """Bot position relative to the car in (-L/2, L/2]."""
        L = self.track.length
        g = (bot_s - car_s) % L
        return g if g <= L / 2 else g - L

    def bot_poses(self) -> list[tuple[float, float, float]]:
        return [self.track.pose_at(b.s, b.offset) for b in self.bots]

    def _advance_bots(self) -> None:
        p = self.params
        dt = p.vehicle.dt
        speed = p.bot_speed_frac * p.vehicle.v_max
        slew = self.track.width / 2.0  # m/s toward the target lane
        for b in self.bots:
            b.s = (b.s + speed * dt) % self.track.length
            if self.time >= b.next_switch:
                b.target_offset = -b.target_offset
                b.next_switch += p.bot_lane_period
            delta = b.target_offset - b.offset
            max_move = slew * dt
            b.offset += max(-max_move, min(max_move, delta))

    def _crashed(self) -> bool:
        radius = 0.5 * self.params.vehicle.length + 0.5 * self.params.bot_length
        for bx, by, _ in self.bot_poses():
            if math.hypot(self.state.x - bx, self.state.y - by) < radius:
                return True
        return False

    # -- stepping ----------------------------------------------------------

    def step(self, action: int) -> tuple[VehicleState, float, bool, dict]:
        if self.outcome is not Outcome.RUNNING:
            raise RuntimeError("episode finished; call reset()")
        if not 0 <= action < self.n_actions:
            raise IndexError(f"action {action} outside [0, {self.n_actions})")
        p = self.params
        steer, accel = self.actions[action]
        steer_idx = action // p.n_accel
        steer_changed = (self._last_steer_idx is not None
                         and steer_idx != self._last_steer_idx)
        self._last_steer_idx = steer_idx

        self.state = kin_step(self.state, float(steer), float(accel), p.vehicle)
        self.time += p.vehicle.dt
        self.steps += 1
        self._advance_bots()

        s, d = self.track.project(self.state.x, self.state.y)
        ds = self._signed_gap(s, self._last_s)  # wrapped delta, same math
        self.cum_progress += ds
        self._last_s = s

        for i, b in enumerate(self.bots):
            g_new = self._signed_gap(b.s, s)
            g_old = self._bot_gaps[i]
            if g_old > 0.0 >= g_new and g_old - g_new < self.track.length / 4:
                self.cars_passed += 1
            self._bot_gaps[i] = g_new

        if self._crashed():
            self.outcome = Outcome.CRASH
            reward = 0.0
        elif is_off_track(self.state, self.track, p):
            self.outcome = Outcome.OFF_TRACK
            reward = 0.0
        else:
            if p.reward == "centerline":
                reward = reward_centerline(d, self.state.speed, steer_changed,
                                           self.track.width, p)
            else:
                reward = reward_whiteline(d, self.state.speed,
                                          self.track.width, p)
            if self.cum_progress >= self.track.length:
                self.outcome = Outcome.COMPLETED
            elif self.steps >= p.timeout_steps:
                self.outcome = Outcome.TIMEOUT

        done = self.outcome is not Outcome.RUNNING
        info = {
            "s": s, "d": d, "speed": self.state.speed,
            "progress": self.cum_progress / self.track.length,
            "cars_passed": self.cars_passed,
            "outcome": self.outcome.value, "steps": self.steps,
        }
        return self.state, reward, done, info


def pilot_action(env: DrivingEnv, lookahead: float = 0.5,
                 target_speed: float | None = None,
                 lane_offset: float = 0.0) -> int:
    """Reference pilot: chase a point `lookahead` meters ahead on the
    centerline (or a parallel lane at `lane_offset`).

    Picks the discrete action nearest the pure-pursuit steer; useful for
    smoke tests and demo footage, not a trained policy.
    """
    p = env.params
    st = env.state
    s, _ = env.track.project(st.x, st.y)
    tx, ty, _ = env.track.pose_at(s + lookahead, lane_offset)
    desired = math.atan2(ty - st.y, tx - st.x)
    err = wrap_angle(desired - st.heading)
    steer_cmd = max(-p.max_steer, min(p.max_steer, 1.8 * err))
    if target_speed is None:
        target_speed = 0.55 * p.vehicle.v_max
    accel_cmd = p.max_accel if st.speed < target_speed else -p.max_accel
    steers = np.linspace(-p.max_steer, p.max_steer, p.n_steer)
    accels = np.linspace(-p.max_accel, p.max_accel, p.n_accel)
    si = int(np.argmin(np.abs(steers - steer_cmd)))
    ai = int(np.argmin(np.abs(accels - accel_cmd)))
    return si * p.n_accel + ai
