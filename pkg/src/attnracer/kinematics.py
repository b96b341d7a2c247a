"""Kinematic bicycle model stepped with forward Euler.

The reference point is the center of gravity; `lr` is its distance from the
rear axle and `length` the wheelbase. Derivatives are evaluated at the old
state, heading stays wrapped to (-pi, pi], speed is clamped to [0, v_max].
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class VehicleParams:
    lr: float = 0.15          # CG to rear axle, m
    length: float = 0.30      # wheelbase, m
    track_width: float = 0.20  # left-right wheel separation, m
    v_max: float = 4.0        # m/s
    dt: float = 1.0 / 15.0    # integration step, s


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    if -math.pi < theta <= math.pi:
        return theta
    w = math.fmod(theta + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def slip_angle(steer: float, params: VehicleParams) -> float:
    """Angle between velocity and heading: atan((lr/L) tan(steer))."""
    return math.atan(params.lr / params.length * math.tan(steer))


def step(state: VehicleState, steer: float, accel: float,
         params: VehicleParams) -> VehicleState:
    beta = slip_angle(steer, params)
    v, psi, dt = state.speed, state.heading, params.dt
    x = state.x + v * math.cos(psi + beta) * dt
    y = state.y + v * math.sin(psi + beta) * dt
    psi_new = wrap_angle(psi + v / params.lr * math.sin(beta) * dt)
    v_new = min(max(state.speed + accel * dt, 0.0), params.v_max)
    return VehicleState(x=x, y=y, heading=psi_new, speed=v_new)


def wheel_positions(state: VehicleState,
                    params: VehicleParams) -> list[tuple[float, float]]:
    """World (x, y) of the four wheel contact points.

    Order: front-left, front-right, rear-left, rear-right.
    """
    c, s = math.cos(state.heading), math.sin(state.heading)
    half = params.track_width / 2.0
    front = params.length - params.lr  # CG to front axle
    rear = -params.lr
    out = []
    for along in (front, rear):
        ax = state.x + along * c
        ay = state.y + along * s
        out.append((ax - half * s, ay + half * c))
        out.append((ax + half * s, ay - half * c))
    return out
