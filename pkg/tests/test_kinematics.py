"""Bicycle-model checks against a closed-form constant-steer arc."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from attnracer.kinematics import (VehicleParams, VehicleState, slip_angle,
                                  step, wheel_positions, wrap_angle)

P = VehicleParams()


def arc_oracle(state, steer, t, params):
    """Exact pose under constant steer, zero accel: motion is a circle with
    yaw rate w = (v/lr) sin(beta) and velocity angle psi + beta."""
    beta = math.atan(params.lr / params.length * math.tan(steer))
    v = state.speed
    w = v / params.lr * math.sin(beta)
    a0 = state.heading + beta
    x = state.x + v / w * (math.sin(a0 + w * t) - math.sin(a0))
    y = state.y - v / w * (math.cos(a0 + w * t) - math.cos(a0))
    return x, y, state.heading + w * t


def test_slip_angle_reference_value():
    # atan((0.15/0.30) tan 0.2), frozen from an independent evaluation
    assert abs(slip_angle(0.2, P) - 0.10101007345816129) < 1e-15


def test_slip_angle_zero_and_sign():
    assert slip_angle(0.0, P) == 0.0
    assert slip_angle(0.3, P) > 0 and slip_angle(-0.3, P) < 0
    assert abs(slip_angle(0.3, P) + slip_angle(-0.3, P)) < 1e-15


def test_straight_line_motion():
    s = VehicleState(x=1.0, y=2.0, heading=0.5, speed=2.0)
    for _ in range(30):
        s = step(s, 0.0, 0.0, P)
    t = 30 * P.dt
    assert abs(s.x - (1.0 + 2.0 * t * math.cos(0.5))) < 1e-12
    assert abs(s.y - (2.0 + 2.0 * t * math.sin(0.5))) < 1e-12
    assert abs(s.heading - 0.5) < 1e-15
    assert abs(s.speed - 2.0) < 1e-15


def test_euler_approaches_arc_oracle():
    s0 = VehicleState(speed=2.0)
    steer, t_final = 0.25, 1.0
    fine = VehicleParams(dt=1e-4)
    s = s0
    for _ in range(int(round(t_final / fine.dt))):
        s = step(s, steer, 0.0, fine)
    x, y, psi = arc_oracle(s0, steer, t_final, fine)
    assert abs(s.x - x) < 1e-3
    assert abs(s.y - y) < 1e-3
    assert abs(s.heading - wrap_angle(psi)) < 1e-3


def test_euler_error_is_first_order():
    # halving dt should roughly halve the endpoint error
    s0 = VehicleState(speed=2.0)
    steer, t_final = 0.3, 0.8

    def endpoint_err(dt):
        params = VehicleParams(dt=dt)
        s = s0
        for _ in range(int(round(t_final / dt))):
            s = step(s, steer, 0.0, params)
        x, y, _ = arc_oracle(s0, steer, t_final, params)
        return math.hypot(s.x - x, s.y - y)

    e1, e2 = endpoint_err(0.004), endpoint_err(0.002)
    assert 1.7 < e1 / e2 < 2.3


def test_yaw_rate_matches_model():
    s = VehicleState(speed=3.0)
    steer = 0.2
    s1 = step(s, steer, 0.0, P)
    beta = slip_angle(steer, P)
    want = 3.0 / P.lr * math.sin(beta) * P.dt
    assert abs(s1.heading - want) < 1e-12


def test_speed_clamped_to_bounds():
    s = VehicleState(speed=3.95)
    s = step(s, 0.0, 100.0, P)
    assert s.speed == P.v_max
    s = VehicleState(speed=0.05)
    s = step(s, 0.0, -100.0, P)
    assert s.speed == 0.0


def test_heading_stays_wrapped():
    s = VehicleState(heading=math.pi - 0.01, speed=P.v_max)
    for _ in range(300):
        s = step(s, 0.45, 0.0, P)
        assert -math.pi < s.heading <= math.pi


@given(st.floats(-0.45, 0.45), st.floats(0.2, 4.0), st.floats(-math.pi, math.pi))
def test_mirror_symmetry(steer, speed, heading):
    """Mirroring across y=0 (negate y, heading, steer) commutes with step."""
    s = VehicleState(x=0.3, y=0.7, heading=heading, speed=speed)
    fwd = step(s, steer, 0.5, P)
    mirrored = VehicleState(x=s.x, y=-s.y, heading=wrap_angle(-s.heading),
                            speed=s.speed)
    back = step(mirrored, -steer, 0.5, P)
    assert abs(fwd.x - back.x) < 1e-12
    assert abs(fwd.y + back.y) < 1e-12
    assert abs(fwd.speed - back.speed) < 1e-12
    assert min(abs(wrap_angle(fwd.heading + back.heading)),
               abs(fwd.heading + back.heading)) < 1e-9


def test_zero_speed_is_fixed_point_of_pose():
    s = VehicleState(x=1.0, y=1.0, heading=0.3, speed=0.0)
    s1 = step(s, 0.4, 0.0, P)
    assert (s1.x, s1.y, s1.heading) == (1.0, 1.0, 0.3)


def test_wheel_positions_geometry():
    s = VehicleState(x=2.0, y=1.0, heading=0.0, speed=0.0)
    fl, fr, rl, rr = wheel_positions(s, P)
    # wheelbase apart along heading, track width apart across it
    assert abs(fl[0] - rl[0] - P.length) < 1e-12
    assert abs(fl[1] - fr[1] - P.track_width) < 1e-12
    assert abs((fl[0] + rr[0]) / 2 - (2.0 + (P.length / 2 - P.lr))) < 1e-12
    # CG sits lr behind the front-rear midpoint offset
    rear_mid = ((rl[0] + rr[0]) / 2, (rl[1] + rr[1]) / 2)
    assert abs(rear_mid[0] - (2.0 - P.lr)) < 1e-12


@given(st.floats(-20, 20))
def test_wrap_angle_range_and_identity(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert abs(math.sin(w - theta)) < 1e-9 and math.cos(w - theta) > 0.99


def test_params_defaults():
    assert (P.lr, P.length, P.track_width) == (0.15, 0.30, 0.20)
    assert P.v_max == 4.0
    assert abs(P.dt - 1 / 15) < 1e-15
