"""Per-robot control: gradient steering, collision-triggered waiting, random turns.

A robot is always in one of four modes: driving forward along the cue
gradient, rotating away from a wall, waiting (and cleaning) after meeting
another robot, or rotating randomly after a wait expires. Transitions are
pure functions of (state, sensor reading, contact events), so controllers
for different robots can be stepped independently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

WAIT_SATURATION = 25000.0  # cue-squared scale in the waiting-time law


@dataclass(frozen=True)
class ControllerParams:
    """Tunables of the behavior.

    alpha divides the left/right sensor difference before it biases the
    wheels (smaller alpha = twitchier steering). beta is the wheel bias:
    both wheels run at beta on flat cue, so it sets cruise speed.
    omega_max caps the waiting time. Turns draw their magnitude uniformly
    from [turn_min_deg, turn_max_deg] with a fair random sign and execute
    in place at turn_rate_deg_s.
    """

    alpha: float = 2.0
    beta: float = 6.0
    omega_max_s: float = 30.0
    turn_min_deg: float = 90.0
    turn_max_deg: float = 180.0
    turn_rate_deg_s: float = 180.0
    wheel_max: float = 10.0
    waiting_formula: str = "squared"  # or "literal"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 <= self.beta <= self.wheel_max:
            raise ValueError(f"beta must be in [0, {self.wheel_max}], got {self.beta}")
        if self.omega_max_s <= 0:
            raise ValueError(f"omega_max_s must be positive, got {self.omega_max_s}")
        if self.waiting_formula not in ("squared", "literal"):
            raise ValueError(f"waiting_formula must be 'squared' or 'literal', got {self.waiting_formula!r}")


@dataclass
class SensorReading:
    """Ground-cue intensities under the left and right wheels."""

    s_l: float
    s_r: float

    @property
    def mean(self) -> float:
        return 0.5 * (self.s_l + self.s_r)


@dataclass(frozen=True)
class WheelCommand:
    """Left/right wheel speeds in wheel units, each in [0, 10]."""

    n_l: float
    n_r: float


STOPPED = WheelCommand(0.0, 0.0)


# --- FSM states -------------------------------------------------------------

class Forward:
    """Driving along the cue gradient."""

    __slots__ = ()

    def __repr__(self):
        return "Forward()"

    def __eq__(self, other):
        return isinstance(other, Forward)

    def __hash__(self):
        return hash(Forward)


@dataclass(frozen=True)
class AvoidWall:
    """Rotating in place away from a wall; remaining_turn_deg is signed."""

    remaining_turn_deg: float


@dataclass(frozen=True)
class Waiting:
    """Stopped and cleaning; remaining_s counts down to zero."""

    remaining_s: float


@dataclass(frozen=True)
class PostWaitTurn:
    """Rotating in place after a wait expired; remaining_turn_deg is signed."""

    remaining_turn_deg: float


FORWARD = Forward()
FsmState = Forward | AvoidWall | Waiting | PostWaitTurn


# --- control laws -----------------------------------------------------------

def waiting_time(mean_cue: float, params: ControllerParams) -> float:
    """Waiting duration as a saturating function of the sensed cue mean.

    Default ("squared") form: omega_max * m^2 / (m^2 + 25000), increasing
    on [0, 255] and topping out near 21.67 s at m = 255. The "literal"
    form omega_max * m / (m^2 + 25000) is kept as a config switch; it
    peaks below 0.1 s, which defeats aggregation.
    """
    m = float(mean_cue)
    if params.waiting_formula == "squared":
        return params.omega_max_s * m * m / (m * m + WAIT_SATURATION)
    return params.omega_max_s * m / (m * m + WAIT_SATURATION)


def wheel_speeds(reading: SensorReading, params: ControllerParams) -> WheelCommand:
    """Differential steering toward the stronger sensor.

    n_r = (s_l - s_r)/alpha + beta and n_l the mirror image, both clamped
    to [0, wheel_max]. Equal sensors drive straight at the bias beta; the
    unclamped speeds always sum to 2*beta.
    """
    diff = (reading.s_l - reading.s_r) / params.alpha
    hi = params.wheel_max
    n_r = diff + params.beta
    n_l = -diff + params.beta
    return WheelCommand(
        n_l=0.0 if n_l < 0.0 else (hi if n_l > hi else n_l),
        n_r=0.0 if n_r < 0.0 else (hi if n_r > hi else n_r),
    )


def random_turn(rng: np.random.Generator, params: ControllerParams) -> float:
    """Signed turn angle: magnitude uniform in [turn_min, turn_max] degrees,
    direction a fair coin, drawn independently."""
    magnitude = rng.uniform(params.turn_min_deg, params.turn_max_deg)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return sign * magnitude


# --- state machine ----------------------------------------------------------

def step_fsm(
    state: FsmState,
    reading: SensorReading,
    robot_contact: bool,
    wall_contact: bool,
    dt: float,
    rng: np.random.Generator,
    params: ControllerParams,
) -> tuple[FsmState, WheelCommand, float]:
    """Advance one robot's state machine by dt.

    Returns (next state, wheel command, in-place turn consumed this step
    in degrees). Robot contact takes priority over wall contact; waiting
    and turning states ignore contact events. Turns are executed
    kinematically (wheels stay at 0) because the wheel range [0, 10]
    admits no reverse speed.
    """
    if type(state) is Forward:
        if robot_contact:
            return Waiting(waiting_time(reading.mean, params)), STOPPED, 0.0
        if wall_contact:
            return AvoidWall(random_turn(rng, params)), STOPPED, 0.0
        return state, wheel_speeds(reading, params), 0.0

    if type(state) is Waiting:
        remaining = state.remaining_s - dt
        if remaining > 0.0:
            return Waiting(remaining), STOPPED, 0.0
        return PostWaitTurn(random_turn(rng, params)), STOPPED, 0.0

    # AvoidWall / PostWaitTurn: rotate in place until the angle is consumed.
    remaining = state.remaining_turn_deg
    max_step = params.turn_rate_deg_s * dt
    step = remaining if abs(remaining) <= max_step else math.copysign(max_step, remaining)
    left = remaining - step
    if abs(left) < 1e-12:
        return FORWARD, STOPPED, step
    if type(state) is AvoidWall:
        return AvoidWall(left), STOPPED, step
    return PostWaitTurn(left), STOPPED, step
