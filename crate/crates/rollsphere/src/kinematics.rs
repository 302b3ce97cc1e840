//! Constrained kinematics of the two-wheel-driven spherical robot.
//!
//! Wheel rates `(u1, u2)` drive the shape angles `(phi1, phi2)`; the rolling
//! constraints determine the spatial angular velocity `omega` of the sphere
//! and the planar velocity of its center. `integrate` reconstructs the full
//! state on SO(3) x R^2 with fixed-step RK4 plus polar re-orthonormalization.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::geometry::{hat, project_rotation, Mat3, Vec3};

pub type Vec2 = Vector2<f64>;

/// Physical constants of the robot.
///
/// `c = rho / (2 w (1 + j_ratio))` is the derived coupling constant of the
/// holonomic constraint `psi = c (phi1 - phi2)`; it equals
/// `rho I_s / (2 w (I_s + J))` rewritten in the inertia ratio `j_ratio = J/I_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    /// Sphere radius.
    pub r: f64,
    /// Wheel radius.
    pub rho: f64,
    /// Distance from the sphere center to the wheel plane.
    pub h: f64,
    /// Half track width (wheel-to-midline distance).
    pub w: f64,
    /// Inertia ratio J / I_s of the internal unit to the sphere.
    pub j_ratio: f64,
}

impl RobotParams {
    /// Validates positivity of the lengths and non-negativity of `j_ratio`.
    pub fn new(r: f64, rho: f64, h: f64, w: f64, j_ratio: f64) -> Result<Self> {
        let check = |key: &str, v: f64, allow_zero: bool| -> Result<()> {
            let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
            if ok {
                Ok(())
            } else {
                Err(Error::ValidationError {
                    key: key.to_string(),
                    message: format!(
                        "must be {} and finite, got {v}",
                        if allow_zero { "non-negative" } else { "positive" }
                    ),
                })
            }
        };
        check("r", r, false)?;
        check("rho", rho, false)?;
        check("h", h, false)?;
        check("w", w, false)?;
        check("j_ratio", j_ratio, true)?;
        Ok(Self { r, rho, h, w, j_ratio })
    }

    /// Derived constant `c = rho / (2 w (1 + j_ratio))`.
    pub fn c(&self) -> f64 {
        self.rho / (2.0 * self.w * (1.0 + self.j_ratio))
    }
}

/// Wheel angles on the covering space R x R (unwrapped, radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeState {
    pub phi1: f64,
    pub phi2: f64,
}

impl ShapeState {
    pub fn new(phi1: f64, phi2: f64) -> Self {
        Self { phi1, phi2 }
    }

    /// Shape difference `Delta = phi1 - phi2`, the only combination the
    /// connection depends on.
    pub fn delta(&self) -> f64 {
        self.phi1 - self.phi2
    }
}

/// Fiber element `g = (R, x)` in SO(3) x R^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub r: Mat3,
    pub x: Vec2,
}

impl Pose {
    pub fn identity() -> Self {
        Self { r: Mat3::identity(), x: Vec2::zeros() }
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub t: f64,
    pub shape: ShapeState,
    pub pose: Pose,
}

/// Time-ordered full-state samples.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// Spatial angular velocity of the sphere under wheel rates `u`:
/// `omega = (-(rho/2h) cos(c Delta) (u1+u2), -(rho/2h) sin(c Delta) (u1+u2),
///           -c j_ratio (u1-u2))`.
pub fn spatial_angular_velocity(params: &RobotParams, shape: &ShapeState, u: (f64, f64)) -> Vec3 {
    let cd = params.c() * shape.delta();
    let k = params.rho / (2.0 * params.h);
    let sum = u.0 + u.1;
    let diff = u.0 - u.1;
    Vec3::new(
        -k * cd.cos() * sum,
        -k * cd.sin() * sum,
        -params.c() * params.j_ratio * diff,
    )
}

/// Velocity of the sphere center:
/// `xdot = (r rho / 2h) (u1+u2) (-sin(c Delta), cos(c Delta))`.
pub fn center_velocity(params: &RobotParams, shape: &ShapeState, u: (f64, f64)) -> Vec2 {
    let cd = params.c() * shape.delta();
    let k = params.r * params.rho / (2.0 * params.h);
    let sum = u.0 + u.1;
    Vec2::new(-k * cd.sin() * sum, k * cd.cos() * sum)
}

/// Yaw angle of the wheel axis, `psi = c (phi1 - phi2)`, with the convention
/// `psi(0) = phi1(0) = phi2(0) = 0`.
pub fn psi(params: &RobotParams, shape: &ShapeState) -> f64 {
    params.c() * shape.delta()
}

/// Horizontal lift of the shape velocity `u` at `(phi, R)`:
/// the unique constraint-satisfying tangent
/// `(phi1dot, phi2dot, Rdot, xdot) = (u1, u2, hat(omega) R, xdot)`.
pub fn horizontal_lift(
    params: &RobotParams,
    shape: &ShapeState,
    r: &Mat3,
    u: (f64, f64),
) -> (f64, f64, Mat3, Vec2) {
    let omega = spatial_angular_velocity(params, shape, u);
    (u.0, u.1, hat(&omega) * r, center_velocity(params, shape, u))
}

#[derive(Clone, Copy)]
struct State {
    phi: Vec2,
    r: Mat3,
    x: Vec2,
}

#[derive(Clone, Copy)]
struct Deriv {
    phi: Vec2,
    r: Mat3,
    x: Vec2,
}

fn rhs(params: &RobotParams, s: &State, u: (f64, f64)) -> Deriv {
    let shape = ShapeState::new(s.phi.x, s.phi.y);
    let omega = spatial_angular_velocity(params, &shape, u);
    Deriv {
        phi: Vec2::new(u.0, u.1),
        r: hat(&omega) * s.r,
        x: center_velocity(params, &shape, u),
    }
}

fn advance(s: &State, d: &Deriv, dt: f64) -> State {
    State {
        phi: s.phi + dt * d.phi,
        r: s.r + dt * d.r,
        x: s.x + dt * d.x,
    }
}

/// Integrates the kinematic control system from `q0` under the control law
/// `u(t)` over `[0, T]` with fixed step `dt` (the final step is shrunk when
/// `T` is not a multiple of `dt`). The rotation block is treated as nine raw
/// components during each RK4 step and projected back to SO(3) afterwards.
///
/// Control discontinuities must be aligned with step boundaries by the
/// caller; the integrator does not detect them.
pub fn integrate(
    params: &RobotParams,
    q0: (ShapeState, Pose),
    u: impl Fn(f64) -> (f64, f64),
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidStep { dt });
    }
    let mut state = State {
        phi: Vec2::new(q0.0.phi1, q0.0.phi2),
        r: q0.1.r,
        x: q0.1.x,
    };
    let mut t = 0.0;
    let mut samples = Vec::with_capacity((t_final / dt).ceil() as usize + 2);
    let push = |samples: &mut Vec<Sample>, t: f64, s: &State| {
        samples.push(Sample {
            t,
            shape: ShapeState::new(s.phi.x, s.phi.y),
            pose: Pose { r: s.r, x: s.x },
        });
    };
    push(&mut samples, t, &state);
    // Guard against dt-relative roundoff deciding whether one more full step fits.
    let eps = dt * 1e-12;
    while t < t_final - eps {
        let step = dt.min(t_final - t);
        let k1 = rhs(params, &state, u(t));
        let k2 = rhs(params, &advance(&state, &k1, 0.5 * step), u(t + 0.5 * step));
        let k3 = rhs(params, &advance(&state, &k2, 0.5 * step), u(t + 0.5 * step));
        let k4 = rhs(params, &advance(&state, &k3, step), u(t + step));
        state = State {
            phi: state.phi + step / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
            r: state.r + step / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
            x: state.x + step / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        };
        state.r = project_rotation(&state.r)?;
        t += step;
        push(&mut samples, t, &state);
    }
    Ok(Trajectory { samples })
}
