//! Geometric phases of closed shape-space loops.
//!
//! Rectangular loops admit closed forms: an area rule for the translational
//! phase (Stokes applied to the R^2 curvature) and a four-exponential product
//! for the rotational phase of the rotated rectangle. A numerical oracle
//! reconstructs either phase by integrating the kinematics around the loop.

use crate::error::{Error, Result};
use crate::geometry::{rot_exp, Mat3, Vec3};
use crate::kinematics::{integrate, Pose, RobotParams, ShapeState, Trajectory, Vec2};

/// Axis-aligned rectangle `[0, alpha] x [0, beta]` in the `(phi1, phi2)`
/// plane, traversed counterclockwise from the origin.
#[derive(Debug, Clone, Copy)]
pub struct RectLoopXY {
    pub alpha: f64,
    pub beta: f64,
}

impl RectLoopXY {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::ValidationError {
                key: "loop".to_string(),
                message: format!("side lengths must be positive, got ({alpha}, {beta})"),
            })
        }
    }
}

/// Rectangle axis-aligned in the rotated coordinates
/// `(phi1 + phi2, phi1 - phi2)`, with vertices `(0,0)`, `(alpha/2, alpha/2)`,
/// `((alpha+beta)/2, (alpha-beta)/2)`, `(beta/2, -beta/2)` traversed in that
/// order.
#[derive(Debug, Clone, Copy)]
pub struct RectLoopDiag {
    pub alpha: f64,
    pub beta: f64,
}

impl RectLoopDiag {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::ValidationError {
                key: "loop".to_string(),
                message: format!("leg lengths must be positive, got ({alpha}, {beta})"),
            })
        }
    }
}

/// Piecewise-constant control law: `(duration, u1, u2)` segments.
#[derive(Debug, Clone, Default)]
pub struct PiecewiseControl {
    pub segments: Vec<(f64, f64, f64)>,
}

impl PiecewiseControl {
    pub fn new(segments: Vec<(f64, f64, f64)>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.0 > 0.0 && s.0.is_finite()) {
                return Err(Error::ValidationError {
                    key: format!("segment[{i}]"),
                    message: format!("duration must be positive, got {}", s.0),
                });
            }
        }
        Ok(Self { segments })
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.0).sum()
    }

    /// Exact shape at time `t` (piecewise-linear cumulation), starting from
    /// `(0, 0)`.
    pub fn shape_at(&self, t: f64) -> ShapeState {
        let mut phi1 = 0.0;
        let mut phi2 = 0.0;
        let mut remaining = t;
        for &(dur, u1, u2) in &self.segments {
            let dt = remaining.min(dur).max(0.0);
            phi1 += u1 * dt;
            phi2 += u2 * dt;
            remaining -= dur;
            if remaining <= 0.0 {
                break;
            }
        }
        ShapeState::new(phi1, phi2)
    }

    /// Same loop traversed backwards: reversed segment order, negated rates.
    pub fn reversed(&self) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|&(d, u1, u2)| (d, -u1, -u2))
                .collect(),
        }
    }

    /// This control followed by `other`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(&other.segments);
        Self { segments }
    }

    /// Same path traversed `factor` times faster (rates scaled, durations
    /// divided).
    pub fn sped_up(&self, factor: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|&(d, u1, u2)| (d / factor, u1 * factor, u2 * factor))
                .collect(),
        }
    }
}

/// Integrates the kinematics segment by segment so control discontinuities
/// land exactly on step boundaries. Sample times are global.
pub fn integrate_piecewise(
    params: &RobotParams,
    q0: (ShapeState, Pose),
    control: &PiecewiseControl,
    dt: f64,
) -> Result<Trajectory> {
    let mut out = Trajectory::default();
    let mut state = q0;
    let mut t0 = 0.0;
    for &(dur, u1, u2) in &control.segments {
        let leg = integrate(params, state, |_| (u1, u2), dur, dt)?;
        let skip = usize::from(!out.samples.is_empty());
        for s in leg.samples.iter().skip(skip) {
            out.samples.push(crate::kinematics::Sample {
                t: t0 + s.t,
                shape: s.shape,
                pose: s.pose,
            });
        }
        let last = *leg.last().expect("integrate returns at least one sample");
        state = (last.shape, last.pose);
        t0 += dur;
    }
    if out.samples.is_empty() {
        out.samples.push(crate::kinematics::Sample { t: 0.0, shape: q0.0, pose: q0.1 });
    }
    Ok(out)
}

/// Area rule for the counterclockwise rectangle `[0,alpha] x [0,beta]`:
///
/// `Delta x = (r rho / (c h)) (cos(c a) + cos(c b) - cos(c(a-b)) - 1,
///                             sin(c a) - sin(c b) - sin(c(a-b)))`.
///
/// Both components follow from integrating `-B_r2` over the rectangle; the
/// quadrature and line-integral oracle tests pin the convention, and the
/// second component carries no constant term (a constant would contradict
/// `Delta x = 0` for loops with `c alpha = c beta ≡ 0 mod 2pi`).
pub fn translational_holonomy_rect(params: &RobotParams, lp: &RectLoopXY) -> Vec2 {
    let c = params.c();
    let k = params.r * params.rho / (c * params.h);
    let ca = c * lp.alpha;
    let cb = c * lp.beta;
    let cab = c * (lp.alpha - lp.beta);
    Vec2::new(
        k * (ca.cos() + cb.cos() - cab.cos() - 1.0),
        k * (ca.sin() - cb.sin() - cab.sin()),
    )
}

/// Net center displacement `x(T) - x(0)` from integrating the kinematics
/// under `control` (which should return the shape to its start).
pub fn translational_holonomy_numeric(
    params: &RobotParams,
    control: &PiecewiseControl,
    dt: f64,
) -> Result<Vec2> {
    let traj = integrate_piecewise(
        params,
        (ShapeState::new(0.0, 0.0), Pose::identity()),
        control,
        dt,
    )?;
    Ok(traj.last().expect("non-empty").pose.x)
}

/// Net rotation `R(T)` from integrating the kinematics under `control`
/// starting at the identity.
pub fn rotational_holonomy_numeric(
    params: &RobotParams,
    control: &PiecewiseControl,
    dt: f64,
) -> Result<Mat3> {
    let traj = integrate_piecewise(
        params,
        (ShapeState::new(0.0, 0.0), Pose::identity()),
        control,
        dt,
    )?;
    Ok(traj.last().expect("non-empty").pose.r)
}

/// The piecewise-constant control realizing a [`RectLoopDiag`]: rates
/// `(1/2, 1/2), (1/2, -1/2), (-1/2, -1/2), (-1/2, 1/2)` over durations
/// `alpha, beta, alpha, beta`; total duration `2(alpha + beta)`.
pub fn rect_loop_control(lp: &RectLoopDiag) -> PiecewiseControl {
    PiecewiseControl {
        segments: vec![
            (lp.alpha, 0.5, 0.5),
            (lp.beta, 0.5, -0.5),
            (lp.alpha, -0.5, -0.5),
            (lp.beta, -0.5, 0.5),
        ],
    }
}

/// Unit-rate control tracing the counterclockwise boundary of a
/// [`RectLoopXY`].
pub fn rect_loop_control_xy(lp: &RectLoopXY) -> PiecewiseControl {
    PiecewiseControl {
        segments: vec![
            (lp.alpha, 1.0, 0.0),
            (lp.beta, 0.0, 1.0),
            (lp.alpha, -1.0, 0.0),
            (lp.beta, 0.0, -1.0),
        ],
    }
}

/// Closed-form rotational holonomy of a [`RectLoopDiag`]; each edge has
/// constant spatial angular velocity, so the loop is a product of four
/// exponentials. Later edges multiply on the left (from `Rdot = hat(omega) R`):
///
/// `R(T) = exp(b c j e3^) exp(a k (cos cb, sin cb, 0)^) exp(-b c j e3^)
///         exp(-a k e1^)`,  `k = rho/2h`, `j = j_ratio`.
pub fn rotational_holonomy_rect(params: &RobotParams, lp: &RectLoopDiag) -> Mat3 {
    let c = params.c();
    let k = params.rho / (2.0 * params.h);
    let spin = c * params.j_ratio * lp.beta;
    let cb = c * lp.beta;
    let e3 = Vec3::new(0.0, 0.0, 1.0);
    rot_exp(&(spin * e3))
        * rot_exp(&(lp.alpha * k * Vec3::new(cb.cos(), cb.sin(), 0.0)))
        * rot_exp(&(-spin * e3))
        * rot_exp(&(-lp.alpha * k * Vec3::new(1.0, 0.0, 0.0)))
}

/// The leg length `beta = 2 pi / c` for which the translational phase of any
/// [`RectLoopDiag`] vanishes, leaving a pure rotation.
pub fn pure_rotation_beta(params: &RobotParams) -> Result<f64> {
    let c = params.c();
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::DegenerateParams);
    }
    Ok(2.0 * std::f64::consts::PI / c)
}

/// Closed-form translational phase of a [`RectLoopDiag`]; only the two
/// `u1 + u2 != 0` edges move the center, each along a straight line:
/// `Delta x = (r rho alpha / 2h) (sin(c beta), 1 - cos(c beta))`.
pub fn translational_holonomy_rect_diag(params: &RobotParams, lp: &RectLoopDiag) -> Vec2 {
    let k = params.r * params.rho * lp.alpha / (2.0 * params.h);
    let cb = params.c() * lp.beta;
    Vec2::new(k * cb.sin(), k * (1.0 - cb.cos()))
}
