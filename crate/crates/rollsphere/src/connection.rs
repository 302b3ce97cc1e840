//! Principal connection of the rolling constraint, its curvature, and the
//! rank certificate for fiber controllability.
//!
//! Everything is expressed in the trivialization over shape space: the local
//! one-forms `A_i(phi)` with values in so(3) x R^2 (so(3) part unhatted to a
//! vector), and the curvature two-form coefficient `B(phi)`. Horizontal means
//! `omega = -(A_so3_1 u1 + A_so3_2 u2)` and `xdot = -A_r2 (u1 + u2)`.

use crate::exec;
use crate::geometry::Vec3;
use crate::kinematics::{RobotParams, ShapeState, Vec2};

/// Local connection coefficients at a shape point.
///
/// `a_r2_1 == a_r2_2` always: the translational part couples to the wheels
/// only through `u1 + u2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionLocal {
    pub a_so3_1: Vec3,
    pub a_so3_2: Vec3,
    pub a_r2_1: Vec2,
    pub a_r2_2: Vec2,
}

/// Local curvature coefficient: `B = dA + [A1, A2] dphi1 ^ dphi2` evaluated
/// on the coordinate bivector. The so(3) part has zero third component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureLocal {
    pub b_so3: Vec3,
    pub b_r2: Vec2,
}

/// Rank report of the span test at one shape point.
#[derive(Debug, Clone, Copy)]
pub struct CertificateReport {
    /// True iff the so(3) block has rank 3 and the R^2 block has rank 2.
    pub fiber_controllable: bool,
    /// Singular values of the 3x3 so(3) block, descending.
    pub sv_so3: [f64; 3],
    /// Singular values of the 2x3 R^2 block, descending.
    pub sv_r2: [f64; 2],
}

impl CertificateReport {
    /// Smallest singular value that the rank decision depends on.
    pub fn min_relevant_sv(&self) -> f64 {
        self.sv_so3[2].min(self.sv_r2[1])
    }
}

/// Summary of the certificate over a shape-space grid.
#[derive(Debug, Clone, Copy)]
pub struct GridCertificate {
    pub all_controllable: bool,
    /// Minimum over the grid of the rank-relevant singular values.
    pub min_sv: f64,
    /// Spread of the per-point minima; near zero because the connection
    /// depends on phi1 - phi2 only.
    pub max_sv: f64,
    pub grid: usize,
}

/// Relative singular-value threshold for the rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Connection coefficients `A_so3_i`, `A_r2_i` at `phi`:
/// `A_so3_1 = ((rho/2h) cos(c Delta), (rho/2h) sin(c Delta), c j_ratio)`,
/// `A_so3_2` the same with third entry negated,
/// `A_r2_1 = A_r2_2 = (r rho/2h)(sin(c Delta), -cos(c Delta))`.
pub fn connection_at(params: &RobotParams, shape: &ShapeState) -> ConnectionLocal {
    let cd = params.c() * shape.delta();
    let k = params.rho / (2.0 * params.h);
    let spin = params.c() * params.j_ratio;
    let a_r2 = Vec2::new(params.r * k * cd.sin(), -params.r * k * cd.cos());
    ConnectionLocal {
        a_so3_1: Vec3::new(k * cd.cos(), k * cd.sin(), spin),
        a_so3_2: Vec3::new(k * cd.cos(), k * cd.sin(), -spin),
        a_r2_1: a_r2,
        a_r2_2: a_r2,
    }
}

/// Curvature coefficients at `phi`:
/// `B_so3 = (rho^2/2hw)(-sin(c Delta), cos(c Delta), 0)`,
/// `B_r2  = (c r rho/h)(cos(c Delta), sin(c Delta))`.
pub fn curvature_at(params: &RobotParams, shape: &ShapeState) -> CurvatureLocal {
    let cd = params.c() * shape.delta();
    let k_so3 = params.rho * params.rho / (2.0 * params.h * params.w);
    let k_r2 = params.c() * params.r * params.rho / params.h;
    CurvatureLocal {
        b_so3: Vec3::new(-k_so3 * cd.sin(), k_so3 * cd.cos(), 0.0),
        b_r2: Vec2::new(k_r2 * cd.cos(), k_r2 * cd.sin()),
    }
}

fn block_rank(sv: &[f64], need: usize) -> bool {
    let largest = sv.first().copied().unwrap_or(0.0);
    sv.iter().take(need).all(|s| *s > RANK_TOL * largest && *s > 0.0)
}

/// Span test of the fiber-controllability theorem at one shape point.
///
/// Builds the three g-valued columns `{(A_so3_1, A_r2_1), (A_so3_2, A_r2_2),
/// (B_so3, B_r2)}` in R^3 + R^2 and checks the two blocks separately: the
/// so(3) rows must span R^3 and the R^2 rows must span R^2, each decided by
/// singular values above `RANK_TOL` relative to the block's largest.
pub fn fiber_controllability_certificate(
    params: &RobotParams,
    shape: &ShapeState,
) -> CertificateReport {
    let a = connection_at(params, shape);
    let b = curvature_at(params, shape);
    let m_so3 = nalgebra::Matrix3::from_columns(&[a.a_so3_1, a.a_so3_2, b.b_so3]);
    let m_r2 = nalgebra::Matrix2x3::from_columns(&[a.a_r2_1, a.a_r2_2, b.b_r2]);
    let sv3 = m_so3.svd(false, false).singular_values;
    let sv2 = m_r2.svd(false, false).singular_values;
    let sv_so3 = [sv3[0], sv3[1], sv3[2]];
    let sv_r2 = [sv2[0], sv2[1]];
    CertificateReport {
        fiber_controllable: block_rank(&sv_so3, 3) && block_rank(&sv_r2, 2),
        sv_so3,
        sv_r2,
    }
}

/// Evaluates the certificate on an `n x n` grid over `[0, 2pi/c)^2` and
/// aggregates. Rows are processed in parallel when the `parallel` feature is
/// enabled.
pub fn certificate_grid(params: &RobotParams, n: usize) -> GridCertificate {
    summarize(params, n, exec::map_indexed(n, |i| grid_row(params, n, i)))
}

/// Sequential twin of [`certificate_grid`], for benchmarking the parallel
/// speedup. Results are identical.
pub fn certificate_grid_serial(params: &RobotParams, n: usize) -> GridCertificate {
    summarize(params, n, exec::map_indexed_serial(n, |i| grid_row(params, n, i)))
}

fn grid_row(params: &RobotParams, n: usize, i: usize) -> (bool, f64, f64) {
    let period = 2.0 * std::f64::consts::PI / params.c();
    let phi1 = period * i as f64 / n as f64;
    let mut ok = true;
    let mut min_sv = f64::INFINITY;
    let mut max_sv = f64::NEG_INFINITY;
    for j in 0..n {
        let phi2 = period * j as f64 / n as f64;
        let report = fiber_controllability_certificate(params, &ShapeState::new(phi1, phi2));
        ok &= report.fiber_controllable;
        min_sv = min_sv.min(report.min_relevant_sv());
        max_sv = max_sv.max(report.min_relevant_sv());
    }
    (ok, min_sv, max_sv)
}

fn summarize(_params: &RobotParams, n: usize, rows: Vec<(bool, f64, f64)>) -> GridCertificate {
    GridCertificate {
        all_controllable: rows.iter().all(|r| r.0),
        min_sv: rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        max_sv: rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
        grid: n,
    }
}
