//! Minimal SO(3) / so(3) primitives shared by all other modules.
//!
//! Rotations are stored as plain 3x3 matrices so that the reconstruction
//! equation `Rdot = hat(omega) R` can be integrated componentwise and
//! re-orthonormalized afterwards; no quaternion layer in between.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Orthogonality / unit-determinant tolerance for a matrix to count as a
/// member of SO(3). Matches the drift budget of the RK4 + projection loop.
pub const TOL_ORTH: f64 = 1e-9;

/// Below this angle `rot_exp` switches to the second-order Taylor
/// expansion of sin(t)/t and (1 - cos t)/t^2 to avoid 0/0.
pub const SMALL_ANGLE: f64 = 1e-12;

/// Skewness tolerance accepted by `unhat`.
pub const TOL_SKEW: f64 = 1e-9;

/// Convergence threshold of the polar-projection fixed point.
pub const TOL_PROJECT: f64 = 1e-14;

/// The hat map: `hat(v) w = v x w` for all `w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of the hat map. The input must be skew-symmetric within
/// [`TOL_SKEW`]; the result is read off the skew-symmetrization of `m`,
/// so roundoff-level asymmetry is averaged away rather than folded in.
pub fn unhat(m: &Mat3) -> Result<Vec3> {
    let asym = (m + m.transpose()).norm();
    if asym > TOL_SKEW {
        return Err(Error::NotSkew { asymmetry: asym });
    }
    Ok(Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    ))
}

/// Rodrigues closed form of the matrix exponential of `hat(v)`:
/// `exp(hat(v)) = I + sin|v| hat(v/|v|) + (1 - cos|v|) hat(v/|v|)^2`.
pub fn rot_exp(v: &Vec3) -> Mat3 {
    let t = v.norm();
    let k = hat(v);
    let (c1, c2) = if t < SMALL_ANGLE {
        // sin(t)/t ~ 1 - t^2/6, (1-cos t)/t^2 ~ 1/2 - t^2/24
        (1.0 - t * t / 6.0, 0.5 - t * t / 24.0)
    } else {
        (t.sin() / t, (1.0 - t.cos()) / (t * t))
    };
    Mat3::identity() + c1 * k + c2 * (k * k)
}

/// Nearest special-orthogonal matrix, by the iterated-averaging form of the
/// polar decomposition: `M <- (M + M^-T) / 2` until the update falls below
/// [`TOL_PROJECT`]. Converges quadratically for any `M` with `det M > 0`.
pub fn project_rotation(m: &Mat3) -> Result<Mat3> {
    let det = m.determinant();
    if det <= 0.0 {
        return Err(Error::Degenerate { det });
    }
    let mut r = *m;
    for _ in 0..100 {
        let inv_t = r
            .try_inverse()
            .ok_or(Error::Degenerate { det })?
            .transpose();
        let next = 0.5 * (r + inv_t);
        let delta = (next - r).norm();
        r = next;
        if delta < TOL_PROJECT {
            break;
        }
    }
    Ok(r)
}

/// True when `m` is orthogonal with unit determinant within [`TOL_ORTH`].
pub fn is_rotation(m: &Mat3) -> bool {
    ((m.transpose() * m) - Mat3::identity()).norm() <= TOL_ORTH
        && (m.determinant() - 1.0).abs() <= TOL_ORTH
}

/// Axis-angle decomposition of a rotation matrix (angle in [0, pi]).
/// The axis is arbitrary for the identity.
pub fn axis_angle(r: &Mat3) -> (Vec3, f64) {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let w = Vec3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    if w.norm() > 1e-12 {
        (w.normalize(), angle)
    } else if angle < 1e-6 {
        (Vec3::new(0.0, 0.0, 1.0), 0.0)
    } else {
        // angle ~ pi: axis from the symmetric part, R = 2 aa^T - I
        let s = 0.5 * (r + Mat3::identity());
        let col = (0..3).max_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)])).unwrap();
        let mut a = Vec3::new(s[(0, col)], s[(1, col)], s[(2, col)]);
        a /= s[(col, col)].sqrt();
        (a.normalize(), angle)
    }
}
