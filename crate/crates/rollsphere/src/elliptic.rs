//! Incomplete elliptic integral of the first kind and Jacobi sn, in the
//! parameter convention
//!
//! `F(m, theta) = integral_0^theta dt / sqrt(1 - m sin^2 t)`,
//!
//! i.e. `m` multiplies `sin^2` directly (`m = k^2` in modulus notation). All
//! evaluation is by AGM / Landen recursions, quadratically convergent and
//! uniformly accurate in `m`; no series in `m` anywhere.

use crate::error::{Error, Result};

/// Recursion tolerance: AGM iterations stop once `c_n <= AGM_TOL * a_n`.
const AGM_TOL: f64 = 1e-14;
const MAX_ITERS: usize = 64;

fn check_param(m: f64) -> Result<()> {
    if (0.0..1.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::DomainError { m })
    }
}

/// AGM scale of `(1, sqrt(1-m))`: the chain `(a_n, b_n, c_n)` down to
/// `c_N ~ 0`, returning `(a_n, c_n)` pairs.
fn agm_chain(m: f64) -> Vec<(f64, f64)> {
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut chain = vec![(a, (m).sqrt())];
    for _ in 0..MAX_ITERS {
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
        let an = 0.5 * (a + b);
        let c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = an;
        chain.push((a, c));
    }
    chain
}

/// Principal evaluation of `F` on `|theta| <= pi/2` by the ascending Landen
/// angle recursion `tan(phi_{n+1} - phi_n) = (b_n/a_n) tan(phi_n)`, branch
/// chosen so `phi_{n+1}` is nearest `2 phi_n`; then `F = phi_N / (2^N a_N)`.
fn f_principal(m: f64, theta: f64) -> f64 {
    let sign = theta.signum();
    let mut phi = theta.abs();
    if phi == 0.0 {
        return 0.0;
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut n = 0u32;
    for _ in 0..MAX_ITERS {
        let inc = ((b / a) * phi.tan()).atan();
        phi = phi + inc + std::f64::consts::PI * ((phi - inc) / std::f64::consts::PI).round();
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        n += 1;
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
    }
    sign * phi / ((1u64 << n) as f64 * a)
}

/// Incomplete elliptic integral of the first kind in the parameter
/// convention, for any real `theta`; arguments beyond `|theta| <= pi/2` use
/// the quasi-periodic extension `F(m, theta + k pi) = F(m, theta) + 2 k K`.
///
/// Errors with [`Error::DomainError`] unless `0 <= m < 1`.
#[allow(non_snake_case)]
pub fn elliptic_F(m: f64, theta: f64) -> Result<f64> {
    check_param(m)?;
    if !theta.is_finite() {
        return Err(Error::ConditionError { value: theta });
    }
    let k = (theta / std::f64::consts::PI).round();
    let reduced = theta - k * std::f64::consts::PI;
    let principal = f_principal(m, reduced);
    if k == 0.0 {
        Ok(principal)
    } else {
        Ok(principal + 2.0 * k * f_principal(m, std::f64::consts::FRAC_PI_2))
    }
}

/// Complete integral `K(m) = F(m, pi/2)`.
#[allow(non_snake_case)]
pub fn elliptic_K(m: f64) -> Result<f64> {
    check_param(m)?;
    Ok(f_principal(m, std::f64::consts::FRAC_PI_2))
}

/// Jacobi amplitude `am(m, u)`, the quasi-periodic inverse of `F`:
/// `am(m, F(m, theta)) = theta`. Forward AGM chain, then the amplitude
/// back-recursion `phi_{n-1} = (phi_n + asin((c_n/a_n) sin phi_n)) / 2`
/// seeded with `phi_N = 2^N a_N u`.
pub(crate) fn jacobi_am(m: f64, u: f64) -> Result<f64> {
    check_param(m)?;
    let chain = agm_chain(m);
    let last = chain.len() - 1;
    let mut phi = (1u64 << last) as f64 * chain[last].0 * u;
    for n in (1..=last).rev() {
        let (a, c) = chain[n];
        phi = 0.5 * (phi + ((c / a) * phi.sin()).asin());
    }
    Ok(phi)
}

/// Jacobi `sn(m, u) = sin(am(m, u))`, satisfying `sn(m, F(m, theta)) =
/// sin(theta)`.
///
/// Errors with [`Error::DomainError`] unless `0 <= m < 1`.
pub fn jacobi_sn(m: f64, u: f64) -> Result<f64> {
    Ok(jacobi_am(m, u)?.sin())
}
