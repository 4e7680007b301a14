//! Closed-form ingredients of the blowup analysis: the self-similar profile,
//! the linearization potentials, the gauge mode at eigenvalue 1, and the
//! quadratic nonlinearity remainder, all with singularity-safe evaluation
//! near ρ = 0.

use std::sync::OnceLock;

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::numerics::gauss_legendre_on;

/// Switch point below which ρ-quotients are evaluated by truncated series.
pub const SMALL_RHO: f64 = 1e-2;
/// Number of retained Taylor terms in the small-ρ branches.
pub const SERIES_TERMS: usize = 12;

/// A profile value together with an optional first derivative at the same point.
#[derive(Clone, Copy, Debug)]
pub struct ProfileValue {
    pub value: f64,
    pub derivative: Option<f64>,
}

/// Blowup profile f₀(ρ) = 2 arctan(ρ/√(d−2)).
pub fn f0(rho: f64, dim: Dimension) -> f64 {
    2.0 * (rho / dim.sqrt_dm2()).atan()
}

/// f₀'(ρ) = 2√(d−2)/(ρ² + d − 2).
pub fn f0_prime(rho: f64, dim: Dimension) -> f64 {
    2.0 * dim.sqrt_dm2() / (rho * rho + dim.dm2())
}

/// f₀ with its derivative.
pub fn f0_with_derivative(rho: f64, dim: Dimension) -> ProfileValue {
    ProfileValue {
        value: f0(rho, dim),
        derivative: Some(f0_prime(rho, dim)),
    }
}

/// f₀(ρ)/ρ, continued smoothly through ρ = 0.
///
/// Below [`SMALL_RHO`] the arctan series 2/√(d−2) Σ (−1)^k u^{2k}/(2k+1)
/// with u = ρ/√(d−2) is truncated at [`SERIES_TERMS`] terms; above it the
/// direct quotient is used. The two branches agree to ~1e−15 at the switch.
pub fn f0_over_rho(rho: f64, dim: Dimension) -> f64 {
    let s = dim.sqrt_dm2();
    if rho < SMALL_RHO {
        let u2 = (rho / s) * (rho / s);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..SERIES_TERMS {
            term *= -u2;
            sum += term / (2 * k + 1) as f64;
        }
        2.0 / s * sum
    } else {
        f0(rho, dim) / rho
    }
}

/// The blowup solution ψ^T and its time derivative at a cone point.
///
/// Returns (ψ^T(t,r), ∂_t ψ^T(t,r)); rejects t ≥ T.
pub fn psi_t(t: f64, r: f64, vertex: f64, dim: Dimension) -> Result<(f64, f64)> {
    if t >= vertex || t < 0.0 || r < 0.0 {
        return Err(Error::OutsideCone { t, r, vertex });
    }
    let s = vertex - t;
    let rho = r / s;
    Ok((f0(rho, dim), f0_prime(rho, dim) * r / (s * s)))
}

/// Linearization potential V(ρ) = η'(f₀(ρ))/ρ² = −16(d−2)/(ρ²+d−2)²,
/// analytically continued to ρ = 0.
pub fn potential_v(rho: f64, dim: Dimension) -> f64 {
    let q = rho * rho + dim.dm2();
    -16.0 * dim.dm2() / (q * q)
}

/// Spectral-equation potential
/// V̂(ρ) = 2(ρ⁴ − 6(d−2)ρ² + (d−2)²)/(ρ²(ρ²+d−2)²).
///
/// The 1/ρ² singularity is genuine; ρ = 0 is rejected.
pub fn potential_vhat(rho: f64, dim: Dimension) -> Result<f64> {
    if rho <= 0.0 {
        return Err(Error::OutsideCone {
            t: 0.0,
            r: rho,
            vertex: 0.0,
        });
    }
    let e = dim.dm2();
    let r2 = rho * rho;
    let q = r2 + e;
    Ok(2.0 * (r2 * r2 - 6.0 * e * r2 + e * e) / (r2 * q * q))
}

/// η(x) = sin(2x) − 2x, evaluated without cancellation for small |x|.
pub fn eta(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // Σ_{k≥1} (−1)^k (2x)^{2k+1}/(2k+1)!
        let t = 2.0 * x;
        let t2 = t * t;
        let mut term = t;
        let mut sum = 0.0;
        for k in 1..=14 {
            term *= -t2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    } else {
        (2.0 * x).sin() - 2.0 * x
    }
}

/// Derivatives of η up to order 3.
pub fn eta_derivs(x: f64, order: usize) -> f64 {
    match order {
        0 => eta(x),
        1 => 2.0 * (2.0 * x).cos() - 2.0,
        2 => -4.0 * (2.0 * x).sin(),
        3 => -8.0 * (2.0 * x).cos(),
        _ => panic!("eta_derivs supports orders 0..=3, got {order}"),
    }
}

/// η(w)/w³, stable through w = 0 (limit −4/3).
fn eta_over_w3(w: f64) -> f64 {
    if w.abs() < 0.5 {
        let t2 = 4.0 * w * w;
        // η(w)/w³ = Σ_{k≥1} (−1)^k 2^{2k+1} w^{2k−2}/(2k+1)!
        let mut term = -8.0 / 6.0;
        let mut sum = term;
        for k in 2..=14 {
            term *= -t2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
        }
        sum
    } else {
        eta(w) / (w * w * w)
    }
}

/// sin(w)/w, stable through w = 0.
fn sinc(w: f64) -> f64 {
    if w.abs() < 1e-4 {
        1.0 - w * w / 6.0 + w * w * w * w / 120.0
    } else {
        w.sin() / w
    }
}

/// cos(2 f₀(ρ)) in closed rational form: 1 − 8u²/(1+u²)², u = ρ/√(d−2).
fn cos_2f0(rho: f64, dim: Dimension) -> f64 {
    let u2 = rho * rho / dim.dm2();
    let q = 1.0 + u2;
    1.0 - 8.0 * u2 / (q * q)
}

/// sin(2 f₀(ρ))/ρ in closed rational form: (4/√(d−2))(1−u²)/(1+u²)².
fn sin_2f0_over_rho(rho: f64, dim: Dimension) -> f64 {
    let u2 = rho * rho / dim.dm2();
    let q = 1.0 + u2;
    4.0 / dim.sqrt_dm2() * (1.0 - u2) / (q * q)
}

/// Taylor remainder N(w) = η(f₀+w) − η(f₀) − η'(f₀)w of the nonlinearity,
/// in the cancellation-free equivalent form
/// N(w) = cos(2f₀) η(w) − 2 sin(2f₀) sin²(w).
pub fn nonlinearity_remainder(rho: f64, w: f64, dim: Dimension) -> f64 {
    let f = f0(rho, dim);
    let sw = w.sin();
    (2.0 * f).cos() * eta(w) - 2.0 * (2.0 * f).sin() * sw * sw
}

fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| gauss_legendre_on(32, 0.0, 1.0))
}

/// N̂(ρ, ζ) = −(d−1)/2 · N(ρζ)/ρ³.
///
/// For ρ ≥ [`SMALL_RHO`] the closed form is used (with the quotients
/// η(ρζ)/ρ³ and sin(2f₀)/ρ evaluated stably); below the switch the value
/// comes from the triple-integral representation
/// 4(d−1)ζ² ∫∫∫ cos(2z(f₀+xyρζ))(f₀/ρ + xyζ) x dz dy dx
/// by 32-point tensor Gauss-Legendre quadrature. At ρ = 0 the integrand's
/// cosine is identically 1 and the exact limit 4(d−1)ζ²(f₀'(0)/2 + ζ/6)
/// is returned directly.
pub fn nonlinearity_nhat(rho: f64, zeta: f64, dim: Dimension) -> f64 {
    debug_assert!((0.0..=1.0).contains(&rho));
    let dm1 = dim.d_f64() - 1.0;
    if rho == 0.0 {
        let a = 2.0 / dim.sqrt_dm2();
        return 4.0 * dm1 * zeta * zeta * (0.5 * a + zeta / 6.0);
    }
    if rho < SMALL_RHO {
        return nhat_quadrature(rho, zeta, dim);
    }
    let w = rho * zeta;
    let sc = sinc(w) * zeta;
    -0.5 * dm1
        * (cos_2f0(rho, dim) * zeta.powi(3) * eta_over_w3(w)
            - 2.0 * sin_2f0_over_rho(rho, dim) * sc * sc)
}

/// Triple-integral branch of N̂, exposed for cross-checking the closed form.
pub fn nhat_quadrature(rho: f64, zeta: f64, dim: Dimension) -> f64 {
    let (nodes, weights) = gl32();
    let f = f0(rho, dim);
    let f_over = f0_over_rho(rho, dim);
    let mut total = 0.0;
    for (x, wx) in nodes.iter().zip(weights) {
        for (y, wy) in nodes.iter().zip(weights) {
            let arg = f + x * y * rho * zeta;
            let inner = f_over + x * y * zeta;
            let mut zsum = 0.0;
            for (z, wz) in nodes.iter().zip(weights) {
                zsum += wz * (2.0 * z * arg).cos();
            }
            total += wx * wy * zsum * inner * x;
        }
    }
    4.0 * (dim.d_f64() - 1.0) * zeta * zeta * total
}

/// M(ρ, ζ) = ∂_ζ N̂(ρ, ζ) = 4(d−1)(A + B + C + D), each term a triple
/// integral over the unit cube, evaluated by 32-point tensor quadrature.
pub fn nonlinearity_m(rho: f64, zeta: f64, dim: Dimension) -> f64 {
    debug_assert!((0.0..=1.0).contains(&rho));
    let (nodes, weights) = gl32();
    let f = f0(rho, dim);
    let f_over = f0_over_rho(rho, dim);
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    let mut dd = 0.0;
    for (x, wx) in nodes.iter().zip(weights) {
        for (y, wy) in nodes.iter().zip(weights) {
            let arg = f + x * y * rho * zeta;
            let (mut cz, mut szz) = (0.0, 0.0);
            for (z, wz) in nodes.iter().zip(weights) {
                let t = (2.0 * z * arg).sin();
                cz += wz * (2.0 * z * arg).cos();
                szz += wz * t * z;
            }
            let wxy = wx * wy;
            a += wxy * cz * x;
            b += wxy * szz * x * x * y;
            c += wxy * cz * x * x * y;
            dd += wxy * szz * x * x * x * y * y;
        }
    }
    let term_a = 2.0 * f_over * zeta * a;
    let term_b = -2.0 * f * zeta * zeta * b;
    let term_c = 3.0 * zeta * zeta * c;
    let term_d = -2.0 * rho * zeta.powi(3) * dd;
    4.0 * (dim.d_f64() - 1.0) * (term_a + term_b + term_c + term_d)
}

/// The gauge mode g = (g₁, g₂) spanning the eigenspace at λ = 1:
/// g₁ = 1/(ρ²+d−2), g₂ = 2(d−2)/(ρ²+d−2)².
#[derive(Clone, Copy, Debug)]
pub struct GaugeMode {
    dim: Dimension,
}

impl GaugeMode {
    pub fn g1(&self, rho: f64) -> f64 {
        1.0 / (rho * rho + self.dim.dm2())
    }

    pub fn g2(&self, rho: f64) -> f64 {
        let q = rho * rho + self.dim.dm2();
        2.0 * self.dim.dm2() / (q * q)
    }

    pub fn g1_prime(&self, rho: f64) -> f64 {
        let q = rho * rho + self.dim.dm2();
        -2.0 * rho / (q * q)
    }

    pub fn g1_second(&self, rho: f64) -> f64 {
        let q = rho * rho + self.dim.dm2();
        (6.0 * rho * rho - 2.0 * self.dim.dm2()) / (q * q * q)
    }
}

pub fn gauge_mode(dim: Dimension) -> GaugeMode {
    GaugeMode { dim }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn d(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn f0_basic_values() {
        assert_eq!(f0(0.0, d(3)), 0.0);
        assert_relative_eq!(f0(1.0, d(3)), PI / 2.0, epsilon = 1e-15);
        for n in [3, 5, 7, 9, 11] {
            let dim = d(n);
            assert_relative_eq!(f0(dim.sqrt_dm2(), dim), PI / 2.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn f0_strictly_increasing() {
        let dim = d(5);
        let mut prev = -1.0;
        for i in 0..200 {
            let v = f0(i as f64 * 0.05, dim);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn f0_over_rho_limits_and_branch_agreement() {
        assert_relative_eq!(f0_over_rho(0.0, d(3)), 2.0, epsilon = 1e-15);
        assert_relative_eq!(f0_over_rho(0.0, d(11)), 2.0 / 3.0, epsilon = 1e-15);
        // Series branch against the direct quotient, exercised via a shifted switch:
        // compare the series evaluated in its own right to the quotient at ρ = 0.5.
        let dim = d(3);
        let u2: f64 = 0.25 / dim.dm2();
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..SERIES_TERMS {
            term *= -u2;
            sum += term / (2 * k + 1) as f64;
        }
        let series = 2.0 / dim.sqrt_dm2() * sum;
        // 12 terms at u = 1/2: truncation ~ u^24/25 ≈ 2e-9; this is the series
        // radius check, the production switch sits at 1e-2 where agreement is 1e-15.
        assert_relative_eq!(series, f0(0.5, dim) / 0.5, epsilon = 1e-8);
        // Continuity across the production switch.
        let below = f0_over_rho(SMALL_RHO * (1.0 - 1e-12), dim);
        let above = f0_over_rho(SMALL_RHO * (1.0 + 1e-12), dim);
        assert_relative_eq!(below, above, epsilon = 1e-14);
    }

    #[test]
    fn psi_t_values_and_cone_guard() {
        let dim = d(3);
        let (v, vt) = psi_t(0.0, 0.0, 1.0, dim).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(vt, 0.0);
        // r/(T−t) = 1 ⇒ first component π/2.
        let (v, _) = psi_t(0.5, 0.5, 1.0, dim).unwrap();
        assert_relative_eq!(v, PI / 2.0, epsilon = 1e-14);
        assert!(psi_t(1.0, 0.1, 1.0, dim).is_err());
        assert!(psi_t(1.5, 0.1, 1.0, dim).is_err());
    }

    #[test]
    fn psi_t_solves_reduced_wave_equation() {
        // Residual of ψ_tt − ψ_rr − (d−1)/r ψ_r + (d−1)/2 sin(2ψ)/r² via
        // 8th-order finite differences at interior cone points.
        use crate::numerics::{fd_deriv1, fd_deriv2};
        for n in [3u32, 7] {
            let dim = d(n);
            let vertex = 1.0;
            let h = 2e-2;
            for i in 0..10 {
                let t = 0.1 + 0.05 * i as f64;
                let r = 0.3 * (vertex - t);
                let psi_of_t = |tt: f64| psi_t(tt, r, vertex, dim).unwrap().0;
                let psi_of_r = |rr: f64| psi_t(t, rr, vertex, dim).unwrap().0;
                let psi_tt = fd_deriv2(&psi_of_t, t, h * (vertex - t));
                let psi_rr = fd_deriv2(&psi_of_r, r, h * (vertex - t));
                let psi_r = fd_deriv1(&psi_of_r, r, h * (vertex - t));
                let psi = psi_of_r(r);
                let dm1 = dim.d_f64() - 1.0;
                let res = psi_tt - psi_rr - dm1 / r * psi_r + 0.5 * dm1 * (2.0 * psi).sin() / (r * r);
                assert!(res.abs() < 1e-10, "residual {res:.3e} at t={t}, d={n}");
            }
        }
    }

    #[test]
    fn potential_v_values_and_trig_identity() {
        assert_relative_eq!(potential_v(0.0, d(3)), -16.0, epsilon = 1e-14);
        assert_relative_eq!(potential_v(1.0, d(3)), -4.0, epsilon = 1e-14);
        // V(ρ)·ρ² = η'(f₀(ρ)) = 2cos(2f₀) − 2.
        for n in [3u32, 5, 9] {
            let dim = d(n);
            for i in 1..=10 {
                let rho = i as f64 * 0.1;
                let lhs = potential_v(rho, dim) * rho * rho;
                let rhs = 2.0 * (2.0 * f0(rho, dim)).cos() - 2.0;
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
            }
        }
        let rho = 0.3;
        let dim = d(3);
        assert_relative_eq!(
            potential_v(rho, dim),
            (2.0 * (2.0 * f0(rho, dim)).cos() - 2.0) / (rho * rho),
            epsilon = 1e-13
        );
    }

    #[test]
    fn potential_vhat_values() {
        assert_relative_eq!(potential_vhat(1.0, d(3)).unwrap(), -2.0, epsilon = 1e-14);
        assert_relative_eq!(potential_vhat(1.0, d(5)).unwrap(), -1.0, epsilon = 1e-14);
        assert!(potential_vhat(0.0, d(3)).is_err());
        // ρ²·V̂ → 2 as ρ → 0 for every d.
        for n in [3u32, 5, 7, 9] {
            let dim = d(n);
            let rho = 1e-6;
            assert_relative_eq!(
                potential_vhat(rho, dim).unwrap() * rho * rho,
                2.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn eta_maclaurin() {
        assert_eq!(eta_derivs(0.0, 0), 0.0);
        assert_eq!(eta_derivs(0.0, 1), 0.0);
        assert_eq!(eta_derivs(0.0, 2), 0.0);
        assert_relative_eq!(eta_derivs(0.0, 3), -8.0, epsilon = 1e-15);
        assert_relative_eq!(eta(PI / 4.0), 1.0 - PI / 2.0, epsilon = 1e-15);
        // Series vs direct across the internal switch.
        assert_relative_eq!(eta(0.499), (0.998_f64).sin() - 0.998, epsilon = 1e-13);
    }

    #[test]
    fn nhat_vanishes_at_zero_amplitude() {
        for n in [3u32, 5] {
            let dim = d(n);
            for i in 0..=10 {
                let rho = i as f64 * 0.1;
                assert_eq!(nonlinearity_nhat(rho, 0.0, dim), 0.0);
            }
        }
    }

    #[test]
    fn nhat_closed_form_matches_quadrature() {
        let dim = d(3);
        let closed = nonlinearity_nhat(0.5, 0.2, dim);
        let quad = nhat_quadrature(0.5, 0.2, dim);
        assert_relative_eq!(closed, quad, epsilon = 1e-9);
        // Near the switch as well.
        let closed = nonlinearity_nhat(0.02, -0.4, dim);
        let quad = nhat_quadrature(0.02, -0.4, dim);
        assert_relative_eq!(closed, quad, epsilon = 1e-9);
    }

    #[test]
    fn nhat_remainder_identity() {
        // N(ρζ) = η(f₀+ρζ) − η(f₀) − η'(f₀)ρζ against direct arithmetic.
        let dim = d(5);
        let (rho, zeta) = (0.7, 0.1);
        let w = rho * zeta;
        let f = f0(rho, dim);
        let direct = eta(f + w) - eta(f) - eta_derivs(f, 1) * w;
        assert_abs_diff_eq!(
            nonlinearity_remainder(rho, w, dim),
            direct,
            epsilon = 1e-13
        );
        // And N̂ assembled from the remainder.
        let nhat = -0.5 * (dim.d_f64() - 1.0) * direct / rho.powi(3);
        assert_relative_eq!(nonlinearity_nhat(rho, zeta, dim), nhat, epsilon = 1e-12);
    }

    #[test]
    fn m_is_zeta_derivative_of_nhat() {
        let dim = d(3);
        let (rho, zeta) = (0.5, 0.2);
        let h = 1e-5;
        let fd = (nonlinearity_nhat(rho, zeta + h, dim) - nonlinearity_nhat(rho, zeta - h, dim))
            / (2.0 * h);
        assert_abs_diff_eq!(nonlinearity_m(rho, zeta, dim), fd, epsilon = 1e-7);
        // ζ = 0 annihilates every term.
        assert_eq!(nonlinearity_m(0.3, 0.0, dim), 0.0);
    }

    #[test]
    fn m_finite_on_axis() {
        let dim = d(5);
        let at_zero = nonlinearity_m(0.0, 0.3, dim);
        let near_zero = nonlinearity_m(1e-6, 0.3, dim);
        assert!(at_zero.is_finite());
        assert_relative_eq!(at_zero, near_zero, epsilon = 1e-8);
    }

    #[test]
    fn gauge_mode_values_and_identity() {
        let dim = d(3);
        let g = gauge_mode(dim);
        assert_relative_eq!(g.g1(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(g.g2(0.0), 2.0, epsilon = 1e-15);
        // g₂ = ρ g₁' + 2 g₁ on a 100-point grid.
        for n in [3u32, 5, 7, 9] {
            let g = gauge_mode(d(n));
            for i in 0..=100 {
                let rho = i as f64 / 100.0;
                assert_abs_diff_eq!(
                    g.g2(rho),
                    rho * g.g1_prime(rho) + 2.0 * g.g1(rho),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn gauge_mode_solves_kernel_ode() {
        // (1−ρ²)g₁'' + ((d+1)/ρ − 6ρ)g₁' − (6 + (d−1)/2·V)g₁ = 0, with the
        // (d+1)/ρ·g₁' term in its regular form −2(d+1)/(ρ²+d−2)².
        for n in [3u32, 5, 7, 9] {
            let dim = d(n);
            let g = gauge_mode(dim);
            for i in 0..=100 {
                let rho = i as f64 / 100.0;
                let q = rho * rho + dim.dm2();
                let reg = -2.0 * (dim.d_f64() + 1.0) / (q * q);
                let res = (1.0 - rho * rho) * g.g1_second(rho) + reg
                    - 6.0 * rho * g.g1_prime(rho)
                    - (6.0 + 0.5 * (dim.d_f64() - 1.0) * potential_v(rho, dim)) * g.g1(rho);
                assert!(res.abs() < 1e-10, "kernel residual {res:.2e} at rho={rho}, d={n}");
            }
        }
    }
}
