//! Spatial discretization on ρ ∈ [0, 1] respecting even parity at the origin.
//!
//! Functions are represented by their values at the nodes ρ_j = sin(jπ/(2(n−1))),
//! which are the Chebyshev-Gauss-Lobatto points of the squared variable
//! x = ρ². Interpolation is polynomial in x, so odd ρ-modes cannot appear and
//! regularity at ρ = 0 is structural. Derivative operators in ρ are assembled
//! from the exact chain-rule expansion of d^k/dρ^k acting on p(ρ²), and the
//! quadrature weights integrate against the radial measure ρ^{d+1} dρ of the
//! (d+2)-dimensional ball.

use nalgebra::{DMatrix, DVector};

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::numerics::{cgl_x, gauss_legendre_on};

/// Collocation grid with differentiation up to order m and weighted quadrature.
pub struct RadialGrid {
    pub dim: Dimension,
    pub n: usize,
    /// Nodes in ρ, strictly increasing, ρ_0 = 0 and ρ_{n−1} = 1.
    pub rho: Vec<f64>,
    /// Squared nodes x = ρ².
    pub x: Vec<f64>,
    /// Differentiation matrix in the x variable.
    pub diff_x: DMatrix<f64>,
    /// ρ-derivative matrices of orders 1..=m.
    pub diff_rho: Vec<DMatrix<f64>>,
    /// Quadrature weights for ∫₀¹ f(ρ) ρ^{d+1} dρ.
    pub quad_w: Vec<f64>,
}

/// Norm specification: which homogeneous orders enter, on which ball.
#[derive(Clone, Debug)]
pub struct SobolevWeights {
    pub orders: Vec<usize>,
    pub ball_radius: f64,
}

impl SobolevWeights {
    pub fn full(k: usize, ball_radius: f64, dim: Dimension) -> Result<Self> {
        if k > dim.m() as usize {
            return Err(Error::OrderTooLarge {
                k,
                max: dim.m() as usize,
            });
        }
        Ok(SobolevWeights {
            orders: (0..=k).collect(),
            ball_radius,
        })
    }
}

/// Build the grid for a given node count and dimension. Requires n ≥ 16.
pub fn build_grid(n: usize, dim: Dimension) -> Result<RadialGrid> {
    if n < 16 {
        return Err(Error::GridTooSmall { n, min: 16 });
    }
    let cgl = cgl_x(n);
    let x = cgl.nodes;
    let rho: Vec<f64> = (0..n)
        .map(|j| (std::f64::consts::PI * j as f64 / (2.0 * (n - 1) as f64)).sin())
        .collect();

    let m = dim.m() as usize;
    // Chain-rule coefficients: d^k/dρ^k p(ρ²) = Σ_j a[k][j] ρ^{2j−k} ∂_x^j p.
    let mut a = vec![vec![0.0f64; m + 1]; m + 1];
    a[1][1] = 2.0;
    for k in 1..m {
        for j in 1..=k + 1 {
            a[k + 1][j] =
                (2.0 * j as f64 - k as f64) * a[k][j] + 2.0 * a[k][j - 1];
        }
    }

    // Powers of the x-differentiation matrix.
    let mut d_pow: Vec<DMatrix<f64>> = Vec::with_capacity(m + 1);
    d_pow.push(DMatrix::identity(n, n));
    for _ in 0..m {
        let next = d_pow.last().unwrap() * &cgl.diff;
        d_pow.push(next);
    }

    let mut diff_rho = Vec::with_capacity(m);
    for k in 1..=m {
        let mut mat = DMatrix::<f64>::zeros(n, n);
        if k % 2 == 0 {
            for j in k / 2..=k {
                if a[k][j] == 0.0 {
                    continue;
                }
                add_scaled_rows(&mut mat, &d_pow[j], &x, j - k / 2, a[k][j], None);
            }
        } else {
            for j in (k + 1) / 2..=k {
                if a[k][j] == 0.0 {
                    continue;
                }
                add_scaled_rows(&mut mat, &d_pow[j], &x, j - (k + 1) / 2, a[k][j], Some(&rho));
            }
        }
        diff_rho.push(mat);
    }

    let quad_w = radial_weights(&x, n, dim)?;

    Ok(RadialGrid {
        dim,
        n,
        rho,
        x,
        diff_x: cgl.diff,
        diff_rho,
        quad_w,
    })
}

/// mat += coeff · diag(ρ?) · diag(x^p) · d, row-scaled in place.
fn add_scaled_rows(
    mat: &mut DMatrix<f64>,
    d: &DMatrix<f64>,
    x: &[f64],
    p: usize,
    coeff: f64,
    rho: Option<&[f64]>,
) {
    let n = x.len();
    for i in 0..n {
        let scale = coeff * x[i].powi(p as i32) * rho.map_or(1.0, |r| r[i]);
        if scale == 0.0 {
            continue;
        }
        for j in 0..n {
            mat[(i, j)] += scale * d[(i, j)];
        }
    }
}

/// Interpolatory weights exact on polynomials in x of degree < n against x^{d/2}:
/// conditions Σ_j w̃_j T_k(2x_j−1) = ∫₀¹ T_k(2x−1) x^{d/2} dx, then halved for
/// the ρ-measure. The moments reduce to polynomial integrals under x = s².
fn radial_weights(x: &[f64], n: usize, dim: Dimension) -> Result<Vec<f64>> {
    let d = dim.d() as usize;
    // Gauss rule exact for degree 2(n−1) + d + 1 in s.
    let n_gl = n + d + 2;
    let (s_nodes, s_w) = gauss_legendre_on(n_gl, 0.0, 1.0);
    let mut moments = DVector::<f64>::zeros(n);
    for k in 0..n {
        let mut acc = 0.0;
        for (s, w) in s_nodes.iter().zip(&s_w) {
            acc += w * cheb_t(k, 2.0 * s * s - 1.0) * s.powi(d as i32 + 1);
        }
        moments[k] = 2.0 * acc;
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            a[(k, j)] = cheb_t(k, 2.0 * x[j] - 1.0);
        }
    }
    let lu = a.lu();
    let w = lu
        .solve(&moments)
        .ok_or_else(|| Error::Eigendecomposition("quadrature weight solve".into()))?;
    Ok(w.iter().map(|&v| 0.5 * v).collect())
}

fn cheb_t(k: usize, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let mut t0 = 1.0;
            let mut t1 = t;
            for _ in 2..=k {
                let t2 = 2.0 * t * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            t1
        }
    }
}

impl RadialGrid {
    /// Apply the k-th ρ-derivative (1 ≤ k ≤ m).
    pub fn deriv(&self, u: &DVector<f64>, k: usize) -> DVector<f64> {
        assert!(k >= 1 && k <= self.diff_rho.len());
        &self.diff_rho[k - 1] * u
    }

    /// ∫₀¹ f(ρ) ρ^{d+1} dρ from node values.
    pub fn integrate(&self, f: &DVector<f64>) -> f64 {
        self.quad_w.iter().zip(f.iter()).map(|(w, v)| w * v).sum()
    }

    /// Homogeneous radial Sobolev seminorm of order k on the (d+2)-ball of
    /// the given radius: ( R^{d+2−2k} ∫₀¹ |u^{(k)}|² ρ^{d+1} dρ )^{1/2},
    /// where u holds samples on the scaled nodes R·ρ_j.
    ///
    /// The single weighted term fixes the equivalent-norm convention used
    /// throughout this crate; it carries exactly the scaling R^{(d+2)/2−k}
    /// that the full inhomogeneous combination shares.
    pub fn seminorm(&self, u: &DVector<f64>, k: usize, radius: f64) -> Result<f64> {
        if k > self.dim.m() as usize {
            return Err(Error::OrderTooLarge {
                k,
                max: self.dim.m() as usize,
            });
        }
        let du = if k == 0 { u.clone() } else { self.deriv(u, k) };
        let sq: f64 = self
            .quad_w
            .iter()
            .zip(du.iter())
            .map(|(w, v)| w * v * v)
            .sum();
        Ok((radius.powi((self.dim.d() as i32 + 2) - 2 * k as i32) * sq.max(0.0)).sqrt())
    }

    /// Full Sobolev norm of order k: root sum of squares of seminorms 0..=k.
    pub fn sobolev_norm(&self, u: &DVector<f64>, k: usize, radius: f64) -> Result<f64> {
        let mut acc = 0.0;
        for j in 0..=k {
            let s = self.seminorm(u, j, radius)?;
            acc += s * s;
        }
        Ok(acc.sqrt())
    }

    /// Norm selected by an explicit order list.
    pub fn weighted_norm(&self, u: &DVector<f64>, spec: &SobolevWeights) -> Result<f64> {
        let mut acc = 0.0;
        for &j in &spec.orders {
            let s = self.seminorm(u, j, spec.ball_radius)?;
            acc += s * s;
        }
        Ok(acc.sqrt())
    }

    /// Norm of a state pair (u₁, u₂) at orders (m, m−1) on the unit ball.
    pub fn pair_norm(&self, u1: &DVector<f64>, u2: &DVector<f64>) -> f64 {
        let m = self.dim.m() as usize;
        let a = self.sobolev_norm(u1, m, 1.0).expect("order m");
        let b = self.sobolev_norm(u2, m - 1, 1.0).expect("order m-1");
        (a * a + b * b).sqrt()
    }

    /// Sample a scalar function at the nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        DVector::from_iterator(self.n, self.rho.iter().map(|&r| f(r)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linear_fit;
    use crate::profiles;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn rejects_small_grid() {
        assert!(build_grid(8, dim(3)).is_err());
    }

    #[test]
    fn nodes_strictly_increasing_with_endpoints() {
        let g = build_grid(33, dim(5)).unwrap();
        assert_eq!(g.rho[0], 0.0);
        assert_relative_eq!(g.rho[g.n - 1], 1.0, epsilon = 1e-15);
        for j in 1..g.n {
            assert!(g.rho[j] > g.rho[j - 1]);
        }
    }

    #[test]
    fn derivative_of_constant_and_square() {
        let g = build_grid(24, dim(3)).unwrap();
        let ones = DVector::from_element(g.n, 1.0);
        let d1 = g.deriv(&ones, 1);
        assert!(d1.amax() < 1e-12);
        // d(ρ²)/dρ = 2ρ, equal to 1 at ρ = 1/2.
        let sq = g.sample(|r| r * r);
        let d = g.deriv(&sq, 1);
        for (j, &r) in g.rho.iter().enumerate() {
            assert_abs_diff_eq!(d[j], 2.0 * r, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_of_unity() {
        for n in [3u32, 5, 7, 9] {
            let g = build_grid(40, dim(n)).unwrap();
            let ones = DVector::from_element(g.n, 1.0);
            assert_relative_eq!(g.integrate(&ones), 1.0 / (n as f64 + 2.0), epsilon = 1e-12);
            // And a nontrivial even polynomial: ∫ρ^{d+1}(1−ρ²)dρ = 1/(d+2) − 1/(d+4).
            let f = g.sample(|r| 1.0 - r * r);
            assert_relative_eq!(
                g.integrate(&f),
                1.0 / (n as f64 + 2.0) - 1.0 / (n as f64 + 4.0),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn derivatives_of_gauge_mode_match_analytic() {
        let d3 = dim(3);
        let g = build_grid(64, d3).unwrap();
        let mode = profiles::gauge_mode(d3);
        let u = g.sample(|r| mode.g1(r));
        let d1 = g.deriv(&u, 1);
        let d2 = g.deriv(&u, 2);
        for (j, &r) in g.rho.iter().enumerate() {
            assert_abs_diff_eq!(d1[j], mode.g1_prime(r), epsilon = 1e-10);
            assert_abs_diff_eq!(d2[j], mode.g1_second(r), epsilon = 1e-8);
        }
    }

    #[test]
    fn odd_derivatives_vanish_at_origin() {
        let d5 = dim(5);
        let g = build_grid(48, d5).unwrap();
        let u = g.sample(|r| (1.0 + r * r).recip());
        for k in [1usize, 3] {
            let du = g.deriv(&u, k);
            assert!(du[0].abs() < 1e-10, "order {k} at origin: {}", du[0]);
        }
    }

    #[test]
    fn spectral_convergence_on_analytic_function() {
        // Max derivative error on an analytic even function drops fast in n.
        let d3 = dim(3);
        let f = |r: f64| (20.0 * r * r).cos();
        let fp = |r: f64| -40.0 * r * (20.0 * r * r).sin();
        let mut errs = Vec::new();
        for n in [16, 24, 32] {
            let g = build_grid(n, d3).unwrap();
            let u = g.sample(f);
            let du = g.deriv(&u, 1);
            let err = g
                .rho
                .iter()
                .enumerate()
                .map(|(j, &r)| (du[j] - fp(r)).abs())
                .fold(0.0_f64, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < errs[0] * 1e-2);
        assert!(errs[2] < errs[1] * 1e-2 || errs[2] < 1e-12);
    }

    #[test]
    fn zero_norm_and_order_guard() {
        let d3 = dim(3);
        let g = build_grid(32, d3).unwrap();
        let z = DVector::zeros(g.n);
        assert_eq!(g.sobolev_norm(&z, 2, 1.0).unwrap(), 0.0);
        assert!(g.seminorm(&z, 4, 1.0).is_err()); // m = 3 for d = 3
        assert!(SobolevWeights::full(4, 1.0, d3).is_err());
    }

    #[test]
    fn profile_norm_scaling_exponents() {
        // ‖|·|⁻¹f₀(|·|/s)‖ on Ḣ^k(B_s) ∝ s^{d/2−k} and the time-derivative
        // analogue ∝ s^{d/2−ℓ−1}; fitted log-log slopes match to 1e−3.
        for n in [3u32, 5] {
            let dm = dim(n);
            let g = build_grid(48, dm).unwrap();
            let scales = [1.0, 0.5, 0.25];
            for k in 0..=dm.m() as usize {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &s in &scales {
                    let u = g.sample(|r| profiles::f0_over_rho(r, dm) / s);
                    xs.push(s.ln());
                    ys.push(g.seminorm(&u, k, s).unwrap().ln());
                }
                let (slope, _, _) = linear_fit(&xs, &ys);
                assert_abs_diff_eq!(slope, n as f64 / 2.0 - k as f64, epsilon = 1e-3);
            }
            for l in 0..dm.m() as usize {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &s in &scales {
                    let u = g.sample(|r| profiles::f0_prime(r, dm) / (s * s));
                    xs.push(s.ln());
                    ys.push(g.seminorm(&u, l, s).unwrap().ln());
                }
                let (slope, _, _) = linear_fit(&xs, &ys);
                assert_abs_diff_eq!(slope, n as f64 / 2.0 - l as f64 - 1.0, epsilon = 1e-3);
            }
        }
    }
}
