//! Eigenvalue analysis of the linearized operator.
//!
//! Two independent routes are provided and cross-checked: a shooting
//! connection problem for the second-order spectral ODE (Frobenius series at
//! both regular singular endpoints, high-order integration to a matching
//! point, Wronskian obstruction), and the eigenvalues of the collocation
//! matrix of the first-order system.

pub mod connection;
pub mod frobenius;

pub use connection::{
    connection, find_eigenvalues, wronskian_samples, ConnectionValue, EigenvalueHit,
    SearchRegion, SpectrumReport, DEFAULT_MATCHING, DEFAULT_ORDER,
};
pub use frobenius::{
    frobenius_series, indices, series_residual, Branch, ExpansionPoint, FrobeniusSeries,
};

use num_complex::Complex64;

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::evolution::operator_matrix;
use crate::grid::build_grid;
use crate::numerics::{adaptive_quad, fd_deriv1, integrate_c2, linear_fit};
use crate::profiles;

type C64 = Complex64;

/// Collocation eigenvalues at resolution n, with the sublist that is stable
/// under doubling the resolution (within 1e−4). Unstable values are
/// discretization artifacts of the continuous spectrum.
pub struct CollocationReport {
    pub eigenvalues: Vec<C64>,
    pub converged: Vec<C64>,
}

pub fn collocation_spectrum(dim: Dimension, n: usize) -> Result<CollocationReport> {
    if n < 32 {
        return Err(Error::GridTooSmall { n, min: 32 });
    }
    let eig_at = |nn: usize| -> Result<Vec<C64>> {
        let g = build_grid(nn, dim)?;
        let m = operator_matrix(&g, true);
        let (balanced, _) = crate::numerics::balance_matrix(&m);
        Ok(balanced.complex_eigenvalues().iter().copied().collect())
    };
    let coarse = eig_at(n)?;
    let fine = eig_at(2 * n)?;
    let mut converged = Vec::new();
    for &e in &coarse {
        let dist = fine
            .iter()
            .map(|&f| (e - f).norm())
            .fold(f64::INFINITY, f64::min);
        if dist < 1e-4 {
            converged.push(e);
        }
    }
    Ok(CollocationReport {
        eigenvalues: coarse,
        converged,
    })
}

/// The admissible-at-0 eigenfunction candidate v(ρ), integrated from its
/// series seed across the requested sample points (ascending, in (0, 1)).
pub fn shooting_solution(
    lambda: C64,
    dim: Dimension,
    rhos: &[f64],
) -> Result<Vec<C64>> {
    let series = frobenius_series(ExpansionPoint::Zero, Branch::Admissible, lambda, dim, 40)?;
    let rhs = {
        let d = dim.d_f64();
        move |rho: f64, y: &[C64; 2]| {
            let vhat = profiles::potential_vhat(rho, dim).expect("rho > 0");
            let denom = 1.0 - rho * rho;
            let bterm = lambda * 2.0 * rho + 2.0 * rho - (d - 1.0) / rho;
            let cterm = lambda * (lambda + 1.0) + 0.5 * (d - 1.0) * vhat;
            [y[1], (bterm * y[1] + cterm * y[0]) / denom]
        }
    };
    let mut out = Vec::with_capacity(rhos.len());
    let mut x = 0.05;
    let (v, dv) = series.eval_rho(x);
    let mut y = [v, dv];
    for &r in rhos {
        assert!(r > 0.0 && r < 1.0);
        if r <= 0.05 {
            out.push(series.eval_rho(r).0);
            continue;
        }
        y = integrate_c2(&rhs, x, y, r, 1e-12, "shooting")?;
        x = r;
        out.push(y[0]);
    }
    Ok(out)
}

/// Reduction-of-order construction of the second kernel branch at λ = 1 and
/// its diagnostics: the fitted leading power at ρ → 0 (expected −d) and the
/// worst relative defect of the Wronskian identity against the prescribed
/// weight (1−ρ²)^{(d−5)/2} ρ^{−d−1}, with the derivative taken by finite
/// differences so the check is not circular.
pub struct KernelSecondBranch {
    pub fitted_power: f64,
    pub wronskian_max_rel_err: f64,
}

pub fn kernel_second_solution(dim: Dimension) -> Result<KernelSecondBranch> {
    let d = dim.d_f64();
    let e = dim.dm2();
    let rho1 = if dim.d() >= 5 { 1.0 } else { 0.5 };
    let p = (dim.d() as i32 - 5) / 2;
    let integrand = move |x: f64| {
        (1.0 - x * x).powi(p) * x.powi(-(d as i32) - 1) * (x * x + e) * (x * x + e)
    };
    let g = profiles::gauge_mode(dim);
    let u2 = |rho: f64| -> Result<f64> {
        let (val, _) = if rho < rho1 {
            let (v, e) = adaptive_quad(&integrand, rho, rho1, 1e-13)?;
            (-v, e)
        } else {
            adaptive_quad(&integrand, rho1, rho, 1e-13)?
        };
        Ok(g.g1(rho) * val)
    };

    // Leading power at the origin from a log-log fit.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..8 {
        let rho = 1e-3 * (10.0_f64).powf(i as f64 / 7.0);
        xs.push(rho.ln());
        ys.push(u2(rho)?.abs().ln());
    }
    let (fitted_power, _, _) = linear_fit(&xs, &ys);

    // Wronskian of (g₁, u₂) matches the weight. Points stay away from the
    // origin where the ρ^{−d−1} steepness would dominate the stencil error.
    let mut max_rel = 0.0_f64;
    for i in 0..20 {
        let rho = 0.4 + 0.45 * i as f64 / 19.0;
        let u2p = fd_deriv1(&|r| u2(r).unwrap(), rho, 2e-3);
        let w = g.g1(rho) * u2p - g.g1_prime(rho) * u2(rho)?;
        let weight = (1.0 - rho * rho).powi(p) * rho.powi(-(d as i32) - 1);
        max_rel = max_rel.max((w - weight).abs() / weight.abs());
    }
    Ok(KernelSecondBranch {
        fitted_power,
        wronskian_max_rel_err: max_rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{build_gauge_projection, EvolutionContext};

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn collocation_contains_gauge_eigenvalue() {
        let rep = collocation_spectrum(dim(3), 48).unwrap();
        let best = rep
            .converged
            .iter()
            .map(|e| (e - 1.0).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-6, "closest converged eigenvalue at distance {best:.2e}");
    }

    #[test]
    fn collocation_eigenvector_matches_gauge_mode() {
        let ctx = EvolutionContext::new(dim(3), 48).unwrap();
        let p = build_gauge_projection(&ctx).unwrap();
        let g = crate::evolution::gauge_state(&ctx.grid, ctx.dim);
        let n = ctx.grid.n;
        let mut rel = 0.0_f64;
        for i in 0..n {
            rel = rel.max((p.right[i] - g.phi1[i]).abs() / g.phi1.amax());
            rel = rel.max((p.right[n + i] - g.phi2[i]).abs() / g.phi2.amax());
        }
        assert!(rel < 1e-6, "eigenvector defect {rel:.2e}");
    }

    #[test]
    fn no_converged_unstable_eigenvalue_besides_one() {
        for d in [3u32, 5] {
            let rep = collocation_spectrum(dim(d), 48).unwrap();
            for e in &rep.converged {
                if e.re >= 0.0 {
                    assert!(
                        (e - 1.0).norm() < 1e-5,
                        "unexpected converged eigenvalue {e} for d={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn shooting_solution_matches_gauge_mode_at_one() {
        let dm = dim(5);
        let rhos: Vec<f64> = (1..=18).map(|i| 0.05 * i as f64).collect();
        let v = shooting_solution(C64::new(1.0, 0.0), dm, &rhos).unwrap();
        let g = profiles::gauge_mode(dm);
        // v(ρ) ∝ ρ g₁(ρ): least-squares scale then sup-compare.
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &r) in rhos.iter().enumerate() {
            let target = r * g.g1(r);
            num += v[i].re * target;
            den += target * target;
        }
        let scale = num / den;
        let mut rel = 0.0_f64;
        for (i, &r) in rhos.iter().enumerate() {
            let target = scale * r * g.g1(r);
            rel = rel.max((v[i].re - target).abs() / target.abs());
            assert!(v[i].im.abs() < 1e-9);
        }
        assert!(rel < 1e-6, "shooting eigenfunction defect {rel:.2e}");
    }

    #[test]
    fn kernel_second_branch_diagnostics() {
        for d in [3u32, 5, 7] {
            let rep = kernel_second_solution(dim(d)).unwrap();
            assert!(
                (rep.fitted_power + d as f64).abs() < 0.1,
                "d={d}: fitted power {}",
                rep.fitted_power
            );
            assert!(
                rep.wronskian_max_rel_err < 1e-8,
                "d={d}: wronskian defect {:.2e}",
                rep.wronskian_max_rel_err
            );
        }
    }
}
