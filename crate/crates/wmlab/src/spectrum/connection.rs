//! Connection problem for the spectral ODE: does the branch admissible at
//! ρ = 0 glue to the branch admissible at ρ = 1? The obstruction is the
//! Wronskian W(λ) of the two series-seeded solutions at a matching point.
//!
//! The admissible-at-1 branch carries the polynomial normalization
//! π(λ) = Π_{k=0}^{(d−3)/2} (λ − k). Its zeros cancel the poles that the
//! unit-normalized analytic branch develops at integer index gaps with a
//! nonvanishing resonance constant, and at a gap whose constant vanishes
//! (which is exactly the gauge eigenvalue) the product tends to zero, so
//! W remains analytic on Re λ > −1/2 and vanishes precisely on the point
//! spectrum there. The Wronskian is reported with its ρ-weight removed,
//! making it independent of the matching point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::numerics::integrate_c2;
use crate::profiles;

use super::frobenius::{
    frobenius_series, indices, local_ode, Branch, ExpansionPoint, FrobeniusSeries,
};

type C64 = Complex64;

/// Search region {Re λ ≥ re_min, |λ| ≤ abs_max}.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re_min: f64,
    pub abs_max: f64,
}

impl SearchRegion {
    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min - 1e-12 && z.norm() <= self.abs_max + 1e-12
    }
}

/// Wronskian of the endpoint-admissible branches at the matching point.
#[derive(Clone, Copy, Debug)]
pub struct ConnectionValue {
    pub lambda: C64,
    pub wronskian: C64,
    pub matching_point: f64,
}

/// A located eigenvalue with its normalized connection residual.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenvalueHit {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

/// Outcome of the eigenvalue search over a region.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub region: SearchRegion,
    pub eigenvalues: Vec<EigenvalueHit>,
    pub winding_count: i64,
}

/// Offset from each endpoint at which series seed the ODE integration.
const SEED_OFFSET: f64 = 0.05;

/// π(λ) = Π_{k=0}^{(d−3)/2} (λ − k).
fn regularizer(lambda: C64, dim: Dimension) -> C64 {
    let kmax = (dim.d() as i64 - 3) / 2;
    let mut p = C64::new(1.0, 0.0);
    for k in 0..=kmax {
        p *= lambda - k as f64;
    }
    p
}

/// dπ/dλ at an integer root λ_r: product over the remaining factors.
fn regularizer_prime_at_root(root: i64, dim: Dimension) -> f64 {
    let kmax = (dim.d() as i64 - 3) / 2;
    let mut p = 1.0;
    for k in 0..=kmax {
        if k != root {
            p *= (root - k) as f64;
        }
    }
    p
}

/// The admissible-at-1 branch with the pole-clearing normalization.
/// Returns None when the branch vanishes identically (the resonance
/// constant is exactly zero), in which case the connection Wronskian is 0.
fn regularized_admissible_at_one(
    lambda: C64,
    dim: Dimension,
    order: usize,
) -> Option<FrobeniusSeries> {
    let (_, s2) = indices(ExpansionPoint::One, lambda, dim);
    let resonant = s2.im.abs() < 1e-11
        && (s2.re - s2.re.round()).abs() < 1e-11
        && s2.re.round() >= 1.0;
    if resonant {
        let k = s2.re.round() as i64;
        let lambda_r = (dim.d() as i64 - 1) / 2 - k;
        let ode = local_ode(ExpansionPoint::One, lambda, dim);
        let (_, cconst, w1) = ode.log_series(C64::new(0.0, 0.0), k as usize, order);
        // lim π·(unit analytic branch) = π'(λ_r) · C · w₁.
        let scale = cconst * regularizer_prime_at_root(lambda_r, dim);
        if scale.norm() == 0.0 {
            return None;
        }
        Some(FrobeniusSeries {
            expansion_point: ExpansionPoint::One,
            index: C64::new(k as f64, 0.0),
            coeffs: w1.iter().map(|&x| scale * x).collect(),
            log: None,
            radius_hint: 1.0,
        })
    } else {
        let mut s = frobenius_series(ExpansionPoint::One, Branch::Admissible, lambda, dim, order)
            .expect("analytic branch");
        debug_assert!(s.log.is_none());
        let p = regularizer(lambda, dim);
        for c in &mut s.coeffs {
            *c *= p;
        }
        Some(s)
    }
}

/// Right-hand side of the spectral ODE as a first-order complex system.
fn ode_rhs(lambda: C64, dim: Dimension) -> impl Fn(f64, &[C64; 2]) -> [C64; 2] {
    let d = dim.d_f64();
    move |rho: f64, y: &[C64; 2]| {
        let vhat = profiles::potential_vhat(rho, dim).expect("rho > 0");
        let denom = 1.0 - rho * rho;
        let bterm = lambda * 2.0 * rho + 2.0 * rho - (d - 1.0) / rho;
        let cterm = lambda * (lambda + 1.0) + 0.5 * (d - 1.0) * vhat;
        [y[1], (bterm * y[1] + cterm * y[0]) / denom]
    }
}

/// Integrate a series-seeded solution from its endpoint to the matching point.
fn shoot(
    series: &FrobeniusSeries,
    lambda: C64,
    dim: Dimension,
    matching_point: f64,
) -> Result<[C64; 2]> {
    let start = match series.expansion_point {
        ExpansionPoint::Zero => SEED_OFFSET,
        ExpansionPoint::One => 1.0 - SEED_OFFSET,
    };
    let (v, dv) = series.eval_rho(start);
    let rhs = ode_rhs(lambda, dim);
    integrate_c2(
        &rhs,
        start,
        [v, dv],
        matching_point,
        1e-12,
        &format!("lambda = {lambda}"),
    )
}

/// Evaluate the connection Wronskian at λ.
pub fn connection(
    lambda: C64,
    dim: Dimension,
    order: usize,
    matching_point: f64,
) -> Result<ConnectionValue> {
    assert!(
        matching_point > SEED_OFFSET && matching_point < 1.0 - SEED_OFFSET,
        "matching point must lie inside both series domains"
    );
    let u0 = frobenius_series(ExpansionPoint::Zero, Branch::Admissible, lambda, dim, order)?;
    let y0 = shoot(&u0, lambda, dim, matching_point)?;
    let wronskian = match regularized_admissible_at_one(lambda, dim, order) {
        None => C64::new(0.0, 0.0),
        Some(u1) => {
            let y1 = shoot(&u1, lambda, dim, matching_point)?;
            let raw = y0[0] * y1[1] - y0[1] * y1[0];
            // Remove the ρ-dependent Wronskian weight ρ^{−(d−1)}(1−ρ²)^{s₂−1}.
            let (_, s2) = indices(ExpansionPoint::One, lambda, dim);
            let w = (1.0 - matching_point * matching_point).ln();
            raw * matching_point.powi(dim.d() as i32 - 1) * ((1.0 - s2) * w).exp()
        }
    };
    Ok(ConnectionValue {
        lambda,
        wronskian,
        matching_point,
    })
}

/// Default truncation order for connection series.
pub const DEFAULT_ORDER: usize = 40;
/// Default matching point.
pub const DEFAULT_MATCHING: f64 = 0.5;

fn w_value(lambda: C64, dim: Dimension) -> Result<C64> {
    Ok(connection(lambda, dim, DEFAULT_ORDER, DEFAULT_MATCHING)?.wronskian)
}

/// Counterclockwise boundary of the region as a parametrized path.
fn boundary_points(region: &SearchRegion, coarse: usize) -> Vec<C64> {
    let a = region.re_min;
    let r = region.abs_max;
    let mut pts = Vec::new();
    if a <= -r {
        // Full circle.
        for i in 0..coarse {
            let th = 2.0 * std::f64::consts::PI * i as f64 / coarse as f64;
            pts.push(C64::from_polar(r, th));
        }
        pts.push(pts[0]);
        return pts;
    }
    let ya = (r * r - a * a).sqrt();
    let th_a = ya.atan2(a);
    // Right arc from −θ_a to +θ_a, then the chord Re = a downward.
    let arc_n = (coarse * 3) / 4;
    for i in 0..=arc_n {
        let th = -th_a + 2.0 * th_a * i as f64 / arc_n as f64;
        pts.push(C64::from_polar(r, th));
    }
    let seg_n = coarse / 4;
    for i in 1..=seg_n {
        let y = ya - 2.0 * ya * i as f64 / seg_n as f64;
        pts.push(C64::new(a, y));
    }
    pts.push(pts[0]);
    pts
}

/// Winding number of W along the region boundary by adaptive phase tracking.
fn winding_number<F: Fn(C64) -> Result<C64>>(
    f: &F,
    pts: &[C64],
) -> Result<f64> {
    fn segment<F: Fn(C64) -> Result<C64>>(
        f: &F,
        z0: C64,
        z1: C64,
        w0: C64,
        w1: C64,
        depth: usize,
    ) -> Result<f64> {
        let dphi = (w1 / w0).arg();
        if dphi.abs() < std::f64::consts::FRAC_PI_2 {
            return Ok(dphi);
        }
        if depth == 0 {
            return Err(Error::SpectrumInconsistency {
                winding: i64::MAX,
                roots: 0,
            });
        }
        let zm = 0.5 * (z0 + z1);
        let wm = f(zm)?;
        Ok(segment(f, z0, zm, w0, wm, depth - 1)? + segment(f, zm, z1, wm, w1, depth - 1)?)
    }

    let vals: Vec<C64> = pts
        .iter()
        .map(|&z| f(z))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for i in 1..pts.len() {
        total += segment(f, pts[i - 1], pts[i], vals[i - 1], vals[i], 48)?;
    }
    Ok(total / (2.0 * std::f64::consts::PI))
}

/// Locate all eigenvalues in the region: Newton refinement of W(λ) = 0 from
/// the local minima of |W| on a 0.5-spaced seed lattice, cross-checked by the
/// argument-principle winding count over the region boundary. A mismatch is
/// an error, never a silent result.
pub fn find_eigenvalues(region: SearchRegion, dim: Dimension) -> Result<SpectrumReport> {
    if region.re_min < -0.45 {
        return Err(Error::InvalidConfig {
            field: "region.re_min".into(),
            message: "the regularized connection coefficient is analytic for Re λ > −1/2 only"
                .into(),
        });
    }
    let f = |z: C64| w_value(z, dim);

    // Normalization reference: maximum of |W| over a coarse boundary sweep.
    let bpts = boundary_points(&region, 240);
    let mut wmax: f64 = 0.0;
    for &z in bpts.iter().step_by(3) {
        wmax = wmax.max(f(z)?.norm());
    }
    let wmax = wmax.max(1e-300);

    // Seed lattice, spacing 1/2.
    let mut lattice = Vec::new();
    let mut re = (region.re_min * 2.0).ceil() / 2.0;
    while re <= region.abs_max + 1e-9 {
        let mut im = (-region.abs_max * 2.0).ceil() / 2.0;
        while im <= region.abs_max + 1e-9 {
            let z = C64::new(re, im);
            if region.contains(z) {
                lattice.push(z);
            }
            im += 0.5;
        }
        re += 0.5;
    }
    let vals: Vec<f64> = lattice
        .iter()
        .map(|&z| f(z).map(|w| w.norm()))
        .collect::<Result<Vec<_>>>()?;

    // Local minima of |W| over the lattice neighbors.
    let mut seeds = Vec::new();
    for (i, &z) in lattice.iter().enumerate() {
        let mut is_min = true;
        for (j, &z2) in lattice.iter().enumerate() {
            if i != j && (z - z2).norm() < 0.75 && vals[j] < vals[i] {
                is_min = false;
                break;
            }
        }
        if is_min {
            seeds.push(z);
        }
    }

    // Newton with one-sided complex difference quotients.
    let mut roots: Vec<C64> = Vec::new();
    for &seed in &seeds {
        let mut z = seed;
        let mut converged = false;
        for _ in 0..25 {
            let w = f(z)?;
            if w.norm() / wmax < 1e-10 {
                converged = true;
                break;
            }
            let h = 1e-7 * (1.0 + z.norm());
            let dw = (f(z + C64::new(h, 0.0))? - w) / h;
            if dw.norm() == 0.0 {
                break;
            }
            let step = w / dw;
            z -= step;
            if z.re < region.re_min - 1.0 || z.norm() > region.abs_max + 1.0 {
                break;
            }
            if step.norm() < 1e-13 * (1.0 + z.norm()) {
                converged = f(z)?.norm() / wmax < 1e-10;
                break;
            }
        }
        if converged && region.contains(z) {
            if !roots.iter().any(|r| (r - z).norm() < 1e-6) {
                roots.push(z);
            }
        }
    }

    let winding = winding_number(&f, &bpts)?;
    let winding_count = winding.round() as i64;
    if (winding - winding_count as f64).abs() > 0.05 {
        return Err(Error::SpectrumInconsistency {
            winding: winding_count,
            roots: roots.len(),
        });
    }
    if winding_count != roots.len() as i64 {
        return Err(Error::SpectrumInconsistency {
            winding: winding_count,
            roots: roots.len(),
        });
    }
    let mut eigenvalues: Vec<EigenvalueHit> = Vec::new();
    for r in roots {
        eigenvalues.push(EigenvalueHit {
            re: r.re,
            im: r.im,
            residual: f(r)?.norm() / wmax,
        });
    }
    eigenvalues.sort_by(|a, b| (b.re, b.im).partial_cmp(&(a.re, a.im)).unwrap());
    Ok(SpectrumReport {
        region,
        eigenvalues,
        winding_count,
    })
}

/// |W| samples over the seed lattice, for plotting.
pub fn wronskian_samples(region: SearchRegion, dim: Dimension) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    let mut re = (region.re_min * 2.0).ceil() / 2.0;
    while re <= region.abs_max + 1e-9 {
        let mut im = (-region.abs_max * 2.0).ceil() / 2.0;
        while im <= region.abs_max + 1e-9 {
            let z = C64::new(re, im);
            if region.contains(z) {
                out.push((re, im, w_value(z, dim)?.norm()));
            }
            im += 0.5;
        }
        re += 0.5;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn wronskian_vanishes_at_gauge_eigenvalue() {
        for d in [3u32, 5, 7, 9] {
            let dm = dim(d);
            let w1 = connection(c(1.0, 0.0), dm, DEFAULT_ORDER, DEFAULT_MATCHING)
                .unwrap()
                .wronskian;
            // Normalize by a nearby non-eigenvalue magnitude.
            let wref = connection(c(0.5, 0.0), dm, DEFAULT_ORDER, DEFAULT_MATCHING)
                .unwrap()
                .wronskian;
            assert!(
                w1.norm() / wref.norm() < 1e-9,
                "d={d}: |W(1)|/|W(0.5)| = {:.3e}",
                w1.norm() / wref.norm()
            );
        }
    }

    #[test]
    fn wronskian_nonzero_away_from_spectrum() {
        let dm = dim(3);
        let w = connection(c(0.5, 0.0), dm, DEFAULT_ORDER, DEFAULT_MATCHING).unwrap();
        let wmax = [c(0.0, 2.0), c(2.0, 0.0), c(1.0, 2.0), c(3.0, 1.0)]
            .iter()
            .map(|&z| {
                connection(z, dm, DEFAULT_ORDER, DEFAULT_MATCHING)
                    .unwrap()
                    .wronskian
                    .norm()
            })
            .fold(0.0_f64, f64::max);
        assert!(w.wronskian.norm() / wmax > 1e-4);
    }

    #[test]
    fn wronskian_matching_point_invariance() {
        let dm = dim(5);
        let lambda = c(0.8, 0.6);
        let w04 = connection(lambda, dm, DEFAULT_ORDER, 0.4).unwrap().wronskian;
        let w06 = connection(lambda, dm, DEFAULT_ORDER, 0.6).unwrap().wronskian;
        assert_relative_eq!(w04.re, w06.re, epsilon = 1e-8 * w04.norm());
        assert_relative_eq!(w04.im, w06.im, epsilon = 1e-8 * w04.norm());
    }

    #[test]
    fn wronskian_is_analytic() {
        // Cauchy-Riemann by central differences at generic sample points.
        let dm = dim(3);
        let h = 1e-5;
        let pts = [c(0.3, 0.4), c(1.4, -0.7), c(2.2, 1.3), c(0.7, 2.1)];
        for &z in &pts {
            let wx = (w_value(z + c(h, 0.0), dm).unwrap() - w_value(z - c(h, 0.0), dm).unwrap())
                / (2.0 * h);
            let wy = (w_value(z + c(0.0, h), dm).unwrap() - w_value(z - c(0.0, h), dm).unwrap())
                / (2.0 * h);
            let cr = (wx - wy / C64::i()).norm() / wx.norm().max(1e-30);
            assert!(cr < 1e-6, "CR defect {cr:.2e} at {z}");
        }
    }

    #[test]
    fn small_region_without_eigenvalue_has_zero_winding() {
        // {Re ≥ −0.2, |λ| ≤ 2} minus a disk around 1: realized by counting in
        // the full small region (1 eigenvalue) and in one that excludes it.
        let dm = dim(3);
        let region = SearchRegion {
            re_min: -0.2,
            abs_max: 0.8,
        };
        let bpts = boundary_points(&region, 160);
        let f = |z: C64| w_value(z, dm);
        let w = winding_number(&f, &bpts).unwrap();
        assert!(w.abs() < 0.05, "winding {w}");
    }
}
