//! Frobenius series of the second-order spectral ODE
//!
//! (1−ρ²)v'' + ((d−1)/ρ − 2(λ+1)ρ)v' − (λ(λ+1) + (d−1)/2·V̂(ρ))v = 0
//!
//! at its regular singular points ρ = 0 and ρ = 1. Coefficients come from
//! the exact recurrence of the denominator-cleared polynomial form; integer
//! index gaps are treated by the modified log ansatz with the resonance
//! constant computed, never dodged by perturbing λ.

use num_complex::Complex64;

use crate::dimension::Dimension;
use crate::error::Result;

type C64 = Complex64;

/// Which regular singular point a series is anchored at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionPoint {
    Zero,
    One,
}

/// Which local solution is requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// The branch compatible with the Sobolev space at that endpoint.
    Admissible,
    /// The complementary branch (strong singularity or subordinate index).
    Singular,
}

/// Log part of a resonant series: constant · ln(s) · Σ x_i s^{w1_index + i}.
#[derive(Clone, Debug)]
pub struct LogPart {
    pub constant: C64,
    pub w1_index: C64,
    pub w1_coeffs: Vec<C64>,
}

/// Truncated Frobenius series s^index Σ coeffs_i s^i (+ optional log part),
/// in the local variable s = ρ at the origin and s = 1 − ρ at the light cone.
#[derive(Clone, Debug)]
pub struct FrobeniusSeries {
    pub expansion_point: ExpansionPoint,
    pub index: C64,
    pub coeffs: Vec<C64>,
    pub log: Option<LogPart>,
    pub radius_hint: f64,
}

/// Frobenius indices: (1, −(d−1)) at ρ = 0 and (0, (d−1)/2 − λ) at ρ = 1.
pub fn indices(point: ExpansionPoint, lambda: C64, dim: Dimension) -> (C64, C64) {
    match point {
        ExpansionPoint::Zero => (
            C64::new(1.0, 0.0),
            C64::new(-(dim.d_f64() - 1.0), 0.0),
        ),
        ExpansionPoint::One => (
            C64::new(0.0, 0.0),
            C64::new((dim.d_f64() - 1.0) / 2.0, 0.0) - lambda,
        ),
    }
}

/// The ODE with denominators cleared by ρ²(ρ²+d−2)²:
/// A v'' + B v' + C v = 0 with polynomial A, B, C.
pub(crate) struct LocalOde {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub c: Vec<C64>,
    /// Order of vanishing of A at the expansion point (0 there).
    pub ord: usize,
}

fn poly_compose_one_minus(p: &[C64]) -> Vec<C64> {
    // q(s) = p(1 − s).
    let n = p.len();
    let mut q = vec![C64::new(0.0, 0.0); n];
    for (m, &pm) in p.iter().enumerate() {
        // (1−s)^m = Σ_k binom(m,k)(−s)^k
        let mut binom = 1.0f64;
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            q[k] += pm * sign * binom;
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
    }
    q
}

pub(crate) fn local_ode(point: ExpansionPoint, lambda: C64, dim: Dimension) -> LocalOde {
    let e = dim.dm2();
    let d = dim.d_f64();
    let l = lambda;
    let z = C64::new(0.0, 0.0);
    let re = |v: f64| C64::new(v, 0.0);
    let a = vec![
        z,
        z,
        re(e * e),
        z,
        re(2.0 * e - e * e),
        z,
        re(1.0 - 2.0 * e),
        z,
        re(-1.0),
    ];
    let b = vec![
        z,
        re(e * e * (d - 1.0)),
        z,
        re(2.0 * e * (d - 1.0)) - 2.0 * e * e * (l + 1.0),
        z,
        re(d - 1.0) - 4.0 * e * (l + 1.0),
        z,
        -2.0 * (l + 1.0),
    ];
    let ll1 = l * (l + 1.0);
    let c = vec![
        re(-e * e * (d - 1.0)),
        z,
        re(6.0 * e * (d - 1.0)) - e * e * ll1,
        z,
        re(-(d - 1.0)) - 2.0 * e * ll1,
        z,
        -ll1,
    ];
    match point {
        ExpansionPoint::Zero => LocalOde { a, b, c, ord: 2 },
        ExpansionPoint::One => LocalOde {
            a: poly_compose_one_minus(&a),
            // v'(ρ) = −dv/ds flips the sign of the first-order coefficient.
            b: poly_compose_one_minus(&b).iter().map(|v| -v).collect(),
            c: poly_compose_one_minus(&c),
            ord: 1,
        },
    }
}

impl LocalOde {
    fn coeff(p: &[C64], idx: i64) -> C64 {
        if idx < 0 || idx as usize >= p.len() {
            C64::new(0.0, 0.0)
        } else {
            p[idx as usize]
        }
    }

    /// F_r(σ) = A_{r+ord} σ(σ−1) + B_{r+ord−1} σ + C_{r+ord−2}:
    /// the weight with which c_i enters the output order γ + j (j = i + r).
    pub(crate) fn f_r(&self, r: usize, sigma: C64) -> C64 {
        let o = self.ord as i64;
        let r = r as i64;
        Self::coeff(&self.a, r + o) * sigma * (sigma - 1.0)
            + Self::coeff(&self.b, r + o - 1) * sigma
            + Self::coeff(&self.c, r + o - 2)
    }

    /// Log-coupling weights E_j = Σ_i [(2(κ+i)−1)A_{ord+j−i} + B_{ord+j−i−1}] x_i.
    fn e_j(&self, j: usize, kappa: C64, x: &[C64]) -> C64 {
        let o = self.ord as i64;
        let mut acc = C64::new(0.0, 0.0);
        for (i, &xi) in x.iter().enumerate().take(j + 1) {
            let r = j as i64 - i as i64;
            let term = ((kappa + i as f64) * 2.0 - 1.0) * Self::coeff(&self.a, o + r)
                + Self::coeff(&self.b, o + r - 1);
            acc += term * xi;
        }
        acc
    }

    /// Plain recurrence for index s; fails at a resonant order.
    pub(crate) fn plain_series(&self, s: C64, order: usize) -> std::result::Result<Vec<C64>, usize> {
        let mut c = vec![C64::new(0.0, 0.0); order];
        c[0] = C64::new(1.0, 0.0);
        for j in 1..order {
            let mut rhs = C64::new(0.0, 0.0);
            for i in 0..j {
                rhs += c[i] * self.f_r(j - i, s + i as f64);
            }
            let denom = self.f_r(0, s + j as f64);
            if denom.norm() < 1e-12 * self.scale() {
                return Err(j);
            }
            c[j] = -rhs / denom;
        }
        Ok(c)
    }

    fn scale(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .chain(&self.c)
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Modified ansatz for the subordinate index γ when γ + gap is also an
    /// index: w₂ = s^γ Σ y_i s^i + C ln(s) w₁(s). Convention: y_gap = 0
    /// (gap > 0) or y_0 = 0 with C = 1 (equal indices).
    pub(crate) fn log_series(
        &self,
        gamma: C64,
        gap: usize,
        order: usize,
    ) -> (Vec<C64>, C64, Vec<C64>) {
        let kappa = gamma + gap as f64;
        let x = self
            .plain_series(kappa, order)
            .expect("dominant index series is resonance-free");
        let mut y = vec![C64::new(0.0, 0.0); order];
        let mut cconst = C64::new(1.0, 0.0);
        if gap == 0 {
            // Equal indices: forced log with unit constant, y_0 = 0.
            for j in 1..order {
                let mut rhs = self.e_j(j, kappa, &x);
                for i in 1..j {
                    rhs += y[i] * self.f_r(j - i, gamma + i as f64);
                }
                y[j] = -rhs / self.f_r(0, gamma + j as f64);
            }
            return (y, cconst, x);
        }
        y[0] = C64::new(1.0, 0.0);
        for j in 1..order {
            let mut rhs = C64::new(0.0, 0.0);
            for i in 0..j {
                rhs += y[i] * self.f_r(j - i, gamma + i as f64);
            }
            if j == gap {
                let e0 = self.e_j(0, kappa, &x);
                cconst = -rhs / e0;
                // y_gap stays 0 by convention.
                continue;
            }
            if j > gap {
                rhs += cconst * self.e_j(j - gap, kappa, &x);
            }
            y[j] = -rhs / self.f_r(0, gamma + j as f64);
        }
        (y, cconst, x)
    }
}

/// Construct the requested local solution, truncated at `order` terms.
///
/// Leading coefficients are normalized to 1. When the indices differ by a
/// nonnegative integer and the subordinate branch is requested, the log part
/// is present exactly when its resonance constant is nonzero.
pub fn frobenius_series(
    point: ExpansionPoint,
    branch: Branch,
    lambda: C64,
    dim: Dimension,
    order: usize,
) -> Result<FrobeniusSeries> {
    assert!(order >= 10, "series order must be at least 10");
    let ode = local_ode(point, lambda, dim);
    let (adm, sing) = match point {
        ExpansionPoint::Zero => {
            let (s1, s2) = indices(point, lambda, dim);
            (s1, s2)
        }
        ExpansionPoint::One => {
            let (s1, s2) = indices(point, lambda, dim);
            (s1, s2)
        }
    };
    let radius_hint = match point {
        // Nearest other singularities of the equation: ρ = ±1 and ρ² = −(d−2).
        ExpansionPoint::Zero => dim.sqrt_dm2().min(1.0),
        ExpansionPoint::One => 1.0,
    };
    let target = match branch {
        Branch::Admissible => adm,
        Branch::Singular => sing,
    };
    let other = if branch == Branch::Admissible { sing } else { adm };

    // Integer gap with target subordinate? Then the log ansatz applies.
    let gap = other - target;
    let resonant = gap.im.abs() < 1e-11
        && gap.re >= -1e-11
        && (gap.re - gap.re.round()).abs() < 1e-11
        && gap.re.round() >= 0.0;

    if resonant {
        let k = gap.re.round() as usize;
        if k == 0 && (target - other).norm() < 1e-11 && branch == Branch::Admissible {
            // Equal indices: the admissible branch is the unique power series.
            match ode.plain_series(target, order) {
                Ok(coeffs) => {
                    return Ok(FrobeniusSeries {
                        expansion_point: point,
                        index: target,
                        coeffs,
                        log: None,
                        radius_hint,
                    })
                }
                Err(_) => unreachable!("equal-index power series is resonance-free"),
            }
        }
        let (coeffs, cconst, x) = ode.log_series(target, k, order);
        let log = if cconst.norm() > 0.0 {
            Some(LogPart {
                constant: cconst,
                w1_index: target + k as f64,
                w1_coeffs: x,
            })
        } else {
            None
        };
        return Ok(FrobeniusSeries {
            expansion_point: point,
            index: target,
            coeffs,
            log,
            radius_hint,
        });
    }

    match ode.plain_series(target, order) {
        Ok(coeffs) => Ok(FrobeniusSeries {
            expansion_point: point,
            index: target,
            coeffs,
            log: None,
            radius_hint,
        }),
        Err(j) => unreachable!("unexpected resonance at order {j} for a non-integer gap"),
    }
}

impl FrobeniusSeries {
    /// Local coordinate of ρ for this expansion point.
    pub fn local(&self, rho: f64) -> f64 {
        match self.expansion_point {
            ExpansionPoint::Zero => rho,
            ExpansionPoint::One => 1.0 - rho,
        }
    }

    /// Value and d/ds derivative at local coordinate s > 0.
    pub fn eval_local(&self, s: f64) -> (C64, C64) {
        let ls = s.ln();
        let spow = |p: C64| C64::new(p.re * ls, p.im * ls).exp();
        let mut v = C64::new(0.0, 0.0);
        let mut dv = C64::new(0.0, 0.0);
        let lead = spow(self.index);
        let lead_m1 = spow(self.index - 1.0);
        let mut sk = 1.0;
        for (i, &ci) in self.coeffs.iter().enumerate() {
            v += ci * sk * lead;
            dv += ci * (self.index + i as f64) * sk * lead_m1;
            sk *= s;
        }
        if let Some(lp) = &self.log {
            let lnf = C64::new(ls, 0.0);
            let wlead = spow(lp.w1_index);
            let wlead_m1 = spow(lp.w1_index - 1.0);
            let mut sk = 1.0;
            for (i, &xi) in lp.w1_coeffs.iter().enumerate() {
                let c = lp.constant * xi;
                v += c * lnf * sk * wlead;
                dv += c * sk * wlead_m1 * (lnf * (lp.w1_index + i as f64) + 1.0);
                sk *= s;
            }
        }
        (v, dv)
    }

    /// Value and dv/dρ at ρ (sign-adjusted for the 1 − ρ variable).
    pub fn eval_rho(&self, rho: f64) -> (C64, C64) {
        let (v, dv) = self.eval_local(self.local(rho));
        match self.expansion_point {
            ExpansionPoint::Zero => (v, dv),
            ExpansionPoint::One => (v, -dv),
        }
    }
}

/// Residual of a truncated series in the cleared-form ODE at a point,
/// used to verify the recurrence order by order.
pub fn series_residual(series: &FrobeniusSeries, lambda: C64, dim: Dimension, rho: f64) -> f64 {
    let point = series.expansion_point;
    let ode = local_ode(point, lambda, dim);
    let s = series.local(rho);
    // Second derivative via the series directly.
    let ls = s.ln();
    let spow = |p: C64| C64::new(p.re * ls, p.im * ls).exp();
    let mut v = C64::new(0.0, 0.0);
    let mut dv = C64::new(0.0, 0.0);
    let mut d2v = C64::new(0.0, 0.0);
    let lead = spow(series.index);
    let lead1 = spow(series.index - 1.0);
    let lead2 = spow(series.index - 2.0);
    let mut sk = 1.0;
    for (i, &ci) in series.coeffs.iter().enumerate() {
        let p = series.index + i as f64;
        v += ci * sk * lead;
        dv += ci * p * sk * lead1;
        d2v += ci * p * (p - 1.0) * sk * lead2;
        sk *= s;
    }
    if let Some(lp) = &series.log {
        let lnf = C64::new(ls, 0.0);
        let wl = spow(lp.w1_index);
        let wl1 = spow(lp.w1_index - 1.0);
        let wl2 = spow(lp.w1_index - 2.0);
        let mut sk = 1.0;
        for (i, &xi) in lp.w1_coeffs.iter().enumerate() {
            let c = lp.constant * xi;
            let p = lp.w1_index + i as f64;
            v += c * lnf * sk * wl;
            dv += c * sk * wl1 * (lnf * p + 1.0);
            d2v += c * sk * wl2 * (lnf * p * (p - 1.0) + 2.0 * p - 1.0);
            sk *= s;
        }
    }
    let horner = |p: &[C64]| {
        let mut acc = C64::new(0.0, 0.0);
        for &ci in p.iter().rev() {
            acc = acc * s + ci;
        }
        acc
    };
    (horner(&ode.a) * d2v + horner(&ode.b) * dv + horner(&ode.c) * v).norm()
}


/// Test-support: expose the local polynomial coefficients.
#[doc(hidden)]
pub fn debug_local_ode(
    point: ExpansionPoint,
    lambda: C64,
    dim: Dimension,
) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let ode = local_ode(point, lambda, dim);
    (ode.a, ode.b, ode.c)
}
