//! Coordinate transformations between physical cone variables (t, r) and
//! similarity variables (τ, ρ), rescaled field pairs, and assembly of the
//! perturbation initial data from radial data on the ball.

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::profiles;

/// Backward light cone frame: vertex time T, reference blowup time T₀, and
/// the half-width δ of the admissible vertex bracket [T₀−δ, T₀+δ].
#[derive(Clone, Copy, Debug)]
pub struct ConeFrame {
    pub vertex: f64,
    pub t0: f64,
    pub delta: f64,
}

impl ConeFrame {
    pub fn new(vertex: f64, t0: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !(t0 - delta > 0.0) {
            return Err(Error::InvalidConfig {
                field: "delta".into(),
                message: format!("need 0 < delta < t0, got delta={delta}, t0={t0}"),
            });
        }
        if vertex < t0 - delta || vertex > t0 + delta {
            return Err(Error::VertexOutOfBracket {
                t: vertex,
                lo: t0 - delta,
                hi: t0 + delta,
            });
        }
        Ok(ConeFrame { vertex, t0, delta })
    }

    /// Frame centered at its reference time.
    pub fn centered(t0: f64, delta: f64) -> Result<Self> {
        Self::new(t0, t0, delta)
    }

    pub fn with_vertex(&self, vertex: f64) -> Result<Self> {
        Self::new(vertex, self.t0, self.delta)
    }
}

/// A point on the similarity cylinder [0,∞) × [0,1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityPoint {
    pub tau: f64,
    pub rho: f64,
}

/// Map a cone point to similarity coordinates
/// (τ, ρ) = (log(T/(T−t)), r/(T−t)).
pub fn to_similarity(t: f64, r: f64, frame: &ConeFrame) -> Result<SimilarityPoint> {
    let vertex = frame.vertex;
    if t < 0.0 || t >= vertex || r < 0.0 || r > vertex - t {
        return Err(Error::OutsideCone { t, r, vertex });
    }
    Ok(SimilarityPoint {
        tau: (vertex / (vertex - t)).ln(),
        rho: r / (vertex - t),
    })
}

/// Inverse map: (t, r) = (T(1−e^{−τ}), Tρe^{−τ}).
pub fn from_similarity(p: SimilarityPoint, frame: &ConeFrame) -> (f64, f64) {
    let em = (-p.tau).exp();
    (frame.vertex * (1.0 - em), frame.vertex * p.rho * em)
}

/// A radial function on [0, R], either closed-form or sampled.
///
/// Sampled inputs are interpolated barycentrically and must include r = 0;
/// quotients f(r)/r at the origin are recovered by one-sided polynomial
/// extrapolation, closed-form inputs by extrapolating the quotient over a
/// geometric sequence of small radii.
pub enum RadialFn {
    Closed(Box<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled { rs: Vec<f64>, vals: Vec<f64> },
}

impl RadialFn {
    pub fn zero() -> Self {
        RadialFn::Closed(Box::new(|_| 0.0))
    }

    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        RadialFn::Closed(Box::new(f))
    }

    pub fn from_samples(rs: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if rs.len() != vals.len() || rs.len() < 4 {
            return Err(Error::InvalidConfig {
                field: "samples".into(),
                message: "need at least 4 matching nodes".into(),
            });
        }
        if rs[0] != 0.0 {
            return Err(Error::InvalidConfig {
                field: "samples".into(),
                message: "sampled radial functions must include r = 0".into(),
            });
        }
        Ok(RadialFn::Sampled { rs, vals })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialFn::Closed(f) => f(r),
            RadialFn::Sampled { rs, vals } => barycentric(rs, vals, r),
        }
    }

    /// f(r)/r continued through r = 0 (requires f(0) = 0).
    pub fn eval_over_r(&self, r: f64) -> f64 {
        match self {
            RadialFn::Closed(f) => {
                if r > 1e-6 {
                    f(r) / r
                } else {
                    quotient_near_zero(f, r)
                }
            }
            RadialFn::Sampled { rs, vals } => {
                if r > rs[1] {
                    barycentric(rs, vals, r) / r
                } else {
                    let take = rs.len().min(9);
                    let mut xs = vec![0.0; take - 1];
                    let mut ys = vec![0.0; take - 1];
                    for i in 1..take {
                        xs[i - 1] = rs[i];
                        ys[i - 1] = vals[i] / rs[i];
                    }
                    neville(&xs, &mut ys, r)
                }
            }
        }
    }
}

fn barycentric(rs: &[f64], vals: &[f64], r: f64) -> f64 {
    let n = rs.len();
    let span = rs[n - 1] - rs[0];
    // Capacity-scaled weights keep the products in range.
    let scale = 4.0 / span;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let diff = r - rs[j];
        if diff == 0.0 {
            return vals[j];
        }
        let mut w = 1.0;
        for k in 0..n {
            if k != j {
                w /= (rs[j] - rs[k]) * scale;
            }
        }
        let q = w / diff;
        num += q * vals[j];
        den += q;
    }
    num / den
}

/// f(r)/r near r = 0 by Neville extrapolation on a geometric ladder.
fn quotient_near_zero<F: Fn(f64) -> f64>(f: F, r: f64) -> f64 {
    let mut xs = [0.0; 8];
    let mut ys = [0.0; 8];
    for i in 0..8 {
        let s = 0.04 / (1 << i) as f64;
        xs[i] = s;
        ys[i] = f(s) / s;
    }
    neville(&xs, &mut ys, r)
}

fn neville(xs: &[f64], ys: &mut [f64], x: f64) -> f64 {
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            ys[i] = ((x - xs[i + level]) * ys[i] + (xs[i] - x) * ys[i + 1])
                / (xs[i] - xs[i + level]);
        }
    }
    ys[0]
}

/// Radial data pair v = (F, G) relative to the reference profile, defined on
/// [0, T₀+δ] with F(0) = 0.
pub struct DataPair {
    pub f: RadialFn,
    pub g: RadialFn,
}

impl DataPair {
    pub fn zero() -> Self {
        DataPair {
            f: RadialFn::zero(),
            g: RadialFn::zero(),
        }
    }

    /// v = ψ^{T'}[0] − ψ^{T₀}[0]: the exact data difference of two members
    /// of the blowup family at time zero.
    pub fn profile_difference(t_prime: f64, t0: f64, dim: Dimension) -> Self {
        DataPair {
            f: RadialFn::from_fn(move |r| {
                profiles::f0(r / t_prime, dim) - profiles::f0(r / t0, dim)
            }),
            g: RadialFn::from_fn(move |r| {
                profiles::f0_prime(r / t_prime, dim) * r / (t_prime * t_prime)
                    - profiles::f0_prime(r / t0, dim) * r / (t0 * t0)
            }),
        }
    }
}

/// Rescaled similarity fields (ψ₁, ψ₂) of a physical solution:
/// ψ₁ = (T−t)ψ/r and ψ₂ = (T−t)²ψ_t/r composed with the inverse
/// similarity map.
pub struct RescaledField<'a> {
    psi: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    psi_t: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    frame: ConeFrame,
}

/// Wrap physical fields for evaluation in similarity variables.
/// The boundary condition ψ(t, 0) = 0 is enforced to 1e−10 at evaluation.
pub fn rescale_fields<'a>(
    psi: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    psi_t: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    frame: ConeFrame,
) -> RescaledField<'a> {
    RescaledField { psi, psi_t, frame }
}

impl RescaledField<'_> {
    pub fn eval(&self, tau: f64, rho: f64) -> Result<(f64, f64)> {
        let (t, r) = from_similarity(SimilarityPoint { tau, rho }, &self.frame);
        let s = self.frame.vertex - t;
        if rho > 1e-9 {
            Ok((s * (self.psi)(t, r) / r, s * s * (self.psi_t)(t, r) / r))
        } else {
            let at_origin = (self.psi)(t, 0.0);
            if at_origin.abs() > 1e-10 {
                return Err(Error::NonvanishingAtOrigin {
                    value: at_origin.abs(),
                    tol: 1e-10,
                });
            }
            let q1 = quotient_near_zero(|rr| (self.psi)(t, rr), r);
            let q2 = quotient_near_zero(|rr| (self.psi_t)(t, rr), r);
            Ok((s * q1, s * s * q2))
        }
    }
}

/// Undo the rescaling: reconstruct ψ(t, r) from similarity fields.
pub fn unrescale<F>(psi1: F, t: f64, r: f64, frame: &ConeFrame) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let p = to_similarity(t, r, frame)?;
    Ok(r / (frame.vertex - t) * psi1(p.tau, p.rho))
}

/// Initial data operator for the perturbation:
///
/// U(v, T)(ρ) = (profile family at rescaled vertex − static profile) + V(v, T)(ρ),
/// with V(v, T) = (F(Tρ)/ρ, T·G(Tρ)/ρ).
pub struct InitialData<'a> {
    v: &'a DataPair,
    vertex: f64,
    t0: f64,
    dim: Dimension,
}

pub fn initial_data_u<'a>(
    v: &'a DataPair,
    vertex: f64,
    frame: &ConeFrame,
    dim: Dimension,
) -> Result<InitialData<'a>> {
    if vertex < frame.t0 - frame.delta || vertex > frame.t0 + frame.delta {
        return Err(Error::VertexOutOfBracket {
            t: vertex,
            lo: frame.t0 - frame.delta,
            hi: frame.t0 + frame.delta,
        });
    }
    Ok(InitialData {
        v,
        vertex,
        t0: frame.t0,
        dim,
    })
}

impl InitialData<'_> {
    /// Evaluate (φ₁(0,ρ), φ₂(0,ρ)).
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        let c = self.vertex / self.t0;
        // f₀(cρ)/ρ = c · [f₀/·](cρ), smooth through ρ = 0.
        let prof1 =
            c * profiles::f0_over_rho(c * rho, self.dim) - profiles::f0_over_rho(rho, self.dim);
        let prof2 =
            c * c * profiles::f0_prime(c * rho, self.dim) - profiles::f0_prime(rho, self.dim);
        // F(Tρ)/ρ = T · [F/·](Tρ), likewise for G.
        let data1 = self.vertex * self.v.f.eval_over_r(self.vertex * rho);
        let data2 = self.vertex * self.vertex * self.v.g.eval_over_r(self.vertex * rho);
        (prof1 + data1, prof2 + data2)
    }

    pub fn sample(&self, rhos: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut a = Vec::with_capacity(rhos.len());
        let mut b = Vec::with_capacity(rhos.len());
        for &rho in rhos {
            let (x, y) = self.eval(rho);
            a.push(x);
            b.push(y);
        }
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{f0_over_rho, f0_prime};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn d3() -> Dimension {
        Dimension::new(3).unwrap()
    }

    #[test]
    fn similarity_map_examples() {
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let p = to_similarity(0.0, 0.0, &frame).unwrap();
        assert_eq!(p.tau, 0.0);
        assert_eq!(p.rho, 0.0);

        // (T(1−e⁻¹), 0.5·T·e⁻¹) → (1, 0.5).
        for vertex in [0.9, 1.0, 1.15] {
            let frame = ConeFrame::new(vertex, 1.0, 0.2).unwrap();
            let t = vertex * (1.0 - (-1.0_f64).exp());
            let r = 0.5 * vertex * (-1.0_f64).exp();
            let p = to_similarity(t, r, &frame).unwrap();
            assert_relative_eq!(p.tau, 1.0, epsilon = 1e-13);
            assert_relative_eq!(p.rho, 0.5, epsilon = 1e-13);
        }

        // Boundary characteristic: t → T⁻ with r = T − t pins ρ = 1, τ large.
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let t = 1.0 - 1e-9;
        let p = to_similarity(t, 1.0 - t, &frame).unwrap();
        assert_relative_eq!(p.rho, 1.0, epsilon = 1e-12);
        assert!(p.tau > 20.0);

        assert!(to_similarity(0.5, 0.6, &frame).is_err());
    }

    #[test]
    fn derivative_transformation_rules() {
        // For u(τ,ρ) polynomial and ψ = u∘μ, check
        // ∂_t ψ = (e^τ/T)(∂_τ u + ρ ∂_ρ u) and ∂_r ψ = (e^τ/T) ∂_ρ u.
        use crate::numerics::fd_deriv1;
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let u = |tau: f64, rho: f64| tau * tau * rho.powi(3) + tau + 0.3 * rho * rho;
        let u_tau = |tau: f64, rho: f64| 2.0 * tau * rho.powi(3) + 1.0;
        let u_rho = |tau: f64, rho: f64| 3.0 * tau * tau * rho * rho + 0.6 * rho;
        let psi = |t: f64, r: f64| {
            let p = to_similarity(t, r, &frame).unwrap();
            u(p.tau, p.rho)
        };
        let (t, r) = (0.4, 0.2);
        let p = to_similarity(t, r, &frame).unwrap();
        let fac = p.tau.exp() / frame.vertex;
        let dt = fd_deriv1(&|tt| psi(tt, r), t, 1e-3);
        let dr = fd_deriv1(&|rr| psi(t, rr), r, 1e-3);
        assert_abs_diff_eq!(
            dt,
            fac * (u_tau(p.tau, p.rho) + p.rho * u_rho(p.tau, p.rho)),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(dr, fac * u_rho(p.tau, p.rho), epsilon = 1e-9);
    }

    #[test]
    fn rescaled_blowup_solution_is_static() {
        let dim = d3();
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let vertex = frame.vertex;
        let psi = move |t: f64, r: f64| crate::profiles::psi_t(t, r, vertex, dim).unwrap().0;
        let psi_t = move |t: f64, r: f64| crate::profiles::psi_t(t, r, vertex, dim).unwrap().1;
        let field = rescale_fields(&psi, &psi_t, frame);
        for tau in [0.0, 0.7, 2.0] {
            for rho in [0.0, 0.3, 0.99] {
                let (p1, p2) = field.eval(tau, rho).unwrap();
                assert_abs_diff_eq!(p1, f0_over_rho(rho, dim), epsilon = 1e-10);
                assert_abs_diff_eq!(p2, f0_prime(rho, dim), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_field_rescales_to_zero() {
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let zero = |_: f64, _: f64| 0.0;
        let field = rescale_fields(&zero, &zero, frame);
        let (a, b) = field.eval(1.0, 0.5).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn rescale_flags_nonvanishing_origin() {
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let bad = |_: f64, _: f64| 1e-3;
        let zero = |_: f64, _: f64| 0.0;
        let field = rescale_fields(&bad, &zero, frame);
        assert!(matches!(
            field.eval(0.5, 0.0),
            Err(Error::NonvanishingAtOrigin { .. })
        ));
    }

    #[test]
    fn round_trip_rescale_unrescale() {
        let dim = d3();
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let vertex = frame.vertex;
        let psi = move |t: f64, r: f64| crate::profiles::psi_t(t, r, vertex, dim).unwrap().0;
        let psi_t = move |t: f64, r: f64| crate::profiles::psi_t(t, r, vertex, dim).unwrap().1;
        let field = rescale_fields(&psi, &psi_t, frame);
        for (t, r) in [(0.1, 0.3), (0.5, 0.2), (0.8, 0.05)] {
            let rec = unrescale(|tau, rho| field.eval(tau, rho).unwrap().0, t, r, &frame).unwrap();
            assert_abs_diff_eq!(rec, psi(t, r), epsilon = 1e-12);
        }
    }

    #[test]
    fn initial_data_zero_at_reference() {
        let dim = d3();
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let v = DataPair::zero();
        let u = initial_data_u(&v, 1.0, &frame, dim).unwrap();
        for rho in [0.0, 0.2, 0.7, 1.0] {
            let (a, b) = u.eval(rho);
            assert_eq!(a, 0.0);
            assert_eq!(b, 0.0);
        }
        assert!(initial_data_u(&v, 1.3, &frame, dim).is_err());
    }

    #[test]
    fn initial_data_linearizes_to_gauge_mode() {
        // U(0, T₀(1+h)) = h·2√(d−2)·g(ρ) + O(h²).
        for n in [3u32, 5] {
            let dim = Dimension::new(n).unwrap();
            let g = crate::profiles::gauge_mode(dim);
            let frame = ConeFrame::centered(1.0, 0.2).unwrap();
            let v = DataPair::zero();
            let h = 1e-4;
            let u = initial_data_u(&v, 1.0 + h, &frame, dim).unwrap();
            let scale = 2.0 * dim.sqrt_dm2();
            for rho in [0.0, 0.3, 0.8, 1.0] {
                let (a, b) = u.eval(rho);
                // O(h²) coefficient is modest; allow 50·h² slack.
                assert_abs_diff_eq!(a, h * scale * g.g1(rho), epsilon = 50.0 * h * h);
                assert_abs_diff_eq!(b, h * scale * g.g2(rho), epsilon = 50.0 * h * h);
            }
        }
    }

    #[test]
    fn initial_data_cubic_example() {
        // F(r) = r³, G = 0, T = T₀ = 1, d = 3 → first component ρ².
        let dim = d3();
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let v = DataPair {
            f: RadialFn::from_fn(|r| r * r * r),
            g: RadialFn::zero(),
        };
        let u = initial_data_u(&v, 1.0, &frame, dim).unwrap();
        for rho in [0.0, 0.1, 0.5, 1.0] {
            let (a, _) = u.eval(rho);
            assert_abs_diff_eq!(a, rho * rho, epsilon = 1e-9);
        }
    }

    #[test]
    fn initial_data_continuous_in_vertex() {
        // Sup-norm differences shrink proportionally to h.
        let dim = d3();
        let frame = ConeFrame::centered(1.0, 0.2).unwrap();
        let v = DataPair::profile_difference(1.01, 1.0, dim);
        let rhos: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let base = initial_data_u(&v, 1.0, &frame, dim).unwrap();
        let (b1, b2) = base.sample(&rhos);
        let mut sups = Vec::new();
        for h in [1e-2, 1e-3, 1e-4] {
            let u = initial_data_u(&v, 1.0 + h, &frame, dim).unwrap();
            let (a1, a2) = u.sample(&rhos);
            let sup = a1
                .iter()
                .zip(&b1)
                .chain(a2.iter().zip(&b2))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max);
            sups.push(sup);
        }
        assert!(sups[0] > sups[1] && sups[1] > sups[2]);
        // Proportional decay: ratios within 25% of 10.
        assert!((sups[0] / sups[1] - 10.0).abs() < 2.5);
        assert!((sups[1] / sups[2] - 10.0).abs() < 2.5);
    }

    #[test]
    fn sampled_radial_fn_quotient() {
        let rs: Vec<f64> = (0..40).map(|i| i as f64 * 0.03).collect();
        let vals: Vec<f64> = rs.iter().map(|&r| (3.0 * r).sin()).collect();
        let f = RadialFn::from_samples(rs, vals).unwrap();
        assert_relative_eq!(f.eval(0.5), (1.5_f64).sin(), epsilon = 1e-10);
        assert_relative_eq!(f.eval_over_r(0.0), 3.0, epsilon = 1e-8);
    }

    proptest! {
        #[test]
        fn similarity_round_trip(t in 0.0..0.99f64, frac in 0.0..1.0f64) {
            let frame = ConeFrame::centered(1.0, 0.2).unwrap();
            let r = frac * (1.0 - t);
            let p = to_similarity(t, r, &frame).unwrap();
            prop_assert!(p.rho >= 0.0 && p.rho <= 1.0 + 1e-15);
            prop_assert!(p.tau >= 0.0);
            let (t2, r2) = from_similarity(p, &frame);
            prop_assert!((t2 - t).abs() < 1e-14);
            prop_assert!((r2 - r).abs() < 1e-14);
        }
    }
}
