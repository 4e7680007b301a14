//! Time evolution of the perturbation system in similarity coordinates:
//!
//! ∂_τ Φ = L̃Φ + N(Φ),  L̃ = L̃₀ + L′,
//!
//! with the free transport part L̃₀, the compact potential coupling L′, and
//! the quadratic remainder N. No boundary condition is imposed at ρ = 1
//! (outflow characteristic); regularity at ρ = 0 is enforced by the parity
//! of the representation. The module also hosts the rank-one gauge
//! projection at the isolated eigenvalue 1, the correction functional, the
//! vertex-time selection, and the blowup-time estimator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::frames::{initial_data_u, ConeFrame, DataPair};
use crate::grid::{build_grid, RadialGrid};
use crate::numerics::linear_fit;
use crate::profiles;

/// Perturbation state (φ₁, φ₂) on the grid at similarity time τ.
#[derive(Clone, Debug)]
pub struct State {
    pub phi1: DVector<f64>,
    pub phi2: DVector<f64>,
    pub tau: f64,
}

impl State {
    pub fn zero(n: usize) -> Self {
        State {
            phi1: DVector::zeros(n),
            phi2: DVector::zeros(n),
            tau: 0.0,
        }
    }

    pub fn sup(&self) -> f64 {
        self.phi1.amax().max(self.phi2.amax())
    }

    fn to_vec(&self) -> DVector<f64> {
        let n = self.phi1.len();
        let mut y = DVector::zeros(2 * n);
        y.rows_mut(0, n).copy_from(&self.phi1);
        y.rows_mut(n, n).copy_from(&self.phi2);
        y
    }

    fn from_vec(y: &DVector<f64>, tau: f64) -> Self {
        let n = y.len() / 2;
        State {
            phi1: y.rows(0, n).into_owned(),
            phi2: y.rows(n, n).into_owned(),
            tau,
        }
    }
}

/// How the unstable gauge direction is handled in a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeHandling {
    None,
    Project,
    AdjustT,
}

/// Run parameters. `dtau = None` selects the empirically calibrated stable
/// step 2.5/ρ(L); the realized step and the constant c = dtau·n² are
/// reported in the trajectory record.
#[derive(Clone, Debug)]
pub struct EvolutionConfig {
    pub dim: Dimension,
    pub n: usize,
    pub dtau: Option<f64>,
    pub tau_max: f64,
    pub nonlinear: bool,
    pub include_potential: bool,
    pub gauge: GaugeHandling,
    pub delta: f64,
    pub record_every: usize,
    pub fit_window: (f64, f64),
    pub store_snapshots: bool,
}

impl EvolutionConfig {
    pub fn new(dim: Dimension, n: usize) -> Self {
        EvolutionConfig {
            dim,
            n,
            dtau: None,
            tau_max: 8.0,
            nonlinear: false,
            include_potential: true,
            gauge: GaugeHandling::None,
            delta: 0.1,
            record_every: 8,
            fit_window: (3.0, 8.0),
            store_snapshots: false,
        }
    }
}

/// Precomputed operators for one (dimension, grid size) pair.
pub struct EvolutionContext {
    pub dim: Dimension,
    pub grid: RadialGrid,
    pub l_full: DMatrix<f64>,
    pub l_free: DMatrix<f64>,
    /// Eigenvalues of the full discrete operator.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
}

impl EvolutionContext {
    pub fn new(dim: Dimension, n: usize) -> Result<Self> {
        let grid = build_grid(n, dim)?;
        let l_full = operator_matrix(&grid, true);
        let l_free = operator_matrix(&grid, false);
        // Balance before the QR eigensolve: the raw entries scale like n⁴
        // and would otherwise bury the O(1) eigenvalues in roundoff.
        let (balanced, _) = crate::numerics::balance_matrix(&l_full);
        let eigenvalues: Vec<Complex64> =
            balanced.complex_eigenvalues().iter().copied().collect();
        let spectral_radius = eigenvalues
            .iter()
            .map(|e| e.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        Ok(EvolutionContext {
            dim,
            grid,
            l_full,
            l_free,
            eigenvalues,
            spectral_radius,
        })
    }

    /// Stable RK4 step: the classical stability interval is |hλ| ≲ 2.79 on
    /// the negative real axis and 2.83 on the imaginary one; 2.0 leaves a
    /// margin for the non-normal transients of the collocation operator.
    pub fn stable_dtau(&self) -> f64 {
        2.0 / self.spectral_radius
    }
}

/// Dense collocation matrix of the linearized operator on stacked (φ₁, φ₂).
///
/// First row block:  −2x∂_x − 1 | 1
/// Second row block: Δ_{ρ,d+2} (= D_ρ² + 2(d+1)D_x) + potential | −2x∂_x − 2,
/// with potential = −(d−1)/2 · V(ρ) when enabled.
pub fn operator_matrix(grid: &RadialGrid, include_potential: bool) -> DMatrix<f64> {
    let n = grid.n;
    let dim = grid.dim;
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let dx = &grid.diff_x;
    let d2rho = &grid.diff_rho[1];
    for i in 0..n {
        let x = grid.x[i];
        for j in 0..n {
            // A11 = −2x D_x − I
            m[(i, j)] = -2.0 * x * dx[(i, j)] - if i == j { 1.0 } else { 0.0 };
            // A12 = I
            if i == j {
                m[(i, n + j)] = 1.0;
            }
            // A21 = D_ρ² + 2(d+1) D_x (+ potential)
            m[(n + i, j)] = d2rho[(i, j)] + 2.0 * (dim.d_f64() + 1.0) * dx[(i, j)];
            // A22 = −2x D_x − 2I
            m[(n + i, n + j)] = -2.0 * x * dx[(i, j)] - if i == j { 2.0 } else { 0.0 };
        }
        if include_potential {
            m[(n + i, i)] +=
                -0.5 * (dim.d_f64() - 1.0) * profiles::potential_v(grid.rho[i], dim);
        }
    }
    m
}

/// Free transport part L̃₀ applied to a state.
pub fn apply_l0(state: &State, grid: &RadialGrid, dim: Dimension) -> State {
    let du1 = &grid.diff_x * &state.phi1;
    let du2 = &grid.diff_x * &state.phi2;
    let lap = grid.deriv(&state.phi1, 2) + 2.0 * (dim.d_f64() + 1.0) * &du1;
    let mut phi1 = DVector::zeros(grid.n);
    let mut phi2 = DVector::zeros(grid.n);
    for i in 0..grid.n {
        let x = grid.x[i];
        phi1[i] = -2.0 * x * du1[i] - state.phi1[i] + state.phi2[i];
        phi2[i] = lap[i] - 2.0 * x * du2[i] - 2.0 * state.phi2[i];
    }
    State {
        phi1,
        phi2,
        tau: state.tau,
    }
}

/// Potential coupling L′: (0, −(d−1)/2 · V(ρ) · φ₁).
pub fn apply_lprime(state: &State, grid: &RadialGrid, dim: Dimension) -> State {
    let phi2 = DVector::from_iterator(
        grid.n,
        grid.rho
            .iter()
            .zip(state.phi1.iter())
            .map(|(&r, &u)| -0.5 * (dim.d_f64() - 1.0) * profiles::potential_v(r, dim) * u),
    );
    State {
        phi1: DVector::zeros(grid.n),
        phi2,
        tau: state.tau,
    }
}

/// Nonlinear remainder N: (0, N̂(ρ, φ₁(ρ))).
pub fn apply_n(state: &State, grid: &RadialGrid, dim: Dimension) -> State {
    let phi2 = DVector::from_iterator(
        grid.n,
        grid.rho
            .iter()
            .zip(state.phi1.iter())
            .map(|(&r, &u)| profiles::nonlinearity_nhat(r, u, dim)),
    );
    State {
        phi1: DVector::zeros(grid.n),
        phi2,
        tau: state.tau,
    }
}

fn rhs(ctx: &EvolutionContext, y: &DVector<f64>, nonlinear: bool, include_potential: bool) -> DVector<f64> {
    let l = if include_potential {
        &ctx.l_full
    } else {
        &ctx.l_free
    };
    let mut dy = l * y;
    if nonlinear {
        let n = ctx.grid.n;
        for i in 0..n {
            dy[n + i] +=
                profiles::nonlinearity_nhat(ctx.grid.rho[i], y[i], ctx.dim);
        }
    }
    dy
}

/// One classical RK4 step of the (possibly nonlinear) flow.
pub fn step_rk4(state: &State, config: &EvolutionConfig, ctx: &EvolutionContext) -> Result<State> {
    let dtau = config.dtau.unwrap_or_else(|| ctx.stable_dtau());
    let y = state.to_vec();
    let y1 = rk4_step(ctx, &y, dtau, config.nonlinear, config.include_potential);
    let out = State::from_vec(&y1, state.tau + dtau);
    if !out.sup().is_finite() || out.sup() > 1e6 {
        return Err(Error::UnreliableSeries(format!(
            "blowup of perturbation at tau = {:.4}",
            out.tau
        )));
    }
    Ok(out)
}

fn rk4_step(
    ctx: &EvolutionContext,
    y: &DVector<f64>,
    h: f64,
    nonlinear: bool,
    include_potential: bool,
) -> DVector<f64> {
    let k1 = rhs(ctx, y, nonlinear, include_potential);
    let k2 = rhs(ctx, &(y + 0.5 * h * &k1), nonlinear, include_potential);
    let k3 = rhs(ctx, &(y + 0.5 * h * &k2), nonlinear, include_potential);
    let k4 = rhs(ctx, &(y + h * &k3), nonlinear, include_potential);
    y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Rank-one spectral projection onto the gauge direction at eigenvalue ≈ 1,
/// built from the discrete right and left eigenvectors.
pub struct GaugeProjection {
    pub eigenvalue: f64,
    pub right: DVector<f64>,
    pub left: DVector<f64>,
}

/// Locate the discrete eigenvalue near 1 and build the projection.
/// Fails when no eigenvalue lies within 1e−3 of 1.
pub fn build_gauge_projection(ctx: &EvolutionContext) -> Result<GaugeProjection> {
    let mut best = Complex64::new(f64::INFINITY, 0.0);
    for e in &ctx.eigenvalues {
        if (e - 1.0).norm() < (best - 1.0).norm() {
            best = *e;
        }
    }
    if (best - 1.0).norm() > 1e-3 {
        return Err(Error::EigenvalueNotFound {
            target: 1.0,
            tol: 1e-3,
            closest: best.re,
        });
    }
    // Real simple eigenvalue: inverse iteration on the balanced matrix with
    // a slightly detuned shift, then transform the vectors back.
    let mu = best.re;
    let n2 = ctx.l_full.nrows();
    let (balanced, dscale) = crate::numerics::balance_matrix(&ctx.l_full);
    let mut shift = mu + 1e-8;
    let mut right = DVector::from_fn(n2, |i, _| 1.0 + (i as f64 * 0.13).cos());
    let mut left = right.clone();
    for sweep in 0..3 {
        let shifted = &balanced - DMatrix::identity(n2, n2) * shift;
        let lut = shifted.transpose().lu();
        let lu = shifted.lu();
        for _ in 0..4 {
            right = lu.solve(&right).ok_or_else(|| {
                Error::Eigendecomposition("singular shift in inverse iteration".into())
            })?;
            right /= right.norm();
            left = lut.solve(&left).ok_or_else(|| {
                Error::Eigendecomposition("singular shift in inverse iteration (left)".into())
            })?;
            left /= left.norm();
        }
        // Two-sided Rayleigh quotient: quadratically accurate also for the
        // non-normal operator.
        let mu_refined = left.dot(&(&balanced * &right)) / left.dot(&right);
        if sweep < 2 {
            shift = mu_refined + 1e-10;
        }
    }
    let mu = left.dot(&(&balanced * &right)) / left.dot(&right);
    let mut right = DVector::from_fn(n2, |i, _| right[i] * dscale[i]);
    let mut left = DVector::from_fn(n2, |i, _| left[i] / dscale[i]);
    // Normalize the pairing ⟨left, right⟩ = 1 and fix the scale of `right`
    // to the sampled gauge mode for readable amplitudes.
    let g = gauge_state(&ctx.grid, ctx.dim);
    let gvec = g.to_vec();
    let scale = right.dot(&gvec) / right.dot(&right);
    right *= scale;
    let pairing = left.dot(&right);
    left /= pairing;
    Ok(GaugeProjection {
        eigenvalue: mu,
        right,
        left,
    })
}

impl GaugeProjection {
    /// Coefficient of the gauge direction in a state.
    pub fn amplitude(&self, state: &State) -> f64 {
        self.left.dot(&state.to_vec())
    }

    /// P applied to a state.
    pub fn apply(&self, state: &State) -> State {
        let a = self.amplitude(state);
        State::from_vec(&(a * &self.right), state.tau)
    }

    /// (1 − P) applied to a state.
    pub fn project_out(&self, state: &State) -> State {
        let a = self.amplitude(state);
        State::from_vec(&(state.to_vec() - a * &self.right), state.tau)
    }
}

/// The analytically known gauge mode sampled on the grid.
pub fn gauge_state(grid: &RadialGrid, dim: Dimension) -> State {
    let g = profiles::gauge_mode(dim);
    State {
        phi1: grid.sample(|r| g.g1(r)),
        phi2: grid.sample(|r| g.g2(r)),
        tau: 0.0,
    }
}

/// Structured divergence report for unguarded unstable-mode runs.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct DivergenceEvent {
    pub tau: f64,
    pub sup: f64,
}

/// Per-run record: times, per-order seminorms of both components, total
/// pair norm, gauge amplitude, the weighted nonlinearity amplitude used by
/// the correction functional, and the tail decay fit.
pub struct TrajectoryRecord {
    pub dtau: f64,
    pub cfl_constant: f64,
    pub taus: Vec<f64>,
    pub seminorms1: Vec<Vec<f64>>,
    pub seminorms2: Vec<Vec<f64>>,
    pub total: Vec<f64>,
    pub gauge_amplitude: Vec<f64>,
    pub nonlin_gauge_amp: Vec<f64>,
    pub phi1_origin: Vec<f64>,
    pub decay_fit: Option<(f64, f64, f64)>,
    pub diverged: Option<DivergenceEvent>,
    pub snapshots: Option<Vec<State>>,
}

impl TrajectoryRecord {
    /// Fitted decay rate of log total norm over a window (slope, icept, rms).
    pub fn fit_over(&self, window: (f64, f64)) -> Option<(f64, f64, f64)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &t) in self.taus.iter().enumerate() {
            if t >= window.0 && t <= window.1 && self.total[i] > 0.0 {
                xs.push(t);
                ys.push(self.total[i].ln());
            }
        }
        if xs.len() < 3 {
            return None;
        }
        Some(linear_fit(&xs, &ys))
    }
}

/// Integrate the flow from `initial`, recording norms and amplitudes.
///
/// Divergence (sup-norm above 1e6 or non-finite) is not an error: the run
/// stops and the event is recorded, since unguarded unstable-mode runs are
/// a supported experiment.
pub fn evolve(
    initial: &State,
    config: &EvolutionConfig,
    ctx: &EvolutionContext,
    projection: Option<&GaugeProjection>,
) -> Result<TrajectoryRecord> {
    let dtau = config.dtau.unwrap_or_else(|| ctx.stable_dtau());
    let steps = (config.tau_max / dtau).ceil() as usize;
    let dtau = config.tau_max / steps as f64;
    let m = ctx.dim.m() as usize;

    let start = match (config.gauge, projection) {
        (GaugeHandling::Project, Some(p)) => p.project_out(initial),
        _ => initial.clone(),
    };

    let mut y = start.to_vec();
    let mut rec = TrajectoryRecord {
        dtau,
        cfl_constant: dtau * (config.n * config.n) as f64,
        taus: Vec::new(),
        seminorms1: Vec::new(),
        seminorms2: Vec::new(),
        total: Vec::new(),
        gauge_amplitude: Vec::new(),
        nonlin_gauge_amp: Vec::new(),
        phi1_origin: Vec::new(),
        decay_fit: None,
        diverged: None,
        snapshots: if config.store_snapshots {
            Some(Vec::new())
        } else {
            None
        },
    };

    let record = |y: &DVector<f64>, tau: f64, rec: &mut TrajectoryRecord| {
        let state = State::from_vec(y, tau);
        let mut s1 = Vec::with_capacity(m + 1);
        for k in 0..=m {
            s1.push(ctx.grid.seminorm(&state.phi1, k, 1.0).unwrap());
        }
        let mut s2 = Vec::with_capacity(m);
        for k in 0..m {
            s2.push(ctx.grid.seminorm(&state.phi2, k, 1.0).unwrap());
        }
        let total = ctx.grid.pair_norm(&state.phi1, &state.phi2);
        rec.taus.push(tau);
        rec.total.push(total);
        rec.gauge_amplitude
            .push(projection.map_or(0.0, |p| p.amplitude(&state)));
        let namp = if config.nonlinear {
            projection.map_or(0.0, |p| {
                let nstate = apply_n(&state, &ctx.grid, ctx.dim);
                p.left.dot(&nstate.to_vec())
            })
        } else {
            0.0
        };
        rec.nonlin_gauge_amp.push(namp);
        rec.phi1_origin.push(state.phi1[0]);
        rec.seminorms1.push(s1);
        rec.seminorms2.push(s2);
        if let Some(snaps) = rec.snapshots.as_mut() {
            snaps.push(state);
        }
    };

    record(&y, 0.0, &mut rec);
    for step in 1..=steps {
        y = rk4_step(ctx, &y, dtau, config.nonlinear, config.include_potential);
        let tau = step as f64 * dtau;
        let sup = y.amax();
        if !sup.is_finite() || sup > 1e6 {
            rec.diverged = Some(DivergenceEvent { tau, sup });
            break;
        }
        if step % config.record_every == 0 || step == steps {
            record(&y, tau, &mut rec);
        }
    }
    rec.decay_fit = rec.fit_over(config.fit_window);
    Ok(rec)
}

/// Discrete correction functional C(Φ, u) = P(u + ∫₀^∞ e^{−s} N(Φ(s)) ds),
/// reported as the coefficient along the gauge direction.
#[derive(Clone, Copy, Debug)]
pub struct CorrectionValue {
    pub amplitude: f64,
    pub data_part: f64,
    pub integral_part: f64,
    pub tail_bound: f64,
    pub tail_warning: bool,
}

pub fn correction_term(
    trajectory: &TrajectoryRecord,
    initial: &State,
    projection: &GaugeProjection,
) -> CorrectionValue {
    let data_part = projection.amplitude(initial);
    // Trapezoid rule for ∫ e^{−s} (w·N(Φ(s))) ds over the recorded times.
    let mut integral = 0.0;
    for i in 1..trajectory.taus.len() {
        let (t0, t1) = (trajectory.taus[i - 1], trajectory.taus[i]);
        let f0 = (-t0).exp() * trajectory.nonlin_gauge_amp[i - 1];
        let f1 = (-t1).exp() * trajectory.nonlin_gauge_amp[i];
        integral += 0.5 * (f0 + f1) * (t1 - t0);
    }
    let tail_bound = trajectory
        .taus
        .last()
        .map(|&t| (-t).exp() * trajectory.nonlin_gauge_amp.last().unwrap().abs())
        .unwrap_or(0.0);
    let amplitude = data_part + integral;
    CorrectionValue {
        amplitude,
        data_part,
        integral_part: integral,
        tail_bound,
        tail_warning: tail_bound > 0.01 * amplitude.abs().max(1e-300),
    }
}

/// Sample the perturbation initial data on the grid.
pub fn data_state(
    v: &DataPair,
    vertex: f64,
    frame: &ConeFrame,
    ctx: &EvolutionContext,
) -> Result<State> {
    let u = initial_data_u(v, vertex, frame, ctx.dim)?;
    let (a, b) = u.sample(&ctx.grid.rho);
    Ok(State {
        phi1: DVector::from_vec(a),
        phi2: DVector::from_vec(b),
        tau: 0.0,
    })
}

/// Result of the vertex-time selection.
#[derive(Clone, Copy, Debug)]
pub struct SelectedVertex {
    pub vertex: f64,
    pub functional: f64,
    pub iterations: usize,
}

/// Root of T ↦ ⟨C(Φ_T, U(v,T)), g⟩ on [T₀−δ, T₀+δ] by bisection-secant.
///
/// The trajectory Φ_T is the gauge-projected flow from U(v,T); at the
/// selected vertex the correction vanishes, so the projected and plain
/// flows coincide there to the accuracy of the root.
pub fn select_vertex(
    v: &DataPair,
    frame: &ConeFrame,
    config: &EvolutionConfig,
    ctx: &EvolutionContext,
    projection: &GaugeProjection,
) -> Result<SelectedVertex> {
    let functional = |vertex: f64| -> Result<f64> {
        let u = data_state(v, vertex, frame, ctx)?;
        let corr = if config.nonlinear {
            let mut cfg = config.clone();
            cfg.gauge = GaugeHandling::Project;
            let traj = evolve(&u, &cfg, ctx, Some(projection))?;
            correction_term(&traj, &u, projection)
        } else {
            // Linear flow: N ≡ 0, only the data part contributes.
            CorrectionValue {
                amplitude: projection.amplitude(&u),
                data_part: projection.amplitude(&u),
                integral_part: 0.0,
                tail_bound: 0.0,
                tail_warning: false,
            }
        };
        Ok(corr.amplitude)
    };

    let (mut lo, mut hi) = (frame.t0 - frame.delta, frame.t0 + frame.delta);
    let mut flo = functional(lo)?;
    let fhi = functional(hi)?;
    if flo == 0.0 {
        return Ok(SelectedVertex {
            vertex: lo,
            functional: 0.0,
            iterations: 0,
        });
    }
    if flo * fhi > 0.0 {
        return Err(Error::BracketFailure { lo, hi });
    }
    let mut fhi = fhi;
    let mut best = (lo, flo);
    let mut iterations = 0;
    for _ in 0..60 {
        iterations += 1;
        // Secant candidate, safeguarded by the bracket.
        let mut t = hi - fhi * (hi - lo) / (fhi - flo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let ft = functional(t)?;
        if ft.abs() < best.1.abs() {
            best = (t, ft);
        }
        if ft.abs() < 1e-11 || (hi - lo) < 1e-13 {
            return Ok(SelectedVertex {
                vertex: t,
                functional: ft,
                iterations,
            });
        }
        if flo * ft <= 0.0 {
            hi = t;
            fhi = ft;
        } else {
            lo = t;
            flo = ft;
        }
    }
    if best.1.abs() < 1e-8 {
        Ok(SelectedVertex {
            vertex: best.0,
            functional: best.1,
            iterations,
        })
    } else {
        Err(Error::BracketFailure {
            lo: frame.t0 - frame.delta,
            hi: frame.t0 + frame.delta,
        })
    }
}

/// Fit of the blowup time from a series of (t, ∂_r ψ(t, 0)) samples:
/// 1/∂_rψ is linear in t with root at the blowup time.
#[derive(Clone, Copy, Debug)]
pub struct BlowupEstimate {
    pub t_estimate: f64,
    pub fit_residual: f64,
    pub reliable: bool,
}

pub fn estimate_blowup_time(series: &[(f64, f64)]) -> Result<BlowupEstimate> {
    if series.len() < 3 {
        return Err(Error::UnreliableSeries("need at least 3 samples".into()));
    }
    let mut reliable = true;
    for w in series.windows(2) {
        if w[1].1 <= w[0].1 {
            // The slope at the origin must grow monotonically before breakdown.
            reliable = false;
        }
    }
    let xs: Vec<f64> = series.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = series.iter().map(|s| 1.0 / s.1).collect();
    let (slope, icept, rms) = linear_fit(&xs, &ys);
    if slope >= 0.0 {
        return Err(Error::UnreliableSeries(
            "1/∂_rψ(t,0) is not decreasing".into(),
        ));
    }
    Ok(BlowupEstimate {
        t_estimate: -icept / slope,
        fit_residual: rms,
        reliable,
    })
}

/// Series (t, ∂_rψ(t,0)) along a recorded trajectory in the frame of the run.
pub fn blowup_series(
    record: &TrajectoryRecord,
    vertex: f64,
    dim: Dimension,
) -> Vec<(f64, f64)> {
    let base = 2.0 / dim.sqrt_dm2();
    record
        .taus
        .iter()
        .zip(&record.phi1_origin)
        .map(|(&tau, &p)| {
            let t = vertex * (1.0 - (-tau).exp());
            let slope = (base + p) / (vertex - t);
            (t, slope)
        })
        .collect()
}

/// Deterministic random smooth state: a few low Chebyshev modes in x with
/// geometrically decaying amplitudes, normalized to the requested pair norm.
pub fn random_smooth_state<R: Rng>(
    grid: &RadialGrid,
    amplitude: f64,
    rng: &mut R,
) -> State {
    let modes = 6;
    let mut phi1 = DVector::zeros(grid.n);
    let mut phi2 = DVector::zeros(grid.n);
    for k in 0..modes {
        let c1: f64 = rng.gen_range(-1.0..1.0);
        let c2: f64 = rng.gen_range(-1.0..1.0);
        let damp = (0.45_f64).powi(k as i32);
        for (i, &x) in grid.x.iter().enumerate() {
            let t = cheb(k, 2.0 * x - 1.0);
            phi1[i] += c1 * damp * t;
            phi2[i] += c2 * damp * t;
        }
    }
    let norm = grid.pair_norm(&phi1, &phi2);
    let scale = if norm > 0.0 { amplitude / norm } else { 0.0 };
    State {
        phi1: phi1 * scale,
        phi2: phi2 * scale,
        tau: 0.0,
    }
}

fn cheb(k: usize, t: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut a, mut b) = (1.0, t);
            for _ in 2..=k {
                let c = 2.0 * t * b - a;
                a = b;
                b = c;
            }
            b
        }
    }
}

/// Smooth compactly-concentrated data pair used by the nonlinear pipeline:
/// (F, G) = amp · (r³ e^{−2r²}, r e^{−r²}).
pub fn bump_data(amplitude: f64) -> DataPair {
    DataPair {
        f: crate::frames::RadialFn::from_fn(move |r| {
            amplitude * r * r * r * (-2.0 * r * r).exp()
        }),
        g: crate::frames::RadialFn::from_fn(move |r| amplitude * r * (-r * r).exp()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn dim(n: u32) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn ctx(d: u32, n: usize) -> EvolutionContext {
        EvolutionContext::new(dim(d), n).unwrap()
    }

    #[test]
    fn l0_on_constant_and_square() {
        let c = ctx(3, 24);
        let n = c.grid.n;
        // (const, 0) → (−const, 0).
        let s = State {
            phi1: DVector::from_element(n, 2.5),
            phi2: DVector::zeros(n),
            tau: 0.0,
        };
        let out = apply_l0(&s, &c.grid, c.dim);
        for i in 0..n {
            assert_abs_diff_eq!(out.phi1[i], -2.5, epsilon = 1e-11);
            // Second-derivative roundoff of the collocation matrix.
            assert_abs_diff_eq!(out.phi2[i], 0.0, epsilon = 1e-8);
        }
        // u₁ = ρ², u₂ = 0, d=3: first −3ρ², second Δ_{ρ,d+2}ρ² = 2(d+2) = 10.
        let s = State {
            phi1: c.grid.sample(|r| r * r),
            phi2: DVector::zeros(n),
            tau: 0.0,
        };
        let out = apply_l0(&s, &c.grid, c.dim);
        for (i, &r) in c.grid.rho.iter().enumerate() {
            assert_abs_diff_eq!(out.phi1[i], -3.0 * r * r, epsilon = 1e-10);
            assert_abs_diff_eq!(out.phi2[i], 10.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn lprime_values_and_zero() {
        let c = ctx(3, 24);
        let g = gauge_state(&c.grid, c.dim);
        let out = apply_lprime(&g, &c.grid, c.dim);
        // At ρ = 0: −(d−1)/2·V(0)·g₁(0) = −1·(−16)·1 = 16.
        assert_relative_eq!(out.phi2[0], 16.0, epsilon = 1e-12);
        let z = State::zero(c.grid.n);
        let out = apply_lprime(&z, &c.grid, c.dim);
        assert_eq!(out.phi2.amax(), 0.0);
    }

    #[test]
    fn gauge_mode_is_discrete_eigenvector() {
        for d in [3u32, 5, 7] {
            let c = ctx(d, 48);
            let g = gauge_state(&c.grid, c.dim);
            let l0 = apply_l0(&g, &c.grid, c.dim);
            let lp = apply_lprime(&g, &c.grid, c.dim);
            for i in 0..c.grid.n {
                assert_abs_diff_eq!(l0.phi1[i] + lp.phi1[i], g.phi1[i], epsilon = 1e-6);
                assert_abs_diff_eq!(l0.phi2[i] + lp.phi2[i], g.phi2[i], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn nonlinearity_zero_state() {
        let c = ctx(5, 24);
        let z = State::zero(c.grid.n);
        let out = apply_n(&z, &c.grid, c.dim);
        assert_eq!(out.phi2.amax(), 0.0);
    }

    #[test]
    fn projection_properties() {
        let c = ctx(3, 40);
        let p = build_gauge_projection(&c).unwrap();
        assert!((p.eigenvalue - 1.0).abs() < 1e-8, "mu = {}", p.eigenvalue);
        // P g = g.
        let g = gauge_state(&c.grid, c.dim);
        let pg = p.apply(&g);
        for i in 0..c.grid.n {
            assert_abs_diff_eq!(pg.phi1[i], g.phi1[i], epsilon = 1e-8);
            assert_abs_diff_eq!(pg.phi2[i], g.phi2[i], epsilon = 1e-8);
        }
        // Idempotence on pseudo-random states.
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
        for _ in 0..10 {
            let s = random_smooth_state(&c.grid, 1.0, &mut rng);
            let ps = p.apply(&s);
            let pps = p.apply(&ps);
            for i in 0..c.grid.n {
                assert_abs_diff_eq!(pps.phi1[i], ps.phi1[i], epsilon = 1e-10);
            }
        }
        // Commutation with L on a test state (sup norm).
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8);
        let s = random_smooth_state(&c.grid, 1.0, &mut rng);
        let y = s.to_vec();
        let lp_y = &c.l_full * &p.apply(&s).to_vec();
        let pl_y = p.apply(&State::from_vec(&(&c.l_full * &y), 0.0)).to_vec();
        for i in 0..2 * c.grid.n {
            assert_abs_diff_eq!(lp_y[i], pl_y[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_is_equilibrium_of_nonlinear_stepper() {
        let c = ctx(3, 32);
        let mut cfg = EvolutionConfig::new(c.dim, 32);
        cfg.nonlinear = true;
        cfg.tau_max = 1.0;
        let rec = evolve(&State::zero(c.grid.n), &cfg, &c, None).unwrap();
        assert!(rec.diverged.is_none());
        for v in &rec.total {
            assert_eq!(*v, 0.0);
        }
        assert!(rec.decay_fit.is_none());
    }

    #[test]
    fn rk4_temporal_convergence_order() {
        // Richardson self-comparison of the final state vector against a
        // reference run at dtau/8: errors must drop ~16× per halving.
        let c = ctx(3, 24);
        let g = gauge_state(&c.grid, c.dim);
        let run = |dtau: f64| -> DVector<f64> {
            let mut cfg = EvolutionConfig::new(c.dim, 24);
            cfg.dtau = Some(dtau);
            cfg.tau_max = 1.0;
            cfg.record_every = usize::MAX;
            cfg.store_snapshots = true;
            let rec = evolve(&g, &cfg, &c, None).unwrap();
            rec.snapshots.unwrap().last().unwrap().to_vec()
        };
        let base = c.stable_dtau() / 2.0;
        let reference = run(base / 8.0);
        let err = |h: f64| (run(h) - &reference).amax();
        let (e1, e2, e4) = (err(base), err(base / 2.0), err(base / 4.0));
        let (r1, r2) = (e1 / e2, e2 / e4);
        assert!(r1 > 11.0 && r1 < 24.0, "convergence ratios {r1:.2}, {r2:.2}");
        assert!(r2 > 11.0 && r2 < 26.0, "convergence ratios {r1:.2}, {r2:.2}");
    }

    #[test]
    fn gauge_data_grows_like_exp_tau() {
        let c = ctx(3, 40);
        let p = build_gauge_projection(&c).unwrap();
        let g = gauge_state(&c.grid, c.dim);
        let mut cfg = EvolutionConfig::new(c.dim, 40);
        cfg.tau_max = 1.0;
        cfg.record_every = 16;
        let rec = evolve(&g, &cfg, &c, Some(&p)).unwrap();
        let i_end = rec.taus.len() - 1;
        let expected = rec.total[0] * rec.taus[i_end].exp();
        assert!(
            (rec.total[i_end] - expected).abs() / expected < 0.01,
            "e^tau growth violated: {} vs {}",
            rec.total[i_end],
            expected
        );
    }

    #[test]
    fn correction_functional_on_gauge_data() {
        let c = ctx(3, 40);
        let p = build_gauge_projection(&c).unwrap();
        let g = gauge_state(&c.grid, c.dim);
        let mut cfg = EvolutionConfig::new(c.dim, 40);
        cfg.tau_max = 0.5;
        let rec = evolve(&g, &cfg, &c, Some(&p)).unwrap();
        let corr = correction_term(&rec, &g, &p);
        // Linear run: N ≡ 0, amplitude = ⟨g⟩-coefficient of g = 1.
        assert_relative_eq!(corr.amplitude, 1.0, epsilon = 1e-7);
        assert_eq!(corr.integral_part, 0.0);
        // And a state with Pu = 0 gives 0.
        let s = p.project_out(&gauge_state(&c.grid, c.dim));
        let corr0 = correction_term(&rec, &s, &p);
        assert_abs_diff_eq!(corr0.data_part, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn blowup_time_exact_profile() {
        // ψ^T gives 1/∂_rψ(t,0) = √(d−2)(T−t)/2 exactly: intercept T.
        for (d, vertex) in [(3u32, 1.0), (5, 1.0)] {
            let dm = dim(d);
            let series: Vec<(f64, f64)> = (0..20)
                .map(|i| {
                    let t = 0.03 * i as f64;
                    let slope = 2.0 / (dm.sqrt_dm2() * (vertex - t));
                    (t, slope)
                })
                .collect();
            let est = estimate_blowup_time(&series).unwrap();
            assert!(est.reliable);
            assert_relative_eq!(est.t_estimate, vertex, epsilon = 1e-10);
        }
    }

    #[test]
    fn blowup_time_flags_nonmonotone() {
        let series = vec![(0.0, 2.0), (0.1, 1.9), (0.2, 2.2), (0.3, 2.5)];
        let est = estimate_blowup_time(&series).unwrap();
        assert!(!est.reliable);
    }

    #[test]
    fn select_vertex_trivial_and_constructed() {
        let c = ctx(3, 32);
        let p = build_gauge_projection(&c).unwrap();
        let frame = ConeFrame::centered(1.0, 0.05).unwrap();
        let mut cfg = EvolutionConfig::new(c.dim, 32);
        cfg.tau_max = 6.0;
        cfg.nonlinear = false;

        // v = 0 → T = T₀.
        let v = DataPair::zero();
        let sel = select_vertex(&v, &frame, &cfg, &c, &p).unwrap();
        assert_abs_diff_eq!(sel.vertex, 1.0, epsilon = 1e-10);

        // v from ψ^{T'} recovers T'.
        let tp = 1.0 * (1.0 + 1e-2);
        let v = DataPair::profile_difference(tp, 1.0, c.dim);
        let sel = select_vertex(&v, &frame, &cfg, &c, &p).unwrap();
        assert!((sel.vertex - tp).abs() / tp < 1e-3, "got {}", sel.vertex);
    }

    #[test]
    fn correction_slope_matches_gauge_pairing() {
        // d/dT of the functional at T₀ equals (2√(d−2)/T₀) in amplitude units.
        let c = ctx(3, 32);
        let p = build_gauge_projection(&c).unwrap();
        let frame = ConeFrame::centered(1.0, 0.05).unwrap();
        let v = DataPair::zero();
        let h = 1e-4;
        let amp = |vertex: f64| {
            let u = data_state(&v, vertex, &frame, &c).unwrap();
            p.amplitude(&u)
        };
        let slope = (amp(1.0 + h) - amp(1.0 - h)) / (2.0 * h);
        assert_relative_eq!(slope, 2.0 * c.dim.sqrt_dm2(), epsilon = 1e-3);
    }
}
