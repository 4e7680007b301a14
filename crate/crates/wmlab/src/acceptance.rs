//! Executable verification suite: one function per acceptance criterion,
//! each returning a structured pass/fail record with the measured numbers.
//! `wmlab verify-all` runs all of them and the integration test suite
//! asserts every one.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dimension::Dimension;
use crate::error::Result;
use crate::evolution::{
    self, build_gauge_projection, bump_data, evolve, gauge_state, select_vertex, EvolutionConfig,
    EvolutionContext, GaugeHandling,
};
use crate::frames::{ConeFrame, DataPair};
use crate::grid::build_grid;
use crate::numerics::{fd_deriv1, fd_deriv2, linear_fit};
use crate::profiles;
use crate::spectrum::{
    connection, find_eigenvalues, SearchRegion, DEFAULT_MATCHING, DEFAULT_ORDER,
};
use crate::{appendix, exact};

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CriterionResult {
    fn new(id: usize, name: &'static str, passed: bool, details: String) -> Self {
        CriterionResult {
            id,
            name,
            passed,
            details,
        }
    }

    pub fn print_line(&self) {
        println!(
            "criterion {:2} [{}]: {} — {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.details
        );
    }
}

fn dims(list: &[u32]) -> Vec<Dimension> {
    list.iter().map(|&d| Dimension::new(d).unwrap()).collect()
}

/// 1. Residual of the blowup solution in the reduced radial wave equation,
/// by 8th-order finite differences at 50 interior cone points, for
/// d ∈ {3,5,7,9}; threshold 1e−10.
pub fn criterion_1() -> CriterionResult {
    let vertex = 1.0;
    let mut worst: f64 = 0.0;
    for dim in dims(&[3, 5, 7, 9]) {
        let dm1 = dim.d_f64() - 1.0;
        for i in 0..50 {
            // Interior points spread over the cone; the 9-point stencils in
            // t and r must stay inside it.
            let t = 0.1 + 0.7 * ((i * 7) % 50) as f64 / 50.0;
            let frac = 0.15 + 0.7 * ((i * 13) % 50) as f64 / 50.0;
            let r = frac * (vertex - t);
            let h = (0.012 * (vertex - t))
                .min(t / 5.0)
                .min(r / 5.0)
                .min((vertex - t - r) / 5.0);
            let psi_of_t = |tt: f64| profiles::psi_t(tt, r, vertex, dim).unwrap().0;
            let psi_of_r = |rr: f64| profiles::psi_t(t, rr, vertex, dim).unwrap().0;
            let psi_tt = fd_deriv2(&psi_of_t, t, h);
            let psi_rr = fd_deriv2(&psi_of_r, r, h);
            let psi_r = fd_deriv1(&psi_of_r, r, h);
            let psi = psi_of_r(r);
            let res =
                psi_tt - psi_rr - dm1 / r * psi_r + 0.5 * dm1 * (2.0 * psi).sin() / (r * r);
            worst = worst.max(res.abs());
        }
    }
    CriterionResult::new(
        1,
        "profile residual",
        worst < 1e-10,
        format!("max |residual| = {worst:.3e} (threshold 1e-10)"),
    )
}

/// 2. Gauge eigenpair: normalized |W(1)| < 1e−9 from the shooting
/// connection, collocation eigenvalue within 1e−6 of 1, and the collocation
/// eigenvector matching the closed-form gauge mode to 1e−6 relative sup,
/// for d ∈ {3,5,7,9}.
pub fn criterion_2() -> Result<CriterionResult> {
    let mut details = Vec::new();
    let mut passed = true;
    for dim in dims(&[3, 5, 7, 9]) {
        let w1 = connection(Complex64::new(1.0, 0.0), dim, DEFAULT_ORDER, DEFAULT_MATCHING)?
            .wronskian;
        let wref = connection(Complex64::new(0.5, 0.0), dim, DEFAULT_ORDER, DEFAULT_MATCHING)?
            .wronskian;
        let wnorm = w1.norm() / wref.norm();

        // The steeper weights of the larger dimensions need more nodes to
        // push the eigenpair defect under 1e−6.
        let n = if dim.d() <= 5 { 48 } else { 80 };
        let ctx = EvolutionContext::new(dim, n)?;
        let proj = build_gauge_projection(&ctx)?;
        let mu_err = (proj.eigenvalue - 1.0).abs();
        let g = gauge_state(&ctx.grid, dim);
        let n = ctx.grid.n;
        let mut vec_err: f64 = 0.0;
        for i in 0..n {
            vec_err = vec_err.max((proj.right[i] - g.phi1[i]).abs() / g.phi1.amax());
            vec_err = vec_err.max((proj.right[n + i] - g.phi2[i]).abs() / g.phi2.amax());
        }
        let ok = wnorm < 1e-9 && mu_err < 1e-6 && vec_err < 1e-6;
        passed &= ok;
        details.push(format!(
            "d={}: |W(1)|/|W(0.5)|={wnorm:.2e}, |mu-1|={mu_err:.2e}, eigvec sup={vec_err:.2e}",
            dim.d()
        ));
    }
    Ok(CriterionResult::new(
        2,
        "gauge eigenpair",
        passed,
        details.join("; "),
    ))
}

/// 3. Spectral gap: in {Re λ ≥ 0, |λ| ≤ 15} the argument-principle count is
/// 1 and the unique refined root is 1 ± 1e−8, for d ∈ {3,5,7}.
pub fn criterion_3() -> Result<CriterionResult> {
    let region = SearchRegion {
        re_min: 0.0,
        abs_max: 15.0,
    };
    let mut details = Vec::new();
    let mut passed = true;
    for dim in dims(&[3, 5, 7]) {
        let rep = find_eigenvalues(region, dim)?;
        let ok = rep.winding_count == 1
            && rep.eigenvalues.len() == 1
            && (Complex64::new(rep.eigenvalues[0].re, rep.eigenvalues[0].im)
                - Complex64::new(1.0, 0.0))
            .norm()
                < 1e-8;
        passed &= ok;
        details.push(format!(
            "d={}: winding={}, roots={:?}",
            dim.d(),
            rep.winding_count,
            rep.eigenvalues
                .iter()
                .map(|e| format!("{:.10}{:+.2e}i", e.re, e.im))
                .collect::<Vec<_>>()
        ));
    }
    Ok(CriterionResult::new(
        3,
        "spectral gap",
        passed,
        details.join("; "),
    ))
}

/// 4. Unstable-mode rate: ungauged linear evolution of the gauge mode grows
/// with fitted rate 1.00 ± 0.05 over τ ∈ [0, 2].
pub fn criterion_4() -> Result<CriterionResult> {
    let dim = Dimension::new(3)?;
    let ctx = EvolutionContext::new(dim, 40)?;
    let proj = build_gauge_projection(&ctx)?;
    let g = gauge_state(&ctx.grid, dim);
    let mut cfg = EvolutionConfig::new(dim, 40);
    cfg.tau_max = 2.0;
    cfg.fit_window = (0.0, 2.0);
    cfg.record_every = 4;
    let rec = evolve(&g, &cfg, &ctx, Some(&proj))?;
    let (rate, _, _) = rec.fit_over((0.0, 2.0)).unwrap();
    // The gauge amplitude itself must carry the same rate.
    let amp_xs: Vec<f64> = rec.taus.clone();
    let amp_ys: Vec<f64> = rec
        .gauge_amplitude
        .iter()
        .map(|a| a.abs().max(1e-300).ln())
        .collect();
    let (amp_rate, _, _) = linear_fit(&amp_xs, &amp_ys);
    let passed = (rate - 1.0).abs() <= 0.05 && (amp_rate - 1.0).abs() <= 0.05;
    Ok(CriterionResult::new(
        4,
        "unstable-mode rate",
        passed,
        format!("norm rate {rate:.4}, amplitude rate {amp_rate:.4} (target 1.00 ± 0.05)"),
    ))
}

/// 5. Free decay: with the potential off, ten seeded random smooth states
/// decay with fitted tail rate ≤ −0.9.
pub fn criterion_5(seed: u64) -> Result<CriterionResult> {
    let dim = Dimension::new(3)?;
    let ctx = EvolutionContext::new(dim, 40)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let s = evolution::random_smooth_state(&ctx.grid, 1.0, &mut rng);
        let mut cfg = EvolutionConfig::new(dim, 40);
        cfg.include_potential = false;
        cfg.tau_max = 10.0;
        // Tail window past the non-normal transient of the free semigroup.
        cfg.fit_window = (5.0, 10.0);
        let rec = evolve(&s, &cfg, &ctx, None)?;
        let (rate, _, _) = rec.decay_fit.unwrap();
        worst = worst.max(rate);
    }
    Ok(CriterionResult::new(
        5,
        "free decay",
        worst <= -0.9,
        format!("worst fitted tail rate {worst:.4} (threshold -0.9)"),
    ))
}

/// 6. Stable decay: gauge-projected linear evolution decays with rate
/// < −0.05 for d ∈ {3,5,7}; nonlinear runs with amplitude ≤ 1e−3 and
/// selected vertex decay in every Sobolev order up to (d+3)/2.
pub fn criterion_6(seed: u64) -> Result<CriterionResult> {
    let mut details = Vec::new();
    let mut passed = true;
    for dim in dims(&[3, 5, 7]) {
        let ctx = EvolutionContext::new(dim, 48)?;
        let proj = build_gauge_projection(&ctx)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ dim.d() as u64);
        let s = evolution::random_smooth_state(&ctx.grid, 1.0, &mut rng);
        let mut cfg = EvolutionConfig::new(dim, 48);
        cfg.gauge = GaugeHandling::Project;
        cfg.tau_max = 8.0;
        cfg.fit_window = (3.0, 8.0);
        let rec = evolve(&s, &cfg, &ctx, Some(&proj))?;
        let (lin_rate, _, _) = rec.decay_fit.unwrap();

        // Nonlinear pipeline: bump data, vertex selection, plain flow.
        let frame = ConeFrame::centered(1.0, 0.05)?;
        let v = bump_data(1e-3);
        let mut sel_cfg = EvolutionConfig::new(dim, 48);
        sel_cfg.nonlinear = true;
        sel_cfg.tau_max = 12.0;
        sel_cfg.record_every = 4;
        let sel = select_vertex(&v, &frame, &sel_cfg, &ctx, &proj)?;
        let u = evolution::data_state(&v, sel.vertex, &frame, &ctx)?;
        let mut run_cfg = EvolutionConfig::new(dim, 48);
        run_cfg.nonlinear = true;
        run_cfg.gauge = GaugeHandling::AdjustT;
        run_cfg.tau_max = 8.0;
        run_cfg.record_every = 4;
        let rec = evolve(&u, &run_cfg, &ctx, Some(&proj))?;
        // Per-order decay over a window clear of the residual gauge tail.
        let window = (0.5, 5.0);
        let m = dim.m() as usize;
        let mut worst_order_rate = f64::NEG_INFINITY;
        for k in 0..=m {
            let rate = fit_series(&rec.taus, rec.seminorms1.iter().map(|v| v[k]), window);
            worst_order_rate = worst_order_rate.max(rate);
        }
        for k in 0..m {
            let rate = fit_series(&rec.taus, rec.seminorms2.iter().map(|v| v[k]), window);
            worst_order_rate = worst_order_rate.max(rate);
        }
        let ok = lin_rate < -0.05 && worst_order_rate < 0.0 && rec.diverged.is_none();
        passed &= ok;
        details.push(format!(
            "d={}: linear rate {lin_rate:.4}, worst nonlinear order rate {worst_order_rate:.4}",
            dim.d()
        ));
    }
    Ok(CriterionResult::new(
        6,
        "stable decay",
        passed,
        details.join("; "),
    ))
}

fn fit_series<I: Iterator<Item = f64>>(taus: &[f64], values: I, window: (f64, f64)) -> f64 {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, v) in taus.iter().zip(values) {
        if *t >= window.0 && *t <= window.1 && v > 0.0 {
            xs.push(*t);
            ys.push(v.ln());
        }
    }
    linear_fit(&xs, &ys).0
}

/// 7. Vertex recovery: data built from the blowup family at T' = T₀(1±1e−2)
/// yield both the selected vertex and the blowup-time fit within 1e−3
/// relative of T'.
pub fn criterion_7() -> Result<CriterionResult> {
    let dim = Dimension::new(3)?;
    let ctx = EvolutionContext::new(dim, 48)?;
    let proj = build_gauge_projection(&ctx)?;
    let frame = ConeFrame::centered(1.0, 0.05)?;
    let mut details = Vec::new();
    let mut passed = true;
    for sign in [1.0, -1.0] {
        let t_prime = 1.0 + sign * 1e-2;
        let v = DataPair::profile_difference(t_prime, 1.0, dim);
        let mut cfg = EvolutionConfig::new(dim, 48);
        cfg.nonlinear = true;
        cfg.tau_max = 10.0;
        cfg.record_every = 4;
        let sel = select_vertex(&v, &frame, &cfg, &ctx, &proj)?;
        let sel_err = (sel.vertex - t_prime).abs() / t_prime;

        let u = evolution::data_state(&v, sel.vertex, &frame, &ctx)?;
        let mut run_cfg = cfg.clone();
        run_cfg.tau_max = 3.0;
        let rec = evolve(&u, &run_cfg, &ctx, Some(&proj))?;
        let series = evolution::blowup_series(&rec, sel.vertex, dim);
        let est = evolution::estimate_blowup_time(&series)?;
        let est_err = (est.t_estimate - t_prime).abs() / t_prime;
        let ok = sel_err < 1e-3 && est_err < 1e-3;
        passed &= ok;
        details.push(format!(
            "T'={t_prime}: selected {:.6} (rel {sel_err:.2e}), fitted {:.6} (rel {est_err:.2e})",
            sel.vertex, est.t_estimate
        ));
    }
    Ok(CriterionResult::new(
        7,
        "vertex recovery",
        passed,
        details.join("; "),
    ))
}

/// 8. Norm-scaling exponents: fitted exponents of the profile's seminorms
/// across ball radii match d/2 − k (and d/2 − ℓ − 1 for the time
/// derivative) within 1e−3 for d ∈ {3, 5}.
pub fn criterion_8() -> Result<CriterionResult> {
    let mut worst: f64 = 0.0;
    for dim in dims(&[3, 5]) {
        let grid = build_grid(48, dim)?;
        let scales = [1.0, 0.5, 0.25];
        for k in 0..=dim.m() as usize {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &s in &scales {
                let u = grid.sample(|r| profiles::f0_over_rho(r, dim) / s);
                xs.push(s.ln());
                ys.push(grid.seminorm(&u, k, s)?.ln());
            }
            let (slope, _, _) = linear_fit(&xs, &ys);
            worst = worst.max((slope - (dim.d_f64() / 2.0 - k as f64)).abs());
        }
        for l in 0..dim.m() as usize {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &s in &scales {
                let u = grid.sample(|r| profiles::f0_prime(r, dim) / (s * s));
                xs.push(s.ln());
                ys.push(grid.seminorm(&u, l, s)?.ln());
            }
            let (slope, _, _) = linear_fit(&xs, &ys);
            worst = worst.max((slope - (dim.d_f64() / 2.0 - l as f64 - 1.0)).abs());
        }
    }
    Ok(CriterionResult::new(
        8,
        "norm-scaling exponents",
        worst < 1e-3,
        format!("max exponent defect {worst:.2e} (threshold 1e-3)"),
    ))
}

/// 9. Nonlinearity: closed-form vs triple-integral agreement 1e−9, the
/// ζ-derivative vs centered differences 1e−6 on a (ζ, ρ) lattice, and
/// bounded Lipschitz quotients on 20 seeded pairs in the 0.1-ball.
pub fn criterion_9(seed: u64) -> Result<CriterionResult> {
    let dim = Dimension::new(3)?;
    // Branch agreement.
    let mut branch_gap: f64 = 0.0;
    for (rho, zeta) in [(0.5, 0.2), (0.02, -0.4), (0.9, 0.7), (0.15, 1.0)] {
        let closed = profiles::nonlinearity_nhat(rho, zeta, dim);
        let quad = profiles::nhat_quadrature(rho, zeta, dim);
        branch_gap = branch_gap.max((closed - quad).abs() / closed.abs().max(1e-300));
    }
    // M vs finite differences of N̂ in ζ on the lattice ζ ∈ [−1,1], ρ ∈ [0,1].
    let mut m_gap: f64 = 0.0;
    let h = 1e-5;
    for i in 0..=4 {
        let rho = i as f64 * 0.25;
        for j in 0..=4 {
            let zeta = -1.0 + j as f64 * 0.5;
            let fd = (profiles::nonlinearity_nhat(rho, zeta + h, dim)
                - profiles::nonlinearity_nhat(rho, zeta - h, dim))
                / (2.0 * h);
            m_gap = m_gap.max((profiles::nonlinearity_m(rho, zeta, dim) - fd).abs());
        }
    }
    // Lipschitz quotients ‖N(u)−N(v)‖ / ((‖u‖+‖v‖)‖u−v‖) on B_0.1.
    let ctx = EvolutionContext::new(dim, 48)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(9));
    let mut k_fit: f64 = 0.0;
    for _ in 0..20 {
        let u = evolution::random_smooth_state(&ctx.grid, 0.1, &mut rng);
        let v = evolution::random_smooth_state(&ctx.grid, 0.05, &mut rng);
        let nu = evolution::apply_n(&u, &ctx.grid, dim);
        let nv = evolution::apply_n(&v, &ctx.grid, dim);
        let dn = ctx.grid.pair_norm(
            &DVector::zeros(ctx.grid.n),
            &(nu.phi2.clone() - nv.phi2.clone()),
        );
        let du = ctx.grid.pair_norm(&(&u.phi1 - &v.phi1), &(&u.phi2 - &v.phi2));
        let nu_norm = ctx.grid.pair_norm(&u.phi1, &u.phi2);
        let nv_norm = ctx.grid.pair_norm(&v.phi1, &v.phi2);
        k_fit = k_fit.max(dn / ((nu_norm + nv_norm) * du));
    }
    let passed = branch_gap < 1e-9 && m_gap < 1e-6 && k_fit < 100.0;
    Ok(CriterionResult::new(
        9,
        "nonlinearity",
        passed,
        format!(
            "branch gap {branch_gap:.2e}, dN/dzeta gap {m_gap:.2e}, Lipschitz K {k_fit:.3}"
        ),
    ))
}

/// 10. Appendix certificates: the integration-by-parts identity, the
/// supersymmetric residuals, the exact nonanalyticity coefficients (with
/// the d = 5 proportionality to F₅(1) = 1/8) and the d = 3 log term.
pub fn criterion_10() -> Result<CriterionResult> {
    let mut jm_worst: f64 = 0.0;
    let mut susy_worst: f64 = 0.0;
    let grid = build_grid(64, Dimension::new(5)?)?;
    for m in [2u32, 3, 4] {
        for i in 1..=20 {
            let rho = 0.045 * i as f64;
            jm_worst = jm_worst.max(appendix::j_m_identity_defect(rho, m)?);
        }
        let w = appendix::susy_residual(m, &grid)?;
        susy_worst = susy_worst.max(w.residual_sup);
    }
    let mut log_ok = true;
    let mut log_details = Vec::new();
    for dim in dims(&[5, 7, 9]) {
        let det = appendix::log_coefficient_id(dim)?;
        log_ok &= det.series_coefficient.abs() > 1e-12;
        log_details.push(format!("d={}: {}", dim.d(), det.series_exact));
    }
    // d = 5 coefficient is exactly F₅(1)·(−b₀) = (1/8)·4 = 1/2.
    let d5 = Dimension::new(5)?;
    let c = appendix::f_d_taylor_at_one(d5, 1);
    let b0 = appendix::u_hat2_leading_exact(d5);
    let expected = -c[0].clone() * &b0;
    let prop_ok = c[0] == exact::rat(1, 8)
        && appendix::log_coefficient_series(&c, &b0, d5) == expected
        && expected == exact::rat(1, 2);
    let d3_log = appendix::u_hat2_log_fit_d3()?;
    let d3_ok = d3_log.abs() > 0.1;
    let passed = jm_worst < 1e-10 && susy_worst < 1e-8 && log_ok && prop_ok && d3_ok;
    Ok(CriterionResult::new(
        10,
        "appendix identities",
        passed,
        format!(
            "J_m defect {jm_worst:.2e}, susy residual {susy_worst:.2e}, log coefficients [{}], d=3 log fit {d3_log:.3}",
            log_details.join(", ")
        ),
    ))
}

/// 11. Determinism: the seed-dependent data artifacts are byte-identical
/// across repeated runs with the same seed.
pub fn criterion_11(seed: u64) -> Result<CriterionResult> {
    let dir1 = std::env::temp_dir().join(format!("wmlab-det-a-{seed}"));
    let dir2 = std::env::temp_dir().join(format!("wmlab-det-b-{seed}"));
    for d in [&dir1, &dir2] {
        if d.exists() {
            std::fs::remove_dir_all(d)?;
        }
        std::fs::create_dir_all(d)?;
    }
    crate::cli::write_determinism_artifacts(&dir1, seed)?;
    crate::cli::write_determinism_artifacts(&dir2, seed)?;
    let mut passed = true;
    let mut checked = 0;
    for entry in std::fs::read_dir(&dir1)? {
        let name = entry?.file_name();
        let a = std::fs::read(dir1.join(&name))?;
        let b = std::fs::read(dir2.join(&name))?;
        checked += 1;
        if a != b {
            passed = false;
        }
    }
    std::fs::remove_dir_all(&dir1)?;
    std::fs::remove_dir_all(&dir2)?;
    Ok(CriterionResult::new(
        11,
        "determinism",
        passed && checked > 0,
        format!("{checked} artifacts byte-compared"),
    ))
}

/// Run every criterion in order.
pub fn run_all(seed: u64) -> Result<Vec<CriterionResult>> {
    Ok(vec![
        criterion_1(),
        criterion_2()?,
        criterion_3()?,
        criterion_4()?,
        criterion_5(seed)?,
        criterion_6(seed)?,
        criterion_7()?,
        criterion_8()?,
        criterion_9(seed)?,
        criterion_10()?,
        criterion_11(seed)?,
    ])
}
