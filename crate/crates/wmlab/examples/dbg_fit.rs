use wmlab::appendix::*;
use wmlab::Dimension;
use nalgebra::{DMatrix, DVector};

fn fit(dim: Dimension, lo: f64, hi: f64, n_pow: usize, n_log: usize) {
    let q = ((dim.d() - 3) / 2) as usize;
    let n_samples = 48;
    let mut a = DMatrix::<f64>::zeros(n_samples, n_pow + n_log);
    let mut rhs = DVector::<f64>::zeros(n_samples);
    for i in 0..n_samples {
        let eps = lo * (hi / lo).powf(i as f64 / (n_samples - 1) as f64);
        let rho = 1.0 - eps;
        let val = i_d(rho, dim).unwrap();
        let w = 1.0 / val.abs().max(1e-300);
        for j in 0..n_pow {
            a[(i, j)] = w * eps.powi(j as i32 + 1);
        }
        for j in 0..n_log {
            a[(i, n_pow + j)] = w * eps.powi((q + j) as i32) * eps.ln();
        }
        rhs[i] = w * val;
    }
    let ncols = n_pow + n_log;
    let mut scales = vec![0.0f64; ncols];
    for j in 0..ncols {
        scales[j] = a.column(j).amax().max(1e-300);
        for i in 0..n_samples { a[(i,j)] /= scales[j]; }
    }
    let (sol, cond) = wmlab::numerics::least_squares(&a, &rhs);
    let fitv = sol[n_pow] / scales[n_pow];
    let det = f_d_taylor_at_one(dim, q.max(1));
    let b0 = u_hat2_leading_exact(dim);
    let exact_str = format!("{}", log_coefficient_series(&det, &b0, dim));
    let parts: Vec<f64> = exact_str.split('/').map(|s| s.parse().unwrap()).collect();
    let exact = if parts.len() == 2 { parts[0]/parts[1] } else { parts[0] };
    println!("d={} cond={cond:.2e} fit={fitv:.10} exact={exact:.10} rel={:.2e}", dim.d(), (fitv-exact).abs()/exact.abs());
}

fn main() {
    for d in [5u32, 7, 9] {
        fit(Dimension::new(d).unwrap(), 1e-4, 1e-1, 9, 5);
    }
}
