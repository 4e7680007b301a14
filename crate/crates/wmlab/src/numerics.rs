//! Shared numerical building blocks: Gauss quadrature, adaptive integration,
//! an embedded Runge-Kutta integrator over complex 2-vectors, Chebyshev
//! collocation in the squared radial variable, and small fitting helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on (-1, 1).
///
/// Newton iteration on the Legendre recurrence; machine-precision for n ≤ a few hundred.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi-type initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P_n'(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|&t| mid + half * t).collect(),
        w.iter().map(|&wi| wi * half).collect(),
    )
}

// Gauss-Kronrod 7-15 pair (nodes symmetric about 0).
const KRONROD_X: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const KRONROD_W: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const GAUSS_W: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &w)) in KRONROD_X.iter().zip(KRONROD_W.iter()).enumerate() {
        let (fl, fr) = (f(mid - half * x), f(mid + half * x));
        let s = if i == 7 { fl } else { fl + fr };
        kron += w * s;
        if i % 2 == 1 {
            gauss += GAUSS_W[i / 2] * s;
        }
    }
    kron *= half;
    gauss *= half;
    (kron, (kron - gauss).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over [a, b].
///
/// Returns the value and an error estimate; fails if the interval stack
/// cannot reach the requested tolerance.
pub fn adaptive_quad<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    struct Seg {
        a: f64,
        b: f64,
        val: f64,
        err: f64,
    }
    let (val, err) = gk15(f, a, b);
    let mut segs = vec![Seg { a, b, val, err }];
    for _ in 0..2000 {
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        let total_val: f64 = segs.iter().map(|s| s.val).sum();
        if total_err <= tol * total_val.abs().max(1.0) {
            return Ok((total_val, total_err));
        }
        // Split the worst segment.
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.partial_cmp(&y.1.err).unwrap())
            .unwrap();
        let s = segs.swap_remove(idx);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            return Err(Error::QuadratureNoConvergence {
                a: s.a,
                b: s.b,
                err: s.err,
            });
        }
        let (v1, e1) = gk15(f, s.a, mid);
        let (v2, e2) = gk15(f, mid, s.b);
        segs.push(Seg {
            a: s.a,
            b: mid,
            val: v1,
            err: e1,
        });
        segs.push(Seg {
            a: mid,
            b: s.b,
            val: v2,
            err: e2,
        });
    }
    let err: f64 = segs.iter().map(|s| s.err).sum();
    Err(Error::QuadratureNoConvergence { a, b, err })
}

/// State type for the complex second-order ODE integrations: (v, v').
pub type C2 = [Complex64; 2];

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) integration of a complex 2-vector ODE from
/// `x0` to `x1` (either direction). `label` only decorates error reports.
pub fn integrate_c2<F>(rhs: &F, x0: f64, y0: C2, x1: f64, rtol: f64, label: &str) -> Result<C2>
where
    F: Fn(f64, &C2) -> C2,
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut h = dir * (x1 - x0).abs().min(1e-2).max(1e-10);
    let atol = rtol;
    let mut steps = 0usize;
    while (x1 - x) * dir > 0.0 {
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
        for s in 0..7 {
            let mut ys = y;
            for j in 0..s {
                let a = DP_A[s][j];
                if a != 0.0 {
                    ys[0] += h * a * k[j][0];
                    ys[1] += h * a * k[j][1];
                }
            }
            k[s] = rhs(x + DP_C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut y4 = y;
        for s in 0..7 {
            y5[0] += h * DP_B5[s] * k[s][0];
            y5[1] += h * DP_B5[s] * k[s][1];
            y4[0] += h * DP_B4[s] * k[s][0];
            y4[1] += h * DP_B4[s] * k[s][1];
        }
        let scale0 = atol + rtol * y5[0].norm().max(y[0].norm());
        let scale1 = atol + rtol * y5[1].norm().max(y[1].norm());
        let err = (((y5[0] - y4[0]).norm() / scale0).powi(2)
            + ((y5[1] - y4[1]).norm() / scale1).powi(2))
        .sqrt()
            / std::f64::consts::SQRT_2;
        if err <= 1.0 {
            x += h;
            y = y5;
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
        if h.abs() < 1e-14 {
            return Err(Error::StepSizeUnderflow {
                x,
                lambda: label.to_string(),
            });
        }
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::StepSizeUnderflow {
                x,
                lambda: format!("{label} (step budget exhausted)"),
            });
        }
    }
    Ok(y)
}

/// Parlett-Reinsch balancing: diagonal similarity D⁻¹MD with power-of-two
/// scales equalizing row and column 1-norms. Returns (balanced, scales).
/// Eigenvalues are unchanged; eigenvectors transform as v = D·ṽ (right)
/// and w = D⁻¹·w̃ (left).
pub fn balance_matrix(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut d = vec![1.0f64; n];
    for _ in 0..50 {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = 0.0;
            let mut r: f64 = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0f64;
            let s = c + r;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
    (a, d)
}

/// Least-squares solve of A c = y via SVD. Returns (coefficients, condition number).
pub fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let sol = svd.solve(y, smax * 1e-14).expect("svd solve");
    (sol, cond)
}

/// Ordinary linear regression y ≈ slope·x + intercept.
/// Returns (slope, intercept, rms residual).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Chebyshev-Gauss-Lobatto collocation data in the variable x ∈ [0, 1].
///
/// Nodes are x_j = sin²(jπ/(2(n−1))), ascending, with x_0 = 0 and x_{n−1} = 1.
/// `diff` is the order-(n−1) polynomial differentiation matrix on these nodes.
pub struct CglX {
    pub nodes: Vec<f64>,
    pub diff: DMatrix<f64>,
}

pub fn cgl_x(n: usize) -> CglX {
    assert!(n >= 2);
    let nm1 = (n - 1) as f64;
    let nodes: Vec<f64> = (0..n)
        .map(|j| {
            let s = (std::f64::consts::PI * j as f64 / (2.0 * nm1)).sin();
            s * s
        })
        .collect();
    // Barycentric weights of the affine-mapped CGL family.
    let w: Vec<f64> = (0..n)
        .map(|j| {
            let base = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            if j % 2 == 0 {
                base
            } else {
                -base
            }
        })
        .collect();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    CglX { nodes, diff: d }
}

/// 9-point central finite-difference first derivative (8th order).
pub fn fd_deriv1<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    let c = [
        1.0 / 280.0,
        -4.0 / 105.0,
        1.0 / 5.0,
        -4.0 / 5.0,
        0.0,
        4.0 / 5.0,
        -1.0 / 5.0,
        4.0 / 105.0,
        -1.0 / 280.0,
    ];
    let mut s = 0.0;
    for (k, ck) in c.iter().enumerate() {
        if *ck != 0.0 {
            s += ck * f(x + (k as f64 - 4.0) * h);
        }
    }
    s / h
}

/// 9-point central finite-difference second derivative (8th order).
pub fn fd_deriv2<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    let c = [
        -1.0 / 560.0,
        8.0 / 315.0,
        -1.0 / 5.0,
        8.0 / 5.0,
        -205.0 / 72.0,
        8.0 / 5.0,
        -1.0 / 5.0,
        8.0 / 315.0,
        -1.0 / 560.0,
    ];
    let mut s = 0.0;
    for (k, ck) in c.iter().enumerate() {
        s += ck * f(x + (k as f64 - 4.0) * h);
    }
    s / (h * h)
}
