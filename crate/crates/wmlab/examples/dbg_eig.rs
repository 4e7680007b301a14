use wmlab::evolution::*;
use wmlab::Dimension;

fn main() {
    for (d, n) in [(3u32, 24usize), (3, 40), (3, 48), (5, 48), (7, 48), (3, 64)] {
        let c = EvolutionContext::new(Dimension::new(d).unwrap(), n).unwrap();
        let eigs = c.l_full.clone().complex_eigenvalues();
        let rho_true = eigs.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
        let re_max_non1 = eigs.iter().filter(|e| (*e - num_complex::Complex64::new(1.0,0.0)).norm() > 1e-3).map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        println!("d={d} n={n}: rho_est={:9.2} rho_true={:9.2}  dtau_est={:.3e} h*rho_true={:.2}  max Re(sigma\\{{1}})={:.4}", c.spectral_radius, rho_true, c.stable_dtau(), c.stable_dtau()*rho_true, re_max_non1);
    }
}
