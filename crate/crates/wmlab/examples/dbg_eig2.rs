use wmlab::evolution::*;
use wmlab::Dimension;

fn main() {
    for d in [7u32, 9] {
        for n in [56usize, 64, 72, 80, 96] {
            let ctx = EvolutionContext::new(Dimension::new(d).unwrap(), n).unwrap();
            let mut best = (f64::INFINITY, 0.0);
            for e in &ctx.eigenvalues {
                let dist = (e - num_complex::Complex64::new(1.0, 0.0)).norm();
                if dist < best.0 { best = (dist, e.re); }
            }
            println!("d={d} n={n}: closest-to-1 dist {:.3e} (value {:.9}), rho(L)={:.1}", best.0, best.1, ctx.spectral_radius);
        }
    }
}
