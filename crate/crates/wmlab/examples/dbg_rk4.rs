use wmlab::evolution::*;
use wmlab::Dimension;
use nalgebra::DVector;

fn main() {
    let c = EvolutionContext::new(Dimension::new(3).unwrap(), 24).unwrap();
    let p = build_gauge_projection(&c).unwrap();
    println!("mu = {:.16}", p.eigenvalue);
    // eigen-residual of right vector
    let res = (&c.l_full * &p.right - p.eigenvalue * &p.right).amax();
    println!("eigen residual = {:.3e}, |right| = {:.3e}", res, p.right.amax());
    let g = StateProbe::from_vec_pub(&p.right);
    let norm0 = c.grid.pair_norm(&g.0, &g.1);
    println!("norm0 = {:.6e}, stable dtau = {:.4e}", norm0, c.stable_dtau());
    for dtau in [c.stable_dtau()/2.0, c.stable_dtau()/4.0, c.stable_dtau()/8.0, c.stable_dtau()/16.0] {
        let mut cfg = EvolutionConfig::new(c.dim, 24);
        cfg.dtau = Some(dtau);
        cfg.tau_max = 1.0;
        cfg.record_every = usize::MAX;
        let s = State { phi1: g.0.clone(), phi2: g.1.clone(), tau: 0.0 };
        let rec = evolve(&s, &cfg, &c, None).unwrap();
        let err = (rec.total.last().unwrap() - p.eigenvalue.exp() * norm0).abs();
        println!("dtau={:.4e} realized={:.4e} err={:.6e}", dtau, rec.dtau, err);
    }
}

struct StateProbe;
impl StateProbe {
    fn from_vec_pub(y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = y.len() / 2;
        (y.rows(0, n).into_owned(), y.rows(n, n).into_owned())
    }
}
