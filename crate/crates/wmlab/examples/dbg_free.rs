use wmlab::evolution::*;
use wmlab::Dimension;
use rand::SeedableRng;

fn main() {
    let dim = Dimension::new(3).unwrap();
    let ctx = EvolutionContext::new(dim, 40).unwrap();
    let eigs = ctx.l_free.clone().complex_eigenvalues();
    let mut re: Vec<f64> = eigs.iter().map(|e| e.re).collect();
    re.sort_by(|a, b| b.partial_cmp(a).unwrap());
    println!("free operator: top Re eigenvalues: {:?}", &re[..6]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for run in 0..3 {
        let s = random_smooth_state(&ctx.grid, 1.0, &mut rng);
        let mut cfg = EvolutionConfig::new(dim, 40);
        cfg.include_potential = false;
        cfg.tau_max = 10.0;
        let rec = evolve(&s, &cfg, &ctx, None).unwrap();
        let w = |a: f64, b: f64| rec.fit_over((a, b)).unwrap().0;
        println!("run {run}: slope[2,4]={:.4} slope[3,8]={:.4} slope[6,10]={:.4} total(0)={:.2e} total(8)={:.2e}",
            w(2.0,4.0), w(3.0,8.0), w(6.0,10.0), rec.total[0], rec.total[rec.total.len()-1]);
    }
}
