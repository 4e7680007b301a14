use num_complex::Complex64;
use wmlab::spectrum::frobenius::{debug_local_ode, ExpansionPoint};
use wmlab::Dimension;

fn main() {
    let dm = Dimension::new(7).unwrap();
    let lambda = Complex64::new(1.0, 0.0);
    let (a, b, c) = debug_local_ode(ExpansionPoint::One, lambda, dm);
    println!("A~ = {:?}", a.iter().map(|z| z.re).collect::<Vec<_>>());
    println!("B^ = {:?}", b.iter().map(|z| z.re).collect::<Vec<_>>());
    println!("C~ = {:?}", c.iter().map(|z| z.re).collect::<Vec<_>>());
}
