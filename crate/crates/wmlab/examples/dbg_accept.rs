use wmlab::acceptance::*;

fn main() {
    let which: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().unwrap()).collect();
    let seed = 7u64;
    for id in which {
        let t0 = std::time::Instant::now();
        let r = match id {
            1 => criterion_1(),
            2 => criterion_2().unwrap(),
            3 => criterion_3().unwrap(),
            4 => criterion_4().unwrap(),
            5 => criterion_5(seed).unwrap(),
            6 => criterion_6(seed).unwrap(),
            7 => criterion_7().unwrap(),
            8 => criterion_8().unwrap(),
            9 => criterion_9(seed).unwrap(),
            10 => criterion_10().unwrap(),
            11 => criterion_11(seed).unwrap(),
            _ => panic!(),
        };
        r.print_line();
        println!("   elapsed: {:.2?}", t0.elapsed());
    }
}
