//! The cyclic dataset assignment, and padding when N does not divide K.

use lsc::assignment::{cyclic_assignment, pad_virtual_datasets};
use lsc::params::ProblemParams;

fn main() {
    let p = ProblemParams::new(6, 6, 5, 2, 2).unwrap();
    let a = cyclic_assignment(&p);
    for n in 1..=p.workers() {
        println!("worker {n} holds {:?}", a.datasets_of(n));
    }
    for k in 1..=p.datasets() {
        println!("dataset {k} is held by {:?}", a.workers_of(k));
    }

    let padded = pad_virtual_datasets(7, 3);
    println!(
        "K = 7, N = 3: pad to {} datasets, virtual {:?}",
        padded.padded, padded.virtual_ids
    );
    let p = ProblemParams::padded(7, 3, 2, 1, 1).unwrap();
    println!("padded params {p}, real datasets {}", p.real_datasets());
}
