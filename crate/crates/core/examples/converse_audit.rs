//! Walk through the counting argument behind the cyclic converse bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lsc::bounds::converse_audit;
use lsc::params::ProblemParams;

fn main() {
    let p = ProblemParams::new(5, 5, 4, 2, 2).unwrap();
    let rec = converse_audit(&p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for (e, ineq) in rec.entries.iter().zip(&rec.inequalities) {
        println!(
            "stragglers {:?}, groups {:?}: {ineq}",
            e.stragglers, e.groups
        );
    }
    println!("each worker appears {:?} times", rec.multiplicity);
    println!(
        "sum of T_n >= {} L, so R >= {}",
        rec.total_bound, rec.rate_bound
    );
}
