//! The three demand regimes side by side.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lsc::params::ProblemParams;
use lsc::scheme::{build_for_regime, random_demand, BuildOptions, SchemeBody};

fn main() {
    let points = [(10, 5, 4, 1, 2), (10, 5, 4, 3, 2), (10, 5, 4, 7, 2)];
    for (k, n, nr, kc, m) in points {
        let p = ProblemParams::new(k, n, nr, kc, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let demand = random_demand(&p, &mut rng);
        let s = build_for_regime(&demand, &p, &mut rng, &BuildOptions::default()).unwrap();
        let shape = match s.body() {
            SchemeBody::Main(_) => "one general construction".to_string(),
            SchemeBody::PerDemand { parts } => {
                format!("{} merged single-demand parts", parts.len())
            }
            SchemeBody::Subsets { pieces, parts, .. } => {
                format!("{} row subsets over {pieces} message pieces", parts.len())
            }
        };
        println!(
            "{p}: {} regime, {shape}, cost {}, locality violations {}",
            s.regime(),
            s.cost(),
            s.locality_violations().len()
        );
    }
}
