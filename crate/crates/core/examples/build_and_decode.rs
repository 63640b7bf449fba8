//! Build a scheme, encode random messages at every worker, and decode from
//! every set of responders.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lsc::params::ProblemParams;
use lsc::scheme::{build_for_regime, random_demand, BuildOptions, SubsetPlan};
use lsc::sim::{generate_messages, master_decode, Encoder};

fn main() {
    let p = ProblemParams::new(8, 8, 6, 3, 2)
        .unwrap()
        .with_message_len(40);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let demand = random_demand(&p, &mut rng);
    let scheme = build_for_regime(&demand, &p, &mut rng, &BuildOptions::default()).unwrap();
    let messages = generate_messages(&p, &mut rng).unwrap();

    let answers = Encoder::new(&scheme, &messages)
        .unwrap()
        .encode_all()
        .unwrap();
    let want = demand.mul(messages.matrix()).unwrap();
    let sets = SubsetPlan::Exhaustive.responder_sets(p.workers(), p.responders());
    let ok = sets
        .iter()
        .filter(|a| master_decode(a, &answers, &scheme).is_ok_and(|got| got == want))
        .count();
    println!("{p}: {ok}/{} responder sets decode F W", sets.len());
    println!(
        "symbols per worker: {}, cost {}",
        answers[0].symbols,
        scheme.cost()
    );
}
