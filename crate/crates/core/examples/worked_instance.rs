//! The fixed-randomness instance at (6, 6, 5, 2, 2), solved block by block.

use lsc::reference;
use lsc::scheme::{construct_with_randomness, Scheme};

fn main() {
    let p = reference::params();
    let f = p.field();
    let c = construct_with_randomness(
        &reference::demand(f),
        &p,
        &reference::last_block(f),
        |t, j| reference::free_values(f, t, j),
    )
    .expect("the reference randomness is valid");

    println!("S =\n{:?}", c.transmission().matrix());
    let eff = c.effective();
    for i in 1..=eff.virtual_rows() {
        let row: Vec<String> = eff
            .matrix()
            .row(eff.virtual_row_index(i))
            .iter()
            .map(|x| f.display(*x))
            .collect();
        println!("virtual row {i}: {}", row.join(" "));
    }
    println!("transmit violations: {}", c.transmit_violations().len());
    let scheme = Scheme::from_construction(c, 0);
    println!("cost = {}", scheme.cost());
}
