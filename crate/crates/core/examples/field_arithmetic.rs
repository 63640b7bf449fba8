//! Arithmetic and elimination over a prime field.

use lsc::gf::{FieldMatrix, PrimeField};

fn main() {
    let f = PrimeField::new(13).unwrap();
    let x = f.ratio(3, 4).unwrap();
    println!("3/4 in GF(13) = {x}; back as a fraction: {}", f.display(x));

    let a = FieldMatrix::from_i64_rows(f, &[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]).unwrap();
    println!("rank = {}", a.rank());
    let b = [f.elem(1), f.elem(2), f.elem(3)];
    let sol = a.solve(&b).unwrap();
    let shown: Vec<String> = sol.iter().map(|v| f.display(*v)).collect();
    println!("A x = b has x = [{}]", shown.join(", "));
    let inv = a.inverse().unwrap();
    assert_eq!(a.mul(&inv).unwrap(), FieldMatrix::identity(f, 3));
    println!("A^-1 = {inv:?}");

    let singular = FieldMatrix::from_i64_rows(f, &[&[1, 2], &[2, 4]]).unwrap();
    println!("singular inverse: {:?}", singular.inverse().unwrap_err());
}
