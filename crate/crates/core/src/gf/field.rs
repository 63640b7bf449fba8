use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LinalgError;

/// Default modulus: the Mersenne prime 2^31 - 1.
pub const DEFAULT_MODULUS: u64 = 2_147_483_647;

/// Largest modulus accepted. Keeping q below 2^63 lets sums of two reduced
/// values fit in a `u64` without overflow.
pub const MAX_MODULUS: u64 = 1 << 63;

/// An element of a prime field, always reduced into `[0, q)`.
///
/// The modulus lives in the owning [`PrimeField`] (and in every
/// [`FieldMatrix`](super::FieldMatrix)), not in the element, so dense
/// matrices stay a flat `Vec<u64>`. Elements can only be produced through a
/// field, which keeps the reduction invariant intact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Serialized as a decimal string, matching matrix entries.
impl Serialize for Fe {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arithmetic context for `F_q` with `q` prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeField {
    q: u64,
}

impl TryFrom<u64> for PrimeField {
    type Error = LinalgError;

    fn try_from(q: u64) -> Result<Self, Self::Error> {
        PrimeField::new(q)
    }
}

impl From<PrimeField> for u64 {
    fn from(f: PrimeField) -> u64 {
        f.q
    }
}

impl Default for PrimeField {
    fn default() -> Self {
        PrimeField { q: DEFAULT_MODULUS }
    }
}

impl PrimeField {
    /// Validates that `q` is a prime below [`MAX_MODULUS`].
    pub fn new(q: u64) -> Result<Self, LinalgError> {
        if q >= MAX_MODULUS {
            return Err(LinalgError::ModulusTooLarge(q));
        }
        if !is_prime(q) {
            return Err(LinalgError::NotPrime(q));
        }
        Ok(PrimeField { q })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn zero(&self) -> Fe {
        Fe(0)
    }

    pub fn one(&self) -> Fe {
        Fe(1 % self.q)
    }

    pub fn elem(&self, v: u64) -> Fe {
        Fe(v % self.q)
    }

    pub fn from_i64(&self, v: i64) -> Fe {
        let r = v.rem_euclid(self.q as i64);
        Fe(r as u64)
    }

    /// The field image of the rational `num / den`.
    pub fn ratio(&self, num: i64, den: i64) -> Result<Fe, LinalgError> {
        let d = self.from_i64(den);
        self.div(self.from_i64(num), d)
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let s = a.0 + b.0;
        Fe(if s >= self.q { s - self.q } else { s })
    }

    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        Fe(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.q - b.0
        })
    }

    pub fn neg(&self, a: Fe) -> Fe {
        Fe(if a.0 == 0 { 0 } else { self.q - a.0 })
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe(((a.0 as u128 * b.0 as u128) % self.q as u128) as u64)
    }

    /// `acc + a*b`, the inner-loop step of every product.
    pub fn mul_add(&self, acc: Fe, a: Fe, b: Fe) -> Fe {
        Fe(((acc.0 as u128 + a.0 as u128 * b.0 as u128) % self.q as u128) as u64)
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self, a: Fe) -> Result<Fe, LinalgError> {
        if a.0 == 0 {
            return Err(LinalgError::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.q as i128, a.0 as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(Fe(t0.rem_euclid(self.q as i128) as u64))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, LinalgError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// A uniformly random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(0..self.q))
    }

    /// A uniformly random nonzero element.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(1..self.q))
    }

    /// Finds a small fraction `num/den` whose field image is `a`, with
    /// `|num|, den <= sqrt(q/2)`. Used only for display; `None` if no such
    /// fraction exists.
    pub fn to_fraction(&self, a: Fe) -> Option<(i64, i64)> {
        let bound = ((self.q / 2) as f64).sqrt() as i128;
        let (mut r0, mut r1) = (self.q as i128, a.0 as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 > bound {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        if t1 == 0 || t1.abs() > bound {
            return None;
        }
        let (num, den) = if t1 < 0 { (-r1, -t1) } else { (r1, t1) };
        Some((num as i64, den as i64))
    }

    /// `a` rendered as a short fraction when one exists, else its residue.
    pub fn display(&self, a: Fe) -> String {
        match self.to_fraction(a) {
            Some((n, 1)) => n.to_string(),
            Some((n, d)) => format!("{n}/{d}"),
            None => a.0.to_string(),
        }
    }
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
