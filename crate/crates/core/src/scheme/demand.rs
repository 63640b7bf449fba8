//! Demand matrices: random, padded, and block diagonal.

use rand::Rng;

use super::SchemeError;
use crate::gf::FieldMatrix;
use crate::params::ProblemParams;

/// A uniformly random `Kc x K` demand.
pub fn random_demand<R: Rng + ?Sized>(params: &ProblemParams, rng: &mut R) -> FieldMatrix {
    FieldMatrix::random(params.field(), params.demands(), params.datasets(), rng)
}

/// Appends `Kc' - Kc` uniformly random rows to `F`.
pub fn pad_demand<R: Rng + ?Sized>(
    demand: &FieldMatrix,
    params: &ProblemParams,
    rng: &mut R,
) -> Result<FieldMatrix, SchemeError> {
    let expected = (params.demands(), params.datasets());
    if demand.shape() != expected {
        return Err(SchemeError::DemandShape {
            expected,
            got: demand.shape(),
        });
    }
    let extra = params.padded_demands() - params.demands();
    if extra == 0 {
        return Ok(demand.clone());
    }
    let filler = FieldMatrix::random(params.field(), extra, params.datasets(), rng);
    Ok(FieldMatrix::vstack(&[demand, &filler])?)
}

/// A `(K/N)u x K` demand made of `K/N` uniformly random `u x N` diagonal
/// blocks, so the problem splits into `K/N` independent `K = N` problems.
/// Requires `Kc = (K/N)u`.
pub fn block_diagonal_demand<R: Rng + ?Sized>(
    params: &ProblemParams,
    rng: &mut R,
) -> Result<FieldMatrix, SchemeError> {
    let u = params.demand_multiplicity();
    let (rows, cols) = (params.padded_demands(), params.datasets());
    if params.demands() != rows {
        return Err(SchemeError::DemandShape {
            expected: (rows, cols),
            got: (params.demands(), cols),
        });
    }
    let f = params.field();
    let n = params.workers();
    let mut out = FieldMatrix::zeros(f, rows, cols);
    for b in 0..params.cycles() {
        out.set_block(b * u, b * n, &FieldMatrix::random(f, u, n, rng));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn padding_appends_rows_and_keeps_the_original() {
        let p = ProblemParams::new(20, 10, 7, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_demand(&p, &mut rng);
        let padded = pad_demand(&f, &p, &mut rng).unwrap();
        assert_eq!(padded.shape(), (4, 20));
        assert_eq!(padded.submatrix(0..3, 0..20), f);
        assert_eq!(padded.rank(), 4);
    }

    #[test]
    fn padding_is_a_no_op_at_full_multiplicity() {
        let p = ProblemParams::new(20, 10, 7, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_demand(&p, &mut rng);
        assert_eq!(pad_demand(&f, &p, &mut rng).unwrap(), f);
    }

    #[test]
    fn block_diagonal_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let single = ProblemParams::new(5, 5, 4, 2, 2).unwrap();
        let d = block_diagonal_demand(&single, &mut rng).unwrap();
        assert_eq!(d.shape(), (2, 5));

        let double = ProblemParams::new(10, 5, 4, 4, 2).unwrap();
        let d = block_diagonal_demand(&double, &mut rng).unwrap();
        assert_eq!(d.shape(), (4, 10));
        assert!(d.submatrix(0..2, 5..10).is_zero());
        assert!(d.submatrix(2..4, 0..5).is_zero());
        assert_eq!(d.rank(), 4);

        let uneven = ProblemParams::new(10, 5, 4, 3, 2).unwrap();
        assert!(block_diagonal_demand(&uneven, &mut rng).is_err());
    }
}
