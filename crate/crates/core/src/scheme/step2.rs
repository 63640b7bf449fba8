//! Step 2: for each group `t` and transmitted index `j`, solve for the
//! block-`t` entries of every `s^{n,j}` together with the stripe-`j`
//! virtual entries of `F'_t`, so that no worker's vector touches a dataset
//! it does not hold.
//!
//! Per `(t, j)` there are `K(Nr-m+1)` unknowns: `K` are drawn at random
//! (the free variables) and the remaining `K(Nr-m)` solve a square system
//! of the same size.

use rand::Rng;

use super::SchemeError;
use crate::gf::{Fe, FieldMatrix};
use crate::params::ProblemParams;
use crate::util::mod1;

/// Inputs shared by every `(t, j)` system.
#[derive(Clone, Copy, Debug)]
pub struct BlockContext<'a> {
    pub params: &'a ProblemParams,
    /// Padded demand, `Kc' x K`.
    pub demand: &'a FieldMatrix,
    /// `holds[n-1][k-1]` iff worker `n` holds dataset `k`.
    pub holds: &'a [Vec<bool>],
    /// Last column block of `S`, `N Kc' x v`.
    pub last_block: &'a FieldMatrix,
}

/// The unknowns of one `(t, j)` system once determined.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSolution {
    pub t: usize,
    pub j: usize,
    /// Row `n-1`: entries of `s^{n,j}` in column block `t` (length `Kc'`).
    pub s: FieldMatrix,
    /// Row `i3-1`: virtual row `(j-1)w + i3` of `F'` over block `t` (length `K`).
    pub a: FieldMatrix,
}

/// Positions (0-based, within a block of width `Kc'`) of worker `n`'s
/// free variables: `(i-1)u + Mod(n, u)` for `i` in `[K/N]`.
pub fn free_positions(params: &ProblemParams, n: usize) -> Vec<usize> {
    let u = params.demand_multiplicity();
    (0..params.cycles())
        .map(|i| i * u + mod1(n as i64, u) - 1)
        .collect()
}

/// Number of free values one `(t, j)` system consumes (`K`).
pub fn free_count(params: &ProblemParams) -> usize {
    params.workers() * params.cycles()
}

/// Solves the `(t, j)` system with the given free values, ordered by
/// worker `n` and then by `i` in `[K/N]`.
pub fn solve_block(
    ctx: &BlockContext<'_>,
    t: usize,
    j: usize,
    free: &[Fe],
) -> Result<BlockSolution, SchemeError> {
    let p = ctx.params;
    let f = p.field();
    let (n_workers, k_sets, kcp) = (p.workers(), p.datasets(), p.padded_demands());
    let w = p.stripe_width().ok_or(SchemeError::InfeasibleRegime(*p))?;
    if !(1..=p.submessages()).contains(&t) || !(1..=kcp).contains(&j) {
        return Err(SchemeError::BlockIndex { t, j });
    }
    if free.len() != free_count(p) {
        return Err(SchemeError::FreeCount {
            expected: free_count(p),
            got: free.len(),
        });
    }

    // Variable numbering: s^{n,j} entry i1 -> (n-1) Kc' + i1; then
    // a_{stripe j, i3} at column k -> N Kc' + i3 K + k.
    let s_var = |n: usize, i1: usize| (n - 1) * kcp + i1;
    let a_var = |i3: usize, k: usize| n_workers * kcp + i3 * k_sets + k;
    let total = n_workers * kcp + w * k_sets;
    debug_assert_eq!(total, k_sets * (p.responders() - p.cost_factor() + 1));

    let mut value: Vec<Option<Fe>> = vec![None; total];
    let mut fi = free.iter();
    for n in 1..=n_workers {
        for i1 in free_positions(p, n) {
            value[s_var(n, i1)] = fi.next().copied();
        }
    }
    let unknowns: Vec<usize> = (0..total).filter(|&x| value[x].is_none()).collect();
    let mut column_of = vec![usize::MAX; total];
    for (c, &x) in unknowns.iter().enumerate() {
        column_of[x] = c;
    }

    // One equation per worker n and dataset k it does not hold:
    //   sum_i1 F[i1][k] s^{n,j}_{i1} + sum_i3 b^{n,j}_{i3} a_{i3,k} = 0.
    let mut equations: Vec<Vec<(usize, Fe)>> = Vec::new();
    for n in 1..=n_workers {
        let row = (n - 1) * kcp + (j - 1);
        for k in 0..k_sets {
            if ctx.holds[n - 1][k] {
                continue;
            }
            let mut terms: Vec<(usize, Fe)> = (0..kcp)
                .map(|i1| (s_var(n, i1), ctx.demand.get(i1, k)))
                .collect();
            terms
                .extend((0..w).map(|i3| (a_var(i3, k), ctx.last_block.get(row, (j - 1) * w + i3))));
            equations.push(terms);
        }
    }
    if equations.len() != unknowns.len() {
        return Err(SchemeError::SystemSize {
            equations: equations.len(),
            unknowns: unknowns.len(),
        });
    }

    let size = unknowns.len();
    let mut system = FieldMatrix::zeros(f, size, size);
    let mut rhs = vec![f.zero(); size];
    for (e, terms) in equations.iter().enumerate() {
        for &(x, coeff) in terms {
            match value[x] {
                Some(known) => rhs[e] = f.sub(rhs[e], f.mul(coeff, known)),
                None => system.set(e, column_of[x], f.add(system.get(e, column_of[x]), coeff)),
            }
        }
    }
    let solved = system
        .solve(&rhs)
        .map_err(|_| SchemeError::SingularBlock { t, j })?;
    for (&x, v) in unknowns.iter().zip(solved) {
        value[x] = Some(v);
    }
    let value: Vec<Fe> = value
        .into_iter()
        .map(|v| v.expect("all variables set"))
        .collect();

    for terms in &equations {
        let lhs = terms
            .iter()
            .fold(f.zero(), |acc, &(x, coeff)| f.mul_add(acc, coeff, value[x]));
        if !lhs.is_zero() {
            return Err(SchemeError::ConstraintResidual { t, j });
        }
    }

    Ok(BlockSolution {
        t,
        j,
        s: FieldMatrix::from_fn(f, n_workers, kcp, |r, c| value[s_var(r + 1, c)]),
        a: FieldMatrix::from_fn(f, w, k_sets, |r, c| value[a_var(r, c)]),
    })
}

/// [`solve_block`] with free values drawn uniformly from `rng`.
pub fn solve_block_random<R: Rng + ?Sized>(
    ctx: &BlockContext<'_>,
    t: usize,
    j: usize,
    rng: &mut R,
) -> Result<BlockSolution, SchemeError> {
    let f = ctx.params.field();
    let free: Vec<Fe> = (0..free_count(ctx.params)).map(|_| f.random(rng)).collect();
    solve_block(ctx, t, j, &free)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_positions_follow_the_cyclic_pattern() {
        let p = ProblemParams::new(6, 6, 5, 2, 2).unwrap();
        assert_eq!(free_positions(&p, 1), vec![0]);
        assert_eq!(free_positions(&p, 2), vec![1]);
        assert_eq!(free_positions(&p, 6), vec![1]);
        let q = ProblemParams::new(20, 10, 7, 4, 2).unwrap();
        assert_eq!(q.demand_multiplicity(), 2);
        assert_eq!(free_positions(&q, 3), vec![0, 2]);
        assert_eq!(free_positions(&q, 4), vec![1, 3]);
        assert_eq!(free_count(&q), 20);
    }
}
