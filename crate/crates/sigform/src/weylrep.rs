//! Integral realizations of irreducible polynomial highest-weight
//! representations of GL(n).  The basis consists of bideterminants indexed by
//! semistandard Young tableaux; coordinates of any polynomial in the span are
//! recovered from its values at a fixed set of generic integer matrices, so
//! repMatrix never expands a polynomial symbolically.

use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::linalg::{self, IMat};
use crate::rng::SplitMix64;
use crate::symmat::Unimod;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HighestWeight {
    pub lambda: Vec<u32>,
}

impl HighestWeight {
    pub fn new(lambda: Vec<u32>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidWeight("empty weight".into()));
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidWeight(format!("not non-increasing: {:?}", lambda)));
        }
        Ok(HighestWeight { lambda })
    }

    /// Parse "4,2,0".
    pub fn parse(s: &str) -> Result<Self> {
        let lambda: std::result::Result<Vec<u32>, _> =
            s.split(',').map(|t| t.trim().parse::<u32>()).collect();
        match lambda {
            Ok(v) => HighestWeight::new(v),
            Err(e) => Err(Error::InvalidWeight(format!("{}: {}", s, e))),
        }
    }

    pub fn size(&self) -> u32 {
        self.lambda.iter().sum()
    }

    /// The scalar weight k = lambda_n.
    pub fn scalar_part(&self) -> u32 {
        *self.lambda.last().unwrap()
    }

    /// lambda = lambda0 + (k,...,k) with lambda0 ending in 0.
    pub fn split_det_power(&self) -> (HighestWeight, u32) {
        let k = self.scalar_part();
        let lambda0: Vec<u32> = self.lambda.iter().map(|&x| x - k).collect();
        (HighestWeight { lambda: lambda0 }, k)
    }

    /// Weyl dimension formula for GL(n), n = lambda.len().
    pub fn weyl_dimension(&self) -> u64 {
        let n = self.lambda.len();
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for i in 0..n {
            for j in i + 1..n {
                num *= BigInt::from(self.lambda[i] as i64 - self.lambda[j] as i64 + j as i64 - i as i64);
                den *= BigInt::from(j as i64 - i as i64);
            }
        }
        let q = num / den;
        u64::try_from(q).expect("dimension fits u64")
    }
}

/// A semistandard tableau stored by rows (weakly increasing along rows,
/// strictly increasing down columns, entries in 1..=n).
pub type Tableau = Vec<Vec<u8>>;

/// All semistandard tableaux of shape lambda with entries <= n, in a fixed
/// deterministic order.
pub fn semistandard_tableaux(n: usize, lambda: &HighestWeight) -> Vec<Tableau> {
    let shape: Vec<usize> = lambda
        .lambda
        .iter()
        .take_while(|&&x| x > 0)
        .map(|&x| x as usize)
        .collect();
    let mut out = Vec::new();
    let mut t: Tableau = shape.iter().map(|&len| vec![0u8; len]).collect();
    fn rec(n: usize, shape: &[usize], t: &mut Tableau, r: usize, c: usize, out: &mut Vec<Tableau>) {
        if r == shape.len() {
            out.push(t.clone());
            return;
        }
        let (nr, nc) = if c + 1 < shape[r] { (r, c + 1) } else { (r + 1, 0) };
        let lo = {
            let mut lo = 1u8;
            if c > 0 {
                lo = lo.max(t[r][c - 1]);
            }
            if r > 0 {
                lo = lo.max(t[r - 1][c] + 1);
            }
            lo
        };
        for v in lo..=(n as u8) {
            t[r][c] = v;
            rec(n, shape, t, nr, nc, out);
        }
        t[r][c] = 0;
    }
    if shape.is_empty() {
        out.push(vec![]);
        return out;
    }
    rec(n, &shape, &mut t, 0, 0, &mut out);
    out
}

/// Number of 1-entries: the GL(1)-weight of the tableau basis vector under
/// diag(x, 1, ..., 1).
pub fn tableau_weight(t: &Tableau) -> u32 {
    t.iter().flatten().filter(|&&v| v == 1).count() as u32
}

/// Evaluate the bideterminant p_t at an integer matrix X: the product over
/// tableau columns of det X[rows = column entries, cols = 1..height].
fn bideterminant_at(t: &Tableau, x: &IMat) -> BigInt {
    if t.is_empty() {
        return BigInt::one();
    }
    let width = t[0].len();
    let mut prod = BigInt::one();
    for c in 0..width {
        let col: Vec<usize> = t
            .iter()
            .filter(|row| row.len() > c)
            .map(|row| (row[c] - 1) as usize)
            .collect();
        let h = col.len();
        let sub = IMat::from_fn(h, h, |a, b| x.at(col[a], b).clone());
        prod *= sub.det();
    }
    prod
}

pub struct IntegralRep {
    pub n: usize,
    pub lambda: HighestWeight,
    pub ell: usize,
    pub tableaux: Vec<Tableau>,
    eval_points: Vec<IMat>,
    e_inv: Vec<Vec<BigRational>>,
    cache: Mutex<HashMap<Vec<Vec<i64>>, IMat>>,
}

impl std::fmt::Debug for IntegralRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IntegralRep(n={}, lambda={:?}, ell={})", self.n, self.lambda.lambda, self.ell)
    }
}

pub fn build_rep(n: usize, lambda: &HighestWeight) -> Result<IntegralRep> {
    if lambda.lambda.len() != n {
        return Err(Error::InvalidWeight(format!(
            "weight has {} parts for GL({})",
            lambda.lambda.len(),
            n
        )));
    }
    let tableaux = semistandard_tableaux(n, lambda);
    let ell = tableaux.len();
    assert_eq!(
        ell as u64,
        lambda.weyl_dimension(),
        "tableau count disagrees with the Weyl dimension formula"
    );
    let mut seed = 0x5173_0001u64;
    for &x in &lambda.lambda {
        seed = seed.wrapping_mul(31).wrapping_add(x as u64);
    }
    seed = seed.wrapping_mul(31).wrapping_add(n as u64);
    let mut rng = SplitMix64::new(seed);
    for _attempt in 0..100 {
        let eval_points: Vec<IMat> = (0..ell)
            .map(|_| IMat::from_fn(n, n, |_, _| BigInt::from(rng.range_i64(-5, 5))))
            .collect();
        let e = IMat::from_fn(ell, ell, |a, s| bideterminant_at(&tableaux[s], &eval_points[a]));
        if let Some(e_inv) = e.inverse_rational() {
            return Ok(IntegralRep {
                n,
                lambda: lambda.clone(),
                ell,
                tableaux,
                eval_points,
                e_inv,
                cache: Mutex::new(HashMap::new()),
            });
        }
    }
    panic!("could not find generic evaluation points (bideterminant basis dependent?)");
}

impl IntegralRep {
    /// Coordinates in the tableau basis of a polynomial in the span, given its
    /// values at the fixed evaluation points.  Asserts integrality.
    pub fn coords_from_values(&self, vals: &[BigInt]) -> Result<Vec<BigInt>> {
        assert_eq!(vals.len(), self.ell);
        let mut out = Vec::with_capacity(self.ell);
        for row in &self.e_inv {
            let mut acc = BigRational::zero();
            for (c, v) in row.iter().zip(vals) {
                acc += c * BigRational::from(v.clone());
            }
            if !acc.is_integer() {
                return Err(Error::NonIntegralCoordinate);
            }
            out.push(acc.to_integer());
        }
        Ok(out)
    }

    /// Values of all basis bideterminants at each evaluation point after the
    /// substitution X -> U^t X, column tau giving rho(U) applied to p_tau.
    pub fn rep_matrix(&self, u: &Unimod) -> Result<IMat> {
        assert_eq!(u.len(), self.n);
        {
            let guard = self.cache.lock().unwrap();
            if let Some(hit) = guard.get(u) {
                return Ok(hit.clone());
            }
        }
        let ut = IMat::from_i64_rows(&crate::symmat::mat_transpose(u));
        let moved: Vec<IMat> = self.eval_points.iter().map(|x| ut.mul(x)).collect();
        let mut m = IMat::zeros(self.ell, self.ell);
        for (tau, t) in self.tableaux.iter().enumerate() {
            let vals: Vec<BigInt> = moved.iter().map(|x| bideterminant_at(t, x)).collect();
            let col = self.coords_from_values(&vals)?;
            for (sigma, v) in col.into_iter().enumerate() {
                m.set(sigma, tau, v);
            }
        }
        self.cache.lock().unwrap().insert(u.clone(), m.clone());
        Ok(m)
    }

    /// The scalar weight k = lambda_n.
    pub fn scalar_weight(&self) -> u32 {
        self.lambda.scalar_part()
    }

    /// GL(1)-weight of each tableau basis vector (eigenvalue exponent under
    /// diag(x,1,...,1)).
    pub fn basis_weights(&self) -> Vec<u32> {
        self.tableaux.iter().map(tableau_weight).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GradedPiece {
    pub weight: u32,
    /// ell x d, columns a primitive basis of the saturated eigenlattice.
    pub basis: IMat,
}

/// GL(1)-weight grading with respect to diag(x,1,...,1): for each i in
/// [lambda_n, lambda_1] the saturated kernel of repMatrix(diag(2,1,...,1)) -
/// 2^i I.  Empty pieces omitted.
pub fn weight_grading(rep: &IntegralRep) -> Result<Vec<GradedPiece>> {
    let n = rep.n;
    let mut d = crate::symmat::mat_identity(n);
    d[0][0] = 2;
    let m = rep.rep_matrix(&d)?;
    let mut out = Vec::new();
    let lo = rep.lambda.scalar_part();
    let hi = rep.lambda.lambda[0];
    for i in lo..=hi {
        let shifted = IMat::from_fn(rep.ell, rep.ell, |a, b| {
            let mut v = m.at(a, b).clone();
            if a == b {
                v -= BigInt::from(2u64).pow(i);
            }
            v
        });
        let k = linalg::rational_kernel(&shifted)?;
        if k.cols > 0 {
            out.push(GradedPiece { weight: i, basis: k });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ElementaryDivisorBasis {
    /// ell x ell unimodular: columns are the ambient basis vectors a_j.
    pub full_basis: IMat,
    /// Inverse of full_basis: coordinates of v are inv * v.
    pub inv: IMat,
    /// alpha_1 | alpha_2 | ... | alpha_d; alpha_j a_j spans the sublattice.
    pub divisors: Vec<BigInt>,
    pub count: usize,
}

pub fn elementary_divisor_basis(sublattice: &IMat) -> Result<ElementaryDivisorBasis> {
    let d = sublattice.cols;
    if sublattice.rank() != d {
        return Err(Error::DependentColumns);
    }
    // U M V = D, so M Z^d = U^{-1} D Z^d: the j-th column of U^{-1} scaled by
    // d_j spans the lattice.
    let s = linalg::snf(sublattice);
    Ok(ElementaryDivisorBasis {
        full_basis: s.u_inv.clone(),
        inv: s.u.clone(),
        divisors: s.divisors[..d].to_vec(),
        count: d,
    })
}

pub fn coordinates(basis: &ElementaryDivisorBasis, v: &[BigInt]) -> Vec<BigInt> {
    let ell = basis.full_basis.rows;
    assert_eq!(v.len(), ell);
    (0..ell)
        .map(|i| {
            let mut acc = BigInt::zero();
            for (j, x) in v.iter().enumerate() {
                acc += basis.inv.at(i, j) * x;
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::{mat_identity, mat_inverse_unimodular, mat_mul};
    use num_traits::Signed;

    fn hw(v: &[u32]) -> HighestWeight {
        HighestWeight::new(v.to_vec()).unwrap()
    }

    #[test]
    fn weight_validation() {
        assert!(HighestWeight::new(vec![2, 1, 0]).is_ok());
        assert!(HighestWeight::new(vec![1, 2]).is_err());
        assert!(HighestWeight::parse("4,2,0").is_ok());
        assert!(HighestWeight::parse("1,2").is_err());
        assert!(HighestWeight::parse("a,b").is_err());
    }

    #[test]
    fn dimensions() {
        assert_eq!(hw(&[1, 0]).weyl_dimension(), 2);
        for j in 0..6 {
            assert_eq!(hw(&[j, 0]).weyl_dimension(), (j + 1) as u64);
        }
        assert_eq!(hw(&[2, 1, 0]).weyl_dimension(), 8);
        assert_eq!(hw(&[3, 1, 1]).weyl_dimension(), 6);
        assert_eq!(hw(&[2, 0, 0]).weyl_dimension(), 6);
    }

    #[test]
    fn weyl_formula_equals_tableau_count() {
        // all lambda with |lambda| <= 6, n <= 4
        for n in 1..=4usize {
            let mut stack = vec![vec![]];
            while let Some(partial) = stack.pop() {
                if partial.len() == n {
                    let lam = hw(&partial);
                    assert_eq!(
                        lam.weyl_dimension() as usize,
                        semistandard_tableaux(n, &lam).len(),
                        "lambda = {:?}, n = {}",
                        partial,
                        n
                    );
                    continue;
                }
                let cap: u32 = if partial.is_empty() {
                    6
                } else {
                    (*partial.last().unwrap()).min(6 - partial.iter().sum::<u32>())
                };
                for v in 0..=cap {
                    let mut next: Vec<u32> = partial.clone();
                    next.push(v);
                    stack.push(next);
                }
            }
        }
    }

    #[test]
    fn standard_rep_matrix_is_u() {
        let rep = build_rep(2, &hw(&[1, 0])).unwrap();
        assert_eq!(rep.ell, 2);
        let u = vec![vec![3, 1], vec![2, 1]];
        let m = rep.rep_matrix(&u).unwrap();
        assert_eq!(m.to_i64().unwrap(), u);
    }

    #[test]
    fn identity_and_central_character() {
        let rep = build_rep(3, &hw(&[2, 1, 0])).unwrap();
        assert_eq!(rep.ell, 8);
        let m = rep.rep_matrix(&mat_identity(3)).unwrap();
        assert!(m.is_identity());
        // U = 2I -> 2^{|lambda|} I
        let two: Unimod = vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]];
        let m = rep.rep_matrix(&two).unwrap();
        let scale = BigInt::from(2u64).pow(hw(&[2, 1, 0]).size());
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { scale.clone() } else { BigInt::zero() };
                assert_eq!(*m.at(i, j), want);
            }
        }
    }

    #[test]
    fn homomorphism_and_unimodular_inverse() {
        let rep = build_rep(2, &hw(&[3, 1])).unwrap();
        let mut rng = SplitMix64::new(99);
        for _ in 0..200 {
            let a: Unimod = (0..2)
                .map(|_| (0..2).map(|_| rng.range_i64(-3, 3)).collect())
                .collect();
            let b: Unimod = (0..2)
                .map(|_| (0..2).map(|_| rng.range_i64(-3, 3)).collect())
                .collect();
            let ab = mat_mul(&a, &b);
            let m_ab = rep.rep_matrix(&ab).unwrap();
            let m_a = rep.rep_matrix(&a).unwrap();
            let m_b = rep.rep_matrix(&b).unwrap();
            assert_eq!(m_ab, m_a.mul(&m_b));
        }
        // unimodular U: |det rho(U)| = 1 and rho(U^{-1}) = rho(U)^{-1}
        let u: Unimod = vec![vec![2, 1], vec![1, 1]];
        let m = rep.rep_matrix(&u).unwrap();
        assert_eq!(m.det().abs(), BigInt::one());
        let m_inv = rep.rep_matrix(&mat_inverse_unimodular(&u)).unwrap();
        assert!(m.mul(&m_inv).is_identity());
    }

    #[test]
    fn scalar_weight_values() {
        assert_eq!(build_rep(2, &hw(&[4, 4])).unwrap().scalar_weight(), 4);
        assert_eq!(build_rep(3, &hw(&[2, 1, 0])).unwrap().scalar_weight(), 0);
        assert_eq!(build_rep(2, &hw(&[5, 2])).unwrap().scalar_weight(), 2);
    }

    #[test]
    fn grading_symmetric_power() {
        // (2,(3,0)): 4 pieces, each dimension 1, weights 0..3
        let rep = build_rep(2, &hw(&[3, 0])).unwrap();
        let g = weight_grading(&rep).unwrap();
        assert_eq!(g.len(), 4);
        for (i, piece) in g.iter().enumerate() {
            assert_eq!(piece.weight, i as u32);
            assert_eq!(piece.basis.cols, 1);
        }
    }

    #[test]
    fn grading_det_power() {
        // (3,(2,2,2)) = det^2: single piece of weight 2, dimension 1
        let rep = build_rep(3, &hw(&[2, 2, 2])).unwrap();
        assert_eq!(rep.ell, 1);
        let g = weight_grading(&rep).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].weight, 2);
        assert_eq!(g[0].basis.cols, 1);
    }

    #[test]
    fn grading_dimensions_and_eigen_property() {
        let rep = build_rep(3, &hw(&[2, 1, 0])).unwrap();
        let g = weight_grading(&rep).unwrap();
        let total: usize = g.iter().map(|p| p.basis.cols).sum();
        assert_eq!(total, rep.ell);
        // eigen check with x = 2 and x = 3
        for &x in &[2i64, 3] {
            let mut d = mat_identity(3);
            d[0][0] = x;
            let m = rep.rep_matrix(&d).unwrap();
            for piece in &g {
                let ev = BigInt::from(x).pow(piece.weight);
                let prod = m.mul(&piece.basis);
                for i in 0..rep.ell {
                    for j in 0..piece.basis.cols {
                        assert_eq!(*prod.at(i, j), piece.basis.at(i, j) * &ev);
                    }
                }
            }
        }
        // weights agree with tableau 1-counts
        let weights = rep.basis_weights();
        for piece in &g {
            // each graded piece dimension equals the number of tableaux of
            // that weight (torus-diagonal basis)
            let cnt = weights.iter().filter(|&&w| w == piece.weight).count();
            assert_eq!(piece.basis.cols, cnt);
        }
    }

    #[test]
    fn grading_shifts_under_det_twist() {
        // lambda = (3,1,1) vs lambda0 = (2,0,0): weights shift by k = 1
        let rep0 = build_rep(3, &hw(&[2, 0, 0])).unwrap();
        let rep = build_rep(3, &hw(&[3, 1, 1])).unwrap();
        let g0 = weight_grading(&rep0).unwrap();
        let g = weight_grading(&rep).unwrap();
        assert_eq!(g0.len(), g.len());
        for (a, b) in g0.iter().zip(&g) {
            assert_eq!(a.weight + 1, b.weight);
            assert_eq!(a.basis.cols, b.basis.cols);
        }
    }

    #[test]
    fn elementary_divisors() {
        // 2Z inside Z
        let b = IMat::from_i64_rows(&[vec![2]]);
        let e = elementary_divisor_basis(&b).unwrap();
        assert_eq!(e.divisors, vec![BigInt::from(2)]);
        // diag(2,3) -> (1,6)
        let b = IMat::from_i64_rows(&[vec![2, 0], vec![0, 3]]);
        let e = elementary_divisor_basis(&b).unwrap();
        assert_eq!(e.divisors, vec![BigInt::one(), BigInt::from(6)]);
        // saturated sublattice: all ones
        let b = IMat::from_i64_rows(&[vec![1, 0], vec![0, 1], vec![3, 5]]);
        let e = elementary_divisor_basis(&b).unwrap();
        assert_eq!(e.divisors, vec![BigInt::one(), BigInt::one()]);
        // dependent columns rejected
        let b = IMat::from_i64_rows(&[vec![1, 2], vec![2, 4]]);
        assert!(matches!(elementary_divisor_basis(&b), Err(Error::DependentColumns)));
    }

    #[test]
    fn elementary_divisor_membership_and_coordinates() {
        let b = IMat::from_i64_rows(&[vec![2, 0], vec![0, 3], vec![4, 6]]);
        let e = elementary_divisor_basis(&b).unwrap();
        assert_eq!(e.count, 2);
        // alpha_j a_j must lie in the column lattice of b
        for j in 0..e.count {
            let target: Vec<BigInt> =
                (0..3).map(|i| e.full_basis.at(i, j) * &e.divisors[j]).collect();
            let sol = linalg::solve_in_column_lattice(&b, &target);
            assert!(sol.is_some(), "alpha_{} a_{} not in lattice", j, j);
        }
        // coordinates round trip
        let v: Vec<BigInt> = vec![BigInt::from(7), BigInt::from(-2), BigInt::from(5)];
        let c = coordinates(&e, &v);
        let back: Vec<BigInt> = (0..3)
            .map(|i| (0..3).map(|j| e.full_basis.at(i, j) * &c[j]).sum())
            .collect();
        assert_eq!(back, v);
        // v = a_1 -> (1,0,0)
        let a1: Vec<BigInt> = (0..3).map(|i| e.full_basis.at(i, 0).clone()).collect();
        assert_eq!(coordinates(&e, &a1), vec![BigInt::one(), BigInt::zero(), BigInt::zero()]);
    }
}
