//! Concrete integral modular forms: theta series of even positive definite
//! lattices in any degree, with scalar or pluriharmonic polynomial
//! coefficients, plus degree-one q-series arithmetic.
//!
//! Coefficient convention: a(T) counts (or sums P over) integer matrices X
//! with X^t S X = 2T, so everything stays integral.  The equivariance
//! convention for polynomial coefficients is P(X*A) = rho0(A^t) P(X); it is
//! validated against the expansion-level closure relation.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expansion::{FourierExpansion, LevelSpec};
use crate::linalg::{self, IMat};
use crate::poly::Poly;
use crate::symmat::{self, HalfIntegralMatrix};
use crate::weylrep::{self, HighestWeight, IntegralRep};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct EvenLattice {
    pub m: usize,
    pub gram: Vec<Vec<i64>>,
    pub name: Option<String>,
}

impl EvenLattice {
    pub fn new(gram: Vec<Vec<i64>>, name: Option<String>) -> Result<Self> {
        let m = gram.len();
        let h = HalfIntegralMatrix::from_rows(&gram)
            .map_err(|_| Error::Invalid("gram must be symmetric with even diagonal".into()))?;
        if !h.is_definite() {
            return Err(Error::NotDefinite);
        }
        Ok(EvenLattice { m, gram, name })
    }

    pub fn det(&self) -> BigInt {
        IMat::from_i64_rows(&self.gram).det()
    }

    /// Smallest N with N * gram^{-1} integral and even on the diagonal.
    pub fn level(&self) -> u64 {
        let s = IMat::from_i64_rows(&self.gram);
        let d = s.det();
        let inv = s.inverse_rational().expect("definite gram is invertible");
        let bound = (BigInt::from(2) * d.abs()).to_u64().expect("level bound fits u64");
        'outer: for n in 1..=bound {
            let nb = BigRational::from(BigInt::from(n));
            for i in 0..self.m {
                for j in 0..self.m {
                    let v = &inv[i][j] * &nb;
                    if !v.is_integer() {
                        continue 'outer;
                    }
                    if i == j && (v.to_integer() % 2i32) != BigInt::zero() {
                        continue 'outer;
                    }
                }
            }
            return n;
        }
        unreachable!("2*det always satisfies the level condition")
    }

    /// chi(-1) for the theta character: +1 when m = 0 mod 4, -1 when m = 2 mod 4.
    pub fn char_parity(&self) -> i64 {
        if self.m % 4 == 0 {
            1
        } else {
            -1
        }
    }
}

pub fn catalog(name: &str) -> Result<EvenLattice> {
    let (gram, det): (Vec<Vec<i64>>, i64) = match name {
        "A1" => (vec![vec![2]], 2),
        "A2" => (vec![vec![2, 1], vec![1, 2]], 3),
        "D4" => (
            vec![
                vec![2, -1, 0, 0],
                vec![-1, 2, -1, -1],
                vec![0, -1, 2, 0],
                vec![0, -1, 0, 2],
            ],
            4,
        ),
        "E8" => (
            vec![
                vec![2, 0, -1, 0, 0, 0, 0, 0],
                vec![0, 2, 0, -1, 0, 0, 0, 0],
                vec![-1, 0, 2, -1, 0, 0, 0, 0],
                vec![0, -1, -1, 2, -1, 0, 0, 0],
                vec![0, 0, 0, -1, 2, -1, 0, 0],
                vec![0, 0, 0, 0, -1, 2, -1, 0],
                vec![0, 0, 0, 0, 0, -1, 2, -1],
                vec![0, 0, 0, 0, 0, 0, -1, 2],
            ],
            1,
        ),
        _ => return Err(Error::UnknownLattice(name.to_string())),
    };
    let l = EvenLattice::new(gram, Some(name.to_string()))?;
    assert_eq!(l.det(), BigInt::from(det), "catalog determinant mismatch for {}", name);
    Ok(l)
}

// ---------------------------------------------------------------------------
// theta builders
// ---------------------------------------------------------------------------

/// Enumerate all X in Z^{m x n} with column norms summing to at most 2*bound
/// and call `visit(columns, flattened X^t S X)`.
fn for_each_tuple(
    l: &EvenLattice,
    n: usize,
    bound: i64,
    visit: &mut impl FnMut(&[usize], &[i64]),
) {
    // short vectors with norm <= 2*bound, plus their images under S
    let mut vecs: Vec<(Vec<i64>, i64)> = Vec::new();
    let mut norm = 0i64;
    while norm <= 2 * bound {
        for v in symmat::vectors_of_norm(&l.gram, norm) {
            vecs.push((v, norm));
        }
        norm += 2;
    }
    let s = &l.gram;
    let sv: Vec<Vec<i64>> = vecs
        .iter()
        .map(|(v, _)| {
            (0..l.m)
                .map(|i| (0..l.m).map(|j| s[i][j] * v[j]).sum())
                .collect()
        })
        .collect();
    let mut chosen = vec![0usize; n];
    let mut key = vec![0i64; n * n];
    fn rec(
        col: usize,
        n: usize,
        budget: i64,
        vecs: &[(Vec<i64>, i64)],
        sv: &[Vec<i64>],
        chosen: &mut Vec<usize>,
        key: &mut Vec<i64>,
        visit: &mut impl FnMut(&[usize], &[i64]),
    ) {
        if col == n {
            visit(chosen, key);
            return;
        }
        for (idx, (v, nm)) in vecs.iter().enumerate() {
            if *nm > budget {
                continue;
            }
            chosen[col] = idx;
            key[col * n + col] = *nm;
            for prev in 0..col {
                let dot: i64 = v.iter().zip(&sv[chosen[prev]]).map(|(a, b)| a * b).sum();
                key[prev * n + col] = dot;
                key[col * n + prev] = dot;
            }
            rec(col + 1, n, budget - nm, vecs, sv, chosen, key, visit);
        }
    }
    rec(0, n, 2 * bound, &vecs, &sv, &mut chosen, &mut key, visit);
}

/// Scalar theta series of degree n: a(T) = #{X : X^t S X = 2T}, trace <= bound.
pub fn scalar_theta(l: &EvenLattice, n: usize, bound: i64) -> Result<FourierExpansion> {
    if l.m % 2 != 0 {
        return Err(Error::OddRank);
    }
    let k = (l.m / 2) as u32;
    let lambda = HighestWeight::new(vec![k; n])?;
    let rep = Arc::new(weylrep::build_rep(n, &lambda)?);
    let mut hist: HashMap<Vec<i64>, BigInt> = HashMap::new();
    for_each_tuple(l, n, bound, &mut |_, key| {
        *hist.entry(key.to_vec()).or_insert_with(BigInt::zero) += 1;
    });
    let mut coeffs = std::collections::BTreeMap::new();
    for t in symmat::enumerate(n, bound) {
        let v = hist.get(t.entries()).cloned().unwrap_or_else(BigInt::zero);
        coeffs.insert(t, vec![v]);
    }
    Ok(FourierExpansion {
        n,
        rep,
        level: LevelSpec {
            n_level: l.level(),
            nprime: 1,
            p_power: 1,
            char_parity: l.char_parity(),
        },
        modulus: 0,
        trace_bound: bound,
        strict: true,
        twists: Vec::new(),
        coeffs,
    })
}

/// Vector of polynomials on m x n matrix variables transforming in rep0 under
/// right translation: P(X*A) = rho0(A^t) P(X).  Variable order: x_{i,alpha}
/// at index i*n + alpha.
pub struct PolyCoeff {
    pub m: usize,
    pub n: usize,
    pub components: Vec<Poly>,
    pub rep0: Arc<IntegralRep>,
}

pub fn pluriharmonic_check(p: &PolyCoeff, l: &EvenLattice) -> bool {
    assert_eq!(p.m, l.m);
    let s = IMat::from_i64_rows(&l.gram);
    let det = s.det();
    let inv = s.inverse_rational().expect("definite");
    // adjugate = det * inverse, integral
    let adj = IMat::from_fn(l.m, l.m, |i, j| {
        let v = &inv[i][j] * BigRational::from(det.clone());
        assert!(v.is_integer());
        v.to_integer()
    });
    for comp in &p.components {
        for alpha in 0..p.n {
            for beta in 0..p.n {
                let mut acc = Poly::zero(comp.nvars);
                for i in 0..l.m {
                    for j in 0..l.m {
                        if adj.at(i, j).is_zero() {
                            continue;
                        }
                        let d2 = comp.deriv(i * p.n + alpha).deriv(j * p.n + beta);
                        acc = acc.add(&d2.scale(adj.at(i, j)));
                    }
                }
                if !acc.is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

fn substitute_right(p: &Poly, m: usize, n: usize, a: &[Vec<i64>]) -> Poly {
    // X -> X*A on variables x_{i,alpha} = index i*n + alpha
    let forms: Vec<Vec<BigInt>> = (0..m * n)
        .map(|idx| {
            let (i, alpha) = (idx / n, idx % n);
            let mut f = vec![BigInt::zero(); m * n];
            for t in 0..n {
                f[i * n + t] = BigInt::from(a[t][alpha]);
            }
            f
        })
        .collect();
    p.substitute_linear(&forms)
}

pub fn equivariance_check(p: &PolyCoeff) -> bool {
    let mut rng = crate::rng::SplitMix64::new(0xec);
    for _ in 0..20 {
        let a: Vec<Vec<i64>> = (0..p.n)
            .map(|_| (0..p.n).map(|_| rng.range_i64(-3, 3)).collect())
            .collect();
        let at = symmat::mat_transpose(&a);
        let m = match p.rep0.rep_matrix(&at) {
            Ok(m) => m,
            Err(_) => return false,
        };
        for (c, comp) in p.components.iter().enumerate() {
            let lhs = substitute_right(comp, p.m, p.n, &a);
            let mut rhs = Poly::zero(comp.nvars);
            for (c2, comp2) in p.components.iter().enumerate() {
                rhs = rhs.add(&comp2.scale(m.at(c, c2)));
            }
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

/// Harmonic theta series: a(T) = sum of P(X) over X with X^t S X = 2T, of type
/// rho0 tensor det^{m/2}.
pub fn poly_theta(l: &EvenLattice, n: usize, p: &PolyCoeff, bound: i64) -> Result<FourierExpansion> {
    if l.m % 2 != 0 {
        return Err(Error::OddRank);
    }
    assert_eq!(p.m, l.m);
    assert_eq!(p.n, n);
    if !pluriharmonic_check(p, l) {
        return Err(Error::NotPluriharmonic);
    }
    if !equivariance_check(p) {
        return Err(Error::NotEquivariant);
    }
    let k = (l.m / 2) as u32;
    let lambda = HighestWeight::new(p.rep0.lambda.lambda.iter().map(|&x| x + k).collect())?;
    let rep = Arc::new(weylrep::build_rep(n, &lambda)?);
    assert_eq!(rep.ell, p.rep0.ell);
    let ell = rep.ell;
    // short-vector coordinates for evaluating P at each tuple
    let mut vec_store: Vec<Vec<i64>> = Vec::new();
    {
        let mut norm = 0i64;
        while norm <= 2 * bound {
            for v in symmat::vectors_of_norm(&l.gram, norm) {
                vec_store.push(v);
            }
            norm += 2;
        }
    }
    let mut hist: HashMap<Vec<i64>, Vec<BigInt>> = HashMap::new();
    for_each_tuple(l, n, bound, &mut |chosen, key| {
        let mut xs = vec![BigInt::zero(); l.m * n];
        for (alpha, &idx) in chosen.iter().enumerate() {
            for i in 0..l.m {
                xs[i * n + alpha] = BigInt::from(vec_store[idx][i]);
            }
        }
        let entry = hist
            .entry(key.to_vec())
            .or_insert_with(|| vec![BigInt::zero(); ell]);
        for (c, comp) in p.components.iter().enumerate() {
            entry[c] += comp.eval(&xs);
        }
    });
    let mut coeffs = std::collections::BTreeMap::new();
    for t in symmat::enumerate(n, bound) {
        let v = hist
            .get(t.entries())
            .cloned()
            .unwrap_or_else(|| vec![BigInt::zero(); ell]);
        coeffs.insert(t, v);
    }
    Ok(FourierExpansion {
        n,
        rep,
        level: LevelSpec {
            n_level: l.level(),
            nprime: 1,
            p_power: 1,
            char_parity: l.char_parity(),
        },
        modulus: 0,
        trace_bound: bound,
        strict: true,
        twists: Vec::new(),
        coeffs,
    })
}

/// Solve the pluriharmonicity + equivariance linear system for a nonzero
/// integral P of type rep0 = rho_{lambda0} in degree |lambda0| per component.
/// The first returned solution that yields a nonzero theta series is the
/// usual choice; solutions odd under some automorphism of L sum to zero.
pub fn find_harmonic(l: &EvenLattice, n: usize, lambda0: &HighestWeight) -> Result<Option<PolyCoeff>> {
    Ok(find_harmonics(l, n, lambda0)?.into_iter().next())
}

/// All kernel basis solutions of the harmonic system that pass both checks.
pub fn find_harmonics(l: &EvenLattice, n: usize, lambda0: &HighestWeight) -> Result<Vec<PolyCoeff>> {
    let rep0 = Arc::new(weylrep::build_rep(n, lambda0)?);
    let ell = rep0.ell;
    let d = lambda0.size();
    let nvars = l.m * n;
    let monos = Poly::monomials_of_degree(nvars, d);
    let nm = monos.len();
    let unknowns = ell * nm;
    // row index bookkeeping: each distinct (tag, component, monomial) is a row
    let mut row_index: HashMap<(usize, usize, Vec<u32>), usize> = HashMap::new();
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    let add = |row_index: &mut HashMap<(usize, usize, Vec<u32>), usize>,
                   rows: &mut Vec<Vec<BigInt>>,
                   tag: usize,
                   c: usize,
                   mono: Vec<u32>,
                   col: usize,
                   val: BigInt| {
        let key = (tag, c, mono);
        let idx = *row_index.entry(key).or_insert_with(|| {
            rows.push(vec![BigInt::zero(); unknowns]);
            rows.len() - 1
        });
        rows[idx][col] += val;
    };
    // generator matrices for GL(n,Z): shears, a sign flip, a couple of products
    let mut gens: Vec<Vec<Vec<i64>>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut e = symmat::mat_identity(n);
                e[i][j] = 1;
                gens.push(e);
            }
        }
    }
    let mut flip = symmat::mat_identity(n);
    flip[0][0] = -1;
    gens.push(flip);
    if n >= 2 {
        let mut rng = crate::rng::SplitMix64::new(0x9a);
        for _ in 0..2 {
            let mut u = symmat::mat_identity(n);
            for _ in 0..4 {
                let i = rng.range_i64(0, n as i64 - 1) as usize;
                let j = (i + 1 + rng.range_i64(0, n as i64 - 2).max(0) as usize) % n;
                if i == j {
                    continue;
                }
                let mut e = symmat::mat_identity(n);
                e[i][j] = rng.range_i64(-1, 1);
                u = symmat::mat_mul(&e, &u);
            }
            gens.push(u);
        }
    }
    for (g_idx, a) in gens.iter().enumerate() {
        let at = symmat::mat_transpose(a);
        let m = rep0.rep_matrix(&at)?;
        for c in 0..ell {
            for (u, mono) in monos.iter().enumerate() {
                // + coefficient from P_c(X*A) where P_c includes z_{c,u} mono
                let mut mp = Poly::zero(nvars);
                mp.terms.insert(mono.clone(), BigInt::one());
                let shifted = substitute_right(&mp, l.m, n, a);
                for (e, coef) in &shifted.terms {
                    add(&mut row_index, &mut rows, g_idx, c, e.clone(), c * nm + u, coef.clone());
                }
                // - M[c][c'] z_{c',u} mono
                for c2 in 0..ell {
                    if !m.at(c, c2).is_zero() {
                        add(
                            &mut row_index,
                            &mut rows,
                            g_idx,
                            c,
                            mono.clone(),
                            c2 * nm + u,
                            -m.at(c, c2).clone(),
                        );
                    }
                }
            }
        }
    }
    // pluriharmonicity rows (tag offset past the generators)
    let s = IMat::from_i64_rows(&l.gram);
    let det = s.det();
    let inv = s.inverse_rational().expect("definite");
    let plh_base = gens.len();
    for c in 0..ell {
        for alpha in 0..n {
            for beta in 0..n {
                let tag = plh_base + alpha * n + beta;
                for (u, mono) in monos.iter().enumerate() {
                    let mut mp = Poly::zero(nvars);
                    mp.terms.insert(mono.clone(), BigInt::one());
                    for i in 0..l.m {
                        for j in 0..l.m {
                            let adj = (&inv[i][j] * BigRational::from(det.clone())).to_integer();
                            if adj.is_zero() {
                                continue;
                            }
                            let d2 = mp.deriv(i * n + alpha).deriv(j * n + beta);
                            for (e, coef) in &d2.terms {
                                add(
                                    &mut row_index,
                                    &mut rows,
                                    tag,
                                    c,
                                    e.clone(),
                                    c * nm + u,
                                    coef * &adj,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    let sys = IMat::from_fn(rows.len(), unknowns, |i, j| rows[i][j].clone());
    let kernel = linalg::rational_kernel(&sys)?;
    let mut out = Vec::new();
    for col in 0..kernel.cols {
        let mut components = Vec::with_capacity(ell);
        for c in 0..ell {
            let mut poly = Poly::zero(nvars);
            for (u, mono) in monos.iter().enumerate() {
                let z = kernel.at(c * nm + u, col);
                if !z.is_zero() {
                    poly.terms.insert(mono.clone(), z.clone());
                }
            }
            components.push(poly);
        }
        if components.iter().all(|p| p.is_zero()) {
            continue;
        }
        let cand = PolyCoeff { m: l.m, n, components, rep0: rep0.clone() };
        if pluriharmonic_check(&cand, l) && equivariance_check(&cand) {
            out.push(cand);
        }
    }
    Ok(out)
}

/// First harmonic P whose theta series up to the bound is nonzero.
pub fn find_harmonic_with_nonzero_theta(
    l: &EvenLattice,
    n: usize,
    lambda0: &HighestWeight,
    bound: i64,
) -> Result<Option<(PolyCoeff, FourierExpansion)>> {
    for p in find_harmonics(l, n, lambda0)? {
        let th = poly_theta(l, n, &p, bound)?;
        if th.coeffs.values().any(|v| v.iter().any(|x| !x.is_zero())) {
            return Ok(Some((p, th)));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// degree-one q-series
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    /// coeffs[j] is the coefficient of q^j.
    pub coeffs: Vec<BigInt>,
    pub bound: usize,
    /// 0 = exact, otherwise p^m.
    pub modulus: u64,
}

impl QSeries {
    pub fn one(bound: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); bound + 1];
        coeffs[0] = BigInt::one();
        QSeries { coeffs, bound, modulus: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// theta_R as a q-series: c(j) = #{x in Z^r : x^t (2R) x = 2j}, j <= bound.
pub fn theta_q_series(r: &HalfIntegralMatrix, bound: usize) -> Result<QSeries> {
    if r.rank() != r.n {
        return Err(Error::DegenerateR);
    }
    let g = r.rows();
    let coeffs = (0..=bound)
        .map(|j| BigInt::from(symmat::vectors_of_norm(&g, 2 * j as i64).len() as u64))
        .collect();
    Ok(QSeries { coeffs, bound, modulus: 0 })
}

pub fn q_mul(a: &QSeries, b: &QSeries) -> QSeries {
    let bound = a.bound.min(b.bound);
    let modulus = match (a.modulus, b.modulus) {
        (0, m) | (m, 0) => m,
        (x, y) => {
            assert_eq!(x, y, "q-series moduli differ");
            x
        }
    };
    let mut coeffs = vec![BigInt::zero(); bound + 1];
    for i in 0..=bound {
        for j in 0..=bound - i {
            coeffs[i + j] += &a.coeffs[i] * &b.coeffs[j];
        }
    }
    if modulus != 0 {
        let m = BigInt::from(modulus);
        for c in coeffs.iter_mut() {
            *c = c.mod_floor_ref(&m);
        }
    }
    QSeries { coeffs, bound, modulus }
}

trait ModFloor {
    fn mod_floor_ref(&self, m: &BigInt) -> BigInt;
}

impl ModFloor for BigInt {
    fn mod_floor_ref(&self, m: &BigInt) -> BigInt {
        let r = self % m;
        if r.is_negative() {
            r + m
        } else {
            r
        }
    }
}

pub fn q_congruent(a: &QSeries, b: &QSeries, p: u64, m: u32, bound: usize) -> bool {
    let pm = BigInt::from(p.checked_pow(m).expect("p^m overflow"));
    for q in [a, b] {
        if q.modulus != 0 {
            assert!(
                BigInt::from(q.modulus) % &pm == BigInt::zero(),
                "q-series modulus incompatible with p^m"
            );
        }
    }
    let bound = bound.min(a.bound).min(b.bound);
    (0..=bound).all(|j| ((&a.coeffs[j] - &b.coeffs[j]) % &pm).is_zero())
}
