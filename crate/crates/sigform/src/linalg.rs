//! Dense exact linear algebra over the integers: determinants, rank,
//! Smith/Hermite normal forms with transform tracking, saturated kernels,
//! and rational solving.  Everything here is arbitrary precision; callers
//! convert from machine integers at the boundary.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Row-major dense integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl std::fmt::Debug for IMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "IMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.at(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl IMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut m = IMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        IMat::from_fn(r, c, |i, j| BigInt::from(rows[i][j]))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> IMat {
        IMat::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.at(i, j) + a * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * &v[j]).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == IMat::identity(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn submatrix_cols(&self, js: &[usize]) -> IMat {
        IMat::from_fn(self.rows, js.len(), |i, j| self.at(i, js[j]).clone())
    }

    pub fn to_i64(&self) -> Option<Vec<Vec<i64>>> {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(i64::try_from(self.at(i, j)).ok()?);
            }
            out.push(row);
        }
        Some(out)
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a.at(k, k).is_zero() {
                // pivot search
                let mut found = None;
                for i in k + 1..n {
                    if !a.at(i, k).is_zero() {
                        found = Some(i);
                        break;
                    }
                }
                match found {
                    Some(i) => {
                        for j in 0..n {
                            let tmp = a.at(k, j).clone();
                            a.set(k, j, a.at(i, j).clone());
                            a.set(i, j, tmp);
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.at(i, j) * a.at(k, k) - a.at(i, k) * a.at(k, j)) / &prev;
                    a.set(i, j, v);
                }
                a.set(i, k, BigInt::zero());
            }
            prev = a.at(k, k).clone();
        }
        let d = a.at(n - 1, n - 1).clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    pub fn rank(&self) -> usize {
        // rational row echelon, counting pivots
        let mut a: Vec<Vec<BigRational>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| BigRational::from(self.at(i, j).clone())).collect())
            .collect();
        let mut rank = 0;
        let mut col = 0;
        while rank < self.rows && col < self.cols {
            let mut piv = None;
            for i in rank..self.rows {
                if !a[i][col].is_zero() {
                    piv = Some(i);
                    break;
                }
            }
            let Some(p) = piv else {
                col += 1;
                continue;
            };
            a.swap(rank, p);
            let pv = a[rank][col].clone();
            for i in rank + 1..self.rows {
                if a[i][col].is_zero() {
                    continue;
                }
                let f = &a[i][col] / &pv;
                for j in col..self.cols {
                    let v = &a[i][j] - &f * &a[rank][j];
                    a[i][j] = v;
                }
            }
            rank += 1;
            col += 1;
        }
        rank
    }

    /// Exact inverse of a unimodular matrix (det = ±1).
    pub fn inverse_unimodular(&self) -> IMat {
        let inv = self
            .inverse_rational()
            .expect("unimodular matrix must be invertible");
        IMat::from_fn(self.rows, self.cols, |i, j| {
            assert!(inv[i][j].is_integer(), "inverse of unimodular matrix must be integral");
            inv[i][j].to_integer()
        })
    }

    /// Rational inverse by Gauss-Jordan; None if singular.
    pub fn inverse_rational(&self) -> Option<Vec<Vec<BigRational>>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                let mut row: Vec<BigRational> =
                    (0..n).map(|j| BigRational::from(self.at(i, j).clone())).collect();
                let mut aug = vec![BigRational::zero(); n];
                aug[i] = BigRational::one();
                row.extend(aug);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&i| !a[i][col].is_zero())?;
            a.swap(col, piv);
            let pv = a[col][col].clone();
            for j in col..2 * n {
                a[col][j] = &a[col][j] / &pv;
            }
            for i in 0..n {
                if i == col || a[i][col].is_zero() {
                    continue;
                }
                let f = a[i][col].clone();
                for j in col..2 * n {
                    let v = &a[i][j] - &f * &a[col][j];
                    a[i][j] = v;
                }
            }
        }
        Some((0..n).map(|i| a[i][n..].to_vec()).collect())
    }

    /// Solve A x = b over the rationals; None if no unique solution.
    pub fn solve_rational(&self, b: &[BigInt]) -> Option<Vec<BigRational>> {
        let inv = self.inverse_rational()?;
        Some(
            (0..self.rows)
                .map(|i| {
                    (0..self.cols)
                        .map(|j| &inv[i][j] * BigRational::from(b[j].clone()))
                        .sum()
                })
                .collect(),
        )
    }
}

/// Smith normal form `U * M * V = D` with all four transforms.
pub struct Snf {
    /// Elementary divisors (nonnegative, divisibility chain), length min(rows, cols).
    pub divisors: Vec<BigInt>,
    pub rank: usize,
    pub u: IMat,
    pub u_inv: IMat,
    pub v: IMat,
    pub v_inv: IMat,
}

struct SnfCalc {
    m: IMat,
    u: IMat,
    u_inv: IMat,
    v: IMat,
    v_inv: IMat,
}

impl SnfCalc {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.m.cols {
            let t = self.m.at(i, c).clone();
            self.m.set(i, c, self.m.at(j, c).clone());
            self.m.set(j, c, t);
        }
        for c in 0..self.u.cols {
            let t = self.u.at(i, c).clone();
            self.u.set(i, c, self.u.at(j, c).clone());
            self.u.set(j, c, t);
        }
        // u_inv: swap columns i, j
        for r in 0..self.u_inv.rows {
            let t = self.u_inv.at(r, i).clone();
            self.u_inv.set(r, i, self.u_inv.at(r, j).clone());
            self.u_inv.set(r, j, t);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.m.rows {
            let t = self.m.at(r, i).clone();
            self.m.set(r, i, self.m.at(r, j).clone());
            self.m.set(r, j, t);
        }
        for r in 0..self.v.rows {
            let t = self.v.at(r, i).clone();
            self.v.set(r, i, self.v.at(r, j).clone());
            self.v.set(r, j, t);
        }
        // v_inv: swap rows i, j
        for c in 0..self.v_inv.cols {
            let t = self.v_inv.at(i, c).clone();
            self.v_inv.set(i, c, self.v_inv.at(j, c).clone());
            self.v_inv.set(j, c, t);
        }
    }

    /// row i += q * row j  (on M and U); u_inv column j -= q * column i.
    fn add_row(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.m.cols {
            let v = self.m.at(i, c) + q * self.m.at(j, c);
            self.m.set(i, c, v);
        }
        for c in 0..self.u.cols {
            let v = self.u.at(i, c) + q * self.u.at(j, c);
            self.u.set(i, c, v);
        }
        for r in 0..self.u_inv.rows {
            let v = self.u_inv.at(r, j) - q * self.u_inv.at(r, i);
            self.u_inv.set(r, j, v);
        }
    }

    /// col i += q * col j (on M and V); v_inv row j -= q * row i.
    fn add_col(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.m.rows {
            let v = self.m.at(r, i) + q * self.m.at(r, j);
            self.m.set(r, i, v);
        }
        for r in 0..self.v.rows {
            let v = self.v.at(r, i) + q * self.v.at(r, j);
            self.v.set(r, i, v);
        }
        for c in 0..self.v_inv.cols {
            let v = self.v_inv.at(j, c) - q * self.v_inv.at(i, c);
            self.v_inv.set(j, c, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.m.cols {
            let v = -self.m.at(i, c);
            self.m.set(i, c, v);
        }
        for c in 0..self.u.cols {
            let v = -self.u.at(i, c);
            self.u.set(i, c, v);
        }
        for r in 0..self.u_inv.rows {
            let v = -self.u_inv.at(r, i);
            self.u_inv.set(r, i, v);
        }
    }
}

pub fn snf(m: &IMat) -> Snf {
    let rows = m.rows;
    let cols = m.cols;
    let mut c = SnfCalc {
        m: m.clone(),
        u: IMat::identity(rows),
        u_inv: IMat::identity(rows),
        v: IMat::identity(cols),
        v_inv: IMat::identity(cols),
    };
    let k = rows.min(cols);
    for t in 0..k {
        // find a pivot of minimal absolute value in the trailing submatrix
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if !c.m.at(i, j).is_zero()
                        && best.map_or(true, |(bi, bj)| c.m.at(i, j).abs() < c.m.at(bi, bj).abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            c.swap_rows(t, pi);
            c.swap_cols(t, pj);
            // clear column t
            let mut dirty = false;
            for i in t + 1..rows {
                if !c.m.at(i, t).is_zero() {
                    let q = -(c.m.at(i, t) / c.m.at(t, t));
                    c.add_row(i, t, &q);
                    if !c.m.at(i, t).is_zero() {
                        dirty = true;
                    }
                }
            }
            // clear row t
            for j in t + 1..cols {
                if !c.m.at(t, j).is_zero() {
                    let q = -(c.m.at(t, j) / c.m.at(t, t));
                    c.add_col(j, t, &q);
                    if !c.m.at(t, j).is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue; // remainders left; pick a smaller pivot and repeat
            }
            // pivot divides everything in its row/col; enforce divisibility
            // of the trailing block
            let mut offender = None;
            'outer: for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(c.m.at(i, j) % c.m.at(t, t)).is_zero() {
                        offender = Some(i);
                        break 'outer;
                    }
                }
            }
            if let Some(i) = offender {
                c.add_row(t, i, &BigInt::one());
                continue;
            }
            if c.m.at(t, t).is_negative() {
                c.negate_row(t);
            }
            break;
        }
    }
    let divisors: Vec<BigInt> = (0..k).map(|i| c.m.at(i, i).clone()).collect();
    let rank = divisors.iter().filter(|d| !d.is_zero()).count();
    Snf { divisors, rank, u: c.u, u_inv: c.u_inv, v: c.v, v_inv: c.v_inv }
}

/// Saturated integer basis of the right kernel {x : M x = 0}, as matrix columns.
pub fn kernel(m: &IMat) -> IMat {
    let s = snf(m);
    let ker_cols: Vec<usize> = (0..m.cols)
        .filter(|&j| j >= s.rank)
        .collect();
    s.v.submatrix_cols(&ker_cols)
}

/// Given a k x n matrix whose rows are a basis of a *saturated* sublattice of
/// Z^n, return an n x n unimodular matrix whose first k rows span the same
/// row lattice.
pub fn complete_rows_to_unimodular(b: &IMat) -> IMat {
    let s = snf(b);
    for d in &s.divisors {
        assert!(d.is_one(), "row lattice must be saturated (divisor {} != 1)", d);
    }
    // U B V = [I 0]  =>  row-lattice(B) = row-lattice([I 0] V^-1) = first k rows of V^-1
    s.v_inv
}

/// Primitive integer basis (as columns) of the rational column span of M.
/// Equivalently: the saturation of the column lattice of M.
pub fn saturate_columns(m: &IMat) -> IMat {
    let s = snf(m);
    let cols: Vec<usize> = (0..s.rank).collect();
    s.u_inv.submatrix_cols(&cols)
}

/// Integer kernel basis of M over Q, computed by rational elimination and
/// denominator clearing; columns are primitive. Faster than SNF for wide
/// systems with many rows.
pub fn rational_kernel(m: &IMat) -> Result<IMat> {
    let rows = m.rows;
    let cols = m.cols;
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| (0..cols).map(|j| BigRational::from(m.at(i, j).clone())).collect())
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        let piv = (r..rows).find(|&i| !a[i][col].is_zero());
        let Some(p) = piv else { continue };
        a.swap(r, p);
        let pv = a[r][col].clone();
        for j in col..cols {
            a[r][j] = &a[r][j] / &pv;
        }
        for i in 0..rows {
            if i == r || a[i][col].is_zero() {
                continue;
            }
            let f = a[i][col].clone();
            for j in col..cols {
                let v = &a[i][j] - &f * &a[r][j];
                a[i][j] = v;
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut out = IMat::zeros(cols, free.len());
    for (k, &fc) in free.iter().enumerate() {
        // rational kernel vector: x[fc] = 1, x[pivot col] = -a[row][fc]
        let mut x = vec![BigRational::zero(); cols];
        x[fc] = BigRational::one();
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = -a[row][fc].clone();
        }
        // clear denominators, divide by content
        let mut lcm = BigInt::one();
        for xi in &x {
            lcm = lcm.lcm(xi.denom());
        }
        let mut ints: Vec<BigInt> = x.iter().map(|xi| (xi * BigRational::from(lcm.clone())).to_integer()).collect();
        let mut g = BigInt::zero();
        for v in &ints {
            g = g.gcd(v);
        }
        if !g.is_zero() && !g.is_one() {
            for v in &mut ints {
                *v = &*v / &g;
            }
        }
        for i in 0..cols {
            out.set(i, k, ints[i].clone());
        }
    }
    Ok(out)
}

/// Column-style Hermite normal form of the column lattice of M (full column
/// rank assumed): returns a matrix with the same column lattice, upper
/// triangular with positive diagonal and entries right of the pivot reduced
/// into [0, pivot).
pub fn hnf_columns(m: &IMat) -> Result<IMat> {
    let n = m.rows;
    let k = m.cols;
    if m.rank() != k {
        return Err(Error::NotFullRank);
    }
    let mut a = m.clone();
    let mut pivot_col = 0usize;
    for row in 0..n {
        if pivot_col >= k {
            break;
        }
        // gcd-reduce entries of this row across columns >= pivot_col
        loop {
            let mut best: Option<usize> = None;
            for j in pivot_col..k {
                if !a.at(row, j).is_zero()
                    && best.map_or(true, |b| a.at(row, j).abs() < a.at(row, b).abs())
                {
                    best = Some(j);
                }
            }
            let Some(bj) = best else { break };
            // swap into pivot position
            if bj != pivot_col {
                for i in 0..n {
                    let t = a.at(i, pivot_col).clone();
                    a.set(i, pivot_col, a.at(i, bj).clone());
                    a.set(i, bj, t);
                }
            }
            let mut done = true;
            for j in pivot_col + 1..k {
                if a.at(row, j).is_zero() {
                    continue;
                }
                let q = a.at(row, j) / a.at(row, pivot_col);
                for i in 0..n {
                    let v = a.at(i, j) - &q * a.at(i, pivot_col);
                    a.set(i, j, v);
                }
                if !a.at(row, j).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a.at(row, pivot_col).is_zero() {
            continue; // no pivot in this row
        }
        if a.at(row, pivot_col).is_negative() {
            for i in 0..n {
                let v = -a.at(i, pivot_col);
                a.set(i, pivot_col, v);
            }
        }
        // reduce earlier columns? (column HNF: reduce columns left of pivot)
        let p = a.at(row, pivot_col).clone();
        for j in 0..pivot_col {
            let q = a.at(row, j).div_floor(&p);
            if !q.is_zero() {
                for i in 0..n {
                    let v = a.at(i, j) - &q * a.at(i, pivot_col);
                    a.set(i, j, v);
                }
            }
        }
        pivot_col += 1;
    }
    Ok(a)
}

/// Integer solution x of M x = b where the columns of M are independent;
/// None when b is outside the column lattice.
pub fn solve_in_column_lattice(m: &IMat, b: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(b.len(), m.rows);
    let s = snf(m);
    let c = s.u.mul_vec(b);
    let mut y = vec![BigInt::zero(); m.cols];
    for (j, cj) in c.iter().enumerate() {
        if j < m.cols {
            let d = &s.divisors[j];
            if d.is_zero() {
                if !cj.is_zero() {
                    return None;
                }
            } else {
                if !(cj % d).is_zero() {
                    return None;
                }
                y[j] = cj / d;
            }
        } else if !cj.is_zero() {
            return None;
        }
    }
    Some(s.v.mul_vec(&y))
}

pub fn p_valuation(v: &BigInt, p: u64) -> u32 {
    assert!(!v.is_zero());
    let p = BigInt::from(p);
    let mut v = v.clone();
    let mut e = 0;
    while (&v % &p).is_zero() {
        v = v / &p;
        e += 1;
    }
    e
}
