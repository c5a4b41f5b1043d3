//! Half-integral symmetric matrices: the index set of Fourier coefficients of
//! degree-n Siegel modular forms.  A matrix T with integral diagonal and
//! half-integral off-diagonal entries is stored as its doubled gram matrix
//! G = 2T, which is an integer symmetric matrix with even diagonal.  All
//! operations are exact.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::linalg::{self, IMat};
use crate::{Error, Result};

/// Unimodular (or at least integer) square matrix in machine precision,
/// row-major.
pub type Unimod = Vec<Vec<i64>>;

pub fn mat_identity(n: usize) -> Unimod {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn mat_mul(a: &Unimod, b: &Unimod) -> Unimod {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc: i128 = 0;
                    for t in 0..k {
                        acc += a[i][t] as i128 * b[t][j] as i128;
                    }
                    i64::try_from(acc).expect("matrix entry overflow")
                })
                .collect()
        })
        .collect()
}

pub fn mat_transpose(a: &Unimod) -> Unimod {
    let n = a.len();
    let m = if n == 0 { 0 } else { a[0].len() };
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn mat_det(a: &Unimod) -> BigInt {
    IMat::from_i64_rows(a).det()
}

pub fn mat_inverse_unimodular(a: &Unimod) -> Unimod {
    IMat::from_i64_rows(a)
        .inverse_unimodular()
        .to_i64()
        .expect("inverse entries overflow")
}

/// U * G * U^t for a symmetric integer matrix G.
pub fn congruence(u: &Unimod, g: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let ug = mat_mul(u, &g.to_vec());
    mat_mul(&ug, &mat_transpose(u))
}

/// An element of Lambda^n: G = 2T, integer symmetric, even diagonal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HalfIntegralMatrix {
    pub n: usize,
    g: Vec<i64>, // row-major n x n
}

impl std::fmt::Debug for HalfIntegralMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "2T{:?}", self.rows())
    }
}

impl HalfIntegralMatrix {
    /// Build from the doubled gram matrix G = 2T (full row-major entries).
    pub fn from_doubled(n: usize, g: Vec<i64>) -> Result<Self> {
        if g.len() != n * n {
            return Err(Error::Invalid(format!("expected {} entries, got {}", n * n, g.len())));
        }
        for i in 0..n {
            if g[i * n + i] % 2 != 0 {
                return Err(Error::Invalid("diagonal of 2T must be even".into()));
            }
            for j in 0..n {
                if g[i * n + j] != g[j * n + i] {
                    return Err(Error::Invalid("matrix must be symmetric".into()));
                }
            }
        }
        Ok(HalfIntegralMatrix { n, g })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        let mut g = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Invalid("non-square matrix".into()));
            }
            g.extend_from_slice(r);
        }
        HalfIntegralMatrix::from_doubled(n, g)
    }

    pub fn zero(n: usize) -> Self {
        HalfIntegralMatrix { n, g: vec![0; n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> i64 {
        self.g[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.at(i, j)).collect()).collect()
    }

    pub fn entries(&self) -> &[i64] {
        &self.g
    }

    /// Upper triangle of G, row-major: the external text form.
    pub fn upper_triangle(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.n * (self.n + 1) / 2);
        for i in 0..self.n {
            for j in i..self.n {
                out.push(self.at(i, j));
            }
        }
        out
    }

    pub fn from_upper_triangle(n: usize, up: &[i64]) -> Result<Self> {
        if up.len() != n * (n + 1) / 2 {
            return Err(Error::Parse(format!(
                "expected {} upper-triangle entries, got {}",
                n * (n + 1) / 2,
                up.len()
            )));
        }
        let mut g = vec![0i64; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                g[i * n + j] = up[k];
                g[j * n + i] = up[k];
                k += 1;
            }
        }
        HalfIntegralMatrix::from_doubled(n, g)
    }

    /// trace(G) = 2 trace(T).
    pub fn trace_g(&self) -> i64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    /// trace(T), a nonnegative integer for PSD elements.
    pub fn trace_t(&self) -> i64 {
        self.trace_g() / 2
    }

    pub fn to_imat(&self) -> IMat {
        IMat::from_i64_rows(&self.rows())
    }

    /// det(G) = det(2T).
    pub fn det_doubled(&self) -> BigInt {
        self.to_imat().det()
    }

    /// Exact positive semidefiniteness of T: all principal minors of G are >= 0.
    pub fn is_psd(&self) -> bool {
        let m = self.to_imat();
        for mask in 1u64..(1u64 << self.n) {
            let idx: Vec<usize> = (0..self.n).filter(|i| mask >> i & 1 == 1).collect();
            let sub = IMat::from_fn(idx.len(), idx.len(), |a, b| {
                m.at(idx[a], idx[b]).clone()
            });
            if sub.det().is_negative() {
                return false;
            }
        }
        true
    }

    /// Positive definiteness via leading principal minors.
    pub fn is_definite(&self) -> bool {
        let m = self.to_imat();
        for k in 1..=self.n {
            let sub = IMat::from_fn(k, k, |a, b| m.at(a, b).clone());
            if !sub.det().is_positive() {
                return false;
            }
        }
        self.n > 0
    }

    pub fn rank(&self) -> usize {
        self.to_imat().rank()
    }

    /// Apply a unimodular congruence: result = U T U^t (on G: U G U^t).
    pub fn transform(&self, u: &Unimod) -> HalfIntegralMatrix {
        let g = congruence(u, &self.rows());
        HalfIntegralMatrix::from_rows(&g).expect("congruence preserves symmetry and even diagonal")
    }

    /// Comparison key: entries mapped to (|x|, sign) so that e.g. the gram
    /// matrix [[2,1],[1,2]] precedes its twin [[2,-1],[-1,2]].
    fn mapped_key(&self) -> Vec<(i64, bool)> {
        self.g.iter().map(|&x| (x.abs(), x < 0)).collect()
    }
}

impl PartialOrd for HalfIntegralMatrix {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HalfIntegralMatrix {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.trace_g().cmp(&other.trace_g()))
            .then_with(|| self.mapped_key().cmp(&other.mapped_key()))
    }
}

/// Exact block diagonalization U T U^t = blockdiag(0_{n-r}, definite part).
pub struct RadicalSplit {
    pub u: Unimod,
    pub rank: usize,
    pub definite_part: HalfIntegralMatrix,
}

pub fn radical_split(a: &HalfIntegralMatrix) -> Result<RadicalSplit> {
    if !a.is_psd() {
        return Err(Error::NotPsd);
    }
    let n = a.n;
    let g = a.to_imat();
    let ker = linalg::kernel(&g); // columns, saturated
    let k = ker.cols;
    let r = n - k;
    let u = if k == 0 {
        mat_identity(n)
    } else if k == n {
        mat_identity(n)
    } else {
        let rows = ker.transpose();
        linalg::complete_rows_to_unimodular(&rows)
            .to_i64()
            .expect("unimodular completion overflow")
    };
    let transformed = a.transform(&u);
    // kernel rows first: top-left (n-r) x (n-r) block must vanish
    for i in 0..n {
        for j in 0..n {
            if (i < k || j < k) && transformed.at(i, j) != 0 {
                panic!("radical split failed to isolate the kernel block");
            }
        }
    }
    let def_rows: Vec<Vec<i64>> =
        (k..n).map(|i| (k..n).map(|j| transformed.at(i, j)).collect()).collect();
    let definite_part = HalfIntegralMatrix::from_rows(&def_rows)?;
    debug_assert!(r == 0 || definite_part.is_definite());
    Ok(RadicalSplit { u, rank: r, definite_part })
}

// ---------------------------------------------------------------------------
// canonical form
// ---------------------------------------------------------------------------

fn transforms_bound2(r: usize) -> std::sync::Arc<Vec<Unimod>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<Vec<Unimod>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(v) = guard.get(&r) {
        return v.clone();
    }
    let mut out = Vec::new();
    let total = 5u64.pow((r * r) as u32);
    let mut entries = vec![0i64; r * r];
    for code in 0..total {
        let mut c = code;
        for e in entries.iter_mut() {
            *e = (c % 5) as i64 - 2;
            c /= 5;
        }
        let m: Unimod = (0..r).map(|i| entries[i * r..(i + 1) * r].to_vec()).collect();
        let d = det_i64(&m);
        if d == 1 || d == -1 {
            out.push(m);
        }
    }
    let arc = std::sync::Arc::new(out);
    guard.insert(r, arc.clone());
    arc
}

fn det_i64(m: &Unimod) -> i64 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => mat_det(m).to_i64().expect("determinant overflow"),
    }
}

fn key_of(g: &[Vec<i64>]) -> Vec<(i64, bool)> {
    g.iter().flatten().map(|&x| (x.abs(), x < 0)).collect()
}

/// Greedy size reduction of a definite gram matrix: sort by diagonal, then
/// shear off-diagonal entries toward zero; iterate to a fixpoint.
fn greedy_reduce(g: &[Vec<i64>]) -> (Vec<Vec<i64>>, Unimod) {
    let r = g.len();
    let mut cur = g.to_vec();
    let mut u = mat_identity(r);
    for _ in 0..200 {
        let mut changed = false;
        // stable sort rows/cols by diagonal
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by_key(|&i| cur[i][i]);
        if order != (0..r).collect::<Vec<_>>() {
            let perm: Unimod = (0..r)
                .map(|i| (0..r).map(|j| i64::from(order[i] == j)).collect())
                .collect();
            cur = congruence(&perm, &cur);
            u = mat_mul(&perm, &u);
            changed = true;
        }
        for i in 0..r {
            for j in 0..r {
                if i == j || cur[i][i] == 0 {
                    continue;
                }
                // e_j <- e_j - q e_i with q = round(G_ij / G_ii)
                let num = cur[i][j];
                let den = cur[i][i];
                let q = div_round(num, den);
                if q != 0 {
                    let mut s = mat_identity(r);
                    s[j][i] = -q;
                    cur = congruence(&s, &cur);
                    u = mat_mul(&s, &u);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (cur, u)
}

fn div_round(num: i64, den: i64) -> i64 {
    // round half toward zero, deterministic
    let q = num / den;
    let rem = num - q * den;
    if 2 * rem.abs() > den.abs() {
        q + rem.signum() * den.signum()
    } else {
        q
    }
}

/// Exhaustive lexicographic-key minimization over unimodular transforms with
/// entries in [-2, 2], iterated to a fixpoint.  Cached per input.
fn exhaust_minimize(g: &[Vec<i64>]) -> (Vec<Vec<i64>>, Unimod) {
    let r = g.len();
    if r == 0 {
        return (vec![], vec![]);
    }
    if r > 3 {
        // bound-2 search space is infeasible beyond 3x3; greedy reduction is
        // the best effort there and desk-scale inputs stay within 3x3
        return (g.to_vec(), mat_identity(r));
    }
    static CACHE: OnceLock<Mutex<HashMap<Vec<i64>, (Vec<Vec<i64>>, Unimod)>>> = OnceLock::new();
    let flat: Vec<i64> = g.iter().flatten().copied().collect();
    {
        let guard = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
        if let Some(hit) = guard.get(&flat) {
            return hit.clone();
        }
    }
    let transforms = transforms_bound2(r);
    let mut cur = g.to_vec();
    let mut u = mat_identity(r);
    loop {
        let mut best_key = key_of(&cur);
        let mut best: Option<(Vec<Vec<i64>>, &Unimod)> = None;
        for v in transforms.iter() {
            let cand = congruence(v, &cur);
            let k = key_of(&cand);
            if k < best_key {
                best_key = k;
                best = Some((cand, v));
            }
        }
        match best {
            Some((cand, v)) => {
                u = mat_mul(v, &u);
                cur = cand;
            }
            None => break,
        }
    }
    let result = (cur, u);
    CACHE
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap()
        .insert(flat, result.clone());
    result
}

/// Canonical representative of the GL(n,Z)-orbit of a PSD half-integral
/// matrix, with a witness U satisfying U T U^t = T_can.
pub fn canonical(a: &HalfIntegralMatrix) -> Result<(HalfIntegralMatrix, Unimod)> {
    if !a.is_psd() {
        return Err(Error::NotPsd);
    }
    let n = a.n;
    let mut best = a.clone();
    let mut best_u = mat_identity(n);
    for _ in 0..64 {
        let split = radical_split(&best)?;
        let r = split.rank;
        let (reduced, v) = greedy_reduce(&split.definite_part.rows());
        let (minimized, w) = exhaust_minimize(&reduced);
        let wv = mat_mul(&w, &v);
        // embed into blockdiag(I_{n-r}, wv)
        let mut emb = mat_identity(n);
        for i in 0..r {
            for j in 0..r {
                emb[n - r + i][n - r + j] = wv[i][j];
            }
        }
        let step = mat_mul(&emb, &split.u);
        let mut g = vec![vec![0i64; n]; n];
        for i in 0..r {
            for j in 0..r {
                g[n - r + i][n - r + j] = minimized[i][j];
            }
        }
        let cand = HalfIntegralMatrix::from_rows(&g)?;
        let u = mat_mul(&step, &best_u);
        debug_assert_eq!(a.transform(&u), cand);
        if cand.mapped_key() < best.mapped_key() {
            best = cand;
            best_u = u;
        } else {
            return Ok((best, best_u));
        }
    }
    Ok((best, best_u))
}

// ---------------------------------------------------------------------------
// short vectors, isometry, automorphisms
// ---------------------------------------------------------------------------

/// Rational Cholesky data Q(x) = sum_i d_i (x_i + sum_{j>i} l_ij x_j)^2 for a
/// positive definite integer gram matrix.
struct Cholesky {
    d: Vec<BigRational>,
    l: Vec<Vec<BigRational>>,
}

fn cholesky(g: &[Vec<i64>]) -> Cholesky {
    let r = g.len();
    let mut q: Vec<Vec<BigRational>> = g
        .iter()
        .map(|row| row.iter().map(|&x| BigRational::from(BigInt::from(x))).collect())
        .collect();
    let mut d = vec![BigRational::zero(); r];
    let mut l = vec![vec![BigRational::zero(); r]; r];
    for i in 0..r {
        d[i] = q[i][i].clone();
        assert!(d[i].is_positive(), "gram matrix must be positive definite");
        for j in i + 1..r {
            l[i][j] = &q[i][j] / &q[i][i];
        }
        for k in i + 1..r {
            for m in k..r {
                let v = &q[k][m] - &q[i][k] * &q[i][m] / &q[i][i];
                q[k][m] = v.clone();
                q[m][k] = v;
            }
        }
    }
    Cholesky { d, l }
}

/// Largest integer <= center + sqrt(t) (t >= 0), exactly.
fn floor_center_plus_sqrt(center: &BigRational, t: &BigRational) -> i64 {
    let cf = center.to_f64().unwrap_or(0.0);
    let tf = t.to_f64().unwrap_or(0.0).max(0.0);
    let mut x = (cf + tf.sqrt()).floor() as i64;
    // fix up exactly: want x <= center + sqrt(t) < x + 1
    let le = |v: i64| -> bool {
        // v <= center + sqrt(t)  <=>  v - center <= sqrt(t)
        let u = BigRational::from(BigInt::from(v)) - center;
        !u.is_positive() || &u * &u <= *t
    };
    while !le(x) {
        x -= 1;
    }
    while le(x + 1) {
        x += 1;
    }
    x
}

/// All x in Z^r with x^t G x = norm, for G positive definite.  Deterministic
/// order.  norm = 0 yields the zero vector only.
pub fn vectors_of_norm(g: &[Vec<i64>], norm: i64) -> Vec<Vec<i64>> {
    let r = g.len();
    if norm < 0 {
        return vec![];
    }
    if r == 0 {
        return if norm == 0 { vec![vec![]] } else { vec![] };
    }
    if norm == 0 {
        return vec![vec![0; r]];
    }
    let ch = cholesky(g);
    let target = BigRational::from(BigInt::from(norm));
    let mut out = Vec::new();
    let mut x = vec![0i64; r];
    // recurse from the last coordinate down
    fn rec(
        ch: &Cholesky,
        i: usize,
        x: &mut Vec<i64>,
        budget: &BigRational,
        target: &BigRational,
        out: &mut Vec<Vec<i64>>,
    ) {
        let center: BigRational = (i + 1..x.len())
            .map(|j| &ch.l[i][j] * BigRational::from(BigInt::from(x[j])))
            .sum();
        let t = budget / &ch.d[i];
        if t.is_negative() {
            return;
        }
        let hi = floor_center_plus_sqrt(&(-center.clone()), &t);
        let lo = -floor_center_plus_sqrt(&center, &t);
        for v in lo..=hi {
            x[i] = v;
            let term = BigRational::from(BigInt::from(v)) + &center;
            let used = &ch.d[i] * &term * &term;
            let rem = budget - &used;
            if rem.is_negative() {
                continue;
            }
            if i == 0 {
                if rem.is_zero() {
                    out.push(x.clone());
                }
            } else {
                rec(ch, i - 1, x, &rem, target, out);
            }
        }
        x[i] = 0;
    }
    rec(&ch, r - 1, &mut x, &target, &target, &mut out);
    out
}

fn dot_g(g: &[Vec<i64>], a: &[i64], b: &[i64]) -> i64 {
    let r = g.len();
    let mut acc: i128 = 0;
    for i in 0..r {
        for j in 0..r {
            acc += a[i] as i128 * g[i][j] as i128 * b[j] as i128;
        }
    }
    i64::try_from(acc).expect("inner product overflow")
}

/// Backtracking search for all U with U A_T U^t = B_T (rows of U are the
/// images of the basis vectors). `first_only` stops at the first witness.
fn isometry_search(a: &HalfIntegralMatrix, b: &HalfIntegralMatrix, first_only: bool) -> Vec<Unimod> {
    let n = a.n;
    let ga = a.rows();
    let gb = b.rows();
    let mut results = Vec::new();
    if a.det_doubled() != b.det_doubled() {
        return results;
    }
    // candidate vectors per row, grouped by required norm
    let mut norm_lists: HashMap<i64, Vec<Vec<i64>>> = HashMap::new();
    for i in 0..n {
        norm_lists
            .entry(gb[i][i])
            .or_insert_with(|| vectors_of_norm(&ga, gb[i][i]));
    }
    let mut rows: Vec<Vec<i64>> = Vec::new();
    fn rec(
        i: usize,
        n: usize,
        ga: &[Vec<i64>],
        gb: &[Vec<i64>],
        norm_lists: &HashMap<i64, Vec<Vec<i64>>>,
        rows: &mut Vec<Vec<i64>>,
        results: &mut Vec<Unimod>,
        first_only: bool,
    ) {
        if i == n {
            results.push(rows.clone());
            return;
        }
        for cand in &norm_lists[&gb[i][i]] {
            if rows.iter().enumerate().any(|(j, prev)| dot_g(ga, prev, cand) != gb[j][i]) {
                continue;
            }
            rows.push(cand.clone());
            rec(i + 1, n, ga, gb, norm_lists, rows, results, first_only);
            rows.pop();
            if first_only && !results.is_empty() {
                return;
            }
        }
    }
    rec(0, n, &ga, &gb, &norm_lists, &mut rows, &mut results, first_only);
    results
}

/// Exact orbit test for definite forms: some unimodular U with U A U^t = B.
pub fn isometric(a: &HalfIntegralMatrix, b: &HalfIntegralMatrix) -> Option<Unimod> {
    if a.n != b.n {
        return None;
    }
    isometry_search(a, b, true).into_iter().next()
}

/// The full (finite) automorphism group of a definite form.
pub fn automorphisms(a: &HalfIntegralMatrix) -> Result<Vec<Unimod>> {
    if a.n == 0 {
        return Ok(vec![vec![]]);
    }
    if !a.is_definite() {
        return Err(Error::NotDefinite);
    }
    Ok(isometry_search(a, a, false))
}

// ---------------------------------------------------------------------------
// enumeration
// ---------------------------------------------------------------------------

/// One canonical representative per GL(n,Z)-orbit of PSD elements of Lambda^n
/// with trace(T) <= bound, sorted by (trace, key).
pub fn enumerate(n: usize, bound: i64) -> Vec<HalfIntegralMatrix> {
    let mut seen = std::collections::BTreeSet::new();
    for raw in enumerate_raw(n, bound) {
        let (can, _) = canonical(&raw).expect("raw enumeration yields PSD matrices");
        seen.insert(can);
    }
    seen.into_iter().collect()
}

/// All raw PSD matrices (no canonicalization) with trace(T) <= bound.  The
/// off-diagonal box uses the PSD necessary condition g_ij^2 <= g_ii g_jj.
pub fn enumerate_raw(n: usize, bound: i64) -> Vec<HalfIntegralMatrix> {
    let mut out = Vec::new();
    let mut diag = vec![0i64; n];
    fn diag_rec(n: usize, i: usize, rem: i64, diag: &mut Vec<i64>, out: &mut Vec<HalfIntegralMatrix>) {
        if i == n {
            fill_offdiag(n, diag, out);
            return;
        }
        let mut d = 0;
        while d <= rem {
            diag[i] = d;
            diag_rec(n, i + 1, rem - d, diag, out);
            d += 2;
        }
        diag[i] = 0;
    }
    fn fill_offdiag(n: usize, diag: &[i64], out: &mut Vec<HalfIntegralMatrix>) {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut g = vec![vec![0i64; n]; n];
        for (i, &d) in diag.iter().enumerate() {
            g[i][i] = d;
        }
        fn rec(
            k: usize,
            pairs: &[(usize, usize)],
            g: &mut Vec<Vec<i64>>,
            out: &mut Vec<HalfIntegralMatrix>,
        ) {
            if k == pairs.len() {
                let m = HalfIntegralMatrix::from_rows(g).unwrap();
                if m.is_psd() {
                    out.push(m);
                }
                return;
            }
            let (i, j) = pairs[k];
            let prod = g[i][i] * g[j][j];
            let mut b = 0i64;
            while b * b <= prod {
                b += 1;
            }
            b -= 1;
            for v in -b..=b {
                g[i][j] = v;
                g[j][i] = v;
                rec(k + 1, pairs, g, out);
            }
            g[i][j] = 0;
            g[j][i] = 0;
        }
        rec(0, &pairs, &mut g, out);
    }
    if n == 0 {
        out.push(HalfIntegralMatrix::zero(0));
        return out;
    }
    diag_rec(n, 0, 2 * bound, &mut diag, &mut out);
    out
}

// ---------------------------------------------------------------------------
// block operations and sublattices
// ---------------------------------------------------------------------------

/// blockdiag(0_{n-r}, T): the embedding used by F^0 and the Phi-operator.
pub fn block_embed(t: &HalfIntegralMatrix, n: usize) -> HalfIntegralMatrix {
    assert!(t.n <= n);
    let k = n - t.n;
    let mut g = vec![vec![0i64; n]; n];
    for i in 0..t.n {
        for j in 0..t.n {
            g[k + i][k + j] = t.at(i, j);
        }
    }
    HalfIntegralMatrix::from_rows(&g).unwrap()
}

pub fn orthogonal_sum(a: &HalfIntegralMatrix, b: &HalfIntegralMatrix) -> HalfIntegralMatrix {
    let n = a.n + b.n;
    let mut g = vec![vec![0i64; n]; n];
    for i in 0..a.n {
        for j in 0..a.n {
            g[i][j] = a.at(i, j);
        }
    }
    for i in 0..b.n {
        for j in 0..b.n {
            g[a.n + i][a.n + j] = b.at(i, j);
        }
    }
    HalfIntegralMatrix::from_rows(&g).unwrap()
}

/// Assemble [[S1, S2],[S2^t, T]] from blocks, where `s2_doubled` holds the
/// integer matrix 2*S2 (shape s x r).
pub fn assemble_blocks(
    s1: &HalfIntegralMatrix,
    s2_doubled: &[Vec<i64>],
    t: &HalfIntegralMatrix,
) -> HalfIntegralMatrix {
    let s = s1.n;
    let r = t.n;
    let n = s + r;
    let mut g = vec![vec![0i64; n]; n];
    for i in 0..s {
        for j in 0..s {
            g[i][j] = s1.at(i, j);
        }
    }
    for i in 0..r {
        for j in 0..r {
            g[s + i][s + j] = t.at(i, j);
        }
    }
    for i in 0..s {
        for j in 0..r {
            g[i][s + j] = s2_doubled[i][j];
            g[s + j][i] = s2_doubled[i][j];
        }
    }
    HalfIntegralMatrix::from_rows(&g).unwrap()
}

/// HNF basis (as columns) of the lattice {u in Z^r : (2T) u = 0 mod p^t}.
/// For t = 0 the lattice is all of Z^r and R is unimodular.
pub fn sublattice_matrix(t: &HalfIntegralMatrix, p: u64, texp: u32) -> Result<IMat> {
    let r = t.n;
    let g = t.to_imat();
    if g.rank() != r {
        return Err(Error::NotFullRank);
    }
    let modulus = BigInt::from(p).pow(texp);
    let s = linalg::snf(&g);
    let mut scaled = IMat::zeros(r, r);
    for j in 0..r {
        let d = &s.divisors[j];
        let gcd = num_integer::Integer::gcd(d, &modulus);
        let scale = &modulus / gcd;
        for i in 0..r {
            scaled.set(i, j, s.v.at(i, j) * &scale);
        }
    }
    linalg::hnf_columns(&scaled)
}

/// Gram of the sublattice with basis R inside (Z^r, T): doubled gram of
/// curly-R = R^t T R, i.e. 2*curly-R = R^t (2T) R.
pub fn gram_of_sublattice(t: &HalfIntegralMatrix, r: &IMat) -> HalfIntegralMatrix {
    let g = t.to_imat();
    let prod = r.transpose().mul(&g).mul(r);
    let rows: Vec<Vec<i64>> = prod
        .to_i64()
        .expect("sublattice gram entries overflow i64");
    HalfIntegralMatrix::from_rows(&rows).expect("R^t G R stays even-diagonal symmetric")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn him(rows: &[&[i64]]) -> HalfIntegralMatrix {
        HalfIntegralMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_unimod(rng: &mut SplitMix64, n: usize, steps: usize) -> Unimod {
        let mut u = mat_identity(n);
        for _ in 0..steps {
            let i = rng.range_i64(0, n as i64 - 1) as usize;
            let mut j = rng.range_i64(0, n as i64 - 1) as usize;
            if n > 1 && i == j {
                j = (j + 1) % n;
            }
            if i == j {
                continue;
            }
            let q = rng.range_i64(-2, 2);
            let mut e = mat_identity(n);
            e[i][j] = q;
            u = mat_mul(&e, &u);
        }
        u
    }

    #[test]
    fn psd_examples() {
        assert!(HalfIntegralMatrix::zero(2).is_psd());
        assert!(him(&[&[4, 2], &[2, 4]]).is_psd());
        // T = [[1,2],[2,1]] has det -3
        assert!(!him(&[&[2, 4], &[4, 2]]).is_psd());
    }

    #[test]
    fn psd_matches_brute_force_on_random() {
        // is_psd is itself the 2^n principal-minor brute force; here we
        // cross-check against an independent rational-eigen-free criterion:
        // x^t G x >= 0 on a box of integer vectors (necessary condition),
        // plus definiteness of the definite part after the radical split.
        let mut rng = SplitMix64::new(5);
        for _ in 0..500 {
            let n = rng.range_i64(1, 3) as usize;
            let mut g = vec![vec![0i64; n]; n];
            for i in 0..n {
                g[i][i] = 2 * rng.range_i64(0, 3);
                for j in i + 1..n {
                    let v = rng.range_i64(-3, 3);
                    g[i][j] = v;
                    g[j][i] = v;
                }
            }
            let m = HalfIntegralMatrix::from_rows(&g).unwrap();
            let psd = m.is_psd();
            // sample quadratic values
            let mut neg = false;
            let mut x = vec![-2i64; n];
            loop {
                if dot_g(&g, &x, &x) < 0 {
                    neg = true;
                }
                let mut k = 0;
                loop {
                    if k == n {
                        break;
                    }
                    x[k] += 1;
                    if x[k] <= 2 {
                        break;
                    }
                    x[k] = -2;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
            if neg {
                assert!(!psd, "negative value found but is_psd says true: {:?}", g);
            }
            if psd {
                assert!(radical_split(&m).is_ok());
            }
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(HalfIntegralMatrix::zero(3).rank(), 0);
        assert_eq!(him(&[&[2, 2], &[2, 2]]).rank(), 1);
        assert_eq!(him(&[&[0, 0], &[0, 2]]).rank(), 1);
        assert_eq!(him(&[&[4, 2], &[2, 4]]).rank(), 2);
    }

    #[test]
    fn radical_split_examples() {
        // T = [[1,1],[1,1]] -> rank 1, definite part [1] (gram [2])
        let m = him(&[&[2, 2], &[2, 2]]);
        let s = radical_split(&m).unwrap();
        assert_eq!(s.rank, 1);
        assert_eq!(s.definite_part.rows(), vec![vec![2]]);
        // definite input: rank n
        let m = him(&[&[4, 2], &[2, 4]]);
        let s = radical_split(&m).unwrap();
        assert_eq!(s.rank, 2);
        // invariant check: U T U^t = blockdiag(0, def)
        let m = him(&[&[2, 2, 0], &[2, 2, 0], &[0, 0, 4]]);
        let s = radical_split(&m).unwrap();
        assert_eq!(s.rank, 2);
        let t = m.transform(&s.u);
        assert_eq!(t.at(0, 0), 0);
        assert_eq!(t.at(0, 1), 0);
        assert_eq!(t.at(0, 2), 0);
    }

    #[test]
    fn canonical_orbit_invariance() {
        let mut rng = SplitMix64::new(11);
        let samples = [
            him(&[&[2, 0], &[0, 2]]),
            him(&[&[2, 1], &[1, 2]]),
            him(&[&[2, 2], &[2, 2]]),
            him(&[&[0, 0], &[0, 4]]),
            him(&[&[2, 1, 0], &[1, 2, 0], &[0, 0, 2]]),
            HalfIntegralMatrix::zero(2),
        ];
        for _ in 0..100 {
            let base = &samples[(rng.next_u64() % samples.len() as u64) as usize];
            let u = random_unimod(&mut rng, base.n, 8);
            let moved = base.transform(&u);
            let (c1, w1) = canonical(base).unwrap();
            let (c2, w2) = canonical(&moved).unwrap();
            assert_eq!(c1, c2, "orbit representatives differ");
            assert_eq!(base.transform(&w1), c1);
            assert_eq!(moved.transform(&w2), c2);
        }
    }

    #[test]
    fn canonical_idempotent_and_a2_fixed_point() {
        let a2 = him(&[&[4, 2], &[2, 4]]);
        let (c, _) = canonical(&a2).unwrap();
        assert_eq!(c, a2, "A2 gram should be its own canonical form");
        let (c2, u2) = canonical(&c).unwrap();
        assert_eq!(c2, c);
        assert_eq!(c.transform(&u2), c2);
        // rank 0
        let z = HalfIntegralMatrix::zero(3);
        let (c, u) = canonical(&z).unwrap();
        assert_eq!(c, z);
        assert_eq!(u, mat_identity(3));
    }

    #[test]
    fn isometric_examples() {
        let a2 = him(&[&[4, 2], &[2, 4]]);
        let w = isometric(&a2, &a2).unwrap();
        assert_eq!(a2.transform(&w), a2);
        // diag(1,1) vs A2 class: determinants 4 vs 3 differ
        let i2 = him(&[&[2, 0], &[0, 2]]);
        assert!(isometric(&i2, &a2).is_none());
        // random conjugate has a witness
        let mut rng = SplitMix64::new(3);
        let u = random_unimod(&mut rng, 2, 6);
        let moved = a2.transform(&u);
        let w = isometric(&a2, &moved).unwrap();
        assert_eq!(a2.transform(&w), moved);
    }

    #[test]
    fn automorphism_groups() {
        // T = [1]: {+-1}
        let m = him(&[&[2]]);
        assert_eq!(automorphisms(&m).unwrap().len(), 2);
        // A2 gram (as T): order 12
        let a2 = him(&[&[4, 2], &[2, 4]]);
        let auts = automorphisms(&a2).unwrap();
        assert_eq!(auts.len(), 12);
        // group closure and +-I membership
        let id = mat_identity(2);
        let neg: Unimod = vec![vec![-1, 0], vec![0, -1]];
        assert!(auts.contains(&id));
        assert!(auts.contains(&neg));
        for a in &auts {
            let inv = mat_inverse_unimodular(a);
            assert!(auts.contains(&inv));
            for b in auts.iter().take(4) {
                assert!(auts.contains(&mat_mul(a, b)));
            }
        }
        // diag(1,2): order 4
        let d = him(&[&[2, 0], &[0, 4]]);
        assert_eq!(automorphisms(&d).unwrap().len(), 4);
        // non-definite input rejected
        assert!(matches!(automorphisms(&him(&[&[2, 2], &[2, 2]])), Err(Error::NotDefinite)));
    }

    #[test]
    fn enumerate_small() {
        // (2, 0) -> {0}
        assert_eq!(enumerate(2, 0).len(), 1);
        // (2, 1) -> {0, canonical(diag(1,0))}
        let e = enumerate(2, 1);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0], HalfIntegralMatrix::zero(2));
        assert_eq!(e[1], him(&[&[0, 0], &[0, 2]]));
        // (1, 2) -> {0, [1], [2]}
        let e = enumerate(1, 2);
        assert_eq!(e.len(), 3);
        // duplicate-freeness via isometry on definite members
        let e = enumerate(2, 2);
        for (i, a) in e.iter().enumerate() {
            for b in e.iter().skip(i + 1) {
                if a.is_definite() && b.is_definite() {
                    assert!(isometric(a, b).is_none(), "{:?} ~ {:?}", a, b);
                }
            }
        }
        // closure: canonicalizing any raw PSD with trace <= B yields a member
        for raw in enumerate_raw(2, 2) {
            let (c, _) = canonical(&raw).unwrap();
            assert!(e.contains(&c), "missing class {:?}", c);
        }
    }

    #[test]
    fn block_ops() {
        let t = him(&[&[2]]);
        let e = block_embed(&t, 2);
        assert_eq!(e.rows(), vec![vec![0, 0], vec![0, 2]]);
        assert_eq!(block_embed(&t, 1), t);
        assert_eq!(e.rank(), t.rank());
        let s = orthogonal_sum(&t, &t);
        assert_eq!(s.n, 2);
        assert_eq!(s.rank(), 2);
        let z = orthogonal_sum(&HalfIntegralMatrix::zero(1), &HalfIntegralMatrix::zero(2));
        assert_eq!(z, HalfIntegralMatrix::zero(3));
    }

    #[test]
    fn sublattice_examples() {
        // T = I_r (G = 2I), p=3, t=1: R = 3I
        let t = him(&[&[2, 0], &[0, 2]]);
        let r = sublattice_matrix(&t, 3, 1).unwrap();
        assert_eq!(r.to_i64().unwrap(), vec![vec![3, 0], vec![0, 3]]);
        // t = 0: unimodular
        let r = sublattice_matrix(&t, 3, 0).unwrap();
        assert_eq!(r.det().abs(), BigInt::from(1));
        // T = A2 gram, p=3, t=1: index 3
        let a2 = him(&[&[4, 2], &[2, 4]]);
        let r = sublattice_matrix(&a2, 3, 1).unwrap();
        assert_eq!(r.det().abs(), BigInt::from(3));
        // every column satisfies (2T) c = 0 mod p^t
        let g = a2.to_imat();
        let prod = g.mul(&r);
        for i in 0..2 {
            for j in 0..2 {
                assert!((prod.at(i, j) % BigInt::from(3)).is_zero());
            }
        }
    }

    #[test]
    fn sublattice_index_matches_divisor_formula() {
        let mut rng = SplitMix64::new(21);
        for _ in 0..60 {
            let n = rng.range_i64(1, 3) as usize;
            // random definite gram via V V^t-ish construction
            let u = random_unimod(&mut rng, n, 6);
            let scale: Vec<i64> = (0..n).map(|_| 2 * rng.range_i64(1, 3)).collect();
            let mut g = vec![vec![0i64; n]; n];
            for i in 0..n {
                g[i][i] = scale[i];
            }
            let m = HalfIntegralMatrix::from_rows(&congruence(&u, &g)).unwrap();
            for &p in &[3u64, 5] {
                for texp in 0..3u32 {
                    let r = sublattice_matrix(&m, p, texp).unwrap();
                    let index = r.det().abs();
                    let s = linalg::snf(&m.to_imat());
                    let mut expected = 0u32;
                    for d in &s.divisors {
                        let e = linalg::p_valuation(d, p);
                        expected += texp - e.min(texp);
                    }
                    assert_eq!(index, BigInt::from(p).pow(expected), "p={} t={}", p, texp);
                }
            }
        }
    }

    #[test]
    fn gram_of_sublattice_examples() {
        let t = him(&[&[2, 0], &[0, 2]]);
        let r = IMat::from_i64_rows(&[vec![3, 0], vec![0, 3]]);
        let g = gram_of_sublattice(&t, &r);
        assert_eq!(g.rows(), vec![vec![18, 0], vec![0, 18]]); // 9 * T doubled
        let id = IMat::identity(2);
        assert_eq!(gram_of_sublattice(&t, &id), t);
        // det multiplicativity
        let a2 = him(&[&[4, 2], &[2, 4]]);
        let r = sublattice_matrix(&a2, 3, 1).unwrap();
        let g = gram_of_sublattice(&a2, &r);
        assert_eq!(g.det_doubled(), r.det().pow(2) * a2.det_doubled());
    }

    #[test]
    fn vectors_of_norm_a2() {
        // A2 gram: 6 vectors of norm 2, none of norm 4(? norm 4 = 2*2: x^t G x = 4)
        let g = vec![vec![2, 1], vec![1, 2]];
        assert_eq!(vectors_of_norm(&g, 2).len(), 6);
        assert_eq!(vectors_of_norm(&g, 4).len(), 0);
        assert_eq!(vectors_of_norm(&g, 6).len(), 6);
        assert_eq!(vectors_of_norm(&g, 8).len(), 6);
        assert_eq!(vectors_of_norm(&g, 0), vec![vec![0, 0]]);
    }
}
