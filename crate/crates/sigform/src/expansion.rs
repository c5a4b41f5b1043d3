//! Truncated Fourier expansions of vector-valued Siegel modular forms.
//! Coefficients are stored only at canonical representatives; values at other
//! index matrices are reconstructed through the equivariance relation
//! a(U T U^t) = chi(det U) rho(U) a(T).  Partial twists are recorded as lazy
//! support predicates on the raw queried matrix, because a twisted form is no
//! longer GL(n,Z)-equivariant and canonical-key storage would destroy its
//! support information.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::symmat::{self, HalfIntegralMatrix, Unimod};
use crate::weylrep::{self, IntegralRep};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSpec {
    pub n_level: u64,
    pub nprime: u64,
    pub p_power: u64,
    /// chi(-1): +1 or -1 (+1 for the trivial character).
    pub char_parity: i64,
}

impl LevelSpec {
    pub fn trivial() -> Self {
        LevelSpec { n_level: 1, nprime: 1, p_power: 1, char_parity: 1 }
    }
}

/// Support restriction from the partial twist of a block split (n-r, r):
/// keep coefficients whose off-diagonal block satisfies 2*S2 = 0 mod p^t.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistSpec {
    pub p: u64,
    pub t: u32,
    pub split_r: usize,
}

pub struct FourierExpansion {
    pub n: usize,
    pub rep: Arc<IntegralRep>,
    pub level: LevelSpec,
    /// 0 = exact integers, otherwise p^m and entries are residues.
    pub modulus: u64,
    pub trace_bound: i64,
    /// strict: a key inside the bound missing from the map is an error rather
    /// than an implicit zero.
    pub strict: bool,
    pub twists: Vec<TwistSpec>,
    pub coeffs: BTreeMap<HalfIntegralMatrix, Vec<BigInt>>,
}

impl FourierExpansion {
    pub fn ell(&self) -> usize {
        self.rep.ell
    }

    pub fn chi(&self, det: i64) -> i64 {
        debug_assert!(det == 1 || det == -1);
        if det == -1 {
            self.level.char_parity
        } else {
            1
        }
    }

    fn reduce_vec(&self, mut v: Vec<BigInt>) -> Vec<BigInt> {
        if self.modulus != 0 {
            let m = BigInt::from(self.modulus);
            for x in v.iter_mut() {
                let r = &*x % &m;
                *x = if r.is_negative() { r + &m } else { r };
            }
        }
        v
    }

    fn twist_allows(&self, t: &HalfIntegralMatrix) -> bool {
        for tw in &self.twists {
            let split = self.n - tw.split_r;
            let modulus = i64::try_from(tw.p.pow(tw.t)).expect("p^t overflow");
            for i in 0..split {
                for j in split..self.n {
                    if t.at(i, j).rem_euclid(modulus) != 0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// a_F(T) for any PSD T with trace <= bound, via canonical transport.
    pub fn get_coeff(&self, t: &HalfIntegralMatrix) -> Result<Vec<BigInt>> {
        if t.n != self.n {
            return Err(Error::Invalid(format!("degree mismatch: {} vs {}", t.n, self.n)));
        }
        if t.trace_t() > self.trace_bound {
            return Err(Error::OutOfBound(t.trace_t(), self.trace_bound));
        }
        if !self.twist_allows(t) {
            return Ok(vec![BigInt::zero(); self.ell()]);
        }
        let (tc, u) = symmat::canonical(t)?;
        let stored = match self.coeffs.get(&tc) {
            Some(v) => v.clone(),
            None => {
                if self.strict {
                    return Err(Error::MissingKey(format!("{:?}", tc)));
                }
                vec![BigInt::zero(); self.ell()]
            }
        };
        // a(T) = chi(det U) rho(U^{-1}) a(T_can) since U T U^t = T_can
        let u_inv = symmat::mat_inverse_unimodular(&u);
        let u_emb = self.embed_witness(&u_inv);
        let m = self.rep.rep_matrix(&u_emb)?;
        let mut v = m.mul_vec(&stored);
        let det = crate::symmat::mat_det(&u);
        let det = i64::try_from(det).expect("unimodular det");
        if self.chi(det) == -1 {
            for x in v.iter_mut() {
                *x = -x.clone();
            }
        }
        Ok(self.reduce_vec(v))
    }

    /// Phi-operator images keep the degree-n representation; witnesses of the
    /// lower-degree keys act on the lower-right block.
    fn embed_witness(&self, u: &Unimod) -> Unimod {
        let extra = self.rep.n - self.n;
        if extra == 0 {
            return u.clone();
        }
        let n = self.rep.n;
        let mut e = symmat::mat_identity(n);
        for i in 0..self.n {
            for j in 0..self.n {
                e[extra + i][extra + j] = u[i][j];
            }
        }
        e
    }

    fn is_canonically_keyed(&self) -> Result<()> {
        if self.twists.is_empty() {
            Ok(())
        } else {
            Err(Error::TwistedExpansion)
        }
    }

    fn metadata_clone(&self) -> FourierExpansion {
        FourierExpansion {
            n: self.n,
            rep: self.rep.clone(),
            level: self.level.clone(),
            modulus: self.modulus,
            trace_bound: self.trace_bound,
            strict: self.strict,
            twists: self.twists.clone(),
            coeffs: BTreeMap::new(),
        }
    }

    /// F^*: keep coefficients exactly on keys of rank r.
    pub fn rank_subseries(&self, r: usize) -> FourierExpansion {
        let mut out = self.metadata_clone();
        for (k, v) in &self.coeffs {
            let val = if k.rank() == r { v.clone() } else { vec![BigInt::zero(); self.ell()] };
            out.coeffs.insert(k.clone(), val);
        }
        out
    }

    /// F^0: T in Lambda^r_r (definite canonical classes) mapped to
    /// a_F(blockdiag(0, T)).
    pub fn f0_extract(&self, r: usize) -> Result<BTreeMap<HalfIntegralMatrix, Vec<BigInt>>> {
        let mut out = BTreeMap::new();
        for t in symmat::enumerate(r, self.trace_bound) {
            if t.rank() != r {
                continue;
            }
            let v = self.get_coeff(&symmat::block_embed(&t, self.n))?;
            out.insert(t, v);
        }
        Ok(out)
    }

    /// Siegel Phi-operator: degree drops by one, the representation is kept
    /// for coefficient bookkeeping.
    pub fn phi_operator(&self) -> Result<FourierExpansion> {
        assert!(self.n >= 1);
        let mut out = self.metadata_clone();
        out.n = self.n - 1;
        out.twists = Vec::new();
        self.is_canonically_keyed()?;
        for t in symmat::enumerate(self.n - 1, self.trace_bound) {
            let v = self.get_coeff(&symmat::block_embed(&t, self.n))?;
            out.coeffs.insert(t, v);
        }
        Ok(out)
    }

    /// Partial twist of the block split (n-r, r): restrict the support to
    /// matrices whose off-diagonal block satisfies 2*S2 = 0 mod p^t.
    pub fn twist_filter(&self, p: u64, t: u32, split_r: usize) -> FourierExpansion {
        let mut out = self.metadata_clone();
        out.coeffs = self.coeffs.clone();
        if t == 0 {
            return out;
        }
        let spec = TwistSpec { p, t, split_r };
        if !out.twists.contains(&spec) {
            out.twists.push(spec);
        }
        out.level.n_level *= p.pow(2 * t);
        out
    }

    /// Fourier-Jacobi coefficient at definite T of size r: all raw pairs
    /// (S1, 2*S2) whose assembled matrix is PSD within the trace bound.
    pub fn jacobi_slice(&self, t: &HalfIntegralMatrix, r: usize) -> Result<JacobiSlice> {
        assert_eq!(t.n, r);
        if r > 0 && !t.is_definite() {
            return Err(Error::NotDefinite);
        }
        let s = self.n - r;
        let mut entries = BTreeMap::new();
        let s1_bound = self.trace_bound - t.trace_t();
        for s1 in symmat::enumerate_raw(s, s1_bound) {
            // off-diagonal box from PSD 2x2 minors: (2 s2_ij)^2 <= g_ii g_jj
            let mut boxes = Vec::new();
            for i in 0..s {
                for j in 0..r {
                    let prod = s1.at(i, i) * t.at(j, j);
                    let mut b = 0i64;
                    while b * b <= prod {
                        b += 1;
                    }
                    boxes.push(b - 1);
                }
            }
            let mut cur = vec![0i64; s * r];
            collect_s2(self, &s1, t, &boxes, &mut cur, 0, &mut entries)?;
        }
        Ok(JacobiSlice { t: t.clone(), r, entries })
    }

    /// Largest rank of a key whose value is nonzero mod p; -1 when F = 0 mod p.
    pub fn p_rank(&self, p: u64) -> Result<i64> {
        self.is_canonically_keyed()?;
        if self.modulus != 0 && self.modulus % p != 0 {
            return Err(Error::IncompatibleModulus(self.modulus, p));
        }
        let pb = BigInt::from(p);
        let mut best: i64 = -1;
        for (k, v) in &self.coeffs {
            if v.iter().any(|x| !(x % &pb).is_zero()) {
                best = best.max(k.rank() as i64);
            }
        }
        Ok(best)
    }

    /// Mod p^m singular rank within the trace bound: the unique r < n with all
    /// rank > r values in p^m Z^ell and some rank-r value nonzero mod p; None
    /// when no such r exists (in particular when the form is not singular).
    pub fn is_mod_singular(&self, p: u64, m: u32) -> Result<Option<usize>> {
        self.is_canonically_keyed()?;
        let pm = p.checked_pow(m).expect("p^m overflow");
        if self.modulus != 0 && self.modulus % pm != 0 {
            return Err(Error::IncompatibleModulus(self.modulus, pm));
        }
        let pm_b = BigInt::from(pm);
        let p_b = BigInt::from(p);
        let mut max_pm: i64 = -1;
        for (k, v) in &self.coeffs {
            if v.iter().any(|x| !(x % &pm_b).is_zero()) {
                max_pm = max_pm.max(k.rank() as i64);
            }
        }
        if max_pm < 0 {
            return Ok(None); // F = 0 mod p^m: no witness coefficient exists
        }
        let r = max_pm as usize;
        if r == self.n {
            return Ok(None); // not singular
        }
        let witnessed = self.coeffs.iter().any(|(k, v)| {
            k.rank() == r && v.iter().any(|x| !(x % &p_b).is_zero())
        });
        Ok(if witnessed { Some(r) } else { None })
    }

    /// Among definite size-r classes with f0 value nonzero mod p, the one with
    /// minimal det(2T); ties broken by canonical key order.
    pub fn minimal_det_witness(&self, p: u64, r: usize) -> Result<HalfIntegralMatrix> {
        let pb = BigInt::from(p);
        let mut best: Option<(BigInt, HalfIntegralMatrix)> = None;
        for (t, v) in self.f0_extract(r)? {
            if v.iter().all(|x| (x % &pb).is_zero()) {
                continue;
            }
            let d = t.det_doubled();
            let better = match &best {
                None => true,
                Some((bd, bt)) => d < *bd || (d == *bd && t < *bt),
            };
            if better {
                best = Some((d, t));
            }
        }
        best.map(|(_, t)| t).ok_or(Error::NoWitness(r))
    }
}

fn collect_s2(
    f: &FourierExpansion,
    s1: &HalfIntegralMatrix,
    t: &HalfIntegralMatrix,
    boxes: &[i64],
    cur: &mut Vec<i64>,
    k: usize,
    entries: &mut BTreeMap<(HalfIntegralMatrix, Vec<Vec<i64>>), Vec<BigInt>>,
) -> Result<()> {
    let s = s1.n;
    let r = t.n;
    if k == s * r {
        let s2: Vec<Vec<i64>> = (0..s).map(|i| cur[i * r..(i + 1) * r].to_vec()).collect();
        let assembled = symmat::assemble_blocks(s1, &s2, t);
        if assembled.trace_t() <= f.trace_bound && assembled.is_psd() {
            let v = f.get_coeff(&assembled)?;
            entries.insert((s1.clone(), s2), v);
        }
        return Ok(());
    }
    for v in -boxes[k]..=boxes[k] {
        cur[k] = v;
        collect_s2(f, s1, t, boxes, cur, k + 1, entries)?;
    }
    cur[k] = 0;
    Ok(())
}

pub struct JacobiSlice {
    pub t: HalfIntegralMatrix,
    pub r: usize,
    /// keyed by (S1, 2*S2): S1 a raw PSD matrix of size n-r, 2*S2 integral.
    pub entries: BTreeMap<(HalfIntegralMatrix, Vec<Vec<i64>>), Vec<BigInt>>,
}

/// Setting z2 = 0 merges all S2 strata: S1 -> sum over S2 of the entries.
pub fn collapse_z2(slice: &JacobiSlice) -> BTreeMap<HalfIntegralMatrix, Vec<BigInt>> {
    let mut out: BTreeMap<HalfIntegralMatrix, Vec<BigInt>> = BTreeMap::new();
    for ((s1, _), v) in &slice.entries {
        match out.get_mut(s1) {
            Some(acc) => {
                for (a, b) in acc.iter_mut().zip(v) {
                    *a += b;
                }
            }
            None => {
                out.insert(s1.clone(), v.clone());
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// SFEX serialization
// ---------------------------------------------------------------------------

pub fn write_sfex(f: &FourierExpansion) -> Result<String> {
    f.is_canonically_keyed()?;
    let mut out = String::new();
    out.push_str(&format!("#degree: {}\n", f.n));
    let weight: Vec<String> = f.rep.lambda.lambda.iter().map(|x| x.to_string()).collect();
    out.push_str(&format!("#weight: {}\n", weight.join(",")));
    out.push_str(&format!(
        "#level: {},{},{},{}\n",
        f.level.n_level, f.level.nprime, f.level.p_power, f.level.char_parity
    ));
    out.push_str(&format!("#modulus: {}\n", f.modulus));
    out.push_str(&format!("#traceBound: {}\n", f.trace_bound));
    for (k, v) in &f.coeffs {
        let t: Vec<String> = k.upper_triangle().iter().map(|x| x.to_string()).collect();
        let c: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&format!("T: {} C: {}\n", t.join(" "), c.join(" ")));
    }
    Ok(out)
}

pub fn read_sfex(text: &str) -> Result<FourierExpansion> {
    let mut headers: BTreeMap<String, String> = BTreeMap::new();
    let mut records: Vec<(Vec<i64>, Vec<BigInt>)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad header line: {}", line)))?;
            headers.insert(k.trim().to_string(), v.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("T:") {
            let (t_part, c_part) = rest
                .split_once("C:")
                .ok_or_else(|| Error::Parse(format!("bad record line: {}", line)))?;
            let t: std::result::Result<Vec<i64>, _> =
                t_part.split_whitespace().map(str::parse).collect();
            let c: std::result::Result<Vec<BigInt>, _> =
                c_part.split_whitespace().map(str::parse).collect();
            records.push((
                t.map_err(|e| Error::Parse(format!("{}: {}", line, e)))?,
                c.map_err(|e| Error::Parse(format!("{}: {}", line, e)))?,
            ));
        } else {
            return Err(Error::Parse(format!("unrecognized line: {}", line)));
        }
    }
    let get = |k: &str| -> Result<&String> {
        headers.get(k).ok_or_else(|| Error::Parse(format!("missing header {}", k)))
    };
    let n: usize = get("degree")?.parse().map_err(|e| Error::Parse(format!("degree: {}", e)))?;
    let weight = weylrep::HighestWeight::parse(get("weight")?)
        .map_err(|e| Error::Parse(format!("weight: {}", e)))?;
    let level_parts: Vec<&str> = get("level")?.split(',').map(str::trim).collect();
    if level_parts.len() != 4 {
        return Err(Error::Parse("level needs 4 fields".into()));
    }
    let level = LevelSpec {
        n_level: level_parts[0].parse().map_err(|e| Error::Parse(format!("level: {}", e)))?,
        nprime: level_parts[1].parse().map_err(|e| Error::Parse(format!("level: {}", e)))?,
        p_power: level_parts[2].parse().map_err(|e| Error::Parse(format!("level: {}", e)))?,
        char_parity: level_parts[3].parse().map_err(|e| Error::Parse(format!("level: {}", e)))?,
    };
    if level.char_parity != 1 && level.char_parity != -1 {
        return Err(Error::Parse("charParity must be 1 or -1".into()));
    }
    let modulus: u64 =
        get("modulus")?.parse().map_err(|e| Error::Parse(format!("modulus: {}", e)))?;
    let trace_bound: i64 =
        get("traceBound")?.parse().map_err(|e| Error::Parse(format!("traceBound: {}", e)))?;
    let rep = Arc::new(weylrep::build_rep(weight.lambda.len(), &weight)?);
    let mut coeffs = BTreeMap::new();
    for (t, c) in records {
        let key = HalfIntegralMatrix::from_upper_triangle(n, &t)?;
        let (can, _) = symmat::canonical(&key)?;
        if can != key {
            return Err(Error::Parse(format!("non-canonical key {:?}", key)));
        }
        if key.trace_t() > trace_bound {
            return Err(Error::Parse(format!("key {:?} exceeds trace bound", key)));
        }
        if c.len() != rep.ell {
            return Err(Error::Parse(format!(
                "coefficient length {} does not match ell {}",
                c.len(),
                rep.ell
            )));
        }
        coeffs.insert(key, c);
    }
    Ok(FourierExpansion {
        n,
        rep,
        level,
        modulus,
        trace_bound,
        strict: true,
        twists: Vec::new(),
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::mat_mul;
    use num_traits::One;

    fn sample_expansion() -> FourierExpansion {
        // a small scalar-weight expansion populated by hand with
        // automorphism-consistent values (scalar rep: any values work)
        let weight = weylrep::HighestWeight::new(vec![4, 4]).unwrap();
        let rep = Arc::new(weylrep::build_rep(2, &weight).unwrap());
        let mut coeffs = BTreeMap::new();
        for (i, k) in symmat::enumerate(2, 2).into_iter().enumerate() {
            coeffs.insert(k, vec![BigInt::from(i as i64 + 1)]);
        }
        FourierExpansion {
            n: 2,
            rep,
            level: LevelSpec::trivial(),
            modulus: 0,
            trace_bound: 2,
            strict: true,
            twists: Vec::new(),
            coeffs,
        }
    }

    #[test]
    fn get_coeff_stored_and_transported() {
        let f = sample_expansion();
        for (k, v) in &f.coeffs {
            assert_eq!(&f.get_coeff(k).unwrap(), v);
        }
        // scalar weight of even k: value invariant on the whole orbit
        let a2 = HalfIntegralMatrix::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap();
        let u = vec![vec![1, 0], vec![0, -1]];
        let moved = a2.transform(&u);
        assert_eq!(f.get_coeff(&moved).unwrap(), f.get_coeff(&a2).unwrap());
        // out of bound
        let big = HalfIntegralMatrix::from_rows(&[vec![6, 0], vec![0, 2]]).unwrap();
        assert!(matches!(f.get_coeff(&big), Err(Error::OutOfBound(4, 2))));
    }

    #[test]
    fn equivariance_closure_scalar() {
        let f = sample_expansion();
        let mut rng = crate::rng::SplitMix64::new(17);
        let keys: Vec<HalfIntegralMatrix> = f.coeffs.keys().cloned().collect();
        for _ in 0..50 {
            let k = &keys[(rng.next_u64() % keys.len() as u64) as usize];
            let mut u = symmat::mat_identity(2);
            for _ in 0..5 {
                let mut e = symmat::mat_identity(2);
                let i = rng.range_i64(0, 1) as usize;
                e[i][1 - i] = rng.range_i64(-2, 2);
                u = mat_mul(&e, &u);
            }
            let moved = k.transform(&u);
            if moved.trace_t() > f.trace_bound {
                continue;
            }
            let lhs = f.get_coeff(&moved).unwrap();
            let m = f.rep.rep_matrix(&u).unwrap();
            let rhs = m.mul_vec(&f.get_coeff(k).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn rank_subseries_reconstruction() {
        let f = sample_expansion();
        let parts: Vec<FourierExpansion> = (0..=2).map(|r| f.rank_subseries(r)).collect();
        for (k, v) in &f.coeffs {
            let sum: Vec<BigInt> = (0..1)
                .map(|i| parts.iter().map(|p| p.coeffs[k][i].clone()).sum())
                .collect();
            assert_eq!(&sum, v);
        }
        // r = 0 keeps only T = 0
        let r0 = f.rank_subseries(0);
        for (k, v) in &r0.coeffs {
            if k.rank() == 0 {
                assert_eq!(v[0], BigInt::one());
            } else {
                assert!(v[0].is_zero());
            }
        }
    }

    #[test]
    fn f0_and_phi() {
        let f = sample_expansion();
        let f0 = f.f0_extract(1).unwrap();
        for (t, v) in &f0 {
            assert_eq!(t.rank(), 1);
            assert_eq!(v, &f.get_coeff(&symmat::block_embed(t, 2)).unwrap());
        }
        let phi = f.phi_operator().unwrap();
        assert_eq!(phi.n, 1);
        assert_eq!(phi.trace_bound, f.trace_bound);
        for (t, v) in &phi.coeffs {
            assert_eq!(v, &f.get_coeff(&symmat::block_embed(t, 2)).unwrap());
        }
        // degree 1 -> degree 0: constant term
        let phi2 = phi.phi_operator().unwrap();
        assert_eq!(phi2.coeffs.len(), 1);
        assert_eq!(phi2.coeffs[&HalfIntegralMatrix::zero(0)], f.coeffs[&HalfIntegralMatrix::zero(2)]);
    }

    #[test]
    fn twist_filter_behaviour() {
        let f = sample_expansion();
        // t = 0: unchanged
        let t0 = f.twist_filter(3, 0, 1);
        assert!(t0.twists.is_empty());
        assert_eq!(t0.coeffs, f.coeffs);
        // idempotent
        let t1 = f.twist_filter(3, 1, 1);
        let t2 = t1.twist_filter(3, 1, 1);
        assert_eq!(t1.twists, t2.twists);
        // diagonal matrices keep their value, off-diagonal support dies
        let diag = HalfIntegralMatrix::from_rows(&[vec![2, 0], vec![0, 2]]).unwrap();
        assert_eq!(t1.get_coeff(&diag).unwrap(), f.get_coeff(&diag).unwrap());
        let off = HalfIntegralMatrix::from_rows(&[vec![2, 1], vec![1, 2]]).unwrap();
        assert!(t1.get_coeff(&off).unwrap().iter().all(|x| x.is_zero()));
        assert!(!f.get_coeff(&off).unwrap().iter().all(|x| x.is_zero()));
        // level metadata raised by p^{2t}
        assert_eq!(t1.level.n_level, 9);
        // singularity checks refuse twisted expansions
        assert!(matches!(t1.p_rank(3), Err(Error::TwistedExpansion)));
    }

    #[test]
    fn jacobi_slice_and_collapse() {
        let f = sample_expansion();
        let t = HalfIntegralMatrix::from_rows(&[vec![2]]).unwrap();
        let slice = f.jacobi_slice(&t, 1).unwrap();
        for ((s1, s2), v) in &slice.entries {
            let asm = symmat::assemble_blocks(s1, s2, &t);
            assert!(asm.is_psd());
            assert!(asm.trace_t() <= f.trace_bound);
            assert_eq!(v, &f.get_coeff(&asm).unwrap());
        }
        let collapsed = collapse_z2(&slice);
        // column sums match
        for (s1, total) in &collapsed {
            let expect: BigInt = slice
                .entries
                .iter()
                .filter(|((a, _), _)| a == s1)
                .map(|(_, v)| v[0].clone())
                .sum();
            assert_eq!(total[0], expect);
        }
        // r = 0 slice covers the whole expansion support
        let empty = HalfIntegralMatrix::zero(0);
        let slice0 = f.jacobi_slice(&empty, 0).unwrap();
        let canonical_count = slice0
            .entries
            .keys()
            .map(|(s1, _)| symmat::canonical(s1).unwrap().0)
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        assert_eq!(canonical_count, f.coeffs.len());
    }

    #[test]
    fn p_rank_and_singularity() {
        let mut f = sample_expansion();
        assert_eq!(f.p_rank(5).unwrap(), 2);
        // multiply everything by p: p_rank = -1
        let mut g = f.metadata_clone();
        for (k, v) in &f.coeffs {
            g.coeffs.insert(k.clone(), v.iter().map(|x| x * 5).collect());
        }
        assert_eq!(g.p_rank(5).unwrap(), -1);
        assert_eq!(g.is_mod_singular(5, 1).unwrap(), None);
        // force a rank-1 singular shape mod 7
        for (k, v) in f.coeffs.clone() {
            if k.rank() == 2 {
                f.coeffs.insert(k, v.iter().map(|x| x * 7).collect());
            }
        }
        assert_eq!(f.p_rank(7).unwrap(), 1);
        assert_eq!(f.is_mod_singular(7, 1).unwrap(), Some(1));
        // a form with nothing divisible: not singular
        let h = sample_expansion();
        assert_eq!(h.is_mod_singular(1009, 1).unwrap(), None);
    }

    #[test]
    fn minimal_det_witness_examples() {
        let f = sample_expansion();
        // r = 0: empty matrix iff a(0) coprime to p
        let w = f.minimal_det_witness(7, 0).unwrap();
        assert_eq!(w.n, 0);
        // r = 1: both classes [1], [2] present; [1] has det 2 < 4
        let w = f.minimal_det_witness(7, 1).unwrap();
        assert_eq!(w.rows(), vec![vec![2]]);
        // no witness when everything vanishes mod p
        let mut g = f.metadata_clone();
        for (k, v) in &f.coeffs {
            g.coeffs.insert(k.clone(), v.iter().map(|x| x * 11).collect());
        }
        assert!(matches!(g.minimal_det_witness(11, 1), Err(Error::NoWitness(1))));
    }

    #[test]
    fn sfex_round_trip() {
        let f = sample_expansion();
        let text = write_sfex(&f).unwrap();
        let g = read_sfex(&text).unwrap();
        assert_eq!(g.n, f.n);
        assert_eq!(g.rep.lambda, f.rep.lambda);
        assert_eq!(g.level, f.level);
        assert_eq!(g.modulus, f.modulus);
        assert_eq!(g.trace_bound, f.trace_bound);
        assert_eq!(g.coeffs, f.coeffs);
        let text2 = write_sfex(&g).unwrap();
        assert_eq!(text, text2);
        // twisted expansions are not serializable
        assert!(matches!(write_sfex(&f.twist_filter(3, 1, 1)), Err(Error::TwistedExpansion)));
        // malformed input
        assert!(read_sfex("nonsense").is_err());
        assert!(read_sfex("#degree: 2\n").is_err());
    }

    /// Exact finite identity underlying the twist averaging: the sum over R
    /// mod p^t of exp(2 pi i tr(R M^t) / p^t) is p^{t d} when M = 0 mod p^t
    /// and 0 otherwise.  Roots of unity are handled as residue polynomials
    /// modulo the p^t-th cyclotomic polynomial.
    #[test]
    fn exponential_sum_identity() {
        fn cyclotomic_reduce(mut coeffs: Vec<BigInt>, p: usize, t: u32) -> Vec<BigInt> {
            // Phi_{p^t}(x) = sum_{j<p} x^{j p^{t-1}}; reduce degree below
            // (p-1) p^{t-1} by x^{(p-1)p^{t-1}} = -sum_{j<p-1} x^{j p^{t-1}}
            let q = p.pow(t - 1);
            let deg = (p - 1) * q;
            for e in (deg..coeffs.len()).rev() {
                let c = std::mem::replace(&mut coeffs[e], BigInt::zero());
                if c.is_zero() {
                    continue;
                }
                for j in 0..p - 1 {
                    let idx = e - deg + j * q;
                    coeffs[idx] -= &c;
                }
            }
            coeffs.truncate(deg);
            coeffs
        }
        for &(p, t) in &[(3usize, 1u32), (3, 2), (5, 1)] {
            let pt = p.pow(t);
            for shape in [(1usize, 1usize), (1, 2), (2, 1)] {
                let d = shape.0 * shape.1;
                // try a handful of matrices M with entries in [-pt, pt]
                let mut rng = crate::rng::SplitMix64::new(7 + pt as u64);
                let mut cases: Vec<Vec<i64>> = vec![vec![0; d], vec![pt as i64; d]];
                for _ in 0..6 {
                    cases.push((0..d).map(|_| rng.range_i64(-(pt as i64), pt as i64)).collect());
                }
                for m in cases {
                    // sum over R in (Z/p^t)^d of x^{<R,M> mod p^t}
                    let mut coeffs = vec![BigInt::zero(); pt];
                    let total = pt.pow(d as u32);
                    for code in 0..total {
                        let mut c = code;
                        let mut dot: i64 = 0;
                        for &mi in &m {
                            let r = (c % pt) as i64;
                            c /= pt;
                            dot += r * mi;
                        }
                        let e = dot.rem_euclid(pt as i64) as usize;
                        coeffs[e] += 1;
                    }
                    let red = cyclotomic_reduce(coeffs, p, t);
                    let zero_mod = m.iter().all(|&x| x.rem_euclid(pt as i64) == 0);
                    if zero_mod {
                        // constant p^{t d}
                        assert_eq!(red[0], BigInt::from(total as i64));
                        assert!(red[1..].iter().all(|c| c.is_zero()));
                    } else {
                        assert!(red.iter().all(|c| c.is_zero()), "p={} t={} m={:?}", p, t, m);
                    }
                }
            }
        }
    }
}
