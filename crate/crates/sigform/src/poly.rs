//! Sparse multivariate polynomials with BigInt coefficients.  Used for
//! bideterminant evaluation oracles, pluriharmonicity checks, and the search
//! for harmonic coefficient polynomials; exponents are small so a BTreeMap
//! keyed by exponent vectors is plenty.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, BigInt>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, BigInt::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert(e, c1 * c2);
            }
        }
        out
    }

    pub fn deriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.insert(e2, c * BigInt::from(e[i]));
        }
        out
    }

    pub fn eval(&self, xs: &[BigInt]) -> BigInt {
        assert_eq!(xs.len(), self.nvars);
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    t *= &xs[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Substitute each variable by a linear form: x_i -> sum_j forms[i][j] x_j.
    pub fn substitute_linear(&self, forms: &[Vec<BigInt>]) -> Poly {
        assert_eq!(forms.len(), self.nvars);
        let lin: Vec<Poly> = forms
            .iter()
            .map(|f| {
                let mut p = Poly::zero(self.nvars);
                for (j, c) in f.iter().enumerate() {
                    p = p.add(&Poly::var(self.nvars, j).scale(c));
                }
                p
            })
            .collect();
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(self.nvars, c.clone());
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    t = t.mul(&lin[i]);
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Monomials of total degree exactly d in nvars variables.
    pub fn monomials_of_degree(nvars: usize, d: u32) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; nvars];
        fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, i: usize, rem: u32) {
            if i + 1 == cur.len() {
                cur[i] = rem;
                out.push(cur.clone());
                return;
            }
            for v in 0..=rem {
                cur[i] = v;
                rec(out, cur, i + 1, rem - v);
            }
            cur[i] = 0;
        }
        if nvars == 0 {
            if d == 0 {
                out.push(vec![]);
            }
            return out;
        }
        rec(&mut out, &mut cur, 0, d);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Poly {
        Poly::var(3, i)
    }

    #[test]
    fn ring_ops() {
        let p = x(0).mul(&x(1)).add(&x(2).scale(&BigInt::from(2)));
        let q = p.sub(&p);
        assert!(q.is_zero());
        let sq = p.mul(&p);
        assert_eq!(
            sq.eval(&[BigInt::from(1), BigInt::from(2), BigInt::from(3)]),
            BigInt::from((1 * 2 + 2 * 3i64) * (1 * 2 + 2 * 3)),
        );
    }

    #[test]
    fn derivative() {
        // d/dx0 (x0^2 x1) = 2 x0 x1
        let p = x(0).mul(&x(0)).mul(&x(1));
        let d = p.deriv(0);
        assert_eq!(d, x(0).mul(&x(1)).scale(&BigInt::from(2)));
    }

    #[test]
    fn substitution_linear() {
        // p = x0^2, substitute x0 -> x0 + x1
        let p = x(0).mul(&x(0));
        let forms = vec![
            vec![BigInt::from(1), BigInt::from(1), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)],
        ];
        let q = p.substitute_linear(&forms);
        let expect = x(0)
            .mul(&x(0))
            .add(&x(0).mul(&x(1)).scale(&BigInt::from(2)))
            .add(&x(1).mul(&x(1)));
        assert_eq!(q, expect);
    }

    #[test]
    fn monomial_count() {
        // degree-2 monomials in 3 vars: C(4,2) = 6
        assert_eq!(Poly::monomials_of_degree(3, 2).len(), 6);
    }
}
