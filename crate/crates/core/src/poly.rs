//! Dense polynomials over `Z/2^K` and their Toeplitz blocks.
//!
//! A polynomial `a_0 + a_1 x + ...` stands for the lower-triangular Toeplitz
//! matrix whose `(c + k, c)` entry is `a_k`. Multiplying polynomials is the
//! same as multiplying these blocks, which is how row operations on the
//! polynomial presentation correspond to row operations on numbers.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::twolocal::{ArithError, Ring2k};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("numerator is divisible by x^{have} but the denominator needs x^{need}")]
    InsufficientXDivisibility { need: usize, have: usize },
    #[error("division leaves a nonzero remainder at precision {0}")]
    NonExact(u32),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A polynomial with residue coefficients; `coeffs[k]` multiplies `x^k`.
///
/// The highest stored coefficient is always nonzero; the zero polynomial has
/// no coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    ring: Ring2k,
    coeffs: Vec<u64>,
}

impl Poly {
    pub fn zero(ring: Ring2k) -> Self {
        Poly {
            ring,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(ring: Ring2k, c: i64) -> Self {
        Self::monomial(ring, c, 0)
    }

    pub fn one(ring: Ring2k) -> Self {
        Self::constant(ring, 1)
    }

    /// `c x^k`.
    pub fn monomial(ring: Ring2k, c: i64, k: usize) -> Self {
        let mut coeffs = vec![0; k + 1];
        coeffs[k] = ring.from_i64(c);
        Self::from_residues(ring, coeffs)
    }

    pub fn x_pow(ring: Ring2k, k: usize) -> Self {
        Self::monomial(ring, 1, k)
    }

    pub fn from_i64s(ring: Ring2k, coeffs: &[i64]) -> Self {
        Self::from_residues(ring, coeffs.iter().map(|&c| ring.from_i64(c)).collect())
    }

    pub fn from_residues(ring: Ring2k, mut coeffs: Vec<u64>) -> Self {
        for c in coeffs.iter_mut() {
            *c = ring.reduce(*c);
        }
        let mut p = Poly { ring, coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn ring(&self) -> Ring2k {
        self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> u64 {
        self.coeffs.get(k).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Exponent of the lowest nonzero term; `None` for zero.
    pub fn x_valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    /// Nonzero terms as `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| (k, c))
    }

    pub fn scale(&self, c: u64) -> Poly {
        let r = self.ring;
        Self::from_residues(r, self.coeffs.iter().map(|&a| r.mul(a, c)).collect())
    }

    /// `x^k * self`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly {
            ring: self.ring,
            coeffs,
        }
    }

    /// `self(x^m)`.
    pub fn subst(&self, m: usize) -> Poly {
        assert!(m >= 1, "substitution x -> x^m needs m >= 1");
        let Some(deg) = self.degree() else {
            return self.clone();
        };
        let mut coeffs = vec![0; deg * m + 1];
        for (k, c) in self.terms() {
            coeffs[k * m] = c;
        }
        Poly {
            ring: self.ring,
            coeffs,
        }
    }

    /// Exact quotient `num / den` of degree at most `degree_bound`
    /// (defaults to `deg(num)`).
    ///
    /// `den` may carry a factor `x^k` provided `num` is divisible by `x^k`;
    /// what remains of `den` must have a unit constant term.
    pub fn div_exact(&self, den: &Poly, degree_bound: Option<usize>) -> Result<Poly, PolyError> {
        let ring = self.ring;
        let shift = den.x_valuation().ok_or(PolyError::DivisionByZero)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let have = self.x_valuation().unwrap_or(0);
        if have < shift {
            return Err(PolyError::InsufficientXDivisibility { need: shift, have });
        }
        let num = &self.coeffs[shift..];
        let den_c = &den.coeffs[shift..];
        let lead_inv = ring.inv_unit(den_c[0])?;
        let bound = degree_bound.unwrap_or(num.len() - 1);

        let mut q = vec![0u64; bound + 1];
        for i in 0..=bound {
            let mut acc = num.get(i).copied().unwrap_or(0);
            for j in 1..den_c.len().min(i + 1) {
                acc = ring.sub(acc, ring.mul(den_c[j], q[i - j]));
            }
            q[i] = ring.mul(acc, lead_inv);
        }
        let q = Poly::from_residues(ring, q);
        if &(den * &q) == self {
            Ok(q)
        } else {
            Err(PolyError::NonExact(ring.bits()))
        }
    }
}

/// `p_n(x) = 1 + x + ... + x^{n-1}`; zero for `n = 0`.
pub fn p_poly(ring: Ring2k, n: usize) -> Poly {
    Poly::from_residues(ring, vec![1; n])
}

/// Checks `p_{2t} = p_2 * p_t(x^2)`.
pub fn verify_pp(ring: Ring2k, t: usize) -> bool {
    p_poly(ring, 2 * t) == &p_poly(ring, 2) * &p_poly(ring, t).subst(2)
}

/// Checks `p_{2k+1} - p_3 p_k(x^2) = -x^2 p_{k-1}(x^2)`.
pub fn verify_peq(ring: Ring2k, k: usize) -> bool {
    assert!(k >= 1);
    let lhs = &p_poly(ring, 2 * k + 1) - &(&p_poly(ring, 3) * &p_poly(ring, k).subst(2));
    let rhs = -&p_poly(ring, k - 1).subst(2).shift(2);
    lhs == rhs
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod 2^{})", self.ring.bits())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.terms() {
            let c = self.ring.signed(c);
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            }
            first = false;
            let a = c.unsigned_abs();
            match (k, a) {
                (0, _) => write!(f, "{a}")?,
                (1, 1) => write!(f, "x")?,
                (1, _) => write!(f, "{a}x")?,
                (_, 1) => write!(f, "x^{k}")?,
                _ => write!(f, "{a}x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        debug_assert_eq!(self.ring, rhs.ring);
        let r = self.ring;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_residues(
            r,
            (0..n).map(|k| r.add(self.coeff(k), rhs.coeff(k))).collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        debug_assert_eq!(self.ring, rhs.ring);
        let r = self.ring;
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_residues(
            r,
            (0..n).map(|k| r.sub(self.coeff(k), rhs.coeff(k))).collect(),
        )
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        let r = self.ring;
        Poly::from_residues(r, self.coeffs.iter().map(|&c| r.neg(c)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        debug_assert_eq!(self.ring, rhs.ring);
        let r = self.ring;
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero(r);
        }
        let mut out = vec![0u64; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.terms() {
            for (j, b) in rhs.terms() {
                out[i + j] = r.add(out[i + j], r.mul(a, b));
            }
        }
        Poly::from_residues(r, out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A `rows x cols` Toeplitz block with `(c + k, c)` entry equal to the
/// `k`-th coefficient of `source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToeplitzBlock {
    pub rows: usize,
    pub cols: usize,
    pub source: Poly,
}

impl ToeplitzBlock {
    pub fn new(source: Poly, rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "Toeplitz blocks are at least 1x1");
        ToeplitzBlock { rows, cols, source }
    }

    pub fn entry(&self, r: usize, c: usize) -> u64 {
        if r >= c {
            self.source.coeff(r - c)
        } else {
            0
        }
    }

    /// Nonzero entries as `(row, col, residue)`, row-major.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            // entries in row r come from coefficients k = r - c <= deg
            (0..=r.min(self.cols.saturating_sub(1))).filter_map(move |c| {
                let v = self.entry(r, c);
                (v != 0).then_some((r, c, v))
            })
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.entry(r, c)).collect())
            .collect()
    }
}

pub fn toeplitz_block(p: &Poly, rows: usize, cols: usize) -> ToeplitzBlock {
    ToeplitzBlock::new(p.clone(), rows, cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ring() -> Ring2k {
        Ring2k::new(16).unwrap()
    }

    fn poly(c: &[i64]) -> Poly {
        Poly::from_i64s(ring(), c)
    }

    #[test]
    fn p_poly_examples() {
        assert_eq!(p_poly(ring(), 1), Poly::one(ring()));
        assert_eq!(p_poly(ring(), 3), poly(&[1, 1, 1]));
        assert!(p_poly(ring(), 0).is_zero());
        assert_eq!(p_poly(ring(), 0).degree(), None);
    }

    #[test]
    fn subst_examples() {
        assert_eq!(p_poly(ring(), 2).subst(2), poly(&[1, 0, 1]));
        let q = poly(&[3, 0, -2, 5]);
        assert_eq!(q.subst(1), q);
        assert_eq!(
            p_poly(ring(), 3).subst(4),
            poly(&[1, 0, 0, 0, 1, 0, 0, 0, 1])
        );
    }

    #[test]
    fn div_exact_examples() {
        let r = ring();
        assert_eq!(
            p_poly(r, 4).div_exact(&p_poly(r, 2), None),
            Ok(poly(&[1, 0, 1]))
        );
        assert_eq!(
            poly(&[0, 1, 1]).div_exact(&Poly::x_pow(r, 1), None),
            Ok(poly(&[1, 1]))
        );
        assert_eq!(
            p_poly(r, 3).div_exact(&p_poly(r, 2), None),
            Err(PolyError::NonExact(16))
        );
        assert_eq!(
            poly(&[1, 1]).div_exact(&Poly::x_pow(r, 1), None),
            Err(PolyError::InsufficientXDivisibility { need: 1, have: 0 })
        );
        assert_eq!(
            poly(&[1]).div_exact(&Poly::zero(r), None),
            Err(PolyError::DivisionByZero)
        );
        assert!(matches!(
            poly(&[2]).div_exact(&poly(&[2]), None),
            Err(PolyError::Arith(_))
        ));
    }

    #[test]
    fn toeplitz_of_two_x_times_p2_times_two() {
        // 4x p_2(x) in an 8x5 block: the M_{0,3} block for G_7 with e = 4.
        let p = p_poly(ring(), 2).shift(1).scale(4);
        let expect: Vec<Vec<u64>> = vec![
            vec![0, 0, 0, 0, 0],
            vec![4, 0, 0, 0, 0],
            vec![4, 4, 0, 0, 0],
            vec![0, 4, 4, 0, 0],
            vec![0, 0, 4, 4, 0],
            vec![0, 0, 0, 4, 4],
            vec![0, 0, 0, 0, 4],
            vec![0, 0, 0, 0, 0],
        ];
        assert_eq!(toeplitz_block(&p, 8, 5).to_dense(), expect);
    }

    #[test]
    fn toeplitz_identity_and_constant() {
        let id = toeplitz_block(&Poly::one(ring()), 4, 4).to_dense();
        for (r, row) in id.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(v, u64::from(r == c));
            }
        }
        let col = toeplitz_block(&Poly::constant(ring(), 2), 7, 1).to_dense();
        assert_eq!(col[0], vec![2]);
        assert!(col[1..].iter().all(|r| r == &vec![0]));
    }

    #[test]
    fn nonzeros_match_dense() {
        let p = poly(&[0, 3, 0, 5, 1]);
        let b = toeplitz_block(&p, 6, 4);
        let dense = b.to_dense();
        let mut count = 0;
        for (r, c, v) in b.nonzeros() {
            assert_eq!(dense[r][c], v);
            count += 1;
        }
        assert_eq!(count, dense.iter().flatten().filter(|&&v| v != 0).count());
    }

    #[test]
    fn pp_and_peq_identities() {
        let r = Ring2k::new(63).unwrap();
        assert!(verify_pp(r, 1));
        assert!(verify_pp(r, 2));
        assert!(verify_peq(r, 1));
        assert!(verify_peq(r, 3));
        for t in 1..=64 {
            assert!(verify_pp(r, t), "pp t={t}");
            assert!(verify_peq(r, t), "peq k={t}");
        }
        // p_7 - p_3 p_3(x^2) = -x^2 - x^4
        let lhs = &p_poly(r, 7) - &(&p_poly(r, 3) * &p_poly(r, 3).subst(2));
        assert_eq!(lhs, Poly::from_i64s(r, &[0, 0, -1, 0, -1]));
    }

    #[test]
    fn display() {
        assert_eq!(poly(&[1, -1, 0, 4]).to_string(), "1 - x + 4x^3");
        assert_eq!(Poly::zero(ring()).to_string(), "0");
    }

    fn arb_poly(max_len: usize) -> impl Strategy<Value = Poly> {
        prop::collection::vec(0u64..(1 << 16), 0..max_len)
            .prop_map(|c| Poly::from_residues(ring(), c))
    }

    fn add_dense(a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let r = ring();
        a.iter()
            .zip(b)
            .map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| r.add(u, v)).collect())
            .collect()
    }

    fn mul_dense(a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let r = ring();
        let n = b[0].len();
        a.iter()
            .map(|row| {
                (0..n)
                    .map(|j| {
                        row.iter()
                            .enumerate()
                            .fold(0, |acc, (k, &v)| r.add(acc, r.mul(v, b[k][j])))
                    })
                    .collect()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn toeplitz_is_additive(p in arb_poly(8), q in arb_poly(8), rows in 1usize..9, cols in 1usize..9) {
            let lhs = toeplitz_block(&(&p + &q), rows, cols).to_dense();
            let rhs = add_dense(&toeplitz_block(&p, rows, cols).to_dense(), &toeplitz_block(&q, rows, cols).to_dense());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn toeplitz_is_multiplicative(p in arb_poly(8), q in arb_poly(8), n in 1usize..10) {
            let lhs = toeplitz_block(&(&p * &q), n, n).to_dense();
            let rhs = mul_dense(&toeplitz_block(&p, n, n).to_dense(), &toeplitz_block(&q, n, n).to_dense());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn div_exact_inverts_mul(p in arb_poly(10), q in arb_poly(6)) {
            let q = if q.coeff(0) & 1 == 0 {
                &q + &Poly::one(ring())
            } else {
                q
            };
            let prod = &p * &q;
            prop_assert_eq!(prod.div_exact(&q, None), Ok(p));
        }
    }
}
