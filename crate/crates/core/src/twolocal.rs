//! Arithmetic in `Z/2^K`, used as a truncation of the 2-local integers.
//!
//! Residues are stored as `u64` and every ring operation is carried out with
//! wrapping 64-bit arithmetic followed by a mask, which is exact modulo `2^K`
//! for any `K <= 64`. The zero residue reports valuation `K`: at precision `K`
//! it cannot be told apart from any multiple of `2^K`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};
use thiserror::Error;

/// Largest supported precision in bits.
pub const MAX_PRECISION: u32 = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("precision {0} is outside 1..={MAX_PRECISION}")]
    PrecisionOutOfRange(u32),
    #[error("the 2-adic valuation of 0 is undefined")]
    ZeroValuation,
    #[error("residue {residue} is not a unit mod 2^{bits}")]
    NotAUnit { residue: u64, bits: u32 },
}

/// The ring `Z/2^K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ring2k {
    bits: u32,
    mask: u64,
}

impl Ring2k {
    pub fn new(bits: u32) -> Result<Self, ArithError> {
        if bits == 0 || bits > MAX_PRECISION {
            return Err(ArithError::PrecisionOutOfRange(bits));
        }
        Ok(Ring2k {
            bits,
            mask: (1u64 << bits) - 1,
        })
    }

    /// Precision `K`.
    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn modulus(self) -> u64 {
        self.mask + 1
    }

    #[inline]
    pub fn reduce(self, r: u64) -> u64 {
        r & self.mask
    }

    pub fn from_i64(self, n: i64) -> u64 {
        (n as u64) & self.mask
    }

    pub fn from_big(self, n: &BigInt) -> u64 {
        let (sign, mag) = n.clone().into_parts();
        let r = self.from_biguint(&mag);
        if sign == Sign::Minus {
            self.neg(r)
        } else {
            r
        }
    }

    pub fn from_biguint(self, n: &BigUint) -> u64 {
        n.iter_u64_digits().next().unwrap_or(0) & self.mask
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        a.wrapping_neg() & self.mask
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        a.wrapping_mul(b) & self.mask
    }

    /// `2^v` as a residue (zero once `v >= K`).
    #[inline]
    pub fn pow2(self, v: u32) -> u64 {
        if v >= self.bits {
            0
        } else {
            1u64 << v
        }
    }

    /// 2-adic valuation of a residue; `K` for zero.
    #[inline]
    pub fn valuation(self, r: u64) -> u32 {
        let r = r & self.mask;
        if r == 0 {
            self.bits
        } else {
            r.trailing_zeros()
        }
    }

    /// Inverse of an odd residue, by Newton iteration `y <- y(2 - ay)`.
    pub fn inv_unit(self, a: u64) -> Result<u64, ArithError> {
        let a = a & self.mask;
        if a & 1 == 0 {
            return Err(ArithError::NotAUnit {
                residue: a,
                bits: self.bits,
            });
        }
        // a*a == 1 mod 8, so y = a is correct to 3 bits; each step doubles that.
        let mut y = a;
        for _ in 0..5 {
            y = y.wrapping_mul(2u64.wrapping_sub(a.wrapping_mul(y)));
        }
        Ok(y & self.mask)
    }

    /// Splits a nonzero residue as `2^v * u` with `u` odd. Returns `None` for 0.
    pub fn split(self, r: u64) -> Option<(u32, u64)> {
        let r = r & self.mask;
        if r == 0 {
            None
        } else {
            let v = r.trailing_zeros();
            Some((v, r >> v))
        }
    }

    pub fn scalar(self, r: u64) -> TwoLocal {
        TwoLocal {
            residue: r & self.mask,
            ring: self,
        }
    }

    /// Centered representative in `(-2^{K-1}, 2^{K-1}]`.
    pub fn signed(self, r: u64) -> i64 {
        let r = r & self.mask;
        if r > self.mask >> 1 {
            r as i64 - self.modulus() as i64
        } else {
            r as i64
        }
    }
}

/// An element of `Z/2^K` together with its ring.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TwoLocal {
    residue: u64,
    ring: Ring2k,
}

impl TwoLocal {
    pub fn new(ring: Ring2k, n: i64) -> Self {
        ring.scalar(ring.from_i64(n))
    }

    pub fn zero(ring: Ring2k) -> Self {
        ring.scalar(0)
    }

    pub fn one(ring: Ring2k) -> Self {
        ring.scalar(1)
    }

    #[inline]
    pub fn residue(self) -> u64 {
        self.residue
    }

    #[inline]
    pub fn ring(self) -> Ring2k {
        self.ring
    }

    pub fn precision(self) -> u32 {
        self.ring.bits
    }

    pub fn valuation(self) -> u32 {
        self.ring.valuation(self.residue)
    }

    pub fn is_zero(self) -> bool {
        self.residue == 0
    }

    pub fn is_unit(self) -> bool {
        self.residue & 1 == 1
    }

    pub fn inv_unit(self) -> Result<Self, ArithError> {
        Ok(self.ring.scalar(self.ring.inv_unit(self.residue)?))
    }
}

impl fmt::Debug for TwoLocal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod 2^{})", self.residue, self.ring.bits)
    }
}

impl fmt::Display for TwoLocal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

impl Add for TwoLocal {
    type Output = TwoLocal;
    fn add(self, rhs: TwoLocal) -> TwoLocal {
        debug_assert_eq!(self.ring, rhs.ring);
        self.ring.scalar(self.ring.add(self.residue, rhs.residue))
    }
}

impl Sub for TwoLocal {
    type Output = TwoLocal;
    fn sub(self, rhs: TwoLocal) -> TwoLocal {
        debug_assert_eq!(self.ring, rhs.ring);
        self.ring.scalar(self.ring.sub(self.residue, rhs.residue))
    }
}

impl Mul for TwoLocal {
    type Output = TwoLocal;
    fn mul(self, rhs: TwoLocal) -> TwoLocal {
        debug_assert_eq!(self.ring, rhs.ring);
        self.ring.scalar(self.ring.mul(self.residue, rhs.residue))
    }
}

impl Neg for TwoLocal {
    type Output = TwoLocal;
    fn neg(self) -> TwoLocal {
        self.ring.scalar(self.ring.neg(self.residue))
    }
}

/// Exponent of 2 in a nonzero integer.
pub fn nu(n: i64) -> Result<u32, ArithError> {
    if n == 0 {
        Err(ArithError::ZeroValuation)
    } else {
        Ok(n.trailing_zeros())
    }
}

pub fn nu_big(n: &BigInt) -> Result<u32, ArithError> {
    n.trailing_zeros()
        .map(|v| v as u32)
        .ok_or(ArithError::ZeroValuation)
}

/// Number of ones in the binary expansion.
#[inline]
pub fn alpha(n: u64) -> u32 {
    n.count_ones()
}

/// Exact `binom(n, r)`, zero when `r > n`.
pub fn binom_big(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        // acc = binom(n, i) here, so the division is exact.
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `binom(n, r)` reduced mod `2^K`.
pub fn binom_mod(n: u64, r: u64, ring: Ring2k) -> TwoLocal {
    ring.scalar(ring.from_biguint(&binom_big(n, r)))
}
