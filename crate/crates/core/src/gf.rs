//! Arithmetic in Z_p for a random large prime p.
//!
//! The default working prime is drawn uniformly from [2^127, 2^128), which is
//! large enough that a random rate sample practically never hits the zero set
//! of a nonzero influence polynomial, and that unlucky primes (primes dividing
//! a Cramer numerator or denominator) are vanishingly rare for networks of
//! realistic size. Multiplication uses Montgomery reduction with a 256-bit
//! intermediate held in 64-bit limbs; larger experimental widths fall back to
//! arbitrary-precision arithmetic via [`BigPrimeField`].

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::network::ReactionNetwork;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero in GF(p)")]
    DivisionByZero,
}

/// Abstraction over the two field backends so the elimination kernels can run
/// on either. Elements are canonical representatives in [0, p).
pub trait Field: Clone {
    type Elem: Clone + PartialEq + std::fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, v: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Result<Self::Elem, FieldError>;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// Uniform element of [0, p).
    fn sample(&self, rng: &mut impl Rng) -> Self::Elem;
    /// Uniform element of [1, p).
    fn sample_nonzero(&self, rng: &mut impl Rng) -> Self::Elem {
        loop {
            let x = self.sample(rng);
            if !self.is_zero(&x) {
                return x;
            }
        }
    }
    fn modulus_bits(&self) -> u32;
    fn modulus_f64(&self) -> f64;
}

/// GF(p) for an odd prime p < 2^128, the fast path used everywhere by default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeField {
    p: u128,
    /// -p^{-1} mod 2^128, for Montgomery reduction.
    neg_p_inv: u128,
    /// 2^256 mod p, to convert into the Montgomery domain.
    r2: u128,
}

pub type FieldElement = u128;

impl PrimeField {
    /// Field with the given odd prime modulus. The caller vouches for
    /// primality; use [`random_prime`] to construct a verified field.
    pub fn new(p: u128) -> Self {
        assert!(p > 2 && p % 2 == 1, "modulus must be an odd prime > 2");
        // Newton iteration for the inverse of p mod 2^128.
        let mut inv: u128 = 1;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(p.wrapping_mul(inv)));
        }
        debug_assert_eq!(p.wrapping_mul(inv), 1);
        let neg_p_inv = inv.wrapping_neg();
        // r = 2^128 mod p, r2 = r^2 mod p by doubling.
        let r = (u128::MAX % p) + 1;
        let r = if r == p { 0 } else { r };
        let mut r2 = r;
        for _ in 0..128 {
            r2 = add_mod(r2, r2, p);
        }
        PrimeField { p, neg_p_inv, r2 }
    }

    pub fn modulus(&self) -> u128 {
        self.p
    }

    /// Montgomery reduction of a 256-bit value: t * 2^-128 mod p.
    fn redc(&self, lo: u128, hi: u128) -> u128 {
        let m = lo.wrapping_mul(self.neg_p_inv);
        let (mp_lo, mp_hi) = mul_wide(m, self.p);
        let (_, carry) = lo.overflowing_add(mp_lo);
        let (mut t, c1) = hi.overflowing_add(mp_hi);
        if carry {
            let (t2, c2) = t.overflowing_add(1);
            t = t2;
            if c2 || t >= self.p {
                t = t.wrapping_sub(self.p);
            }
        } else if c1 || t >= self.p {
            t = t.wrapping_sub(self.p);
        }
        t
    }

    fn mont_mul(&self, a: u128, b: u128) -> u128 {
        let (lo, hi) = mul_wide(a, b);
        self.redc(lo, hi)
    }

    pub fn mul(&self, a: u128, b: u128) -> u128 {
        // (a*b*R^-1) * R^2 * R^-1 = a*b mod p
        self.mont_mul(self.mont_mul(a, b), self.r2)
    }

    pub fn add(&self, a: u128, b: u128) -> u128 {
        add_mod(a, b, self.p)
    }

    pub fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            self.p - b + a
        }
    }

    pub fn neg(&self, a: u128) -> u128 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Inverse by extended Euclid; fewer multiplications than Fermat
    /// exponentiation at this width.
    pub fn inv(&self, a: u128) -> Result<u128, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.p, a % self.p);
        // Bezout coefficients of a, tracked mod p.
        let (mut t0, mut t1): (u128, u128) = (0, 1);
        while r1 != 0 {
            let q = r0 / r1;
            let r2 = r0 % r1;
            let qt = self.mul(q % self.p, t1);
            let t2 = self.sub(t0, qt);
            (r0, r1) = (r1, r2);
            (t0, t1) = (t1, t2);
        }
        debug_assert_eq!(r0, 1, "modulus must be prime");
        Ok(t0)
    }

    pub fn pow(&self, a: u128, mut e: u128) -> u128 {
        let mut base = a;
        let mut acc: u128 = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn from_i64(&self, v: i64) -> u128 {
        if v >= 0 {
            (v as u128) % self.p
        } else {
            self.neg((v.unsigned_abs() as u128) % self.p)
        }
    }
}

impl Field for PrimeField {
    type Elem = u128;

    fn zero(&self) -> u128 {
        0
    }
    fn one(&self) -> u128 {
        1
    }
    fn from_i64(&self, v: i64) -> u128 {
        PrimeField::from_i64(self, v)
    }
    fn add(&self, a: &u128, b: &u128) -> u128 {
        PrimeField::add(self, *a, *b)
    }
    fn sub(&self, a: &u128, b: &u128) -> u128 {
        PrimeField::sub(self, *a, *b)
    }
    fn neg(&self, a: &u128) -> u128 {
        PrimeField::neg(self, *a)
    }
    fn mul(&self, a: &u128, b: &u128) -> u128 {
        PrimeField::mul(self, *a, *b)
    }
    fn inv(&self, a: &u128) -> Result<u128, FieldError> {
        PrimeField::inv(self, *a)
    }
    fn is_zero(&self, a: &u128) -> bool {
        *a == 0
    }
    fn sample(&self, rng: &mut impl Rng) -> u128 {
        uniform_below(rng, self.p)
    }
    fn modulus_bits(&self) -> u32 {
        128 - self.p.leading_zeros()
    }
    fn modulus_f64(&self) -> f64 {
        self.p as f64
    }
}

/// Arbitrary-precision fallback for experiments with primes beyond 128 bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigPrimeField {
    p: BigUint,
}

impl BigPrimeField {
    pub fn new(p: BigUint) -> Self {
        assert!(p > BigUint::from(2u8) && p.bit(0));
        BigPrimeField { p }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }
}

impl Field for BigPrimeField {
    type Elem = BigUint;

    fn zero(&self) -> BigUint {
        BigUint::zero()
    }
    fn one(&self) -> BigUint {
        BigUint::one()
    }
    fn from_i64(&self, v: i64) -> BigUint {
        let a = BigUint::from(v.unsigned_abs()) % &self.p;
        if v < 0 {
            self.neg(&a)
        } else {
            a
        }
    }
    fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a + b) % &self.p
    }
    fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.p - b + a
        }
    }
    fn neg(&self, a: &BigUint) -> BigUint {
        if a.is_zero() {
            BigUint::zero()
        } else {
            &self.p - a
        }
    }
    fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }
    fn inv(&self, a: &BigUint) -> Result<BigUint, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(a.modpow(&(&self.p - BigUint::from(2u8)), &self.p))
    }
    fn is_zero(&self, a: &BigUint) -> bool {
        a.is_zero()
    }
    fn sample(&self, rng: &mut impl Rng) -> BigUint {
        let bits = self.p.bits();
        loop {
            let bytes: Vec<u8> = (0..bits.div_ceil(8)).map(|_| rng.gen()).collect();
            let mut x = BigUint::from_bytes_le(&bytes);
            let excess = 8 * bytes.len() as u64 - bits;
            x >>= excess;
            if x < self.p {
                return x;
            }
        }
    }
    fn modulus_bits(&self) -> u32 {
        self.p.bits() as u32
    }
    fn modulus_f64(&self) -> f64 {
        use num_traits::ToPrimitive;
        self.p.to_f64().unwrap_or(f64::MAX)
    }
}

fn add_mod(a: u128, b: u128, p: u128) -> u128 {
    let (r, carry) = a.overflowing_add(b);
    if carry || r >= p {
        r.wrapping_sub(p)
    } else {
        r
    }
}

/// 128x128 -> 256 bit product as (lo, hi).
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64 as u128, a >> 64);
    let (b0, b1) = (b as u64 as u128, b >> 64);
    let ll = a0 * b0;
    let lh = a0 * b1;
    let hl = a1 * b0;
    let hh = a1 * b1;
    let mid = (ll >> 64) + (lh as u64 as u128) + (hl as u64 as u128);
    let lo = (mid << 64) | (ll as u64 as u128);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (lo, hi)
}

fn uniform_below(rng: &mut impl Rng, p: u128) -> u128 {
    // rejection sampling on the minimal covering bit width
    let bits = 128 - p.leading_zeros();
    let mask = if bits == 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    };
    loop {
        let x: u128 = rng.gen::<u128>() & mask;
        if x < p {
            return x;
        }
    }
}

/// Draw a uniform prime in [2^bit_width, 2^(bit_width+1)), verified by 64
/// Miller-Rabin rounds (composite error probability below 2^-128).
pub fn random_prime(bit_width: u32, rng: &mut impl Rng) -> PrimeField {
    assert!((8..=127).contains(&bit_width), "bit_width must be in 8..=127");
    loop {
        let span = 1u128 << bit_width;
        let mut cand = span + uniform_below(rng, span);
        cand |= 1;
        if is_probable_prime(cand, 64, rng) {
            return PrimeField::new(cand);
        }
    }
}

const SMALL_PRIMES: [u128; 20] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73,
];

pub fn is_probable_prime(n: u128, rounds: u32, rng: &mut impl Rng) -> bool {
    if n < 2 {
        return false;
    }
    if n == 2 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    for q in SMALL_PRIMES {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let f = PrimeField::new(n); // Montgomery machinery only needs oddness
    let d = n - 1;
    let s = d.trailing_zeros();
    let d = d >> s;
    'witness: for _ in 0..rounds {
        let a = 2 + uniform_below(rng, n - 3);
        let mut x = f.pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = f.mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Outcome of the unlucky-prime size heuristic for a given network.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PrimeSizeCheck {
    /// E * (E+M)^2 * ln(1 + max column 1-norm of S)
    pub bound: f64,
    /// log2 of the configured modulus
    pub prime_bits: u32,
    /// true when p exceeds the bound by at least 2^40
    pub ample_margin: bool,
}

/// Evaluate the prime-size requirement for a network: the modulus should
/// exceed E*(E+M)^2*ln(1+max_j |S_j|) by a wide margin (factor >= 2^40) or
/// false zeros from unlucky primes become a concern.
pub fn check_prime_size(net: &ReactionNetwork, field: &PrimeField) -> PrimeSizeCheck {
    let s = crate::network::stoich_matrix(net);
    let e = net.reactions.len() as f64;
    let m = net.metabolites.len() as f64;
    let max_col_norm = (0..net.reactions.len())
        .map(|j| {
            (0..net.metabolites.len())
                .map(|i| s.get(i, j).unsigned_abs())
                .sum::<u64>()
        })
        .max()
        .unwrap_or(0) as f64;
    let bound = e * (e + m) * (e + m) * (1.0 + max_col_norm).ln();
    let ample_margin = field.modulus_f64() >= bound * (2f64).powi(40);
    PrimeSizeCheck {
        bound,
        prime_bits: field.modulus_bits(),
        ample_margin,
    }
}
