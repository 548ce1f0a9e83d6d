//! Arithmetic in GF(q), q = p^k with p an odd prime.
//!
//! Elements are stored as their enumeration index: the coefficient vector
//! `(c_0, .., c_{k-1})` in the basis `1, α, .., α^{k-1}` read as a base-`p`
//! number with `c_0` least significant. Index 0 is zero and index 1 is one.
//! The extension modulus is the smallest monic irreducible polynomial of
//! degree `k` in that same ordering, so every run produces the same encoding.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest field order accepted unless the caller raises it.
pub const DEFAULT_MAX_ORDER: u64 = 10_000;

/// Fields up to this order get a full addition table.
const ADD_TABLE_LIMIT: u32 = 729;

#[derive(
    Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Wraps a raw index without range checking. Use [`Field::element`]
    /// when the index comes from outside.
    pub const fn from_index(index: u32) -> Self {
        FieldElement(index)
    }

    pub const fn index(self) -> u32 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut i = 3;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

/// Splits `q` into `(p, k)` with `q = p^k`, if `q` is a prime power.
pub fn prime_power_parts(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut k = 0;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

pub struct Field {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    eta: Vec<i8>,
    neg: Vec<u32>,
    add_table: Option<Vec<u32>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.p)
            .field("k", &self.k)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        Self::with_max_order(p, k, DEFAULT_MAX_ORDER)
    }

    /// Builds GF(q) from its order, e.g. `9` for GF(3^2).
    pub fn from_order(q: u64) -> Result<Self> {
        Self::from_order_with_max(q, DEFAULT_MAX_ORDER)
    }

    pub fn from_order_with_max(q: u64, max: u64) -> Result<Self> {
        let (p, k) = prime_power_parts(q).ok_or(Error::NotPrimePower(q))?;
        Self::with_max_order(p, k, max)
    }

    pub fn with_max_order(p: u64, k: u32, max: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p == 2 {
            return Err(Error::EvenCharacteristic);
        }
        if k == 0 {
            return Err(Error::ZeroDegree);
        }
        let q = p
            .checked_pow(k)
            .filter(|&q| q <= max && q <= u32::MAX as u64)
            .ok_or(Error::TooLarge {
                size: p.saturating_pow(k),
                max,
            })?;
        let (p, q) = (p as u32, q as u32);

        let modulus = if k == 1 {
            vec![0, 1]
        } else {
            smallest_irreducible(p, k as usize)
        };

        let mut neg = vec![0u32; q as usize];
        for (a, slot) in neg.iter_mut().enumerate() {
            *slot = digitwise(a as u32, 0, p, k, |x, _| (p - x) % p);
        }

        let (exp, log) = discrete_log_tables(p, k as usize, q, &modulus);

        let mut field = Field {
            p,
            k,
            q,
            modulus,
            exp,
            log,
            eta: Vec::new(),
            neg,
            add_table: None,
        };
        if q <= ADD_TABLE_LIMIT {
            let mut table = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    table[(a * q + b) as usize] = digitwise(a, b, p, k, |x, y| (x + y) % p);
                }
            }
            field.add_table = Some(table);
        }
        let half = (q as u64 - 1) / 2;
        field.eta = (0..q)
            .map(|a| match field.pow(FieldElement(a), half) {
                FieldElement::ZERO => 0,
                FieldElement::ONE => 1,
                _ => -1,
            })
            .collect();
        Ok(field)
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Ascending coefficients of the monic modulus (length `k + 1`).
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn element(&self, index: u64) -> Result<FieldElement> {
        if index < self.q as u64 {
            Ok(FieldElement(index as u32))
        } else {
            Err(Error::InvalidElement { index, q: self.q })
        }
    }

    /// All elements in enumeration order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (0..self.q).map(FieldElement)
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (1..self.q).map(FieldElement)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        let mut x = a.0;
        (0..self.k)
            .map(|_| {
                let c = x % self.p;
                x /= self.p;
                c
            })
            .collect()
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() != self.k as usize {
            return Err(Error::DimensionMismatch {
                expected: self.k as usize,
                got: coeffs.len(),
            });
        }
        let mut index = 0u32;
        for &c in coeffs.iter().rev() {
            if c >= self.p {
                return Err(Error::InvalidElement {
                    index: c as u64,
                    q: self.p,
                });
            }
            index = index * self.p + c;
        }
        Ok(FieldElement(index))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        match &self.add_table {
            Some(t) => FieldElement(t[(a.0 * self.q + b.0) as usize]),
            None if self.k == 1 => FieldElement((a.0 + b.0) % self.p),
            None => FieldElement(digitwise(a.0, b.0, self.p, self.k, |x, y| (x + y) % self.p)),
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let s = self.log[a.0 as usize] + self.log[b.0 as usize];
        let n = self.q - 1;
        FieldElement(self.exp[(if s >= n { s - n } else { s }) as usize])
    }

    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.q - 1;
        let l = self.log[a.0 as usize];
        Ok(FieldElement(self.exp[((n - l) % n) as usize]))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Square-and-multiply; `pow(0, 0) = 1`.
    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Quadratic character: 0 at zero, 1 on non-zero squares, -1 otherwise.
    #[inline]
    pub fn eta(&self, a: FieldElement) -> i8 {
        self.eta[a.0 as usize]
    }

    pub fn is_square(&self, a: FieldElement) -> bool {
        self.eta(a) >= 0
    }

    /// First element, in enumeration order, that is not a square.
    pub fn smallest_nonsquare(&self) -> FieldElement {
        self.elements()
            .find(|&a| self.eta(a) == -1)
            .expect("odd-order fields have non-squares")
    }

    /// `q mod 4`; -1 is a square exactly when this is 1.
    pub fn order_mod4(&self) -> u32 {
        self.q % 4
    }
}

fn digitwise(a: u32, b: u32, p: u32, k: u32, f: impl Fn(u32, u32) -> u32) -> u32 {
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut place = 1;
    for _ in 0..k {
        out += f(a % p, b % p) * place;
        a /= p;
        b /= p;
        place *= p;
    }
    out
}

fn index_to_poly(mut x: u32, p: u32, k: usize) -> Vec<u32> {
    (0..k)
        .map(|_| {
            let c = x % p;
            x /= p;
            c
        })
        .collect()
}

fn poly_to_index(coeffs: &[u32], p: u32) -> u32 {
    coeffs.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Remainder of `a` modulo a monic `m` (ascending coefficients).
pub(crate) fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let dm = m.len() - 1;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let p64 = p as u64;
    while r.len() > dm {
        let lead = r.pop().unwrap() % p64;
        if lead != 0 {
            let base = r.len() - dm;
            for (i, &mc) in m[..dm].iter().enumerate() {
                let sub = lead * mc as u64 % p64;
                r[base + i] = (r[base + i] + p64 - sub) % p64;
            }
        }
    }
    r.resize(dm, 0);
    r.into_iter().map(|c| c as u32).collect()
}

/// Schoolbook product reduced by the monic modulus `m`.
pub(crate) fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let prod: Vec<u32> = prod.into_iter().map(|c| c as u32).collect();
    poly_rem(&prod, m, p)
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
pub(crate) fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for tail in 0..count {
            let mut g = index_to_poly(tail as u32, p, d);
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn smallest_irreducible(p: u32, k: usize) -> Vec<u32> {
    let count = (p as u64).pow(k as u32);
    (0..count)
        .map(|tail| {
            let mut f = index_to_poly(tail as u32, p, k);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(f, p))
        .expect("irreducible polynomials exist in every degree")
}

fn discrete_log_tables(p: u32, k: usize, q: u32, modulus: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let n = (q - 1) as usize;
    for g in 1..q {
        let gp = index_to_poly(g, p, k);
        let mut exp = Vec::with_capacity(n);
        let mut cur = index_to_poly(1, p, k);
        let mut ok = true;
        for i in 0..n {
            let idx = poly_to_index(&cur, p);
            if i > 0 && idx == 1 {
                ok = false;
                break;
            }
            exp.push(idx);
            cur = if k == 1 {
                vec![(cur[0] as u64 * g as u64 % p as u64) as u32]
            } else {
                poly_mulmod(&cur, &gp, modulus, p)
            };
        }
        if ok {
            let mut log = vec![0u32; q as usize];
            for (i, &e) in exp.iter().enumerate() {
                log[e as usize] = i as u32;
            }
            return (exp, log);
        }
    }
    unreachable!("the multiplicative group of a finite field is cyclic")
}
