//! Exact arithmetic mod an odd prime p, polynomials over F_p, and the
//! complex root-of-unity table e_p(k) = exp(2 pi i k / p).
//!
//! Residues are kept as canonical representatives in [0, p-1]; every public
//! operation reduces its inputs. p is restricted to < 2^31 so products fit
//! in u64 before reduction.

use num_complex::Complex64;

use crate::{Error, Result};

/// The field F_p for an odd prime p in [3, 2^31).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p >= (1 << 31) || p % 2 == 0 || !is_prime_u64(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Canonical representative of x mod p, for possibly negative x.
    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a % self.p + b % self.p) % self.p
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a % self.p + self.p - b % self.p) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        (a % self.p) * (b % self.p) % self.p
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        base %= self.p;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            exp >>= 1;
        }
        acc
    }

    /// a^{-1} mod p via Fermat.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a % self.p == 0 {
            return Err(Error::ZeroInverse(self.p));
        }
        Ok(self.pow(a, self.p - 2))
    }

    /// Legendre symbol (a|p) in {-1, 0, 1} by Euler's criterion.
    pub fn legendre(&self, a: u64) -> i32 {
        let a = a % self.p;
        if a == 0 {
            return 0;
        }
        let e = self.pow(a, (self.p - 1) / 2);
        if e == 1 {
            1
        } else {
            -1
        }
    }
}

/// Deterministic Miller-Rabin, valid for all u64.
fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        a %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A polynomial over F_p with zero constant term, degree d with
/// 1 <= d < p and p not dividing d. Coefficients lowest-degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpPoly {
    coeffs: Vec<u64>,
    degree: usize,
}

impl FpPoly {
    pub fn new(field: &PrimeField, raw: &[i64]) -> Result<Self> {
        let p = field.p();
        let mut coeffs: Vec<u64> = raw.iter().map(|&c| field.reduce(c)).collect();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::BadPoly("zero polynomial".into()));
        }
        if coeffs[0] != 0 {
            return Err(Error::BadPoly("constant term must be 0".into()));
        }
        let degree = coeffs.len() - 1;
        if degree < 1 {
            return Err(Error::BadPoly("degree must be >= 1".into()));
        }
        if degree as u64 >= p || degree as u64 % p == 0 {
            return Err(Error::BadPoly(format!(
                "degree {degree} must satisfy 1 <= d < p and p does not divide d"
            )));
        }
        Ok(FpPoly { coeffs, degree })
    }

    /// y^k (k >= 1).
    pub fn monomial(field: &PrimeField, k: usize) -> Result<Self> {
        let mut raw = vec![0i64; k + 1];
        raw[k] = 1;
        FpPoly::new(field, &raw)
    }

    /// Parse a comma-separated coefficient list, lowest degree first
    /// ("0,0,1" is y^2).
    pub fn parse(field: &PrimeField, s: &str) -> Result<Self> {
        let raw: std::result::Result<Vec<i64>, _> =
            s.split(',').map(|t| t.trim().parse::<i64>()).collect();
        let raw = raw.map_err(|e| Error::BadPoly(format!("cannot parse '{s}': {e}")))?;
        FpPoly::new(field, &raw)
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn leading_coeff(&self) -> u64 {
        self.coeffs[self.degree]
    }

    /// Horner evaluation at y.
    pub fn eval(&self, field: &PrimeField, y: u64) -> u64 {
        let y = y % field.p();
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = field.add(field.mul(acc, y), c);
        }
        acc
    }

    /// The pair (a, b) when the polynomial is a*y^2 + b*y with a != 0.
    pub fn as_quadratic(&self) -> Result<(u64, u64)> {
        if self.degree != 2 {
            return Err(Error::NotQuadratic);
        }
        Ok((self.coeffs[2], self.coeffs[1]))
    }
}

/// True iff no nontrivial F_p-linear combination of the two polynomials
/// vanishes, i.e. the coefficient vectors are not proportional.
pub fn linearly_independent(field: &PrimeField, phi1: &FpPoly, phi2: &FpPoly) -> bool {
    let n = phi1.coeffs.len().max(phi2.coeffs.len());
    let get = |p: &FpPoly, i: usize| *p.coeffs.get(i).unwrap_or(&0);
    // Rank-2 check via 2x2 minors of the coefficient matrix.
    for i in 0..n {
        for j in i + 1..n {
            let det = field.sub(
                field.mul(get(phi1, i), get(phi2, j)),
                field.mul(get(phi1, j), get(phi2, i)),
            );
            if det != 0 {
                return true;
            }
        }
    }
    false
}

// --- dense polynomial utilities over F_p (used by the rational-sum verifier) ---

pub(crate) fn poly_trim(c: &mut Vec<u64>) {
    while c.last() == Some(&0) {
        c.pop();
    }
}

pub(crate) fn poly_deg(c: &[u64]) -> Option<usize> {
    if c.is_empty() {
        None
    } else {
        Some(c.len() - 1)
    }
}

pub(crate) fn poly_eval_raw(field: &PrimeField, c: &[u64], y: u64) -> u64 {
    let mut acc = 0u64;
    for &ci in c.iter().rev() {
        acc = field.add(field.mul(acc, y), ci);
    }
    acc
}

pub(crate) fn poly_derivative(field: &PrimeField, c: &[u64]) -> Vec<u64> {
    let mut d: Vec<u64> = c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &ci)| field.mul(i as u64 % field.p(), ci))
        .collect();
    poly_trim(&mut d);
    d
}

/// Remainder of a mod b (b nonzero).
pub(crate) fn poly_rem(field: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    poly_trim(&mut r);
    let db = poly_deg(b).expect("division by zero polynomial");
    let lead_inv = field.inv(b[db]).expect("nonzero leading coefficient");
    while let Some(dr) = poly_deg(&r) {
        if dr < db {
            break;
        }
        let q = field.mul(r[dr], lead_inv);
        for i in 0..=db {
            let t = field.mul(q, b[i]);
            r[dr - db + i] = field.sub(r[dr - db + i], t);
        }
        poly_trim(&mut r);
    }
    r
}

/// Exact quotient a / b, assuming b divides a.
pub(crate) fn poly_div_exact(field: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    poly_trim(&mut r);
    let db = poly_deg(b).expect("division by zero polynomial");
    let da = match poly_deg(&r) {
        Some(d) if d >= db => d,
        _ => return vec![],
    };
    let lead_inv = field.inv(b[db]).expect("nonzero leading coefficient");
    let mut q = vec![0u64; da - db + 1];
    while let Some(dr) = poly_deg(&r) {
        if dr < db {
            break;
        }
        let c = field.mul(r[dr], lead_inv);
        q[dr - db] = c;
        for i in 0..=db {
            let t = field.mul(c, b[i]);
            r[dr - db + i] = field.sub(r[dr - db + i], t);
        }
        poly_trim(&mut r);
    }
    q
}

/// Monic gcd over F_p.
pub(crate) fn poly_gcd(field: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut a: Vec<u64> = a.to_vec();
    let mut b: Vec<u64> = b.to_vec();
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !b.is_empty() {
        let r = poly_rem(field, &a, &b);
        a = b;
        b = r;
    }
    if let Some(d) = poly_deg(&a) {
        let inv = field.inv(a[d]).unwrap();
        for c in a.iter_mut() {
            *c = field.mul(*c, inv);
        }
    }
    a
}

/// Precomputed values of e_p(k) = exp(2 pi i k / p), each evaluated
/// directly from k by trig (no iterated multiplication drift).
#[derive(Debug, Clone)]
pub struct UnitRootTable {
    p: u64,
    values: Vec<Complex64>,
}

impl UnitRootTable {
    pub fn new(field: &PrimeField) -> Self {
        let p = field.p();
        let values = (0..p)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * (k as f64) / (p as f64);
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        UnitRootTable { p, values }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// e_p(x), with x reduced mod p (negative x allowed).
    #[inline]
    pub fn ep(&self, x: i64) -> Complex64 {
        self.values[x.rem_euclid(self.p as i64) as usize]
    }

    /// e_p(r) for a canonical residue r in [0, p).
    #[inline]
    pub fn ep_res(&self, r: u64) -> Complex64 {
        self.values[(r % self.p) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn prime_validation() {
        assert!(PrimeField::new(2).is_err());
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::new(1).is_err());
        assert!(PrimeField::new(3).is_ok());
        assert!(PrimeField::new(2147483647).is_ok()); // 2^31 - 1 is prime
        assert!(PrimeField::new(1 << 31).is_err());
    }

    #[test]
    fn ep_values() {
        let field = f(5);
        let t = UnitRootTable::new(&field);
        assert!((t.ep(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let f7 = f(7);
        let t7 = UnitRootTable::new(&f7);
        assert!((t7.ep(7) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let s: Complex64 = (0..7).map(|k| t7.ep(k)).sum();
        assert!(s.norm() < 1e-9);
        for k in 0..7 {
            assert!((t7.ep(k).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ep_is_a_character() {
        for p in [5u64, 31, 101] {
            let field = f(p);
            let t = UnitRootTable::new(&field);
            for x in 0..p as i64 {
                for y in 0..p as i64 {
                    assert!((t.ep(x) * t.ep(y) - t.ep(x + y)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mod_inverse_examples() {
        let f7 = f(7);
        assert_eq!(f7.inv(3).unwrap(), 5);
        for p in [5u64, 31, 101] {
            let field = f(p);
            assert_eq!(field.inv(1).unwrap(), 1);
            assert_eq!(field.inv(p - 1).unwrap(), p - 1);
            assert!(field.inv(0).is_err());
            for a in 1..p {
                let inv = field.inv(a).unwrap();
                assert_eq!(field.mul(a, inv), 1);
                assert_eq!(field.inv(inv).unwrap(), a);
            }
        }
    }

    #[test]
    fn legendre_examples() {
        let f7 = f(7);
        assert_eq!(f7.legendre(0), 0);
        assert_eq!(f7.legendre(1), 1);
        // squares mod 7 are {1, 2, 4}
        assert_eq!(f7.legendre(3), -1);
        for v in [1u64, 2, 4] {
            assert_eq!(f7.legendre(v), 1);
        }
        for v in [3u64, 5, 6] {
            assert_eq!(f7.legendre(v), -1);
        }
    }

    #[test]
    fn legendre_multiplicative_exhaustive() {
        for p in [5u64, 7, 31, 101] {
            let field = f(p);
            for a in 1..p {
                for b in 1..p {
                    assert_eq!(
                        field.legendre(field.mul(a, b)),
                        field.legendre(a) * field.legendre(b)
                    );
                }
            }
        }
    }

    #[test]
    fn poly_invariants() {
        let field = f(7);
        assert!(FpPoly::new(&field, &[1, 1]).is_err()); // nonzero constant term
        assert!(FpPoly::new(&field, &[0]).is_err()); // zero polynomial
        assert!(FpPoly::new(&field, &[0, 0, 0]).is_err());
        let f5 = f(5);
        // degree 5 = p not allowed
        assert!(FpPoly::new(&f5, &[0, 0, 0, 0, 0, 1]).is_err());
        let sq = FpPoly::new(&field, &[0, 0, 1]).unwrap();
        assert_eq!(sq.degree(), 2);
        assert_eq!(sq.leading_coeff(), 1);
    }

    #[test]
    fn poly_eval_examples() {
        let field = f(7);
        let sq = FpPoly::new(&field, &[0, 0, 1]).unwrap();
        assert_eq!(sq.eval(&field, 3), 2); // 9 mod 7
        let cube = FpPoly::new(&field, &[0, 0, 0, 1]).unwrap();
        assert_eq!(cube.eval(&field, 0), 0);
        let mixed = FpPoly::new(&field, &[0, 1, 1]).unwrap(); // y^2 + y
        assert_eq!(mixed.eval(&field, 6), 0); // (p-1)^2 + (p-1) = 1 - 1
    }

    #[test]
    fn linear_independence_examples() {
        let field = f(7);
        let sq = FpPoly::new(&field, &[0, 0, 1]).unwrap();
        let cube = FpPoly::new(&field, &[0, 0, 0, 1]).unwrap();
        let sq2 = FpPoly::new(&field, &[0, 0, 2]).unwrap();
        let sq_plus_y = FpPoly::new(&field, &[0, 1, 1]).unwrap();
        assert!(linearly_independent(&field, &sq, &cube));
        assert!(!linearly_independent(&field, &sq, &sq2));
        assert!(linearly_independent(&field, &sq_plus_y, &sq));
    }

    #[test]
    fn linear_independence_matches_scalar_multiples() {
        // dependent exactly when one polynomial is a scalar multiple of the other
        for p in [5u64, 7, 13, 31] {
            let field = f(p);
            let polys: Vec<FpPoly> = (1..=4)
                .flat_map(|d| {
                    (1..p.min(4)).filter_map(move |c| {
                        let mut raw = vec![0i64; d + 1];
                        raw[d] = c as i64;
                        FpPoly::new(&field, &raw).ok()
                    })
                })
                .collect();
            for a in &polys {
                for b in &polys {
                    let mut scalar_multiple = false;
                    for c in 1..p {
                        let n = a.coeffs().len().max(b.coeffs().len());
                        let all = (0..n).all(|i| {
                            let ai = *a.coeffs().get(i).unwrap_or(&0);
                            let bi = *b.coeffs().get(i).unwrap_or(&0);
                            field.mul(c, ai) == bi
                        });
                        if all {
                            scalar_multiple = true;
                            break;
                        }
                    }
                    assert_eq!(linearly_independent(&field, a, b), !scalar_multiple);
                    assert_eq!(
                        linearly_independent(&field, a, b),
                        linearly_independent(&field, b, a)
                    );
                }
            }
        }
    }

    #[test]
    fn poly_gcd_and_derivative() {
        let field = f(31);
        // (x-1)(x-2) = x^2 - 3x + 2 and (x-1): gcd is x-1 monic
        let a = vec![2u64, field.reduce(-3), 1];
        let b = vec![field.reduce(-1), 1];
        let g = poly_gcd(&field, &a, &b);
        assert_eq!(g, vec![field.reduce(-1), 1]);
        let d = poly_derivative(&field, &a);
        assert_eq!(d, vec![field.reduce(-3), 2]);
        let q = poly_div_exact(&field, &a, &b);
        assert_eq!(q, vec![field.reduce(-2), 1]);
    }
}
