//! The exponential-sum kernel K(n1, m2) = E_y e_p(n1 phi1(y) + m2 phi2(y)),
//! its truncation (m2 = 0 column zeroed), the multiplicative difference
//! operator Delta_u, and the quadratic-case Gauss closed form.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fp::{FpPoly, PrimeField, UnitRootTable};
use crate::transform::{FastDft, GridFn, Side};
use crate::{Error, Result};

/// The p x p table of kernel values, indexed (n1, m2) row-major.
#[derive(Debug, Clone)]
pub struct KernelTable {
    p: u64,
    phi1: FpPoly,
    phi2: FpPoly,
    values: Vec<Complex64>,
    truncated: bool,
}

impl KernelTable {
    pub(crate) fn from_parts(
        p: u64,
        phi1: FpPoly,
        phi2: FpPoly,
        values: Vec<Complex64>,
        truncated: bool,
    ) -> Self {
        KernelTable { p, phi1, phi2, values, truncated }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn phi1(&self) -> &FpPoly {
        &self.phi1
    }

    #[inline]
    pub fn phi2(&self) -> &FpPoly {
        &self.phi2
    }

    #[inline]
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    #[inline]
    pub fn get(&self, n1: u64, m2: u64) -> Complex64 {
        self.values[(n1 % self.p * self.p + m2 % self.p) as usize]
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Zero the m2 = 0 column (the K~ modification).
    pub fn truncate(&self) -> Result<KernelTable> {
        if self.truncated {
            return Err(Error::AlreadyTruncated);
        }
        let mut out = self.clone();
        let p = self.p as usize;
        for n1 in 0..p {
            out.values[n1 * p] = Complex64::new(0.0, 0.0);
        }
        out.truncated = true;
        Ok(out)
    }

    /// Maximum degree of the two polynomials.
    pub fn max_degree(&self) -> usize {
        self.phi1.degree().max(self.phi2.degree())
    }
}

/// Multiplicity table of the value map y -> (phi1(y), phi2(y)).
#[derive(Debug, Clone)]
pub struct PushforwardCounts {
    p: u64,
    counts: Vec<u32>,
}

impl PushforwardCounts {
    pub fn new(field: &PrimeField, phi1: &FpPoly, phi2: &FpPoly) -> Self {
        let p = field.p();
        let mut counts = vec![0u32; (p * p) as usize];
        for y in 0..p {
            let a = phi1.eval(field, y);
            let b = phi2.eval(field, y);
            counts[(a * p + b) as usize] += 1;
        }
        PushforwardCounts { p, counts }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    #[inline]
    pub fn get(&self, a: u64, b: u64) -> u32 {
        self.counts[(a % self.p * self.p + b % self.p) as usize]
    }
}

/// Direct O(p^3) kernel evaluation; the reference path.
pub fn kernel_naive(
    field: &PrimeField,
    roots: &UnitRootTable,
    phi1: &FpPoly,
    phi2: &FpPoly,
) -> KernelTable {
    let p = field.p();
    let v1: Vec<u64> = (0..p).map(|y| phi1.eval(field, y)).collect();
    let v2: Vec<u64> = (0..p).map(|y| phi2.eval(field, y)).collect();
    let scale = 1.0 / p as f64;
    let values: Vec<Complex64> = (0..p)
        .into_par_iter()
        .flat_map_iter(|n1| {
            let v1 = &v1;
            let v2 = &v2;
            (0..p).map(move |m2| {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..p as usize {
                    let idx = (n1 * v1[y] + m2 * v2[y]) % p;
                    acc += roots.ep_res(idx);
                }
                acc * scale
            })
        })
        .collect();
    KernelTable { p, phi1: phi1.clone(), phi2: phi2.clone(), values, truncated: false }
}

/// Kernel via the 2-D transform of the pushforward counts:
/// K(n1, m2) = p * c^(-n1, -m2). Agrees with [`kernel_naive`].
pub fn kernel_fast(
    field: &PrimeField,
    fast: &FastDft,
    phi1: &FpPoly,
    phi2: &FpPoly,
) -> KernelTable {
    let p = field.p();
    let counts = PushforwardCounts::new(field, phi1, phi2);
    let grid = GridFn::from_values(
        p,
        2,
        Side::Physical,
        counts.counts().iter().map(|&c| Complex64::new(c as f64, 0.0)).collect(),
    )
    .unwrap();
    let ch = fast.dft(&grid).unwrap();
    let mut values = vec![Complex64::new(0.0, 0.0); (p * p) as usize];
    for n1 in 0..p {
        for m2 in 0..p {
            let a = (p - n1) % p;
            let b = (p - m2) % p;
            values[(n1 * p + m2) as usize] = ch.at(a, b) * p as f64;
        }
    }
    KernelTable { p, phi1: phi1.clone(), phi2: phi2.clone(), values, truncated: false }
}

/// Delta_u g(n) = g(n) * conj(g(n + u)) on a p x p table, wraparound indexing.
pub fn delta_shift_2d(values: &[Complex64], p: u64, u: (u64, u64)) -> Vec<Complex64> {
    let pu = p as usize;
    debug_assert_eq!(values.len(), pu * pu);
    let (u1, u2) = (u.0 % p, u.1 % p);
    let mut out = vec![Complex64::new(0.0, 0.0); pu * pu];
    for n1 in 0..p {
        let s1 = (n1 + u1) % p;
        for n2 in 0..p {
            let s2 = (n2 + u2) % p;
            out[(n1 * p + n2) as usize] =
                values[(n1 * p + n2) as usize] * values[(s1 * p + s2) as usize].conj();
        }
    }
    out
}

/// 1-D variant of [`delta_shift_2d`].
pub fn delta_shift_1d(values: &[Complex64], p: u64, u: u64) -> Vec<Complex64> {
    let pu = p as usize;
    debug_assert_eq!(values.len(), pu);
    let u = (u % p) as usize;
    (0..pu).map(|n| values[n] * values[(n + u) % pu].conj()).collect()
}

/// The m2 = 0 column as a standalone 1-D kernel: K(n1, 0) = E_y e_p(n1 phi1(y)).
pub fn kernel_column0(field: &PrimeField, roots: &UnitRootTable, phi1: &FpPoly) -> Vec<Complex64> {
    let p = field.p();
    let v1: Vec<u64> = (0..p).map(|y| phi1.eval(field, y)).collect();
    let scale = 1.0 / p as f64;
    (0..p)
        .map(|n1| {
            let mut acc = Complex64::new(0.0, 0.0);
            for y in 0..p as usize {
                acc += roots.ep_res(n1 * v1[y] % p);
            }
            acc * scale
        })
        .collect()
}

/// Exact classical evaluation of the quadratic-case kernel.
///
/// For phi_i = a_i y^2 + b_i y with a_i != 0, the complete sum
/// p^-1 sum_y e_p(alpha y^2 + beta y) with alpha = a1 n1 + a2 m2 and
/// beta = b1 n1 + b2 m2 equals, for alpha != 0,
/// p^-1 * (alpha|p) * g_p * e_p(-beta^2 (4 alpha)^-1), where g_p is the
/// classical Gauss sum (sqrt(p) for p = 1 mod 4, i sqrt(p) for p = 3 mod 4).
/// For alpha = 0 it is 1 if beta = 0 and 0 otherwise.
pub fn gauss_kernel_quadratic(
    field: &PrimeField,
    roots: &UnitRootTable,
    phi1: &FpPoly,
    phi2: &FpPoly,
) -> Result<KernelTable> {
    let p = field.p();
    let (a1, b1) = phi1.as_quadratic()?;
    let (a2, b2) = phi2.as_quadratic()?;
    if a1 == 0 || a2 == 0 {
        return Err(Error::NotQuadratic);
    }
    let sqrt_p = (p as f64).sqrt();
    let gauss = if p % 4 == 1 {
        Complex64::new(sqrt_p, 0.0)
    } else {
        Complex64::new(0.0, sqrt_p)
    };
    let scale = 1.0 / p as f64;
    let mut values = vec![Complex64::new(0.0, 0.0); (p * p) as usize];
    for n1 in 0..p {
        for m2 in 0..p {
            let alpha = field.add(field.mul(a1, n1), field.mul(a2, m2));
            let beta = field.add(field.mul(b1, n1), field.mul(b2, m2));
            let v = if alpha == 0 {
                if beta == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            } else {
                let inv4a = field.inv(field.mul(4, alpha))?;
                let phase = field.neg(field.mul(field.mul(beta, beta), inv4a));
                let chi = field.legendre(alpha) as f64;
                gauss * chi * scale * roots.ep_res(phase)
            };
            values[(n1 * p + m2) as usize] = v;
        }
    }
    Ok(KernelTable { p, phi1: phi1.clone(), phi2: phi2.clone(), values, truncated: false })
}
