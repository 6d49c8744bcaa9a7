//! Discrete Fourier transforms on F_p and F_p^2.
//!
//! Forward transform: f^(z) = p^-dim * sum_x f(x) e_p(-x.z)  (normalized).
//! Inverse transform: f(x)  = sum_z f^(z) e_p(x.z)           (unnormalized).
//!
//! The naive paths are the reference; [`FastDft`] is the performance path,
//! using Rader reindexing through a generator of F_p^* with the
//! length-(p-1) cyclic convolution done by a zero-padded power-of-two FFT.
//! 2-D transforms are axis-separable applications of the 1-D transform.

use num_complex::Complex64;

use crate::fp::{PrimeField, UnitRootTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Physical,
    Frequency,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Physical => "physical",
            Side::Frequency => "frequency",
        }
    }

    pub fn flipped(self) -> Side {
        match self {
            Side::Physical => Side::Frequency,
            Side::Frequency => Side::Physical,
        }
    }
}

/// A complex-valued function on F_p (dim 1) or F_p^2 (dim 2, row-major
/// by (x1, x2)), tagged with the side it lives on.
#[derive(Debug, Clone)]
pub struct GridFn {
    p: u64,
    dim: u8,
    side: Side,
    values: Vec<Complex64>,
}

impl GridFn {
    pub fn from_values(p: u64, dim: u8, side: Side, values: Vec<Complex64>) -> Result<Self> {
        let expect = (p as usize).pow(dim as u32);
        if !(dim == 1 || dim == 2) || values.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "dim {dim} with p={p} needs {expect} values, got {}",
                values.len()
            )));
        }
        Ok(GridFn { p, dim, side, values })
    }

    pub fn constant(p: u64, dim: u8, c: Complex64) -> Self {
        let n = (p as usize).pow(dim as u32);
        GridFn { p, dim, side: Side::Physical, values: vec![c; n] }
    }

    /// Point mass of the given weight at one index.
    pub fn delta(p: u64, dim: u8, at: usize, weight: Complex64) -> Self {
        let n = (p as usize).pow(dim as u32);
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        values[at] = weight;
        GridFn { p, dim, side: Side::Physical, values }
    }

    pub fn from_fn_2d(p: u64, side: Side, mut f: impl FnMut(u64, u64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity((p * p) as usize);
        for x1 in 0..p {
            for x2 in 0..p {
                values.push(f(x1, x2));
            }
        }
        GridFn { p, dim: 2, side, values }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn dim(&self) -> u8 {
        self.dim
    }

    #[inline]
    pub fn side(&self) -> Side {
        self.side
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, x1: u64, x2: u64) -> Complex64 {
        debug_assert_eq!(self.dim, 2);
        self.values[(x1 * self.p + x2) as usize]
    }

    fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::SideMismatch { expected: side.name(), got: self.side.name() });
        }
        Ok(())
    }

    pub fn sup_distance(&self, other: &GridFn) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Expectation-normalized r-norm on the physical side:
/// ( mean |f(x)|^r )^(1/r).
pub fn norm_r(f: &GridFn, r: f64) -> f64 {
    debug_assert!(r >= 1.0);
    let n = f.values.len() as f64;
    let s: f64 = f.values.iter().map(|v| v.norm().powf(r)).sum();
    (s / n).powf(1.0 / r)
}

/// Unnormalized Euclidean norm over any index set.
pub fn ell2_norm(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn naive_sum_1d(roots: &UnitRootTable, v: &[Complex64], sign: i64) -> Vec<Complex64> {
    let p = roots.p();
    (0..p)
        .map(|z| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, &vx) in v.iter().enumerate() {
                acc += vx * roots.ep(sign * x as i64 * z as i64);
            }
            acc
        })
        .collect()
}

fn axis_apply(
    p: u64,
    values: &[Complex64],
    mut f: impl FnMut(&[Complex64]) -> Vec<Complex64>,
) -> Vec<Complex64> {
    // Apply a 1-D map along the second axis of a p x p row-major table,
    // then along the first.
    let p = p as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); p * p];
    for r in 0..p {
        let row = f(&values[r * p..(r + 1) * p]);
        out[r * p..(r + 1) * p].copy_from_slice(&row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); p];
    for c in 0..p {
        for r in 0..p {
            col[r] = out[r * p + c];
        }
        let t = f(&col);
        for r in 0..p {
            out[r * p + c] = t[r];
        }
    }
    out
}

/// Reference forward transform, O(p^2) per axis.
pub fn dft(f: &GridFn, roots: &UnitRootTable) -> Result<GridFn> {
    f.expect_side(Side::Physical)?;
    Ok(dft_unchecked(f, roots))
}

/// Forward transform ignoring the side tag (explicit-force escape hatch).
pub fn dft_unchecked(f: &GridFn, roots: &UnitRootTable) -> GridFn {
    let p = f.p;
    let scale = 1.0 / p as f64;
    let values = match f.dim {
        1 => naive_sum_1d(roots, &f.values, -1)
            .into_iter()
            .map(|v| v * scale)
            .collect(),
        _ => axis_apply(p, &f.values, |row| {
            naive_sum_1d(roots, row, -1).into_iter().map(|v| v * scale).collect()
        }),
    };
    GridFn { p, dim: f.dim, side: f.side.flipped(), values }
}

/// Reference inverse transform (unnormalized sum over frequencies).
pub fn inverse_dft(g: &GridFn, roots: &UnitRootTable) -> Result<GridFn> {
    g.expect_side(Side::Frequency)?;
    let p = g.p;
    let values = match g.dim {
        1 => naive_sum_1d(roots, &g.values, 1),
        _ => axis_apply(p, &g.values, |row| naive_sum_1d(roots, row, 1)),
    };
    Ok(GridFn { p, dim: g.dim, side: Side::Physical, values })
}

// --- power-of-two FFT used inside the Rader plan ---

fn fft_pow2(buf: &mut [Complex64], invert: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = 2.0 * std::f64::consts::PI / len as f64 * if invert { 1.0 } else { -1.0 };
        let wlen = Complex64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
    if invert {
        let s = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

fn find_generator(field: &PrimeField) -> u64 {
    let p = field.p();
    let mut factors = Vec::new();
    let mut m = p - 1;
    let mut q = 2u64;
    while q * q <= m {
        if m % q == 0 {
            factors.push(q);
            while m % q == 0 {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    'cand: for g in 2..p {
        for &q in &factors {
            if field.pow(g, (p - 1) / q) == 1 {
                continue 'cand;
            }
        }
        return g;
    }
    unreachable!("every prime field has a generator")
}

/// Reusable prime-length transform plan (Rader) plus cyclic-convolution
/// machinery shared with the averaging module.
pub struct FastDft {
    p: u64,
    roots: UnitRootTable,
    /// powers g^q mod p, q = 0..p-2
    pow: Vec<u64>,
    fft_n: usize,
    /// FFT of the reversed twiddle sequence for the forward transform
    fwd_b_hat: Vec<Complex64>,
}

impl FastDft {
    pub fn new(field: &PrimeField) -> Self {
        let p = field.p();
        let roots = UnitRootTable::new(field);
        let g = find_generator(field);
        let l = (p - 1) as usize;
        let mut pow = vec![0u64; l];
        let mut cur = 1u64;
        for q in 0..l {
            pow[q] = cur;
            cur = field.mul(cur, g);
        }
        let fft_n = (2 * l - 1).next_power_of_two();
        // b[s] = e_p(-g^s); B[j] = b[(-j) mod L], zero-padded and transformed.
        let mut b_rev = vec![Complex64::new(0.0, 0.0); fft_n];
        for j in 0..l {
            let s = (l - j) % l;
            b_rev[j] = roots.ep(-(pow[s] as i64));
        }
        fft_pow2(&mut b_rev, false);
        FastDft { p, roots, pow, fft_n, fwd_b_hat: b_rev }
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn roots(&self) -> &UnitRootTable {
        &self.roots
    }

    /// S(z) = sum_x v[x] e_p(-x z) for all z, via Rader.
    pub fn sum_forward_1d(&self, v: &[Complex64]) -> Vec<Complex64> {
        let p = self.p as usize;
        debug_assert_eq!(v.len(), p);
        let l = p - 1;
        let total: Complex64 = v.iter().sum();
        let mut a = vec![Complex64::new(0.0, 0.0); self.fft_n];
        for q in 0..l {
            a[q] = v[self.pow[q] as usize];
        }
        fft_pow2(&mut a, false);
        for (ai, bi) in a.iter_mut().zip(&self.fwd_b_hat) {
            *ai *= bi;
        }
        fft_pow2(&mut a, true);
        // fold the linear convolution back to a length-L cyclic one
        let mut out = vec![Complex64::new(0.0, 0.0); p];
        out[0] = total;
        for m in 0..l {
            let r = (l - m) % l;
            let conv = a[r] + if r + l < self.fft_n { a[r + l] } else { Complex64::new(0.0, 0.0) };
            out[self.pow[m] as usize] = v[0] + conv;
        }
        out
    }

    /// sum_z v[z] e_p(+x z) for all x.
    pub fn sum_inverse_1d(&self, v: &[Complex64]) -> Vec<Complex64> {
        let conj: Vec<Complex64> = v.iter().map(|c| c.conj()).collect();
        self.sum_forward_1d(&conj).into_iter().map(|c| c.conj()).collect()
    }

    /// Cyclic convolution of two length-p sequences:
    /// out[k] = sum_j a[j] b[(k-j) mod p].
    pub fn cyclic_convolve(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let p = self.p as usize;
        debug_assert_eq!(a.len(), p);
        debug_assert_eq!(b.len(), p);
        let n = (2 * p - 1).next_power_of_two();
        let mut fa = vec![Complex64::new(0.0, 0.0); n];
        let mut fb = vec![Complex64::new(0.0, 0.0); n];
        fa[..p].copy_from_slice(a);
        fb[..p].copy_from_slice(b);
        fft_pow2(&mut fa, false);
        fft_pow2(&mut fb, false);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        fft_pow2(&mut fa, true);
        let mut out = vec![Complex64::new(0.0, 0.0); p];
        for k in 0..p {
            out[k] = fa[k] + if k + p < n { fa[k + p] } else { Complex64::new(0.0, 0.0) };
        }
        out
    }

    /// Fast forward transform; agrees with [`dft`] entrywise.
    pub fn dft(&self, f: &GridFn) -> Result<GridFn> {
        f.expect_side(Side::Physical)?;
        Ok(self.dft_unchecked(f))
    }

    /// Fast forward transform ignoring the side tag.
    pub fn dft_unchecked(&self, f: &GridFn) -> GridFn {
        let p = f.p;
        let scale = 1.0 / p as f64;
        let values = match f.dim {
            1 => self
                .sum_forward_1d(&f.values)
                .into_iter()
                .map(|v| v * scale)
                .collect(),
            _ => axis_apply(p, &f.values, |row| {
                self.sum_forward_1d(row).into_iter().map(|v| v * scale).collect()
            }),
        };
        GridFn { p, dim: f.dim, side: f.side.flipped(), values }
    }

    /// Fast inverse transform (unnormalized).
    pub fn inverse_dft(&self, g: &GridFn) -> Result<GridFn> {
        g.expect_side(Side::Frequency)?;
        let p = g.p;
        let values = match g.dim {
            1 => self.sum_inverse_1d(&g.values),
            _ => axis_apply(p, &g.values, |row| self.sum_inverse_1d(row)),
        };
        Ok(GridFn { p, dim: g.dim, side: Side::Physical, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn setup(p: u64) -> (PrimeField, UnitRootTable, FastDft) {
        let field = PrimeField::new(p).unwrap();
        let roots = UnitRootTable::new(&field);
        let fast = FastDft::new(&field);
        (field, roots, fast)
    }

    #[test]
    fn constant_transforms_to_delta() {
        let (_, roots, _) = setup(7);
        let f = GridFn::constant(7, 2, Complex64::new(1.0, 0.0));
        let fh = dft(&f, &roots).unwrap();
        assert!((fh.values()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        for v in &fh.values()[1..] {
            assert!(v.norm() < 1e-12);
        }
    }

    #[test]
    fn delta_transforms_to_constant() {
        let (_, roots, _) = setup(7);
        let f = GridFn::delta(7, 2, 0, Complex64::new(49.0, 0.0));
        let fh = dft(&f, &roots).unwrap();
        for v in fh.values() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn side_tag_enforced() {
        let (_, roots, fast) = setup(5);
        let f = GridFn::constant(5, 2, Complex64::new(1.0, 0.0));
        let fh = dft(&f, &roots).unwrap();
        assert_eq!(fh.side(), Side::Frequency);
        assert!(dft(&fh, &roots).is_err());
        assert!(fast.dft(&fh).is_err());
        assert!(inverse_dft(&f, &roots).is_err());
    }

    #[test]
    fn inversion_round_trip() {
        for p in [5u64, 31] {
            let (_, roots, _) = setup(p);
            let f = rng::random_complex_grid(p, 42 + p);
            let fh = dft(&f, &roots).unwrap();
            let back = inverse_dft(&fh, &roots).unwrap();
            assert!(f.sup_distance(&back) < 1e-10);
        }
    }

    #[test]
    fn inverse_is_linear() {
        let (_, roots, _) = setup(7);
        let g1 = {
            let mut g = rng::random_complex_grid(7, 1);
            g.side = Side::Frequency;
            g
        };
        let g2 = {
            let mut g = rng::random_complex_grid(7, 2);
            g.side = Side::Frequency;
            g
        };
        let sum = GridFn::from_values(
            7,
            2,
            Side::Frequency,
            g1.values().iter().zip(g2.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let i1 = inverse_dft(&g1, &roots).unwrap();
        let i2 = inverse_dft(&g2, &roots).unwrap();
        let isum = inverse_dft(&sum, &roots).unwrap();
        let lin = GridFn::from_values(
            7,
            2,
            Side::Physical,
            i1.values().iter().zip(i2.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        assert!(isum.sup_distance(&lin) < 1e-10);
    }

    #[test]
    fn fast_matches_naive_small_primes_exhaustive_dims() {
        for p in [3u64, 5, 7, 11, 13] {
            let (_, roots, fast) = setup(p);
            for dim in [1u8, 2] {
                let n = (p as usize).pow(dim as u32);
                let f = GridFn::from_values(
                    p,
                    dim,
                    Side::Physical,
                    rng::random_complex_line(n as u64, p * 7 + dim as u64),
                )
                .unwrap();
                let a = dft(&f, &roots).unwrap();
                let b = fast.dft(&f).unwrap();
                assert!(a.sup_distance(&b) < 1e-9, "p={p} dim={dim}");
            }
        }
    }

    #[test]
    fn fast_matches_naive_p257() {
        let (_, roots, fast) = setup(257);
        let f = GridFn::from_values(257, 1, Side::Physical, rng::random_complex_line(257, 9))
            .unwrap();
        let a = dft(&f, &roots).unwrap();
        let b = fast.dft(&f).unwrap();
        let scale: f64 = f.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(a.sup_distance(&b) < 1e-9 * scale * 257.0);
    }

    #[test]
    fn fast_inverse_matches_naive() {
        let (_, roots, fast) = setup(31);
        let mut g = rng::random_complex_grid(31, 5);
        g.side = Side::Frequency;
        let a = inverse_dft(&g, &roots).unwrap();
        let b = fast.inverse_dft(&g).unwrap();
        assert!(a.sup_distance(&b) < 1e-8);
    }

    #[test]
    fn parseval_and_norms() {
        for p in [5u64, 7, 31, 101] {
            let (_, roots, _) = setup(p);
            let f = rng::random_complex_grid(p, p);
            let fh = dft(&f, &roots).unwrap();
            let lhs = norm_r(&f, 2.0).powi(2);
            let rhs: f64 = fh.values().iter().map(|v| v.norm_sqr()).sum();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.max(1.0), "p={p}");
        }
        // norm of a constant is |c| for every r
        let f = GridFn::constant(7, 2, Complex64::new(-2.5, 0.0));
        for r in [1.0, 2.0, 4.0] {
            assert!((norm_r(&f, r) - 2.5).abs() < 1e-12);
        }
        // ell2 basics
        assert_eq!(ell2_norm(&[]), 0.0);
        assert!((ell2_norm(&[Complex64::new(3.0, 0.0)]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_norm() {
        // indicator of A with |A| = delta * p^2 has norm delta^(1/r)
        let p = 5u64;
        let mut values = vec![Complex64::new(0.0, 0.0); 25];
        for v in values.iter_mut().take(5) {
            *v = Complex64::new(1.0, 0.0);
        }
        let f = GridFn::from_values(p, 2, Side::Physical, values).unwrap();
        let delta = 5.0f64 / 25.0;
        for r in [1.0, 2.0, 4.0] {
            assert!((norm_r(&f, r) - delta.powf(1.0 / r)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadruple_sum_identity_1d() {
        // ||phi||_4^4 = sum over n1-n2-n3+n4 = 0 of
        // phi^(n1) conj phi^(n2) conj phi^(n3) phi^(n4)
        for p in [5u64, 7, 31] {
            let (_, roots, _) = setup(p);
            let phi = GridFn::from_values(p, 1, Side::Physical, rng::random_complex_line(p, 3 * p))
                .unwrap();
            let ph = dft(&phi, &roots).unwrap();
            let h = ph.values();
            let mut rhs = Complex64::new(0.0, 0.0);
            let pi = p as i64;
            for n1 in 0..pi {
                for n2 in 0..pi {
                    for n3 in 0..pi {
                        let n4 = (n2 + n3 - n1).rem_euclid(pi);
                        rhs += h[n1 as usize]
                            * h[n2 as usize].conj()
                            * h[n3 as usize].conj()
                            * h[n4 as usize];
                    }
                }
            }
            let lhs = norm_r(&phi, 4.0).powi(4);
            assert!((lhs - rhs.re).abs() < 1e-8 * lhs.max(1.0), "p={p}");
            assert!(rhs.im.abs() < 1e-8);
        }
    }

    #[test]
    fn real_even_function_has_real_transform() {
        let p = 31u64;
        let (_, roots, _) = setup(p);
        let f = GridFn::from_fn_2d(p, Side::Physical, |x1, x2| {
            let d1 = x1.min(p - x1) as f64;
            let d2 = x2.min(p - x2) as f64;
            Complex64::new((-0.1 * (d1 * d1 + d2 * d2)).exp(), 0.0)
        });
        let fh = dft(&f, &roots).unwrap();
        for v in fh.values() {
            assert!(v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn cyclic_convolution_matches_naive() {
        let (_, _, fast) = setup(13);
        let a = rng::random_complex_line(13, 1);
        let b = rng::random_complex_line(13, 2);
        let c = fast.cyclic_convolve(&a, &b);
        for k in 0..13usize {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..13usize {
                acc += a[j] * b[(k + 13 - j) % 13];
            }
            assert!((acc - c[k]).norm() < 1e-10);
        }
    }
}
