//! The corner averaging operator
//! A(f1, f2)(x) = E_y f1(x1 + phi1(y), x2) * f2(x1, x2 + phi2(y)),
//! its Fourier-side evaluation through the kernel, the J1/J2/J3 frequency
//! decomposition, and the main residual ||A(f1,f2) - E_{x1}f1 . E_{x2}f2||_2.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fp::{FpPoly, PrimeField};
use crate::kernel::KernelTable;
use crate::transform::{ell2_norm, norm_r, FastDft, GridFn, Side};
use crate::{Error, Result};

fn check_pair(p: u64, f1: &GridFn, f2: &GridFn) -> Result<()> {
    if f1.p() != p || f2.p() != p || f1.dim() != 2 || f2.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "need two 2-D grids on F_{p}^2, got p={}/{} dim={}/{}",
            f1.p(),
            f2.p(),
            f1.dim(),
            f2.dim()
        )));
    }
    if f1.side() != Side::Physical || f2.side() != Side::Physical {
        return Err(Error::SideMismatch { expected: "physical", got: "frequency" });
    }
    Ok(())
}

/// Ground-truth O(p^3) evaluation of the averaging operator.
pub fn average_direct(
    field: &PrimeField,
    phi1: &FpPoly,
    phi2: &FpPoly,
    f1: &GridFn,
    f2: &GridFn,
) -> Result<GridFn> {
    let p = field.p();
    check_pair(p, f1, f2)?;
    let shifts: Vec<(u64, u64)> = (0..p)
        .map(|y| (phi1.eval(field, y), phi2.eval(field, y)))
        .collect();
    let scale = 1.0 / p as f64;
    let pu = p as usize;
    let v1 = f1.values();
    let v2 = f2.values();
    let values: Vec<Complex64> = (0..pu)
        .into_par_iter()
        .flat_map_iter(|x1| {
            let mut acc = vec![Complex64::new(0.0, 0.0); pu];
            let r2 = &v2[x1 * pu..][..pu];
            for &(s, t) in &shifts {
                let r1 = &v1[(x1 + s as usize) % pu * pu..][..pu];
                // acc[x2] += r1[x2] * r2[(x2 + t) mod p], the rotation
                // unrolled into two contiguous passes
                let t = t as usize;
                let k = pu - t;
                for x2 in 0..k {
                    acc[x2] += r1[x2] * r2[x2 + t];
                }
                for x2 in k..pu {
                    acc[x2] += r1[x2] * r2[x2 + t - pu];
                }
            }
            acc.into_iter().map(move |z| z * scale)
        })
        .collect();
    GridFn::from_values(p, 2, Side::Physical, values)
}

/// Averages of f over the first coordinate: a function of x2.
pub fn mean_over_x1(f: &GridFn) -> Vec<Complex64> {
    let p = f.p() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); p];
    for x1 in 0..p {
        for x2 in 0..p {
            out[x2] += f.values()[x1 * p + x2];
        }
    }
    let s = 1.0 / p as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

/// Averages of f over the second coordinate: a function of x1.
pub fn mean_over_x2(f: &GridFn) -> Vec<Complex64> {
    let p = f.p() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); p];
    for x1 in 0..p {
        for x2 in 0..p {
            out[x1] += f.values()[x1 * p + x2];
        }
    }
    let s = 1.0 / p as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

/// The rank-one term (E_{x1} f1)(x2) * (E_{x2} f2)(x1).
pub fn rank_one_term(f1: &GridFn, f2: &GridFn) -> GridFn {
    let p = f1.p();
    let m1 = mean_over_x1(f1);
    let m2 = mean_over_x2(f2);
    GridFn::from_fn_2d(p, Side::Physical, |x1, x2| m1[x2 as usize] * m2[x1 as usize])
}

fn check_kernel(k: &KernelTable, f1: &GridFn, f2: &GridFn) -> Result<()> {
    if k.is_truncated() {
        return Err(Error::KernelMismatch("kernel is truncated".into()));
    }
    if k.p() != f1.p() || k.p() != f2.p() {
        return Err(Error::KernelMismatch(format!(
            "kernel has p={}, operands have p={}/{}",
            k.p(),
            f1.p(),
            f2.p()
        )));
    }
    Ok(())
}

/// Fourier-side evaluation:
/// A(f1,f2)(x) = sum_{n,m} f1^(n) f2^(m) e_p((n+m).x) K(n1, m2),
/// grouped over (n1, m2) with 1-D inverse transforms per group.
pub fn average_fourier(
    fast: &FastDft,
    k: &KernelTable,
    f1: &GridFn,
    f2: &GridFn,
) -> Result<GridFn> {
    let p = k.p();
    check_pair(p, f1, f2)?;
    check_kernel(k, f1, f2)?;
    let pu = p as usize;
    let roots = fast.roots();
    let fh1 = fast.dft(f1)?;
    let fh2 = fast.dft(f2)?;
    // cap1[n1][x2] = sum_{n2} f1^(n1, n2) e_p(n2 x2)
    let cap1: Vec<Vec<Complex64>> = (0..pu)
        .map(|n1| fast.sum_inverse_1d(&fh1.values()[n1 * pu..(n1 + 1) * pu]))
        .collect();
    // cap2[m2][x1] = sum_{m1} f2^(m1, m2) e_p(m1 x1)
    let cap2: Vec<Vec<Complex64>> = (0..pu)
        .map(|m2| {
            let col: Vec<Complex64> = (0..pu).map(|m1| fh2.values()[m1 * pu + m2]).collect();
            fast.sum_inverse_1d(&col)
        })
        .collect();
    let kv = k.values();
    let values: Vec<Complex64> = (0..pu)
        .into_par_iter()
        .flat_map_iter(|x1| {
            // row(n1, x2) = sum_{m2} K(n1, m2) cap2[m2][x1] e_p(m2 x2)
            let mut acc = vec![Complex64::new(0.0, 0.0); pu];
            for n1 in 0..pu {
                let w: Vec<Complex64> =
                    (0..pu).map(|m2| kv[n1 * pu + m2] * cap2[m2][x1]).collect();
                let row = fast.sum_inverse_1d(&w);
                let e1 = roots.ep((n1 * x1) as i64);
                for x2 in 0..pu {
                    acc[x2] += e1 * cap1[n1][x2] * row[x2];
                }
            }
            acc.into_iter()
        })
        .collect();
    GridFn::from_values(p, 2, Side::Physical, values)
}

/// The three frequency-block contributions J1 + J2 + J3 = A(f1, f2).
#[derive(Debug, Clone)]
pub struct JDecomposition {
    pub j1: GridFn,
    pub j2: GridFn,
    pub j3: GridFn,
}

impl JDecomposition {
    pub fn sum(&self) -> GridFn {
        let p = self.j1.p();
        let values = self
            .j1
            .values()
            .iter()
            .zip(self.j2.values())
            .zip(self.j3.values())
            .map(|((a, b), c)| a + b + c)
            .collect();
        GridFn::from_values(p, 2, Side::Physical, values).unwrap()
    }
}

/// Frequency coefficients of J2 at output frequency (m1, n2):
/// C2(m1, n2) = sum_{n1 != 0} f1^(n1, n2) f2^(m1 - n1, 0) K(n1, 0).
pub(crate) fn j2_coefficients(
    fast: &FastDft,
    kcol0: &[Complex64],
    fh1: &GridFn,
    fh2: &GridFn,
) -> Vec<Complex64> {
    let p = fh1.p();
    let pu = p as usize;
    let b: Vec<Complex64> = (0..pu).map(|m1| fh2.values()[m1 * pu]).collect();
    // one cyclic convolution per n2
    let mut out = vec![Complex64::new(0.0, 0.0); pu * pu];
    for n2 in 0..pu {
        let mut a: Vec<Complex64> = (0..pu)
            .map(|n1| fh1.values()[n1 * pu + n2] * kcol0[n1])
            .collect();
        a[0] = Complex64::new(0.0, 0.0);
        let conv = fast.cyclic_convolve(&a, &b);
        for m1 in 0..pu {
            out[m1 * pu + n2] = conv[m1];
        }
    }
    out
}

/// Frequency coefficients of J3 at output frequency n:
/// C3(n) = sum_m f1^(n - m) f2^(m) K~(n1 - m1, m2).
pub(crate) fn j3_coefficients(
    fast: &FastDft,
    ktilde: &KernelTable,
    fh1: &GridFn,
    fh2: &GridFn,
) -> Vec<Complex64> {
    let p = fh1.p();
    let pu = p as usize;
    let kv = ktilde.values();
    let partial: Vec<Vec<Complex64>> = (0..pu)
        .into_par_iter()
        .map(|m2| {
            let mut acc = vec![Complex64::new(0.0, 0.0); pu * pu];
            let v: Vec<Complex64> = (0..pu).map(|m1| fh2.values()[m1 * pu + m2]).collect();
            for a2 in 0..pu {
                // u(a1) = f1^(a1, a2) K~(a1, m2); conv over the first index
                let u: Vec<Complex64> = (0..pu)
                    .map(|a1| fh1.values()[a1 * pu + a2] * kv[a1 * pu + m2])
                    .collect();
                let conv = fast.cyclic_convolve(&v, &u);
                let n2 = (a2 + m2) % pu;
                for n1 in 0..pu {
                    acc[n1 * pu + n2] += conv[n1];
                }
            }
            acc
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); pu * pu];
    for part in partial {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    out
}

/// Split A(f1, f2) into the J1/J2/J3 frequency blocks
/// (n1 = m2 = 0; n1 != 0, m2 = 0; the rest, via K~).
pub fn j_decompose(
    fast: &FastDft,
    k: &KernelTable,
    f1: &GridFn,
    f2: &GridFn,
) -> Result<JDecomposition> {
    let p = k.p();
    check_pair(p, f1, f2)?;
    check_kernel(k, f1, f2)?;
    let j1 = rank_one_term(f1, f2);
    let fh1 = fast.dft(f1)?;
    let fh2 = fast.dft(f2)?;
    let kcol0: Vec<Complex64> = (0..p).map(|n1| k.get(n1, 0)).collect();
    let c2 = j2_coefficients(fast, &kcol0, &fh1, &fh2);
    let c2g = GridFn::from_values(p, 2, Side::Frequency, c2)?;
    let j2 = fast.inverse_dft(&c2g)?;
    let ktilde = k.truncate()?;
    let c3 = j3_coefficients(fast, &ktilde, &fh1, &fh2);
    let c3g = GridFn::from_values(p, 2, Side::Frequency, c3)?;
    let j3 = fast.inverse_dft(&c3g)?;
    Ok(JDecomposition { j1, j2, j3 })
}

/// ||J2||_2 without materializing the physical grid (Parseval on the
/// J2 coefficient table).
pub fn j2_norm(fast: &FastDft, kcol0: &[Complex64], f1: &GridFn, f2: &GridFn) -> Result<f64> {
    let fh1 = fast.dft(f1)?;
    let fh2 = fast.dft(f2)?;
    let c2 = j2_coefficients(fast, kcol0, &fh1, &fh2);
    Ok(ell2_norm(&c2))
}

/// Output of [`main_residual`].
#[derive(Debug, Clone, Copy)]
pub struct MainResidual {
    /// ||A(f1,f2) - E_{x1}f1 . E_{x2}f2||_2 (expectation-normalized).
    pub residual: f64,
    /// p^{1/8} residual / (||f1||_4 ||f2||_4); absent when the
    /// denominator vanishes.
    pub ratio: Option<f64>,
}

/// The main-theorem residual, computed on the direct (ground-truth) path.
pub fn main_residual(
    field: &PrimeField,
    phi1: &FpPoly,
    phi2: &FpPoly,
    f1: &GridFn,
    f2: &GridFn,
) -> Result<MainResidual> {
    let p = field.p();
    let avg = average_direct(field, phi1, phi2, f1, f2)?;
    let rank1 = rank_one_term(f1, f2);
    let diff = GridFn::from_values(
        p,
        2,
        Side::Physical,
        avg.values().iter().zip(rank1.values()).map(|(a, b)| a - b).collect(),
    )?;
    let residual = norm_r(&diff, 2.0);
    let denom = norm_r(f1, 4.0) * norm_r(f2, 4.0);
    let ratio = if denom > 0.0 {
        Some(residual * (p as f64).powf(0.125) / denom)
    } else {
        None
    };
    Ok(MainResidual { residual, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::UnitRootTable;
    use crate::kernel::{kernel_column0, kernel_naive};
    use crate::rng;

    fn setup(p: u64) -> (PrimeField, UnitRootTable, FastDft, FpPoly, FpPoly) {
        let field = PrimeField::new(p).unwrap();
        let roots = UnitRootTable::new(&field);
        let fast = FastDft::new(&field);
        let p1 = FpPoly::monomial(&field, 2).unwrap();
        let p2 = FpPoly::monomial(&field, 3).unwrap();
        (field, roots, fast, p1, p2)
    }

    #[test]
    fn constants_average_to_product() {
        let (field, _, _, p1, p2) = setup(7);
        let f1 = GridFn::constant(7, 2, Complex64::new(1.0, 0.0));
        let f2 = GridFn::constant(7, 2, Complex64::new(1.0, 0.0));
        let a = average_direct(&field, &p1, &p2, &f1, &f2).unwrap();
        for v in a.values() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn f2_constant_reduces_to_1d_average() {
        let (field, _, _, p1, p2) = setup(7);
        let f1 = rng::random_complex_grid(7, 3);
        let f2 = GridFn::constant(7, 2, Complex64::new(1.0, 0.0));
        let a = average_direct(&field, &p1, &p2, &f1, &f2).unwrap();
        for x1 in 0..7u64 {
            for x2 in 0..7u64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..7u64 {
                    acc += f1.at((x1 + p1.eval(&field, y)) % 7, x2);
                }
                assert!((a.at(x1, x2) - acc / 7.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fourier_matches_direct() {
        for p in [5u64, 7, 31] {
            let (field, roots, fast, p1, p2) = setup(p);
            let k = kernel_naive(&field, &roots, &p1, &p2);
            let f1 = rng::random_complex_grid(p, 10 + p);
            let f2 = rng::random_complex_grid(p, 20 + p);
            let a = average_direct(&field, &p1, &p2, &f1, &f2).unwrap();
            let b = average_fourier(&fast, &k, &f1, &f2).unwrap();
            let sup = |g: &GridFn| g.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(a.sup_distance(&b) < 1e-8 * sup(&f1) * sup(&f2), "p={p}");
        }
    }

    #[test]
    fn fourier_delta_specialization() {
        let (field, roots, fast, p1, p2) = setup(7);
        let k = kernel_naive(&field, &roots, &p1, &p2);
        let f1 = GridFn::delta(7, 2, 0, Complex64::new(1.0, 0.0));
        let f2 = GridFn::constant(7, 2, Complex64::new(1.0, 0.0));
        let a = average_direct(&field, &p1, &p2, &f1, &f2).unwrap();
        let b = average_fourier(&fast, &k, &f1, &f2).unwrap();
        assert!(a.sup_distance(&b) < 1e-9);
        // direct meaning: p^-1 #{y : x1 + phi1(y) = 0} at x2 = 0
        for x1 in 0..7u64 {
            let count = (0..7u64).filter(|&y| (x1 + p1.eval(&field, y)) % 7 == 0).count();
            assert!((a.at(x1, 0).re - count as f64 / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_rejects_truncated_kernel() {
        let (field, roots, fast, p1, p2) = setup(5);
        let k = kernel_naive(&field, &roots, &p1, &p2).truncate().unwrap();
        let f = rng::random_complex_grid(5, 1);
        assert!(average_fourier(&fast, &k, &f, &f).is_err());
    }

    #[test]
    fn decomposition_sums_to_average() {
        for p in [5u64, 7, 31] {
            let (field, roots, fast, p1, p2) = setup(p);
            let k = kernel_naive(&field, &roots, &p1, &p2);
            let f1 = rng::random_complex_grid(p, 100 + p);
            let f2 = rng::random_complex_grid(p, 200 + p);
            let d = j_decompose(&fast, &k, &f1, &f2).unwrap();
            let a = average_direct(&field, &p1, &p2, &f1, &f2).unwrap();
            assert!(a.sup_distance(&d.sum()) < 1e-8, "p={p}");
        }
    }

    #[test]
    fn j1_is_rank_one_product() {
        let (field, roots, fast, p1, p2) = setup(7);
        let k = kernel_naive(&field, &roots, &p1, &p2);
        let f1 = rng::random_complex_grid(7, 8);
        let f2 = rng::random_complex_grid(7, 9);
        let d = j_decompose(&fast, &k, &f1, &f2).unwrap();
        let m1 = mean_over_x1(&f1);
        let m2 = mean_over_x2(&f2);
        for x1 in 0..7u64 {
            for x2 in 0..7u64 {
                let expect = m1[x2 as usize] * m2[x1 as usize];
                assert!((d.j1.at(x1, x2) - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn separated_inputs_kill_j2_j3() {
        // f1 depending only on x2 and f2 only on x1
        let (field, roots, fast, p1, p2) = setup(7);
        let k = kernel_naive(&field, &roots, &p1, &p2);
        let r1 = rng::random_complex_line(7, 4);
        let r2 = rng::random_complex_line(7, 5);
        let f1 = GridFn::from_fn_2d(7, Side::Physical, |_, x2| r1[x2 as usize]);
        let f2 = GridFn::from_fn_2d(7, Side::Physical, |x1, _| r2[x1 as usize]);
        let d = j_decompose(&fast, &k, &f1, &f2).unwrap();
        for v in d.j2.values().iter().chain(d.j3.values()) {
            assert!(v.norm() < 1e-9);
        }
    }

    #[test]
    fn residual_zero_for_constants() {
        let (field, _, _, p1, p2) = setup(7);
        let f1 = GridFn::constant(7, 2, Complex64::new(0.7, 0.0));
        let f2 = GridFn::constant(7, 2, Complex64::new(-1.3, 0.0));
        let r = main_residual(&field, &p1, &p2, &f1, &f2).unwrap();
        assert!(r.residual < 1e-12);
        assert!(r.ratio.is_some());
    }

    #[test]
    fn residual_zero_function() {
        let (field, _, _, p1, p2) = setup(7);
        let f1 = GridFn::constant(7, 2, Complex64::new(0.0, 0.0));
        let f2 = rng::random_complex_grid(7, 6);
        let r = main_residual(&field, &p1, &p2, &f1, &f2).unwrap();
        assert!(r.residual < 1e-12);
        assert!(r.ratio.is_none());
    }

    #[test]
    fn residual_equals_j2_plus_j3_norm() {
        let p = 101u64;
        let (field, roots, fast, p1, p2) = setup(p);
        let k = kernel_naive(&field, &roots, &p1, &p2);
        let f1 = rng::random_pm1_grid(p, 11);
        let f2 = rng::random_pm1_grid(p, 12);
        let r = main_residual(&field, &p1, &p2, &f1, &f2).unwrap();
        let d = j_decompose(&fast, &k, &f1, &f2).unwrap();
        let rest = GridFn::from_values(
            p,
            2,
            Side::Physical,
            d.j2.values().iter().zip(d.j3.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        assert!((r.residual - norm_r(&rest, 2.0)).abs() < 1e-8);
    }

    #[test]
    fn j2_norm_matches_decomposition() {
        let p = 31u64;
        let (field, roots, fast, p1, p2) = setup(p);
        let k = kernel_naive(&field, &roots, &p1, &p2);
        let f1 = rng::random_complex_grid(p, 21);
        let f2 = rng::random_complex_grid(p, 22);
        let d = j_decompose(&fast, &k, &f1, &f2).unwrap();
        let kcol0 = kernel_column0(&field, &roots, &p1);
        let fastnorm = j2_norm(&fast, &kcol0, &f1, &f2).unwrap();
        assert!((norm_r(&d.j2, 2.0) - fastnorm).abs() < 1e-9);
    }

    #[test]
    fn bilinearity() {
        let (field, _, _, p1, p2) = setup(7);
        let f1a = rng::random_complex_grid(7, 31);
        let f1b = rng::random_complex_grid(7, 32);
        let f2 = rng::random_complex_grid(7, 33);
        let sum = GridFn::from_values(
            7,
            2,
            Side::Physical,
            f1a.values().iter().zip(f1b.values()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let aa = average_direct(&field, &p1, &p2, &f1a, &f2).unwrap();
        let ab = average_direct(&field, &p1, &p2, &f1b, &f2).unwrap();
        let asum = average_direct(&field, &p1, &p2, &sum, &f2).unwrap();
        for ((x, y), z) in aa.values().iter().zip(ab.values()).zip(asum.values()) {
            assert!((x + y - z).norm() < 1e-9);
        }
    }

    #[test]
    fn translation_covariance() {
        // shifting f1 and f2 by (s, 0) in x1 shifts A by (s, 0)
        let (field, _, _, p1, p2) = setup(7);
        let f1 = rng::random_complex_grid(7, 41);
        let f2 = rng::random_complex_grid(7, 42);
        let s = 3u64;
        let shift = |f: &GridFn| {
            GridFn::from_fn_2d(7, Side::Physical, |x1, x2| f.at((x1 + s) % 7, x2))
        };
        let a = average_direct(&field, &p1, &p2, &f1, &f2).unwrap();
        let ash = average_direct(&field, &p1, &p2, &shift(&f1), &shift(&f2)).unwrap();
        for x1 in 0..7u64 {
            for x2 in 0..7u64 {
                assert!((ash.at(x1, x2) - a.at((x1 + s) % 7, x2)).norm() < 1e-12);
            }
        }
    }
}
