//! Empirical verifiers for the exponential-sum inequalities that drive the
//! smoothing estimate: the Weil bound on the kernel, the I(h) split of
//! ||J3||_2^2, the bilinear form over the differenced kernel, the K4 scan
//! with generalized-diagonal detection, the variety-sum identity it rests
//! on, the leading-term Jacobian rank analysis, and Bombieri's exact bound
//! for exponential sums of rational functions.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fp::{
    poly_deg, poly_derivative, poly_div_exact, poly_eval_raw, poly_gcd, poly_trim, FpPoly,
    PrimeField, UnitRootTable,
};
use crate::kernel::{delta_shift_2d, kernel_fast, KernelTable};
use crate::report::{BoundReport, GeneralizedDiagonalCertificate};
use crate::transform::{ell2_norm, FastDft, GridFn};
use crate::{Error, Result};

/// Max of sqrt(p) |K(n1, m2)| over nonzero frequencies, against the
/// explicit Weil constant max(d1, d2) - 1.
pub fn verify_weil(k: &KernelTable) -> Result<BoundReport> {
    if k.is_truncated() {
        return Err(Error::KernelMismatch("Weil scan needs the untruncated kernel".into()));
    }
    let p = k.p();
    let sqrt_p = (p as f64).sqrt();
    let mut measured = 0.0f64;
    let mut witness = (0u64, 0u64);
    for n1 in 0..p {
        for m2 in 0..p {
            if n1 == 0 && m2 == 0 {
                continue;
            }
            let v = sqrt_p * k.get(n1, m2).norm();
            if v > measured {
                measured = v;
                witness = (n1, m2);
            }
        }
    }
    let bound = (k.max_degree() - 1) as f64;
    Ok(BoundReport::new(
        "weil",
        p,
        k.phi1().coeffs(),
        k.phi2().coeffs(),
        measured,
        bound,
        vec![witness.0 as i64, witness.1 as i64],
    ))
}

/// The two pieces of ||J3||_2^2 = sum_h I(h): the h = 0 term and the
/// aggregate over h != 0.
pub fn i_split(fast: &FastDft, ktilde: &KernelTable, f1: &GridFn, f2: &GridFn) -> Result<(f64, f64)> {
    if !ktilde.is_truncated() {
        return Err(Error::KernelMismatch("i_split needs the truncated kernel".into()));
    }
    let p = ktilde.p();
    if f1.p() != p || f2.p() != p {
        return Err(Error::KernelMismatch("prime mismatch".into()));
    }
    let pu = p as usize;
    let fh1 = fast.dft(f1)?;
    let fh2 = fast.dft(f2)?;
    let v1 = fh1.values();
    let v2 = fh2.values();
    let kv = ktilde.values();
    let per_h1: Vec<(Complex64, Complex64)> = (0..pu)
        .into_par_iter()
        .map(|h1| {
            let mut total = Complex64::new(0.0, 0.0);
            let mut zero_term = Complex64::new(0.0, 0.0);
            for h2 in 0..pu {
                // a(n1) = sum_{n2} f1^(n) conj f1^(n - h)
                let mut a = vec![Complex64::new(0.0, 0.0); pu];
                for n1 in 0..pu {
                    let s1 = (n1 + pu - h1) % pu;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for n2 in 0..pu {
                        let s2 = (n2 + pu - h2) % pu;
                        acc += v1[n1 * pu + n2] * v1[s1 * pu + s2].conj();
                    }
                    a[n1] = acc;
                }
                // b(m2) = sum_{m1} f2^(m) conj f2^(m + h)
                let mut b = vec![Complex64::new(0.0, 0.0); pu];
                for m2 in 0..pu {
                    let s2 = (m2 + h2) % pu;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m1 in 0..pu {
                        let s1 = (m1 + h1) % pu;
                        acc += v2[m1 * pu + m2] * v2[s1 * pu + s2].conj();
                    }
                    b[m2] = acc;
                }
                // Delta_{(-h1, h2)} K~
                let mut ih = Complex64::new(0.0, 0.0);
                for n1 in 0..pu {
                    let t1 = (n1 + pu - h1) % pu;
                    for m2 in 0..pu {
                        let t2 = (m2 + h2) % pu;
                        let dk = kv[n1 * pu + m2] * kv[t1 * pu + t2].conj();
                        ih += a[n1] * b[m2] * dk;
                    }
                }
                total += ih;
                if h1 == 0 && h2 == 0 {
                    zero_term = ih;
                }
            }
            (total, zero_term)
        })
        .collect();
    let total: Complex64 = per_h1.iter().map(|&(t, _)| t).sum();
    let zero: Complex64 = per_h1.iter().map(|&(_, z)| z).sum();
    Ok((zero.re, (total - zero).re))
}

/// Normalized bilinear form
/// | sum_{n1,m2} F1(n1) F2(m2) (Delta_h K~)(n1, m2) | / (||F1|| ||F2||),
/// compared against p^{-1/4}.
pub fn bilinear_form(
    ktilde: &KernelTable,
    f1: &[Complex64],
    f2: &[Complex64],
    h: (u64, u64),
) -> Result<BoundReport> {
    if !ktilde.is_truncated() {
        return Err(Error::KernelMismatch("bilinear form needs the truncated kernel".into()));
    }
    let p = ktilde.p();
    if h.0 % p == 0 && h.1 % p == 0 {
        return Err(Error::ZeroShift);
    }
    let pu = p as usize;
    let dk = delta_shift_2d(ktilde.values(), p, h);
    let mut raw = Complex64::new(0.0, 0.0);
    for n1 in 0..pu {
        for m2 in 0..pu {
            raw += f1[n1] * f2[m2] * dk[n1 * pu + m2];
        }
    }
    let denom = ell2_norm(f1) * ell2_norm(f2);
    let measured = if denom > 0.0 { raw.norm() / denom } else { 0.0 };
    let bound = (p as f64).powf(-0.25);
    Ok(BoundReport::new(
        "bilinear",
        p,
        ktilde.phi1().coeffs(),
        ktilde.phi2().coeffs(),
        measured,
        bound,
        vec![h.0 as i64, h.1 as i64],
    ))
}

/// Scan of S(m2, m2') = sum_{n1} (Delta_h K~)(n1, m2) conj (Delta_h K~)(n1, m2')
/// over the admissible pairs, with exceed-set detection at
/// threshold_c * p^{-3/2} and the Weil fallback cap threshold_c * p^{-1}.
pub fn k4_scan(
    field: &PrimeField,
    fast: &FastDft,
    phi1: &FpPoly,
    phi2: &FpPoly,
    h: (u64, u64),
    threshold_c: f64,
) -> Result<(BoundReport, GeneralizedDiagonalCertificate)> {
    let p = field.p();
    let (h1, h2) = (h.0 % p, h.1 % p);
    if h1 == 0 && h2 == 0 {
        return Err(Error::ZeroShift);
    }
    let ktilde = kernel_fast(field, fast, phi1, phi2).truncate()?;
    let dk = delta_shift_2d(ktilde.values(), p, (h1, h2));
    let pu = p as usize;
    let admissible: Vec<u64> = (0..p)
        .filter(|&m2| m2 != 0 && (m2 + h2) % p != 0)
        .collect();
    let threshold = threshold_c * (p as f64).powf(-1.5);
    let rows: Vec<(f64, (u64, u64), Vec<(u64, u64)>)> = admissible
        .par_iter()
        .map(|&m2| {
            let mut best = 0.0f64;
            let mut witness = (m2, m2);
            let mut exceed = Vec::new();
            for &m2p in &admissible {
                let mut s = Complex64::new(0.0, 0.0);
                for n1 in 0..pu {
                    s += dk[n1 * pu + m2 as usize] * dk[n1 * pu + m2p as usize].conj();
                }
                let mag = s.norm();
                if mag > best {
                    best = mag;
                    witness = (m2, m2p);
                }
                if mag > threshold {
                    exceed.push((m2, m2p));
                }
            }
            (best, witness, exceed)
        })
        .collect();
    let mut measured = 0.0f64;
    let mut witness = (0u64, 0u64);
    let mut exceed_set = Vec::new();
    for (best, w, exceed) in rows {
        if best > measured {
            measured = best;
            witness = w;
        }
        exceed_set.extend(exceed);
    }
    let report = BoundReport::new(
        "k4",
        p,
        phi1.coeffs(),
        phi2.coeffs(),
        measured,
        threshold_c / p as f64,
        vec![witness.0 as i64, witness.1 as i64],
    )
    .with_params(serde_json::json!({
        "h": [h1, h2],
        "threshold_c": threshold_c,
        "exceed_threshold": threshold,
    }));
    let cert = GeneralizedDiagonalCertificate::from_pairs(exceed_set, threshold);
    Ok((report, cert))
}

fn pairwise_sum(mut v: Vec<Complex64>) -> Complex64 {
    if v.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    while v.len() > 1 {
        let half = (v.len() + 1) / 2;
        for i in 0..v.len() / 2 {
            v[i] = v[2 * i] + v[2 * i + 1];
        }
        if v.len() % 2 == 1 {
            v[half - 1] = v[v.len() - 1];
        }
        v.truncate(half);
    }
    v[0]
}

/// p^-3 sum over the zero locus {G = 0} of e_p(H), with
/// G = phi1(y1) - phi1(y2) - phi1(y3) + phi1(y4) and H matching the
/// n1-summed product of four differenced kernels for the shift h.
/// Equals the k4_scan entry S(m2, m2') exactly.
pub fn katz_variety_sum(
    field: &PrimeField,
    roots: &UnitRootTable,
    phi1: &FpPoly,
    phi2: &FpPoly,
    h: (u64, u64),
    m2: u64,
    m2p: u64,
) -> Result<Complex64> {
    let p = field.p();
    let h2 = h.1 % p;
    for v in [m2 % p, m2p % p, (m2 + h2) % p, (m2p + h2) % p] {
        if v == 0 {
            return Err(Error::InadmissibleIndices);
        }
    }
    Ok(katz_variety_sum_unchecked(field, roots, phi1, phi2, h, m2, m2p))
}

/// [`katz_variety_sum`] without the admissibility gate (the identity with
/// the truncated kernel only holds on the admissible domain).
pub fn katz_variety_sum_unchecked(
    field: &PrimeField,
    roots: &UnitRootTable,
    phi1: &FpPoly,
    phi2: &FpPoly,
    h: (u64, u64),
    m2: u64,
    m2p: u64,
) -> Complex64 {
    let p = field.p();
    let (h1, h2) = (h.0 % p, h.1 % p);
    let (m2, m2p) = (m2 % p, m2p % p);
    let v1: Vec<u64> = (0..p).map(|y| phi1.eval(field, y)).collect();
    let v2: Vec<u64> = (0..p).map(|y| phi2.eval(field, y)).collect();
    let mut preimage: Vec<Vec<u64>> = vec![Vec::new(); p as usize];
    for y in 0..p {
        preimage[v1[y as usize] as usize].push(y);
    }
    let partials: Vec<Complex64> = (0..p)
        .into_par_iter()
        .map(|y1| {
            let mut local = Vec::with_capacity(p as usize);
            for y2 in 0..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for y3 in 0..p {
                    // phi1(y4) = phi1(y2) + phi1(y3) - phi1(y1)
                    let target = field.sub(
                        field.add(v1[y2 as usize], v1[y3 as usize]),
                        v1[y1 as usize],
                    );
                    for &y4 in &preimage[target as usize] {
                        let t1 = field.mul(h1, field.sub(v1[y4 as usize], v1[y2 as usize]));
                        let t2 = field.mul(m2, field.sub(v2[y1 as usize], v2[y2 as usize]));
                        let t3 = field.mul(m2p, field.sub(v2[y4 as usize], v2[y3 as usize]));
                        let t4 = field.mul(h2, field.sub(v2[y4 as usize], v2[y2 as usize]));
                        let hval = field.add(field.add(t1, t2), field.add(t3, t4));
                        acc += roots.ep_res(hval);
                    }
                }
                local.push(acc);
            }
            pairwise_sum(local)
        })
        .collect();
    pairwise_sum(partials) / (p as f64).powi(3)
}

/// The rank-deficiency equation for distinct degrees d1 < d2:
/// (1/m2)^e - (1/(m2+h2))^e - (1/m2')^e + (1/(m2'+h2))^e = 0, where the
/// fractional power t^e with e = d1/(d2-d1) denotes any s with
/// s^(d2-d1) = t^d1. Returns true iff SOME branch assignment satisfies
/// the equation, or a variant with one or two terms deleted.
pub fn diagonal_equation_check(
    field: &PrimeField,
    d1: u64,
    d2: u64,
    h2: u64,
    m2: u64,
    m2p: u64,
) -> Result<bool> {
    if d1 >= d2 {
        return Err(Error::DegreeOrder(d1, d2));
    }
    let p = field.p();
    let h2 = h2 % p;
    let terms_raw = [m2 % p, (m2 + h2) % p, m2p % p, (m2p + h2) % p];
    if terms_raw.iter().any(|&t| t == 0) {
        return Err(Error::InadmissibleIndices);
    }
    let k = d2 - d1;
    // branch sets: all s with s^k = t^{d1}, t = 1/m2 etc.
    let signs = [1i64, -1, -1, 1];
    let branch_sets: Vec<Vec<u64>> = terms_raw
        .iter()
        .map(|&m| {
            let t = field.inv(m).unwrap();
            let rhs = field.pow(t, d1);
            (0..p).filter(|&s| field.pow(s, k) == rhs).collect()
        })
        .collect();
    // every subset of terms with 2, 3, or 4 survivors (deleting 0, 1 or 2),
    // keeping at least one term on each side: one-sided variants constrain
    // m2 (or m2') alone and say nothing about the pair
    for mask in 0u8..16 {
        let kept: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        if kept.len() < 2
            || !kept.iter().any(|&i| i < 2)
            || !kept.iter().any(|&i| i >= 2)
        {
            continue;
        }
        if has_zero_signed_combination(field, &kept, &signs, &branch_sets, 0, 0) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn has_zero_signed_combination(
    field: &PrimeField,
    kept: &[usize],
    signs: &[i64; 4],
    branch_sets: &[Vec<u64>],
    idx: usize,
    acc: u64,
) -> bool {
    if idx == kept.len() {
        return acc == 0;
    }
    let term = kept[idx];
    for &s in &branch_sets[term] {
        let next = if signs[term] > 0 {
            field.add(acc, s)
        } else {
            field.sub(acc, s)
        };
        if has_zero_signed_combination(field, kept, signs, branch_sets, idx + 1, next) {
            return true;
        }
    }
    false
}

/// Rank-one condition in the equal-degree case:
/// b m2 = b(m2+h2) - a h1 = b m2' = b(m2'+h2) - a h1.
pub fn equal_degree_rank1_condition(
    field: &PrimeField,
    a: u64,
    b: u64,
    h: (u64, u64),
    m2: u64,
    m2p: u64,
) -> bool {
    let c1 = field.mul(b, m2);
    let c2 = field.sub(field.mul(b, field.add(m2, h.1)), field.mul(a, h.0));
    let c3 = field.mul(b, m2p);
    let c4 = field.sub(field.mul(b, field.add(m2p, h.1)), field.mul(a, h.0));
    c1 == c2 && c2 == c3 && c3 == c4
}

/// The extra assumption a h1 != b h2 on the shift.
pub fn leading_shift_assumption(field: &PrimeField, a: u64, b: u64, h: (u64, u64)) -> bool {
    field.mul(a, h.0) != field.mul(b, h.1)
}

/// Rank over F_p of the 2 x 4 Jacobian of the homogeneous leading terms
/// (G_{d1}, H_{d2}) at a point of their common zero locus (minus 0).
pub fn jacobian_rank(
    field: &PrimeField,
    phi1: &FpPoly,
    phi2: &FpPoly,
    h: (u64, u64),
    m2: u64,
    m2p: u64,
    point: (u64, u64, u64, u64),
) -> Result<u8> {
    let p = field.p();
    let d1 = phi1.degree() as u64;
    let d2 = phi2.degree() as u64;
    if d1 > d2 {
        return Err(Error::DegreeOrder(d1, d2));
    }
    let a = phi1.leading_coeff();
    let b = phi2.leading_coeff();
    let ys = [point.0 % p, point.1 % p, point.2 % p, point.3 % p];
    if ys == [0, 0, 0, 0] {
        return Err(Error::PointNotOnVariety);
    }
    let signs = [1i64, -1, -1, 1];
    // coefficients of the leading term of H
    let hcoef: [u64; 4] = if d1 < d2 {
        [
            field.mul(b, m2),
            field.mul(b, field.add(m2, h.1)),
            field.mul(b, m2p),
            field.mul(b, field.add(m2p, h.1)),
        ]
    } else {
        let ah1 = field.mul(a, h.0);
        [
            field.mul(b, m2),
            field.sub(field.mul(b, field.add(m2, h.1)), ah1),
            field.mul(b, m2p),
            field.sub(field.mul(b, field.add(m2p, h.1)), ah1),
        ]
    };
    let signed = |field: &PrimeField, s: i64, v: u64| if s > 0 { v } else { field.neg(v) };
    let mut gval = 0u64;
    let mut hval = 0u64;
    for i in 0..4 {
        gval = field.add(gval, signed(field, signs[i], field.mul(a, field.pow(ys[i], d1))));
        hval = field.add(
            hval,
            signed(field, signs[i], field.mul(hcoef[i], field.pow(ys[i], d2))),
        );
    }
    if gval != 0 || hval != 0 {
        return Err(Error::PointNotOnVariety);
    }
    let row1: Vec<u64> = (0..4)
        .map(|i| {
            signed(
                field,
                signs[i],
                field.mul(field.mul(d1 % p, a), field.pow(ys[i], d1 - 1)),
            )
        })
        .collect();
    let row2: Vec<u64> = (0..4)
        .map(|i| {
            signed(
                field,
                signs[i],
                field.mul(field.mul(d2 % p, hcoef[i]), field.pow(ys[i], d2 - 1)),
            )
        })
        .collect();
    let zero1 = row1.iter().all(|&v| v == 0);
    let zero2 = row2.iter().all(|&v| v == 0);
    if zero1 && zero2 {
        return Ok(0);
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let det = field.sub(field.mul(row1[i], row2[j]), field.mul(row1[j], row2[i]));
            if det != 0 {
                return Ok(2);
            }
        }
    }
    Ok(1)
}

/// Pole data of a reduced rational function over F_p-bar.
#[derive(Debug, Clone, Copy)]
struct PoleData {
    /// distinct poles, including infinity when present
    n: u64,
    /// degree of the pole divisor (multiplicities counted)
    deg_inf: u64,
}

fn pole_data(field: &PrimeField, num: &[u64], den: &[u64]) -> PoleData {
    let dn = poly_deg(num).map_or(0, |d| d as u64);
    let dd = poly_deg(den).map_or(0, |d| d as u64);
    let mut n = 0u64;
    let mut deg_inf = dd;
    if dd >= 1 {
        // distinct roots over the closure = degree of the squarefree part
        let der = poly_derivative(field, den);
        let distinct = if der.is_empty() {
            // derivative vanished: den is a p-th power; cannot happen for
            // deg < p, which the CLI range guarantees at desk scale
            dd
        } else {
            let g = poly_gcd(field, den, &der);
            dd - poly_deg(&g).map_or(0, |d| d as u64)
        };
        n += distinct;
    }
    if dn > dd {
        n += 1;
        deg_inf += dn - dd;
    }
    PoleData { n, deg_inf }
}

/// Bombieri's exact bound |S(f~)| <= (n - 2 + deg_inf) sqrt(p) + 1 for
/// S(f~) = sum over x with f2(x) != 0 of e_p(f1(x) / f2(x)).
pub fn bombieri_sum(
    field: &PrimeField,
    roots: &UnitRootTable,
    f1: &[i64],
    f2: &[i64],
) -> Result<BoundReport> {
    let p = field.p();
    let mut num: Vec<u64> = f1.iter().map(|&c| field.reduce(c)).collect();
    let mut den: Vec<u64> = f2.iter().map(|&c| field.reduce(c)).collect();
    poly_trim(&mut num);
    poly_trim(&mut den);
    if den.is_empty() {
        return Err(Error::DegenerateRational);
    }
    if num.is_empty() {
        num = vec![0];
    }
    // reduce common factors mod p
    let g = poly_gcd(field, &num, &den);
    if poly_deg(&g).unwrap_or(0) >= 1 {
        num = poly_div_exact(field, &num, &g);
        den = poly_div_exact(field, &den, &g);
        poly_trim(&mut num);
        poly_trim(&mut den);
        if num.is_empty() {
            num = vec![0];
        }
    }
    let dn = poly_deg(&num).map_or(0, |d| d as u64);
    let dd = poly_deg(&den).map_or(0, |d| d as u64);
    if dn == 0 && dd == 0 {
        return Err(Error::DegenerateRational);
    }
    let polynomial_case = dd == 0;
    let mut acc = Complex64::new(0.0, 0.0);
    for x in 0..p {
        let d = poly_eval_raw(field, &den, x);
        if d == 0 {
            continue;
        }
        let v = field.mul(poly_eval_raw(field, &num, x), field.inv(d)?);
        acc += roots.ep_res(v);
    }
    let pd = pole_data(field, &num, &den);
    let bound = (pd.n as f64 - 2.0 + pd.deg_inf as f64) * (p as f64).sqrt() + 1.0;
    Ok(BoundReport::new(
        if polynomial_case { "bombieri/polynomial" } else { "bombieri" },
        p,
        &num,
        &den,
        acc.norm(),
        bound,
        vec![],
    )
    .with_params(serde_json::json!({
        "poles": pd.n,
        "pole_divisor_degree": pd.deg_inf,
    })))
}

/// The appendix family f~(x) = gamma / ((a1 x + a2 m2)(a1 x + a2 m2')),
/// expanded into plain numerator/denominator coefficient form.
pub fn appendix_rational(
    field: &PrimeField,
    a1: u64,
    a2: u64,
    m2: u64,
    m2p: u64,
    gamma: u64,
) -> (Vec<i64>, Vec<i64>) {
    // (a1 x + a2 m2)(a1 x + a2 m2') = a1^2 x^2 + a1 a2 (m2 + m2') x + a2^2 m2 m2'
    let c2 = field.mul(a1, a1);
    let c1 = field.mul(field.mul(a1, a2), field.add(m2, m2p));
    let c0 = field.mul(field.mul(a2, a2), field.mul(m2, m2p));
    (vec![gamma as i64], vec![c0 as i64, c1 as i64, c2 as i64])
}
