//! Certified complex root finding for rational polynomials.
//!
//! Real roots are isolated rigorously with Sturm sequences and refined by
//! exact dyadic bisection. Complex roots are seeded with a float
//! Aberth–Ehrlich iteration and refined by Newton steps in exact rational
//! complex arithmetic (with dyadic rounding to keep denominators bounded).
//! Every returned root carries a certified error radius derived from the
//! exact residual bound `min_i |z - alpha_i| <= deg * |f(z)/f'(z)|`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::poly::QPoly;
use crate::rat;
use crate::{Error, Result};

/// A root of an integer/rational polynomial with a certified enclosure.
#[derive(Debug, Clone)]
pub struct CertifiedRoot {
    pub re: BigRational,
    pub im: BigRational,
    /// The true root lies within this distance of (re, im).
    pub radius: BigRational,
    pub is_real: bool,
    pub multiplicity: usize,
}

impl CertifiedRoot {
    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat::to_f64(&self.re), rat::to_f64(&self.im))
    }

    /// |root| as f64, adequate whenever the radius is far below f64 eps.
    pub fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }
}

/// All complex roots of `f` (with multiplicity), certified to `2^-precision`.
pub fn certified_roots(f: &QPoly, precision: u32) -> Result<Vec<CertifiedRoot>> {
    if f.is_zero() {
        return Err(Error::InvalidInput("root finding on the zero polynomial".into()));
    }
    if f.degree() == 0 {
        return Ok(vec![]);
    }
    let (zero_mult, f) = f.strip_zero_roots();
    let mut out = Vec::new();
    if zero_mult > 0 {
        out.push(CertifiedRoot {
            re: BigRational::zero(),
            im: BigRational::zero(),
            radius: BigRational::zero(),
            is_real: true,
            multiplicity: zero_mult,
        });
    }
    for (factor, mult) in f.squarefree_decomposition() {
        if factor.degree() == 0 {
            continue;
        }
        for mut root in squarefree_roots(&factor, precision)? {
            root.multiplicity = mult;
            out.push(root);
        }
    }
    // Deterministic order: by (re, im).
    out.sort_by(|a, b| (a.re.clone(), a.im.clone()).cmp(&(b.re.clone(), b.im.clone())));
    Ok(out)
}

fn squarefree_roots(f: &QPoly, precision: u32) -> Result<Vec<CertifiedRoot>> {
    let deg = f.degree();
    if deg == 1 {
        let root = -&f.coeffs[0] / &f.coeffs[1];
        return Ok(vec![CertifiedRoot {
            re: root,
            im: BigRational::zero(),
            radius: BigRational::zero(),
            is_real: true,
            multiplicity: 1,
        }]);
    }

    let n_real = f.real_root_count();
    if (deg - n_real) % 2 != 0 {
        return Err(Error::PrecisionFailure("real root count parity mismatch".into()));
    }
    let n_pairs = (deg - n_real) / 2;

    let mut roots = Vec::with_capacity(deg);
    for interval in isolate_real_roots(f, n_real)? {
        roots.push(refine_real_root(f, interval, precision)?);
    }

    if n_pairs > 0 {
        // Real approximations may carry spurious tiny imaginary parts, so
        // select the n_pairs seeds with the largest imaginary part; the
        // certification below rejects any misclassification.
        let mut approx = aberth(f);
        approx.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal));
        let mut seeds: Vec<Complex64> = approx.into_iter().take(n_pairs).collect();
        seeds.sort_by(|a, b| {
            (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut refined: Vec<(BigRational, BigRational, BigRational)> = Vec::new();
        for seed in seeds {
            let (re, mut im, radius) = refine_complex_root(f, seed, precision)?;
            if im.is_negative() {
                im = -im;
            }
            // The enclosure must stay off the real axis, otherwise the
            // real/complex classification is not certified.
            if radius >= im {
                return Err(Error::PrecisionFailure(
                    "complex enclosure touches the real axis".into(),
                ));
            }
            refined.push((re, im, radius));
        }
        // Distinct pairs: enclosures must be pairwise disjoint.
        for i in 0..refined.len() {
            for j in i + 1..refined.len() {
                let dr = (&refined[i].0 - &refined[j].0).abs();
                let di = (&refined[i].1 - &refined[j].1).abs();
                let rr = &refined[i].2 + &refined[j].2;
                if dr <= rr && di <= rr {
                    return Err(Error::PrecisionFailure(
                        "two seeds converged to the same conjugate pair".into(),
                    ));
                }
            }
        }
        for (re, im, radius) in refined {
            roots.push(CertifiedRoot {
                re: re.clone(),
                im: im.clone(),
                radius: radius.clone(),
                is_real: false,
                multiplicity: 1,
            });
            roots.push(CertifiedRoot { re, im: -im, radius, is_real: false, multiplicity: 1 });
        }
    }
    Ok(roots)
}

/// Disjoint open intervals with rational endpoints, one distinct real root
/// in each, found by Sturm bisection. `f` must be squarefree.
fn isolate_real_roots(f: &QPoly, count: usize) -> Result<Vec<(BigRational, BigRational)>> {
    if count == 0 {
        return Ok(vec![]);
    }
    let bound = f.root_bound_rational() + BigRational::one();
    let mut work = vec![(-bound.clone(), bound)];
    let mut isolated = Vec::new();
    let mut steps = 0usize;
    while let Some((lo, hi)) = work.pop() {
        steps += 1;
        if steps > 100_000 {
            return Err(Error::PrecisionFailure("real root isolation did not terminate".into()));
        }
        let n = f.sturm_count(&lo, &hi);
        match n {
            0 => {}
            1 => isolated.push((lo, hi)),
            _ => {
                let mid = (&lo + &hi) / rat::q(2);
                // Nudge off an exact root at the midpoint.
                let mid = if f.eval(&mid).is_zero() {
                    (&lo + &mid * rat::q(3)) / rat::q(4)
                } else {
                    mid
                };
                work.push((lo, mid.clone()));
                work.push((mid, hi));
            }
        }
    }
    if isolated.len() != count {
        return Err(Error::PrecisionFailure("isolation found a wrong number of roots".into()));
    }
    isolated.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(isolated)
}

/// Shrink an isolating interval to `2^-precision` by exact bisection, with
/// dyadic endpoints so denominators stay bounded.
fn refine_real_root(
    f: &QPoly,
    (mut lo, mut hi): (BigRational, BigRational),
    precision: u32,
) -> Result<CertifiedRoot> {
    let target = BigRational::new(BigInt::one(), BigInt::one() << precision);
    let sign_lo = f.eval(&lo).is_positive();
    // Sturm guaranteed exactly one root inside; sign change must exist
    // because the endpoints are not roots (squarefree + isolation nudge).
    if f.eval(&lo).is_zero() || f.eval(&hi).is_zero() {
        // Endpoint happens to be the root: return it exactly.
        let root = if f.eval(&lo).is_zero() { lo } else { hi };
        return Ok(CertifiedRoot {
            re: root,
            im: BigRational::zero(),
            radius: BigRational::zero(),
            is_real: true,
            multiplicity: 1,
        });
    }
    let mut width = &hi - &lo;
    while width > target {
        let mid = rat::dyadic_round(&((&lo + &hi) / rat::q(2)), precision + 8);
        let v = f.eval(&mid);
        if v.is_zero() {
            return Ok(CertifiedRoot {
                re: mid,
                im: BigRational::zero(),
                radius: BigRational::zero(),
                is_real: true,
                multiplicity: 1,
            });
        }
        // Guard against the rounded midpoint escaping the bracket.
        if mid <= lo || mid >= hi {
            break;
        }
        if v.is_positive() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        width = &hi - &lo;
    }
    let mid = (&lo + &hi) / rat::q(2);
    let radius = (&hi - &lo) / rat::q(2);
    Ok(CertifiedRoot { re: mid, im: BigRational::zero(), radius, is_real: true, multiplicity: 1 })
}

#[doc(hidden)]
pub fn refine_complex_root_dbg(
    f: &QPoly,
    seed: Complex64,
    precision: u32,
) -> Result<(BigRational, BigRational, BigRational)> {
    refine_complex_root(f, seed, precision)
}

/// Newton refinement in exact rational complex arithmetic. Returns
/// (re, im, certified radius) with radius <= 2^-precision.
fn refine_complex_root(
    f: &QPoly,
    seed: Complex64,
    precision: u32,
) -> Result<(BigRational, BigRational, BigRational)> {
    let work_bits = precision + 32;
    let deg = BigRational::from_integer(rat::int(f.degree() as i64));
    let df = f.derivative();
    let mut re = approx_rational(seed.re, work_bits);
    let mut im = approx_rational(seed.im, work_bits);
    let target_sq = BigRational::new(BigInt::one(), BigInt::one() << (2 * precision + 4));
    for _ in 0..200 {
        let (fr, fi) = f.eval_rational_complex(&re, &im);
        let (dr, di) = df.eval_rational_complex(&re, &im);
        let dnorm = &dr * &dr + &di * &di;
        if dnorm.is_zero() {
            return Err(Error::PrecisionFailure("derivative vanished during refinement".into()));
        }
        // radius^2 bound: deg^2 |f|^2 / |f'|^2
        let fnorm = &fr * &fr + &fi * &fi;
        let rad_sq = &deg * &deg * &fnorm / &dnorm;
        if rad_sq <= target_sq {
            let bound = sqrt_upper_bound(&rad_sq);
            // 2^-precision is also certified here since rad_sq <= 2^-(2p+4).
            let cap = BigRational::new(BigInt::one(), BigInt::one() << precision);
            let radius = if bound < cap { bound } else { cap };
            return Ok((re, im, radius));
        }
        // z -= f/f' in rational complex arithmetic.
        let step_re = (&fr * &dr + &fi * &di) / &dnorm;
        let step_im = (&fi * &dr - &fr * &di) / &dnorm;
        re = rat::dyadic_round(&(&re - step_re), work_bits);
        im = rat::dyadic_round(&(&im - step_im), work_bits);
    }
    Err(Error::PrecisionFailure("complex Newton refinement did not converge".into()))
}

/// Rational upper bound for sqrt(x): `ceil(sqrt(numer)) / floor(sqrt(denom))`.
fn sqrt_upper_bound(x: &BigRational) -> BigRational {
    use num_integer::Roots;
    if x.is_zero() {
        return BigRational::zero();
    }
    let n = x.numer().clone();
    let d = x.denom().clone();
    let sn = n.sqrt();
    let sn = if &sn * &sn == n { sn } else { sn + 1 };
    let sd = d.sqrt().max(BigInt::one());
    BigRational::new(sn, sd)
}

fn approx_rational(x: f64, bits: u32) -> BigRational {
    let r = BigRational::from_float(x).unwrap_or_else(BigRational::zero);
    rat::dyadic_round(&r, bits)
}

/// Aberth–Ehrlich simultaneous iteration in f64. Returns approximations to
/// all roots of a squarefree polynomial; no certification.
pub fn aberth(f: &QPoly) -> Vec<Complex64> {
    let deg = f.degree();
    let coeffs: Vec<f64> = f.coeffs.iter().map(rat::to_f64).collect();
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for k in (0..=deg).rev() {
            dp = dp * z + p;
            p = p * z + Complex64::new(monic[k], 0.0);
        }
        (p, dp)
    };
    let bound = 1.0 + monic[..deg].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (deg as f64) + 0.40;
            Complex64::from_polar(bound * 0.8, angle)
        })
        .collect();
    for _ in 0..400 {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let w = if dp.norm() == 0.0 { Complex64::new(1e-12, 1e-12) } else { p / dp };
            let mut repulse = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-300 {
                        repulse += Complex64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * repulse;
            let step = if denom.norm() < 1e-300 { w } else { w / denom };
            z[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Newton polish.
    for zi in z.iter_mut() {
        for _ in 0..8 {
            let (p, dp) = eval(*zi);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            *zi -= step;
            if step.norm() < 1e-16 {
                break;
            }
        }
    }
    z
}

/// Fast float-only roots (with multiplicity folded out via squarefree
/// decomposition). Suitable for search loops; not certified.
pub fn roots_f64(f: &QPoly) -> Vec<(Complex64, usize)> {
    let (zero_mult, f) = f.strip_zero_roots();
    let mut out = Vec::new();
    if zero_mult > 0 {
        out.push((Complex64::new(0.0, 0.0), zero_mult));
    }
    if f.degree() == 0 {
        return out;
    }
    for (factor, mult) in f.squarefree_decomposition() {
        if factor.degree() == 0 {
            continue;
        }
        for z in aberth(&factor) {
            out.push((z, mult));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> QPoly {
        QPoly::from_int_coeffs(coeffs)
    }

    #[test]
    fn sqrt2_certified() {
        let roots = certified_roots(&p(&[-2, 0, 1]), 128).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().all(|r| r.is_real));
        let v = rat::to_f64(&roots[1].re);
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-15);
        let eps = BigRational::new(rat::int(1), rat::int(1) << 60);
        assert!(roots[1].radius < eps);
    }

    #[test]
    fn complex_pair_of_x2_plus_1() {
        let roots = certified_roots(&p(&[1, 0, 1]), 96).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().all(|r| !r.is_real));
        let up = roots.iter().find(|r| r.im.is_positive()).unwrap();
        assert!((rat::to_f64(&up.im) - 1.0).abs() < 1e-20);
        assert!((rat::to_f64(&up.re)).abs() < 1e-20);
    }

    #[test]
    fn cube_root_of_two_split() {
        let roots = certified_roots(&p(&[-2, 0, 0, 1]), 80).unwrap();
        let real: Vec<_> = roots.iter().filter(|r| r.is_real).collect();
        let complex: Vec<_> = roots.iter().filter(|r| !r.is_real).collect();
        assert_eq!(real.len(), 1);
        assert_eq!(complex.len(), 2);
        assert!((rat::to_f64(&real[0].re) - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
        // complex pair has |z| = 2^(1/3)
        assert!((complex[0].abs_f64() - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn multiplicities_via_squarefree() {
        // (x-1)^2 (x^2+1)
        let f = p(&[-1, 1]).mul(&p(&[-1, 1])).mul(&p(&[1, 0, 1]));
        let roots = certified_roots(&f, 64).unwrap();
        let one = roots
            .iter()
            .find(|r| r.is_real && (rat::to_f64(&r.re) - 1.0).abs() < 1e-12)
            .unwrap();
        assert_eq!(one.multiplicity, 2);
        // 2 (real root, mult 2) + 1 + 1 (conjugate pair) = 4 = degree
        assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), 4);
        assert_eq!(roots.len(), 3);
    }

    #[test]
    fn exact_rational_roots_have_zero_radius() {
        let roots = certified_roots(&p(&[-6, 11, -6, 1]), 64).unwrap(); // (x-1)(x-2)(x-3)
        assert_eq!(roots.len(), 3);
        for r in &roots {
            // Bisection may or may not land exactly; enclosure must contain
            // an integer.
            let nearest = rat::to_f64(&r.re).round();
            let dist = (&r.re - BigRational::from_float(nearest).unwrap()).abs();
            assert!(dist <= r.radius || dist < BigRational::new(rat::int(1), rat::int(1) << 50));
        }
    }
}
