//! Dense univariate polynomials over the rationals.
//!
//! These are the workhorse for minimal polynomials, root isolation and
//! Mahler measures. Coefficients are stored low degree first with no
//! trailing zeros.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::rat;

/// Univariate polynomial with exact rational coefficients, low degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QPoly {
    pub coeffs: Vec<BigRational>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        QPoly { coeffs }
    }

    pub fn zero() -> Self {
        QPoly { coeffs: vec![BigRational::zero()] }
    }

    pub fn one() -> Self {
        QPoly { coeffs: vec![BigRational::one()] }
    }

    pub fn x() -> Self {
        QPoly::new(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn constant(c: BigRational) -> Self {
        QPoly::new(vec![c])
    }

    pub fn from_int_coeffs(coeffs: &[i64]) -> Self {
        QPoly::new(coeffs.iter().map(|&c| rat::q(c)).collect())
    }

    pub fn from_bigint_coeffs(coeffs: &[BigInt]) -> Self {
        QPoly::new(coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.coeffs.len() - 1
        }
    }

    pub fn lead(&self) -> &BigRational {
        self.coeffs.last().expect("nonempty coefficient vector")
    }

    pub fn is_monic(&self) -> bool {
        self.lead().is_one()
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        QPoly::new(out)
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        QPoly::new(out)
    }

    pub fn neg(&self) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        QPoly::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> QPoly {
        QPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division: returns (quotient, remainder).
    pub fn div_rem(&self, divisor: &QPoly) -> (QPoly, QPoly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dn = divisor.degree();
        if self.degree() < dn || self.is_zero() {
            return (QPoly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); self.degree() - dn + 1];
        let lead_inv = BigRational::one() / divisor.lead();
        for k in (dn..rem.len()).rev() {
            let c = &rem[k] * &lead_inv;
            if c.is_zero() {
                continue;
            }
            quot[k - dn] = c.clone();
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let idx = k - dn + j;
                let t = &c * d;
                rem[idx] -= t;
            }
        }
        rem.truncate(dn.max(1));
        (QPoly::new(quot), QPoly::new(rem))
    }

    /// Monic gcd via the Euclidean algorithm.
    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            let inv = BigRational::one() / a.lead();
            a.scale(&inv)
        }
    }

    pub fn derivative(&self) -> QPoly {
        if self.coeffs.len() <= 1 {
            return QPoly::zero();
        }
        QPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(rat::int(i as i64)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + Complex64::new(rat::to_f64(c), 0.0);
        }
        acc
    }

    /// Exact evaluation at a rational complex point, returning (re, im).
    pub fn eval_rational_complex(
        &self,
        re: &BigRational,
        im: &BigRational,
    ) -> (BigRational, BigRational) {
        let mut ar = BigRational::zero();
        let mut ai = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            let nr = &ar * re - &ai * im + c;
            let ni = &ar * im + &ai * re;
            ar = nr;
            ai = ni;
        }
        (ar, ai)
    }

    /// Substitute `x -> x^k`.
    pub fn inflate(&self, k: usize) -> QPoly {
        let mut out = vec![BigRational::zero(); self.degree() * k + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i * k] = c.clone();
        }
        QPoly::new(out)
    }

    /// Reverse the coefficients: `x^deg f(1/x)`.
    pub fn reverse(&self) -> QPoly {
        let mut c = self.coeffs.clone();
        c.reverse();
        QPoly::new(c)
    }

    /// Strip the factor `x^k`, returning (k, remaining polynomial).
    pub fn strip_zero_roots(&self) -> (usize, QPoly) {
        if self.is_zero() {
            return (0, self.clone());
        }
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        (k, QPoly::new(self.coeffs[k..].to_vec()))
    }

    /// Clear denominators and the integer content: the primitive integer
    /// polynomial with positive leading coefficient, plus the rational
    /// factor pulled out so that `self = factor * primitive`.
    pub fn primitive_integer(&self) -> (BigRational, Vec<BigInt>) {
        assert!(!self.is_zero(), "zero polynomial has no primitive part");
        let mut denom_lcm = BigInt::one();
        for c in &self.coeffs {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(denom_lcm.clone())).to_integer())
            .collect();
        let mut content = BigInt::zero();
        for c in &ints {
            content = content.gcd(c);
        }
        if content.is_zero() {
            content = BigInt::one();
        }
        let sign = if ints.last().map_or(false, |c| c.is_negative()) {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        let divisor = &content * &sign;
        let prim: Vec<BigInt> = ints.iter().map(|c| c / &divisor).collect();
        let factor = BigRational::new(divisor, denom_lcm);
        (factor, prim)
    }

    /// Squarefree part `f / gcd(f, f')`, made monic.
    pub fn squarefree_part(&self) -> QPoly {
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            let inv = BigRational::one() / self.lead();
            return self.scale(&inv);
        }
        let (q, _) = self.div_rem(&g);
        let inv = BigRational::one() / q.lead();
        q.scale(&inv)
    }

    /// Yun's squarefree decomposition: returns `[(g_1, 1), (g_2, 2), ...]`
    /// with `f = lead * prod g_i^i` and the `g_i` monic, squarefree, coprime.
    pub fn squarefree_decomposition(&self) -> Vec<(QPoly, usize)> {
        assert!(!self.is_zero());
        let monic = self.scale(&(BigRational::one() / self.lead()));
        if monic.degree() == 0 {
            return vec![];
        }
        let df = monic.derivative();
        let a = monic.gcd(&df);
        if a.degree() == 0 {
            return vec![(monic, 1)];
        }
        let mut result = Vec::new();
        let (mut b, _) = monic.div_rem(&a);
        let (mut c, _) = df.div_rem(&a);
        let mut i = 1;
        loop {
            let d = c.sub(&b.derivative());
            let g = b.gcd(&d);
            if g.degree() > 0 {
                result.push((g.clone(), i));
            }
            if g.degree() == b.degree() {
                break;
            }
            let (nb, _) = b.div_rem(&g);
            let (nc, _) = d.div_rem(&g);
            b = nb;
            c = nc;
            if b.degree() == 0 {
                break;
            }
            i += 1;
        }
        result
    }

    /// Number of distinct real roots in `(lo, hi]` by Sturm's theorem.
    /// The polynomial must be squarefree.
    pub fn sturm_count(&self, lo: &BigRational, hi: &BigRational) -> usize {
        let chain = self.sturm_chain();
        let sv = |x: &BigRational| -> usize {
            let mut signs: Vec<i8> = Vec::new();
            for p in &chain {
                let v = p.eval(x);
                if !v.is_zero() {
                    signs.push(if v.is_positive() { 1 } else { -1 });
                }
            }
            signs.windows(2).filter(|w| w[0] != w[1]).count()
        };
        sv(lo).saturating_sub(sv(hi))
    }

    /// Total number of distinct real roots (squarefree input).
    pub fn real_root_count(&self) -> usize {
        let bound = self.root_bound_rational();
        let lo = -&bound - BigRational::one();
        let hi = bound + BigRational::one();
        self.sturm_count(&lo, &hi)
    }

    fn sturm_chain(&self) -> Vec<QPoly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.neg());
        }
        chain
    }

    /// Cauchy bound on the absolute value of any complex root.
    pub fn root_bound_rational(&self) -> BigRational {
        let lead = self.lead().abs();
        let mut m = BigRational::zero();
        for c in &self.coeffs[..self.coeffs.len() - 1] {
            let r = c.abs() / &lead;
            if r > m {
                m = r;
            }
        }
        m + BigRational::one()
    }
}

/// The n-th cyclotomic polynomial, computed by dividing `x^n - 1` by the
/// cyclotomic polynomials of the proper divisors of n.
pub fn cyclotomic(n: u64) -> QPoly {
    assert!(n >= 1);
    let mut num = vec![BigRational::zero(); n as usize + 1];
    num[0] = -BigRational::one();
    num[n as usize] = BigRational::one();
    let mut f = QPoly::new(num);
    for d in 1..n {
        if n % d == 0 {
            let (q, r) = f.div_rem(&cyclotomic(d));
            debug_assert!(r.is_zero());
            f = q;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> QPoly {
        QPoly::from_int_coeffs(coeffs)
    }

    #[test]
    fn div_rem_roundtrip() {
        let a = p(&[1, 0, -3, 2, 5]);
        let b = p(&[2, 1, 1]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < b.degree());
    }

    #[test]
    fn gcd_of_common_factor() {
        let f = p(&[-1, 0, 1]); // x^2 - 1
        let g = p(&[1, 1]); // x + 1
        assert_eq!(f.gcd(&g), g);
    }

    #[test]
    fn squarefree_decomposition_recovers_multiplicities() {
        // (x-1)^2 (x+2)^3
        let f = p(&[-1, 1]).mul(&p(&[-1, 1])).mul(&p(&[2, 1])).mul(&p(&[2, 1])).mul(&p(&[2, 1]));
        let dec = f.squarefree_decomposition();
        assert_eq!(dec.len(), 2);
        assert_eq!(dec[0], (p(&[-1, 1]), 2));
        assert_eq!(dec[1], (p(&[2, 1]), 3));
    }

    #[test]
    fn sturm_counts_roots_of_quadratic() {
        let f = p(&[-2, 0, 1]); // x^2 - 2
        assert_eq!(f.real_root_count(), 2);
        let g = p(&[1, 0, 1]); // x^2 + 1
        assert_eq!(g.real_root_count(), 0);
        let h = p(&[-2, 0, 0, 1]); // x^3 - 2
        assert_eq!(h.real_root_count(), 1);
    }

    #[test]
    fn cyclotomic_small_cases() {
        assert_eq!(cyclotomic(1), p(&[-1, 1]));
        assert_eq!(cyclotomic(2), p(&[1, 1]));
        assert_eq!(cyclotomic(4), p(&[1, 0, 1]));
        assert_eq!(cyclotomic(5), p(&[1, 1, 1, 1, 1]));
        assert_eq!(cyclotomic(6), p(&[1, -1, 1]));
        assert_eq!(cyclotomic(12), p(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn primitive_integer_part() {
        let f = QPoly::new(vec![rat::qq(2, 3), rat::qq(4, 3)]);
        let (factor, prim) = f.primitive_integer();
        assert_eq!(prim, vec![rat::int(1), rat::int(2)]);
        assert_eq!(factor, rat::qq(2, 3));
    }
}
