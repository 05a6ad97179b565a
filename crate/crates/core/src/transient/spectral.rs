//! Closed forms of the transient law for equal rates `lambda = mu`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::special::{hyp2f1_terminating, ln_binomial, CompensatedSum, SignedLogValue};

/// Relative residual accepted for a refined root of `P`.
const ROOT_RESIDUAL: f64 = 1e-12;

fn check(n: usize, mu: f64) -> Result<()> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("mu must be positive and finite, got {mu}"));
    }
    Ok(())
}

/// Shifts of the two products in `P`: `2 mu (2r + 1)` and `2 mu (2r + 2)`.
fn shifts(n: usize, mu: f64) -> (Vec<f64>, Vec<f64>) {
    (
        (0..n).map(|r| 2.0 * mu * (2 * r + 1) as f64).collect(),
        (0..n).map(|r| 2.0 * mu * (2 * r + 2) as f64).collect(),
    )
}

/// `mantissa * 2^exponent`, so long products neither overflow nor lose the
/// full double precision a log representation would.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    mantissa: f64,
    exponent: i64,
}

impl Scaled {
    const ONE: Scaled = Scaled {
        mantissa: 1.0,
        exponent: 0,
    };

    fn normalized(mantissa: f64, exponent: i64) -> Self {
        if mantissa == 0.0 {
            return Scaled {
                mantissa,
                exponent: 0,
            };
        }
        let (m, e) = libm::frexp(mantissa);
        Scaled {
            mantissa: m,
            exponent: exponent + i64::from(e),
        }
    }

    fn mul(self, x: f64) -> Self {
        Self::normalized(self.mantissa * x, self.exponent)
    }

    fn add(self, other: Self) -> Self {
        if self.mantissa == 0.0 {
            return other;
        }
        if other.mantissa == 0.0 {
            return self;
        }
        let e = self.exponent.max(other.exponent);
        let scale = |v: Scaled| v.mantissa * 2f64.powi((v.exponent - e).max(-1100) as i32);
        Self::normalized(scale(self) + scale(other), e)
    }

    fn abs(self) -> Self {
        Scaled {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    fn to_log(self) -> SignedLogValue {
        SignedLogValue::from_f64(self.mantissa)
            * SignedLogValue::from_ln(self.exponent as f64 * std::f64::consts::LN_2)
    }
}

fn product(x: f64, shifts: &[f64]) -> Scaled {
    shifts.iter().fold(Scaled::ONE, |acc, &a| acc.mul(x + a))
}

/// Derivative of `prod (x + a_r)`, as a sum of products that each skip one
/// factor, so it stays exact when `x` hits a shift.
fn product_derivative(x: f64, shifts: &[f64]) -> Scaled {
    (0..shifts.len())
        .map(|skip| {
            shifts
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .fold(Scaled::ONE, |acc, (_, &a)| acc.mul(x + a))
        })
        .fold(Scaled::normalized(0.0, 0), Scaled::add)
}

/// `P(x) = x [prod_{r<N} (x + 2mu(2r+1)) + prod_{r<N} (x + 2mu(2r+2))]`,
/// evaluated in product form.
pub fn polynomial_p(x: f64, n: usize, mu: f64) -> SignedLogValue {
    let (a, b) = shifts(n, mu);
    product(x, &a).add(product(x, &b)).mul(x).to_log()
}

/// `Q(x) = prod_{r<N} (x + 2mu(2r+1))`.
pub fn polynomial_q(x: f64, n: usize, mu: f64) -> SignedLogValue {
    product(x, &shifts(n, mu).0).to_log()
}

fn p_derivative_scaled(x: f64, n: usize, mu: f64) -> Scaled {
    let (a, b) = shifts(n, mu);
    let sum = product(x, &a).add(product(x, &b));
    let dsum = product_derivative(x, &a).add(product_derivative(x, &b));
    sum.add(dsum.mul(x))
}

/// `P'(x)`.
pub fn polynomial_p_derivative(x: f64, n: usize, mu: f64) -> SignedLogValue {
    p_derivative_scaled(x, n, mu).to_log()
}

/// `|A + B| / (|A| + |B|)` for the two products of `P`; zero at a root.
fn relative_residual(x: f64, n: usize, mu: f64) -> f64 {
    let (a, b) = shifts(n, mu);
    let (pa, pb) = (product(x, &a), product(x, &b));
    (pa.add(pb).to_log().abs() / pa.abs().add(pb.abs()).to_log()).to_f64()
}

/// Sign of the bracket `(A + B)` part of `P`, which carries every negative root.
fn sign_of_sum(x: f64, n: usize, mu: f64) -> f64 {
    let (a, b) = shifts(n, mu);
    let m = product(x, &a).add(product(x, &b)).mantissa;
    if m == 0.0 {
        0.0
    } else {
        m.signum()
    }
}

/// Bracketing intervals `(-4m mu, -(4m-2) mu)`, `m = 1..=N`, one per negative
/// root. At `-(4m-2) mu` the first product vanishes and the second has `m-1`
/// negative factors; at `-4m mu` the second vanishes and the first has `m`
/// negative factors. The sum changes sign across each interval, and there
/// are `N` disjoint intervals for a degree-`N` sum. For odd `N` the root
/// `-(2N+1) mu` is known exactly.
fn brackets(n: usize, mu: f64) -> (Vec<(f64, f64)>, Option<f64>) {
    let exact = (n % 2 == 1).then(|| -((2 * n + 1) as f64) * mu);
    let out = (1..=n)
        .filter(|&m| n.is_multiple_of(2) || 2 * m != n + 1)
        .map(|m| (-((4 * m) as f64) * mu, -((4 * m - 2) as f64) * mu))
        .collect();
    (out, exact)
}

fn bisect(lo: f64, hi: f64, n: usize, mu: f64) -> Option<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let s_lo = sign_of_sum(lo, n, mu);
    let s_hi = sign_of_sum(hi, n, mu);
    if s_lo == 0.0 || s_hi == 0.0 || s_lo == s_hi {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sign_of_sum(mid, n, mu);
        if s == 0.0 {
            return Some(mid);
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // One guarded Newton step from the midpoint of the final bracket.
    let mid = 0.5 * (lo + hi);
    let step = (polynomial_p(mid, n, mu) / polynomial_p_derivative(mid, n, mu)).to_f64();
    let newton = mid - step;
    let best = if newton >= lo && newton <= hi { newton } else { mid };
    Some(
        [lo, hi, mid, best]
            .into_iter()
            .min_by(|x, y| relative_residual(*x, n, mu).total_cmp(&relative_residual(*y, n, mu)))
            .expect("non-empty"),
    )
}

/// Roots of the monic form of `P(x) / x` from the eigenvalues of its companion matrix.
fn companion_roots(n: usize, mu: f64) -> Result<Vec<f64>> {
    let (a, b) = shifts(n, mu);
    let expand = |sh: &[f64]| {
        let mut c = vec![1.0];
        for &s in sh {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i] += ci * s;
                next[i + 1] += ci;
            }
            c = next;
        }
        c
    };
    let (ca, cb) = (expand(&a), expand(&b));
    // (A + B) / 2 is monic of degree N.
    let coef: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| 0.5 * (x + y)).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -coef[i];
    }
    let eig = m.complex_eigenvalues();
    let mut roots = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * z.re.abs().max(mu) {
            return Err(Error::RootIsolation {
                n,
                reason: format!("companion matrix has a complex eigenvalue {z}"),
            });
        }
        roots.push(z.re);
    }
    Ok(roots)
}

/// All `N + 1` roots of `P`, `0 = alpha_1 > alpha_2 > ... > alpha_{N+1}`.
pub fn roots_of_p(n: usize, mu: f64) -> Result<Vec<f64>> {
    check(n, mu)?;
    let (intervals, exact) = brackets(n, mu);
    let mut negative: Vec<f64> = exact.into_iter().collect();
    let mut bracketed = true;
    for (lo, hi) in intervals {
        match bisect(lo, hi, n, mu) {
            Some(r) => negative.push(r),
            None => {
                bracketed = false;
                break;
            }
        }
    }
    if !bracketed {
        negative = companion_roots(n, mu)?;
    }
    negative.sort_by(|x, y| y.total_cmp(x));
    if negative.len() != n {
        return Err(Error::RootIsolation {
            n,
            reason: format!("found {} negative roots, expected {n}", negative.len()),
        });
    }
    for w in negative.windows(2) {
        if w[0] - w[1] <= 1e-6 * mu {
            return Err(Error::RootIsolation {
                n,
                reason: format!("roots {} and {} are not separated", w[0], w[1]),
            });
        }
    }
    for &r in &negative {
        if r >= 0.0 || relative_residual(r, n, mu) > ROOT_RESIDUAL {
            return Err(Error::RootIsolation {
                n,
                reason: format!("root {r} has relative residual {}", relative_residual(r, n, mu)),
            });
        }
    }
    let mut roots = vec![0.0];
    roots.extend(negative);
    Ok(roots)
}

/// Roots of `P` with the weights `R(alpha_k) = Q(alpha_k) / P'(alpha_k)`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralDecomposition {
    pub n: usize,
    pub mu: f64,
    pub roots: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn new(n: usize, mu: f64) -> Result<Self> {
        let roots = roots_of_p(n, mu)?;
        let weights = roots
            .iter()
            .map(|&a| (polynomial_q(a, n, mu) / polynomial_p_derivative(a, n, mu)).to_f64())
            .collect();
        Ok(Self {
            n,
            mu,
            roots,
            weights,
        })
    }

    /// `p(0, t) = 2 sum_k R(alpha_k) exp(alpha_k t)`; the `k = 1` term is `rho(0)`.
    pub fn p0(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("time must be non-negative, got {t}"));
        }
        let s: CompensatedSum = self
            .roots
            .iter()
            .zip(&self.weights)
            .map(|(&a, &r)| 2.0 * r * (a * t).exp())
            .collect();
        Ok(s.value())
    }

    /// Long-run value `2 R(0)` of `p(0, t)`.
    pub fn rho0(&self) -> f64 {
        2.0 * self.weights[0]
    }

    /// `sum_k R(alpha_k) (exp(-|alpha_k| t) - exp(-c t)) / (|alpha_k| - c)`,
    /// each term written as `exp(-min t) expm1(-|gap| t) / |gap|` so that it
    /// neither cancels nor overflows.
    fn relaxation_sum(&self, c: f64, t: f64) -> Result<f64> {
        let mut s = CompensatedSum::new();
        for (&a, &r) in self.roots.iter().zip(&self.weights) {
            let gap = a.abs() - c;
            if gap.abs() < 1e-9 * self.mu {
                return Err(Error::SingularConfiguration(format!(
                    "root {a} coincides with the exponent {c} (N = {})",
                    self.n
                )));
            }
            let low = a.abs().min(c);
            s.add(r * (-low * t).exp() * (-gap.abs() * t).exp_m1() / gap.abs());
        }
        Ok(s.value())
    }

    /// `p(r, t)` for `1 <= r <= N`, started from the empty system.
    pub fn pr(&self, r: usize, t: f64) -> Result<f64> {
        let (n, mu) = (self.n, self.mu);
        if r == 0 || r > n {
            return domain(format!("level must lie in 1..={n}, got {r}"));
        }
        if !(t >= 0.0) {
            return domain(format!("time must be non-negative, got {t}"));
        }
        let (ni, ri) = (n as i64, r as i64);
        let binom = |a: usize, b: usize| -> Result<f64> {
            if b > a {
                Ok(0.0)
            } else {
                Ok(ln_binomial(a as u64, b as u64)?.exp())
            }
        };
        let decay = (-4.0 * mu * t).exp();

        let mut first = CompensatedSum::new();
        for l in 0..=n {
            let f = hyp2f1_terminating(-2 * l as i64, (r as f64) - n as f64, -2.0 * n as f64, 2.0)?;
            first.add(binom(n, l)? * (-decay).powi(l as i32) * f.to_f64());
        }
        let first = first.value() * binom(2 * n, n + r)? / 4f64.powi(n as i32);

        let mut second = CompensatedSum::new();
        let mut third = CompensatedSum::new();
        for j in 0..n {
            let jj = j as i64;
            let c = binom(n - 1, j)? * if (n - 1 - j) % 2 == 0 { 1.0 } else { -1.0 };
            let f1 = hyp2f1_terminating(-2 * jj, (-ni + ri + 1) as f64, (-2 * ni + 1) as f64, 2.0)?;
            let f2 = hyp2f1_terminating(-2 * jj, (-ni + ri) as f64, (-2 * ni + 1) as f64, 2.0)?;
            let f3 = hyp2f1_terminating(-2 * jj, (-ni + ri) as f64, (-2 * ni) as f64, 2.0)?;
            let block = binom(2 * n - 1, n + r)? * f1.to_f64() - binom(2 * n - 1, n + r - 1)? * f2.to_f64();
            let d1 = 2.0 * mu * (2 * n - 1 - 2 * j) as f64;
            let d2 = 4.0 * mu * (n - j) as f64;
            second.add(c * block * self.relaxation_sum(d1, t)?);
            third.add(c * f3.to_f64() * self.relaxation_sum(d2, t)?);
        }
        let sign = if (n - r).is_multiple_of(2) { 1.0 } else { -1.0 };
        let pre = mu * n as f64 / 4f64.powi(n as i32 - 1) * sign;
        let mut total = CompensatedSum::new();
        total.add(first);
        total.add(pre * second.value());
        total.add(pre * binom(2 * n, n + r)? * third.value());
        Ok(total.value())
    }
}

/// `p(0, t)` for `lambda = mu`, started from the empty system.
pub fn p0_closed(t: f64, n: usize, mu: f64) -> Result<f64> {
    SpectralDecomposition::new(n, mu)?.p0(t)
}

/// `p(r, t)` for `lambda = mu`, started from the empty system.
pub fn pr_closed(r: usize, t: f64, n: usize, mu: f64) -> Result<f64> {
    SpectralDecomposition::new(n, mu)?.pr(r, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_small_cases() {
        assert!(polynomial_p(0.0, 4, 1.3).is_zero());
        // N = 1: P(x) = x (2x + 6).
        for x in [-5.0, -3.0, -1.0, 2.0] {
            let want = x * (2.0 * x + 6.0);
            assert!((polynomial_p(x, 1, 1.0).to_f64() - want).abs() < 1e-12);
        }
        for n in [1, 3, 5, 7, 9] {
            assert!(
                relative_residual(-((2 * n + 1) as f64) * 0.7, n, 0.7) < 1e-14,
                "N={n}"
            );
            assert!(polynomial_p(-((2 * n + 1) as f64), n, 1.0).is_zero(), "N={n}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for &x in &[-13.5, -4.0, -2.0, 0.0, 1.5] {
            let h = 1e-6;
            let fd =
                (polynomial_p(x + h, 3, 1.0).to_f64() - polynomial_p(x - h, 3, 1.0).to_f64()) / (2.0 * h);
            let d = polynomial_p_derivative(x, 3, 1.0).to_f64();
            assert!((fd - d).abs() < 1e-5 * d.abs().max(1.0), "x={x}: {fd} vs {d}");
        }
    }

    #[test]
    fn roots_small_n() {
        assert_eq!(roots_of_p(1, 1.0).unwrap(), vec![0.0, -3.0]);
        // N = 2: A + B = 2x^2 + 20x + 44, roots -5 +- sqrt(3).
        let r = roots_of_p(2, 1.0).unwrap();
        assert_eq!(r.len(), 3);
        assert!((r[1] - (-5.0 + 3f64.sqrt())).abs() < 1e-14, "{r:?}");
        assert!((r[2] - (-5.0 - 3f64.sqrt())).abs() < 1e-14, "{r:?}");
    }

    #[test]
    fn roots_many_n() {
        for n in 1..=40 {
            for mu in [0.5, 1.0, 2.0] {
                let r = roots_of_p(n, mu).unwrap();
                assert_eq!(r.len(), n + 1);
                assert_eq!(r[0], 0.0);
                for w in r.windows(2) {
                    assert!(w[0] - w[1] > 1e-6 * mu);
                }
                for &a in &r[1..] {
                    assert!(relative_residual(a, n, mu) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn companion_fallback_agrees_with_brackets() {
        for n in 2..=8 {
            let mut c = companion_roots(n, 1.0).unwrap();
            c.sort_by(|x, y| y.total_cmp(x));
            let r = roots_of_p(n, 1.0).unwrap();
            for (a, b) in c.iter().zip(&r[1..]) {
                assert!((a - b).abs() < 1e-8, "N={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn n1_hand_partial_fractions() {
        // p(0, t) = 2/3 + exp(-3t)/3.
        let s = SpectralDecomposition::new(1, 1.0).unwrap();
        assert!((s.weights[0] - 2.0 / 6.0).abs() < 1e-15);
        assert!((s.weights[1] - 1.0 / 6.0).abs() < 1e-15);
        for t in [0.0f64, 0.2, 1.0, 5.0] {
            let want = 2.0 / 3.0 + (-3.0 * t).exp() / 3.0;
            assert!((s.p0(t).unwrap() - want).abs() < 1e-14);
            assert!((s.pr(1, t).unwrap() - (1.0 - want)).abs() < 1e-13);
        }
        assert!(s.p0(-1.0).is_err());
    }

    #[test]
    fn initial_and_long_run_values() {
        for n in 1..=8 {
            let s = SpectralDecomposition::new(n, 1.0).unwrap();
            assert!((s.p0(0.0).unwrap() - 1.0).abs() < 1e-12, "N={n}");
            for r in 1..=n {
                assert!(s.pr(r, 0.0).unwrap().abs() < 1e-12, "N={n} r={r}");
            }
            // rho(r) = 2 C(2N, N+r) / (C(2N, N) + 4^N) for r >= 1.
            let c = |k: usize| ln_binomial(2 * n as u64, k as u64).unwrap().exp();
            let denom = c(n) + 4f64.powi(n as i32);
            assert!((s.rho0() - 2.0 * c(n) / denom).abs() < 1e-12);
            for r in 1..=n {
                let want = 2.0 * c(n + r) / denom;
                assert!((s.pr(r, 200.0).unwrap() - want).abs() < 1e-12, "N={n} r={r}");
            }
        }
    }
}
