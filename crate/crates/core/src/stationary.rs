//! Steady-state law of the chain.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::special::{hyp2f1_terminating, ln_binomial, ln_gamma, CompensatedSum, SignedLogValue};

fn check(rho: f64, n: usize) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return domain(format!("rho must be positive and finite, got {rho}"));
    }
    if n == 0 {
        return domain("N must be at least 1");
    }
    Ok(())
}

/// `g(rho, N) = 1 / 2F1(-N, 1; 1 + N; -rho)`, which is also `rho(0)`.
pub fn g(rho: f64, n: usize) -> Result<SignedLogValue> {
    check(rho, n)?;
    let f = hyp2f1_terminating(-(n as i64), 1.0, 1.0 + n as f64, -rho)?;
    Ok(SignedLogValue::ONE / f)
}

fn ln_central(n: usize) -> Result<f64> {
    ln_binomial(2 * n as u64, n as u64)
}

/// `rho(k) = g / C(2N, N) * rho^k * C(2N, N + k)` from a precomputed `g`.
fn rho_k_with(k: usize, rho: f64, n: usize, g: SignedLogValue) -> Result<SignedLogValue> {
    if k > n {
        return domain(format!("k must lie in 0..={n}, got {k}"));
    }
    if k == 0 {
        return Ok(g);
    }
    let ln = g.ln_abs() - ln_central(n)? + k as f64 * rho.ln() + ln_binomial(2 * n as u64, (n + k) as u64)?;
    Ok(SignedLogValue::from_ln(ln))
}

/// Stationary probability of `k` particles.
pub fn rho_k(k: usize, rho: f64, n: usize) -> Result<SignedLogValue> {
    rho_k_with(k, rho, n, g(rho, n)?)
}

/// Whole stationary law `rho(0..=N)` in log space.
pub fn stationary_law(rho: f64, n: usize) -> Result<Vec<SignedLogValue>> {
    let g = g(rho, n)?;
    (0..=n).map(|k| rho_k_with(k, rho, n, g)).collect()
}

/// Stationary mean, variance and coefficient of variation of the level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub cv: f64,
}

/// Closed-form moments in terms of `g(rho, N)`.
pub fn moments(rho: f64, n: usize) -> Result<Moments> {
    let g = g(rho, n)?.to_f64();
    let nf = n as f64;
    let shifted = rho - 1.0 + g;
    let mean = nf * shifted / (1.0 + rho);
    debug_assert!(mean > 0.0);
    let variance = nf / (1.0 + rho).powi(2) * (rho * (2.0 - g - g * nf) + nf * (1.0 - g) * g);
    let cv = (rho * (2.0 - g) / (nf * shifted * shifted) - g / shifted).sqrt();
    Ok(Moments { mean, variance, cv })
}

/// Moments by direct summation over the stationary law.
pub fn moments_direct(rho: f64, n: usize) -> Result<Moments> {
    let law = stationary_law(rho, n)?;
    let (mut m1, mut m2) = (CompensatedSum::new(), CompensatedSum::new());
    for (k, p) in law.iter().enumerate() {
        let p = p.to_f64();
        m1.add(k as f64 * p);
        m2.add((k * k) as f64 * p);
    }
    let mean = m1.value();
    let variance = m2.value() - mean * mean;
    Ok(Moments {
        mean,
        variance,
        cv: variance.sqrt() / mean,
    })
}

/// Large-`N` approximation of `g(rho, N)` for `rho < 1`.
pub fn g_approx(rho: f64, n: usize) -> Result<SignedLogValue> {
    check(rho, n)?;
    if rho >= 1.0 {
        return domain(format!("the large-N approximation of g needs rho < 1, got {rho}"));
    }
    let nf = n as f64;
    let l = ((rho + 1.0).powi(2) / (4.0 * rho)).ln();
    let l52 = l.powf(2.5);
    let ln_num = (3.0 - 2.0 * nf) * std::f64::consts::LN_2
        + ln_gamma(2.0 * nf + 1.0)?
        + 0.5 * std::f64::consts::PI.ln()
        + 2.5 * nf.ln()
        + 2.5 * l.ln();
    let num = SignedLogValue::from_ln(ln_num) * SignedLogValue::from_f64((rho - 1.0).powi(3));
    let bracket =
        3.0 * (rho - 1.0).powi(3) + nf * l52 * ((3.0 * rho + 1.0).powi(2) - 8.0 * nf * (rho - 1.0).powi(2));
    let den = SignedLogValue::from_ln(2.0 * ln_gamma(nf + 1.0)?) * SignedLogValue::from_f64(bracket);
    Ok(num / den)
}

/// `rho(k)` with `g` replaced by its large-`N` approximation.
pub fn rho_k_approx(k: usize, rho: f64, n: usize) -> Result<SignedLogValue> {
    rho_k_with(k, rho, n, g_approx(rho, n)?)
}

/// Behaviour of the moments as `N -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum LargeNLimit {
    /// `rho > 1`: mean and variance diverge, CV tends to 0.
    Supercritical { cv: f64 },
    /// `rho = 1`: mean and variance diverge, CV tends to `sqrt(pi/2 - 1)`.
    Critical { cv: f64 },
    /// `rho < 1`: finite limits.
    Subcritical { mean: f64, variance: f64, cv: f64 },
}

/// Limits of the stationary moments as `N` grows.
pub fn limits_large_n(rho: f64) -> Result<LargeNLimit> {
    check(rho, 1)?;
    if rho > 1.0 {
        return Ok(LargeNLimit::Supercritical { cv: 0.0 });
    }
    if rho == 1.0 {
        return Ok(LargeNLimit::Critical {
            cv: (std::f64::consts::FRAC_PI_2 - 1.0).sqrt(),
        });
    }
    let l = ((1.0 + rho).powi(2) / (4.0 * rho)).ln();
    let poly = 145.0 * rho.powi(4) + 492.0 * rho.powi(3) + 374.0 * rho.powi(2) + 12.0 * rho + 1.0;
    let variance = 3.0 * (1.0 - rho).powi(3) / (8.0 * (1.0 + rho).powi(2) * l.powf(2.5))
        - poly / (128.0 * (1.0 - rho * rho).powi(2));
    let cv = (24.0 * (1.0 - rho).powi(5) / l.powf(2.5) - poly / 2.0).sqrt() / (8.0 * rho * (1.0 + rho));
    Ok(LargeNLimit::Subcritical {
        mean: rho / (1.0 - rho),
        variance,
        cv,
    })
}

/// Shannon entropy `-sum rho(k) ln rho(k)` in nats.
pub fn entropy(rho: f64, n: usize) -> Result<f64> {
    let law = stationary_law(rho, n)?;
    let mut h = CompensatedSum::new();
    for p in law {
        // exp underflows below -745; such terms contribute under 1e-320.
        if p.ln_abs() >= -745.0 {
            h.add(-p.to_f64() * p.ln_abs());
        }
    }
    Ok(h.value())
}

/// Result of maximizing the entropy over `rho`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyArgmax {
    pub n: usize,
    pub argmax: f64,
    pub max_entropy: f64,
    /// Local maxima found by the grid scan; a single entry when unimodal.
    pub candidates: Vec<f64>,
}

impl EntropyArgmax {
    pub fn unimodal(&self) -> bool {
        self.candidates.len() == 1
    }
}

const ARGMAX_LO: f64 = 0.1;
const ARGMAX_HI: f64 = 20.0;
const ARGMAX_SCAN: usize = 400;
const ARGMAX_TOL: f64 = 1e-6;

/// `argmax_rho H` over `(0.1, 20)`: a log-spaced scan locates every local
/// maximum, and golden-section search refines each one.
pub fn entropy_argmax(n: usize) -> Result<EntropyArgmax> {
    let grid: Vec<f64> = (0..ARGMAX_SCAN)
        .map(|i| ARGMAX_LO * (ARGMAX_HI / ARGMAX_LO).powf(i as f64 / (ARGMAX_SCAN - 1) as f64))
        .collect();
    let h: Vec<f64> = grid.iter().map(|&r| entropy(r, n)).collect::<Result<_>>()?;
    let mut candidates = Vec::new();
    for i in 0..grid.len() {
        let left = i == 0 || h[i] > h[i - 1];
        let right = i + 1 == grid.len() || h[i] >= h[i + 1];
        if left && right {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid.len() - 1)];
            candidates.push(golden_section(
                |r| entropy(r, n).unwrap_or(f64::NEG_INFINITY),
                lo,
                hi,
            ));
        }
    }
    let (argmax, max_entropy) = candidates
        .iter()
        .map(|&r| (r, entropy(r, n).unwrap_or(f64::NEG_INFINITY)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("the scan always has a largest point");
    Ok(EntropyArgmax {
        n,
        argmax,
        max_entropy,
        candidates,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ARGMAX_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Check of `rho(k) = (q_k + q_{-k}) / c` against the classical Ehrenfest
/// law `q_k = C(2N, N - k) / 4^N` at equal rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalComparison {
    pub n: usize,
    /// The constant `c(lambda, N)`.
    pub c: f64,
    /// `max_k |rho(k) - (q_k + q_{-k}) / c|`.
    pub max_abs_error: f64,
    /// `|rho(0) - 2 q_0 / c|`.
    pub rho0_error: f64,
}

pub fn classical_comparison(n: usize) -> Result<ClassicalComparison> {
    check(1.0, n)?;
    let nn = 2 * n as u64;
    let quarter = -(n as f64) * 4f64.ln();
    let q = |k: usize| -> Result<f64> { Ok((ln_binomial(nn, (n - k) as u64)? + quarter).exp()) };
    let binom = |k: u64| -> Result<f64> { Ok((ln_binomial(nn, k)? + quarter).exp()) };
    let f = hyp2f1_terminating(1 - n as i64, 1.0, n as f64 + 2.0, -1.0)?.to_f64();
    let c = 2.0 * binom(n as u64)? + (binom(n as u64 - 1)? + binom(n as u64 + 1)?) * f;
    let law = stationary_law(1.0, n)?;
    let mut max_abs_error: f64 = 0.0;
    for (k, p) in law.iter().enumerate() {
        // q_{-k} = q_k by the symmetry of the binomial.
        let classical = 2.0 * q(k)? / c;
        max_abs_error = max_abs_error.max((p.to_f64() - classical).abs());
    }
    let rho0_error = (law[0].to_f64() - 2.0 * q(0)? / c).abs();
    Ok(ClassicalComparison {
        n,
        c,
        max_abs_error,
        rho0_error,
    })
}
