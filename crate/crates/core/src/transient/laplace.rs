//! Laplace transform of `p(0, t)` and the generating function `F(z, t)`.

use crate::chain::{ChainState, ModelParams};
use crate::error::{domain, Result};
use crate::quad::integrate;
use crate::special::{hyp2f1_terminating, ln_gamma};

use super::oracle::transient_oracle_grid;
use super::spectral::SpectralDecomposition;

/// Relative tolerance under which two rates count as equal.
const EQUAL_RATES: f64 = 1e-14;

fn equal_rates(params: &ModelParams) -> bool {
    (params.lambda - params.mu).abs() <= EQUAL_RATES * params.mu
}

/// `eta H(eta)`, finite at `eta = 0` where it equals `rho(0)`.
pub fn eta_times_laplace_h(eta: f64, params: &ModelParams) -> Result<f64> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return domain(format!("eta must be finite and non-negative, got {eta}"));
    }
    let n = params.n as f64;
    if equal_rates(params) {
        // Gamma-ratio form with x = eta / (4 mu).
        let x = eta / (4.0 * params.mu);
        let ln_a = ln_gamma(1.0 + x)? + ln_gamma(n + 0.5 + x)?;
        let ln_b = ln_gamma(n + 1.0 + x)? + ln_gamma(0.5 + x)?;
        return Ok(2.0 / (1.0 + (ln_b - ln_a).exp()));
    }
    let (l, m) = (params.lambda, params.mu);
    let s = eta / (l + m);
    let z = -l / m;
    let ni = params.n as i64;
    let num = hyp2f1_terminating(-ni, s, 1.0 + n + s, z)?;
    let f1 = hyp2f1_terminating(1 - ni, 1.0 + s, 1.0 + n + s, z)?;
    let f2 = hyp2f1_terminating(1 - ni, 2.0 + s, 2.0 + n + s, z)?;
    let den = f1 * m + f2 * (l * (eta + l + m) / ((l + m) * (n + 1.0) + eta));
    Ok((num * m / den).to_f64())
}

/// `H(eta) = int_0^inf exp(-eta t) p(0, t) dt` for the chain started empty.
/// Infinite at `eta = 0`.
pub fn laplace_h(eta: f64, params: &ModelParams) -> Result<f64> {
    let scaled = eta_times_laplace_h(eta, params)?;
    Ok(if eta == 0.0 { f64::INFINITY } else { scaled / eta })
}

/// Number of nodes of the interpolation grid for `p(0, .)` when `lambda != mu`.
const P0_GRID_NODES: usize = 400;

/// `p(0, .)` on `[0, t]`: exact when `lambda = mu`, otherwise cubic
/// interpolation of the transient oracle on a grid refined towards 0.
enum P0Source {
    Closed(SpectralDecomposition),
    Grid { nodes: Vec<f64>, values: Vec<f64> },
}

impl P0Source {
    fn new(params: &ModelParams, t: f64) -> Result<Self> {
        if equal_rates(params) {
            return Ok(P0Source::Closed(SpectralDecomposition::new(params.n, params.mu)?));
        }
        let m = P0_GRID_NODES;
        let ratio: f64 = 1.01;
        let scale = t / (ratio.powi(m as i32 - 1) - 1.0);
        let nodes: Vec<f64> = (0..m)
            .map(|i| {
                if i == m - 1 {
                    t
                } else {
                    scale * (ratio.powi(i as i32) - 1.0)
                }
            })
            .collect();
        let init = ChainState::Origin { last_ray: 1 };
        let values = transient_oracle_grid(params, &nodes, init)?
            .into_iter()
            .map(|s| s.level_probs[0])
            .collect();
        Ok(P0Source::Grid { nodes, values })
    }

    fn eval(&self, y: f64) -> f64 {
        match self {
            P0Source::Closed(s) => s.p0(y.max(0.0)).unwrap_or(f64::NAN),
            P0Source::Grid { nodes, values } => {
                let m = nodes.len();
                let i = nodes.partition_point(|&x| x <= y).clamp(2, m - 2) - 2;
                let (xs, ys) = (&nodes[i..i + 4], &values[i..i + 4]);
                let mut acc = 0.0;
                for a in 0..4 {
                    let mut w = 1.0;
                    for b in 0..4 {
                        if a != b {
                            w *= (y - xs[b]) / (xs[a] - xs[b]);
                        }
                    }
                    acc += w * ys[a];
                }
                acc
            }
        }
    }
}

/// Generating function `F(z, t) = E[z^N(t)]` for the chain started empty,
/// from the closed-form part plus an integral of `p(0, .)`.
///
/// The expression carries a factor `z^{-N}`; at `z = 0` the boundary value
/// `p(0, t)` is returned, and small positive `z` loses accuracy accordingly.
pub fn pgf_f(z: f64, t: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return domain(format!("z must lie in [0, 1], got {z}"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and non-negative, got {t}"));
    }
    if t == 0.0 || z == 1.0 {
        return Ok(1.0);
    }
    let source = P0Source::new(params, t)?;
    if z == 0.0 {
        return Ok(source.eval(t));
    }
    let (l, m) = (params.lambda, params.mu);
    let a = l + m;
    let n = params.n as i32;
    let base = z * l + m;
    let e = (-a * t).exp();
    let first = ((base - m * (1.0 - z) * e) * (base + l * (1.0 - z) * e) / (a * a * z)).powi(n);
    let integrand = |y: f64| {
        let u = (-(t - y) * a).exp();
        let p1 = base + l * (1.0 - z) * u;
        let p2 = base - m * (1.0 - z) * u;
        source.eval(y) * u * (p1 * p2 / (a * a * z)).powi(n - 1) * p1 / (z * a)
    };
    let integral = integrate(integrand, 0.0, t, 1e-13, 1e-12)?.value;
    Ok(first - m * params.n as f64 * (1.0 - z) * integral)
}
