//! Ornstein-Uhlenbeck limit on the spider: scaling map, stationary law,
//! an SDE simulator and a Fokker-Planck solver.

mod fp;
mod sde;

pub use fp::{
    bin_masses, fokker_planck_evolve, fokker_planck_snapshots, l1_to_w, sampled_density, snapshots_csv,
    FpGrid, FpScheme,
};
pub use sde::{
    histogram_csv, sde_campaign, sde_statistics, simulate_spider_ou, SdeConfig, SdeStats, SpiderSample,
    SpiderState,
};

use serde::{Deserialize, Serialize};

use crate::chain::{switch_stationary, SwitchMatrix};
use crate::error::{domain, Result};
use crate::special::ln_erfc;

/// Parameters of the scaled chain and of its diffusion limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Limit of `N epsilon^2`.
    pub nu: f64,
    pub sigma2: f64,
    pub beta: f64,
}

/// Builds the parameter set from `(alpha, gamma, nu, epsilon)`, with
/// `sigma^2 = alpha nu` and `beta = gamma nu / alpha`.
pub fn scale_params(alpha: f64, gamma: f64, nu: f64, epsilon: f64) -> Result<DiffusionParams> {
    for (name, v) in [("alpha", alpha), ("nu", nu), ("epsilon", epsilon)] {
        if !(v > 0.0 && v.is_finite()) {
            return domain(format!("{name} must be positive and finite, got {v}"));
        }
    }
    if !gamma.is_finite() || gamma.abs() * epsilon >= alpha {
        return domain(format!(
            "|gamma| epsilon must be below alpha for positive rates, got gamma={gamma}, epsilon={epsilon}, alpha={alpha}"
        ));
    }
    Ok(DiffusionParams {
        alpha,
        gamma,
        epsilon,
        nu,
        sigma2: alpha * nu,
        beta: gamma * nu / alpha,
    })
}

impl DiffusionParams {
    /// Inverse map from the chain: `alpha = lambda + mu`,
    /// `gamma = (lambda - mu) / epsilon`, `nu = N epsilon^2`.
    pub fn from_chain(lambda: f64, mu: f64, n: usize, epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0) {
            return domain("lambda and mu must be positive");
        }
        if n == 0 {
            return domain("N must be at least 1");
        }
        scale_params(
            lambda + mu,
            (lambda - mu) / epsilon,
            n as f64 * epsilon * epsilon,
            epsilon,
        )
    }

    /// Parameters with a prescribed limit law `(alpha, sigma^2, beta)` at
    /// length scale `epsilon`.
    pub fn from_limit(alpha: f64, sigma2: f64, beta: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return domain(format!("alpha must be positive, got {alpha}"));
        }
        let nu = sigma2 / alpha;
        scale_params(alpha, beta * alpha / nu, nu, epsilon)
    }

    pub fn lambda(&self) -> f64 {
        self.alpha / 2.0 + self.gamma * self.epsilon / 2.0
    }

    pub fn mu(&self) -> f64 {
        self.alpha / 2.0 - self.gamma * self.epsilon / 2.0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `sqrt(alpha) beta / sigma`.
    fn u(&self) -> f64 {
        self.alpha.sqrt() * self.beta / self.sigma()
    }

    /// Standardized distance `sqrt(alpha) (x - beta) / sigma`.
    fn z(&self, x: f64) -> f64 {
        self.alpha.sqrt() * (x - self.beta) / self.sigma()
    }

    /// `ln norm_Q`, with `1 + erf(u)` taken as `erfc(-u)`.
    pub fn ln_norm_q(&self) -> f64 {
        let u = self.u();
        (self.sigma() * std::f64::consts::PI.sqrt() / (2.0 * self.alpha.sqrt())).ln() + ln_erfc(-u) + u * u
    }

    /// Standard deviation scale `sigma / sqrt(2 alpha)` of the Gaussian part.
    pub fn spread(&self) -> f64 {
        self.sigma() / (2.0 * self.alpha).sqrt()
    }
}

/// Stationary density of the distance from the vertex,
/// `w(x) = exp{-(2 alpha x / sigma^2)(x/2 - beta)} / norm_Q`.
pub fn stationary_density_w(x: f64, p: &DiffusionParams) -> Result<f64> {
    if !(x >= 0.0) {
        return domain(format!("x must be non-negative, got {x}"));
    }
    let exponent = -(2.0 * p.alpha * x / p.sigma2) * (x / 2.0 - p.beta);
    Ok((exponent - p.ln_norm_q()).exp())
}

/// `int_a^b w(x) dx` for `0 <= a <= b <= inf`.
pub fn w_mass(a: f64, b: f64, p: &DiffusionParams) -> f64 {
    let den = ln_erfc(-p.u());
    let upper = |x: f64| {
        if x.is_infinite() {
            0.0
        } else {
            (ln_erfc(p.z(x)) - den).exp()
        }
    };
    let lower = (ln_erfc(p.z(a)) - den).exp();
    lower - upper(b)
}

/// Mass of `w` beyond `x_max`.
pub fn tail_mass(x_max: f64, p: &DiffusionParams) -> f64 {
    (ln_erfc(p.z(x_max)) - ln_erfc(-p.u())).exp()
}

/// Joint stationary density `w(x) pi_j` on ray `j` (1-based).
pub fn ray_density(x: f64, j: usize, p: &DiffusionParams, c: &SwitchMatrix) -> Result<f64> {
    if !(1..=c.dim()).contains(&j) {
        return domain(format!("ray must lie in 1..={}, got {j}", c.dim()));
    }
    Ok(stationary_density_w(x, p)? * switch_stationary(c)?[j - 1])
}

/// Long-run fraction of time on each ray: the stationary law of the ray
/// sequence, since every excursion has the same law whatever its ray.
pub fn switch_occupancy_target(c: &SwitchMatrix) -> Result<Vec<f64>> {
    switch_stationary(c)
}

/// Mean and variance of the stationary distance from the vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn moments_x(p: &DiffusionParams) -> XMoments {
    let sigma = p.sigma();
    let pi = std::f64::consts::PI;
    if p.beta == 0.0 {
        return XMoments {
            mean: sigma / (pi * p.alpha).sqrt(),
            variance: p.sigma2 / (2.0 * p.alpha) * (1.0 - 2.0 / pi),
        };
    }
    let u = p.u();
    // R = exp(-u^2) / (1 + erf(u)).
    let r = (-u * u - ln_erfc(-u)).exp();
    XMoments {
        mean: p.beta + sigma * r / (pi * p.alpha).sqrt(),
        variance: p.sigma2 / (2.0 * p.alpha) * (1.0 - 2.0 / pi * r * r - 2.0 * u / pi.sqrt() * r),
    }
}

/// CSV `x,w` on `points` equally spaced nodes of `[0, x_max]`.
pub fn density_csv(p: &DiffusionParams, x_max: f64, points: usize) -> Result<String> {
    let mut out = String::from("x,w\n");
    for i in 0..points {
        let x = if points == 1 {
            0.0
        } else {
            x_max * i as f64 / (points - 1) as f64
        };
        out.push_str(&format!("{x},{}\n", stationary_density_w(x, p)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{example_switch_matrix, SwitchKind};
    use crate::quad::integrate_to_infinity;

    fn grid() -> Vec<DiffusionParams> {
        let mut out = Vec::new();
        for alpha in [0.5, 2.0] {
            for sigma2 in [1.0, 100.0] {
                for beta in [-2.0, 0.0, 3.0] {
                    out.push(DiffusionParams::from_limit(alpha, sigma2, beta, 0.01).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn scaling_map() {
        let p = scale_params(2.0, 0.0, 50.0, 0.1).unwrap();
        assert_eq!((p.sigma2, p.beta), (100.0, 0.0));
        assert_eq!(p.lambda(), p.mu());
        let q = DiffusionParams::from_chain(1.0, 1.0, 15000, 0.1).unwrap();
        assert!((q.sigma2 - 300.0).abs() < 1e-9);
        let r = DiffusionParams::from_chain(1.3, 0.7, 100, 0.05).unwrap();
        assert!((r.lambda() - 1.3).abs() < 1e-12 && (r.mu() - 0.7).abs() < 1e-12);
        assert!(scale_params(1.0, 10.0, 1.0, 0.1).is_err());
        assert!(scale_params(1.0, -10.0, 1.0, 0.1).is_err());
        assert!(scale_params(0.0, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn density_normalizes_and_matches_quadrature_moments() {
        for p in grid() {
            let w = |x: f64| stationary_density_w(x, &p).unwrap();
            let m0 = integrate_to_infinity(w, 0.0, 1e-14, 1e-13).unwrap().value;
            assert!((m0 - 1.0).abs() < 1e-10, "{p:?}: {m0}");
            let m1 = integrate_to_infinity(|x| x * w(x), 0.0, 1e-14, 1e-13)
                .unwrap()
                .value;
            let m2 = integrate_to_infinity(|x| x * x * w(x), 0.0, 1e-14, 1e-13)
                .unwrap()
                .value;
            let m = moments_x(&p);
            assert!((m.mean - m1).abs() < 1e-9 * m1.max(1.0), "{p:?}");
            assert!(
                (m.variance - (m2 - m1 * m1)).abs() < 1e-9 * m.variance.max(1.0),
                "{p:?}"
            );
            assert!((w_mass(0.0, f64::INFINITY, &p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_case_values() {
        let p = scale_params(2.0, 0.0, 50.0, 0.1).unwrap();
        let w0 = stationary_density_w(0.0, &p).unwrap();
        assert!((w0 - 2.0 * 2f64.sqrt() / (10.0 * std::f64::consts::PI.sqrt())).abs() < 1e-15);
        assert!((w0 * 0.1 - 0.0159577).abs() < 5e-8);
        let m = moments_x(&p);
        assert!((m.mean - 10.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        // The general branch agrees with the symmetric one as beta -> 0.
        let near = DiffusionParams::from_limit(2.0, 100.0, 1e-12, 0.1).unwrap();
        assert!((moments_x(&near).mean - m.mean).abs() < 1e-9);
    }

    #[test]
    fn moments_increase_with_beta() {
        let ms: Vec<XMoments> = (-10..=10)
            .map(|b| moments_x(&DiffusionParams::from_limit(2.0, 1.0, b as f64, 0.01).unwrap()))
            .collect();
        // For beta >= 5 the variance equals sigma^2 / (2 alpha) to double
        // precision, so strict growth is only observable below that.
        assert!(ms
            .windows(2)
            .all(|w| w[1].mean > w[0].mean && w[1].variance >= w[0].variance));
        assert!(ms[..14].windows(2).all(|w| w[1].variance > w[0].variance));
        let far = moments_x(&DiffusionParams::from_limit(2.0, 1.0, 20.0, 0.01).unwrap());
        assert!((far.variance - 0.25).abs() < 1e-9);
        let low = moments_x(&DiffusionParams::from_limit(2.0, 1.0, -10.0, 0.01).unwrap());
        assert!(low.mean < 0.06 && low.variance < 0.003);
    }

    #[test]
    fn mode_location() {
        for p in grid() {
            let mode = p.beta.max(0.0);
            let h = 1e-3;
            let at = stationary_density_w(mode, &p).unwrap();
            assert!(at >= stationary_density_w(mode + h, &p).unwrap());
            if mode > 0.0 {
                assert!(at >= stationary_density_w(mode - h, &p).unwrap());
            }
        }
    }

    #[test]
    fn ray_densities() {
        let p = DiffusionParams::from_limit(2.0, 1.0, 0.5, 0.01).unwrap();
        let w = stationary_density_w(0.7, &p).unwrap();
        let u = example_switch_matrix(SwitchKind::Uniform, 4, 0.5).unwrap();
        for j in 1..=4 {
            assert!((ray_density(0.7, j, &p, &u).unwrap() - w / 4.0).abs() < 1e-15);
        }
        let s = example_switch_matrix(SwitchKind::Sequential, 4, 0.5).unwrap();
        assert!((ray_density(0.7, 4, &p, &s).unwrap() - w).abs() < 1e-12);
        assert!(ray_density(0.7, 1, &p, &s).unwrap().abs() < 1e-12);
        for kind in SwitchKind::ALL {
            let c = example_switch_matrix(kind, 4, 0.3).unwrap();
            let w0: Vec<f64> = (1..=4).map(|j| ray_density(0.0, j, &p, &c).unwrap()).collect();
            for j in 1..=4 {
                let inflow: f64 = (1..=4)
                    .filter(|&l| l != j)
                    .map(|l| c.entry(l, j) * w0[l - 1])
                    .sum();
                let outflow: f64 = (1..=4)
                    .filter(|&l| l != j)
                    .map(|l| c.entry(j, l) * w0[j - 1])
                    .sum();
                assert!((inflow - outflow).abs() < 1e-12, "{kind:?} j={j}");
            }
        }
    }

    #[test]
    fn tail_and_bin_masses() {
        let p = DiffusionParams::from_limit(2.0, 1.0, 1.0, 0.01).unwrap();
        let total = w_mass(0.0, 1.0, &p) + w_mass(1.0, 3.0, &p) + tail_mass(3.0, &p);
        assert!((total - 1.0).abs() < 1e-14);
        assert!(tail_mass(1.0 + 10.0 * p.spread(), &p) < 1e-10);
    }
}
