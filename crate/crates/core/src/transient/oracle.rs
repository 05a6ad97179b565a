//! Numerically exact transient law from the full generator.

use serde::Serialize;

use crate::chain::{build_generator, level_marginal, ChainState, Generator, ModelParams};
use crate::error::{domain, Result};

/// Poisson mass left out of each uniformization step.
const POISSON_TAIL: f64 = 1e-14;
/// Largest Poisson mean handled in a single uniformization step.
const MAX_STEP_MEAN: f64 = 50.0;
/// Slack on the uniformization rate so the kernel keeps a positive diagonal.
const RATE_SLACK: f64 = 1.02;

/// Law of the chain at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientSolution {
    pub time: f64,
    /// `p(k, t)` for `k = 0..=N`.
    pub level_probs: Vec<f64>,
    /// Law over all states in the enumeration order of [`ChainState::index`].
    pub state_probs: Vec<f64>,
    #[serde(skip)]
    d: usize,
}

impl TransientSolution {
    fn new(time: f64, state_probs: Vec<f64>, d: usize) -> Self {
        Self {
            time,
            level_probs: level_marginal(&state_probs, d),
            state_probs,
            d,
        }
    }

    /// `p(k, j, t)`; `k = 0` gives `p(0, j, t)`, the empty system last on ray `j`.
    pub fn ray_resolved(&self, k: usize, j: usize) -> f64 {
        self.state_probs[k * self.d + j - 1]
    }

    pub fn total(&self) -> f64 {
        self.level_probs.iter().sum()
    }
}

fn unit_mass(params: &ModelParams, init: ChainState) -> Result<Vec<f64>> {
    if !init.is_valid(params.n, params.d()) {
        return domain(format!("initial state {init:?} is not a state of the chain"));
    }
    let mut p = vec![0.0; params.dimension()];
    p[init.index(params.d())] = 1.0;
    Ok(p)
}

/// Uniformized kernel step `y = x (I + Q / rate)`.
fn kernel_step(g: &Generator, rate: f64, x: &[f64], y: &mut [f64]) {
    g.left_multiply(x, y);
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = xi + *yi / rate;
    }
}

/// Advances `p` by `dt` with uniformization, splitting the interval so that
/// each Poisson mean stays at most [`MAX_STEP_MEAN`].
fn uniformize(g: &Generator, p: &mut [f64], dt: f64) {
    if dt <= 0.0 {
        return;
    }
    let rate = (g.max_exit_rate() * RATE_SLACK).max(1e-300);
    let steps = (rate * dt / MAX_STEP_MEAN).ceil().max(1.0) as usize;
    let mean = rate * dt / steps as f64;
    let mut v = vec![0.0; p.len()];
    let mut next = vec![0.0; p.len()];
    let mut acc = vec![0.0; p.len()];
    let k_max = (mean + 10.0 * mean.sqrt() + 40.0) as usize;
    for _ in 0..steps {
        v.copy_from_slice(p);
        let mut weight = (-mean).exp();
        let mut cumulative = weight;
        for (a, &x) in acc.iter_mut().zip(&v) {
            *a = weight * x;
        }
        let mut k = 0usize;
        while k < k_max && !(k as f64 > mean && 1.0 - cumulative < POISSON_TAIL) {
            kernel_step(g, rate, &v, &mut next);
            std::mem::swap(&mut v, &mut next);
            k += 1;
            weight *= mean / k as f64;
            cumulative += weight;
            for (a, &x) in acc.iter_mut().zip(&v) {
                *a += weight * x;
            }
        }
        p.copy_from_slice(&acc);
    }
}

/// Law at time `t` started from unit mass at `init`, by uniformization.
pub fn transient_oracle(params: &ModelParams, t: f64, init: ChainState) -> Result<TransientSolution> {
    Ok(transient_oracle_grid(params, &[t], init)?.remove(0))
}

/// Laws at each time of a non-decreasing grid, advancing one solution
/// through the grid.
pub fn transient_oracle_grid(
    params: &ModelParams,
    times: &[f64],
    init: ChainState,
) -> Result<Vec<TransientSolution>> {
    check_times(times)?;
    let g = build_generator(params);
    let mut p = unit_mass(params, init)?;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        uniformize(&g, &mut p, t - now);
        now = t;
        out.push(TransientSolution::new(t, p.clone(), params.d()));
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return domain("times must be finite and non-negative");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return domain("times must be non-decreasing");
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau; the forward equation is autonomous, so the
// stage times are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Law at time `t` by adaptive Dormand-Prince integration of the forward
/// equation; an independent route to cross-check [`transient_oracle`].
pub fn transient_rk45(params: &ModelParams, t: f64, init: ChainState, tol: f64) -> Result<TransientSolution> {
    check_times(&[t])?;
    let g = build_generator(params);
    let mut p = unit_mass(params, init)?;
    let m = p.len();
    let mut now = 0.0;
    let mut h = (0.1 / g.max_exit_rate().max(1e-12)).min(t.max(1e-300));
    let mut k = vec![vec![0.0; m]; 7];
    let mut stage = vec![0.0; m];
    let mut p5 = vec![0.0; m];
    while now < t {
        h = h.min(t - now);
        g.left_multiply(&p, &mut k[0]);
        for s in 1..7 {
            let (done, rest) = k.split_at_mut(s);
            for i in 0..m {
                stage[i] = p[i] + h * done.iter().zip(&A[s]).map(|(kr, a)| a * kr[i]).sum::<f64>();
            }
            g.left_multiply(&stage, &mut rest[0]);
        }
        let mut err: f64 = 0.0;
        for i in 0..m {
            p5[i] = p[i] + h * (0..7).map(|s| B5[s] * k[s][i]).sum::<f64>();
            let p4 = p[i] + h * (0..7).map(|s| B4[s] * k[s][i]).sum::<f64>();
            let scale = tol + tol * p[i].abs().max(p5[i].abs());
            err = err.max(((p5[i] - p4) / scale).abs());
        }
        if err <= 1.0 {
            now += h;
            p.copy_from_slice(&p5);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(TransientSolution::new(t, p, params.d()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{example_switch_matrix, SwitchKind};

    fn params(lambda: f64, mu: f64, n: usize, d: usize, kind: SwitchKind) -> ModelParams {
        ModelParams::new(lambda, mu, n, example_switch_matrix(kind, d, 0.3).unwrap()).unwrap()
    }

    #[test]
    fn starts_at_unit_mass() {
        let p = params(1.0, 1.0, 3, 2, SwitchKind::Uniform);
        let init = ChainState::Origin { last_ray: 2 };
        let s = transient_oracle(&p, 0.0, init).unwrap();
        assert_eq!(s.level_probs, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.ray_resolved(0, 2), 1.0);
    }

    #[test]
    fn one_ray_n1_matches_two_state_formula() {
        // Two states: 0 -> 1 at rate lambda, 1 -> 0 at rate 2 mu.
        let (l, m) = (1.3, 0.4);
        let p = ModelParams::one_ray(l, m, 1).unwrap();
        for t in [0.1, 1.0, 7.0, 100.0] {
            let s = transient_oracle(&p, t, ChainState::Origin { last_ray: 1 }).unwrap();
            let r = l + 2.0 * m;
            let want = 2.0 * m / r + l / r * (-r * t).exp();
            assert!((s.level_probs[0] - want).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn conserves_mass_and_agrees_with_rk45() {
        for (kind, d) in [
            (SwitchKind::Cyclic, 3),
            (SwitchKind::RandomWalk, 4),
            (SwitchKind::Sequential, 2),
        ] {
            let p = params(2.0, 1.0, 4, d, kind);
            let init = ChainState::Interior { level: 2, ray: 1 };
            for t in [0.05, 0.7, 3.0] {
                let u = transient_oracle(&p, t, init).unwrap();
                let r = transient_rk45(&p, t, init, 1e-12).unwrap();
                assert!((u.total() - 1.0).abs() < 1e-10);
                for (a, b) in u.state_probs.iter().zip(&r.state_probs) {
                    assert!((a - b).abs() < 1e-9, "{kind:?} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn grid_matches_pointwise_calls() {
        let p = params(1.0, 2.0, 3, 2, SwitchKind::Uniform);
        let init = ChainState::Origin { last_ray: 1 };
        let times = [0.0, 0.3, 0.3, 2.0, 40.0];
        let grid = transient_oracle_grid(&p, &times, init).unwrap();
        for (s, &t) in grid.iter().zip(&times) {
            let one = transient_oracle(&p, t, init).unwrap();
            for (a, b) in s.state_probs.iter().zip(&one.state_probs) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(transient_oracle_grid(&p, &[1.0, 0.5], init).is_err());
        assert!(transient_oracle(&p, -1.0, init).is_err());
    }
}
