//! Euler-Maruyama simulation of the OU process on the spider.
//!
//! A step that ends at or below the vertex reflects to `|x'|` and draws the
//! next ray once from the row of the switching matrix of the current ray.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{tail_mass, w_mass, DiffusionParams};
use crate::chain::SwitchMatrix;
use crate::error::{domain, Error, Result};
use crate::montecarlo::{draw_from_row, run_rng};

/// Largest admissible `alpha dt`.
const STABILITY: f64 = 0.5;

/// Position on the spider. At the vertex `ray` is the last ray visited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiderState {
    pub x: f64,
    pub ray: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpiderSample {
    pub t: f64,
    pub state: SpiderState,
}

fn check(p: &DiffusionParams, c: &SwitchMatrix, dt: f64, horizon: f64, init: SpiderState) -> Result<()> {
    if !(dt > 0.0) || !(horizon > dt) {
        return domain(format!("need 0 < dt < horizon, got dt={dt}, horizon={horizon}"));
    }
    if p.alpha * dt >= STABILITY {
        return Err(Error::Stability {
            dt,
            limit: STABILITY / p.alpha,
        });
    }
    if !(init.x >= 0.0) || !(1..=c.dim()).contains(&init.ray) {
        return domain(format!("invalid initial state {init:?}"));
    }
    Ok(())
}

struct Stepper<'a> {
    drift: f64,
    beta: f64,
    noise: f64,
    c: &'a SwitchMatrix,
}

impl<'a> Stepper<'a> {
    fn new(p: &DiffusionParams, c: &'a SwitchMatrix, dt: f64) -> Self {
        Stepper {
            drift: p.alpha * dt,
            beta: p.beta,
            noise: p.sigma() * dt.sqrt(),
            c,
        }
    }

    /// Advances one step; returns the ray left at a vertex contact.
    fn advance<R: Rng>(&self, s: &mut SpiderState, rng: &mut R) -> Option<usize> {
        let xi: f64 = rng.sample(StandardNormal);
        let next = s.x - self.drift * (s.x - self.beta) + self.noise * xi;
        if next > 0.0 {
            s.x = next;
            return None;
        }
        let from = s.ray;
        s.x = -next;
        s.ray = draw_from_row(self.c.row(from), rng.random());
        Some(from)
    }
}

/// Full path on the time grid `0, dt, 2 dt, ...` up to `horizon`.
pub fn simulate_spider_ou(
    p: &DiffusionParams,
    c: &SwitchMatrix,
    horizon: f64,
    dt: f64,
    init: SpiderState,
    seed: u64,
) -> Result<Vec<SpiderSample>> {
    check(p, c, dt, horizon, init)?;
    let mut rng = run_rng(seed, 0);
    let stepper = Stepper::new(p, c, dt);
    let steps = (horizon / dt).floor() as usize;
    let mut state = init;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(SpiderSample { t: 0.0, state });
    for i in 1..=steps {
        stepper.advance(&mut state, &mut rng);
        out.push(SpiderSample {
            t: i as f64 * dt,
            state,
        });
    }
    Ok(out)
}

/// Settings for a streaming SDE run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdeConfig {
    pub horizon: f64,
    pub dt: f64,
    /// Time discarded before statistics are collected.
    pub burn_in: f64,
    pub n_bins: usize,
    pub x_max: f64,
    pub init: SpiderState,
}

/// Long-run statistics of one or more SDE runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdeStats {
    pub steps: u64,
    pub n_bins: usize,
    pub x_max: f64,
    /// `hist[j-1][b]`: steps spent in bin `b` of ray `j`.
    pub hist: Vec<Vec<u64>>,
    /// Steps beyond `x_max`, all rays.
    pub overflow: u64,
    /// Steps spent on each ray.
    pub ray_steps: Vec<u64>,
    /// `switch_counts[l-1][j-1]`: contacts leaving ray `l` for ray `j`.
    pub switch_counts: Vec<Vec<u64>>,
    pub mean: f64,
    m2: f64,
}

impl SdeStats {
    fn new(d: usize, n_bins: usize, x_max: f64) -> Self {
        SdeStats {
            steps: 0,
            n_bins,
            x_max,
            hist: vec![vec![0; n_bins]; d],
            overflow: 0,
            ray_steps: vec![0; d],
            switch_counts: vec![vec![0; d]; d],
            mean: 0.0,
            m2: 0.0,
        }
    }

    fn record(&mut self, s: SpiderState) {
        self.steps += 1;
        let delta = s.x - self.mean;
        self.mean += delta / self.steps as f64;
        self.m2 += delta * (s.x - self.mean);
        self.ray_steps[s.ray - 1] += 1;
        let b = (s.x / self.x_max * self.n_bins as f64) as usize;
        if b < self.n_bins {
            self.hist[s.ray - 1][b] += 1;
        } else {
            self.overflow += 1;
        }
    }

    /// Pools two summaries; the result does not depend on grouping beyond
    /// floating-point rounding of the moments.
    pub fn merge(mut self, o: SdeStats) -> SdeStats {
        let n = self.steps + o.steps;
        if n > 0 {
            let delta = o.mean - self.mean;
            let (na, nb) = (self.steps as f64, o.steps as f64);
            self.mean += delta * nb / n as f64;
            self.m2 += o.m2 + delta * delta * na * nb / n as f64;
        }
        self.steps = n;
        self.overflow += o.overflow;
        for (a, b) in self.hist.iter_mut().zip(o.hist) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.ray_steps
            .iter_mut()
            .zip(o.ray_steps)
            .for_each(|(x, y)| *x += y);
        for (a, b) in self.switch_counts.iter_mut().zip(o.switch_counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self
    }

    pub fn variance(&self) -> f64 {
        self.m2 / self.steps as f64
    }

    /// Fraction of time on each ray.
    pub fn occupancy(&self) -> Vec<f64> {
        self.ray_steps
            .iter()
            .map(|&c| c as f64 / self.steps as f64)
            .collect()
    }

    pub fn bin_width(&self) -> f64 {
        self.x_max / self.n_bins as f64
    }

    /// Steps per bin summed over rays.
    pub fn level_histogram(&self) -> Vec<u64> {
        (0..self.n_bins)
            .map(|b| self.hist.iter().map(|h| h[b]).sum())
            .collect()
    }

    /// L1 distance between the histogram density and `w`, computed from the
    /// exact mass of `w` in every bin and beyond `x_max`.
    pub fn l1_to_w(&self, p: &DiffusionParams) -> f64 {
        let n = self.steps as f64;
        let h = self.bin_width();
        let bins: f64 = self
            .level_histogram()
            .iter()
            .enumerate()
            .map(|(b, &c)| (c as f64 / n - w_mass(b as f64 * h, (b + 1) as f64 * h, p)).abs())
            .sum();
        bins + (self.overflow as f64 / n - tail_mass(self.x_max, p)).abs()
    }

    /// Row-normalized switch counts; rows with no contacts are zero.
    pub fn switch_matrix(&self) -> Vec<Vec<f64>> {
        self.switch_counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }
}

/// One streaming run on stream `chain` of `seed`.
pub fn sde_statistics(
    p: &DiffusionParams,
    c: &SwitchMatrix,
    cfg: &SdeConfig,
    seed: u64,
    chain: u64,
) -> Result<SdeStats> {
    check(p, c, cfg.dt, cfg.horizon, cfg.init)?;
    if cfg.n_bins == 0 || !(cfg.x_max > 0.0) || !(cfg.burn_in >= 0.0) {
        return domain("histogram needs n_bins >= 1, x_max > 0 and burn_in >= 0");
    }
    let mut rng = run_rng(seed, chain);
    let stepper = Stepper::new(p, c, cfg.dt);
    let burn = (cfg.burn_in / cfg.dt).round() as u64;
    let total = (cfg.horizon / cfg.dt).floor() as u64;
    let mut stats = SdeStats::new(c.dim(), cfg.n_bins, cfg.x_max);
    let mut state = cfg.init;
    for i in 0..total {
        let left = stepper.advance(&mut state, &mut rng);
        if i >= burn {
            if let Some(l) = left {
                stats.switch_counts[l - 1][state.ray - 1] += 1;
            }
            stats.record(state);
        }
    }
    Ok(stats)
}

/// Independent runs on streams `0..chains` of `seed`, in parallel.
pub fn sde_campaign(
    p: &DiffusionParams,
    c: &SwitchMatrix,
    cfg: &SdeConfig,
    seed: u64,
    chains: u64,
) -> Result<Vec<SdeStats>> {
    (0..chains)
        .into_par_iter()
        .map(|k| sde_statistics(p, c, cfg, seed, k))
        .collect()
}

/// CSV `x_bin,count,ray` with the left edge of each bin.
pub fn histogram_csv(stats: &SdeStats) -> String {
    let mut out = String::from("x_bin,count,ray\n");
    let h = stats.bin_width();
    for (j, row) in stats.hist.iter().enumerate() {
        for (b, &count) in row.iter().enumerate() {
            out.push_str(&format!("{},{count},{}\n", b as f64 * h, j + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{example_switch_matrix, SwitchKind};

    fn params(beta: f64) -> DiffusionParams {
        DiffusionParams::from_limit(2.0, 1.0, beta, 0.01).unwrap()
    }

    #[test]
    fn stability_guard() {
        let c = example_switch_matrix(SwitchKind::Uniform, 2, 0.5).unwrap();
        let init = SpiderState { x: 0.0, ray: 1 };
        let err = simulate_spider_ou(&params(0.0), &c, 10.0, 0.25, init, 1).unwrap_err();
        assert!(matches!(err, Error::Stability { .. }));
        assert!(simulate_spider_ou(&params(0.0), &c, 10.0, 0.2, init, 1).is_ok());
    }

    #[test]
    fn paths_reproducible_and_non_negative() {
        let c = example_switch_matrix(SwitchKind::Cyclic, 3, 0.5).unwrap();
        let init = SpiderState { x: 1.0, ray: 2 };
        let a = simulate_spider_ou(&params(0.5), &c, 5.0, 1e-3, init, 4).unwrap();
        let b = simulate_spider_ou(&params(0.5), &c, 5.0, 1e-3, init, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5001);
        assert!(a.iter().all(|s| s.state.x >= 0.0));
        // Under cyclic switching every ray change is to the next ray.
        for w in a.windows(2) {
            let (r0, r1) = (w[0].state.ray, w[1].state.ray);
            assert!(r0 == r1 || r1 == r0 % 3 + 1);
        }
    }

    #[test]
    fn one_ray_histogram_and_moments() {
        let p = params(0.0);
        let c = example_switch_matrix(SwitchKind::Uniform, 1, 0.5).unwrap();
        let cfg = SdeConfig {
            horizon: 2000.0,
            dt: 1e-3,
            burn_in: 5.0,
            n_bins: 20,
            x_max: 2.0,
            init: SpiderState { x: 0.0, ray: 1 },
        };
        let stats = sde_campaign(&p, &c, &cfg, 3, 8)
            .unwrap()
            .into_iter()
            .reduce(SdeStats::merge)
            .unwrap();
        assert!(stats.l1_to_w(&p) < 0.03, "L1 = {}", stats.l1_to_w(&p));
        let m = super::super::moments_x(&p);
        assert!((stats.mean - m.mean).abs() < 0.01, "{} vs {}", stats.mean, m.mean);
    }

    #[test]
    fn switching_counts_match_matrix() {
        let p = params(0.0);
        let c = example_switch_matrix(SwitchKind::RandomWalk, 3, 0.3).unwrap();
        let cfg = SdeConfig {
            horizon: 200.0,
            dt: 1e-3,
            burn_in: 1.0,
            n_bins: 10,
            x_max: 3.0,
            init: SpiderState { x: 0.5, ray: 1 },
        };
        let stats = sde_statistics(&p, &c, &cfg, 9, 0).unwrap();
        let emp = stats.switch_matrix();
        for l in 0..3 {
            let n: u64 = stats.switch_counts[l].iter().sum();
            assert!(n > 300);
            for j in 0..3 {
                let cj = c.entry(l + 1, j + 1);
                let sd = (cj * (1.0 - cj) / n as f64).sqrt();
                assert!((emp[l][j] - cj).abs() <= 3.0 * sd + 1e-12, "l={l} j={j}");
            }
        }
        let csv = histogram_csv(&stats);
        assert_eq!(csv.lines().count(), 31);
    }
}
