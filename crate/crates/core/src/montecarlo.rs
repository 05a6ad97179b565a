//! Seeded Gillespie simulation of the chain and Monte Carlo estimates of
//! `p(k, t)`.
//!
//! Run `i` of a campaign with seed `s` draws from `ChaCha8Rng::seed_from_u64(s)`
//! switched to stream `i`, so every run is reproducible on its own and
//! independent of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainState, ModelParams};
use crate::error::{domain, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Description of the interval method, echoed in output metadata.
pub const CI_METHOD: &str =
    "normal approximation p +/- 1.96 sqrt(p(1-p)/n); when p is 0 or 1 the variance uses (x+0.5)/(n+1)";

/// RNG for run `run` of a campaign seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Jump epochs of one simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub jump_times: Vec<f64>,
    pub states: Vec<ChainState>,
    pub seed: u64,
}

impl Trajectory {
    /// State holding at time `t` (paths are right-continuous).
    pub fn state_at(&self, t: f64) -> ChainState {
        let i = self.jump_times.partition_point(|&s| s <= t);
        self.states[i.max(1) - 1]
    }
}

/// Inverse-CDF draw of a 1-based ray from a row of the switching matrix
/// given a uniform `u` in `[0, 1)`.
pub(crate) fn draw_from_row(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &c) in row.iter().enumerate() {
        acc += c;
        if u < acc && c > 0.0 {
            return j + 1;
        }
    }
    // Rounding can leave u above the accumulated total.
    row.iter().rposition(|&c| c > 0.0).unwrap_or(0) + 1
}

/// Total exit rate of `state` and a draw of the next state.
fn step<R: Rng>(params: &ModelParams, state: ChainState, rng: &mut R) -> (f64, ChainState) {
    let n = params.n;
    match state {
        ChainState::Origin { last_ray } => {
            let ray = draw_from_row(params.switch.row(last_ray), rng.random());
            (params.lambda * n as f64, ChainState::Interior { level: 1, ray })
        }
        ChainState::Interior { level, ray } => {
            let down = params.mu * (n + level) as f64;
            let up = params.lambda * (n - level) as f64;
            let total = down + up;
            let next = if rng.random::<f64>() * total < down {
                if level == 1 {
                    ChainState::Origin { last_ray: ray }
                } else {
                    ChainState::Interior {
                        level: level - 1,
                        ray,
                    }
                }
            } else {
                ChainState::Interior {
                    level: level + 1,
                    ray,
                }
            };
            (total, next)
        }
    }
}

fn check_init(params: &ModelParams, init: ChainState) -> Result<()> {
    if !init.is_valid(params.n, params.d()) {
        return domain(format!("initial state {init:?} is not a state of the chain"));
    }
    Ok(())
}

/// Walks a path from `init`, calling `visit` with the state holding at each
/// of the sorted `times`.
fn walk<R: Rng>(
    params: &ModelParams,
    init: ChainState,
    times: &[f64],
    rng: &mut R,
    mut visit: impl FnMut(usize, ChainState),
) {
    let (mut now, mut state) = (0.0, init);
    let mut i = 0;
    while i < times.len() {
        let (rate, next) = step(params, state, rng);
        let hold: f64 = rng.sample::<f64, _>(Exp1) / rate;
        let jump = now + hold;
        while i < times.len() && times[i] < jump {
            visit(i, state);
            i += 1;
        }
        now = jump;
        state = next;
    }
}

/// Exact Gillespie path on `[0, horizon]` using stream 0 of `seed`.
pub fn simulate_path(params: &ModelParams, horizon: f64, init: ChainState, seed: u64) -> Result<Trajectory> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!("horizon must be positive and finite, got {horizon}"));
    }
    check_init(params, init)?;
    let mut rng = run_rng(seed, 0);
    let mut traj = Trajectory {
        jump_times: vec![0.0],
        states: vec![init],
        seed,
    };
    let (mut now, mut state) = (0.0, init);
    loop {
        let (rate, next) = step(params, state, &mut rng);
        now += rng.sample::<f64, _>(Exp1) / rate;
        if now > horizon {
            return Ok(traj);
        }
        traj.jump_times.push(now);
        traj.states.push(next);
        state = next;
    }
}

/// Empirical law at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateTable {
    pub t: f64,
    /// Counts by level `0..=N`.
    pub counts: Vec<u64>,
    /// Counts by `(level, ray)`, `ray_counts[k][j-1]`, when requested. At
    /// level 0 the ray is the last visited one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ray_counts: Option<Vec<Vec<u64>>>,
    pub n_runs: u64,
    pub point: Vec<f64>,
    pub half_width_95: Vec<f64>,
}

impl EstimateTable {
    fn from_counts(t: f64, counts: Vec<u64>, ray_counts: Option<Vec<Vec<u64>>>, n_runs: u64) -> Self {
        let (point, half_width_95) = counts.iter().map(|&x| normal_interval(x, n_runs)).unzip();
        EstimateTable {
            t,
            counts,
            ray_counts,
            n_runs,
            point,
            half_width_95,
        }
    }

    /// 95% interval for level `k`, clipped to `[0, 1]`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        let (p, h) = (self.point[k], self.half_width_95[k]);
        ((p - h).max(0.0), (p + h).min(1.0))
    }

    pub fn covers(&self, k: usize, truth: f64) -> bool {
        let (lo, hi) = self.interval(k);
        lo <= truth && truth <= hi
    }
}

/// Point estimate and 95% half width for `x` successes in `n` trials.
pub fn normal_interval(x: u64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let p = x as f64 / nf;
    let pv = if x == 0 || x == n {
        (x as f64 + 0.5) / (nf + 1.0)
    } else {
        p
    };
    (p, Z95 * (pv * (1.0 - pv) / nf).sqrt())
}

/// Campaign settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Campaign {
    pub times: Vec<f64>,
    pub n_runs: u64,
    pub seed: u64,
    pub init: ChainState,
    pub by_ray: bool,
}

#[derive(Clone)]
struct Tally {
    levels: Vec<Vec<u64>>,
    rays: Option<Vec<Vec<Vec<u64>>>>,
}

impl Tally {
    fn new(times: usize, n: usize, d: usize, by_ray: bool) -> Self {
        Tally {
            levels: vec![vec![0; n + 1]; times],
            rays: by_ray.then(|| vec![vec![vec![0; d]; n + 1]; times]),
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.levels.iter_mut().zip(other.levels) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        if let (Some(a), Some(b)) = (self.rays.as_mut(), other.rays) {
            for (at, bt) in a.iter_mut().zip(b) {
                for (ak, bk) in at.iter_mut().zip(bt) {
                    ak.iter_mut().zip(bk).for_each(|(x, y)| *x += y);
                }
            }
        }
        self
    }
}

/// Runs a campaign and tabulates the state at each requested time. Each run
/// samples one path at all times, so tables at different times share paths.
pub fn run_campaign(params: &ModelParams, campaign: &Campaign) -> Result<Vec<EstimateTable>> {
    check_init(params, campaign.init)?;
    if campaign.n_runs == 0 {
        return domain("a campaign needs at least one run");
    }
    let times = &campaign.times;
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return domain("times must be finite, non-negative and non-decreasing");
    }
    let (n, d) = (params.n, params.d());
    let empty = || Tally::new(times.len(), n, d, campaign.by_ray);
    let tally = (0..campaign.n_runs)
        .into_par_iter()
        .fold(empty, |mut acc, run| {
            let mut rng = run_rng(campaign.seed, run);
            walk(params, campaign.init, times, &mut rng, |i, s| {
                acc.levels[i][s.level()] += 1;
                if let Some(r) = acc.rays.as_mut() {
                    r[i][s.level()][s.ray() - 1] += 1;
                }
            });
            acc
        })
        .reduce(empty, Tally::merge);
    let mut rays = tally.rays.map(|r| r.into_iter());
    Ok(times
        .iter()
        .zip(tally.levels)
        .map(|(&t, counts)| {
            let rc = rays.as_mut().and_then(|r| r.next());
            EstimateTable::from_counts(t, counts, rc, campaign.n_runs)
        })
        .collect())
}

/// Estimate of `p(k, t)` from `n_runs` paths started empty on ray 1.
pub fn estimate_pk(params: &ModelParams, t: f64, n_runs: u64, seed: u64) -> Result<EstimateTable> {
    let campaign = Campaign {
        times: vec![t],
        n_runs,
        seed,
        init: ChainState::Origin { last_ray: 1 },
        by_ray: false,
    };
    Ok(run_campaign(params, &campaign)?.remove(0))
}

/// CSV rows `t,level,point,ci_low,ci_high,n_runs,seed`.
pub fn estimates_csv(tables: &[EstimateTable], seed: u64) -> String {
    let mut out = String::from("t,level,point,ci_low,ci_high,n_runs,seed\n");
    for tab in tables {
        for k in 0..tab.counts.len() {
            let (lo, hi) = tab.interval(k);
            out.push_str(&format!(
                "{},{k},{},{lo},{hi},{},{seed}\n",
                tab.t, tab.point[k], tab.n_runs
            ));
        }
    }
    out
}

/// Rays of the origin visits along one long path, `visits` of them.
pub fn origin_ray_visits(params: &ModelParams, visits: usize, seed: u64) -> Vec<usize> {
    let mut rng = run_rng(seed, 0);
    let mut state = ChainState::Origin { last_ray: 1 };
    let mut out = Vec::with_capacity(visits);
    while out.len() < visits {
        state = step(params, state, &mut rng).1;
        if let ChainState::Origin { last_ray } = state {
            out.push(last_ray);
        }
    }
    out
}

/// Coverage summary for repeated campaigns against known targets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub campaigns: u64,
    /// Intervals checked: campaigns times levels times times.
    pub cells: u64,
    pub covered: u64,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        self.covered as f64 / self.cells as f64
    }
}

/// Repeats a campaign `repeats` times with seeds `base_seed + r` and counts
/// how many 95% intervals contain `targets[i][k]`, the true `p(k, times[i])`.
pub fn coverage(
    params: &ModelParams,
    times: &[f64],
    targets: &[Vec<f64>],
    n_runs: u64,
    repeats: u64,
    base_seed: u64,
) -> Result<Coverage> {
    let mut cov = Coverage {
        campaigns: repeats,
        cells: 0,
        covered: 0,
    };
    for r in 0..repeats {
        let campaign = Campaign {
            times: times.to_vec(),
            n_runs,
            seed: base_seed.wrapping_add(r),
            init: ChainState::Origin { last_ray: 1 },
            by_ray: false,
        };
        for (tab, target) in run_campaign(params, &campaign)?.iter().zip(targets) {
            for (k, &truth) in target.iter().enumerate() {
                cov.cells += 1;
                cov.covered += tab.covers(k, truth) as u64;
            }
        }
    }
    Ok(cov)
}
