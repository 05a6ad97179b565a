//! Finite-volume solver for the Fokker-Planck equation of the distance from
//! the vertex, with Scharfetter-Gummel fluxes and zero flux at both ends.
//!
//! For the linear drift the Scharfetter-Gummel steady state is `w` sampled
//! at cell centres, so the discrete and continuous laws agree to quadrature
//! accuracy.

use serde::Serialize;

use super::{tail_mass, w_mass, DiffusionParams};
use crate::error::{domain, Error, Result};

/// Uniform grid on `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpGrid {
    pub x_max: f64,
    pub n_cells: usize,
}

impl FpGrid {
    /// Grid reaching ten spreads past `max(beta, 0)`.
    pub fn standard(p: &DiffusionParams, n_cells: usize) -> Self {
        FpGrid {
            x_max: p.beta.max(0.0) + 10.0 * p.spread(),
            n_cells,
        }
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_cells as f64
    }

    pub fn centre(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FpScheme {
    /// Backward Euler, unconditionally stable.
    Implicit,
    /// Forward Euler, subject to a step bound.
    Explicit,
}

/// `z / (e^z - 1)`.
fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z / 2.0
    } else {
        z / z.exp_m1()
    }
}

/// Interface coefficients: the flux through interface `i + 1/2` is
/// `a[i] h[i] - b[i] h[i+1]`.
fn fluxes(p: &DiffusionParams, grid: &FpGrid) -> (Vec<f64>, Vec<f64>) {
    let dx = grid.dx();
    let diff = p.sigma2 / 2.0;
    (0..grid.n_cells - 1)
        .map(|i| {
            let x = (i + 1) as f64 * dx;
            let pe = -p.alpha * (x - p.beta) * dx / diff;
            (diff / dx * bernoulli(-pe), diff / dx * bernoulli(pe))
        })
        .unzip()
}

fn check(h0: &[f64], p: &DiffusionParams, grid: &FpGrid) -> Result<()> {
    if grid.n_cells < 2 || h0.len() != grid.n_cells {
        return domain(format!(
            "need at least 2 cells and one value per cell, got {} values",
            h0.len()
        ));
    }
    if grid.x_max < p.beta + 8.0 * p.spread() {
        return domain(format!(
            "x_max = {} is below beta + 8 sigma / sqrt(2 alpha) = {}",
            grid.x_max,
            p.beta + 8.0 * p.spread()
        ));
    }
    if h0.iter().any(|&h| !(h >= 0.0)) {
        return domain("initial density must be non-negative");
    }
    Ok(())
}

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = upper[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / beta;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Evolves the cell densities and returns snapshots at the sorted `times`.
pub fn fokker_planck_snapshots(
    h0: &[f64],
    p: &DiffusionParams,
    times: &[f64],
    grid: &FpGrid,
    dt: f64,
    scheme: FpScheme,
) -> Result<Vec<(f64, Vec<f64>)>> {
    check(h0, p, grid)?;
    if !(dt > 0.0) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    if times.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return domain("times must be finite, non-negative and non-decreasing");
    }
    let (a, b) = fluxes(p, grid);
    let n = grid.n_cells;
    let dx = grid.dx();
    // Rate of change of cell i: (F_{i-1/2} - F_{i+1/2}) / dx.
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n - 1 {
        diag[i] -= a[i] / dx;
        upper[i] += b[i] / dx;
        lower[i + 1] += a[i] / dx;
        diag[i + 1] -= b[i] / dx;
    }
    if scheme == FpScheme::Explicit {
        let max_rate = diag.iter().fold(0.0f64, |m, &d| m.max(-d));
        let max_dt = 1.0 / max_rate;
        if dt > max_dt {
            return Err(Error::Cfl { dt, max_dt });
        }
    }
    let implicit_diag: Vec<f64> = diag.iter().map(|&d| 1.0 - dt * d).collect();
    let implicit_lower: Vec<f64> = lower.iter().map(|&l| -dt * l).collect();
    let implicit_upper: Vec<f64> = upper.iter().map(|&u| -dt * u).collect();

    let mut h = h0.to_vec();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while now < target - 1e-12 * target.max(1.0) {
            let step = dt.min(target - now);
            match scheme {
                FpScheme::Implicit => {
                    if step == dt {
                        thomas(&implicit_lower, &implicit_diag, &implicit_upper, &mut h);
                    } else {
                        let d: Vec<f64> = diag.iter().map(|&d| 1.0 - step * d).collect();
                        let l: Vec<f64> = lower.iter().map(|&l| -step * l).collect();
                        let u: Vec<f64> = upper.iter().map(|&u| -step * u).collect();
                        thomas(&l, &d, &u, &mut h);
                    }
                }
                FpScheme::Explicit => {
                    let old = h.clone();
                    for i in 0..n {
                        let mut r = diag[i] * old[i];
                        if i > 0 {
                            r += lower[i] * old[i - 1];
                        }
                        if i + 1 < n {
                            r += upper[i] * old[i + 1];
                        }
                        h[i] = old[i] + step * r;
                    }
                }
            }
            now += step;
        }
        out.push((target, h.clone()));
    }
    Ok(out)
}

/// Density at `t_end`.
pub fn fokker_planck_evolve(
    h0: &[f64],
    p: &DiffusionParams,
    t_end: f64,
    grid: &FpGrid,
    dt: f64,
    scheme: FpScheme,
) -> Result<Vec<f64>> {
    Ok(fokker_planck_snapshots(h0, p, &[t_end], grid, dt, scheme)?
        .remove(0)
        .1)
}

/// `w` sampled at cell centres and scaled to unit mass on the grid; this is
/// the fixed point of the scheme.
pub fn sampled_density(p: &DiffusionParams, grid: &FpGrid) -> Vec<f64> {
    let ln: Vec<f64> = (0..grid.n_cells)
        .map(|i| {
            let x = grid.centre(i);
            -(2.0 * p.alpha * x / p.sigma2) * (x / 2.0 - p.beta)
        })
        .collect();
    let top = ln.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h: Vec<f64> = ln.iter().map(|&l| (l - top).exp()).collect();
    let mass: f64 = h.iter().sum::<f64>() * grid.dx();
    h.into_iter().map(|v| v / mass).collect()
}

/// Exact mass of `w` in each cell.
pub fn bin_masses(p: &DiffusionParams, grid: &FpGrid) -> Vec<f64> {
    let dx = grid.dx();
    (0..grid.n_cells)
        .map(|i| w_mass(i as f64 * dx, (i + 1) as f64 * dx, p))
        .collect()
}

/// L1 distance between the cell densities and `w`, including the mass of `w`
/// beyond the grid.
pub fn l1_to_w(h: &[f64], p: &DiffusionParams, grid: &FpGrid) -> f64 {
    let dx = grid.dx();
    let cells: f64 = h
        .iter()
        .zip(bin_masses(p, grid))
        .map(|(&v, m)| (v * dx - m).abs())
        .sum();
    cells + tail_mass(grid.x_max, p)
}

/// CSV `t,x,h` with cell centres.
pub fn snapshots_csv(snapshots: &[(f64, Vec<f64>)], grid: &FpGrid) -> String {
    let mut out = String::from("t,x,h\n");
    for (t, h) in snapshots {
        for (i, v) in h.iter().enumerate() {
            out.push_str(&format!("{t},{},{v}\n", grid.centre(i)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64) -> DiffusionParams {
        DiffusionParams::from_limit(2.0, 1.0, beta, 0.01).unwrap()
    }

    fn mass(h: &[f64], grid: &FpGrid) -> f64 {
        h.iter().sum::<f64>() * grid.dx()
    }

    #[test]
    fn stationary_is_a_fixed_point() {
        for beta in [-1.0, 0.0, 2.0] {
            let p = params(beta);
            let grid = FpGrid::standard(&p, 400);
            let w = sampled_density(&p, &grid);
            for (_, h) in
                fokker_planck_snapshots(&w, &p, &[0.5, 2.0, 10.0], &grid, 0.01, FpScheme::Implicit).unwrap()
            {
                let l1: f64 = h.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum::<f64>() * grid.dx();
                assert!(l1 < 1e-6, "beta={beta}: {l1}");
            }
        }
    }

    #[test]
    fn steady_state_matches_w() {
        for beta in [-1.0, 0.0, 2.0] {
            let p = params(beta);
            let grid = FpGrid::standard(&p, 2000);
            assert!(l1_to_w(&sampled_density(&p, &grid), &p, &grid) < 1e-4);
        }
    }

    #[test]
    fn bump_relaxes_and_conserves_mass() {
        let p = params(0.0);
        let grid = FpGrid::standard(&p, 2000);
        let h0: Vec<f64> = (0..grid.n_cells)
            .map(|i| (-((grid.centre(i) - 3.0) / 0.1).powi(2) / 2.0).exp())
            .collect();
        let m0 = mass(&h0, &grid);
        let h0: Vec<f64> = h0.into_iter().map(|v| v / m0).collect();
        let snaps =
            fokker_planck_snapshots(&h0, &p, &[0.1, 1.0, 5.0], &grid, 1e-3, FpScheme::Implicit).unwrap();
        for (_, h) in &snaps {
            assert!((mass(h, &grid) - 1.0).abs() < 1e-8);
            assert!(h.iter().all(|&v| v >= 0.0));
        }
        let last = &snaps.last().unwrap().1;
        assert!(l1_to_w(last, &p, &grid) < 1e-3, "{}", l1_to_w(last, &p, &grid));
        let csv = snapshots_csv(&snaps[..1], &grid);
        assert_eq!(csv.lines().count(), 2001);
    }

    #[test]
    fn explicit_scheme_bounds_the_step() {
        let p = params(0.0);
        let grid = FpGrid::standard(&p, 200);
        let w = sampled_density(&p, &grid);
        let err = fokker_planck_evolve(&w, &p, 1.0, &grid, 0.1, FpScheme::Explicit).unwrap_err();
        let Error::Cfl { max_dt, .. } = err else {
            panic!("{err:?}")
        };
        let h = fokker_planck_evolve(&w, &p, 1.0, &grid, max_dt * 0.9, FpScheme::Explicit).unwrap();
        assert!((mass(&h, &grid) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_short_domain() {
        let p = params(0.0);
        let grid = FpGrid {
            x_max: 1.0,
            n_cells: 100,
        };
        assert!(fokker_planck_evolve(&vec![1.0; 100], &p, 1.0, &grid, 0.01, FpScheme::Implicit).is_err());
    }
}
