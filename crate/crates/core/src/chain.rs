//! Model parameters, state space, transition rates and the full generator.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Stochastic `d x d` matrix governing the ray chosen on leaving the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SwitchMatrix {
    rows: Vec<Vec<f64>>,
}

impl SwitchMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return domain("switching matrix must have at least one row");
        }
        for (l, row) in rows.iter().enumerate() {
            if row.len() != d {
                return domain(format!(
                    "switching matrix row {} has {} entries, expected {d}",
                    l + 1,
                    row.len()
                ));
            }
            if row.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return domain(format!(
                    "switching matrix row {} has a negative or non-finite entry",
                    l + 1
                ));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return domain(format!("switching matrix row {} sums to {s}, not 1", l + 1));
            }
        }
        Ok(Self { rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `c_{l,j}` with 1-based ray indices.
    pub fn entry(&self, l: usize, j: usize) -> f64 {
        self.rows[l - 1][j - 1]
    }

    /// Row `l` (1-based), i.e. the law of the next ray after leaving Origin(l).
    pub fn row(&self, l: usize) -> &[f64] {
        &self.rows[l - 1]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl TryFrom<Vec<Vec<f64>>> for SwitchMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<SwitchMatrix> for Vec<Vec<f64>> {
    fn from(m: SwitchMatrix) -> Self {
        m.rows
    }
}

/// The catalogue of switching schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchKind {
    Uniform,
    UniformExcl,
    Cyclic,
    Sequential,
    RandomWalk,
}

impl SwitchKind {
    pub const ALL: [SwitchKind; 5] = [
        SwitchKind::Uniform,
        SwitchKind::UniformExcl,
        SwitchKind::Cyclic,
        SwitchKind::Sequential,
        SwitchKind::RandomWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SwitchKind::Uniform => "uniform",
            SwitchKind::UniformExcl => "uniform-excl",
            SwitchKind::Cyclic => "cyclic",
            SwitchKind::Sequential => "sequential",
            SwitchKind::RandomWalk => "random-walk",
        }
    }
}

impl std::str::FromStr for SwitchKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown switching scheme '{s}'")))
    }
}

/// Builds one of the five catalogued switching matrices. `p` is used only by
/// the random-walk scheme (probability of stepping to the next ray).
pub fn example_switch_matrix(kind: SwitchKind, d: usize, p: f64) -> Result<SwitchMatrix> {
    if d == 0 {
        return domain("d must be at least 1");
    }
    let mut rows = vec![vec![0.0; d]; d];
    match kind {
        SwitchKind::Uniform => {
            for row in &mut rows {
                row.fill(1.0 / d as f64);
            }
        }
        SwitchKind::UniformExcl => {
            if d < 2 {
                return domain("uniform-excl needs at least two rays");
            }
            for (l, row) in rows.iter_mut().enumerate() {
                row.fill(1.0 / (d - 1) as f64);
                row[l] = 0.0;
            }
        }
        SwitchKind::Cyclic => {
            for (l, row) in rows.iter_mut().enumerate() {
                row[(l + 1) % d] = 1.0;
            }
        }
        SwitchKind::Sequential => {
            for (l, row) in rows.iter_mut().enumerate() {
                row[(l + 1).min(d - 1)] = 1.0;
            }
        }
        SwitchKind::RandomWalk => {
            if d < 2 {
                return domain("random-walk needs at least two rays");
            }
            if !(p > 0.0 && p < 1.0) {
                return domain(format!("random-walk needs 0 < p < 1, got {p}"));
            }
            rows[0][1] = 1.0;
            rows[d - 1][d - 2] = 1.0;
            for (l, row) in rows.iter_mut().enumerate().take(d - 1).skip(1) {
                row[l - 1] = 1.0 - p;
                row[l + 1] = p;
            }
        }
    }
    SwitchMatrix::new(rows)
}

/// Full parameterization of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
    pub switch: SwitchMatrix,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, n: usize, switch: SwitchMatrix) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
            return domain(format!(
                "rates must be positive and finite, got lambda={lambda}, mu={mu}"
            ));
        }
        if n == 0 {
            return domain("capacity N must be at least 1");
        }
        Ok(Self {
            lambda,
            mu,
            n,
            switch,
        })
    }

    /// Single-ray chain, where the switching matrix is the scalar 1.
    pub fn one_ray(lambda: f64, mu: f64, n: usize) -> Result<Self> {
        Self::new(lambda, mu, n, SwitchMatrix::new(vec![vec![1.0]])?)
    }

    pub fn d(&self) -> usize {
        self.switch.dim()
    }

    /// `lambda / mu`.
    pub fn ratio(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Number of states, `d (N + 1)`.
    pub fn dimension(&self) -> usize {
        self.d() * (self.n + 1)
    }
}

/// Switching part of the JSON model configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SwitchSpec {
    Kind {
        kind: SwitchKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
    },
    Matrix {
        matrix: Vec<Vec<f64>>,
    },
}

/// JSON model configuration:
/// `{"lambda": f, "mu": f, "N": i, "d": i, "switch": {"kind": s, "p": f} | {"matrix": [[f]]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub switch: SwitchSpec,
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<ModelParams> {
        let switch = match &self.switch {
            SwitchSpec::Kind { kind, p } => example_switch_matrix(*kind, self.d, p.unwrap_or(0.5))?,
            SwitchSpec::Matrix { matrix } => {
                let m = SwitchMatrix::new(matrix.clone())?;
                if m.dim() != self.d {
                    return Err(Error::Config(format!(
                        "switch matrix is {0}x{0} but d = {1}",
                        m.dim(),
                        self.d
                    )));
                }
                m
            }
        };
        ModelParams::new(self.lambda, self.mu, self.n, switch)
    }
}

/// A state of the chain. Levels run over `1..=N` and rays over `1..=d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "lowercase")]
pub enum ChainState {
    /// Empty system, remembering the ray it was last on.
    Origin {
        last_ray: usize,
    },
    Interior {
        level: usize,
        ray: usize,
    },
}

impl ChainState {
    pub fn level(self) -> usize {
        match self {
            ChainState::Origin { .. } => 0,
            ChainState::Interior { level, .. } => level,
        }
    }

    pub fn ray(self) -> usize {
        match self {
            ChainState::Origin { last_ray } => last_ray,
            ChainState::Interior { ray, .. } => ray,
        }
    }

    pub fn is_valid(self, n: usize, d: usize) -> bool {
        match self {
            ChainState::Origin { last_ray } => (1..=d).contains(&last_ray),
            ChainState::Interior { level, ray } => (1..=n).contains(&level) && (1..=d).contains(&ray),
        }
    }

    /// Position in the enumeration: origins first, then levels ascending with
    /// rays ascending inside each level.
    pub fn index(self, d: usize) -> usize {
        match self {
            ChainState::Origin { last_ray } => last_ray - 1,
            ChainState::Interior { level, ray } => level * d + ray - 1,
        }
    }

    pub fn from_index(i: usize, d: usize) -> Self {
        let (level, ray) = (i / d, i % d + 1);
        if level == 0 {
            ChainState::Origin { last_ray: ray }
        } else {
            ChainState::Interior { level, ray }
        }
    }
}

/// Rate of the jump `from -> to`; zero for pairs that are not adjacent.
pub fn transition_rate(from: ChainState, to: ChainState, params: &ModelParams) -> f64 {
    let n = params.n;
    match (from, to) {
        (ChainState::Origin { last_ray: l }, ChainState::Interior { level: 1, ray: j }) => {
            params.switch.entry(l, j) * params.lambda * n as f64
        }
        (ChainState::Interior { level: 1, ray: j }, ChainState::Origin { last_ray: l }) if j == l => {
            params.mu * (n + 1) as f64
        }
        (ChainState::Interior { level: k, ray: j }, ChainState::Interior { level: k2, ray: j2 })
            if j == j2 =>
        {
            if k2 == k + 1 && k2 <= n {
                params.lambda * (n - k) as f64
            } else if k2 + 1 == k {
                params.mu * (n + k) as f64
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

/// Sparse generator over the enumerated state set.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    d: usize,
    /// Off-diagonal entries of each row as `(column, rate)`.
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl Generator {
    pub fn dimension(&self) -> usize {
        self.rows.len()
    }

    pub fn capacity(&self) -> usize {
        self.n
    }

    pub fn rays(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn max_exit_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, &q| m.max(-q))
    }

    /// `y = x Q` for a row vector `x`.
    pub fn left_multiply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, (&xi, &qi)) in y.iter_mut().zip(x.iter().zip(&self.diag)) {
            *yi = xi * qi;
        }
        for (i, row) in self.rows.iter().enumerate() {
            let xi = x[i];
            if xi != 0.0 {
                for &(j, q) in row {
                    y[j] += xi * q;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.dimension();
        let mut q = DMatrix::zeros(m, m);
        for (i, row) in self.rows.iter().enumerate() {
            q[(i, i)] = self.diag[i];
            for &(j, r) in row {
                q[(i, j)] = r;
            }
        }
        q
    }

    /// Stationary law over all states. With several closed classes the
    /// result is the long-run law started from the uniform distribution.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        stationary_of_generator(&self.to_dense())
    }
}

/// Builds the generator whose forward equation is the Kolmogorov system of
/// the chain.
pub fn build_generator(params: &ModelParams) -> Generator {
    let (n, d) = (params.n, params.d());
    let dim = params.dimension();
    let mut rows = vec![Vec::new(); dim];
    let mut diag = vec![0.0; dim];
    for (i, row) in rows.iter_mut().enumerate() {
        let from = ChainState::from_index(i, d);
        let mut targets = Vec::new();
        match from {
            ChainState::Origin { .. } => {
                targets.extend((1..=d).map(|j| ChainState::Interior { level: 1, ray: j }));
            }
            ChainState::Interior { level, ray } => {
                targets.push(if level == 1 {
                    ChainState::Origin { last_ray: ray }
                } else {
                    ChainState::Interior {
                        level: level - 1,
                        ray,
                    }
                });
                if level < n {
                    targets.push(ChainState::Interior {
                        level: level + 1,
                        ray,
                    });
                }
            }
        }
        for to in targets {
            let r = transition_rate(from, to, params);
            if r > 0.0 {
                row.push((to.index(d), r));
                diag[i] -= r;
            }
        }
    }
    Generator { n, d, rows, diag }
}

/// Sums a law over all states into a law over levels `0..=N`.
pub fn level_marginal(p: &[f64], d: usize) -> Vec<f64> {
    p.chunks(d).map(|c| c.iter().sum()).collect()
}

/// Stationary vector `pi` with `pi C = pi`. For a reducible `C` with several
/// closed classes this is the limit of the Cesaro averages of `C^n` started
/// from the uniform law; a single absorbing ray receives all the mass.
pub fn switch_stationary(c: &SwitchMatrix) -> Result<Vec<f64>> {
    let d = c.dim();
    let mut q = DMatrix::zeros(d, d);
    for l in 0..d {
        for j in 0..d {
            q[(l, j)] = c.rows()[l][j] - if l == j { 1.0 } else { 0.0 };
        }
    }
    stationary_of_generator(&q)
}

fn reachable_from(q: &DMatrix<f64>, start: usize) -> Vec<bool> {
    let m = q.nrows();
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        for j in 0..m {
            if j != i && q[(i, j)] > 0.0 && !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

/// Stationary law of a (possibly reducible) generator, weighting each closed
/// class by its absorption probability from the uniform start.
pub(crate) fn stationary_of_generator(q: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = q.nrows();
    let reach: Vec<Vec<bool>> = (0..m).map(|i| reachable_from(q, i)).collect();
    let mut class_of = vec![usize::MAX; m];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        if class_of[i] != usize::MAX {
            continue;
        }
        let closed = (0..m).all(|j| !reach[i][j] || reach[j][i]);
        if closed {
            let members: Vec<usize> = (0..m).filter(|&j| reach[i][j]).collect();
            for &j in &members {
                class_of[j] = classes.len();
            }
            classes.push(members);
        }
    }

    let mut pi = vec![0.0; m];
    let class_laws: Vec<Vec<f64>> = classes
        .iter()
        .map(|c| class_stationary(q, c))
        .collect::<Result<_>>()?;
    if classes.len() == 1 {
        for (&s, &v) in classes[0].iter().zip(&class_laws[0]) {
            pi[s] = v;
        }
        return Ok(pi);
    }

    let transient: Vec<usize> = (0..m).filter(|&i| class_of[i] == usize::MAX).collect();
    let mut weights: Vec<f64> = classes.iter().map(|c| c.len() as f64 / m as f64).collect();
    if !transient.is_empty() {
        let t = transient.len();
        let qtt = DMatrix::from_fn(t, t, |a, b| q[(transient[a], transient[b])]);
        let lu = qtt.lu();
        for (ci, class) in classes.iter().enumerate() {
            let rhs = DVector::from_fn(t, |a, _| {
                -class.iter().map(|&s| q[(transient[a], s)]).sum::<f64>()
            });
            let h = lu
                .solve(&rhs)
                .ok_or_else(|| Error::SingularConfiguration("absorption system is singular".into()))?;
            weights[ci] += h.iter().sum::<f64>() / m as f64;
        }
    }
    for ((class, law), w) in classes.iter().zip(&class_laws).zip(&weights) {
        for (&s, &v) in class.iter().zip(law) {
            pi[s] = w * v;
        }
    }
    Ok(pi)
}

fn class_stationary(q: &DMatrix<f64>, members: &[usize]) -> Result<Vec<f64>> {
    let k = members.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    // Solve pi Q_cc = 0 with sum(pi) = 1 replacing the last equation.
    let mut a = DMatrix::from_fn(k, k, |r, c| q[(members[c], members[r])]);
    for c in 0..k {
        a[(k - 1, c)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularConfiguration("stationary system is singular".into()))?;
    Ok(x.iter().map(|&v| v.max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(d: usize) -> SwitchMatrix {
        example_switch_matrix(SwitchKind::Uniform, d, 0.5).unwrap()
    }

    #[test]
    fn rates_at_the_boundaries() {
        let p = ModelParams::new(1.0, 1.0, 3, uniform(2)).unwrap();
        let up_top = transition_rate(
            ChainState::Interior { level: 3, ray: 1 },
            ChainState::Interior { level: 4, ray: 1 },
            &p,
        );
        assert_eq!(up_top, 0.0);
        let down = transition_rate(
            ChainState::Interior { level: 2, ray: 2 },
            ChainState::Interior { level: 1, ray: 2 },
            &p,
        );
        assert_eq!(down, 5.0);
        let leave = transition_rate(
            ChainState::Origin { last_ray: 1 },
            ChainState::Interior { level: 1, ray: 2 },
            &p,
        );
        assert_eq!(leave, 1.5);
        let to_origin = transition_rate(
            ChainState::Interior { level: 1, ray: 2 },
            ChainState::Origin { last_ray: 2 },
            &p,
        );
        assert_eq!(to_origin, 4.0);
        let wrong_memory = transition_rate(
            ChainState::Interior { level: 1, ray: 2 },
            ChainState::Origin { last_ray: 1 },
            &p,
        );
        assert_eq!(wrong_memory, 0.0);
        let across = transition_rate(
            ChainState::Interior { level: 2, ray: 1 },
            ChainState::Interior { level: 3, ray: 2 },
            &p,
        );
        assert_eq!(across, 0.0);
    }

    #[test]
    fn enumeration_round_trips() {
        for d in 1..5 {
            for i in 0..d * 7 {
                let s = ChainState::from_index(i, d);
                assert!(s.is_valid(6, d));
                assert_eq!(s.index(d), i);
            }
        }
    }

    #[test]
    fn one_ray_generator_is_tridiagonal() {
        let p = ModelParams::one_ray(2.0, 0.7, 5).unwrap();
        let q = build_generator(&p).to_dense();
        for i in 0..6usize {
            for j in 0..6 {
                if i.abs_diff(j) > 1 {
                    assert_eq!(q[(i, j)], 0.0);
                }
            }
            assert!(q.row(i).sum().abs() < 1e-12);
        }
        assert_eq!(q[(0, 1)], 2.0 * 5.0);
        assert_eq!(q[(3, 2)], 0.7 * 8.0);
    }

    #[test]
    fn catalogue_matrices() {
        let u = example_switch_matrix(SwitchKind::Uniform, 3, 0.5).unwrap();
        assert!(u.rows().iter().flatten().all(|&c| c == 1.0 / 3.0));
        let s = example_switch_matrix(SwitchKind::Sequential, 3, 0.5).unwrap();
        assert_eq!(s.rows(), &[vec![0., 1., 0.], vec![0., 0., 1.], vec![0., 0., 1.]]);
        let r = example_switch_matrix(SwitchKind::RandomWalk, 4, 0.5).unwrap();
        assert_eq!(r.row(1), &[0., 1., 0., 0.]);
        assert_eq!(r.row(4), &[0., 0., 1., 0.]);
        assert_eq!(r.row(2), &[0.5, 0., 0.5, 0.]);
        assert!(example_switch_matrix(SwitchKind::UniformExcl, 1, 0.5).is_err());
        assert!(example_switch_matrix(SwitchKind::RandomWalk, 4, 1.0).is_err());
        let c = example_switch_matrix(SwitchKind::Cyclic, 3, 0.5).unwrap();
        assert_eq!(c.row(3), &[1., 0., 0.]);
    }

    #[test]
    fn switch_stationary_catalogue() {
        let c = example_switch_matrix(SwitchKind::Cyclic, 5, 0.5).unwrap();
        for v in switch_stationary(&c).unwrap() {
            assert!((v - 0.2).abs() < 1e-12);
        }
        let s = example_switch_matrix(SwitchKind::Sequential, 4, 0.5).unwrap();
        assert_eq!(switch_stationary(&s).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        let r = example_switch_matrix(SwitchKind::RandomWalk, 4, 0.5).unwrap();
        let pi = switch_stationary(&r).unwrap();
        for (v, w) in pi.iter().zip([1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!((v - w).abs() < 1e-12);
        }
    }

    /// Closed-form random-walk law for `p != 1/2`.
    fn random_walk_pi(d: usize, p: f64) -> Vec<f64> {
        let q = 1.0 / p - 1.0;
        let pd = (p - 1.0) * (2.0 * p - 1.0) / (2.0 * p * (p - 1.0 + q.powi(d as i32) * p));
        let mut pi = vec![q.powi(d as i32 - 2) * pd];
        for j in 2..d {
            pi.push(q.powi((d - j) as i32) * pd / (1.0 - p));
        }
        pi.push(pd);
        pi
    }

    #[test]
    fn random_walk_matches_closed_form() {
        for d in 3..=6 {
            for p in [0.2, 0.3, 0.7] {
                let c = example_switch_matrix(SwitchKind::RandomWalk, d, p).unwrap();
                let got = switch_stationary(&c).unwrap();
                for (g, w) in got.iter().zip(random_walk_pi(d, p)) {
                    assert!((g - w).abs() < 1e-12, "d={d} p={p}");
                }
            }
        }
    }

    #[test]
    fn identity_switch_mixes_closed_classes_uniformly() {
        let c = SwitchMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(switch_stationary(&c).unwrap(), vec![0.5, 0.5]);
        let c = SwitchMatrix::new(vec![
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let pi = switch_stationary(&c).unwrap();
        assert!((pi[1] - 0.5).abs() < 1e-12 && (pi[2] - 0.5).abs() < 1e-12 && pi[0] == 0.0);
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"lambda":2.0,"mu":1.0,"N":3,"d":4,"switch":{"kind":"random-walk","p":0.3}}"#;
        let cfg: ModelConfig = serde_json::from_str(json).unwrap();
        let back: ModelConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
        let p = cfg.resolve().unwrap();
        assert_eq!(p.d(), 4);
        assert_eq!(p.switch.entry(2, 3), 0.3);
        let json = r#"{"lambda":1,"mu":1,"N":2,"d":2,"switch":{"matrix":[[0.5,0.5],[1,0]]}}"#;
        let cfg: ModelConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.resolve().unwrap().switch.entry(2, 1), 1.0);
        let bad = r#"{"lambda":1,"mu":1,"N":2,"d":3,"switch":{"matrix":[[0.5,0.5],[1,0]]}}"#;
        let cfg: ModelConfig = serde_json::from_str(bad).unwrap();
        assert!(cfg.resolve().is_err());
    }

    fn arb_switch(d: usize) -> impl Strategy<Value = SwitchMatrix> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, d), d).prop_map(|rows| {
            let rows = rows
                .into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    let mut r: Vec<f64> = r.iter().map(|x| x / s).collect();
                    let head: f64 = r[..r.len() - 1].iter().sum();
                    *r.last_mut().unwrap() = 1.0 - head;
                    r
                })
                .collect();
            SwitchMatrix::new(rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn generator_structure(
            n in 1usize..6,
            (d, c) in (1usize..5).prop_flat_map(|d| (Just(d), arb_switch(d))),
            lambda in 0.1f64..5.0,
            mu in 0.1f64..5.0,
        ) {
            let p = ModelParams::new(lambda, mu, n, c).unwrap();
            let g = build_generator(&p);
            prop_assert_eq!(g.dimension(), d * (n + 1));
            for i in 0..g.dimension() {
                let from = ChainState::from_index(i, d);
                let s: f64 = g.row(i).iter().map(|e| e.1).sum::<f64>() + g.diagonal(i);
                prop_assert!(s.abs() < 1e-12);
                for &(j, r) in g.row(i) {
                    let to = ChainState::from_index(j, d);
                    prop_assert!(r > 0.0);
                    prop_assert_eq!(from.level().abs_diff(to.level()), 1);
                    if from.level() > 0 && to.level() > 0 {
                        prop_assert_eq!(from.ray(), to.ray());
                    }
                    if from.level() == 1 && to.level() == 0 {
                        prop_assert_eq!(from.ray(), to.ray());
                    }
                }
            }
        }
    }
}
