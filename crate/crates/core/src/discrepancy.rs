//! Partial coloring by a truncated Gaussian edge walk, and the driver that
//! iterates it to a full `±1` vector.
//!
//! The walk moves `x` by Gaussian steps restricted to the subspace orthogonal
//! to every frozen coordinate and every tight constraint. Each step is cut
//! short where it would leave the cube or cross a constraint bound, so the
//! discrepancy bounds hold exactly for every iterate rather than with high
//! probability. A run that ends with too few frozen coordinates is restarted.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constraint vectors `v_j` with threshold coefficients `c_j`; the bound on
/// `|⟨v_j, x − x0⟩|` is `c_j·‖v_j‖₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    dim: usize,
    rows: Vec<f64>,
    thresholds: Vec<f64>,
}

impl ConstraintSystem {
    pub fn new(vectors: Vec<Vec<f64>>, thresholds: Vec<f64>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        Self::with_dim(dim, vectors, thresholds)
    }

    /// Like [`ConstraintSystem::new`] but with an explicit dimension, so that
    /// an empty family still knows its ambient space.
    pub fn with_dim(dim: usize, vectors: Vec<Vec<f64>>, thresholds: Vec<f64>) -> Result<Self> {
        if vectors.len() != thresholds.len() {
            return Err(Error::InvalidArgument(format!(
                "{} vectors but {} thresholds",
                vectors.len(),
                thresholds.len()
            )));
        }
        if let Some(c) = thresholds.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("threshold {c} must be finite and nonnegative")));
        }
        let mut rows = Vec::with_capacity(dim * vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "vector {j} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|e| !(e.abs() <= 1.0)) {
                return Err(Error::InvalidArgument(format!("vector {j} has entries outside [-1, 1]")));
            }
            rows.extend_from_slice(v);
        }
        Ok(Self { dim, rows, thresholds })
    }

    pub fn unconstrained(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            thresholds: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.dim..(j + 1) * self.dim]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Same vectors, new threshold coefficients.
    pub fn with_thresholds(&self, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} thresholds for {} vectors",
                thresholds.len(),
                self.len()
            )));
        }
        Ok(Self {
            dim: self.dim,
            rows: self.rows.clone(),
            thresholds,
        })
    }
}

/// `Σ_j exp(−c_j²/16)`, the left side of the threshold condition.
pub fn threshold_mass(thresholds: &[f64]) -> f64 {
    thresholds.iter().map(|c| (-c * c / 16.0).exp()).sum()
}

/// Whether `Σ_j exp(−c_j²/16) ≤ n_alive/16`.
pub fn validate_thresholds(thresholds: &[f64], n_alive: usize) -> bool {
    threshold_mass(thresholds) <= n_alive as f64 / 16.0
}

/// Step length of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `γ = 1/(4√ln(nm/δ))`.
    #[default]
    Coarse,
    /// `γ = δ/(4√ln(nm/δ))`; much slower, kept for comparison.
    Fine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub delta: f64,
    /// `None` uses `64·⌈ln(nm)⌉`.
    pub restart_cap: Option<usize>,
    pub step_rule: StepRule,
    /// Reject threshold families failing [`validate_thresholds`].
    pub enforce_thresholds: bool,
}

impl WalkConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            restart_cap: None,
            step_rule: StepRule::default(),
            enforce_thresholds: true,
        }
    }

    pub fn with_restart_cap(mut self, cap: usize) -> Self {
        self.restart_cap = Some(cap);
        self
    }

    pub fn unchecked(mut self) -> Self {
        self.enforce_thresholds = false;
        self
    }

    fn log_term(&self, n: usize, m: usize) -> f64 {
        ((n.max(1) * m.max(1)) as f64 / self.delta).ln().max(1.0)
    }

    fn gamma(&self, n: usize, m: usize) -> f64 {
        let base = 1.0 / (4.0 * self.log_term(n, m).sqrt());
        match self.step_rule {
            StepRule::Coarse => base,
            StepRule::Fine => self.delta * base,
        }
    }

    pub fn resolved_restart_cap(&self, n: usize, m: usize) -> usize {
        self.restart_cap
            .unwrap_or_else(|| 64 * ((n.max(1) * m.max(1)) as f64).ln().ceil().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialColoring {
    pub x: Vec<f64>,
    /// Failed walks before the successful one.
    pub restarts: usize,
    /// Steps taken by the successful walk.
    pub steps: usize,
}

/// Independent recomputation of the partial coloring postconditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringCheck {
    /// `max_j (|⟨v_j, x − x0⟩| − c_j‖v_j‖₂)`; `−∞` with no constraints.
    pub max_excess: f64,
    pub constraints_ok: bool,
    pub alive_before: usize,
    pub newly_frozen: usize,
    pub freeze_ok: bool,
    pub frozen_unchanged: bool,
    pub in_cube: bool,
}

impl ColoringCheck {
    pub fn passed(&self) -> bool {
        self.constraints_ok && self.freeze_ok && self.frozen_unchanged && self.in_cube
    }
}

fn is_frozen(v: f64, delta: f64) -> bool {
    v.abs() >= 1.0 - delta
}

/// Checks `x` against both postconditions using full vector norms.
pub fn check_partial_coloring(sys: &ConstraintSystem, x0: &[f64], x: &[f64], delta: f64) -> ColoringCheck {
    let mut max_excess = f64::NEG_INFINITY;
    let mut constraints_ok = true;
    for j in 0..sys.len() {
        let v = sys.row(j);
        let norm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
        let moved: f64 = v.iter().zip(x.iter().zip(x0)).map(|(e, (a, b))| e * (a - b)).sum();
        let bound = sys.thresholds[j] * norm;
        let excess = moved.abs() - bound;
        max_excess = max_excess.max(excess);
        constraints_ok &= excess <= 1e-9 * (1.0 + bound);
    }
    let alive: Vec<usize> = (0..x0.len()).filter(|&i| !is_frozen(x0[i], delta)).collect();
    let newly_frozen = alive.iter().filter(|&&i| is_frozen(x[i], delta)).count();
    let frozen_unchanged = (0..x0.len()).all(|i| !is_frozen(x0[i], delta) || x[i] == x0[i]);
    ColoringCheck {
        max_excess,
        constraints_ok,
        alive_before: alive.len(),
        newly_frozen,
        freeze_ok: 2 * newly_frozen >= alive.len(),
        frozen_unchanged,
        in_cube: x.len() == x0.len() && x.iter().all(|v| v.abs() <= 1.0),
    }
}

/// Orthonormal basis grown by twice-applied modified Gram-Schmidt.
struct Basis {
    dim: usize,
    vecs: Vec<Vec<f64>>,
}

impl Basis {
    fn new(dim: usize) -> Self {
        Self { dim, vecs: Vec::new() }
    }

    fn len(&self) -> usize {
        self.vecs.len()
    }

    fn project_out(&self, w: &mut [f64]) {
        for q in &self.vecs {
            let c: f64 = q.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
    }

    fn push(&mut self, mut w: Vec<f64>) {
        if self.vecs.len() >= self.dim {
            return;
        }
        let original = w.iter().map(|e| e * e).sum::<f64>().sqrt();
        if original == 0.0 {
            return;
        }
        self.project_out(&mut w);
        self.project_out(&mut w);
        let norm = w.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm <= 1e-9 * original {
            return;
        }
        w.iter_mut().for_each(|e| *e /= norm);
        self.vecs.push(w);
    }

    fn push_axis(&mut self, i: usize) {
        let mut e = vec![0.0; self.dim];
        e[i] = 1.0;
        self.push(e);
    }
}

/// One walk over the alive coordinates. `rows` holds the constraint vectors
/// restricted to those coordinates, `bounds` the absolute limits.
struct Walk<'a> {
    rows: &'a [Vec<f64>],
    bounds: &'a [f64],
    slack: &'a [f64],
    delta: f64,
    gamma: f64,
    step_cap: usize,
}

enum WalkOutcome {
    Done { x: Vec<f64>, steps: usize },
    Stalled,
}

impl Walk<'_> {
    fn run<R: Rng + ?Sized>(&self, start: &[f64], rng: &mut R) -> WalkOutcome {
        let d = start.len();
        let m = self.rows.len();
        let need = d.div_ceil(2);
        let mut x = start.to_vec();
        let mut moved = vec![0.0; m];
        let mut frozen = vec![false; d];
        let mut tight = vec![false; m];
        let mut basis = Basis::new(d);
        let mut frozen_count = 0;
        for j in 0..m {
            if self.bounds[j] <= self.slack[j] {
                tight[j] = true;
                basis.push(self.rows[j].clone());
            }
        }
        let mut u = vec![0.0; d];
        let mut rate = vec![0.0; m];
        let mut steps = 0;
        while steps < self.step_cap && frozen_count < need && basis.len() < d {
            steps += 1;
            for (i, ui) in u.iter_mut().enumerate() {
                *ui = if frozen[i] { 0.0 } else { rng.sample(StandardNormal) };
            }
            basis.project_out(&mut u);
            for (i, ui) in u.iter_mut().enumerate() {
                if frozen[i] {
                    *ui = 0.0;
                }
            }
            let mut tau = 1.0f64;
            for i in 0..d {
                let step = self.gamma * u[i];
                if frozen[i] || step == 0.0 {
                    continue;
                }
                let room = if step > 0.0 { 1.0 - x[i] } else { -1.0 - x[i] };
                tau = tau.min(room / step);
            }
            for j in 0..m {
                let r = self.gamma * self.rows[j].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
                rate[j] = r;
                if tight[j] || r == 0.0 {
                    continue;
                }
                let room = if r > 0.0 {
                    self.bounds[j] - moved[j]
                } else {
                    -self.bounds[j] - moved[j]
                };
                tau = tau.min(room / r);
            }
            let tau = tau.max(0.0);
            for i in 0..d {
                if !frozen[i] {
                    x[i] = (x[i] + tau * self.gamma * u[i]).clamp(-1.0, 1.0);
                }
            }
            for j in 0..m {
                moved[j] += tau * rate[j];
            }
            for i in 0..d {
                if !frozen[i] && is_frozen(x[i], self.delta) {
                    frozen[i] = true;
                    frozen_count += 1;
                    basis.push_axis(i);
                }
            }
            for j in 0..m {
                if !tight[j] && moved[j].abs() >= self.bounds[j] - self.slack[j] {
                    tight[j] = true;
                    basis.push(self.rows[j].clone());
                }
            }
        }
        if frozen_count >= need {
            WalkOutcome::Done { x, steps }
        } else {
            WalkOutcome::Stalled
        }
    }
}

/// Moves the alive coordinates of `x0` (those with `|x0_i| < 1 − δ`) until at
/// least half of them are frozen at `|x_i| ≥ 1 − δ`, keeping every
/// `|⟨v_j, x − x0⟩|` within `c_j` times the norm of `v_j` on the alive
/// coordinates. Frozen coordinates of `x0` are never touched.
pub fn partial_color<R: Rng + ?Sized>(
    sys: &ConstraintSystem,
    x0: &[f64],
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<PartialColoring> {
    if !(cfg.delta > 0.0 && cfg.delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta {} must lie in (0, 1/2)", cfg.delta)));
    }
    if x0.len() != sys.dim() {
        return Err(Error::InvalidArgument(format!(
            "start point has dimension {}, system has {}",
            x0.len(),
            sys.dim()
        )));
    }
    if x0.iter().any(|v| !(v.abs() <= 1.0)) {
        return Err(Error::InvalidArgument("start point must lie in [-1, 1]^n".into()));
    }
    let alive: Vec<usize> = (0..x0.len()).filter(|&i| !is_frozen(x0[i], cfg.delta)).collect();
    if alive.is_empty() {
        return Ok(PartialColoring {
            x: x0.to_vec(),
            restarts: 0,
            steps: 0,
        });
    }
    if cfg.enforce_thresholds && !validate_thresholds(sys.thresholds(), alive.len()) {
        return Err(Error::InvalidThresholds {
            sum: threshold_mass(sys.thresholds()),
            limit: alive.len() as f64 / 16.0,
        });
    }
    let m = sys.len();
    let mut rows = Vec::with_capacity(m);
    let mut bounds = Vec::with_capacity(m);
    let mut slack = Vec::with_capacity(m);
    let gamma = cfg.gamma(alive.len(), m);
    let margin = gamma * cfg.log_term(alive.len(), m).sqrt();
    for j in 0..m {
        let full = sys.row(j);
        let row: Vec<f64> = alive.iter().map(|&i| full[i]).collect();
        let norm = row.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        bounds.push(sys.thresholds[j] * norm);
        slack.push(margin * norm);
        rows.push(row);
    }
    let walk = Walk {
        rows: &rows,
        bounds: &bounds,
        slack: &slack,
        delta: cfg.delta,
        gamma,
        step_cap: (16.0 / (gamma * gamma)).ceil() as usize,
    };
    let start: Vec<f64> = alive.iter().map(|&i| x0[i]).collect();
    let cap = cfg.resolved_restart_cap(alive.len(), m);
    for restarts in 0..=cap {
        if let WalkOutcome::Done { x: moved, steps } = walk.run(&start, rng) {
            let mut x = x0.to_vec();
            for (&i, v) in alive.iter().zip(moved) {
                x[i] = v;
            }
            return Ok(PartialColoring { x, restarts, steps });
        }
    }
    Err(Error::RestartCapExceeded { restarts: cap })
}

/// What to do with coordinates still alive when the driver stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftoverRule {
    /// Every leftover coordinate becomes `+1`.
    PlusOne,
    /// Each leftover coordinate is rounded to its sign, zero going to `+1`.
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub alive_before: usize,
    pub alive_after: usize,
    pub restarts: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullSigning {
    pub signs: Vec<i8>,
    /// The fractional point reached before leftover signing and rounding.
    pub fractional: Vec<f64>,
    pub rounds: Vec<RoundSummary>,
}

/// Repeats [`partial_color`] with thresholds `schedule(alive_count)` until at
/// most `stop_threshold` coordinates remain alive, then signs the leftovers
/// and rounds every coordinate to its sign.
pub fn iterate_to_full_signing<R, S>(
    vectors: &ConstraintSystem,
    schedule: S,
    cfg: &WalkConfig,
    stop_threshold: usize,
    leftover: LeftoverRule,
    rng: &mut R,
) -> Result<FullSigning>
where
    R: Rng + ?Sized,
    S: Fn(usize) -> Vec<f64>,
{
    if stop_threshold == 0 {
        return Err(Error::InvalidArgument("stop threshold must be positive".into()));
    }
    let n = vectors.dim();
    let mut x = vec![0.0; n];
    let mut rounds = Vec::new();
    loop {
        let alive = x.iter().filter(|v| !is_frozen(**v, cfg.delta)).count();
        if alive <= stop_threshold {
            break;
        }
        let sys = vectors.with_thresholds(schedule(alive))?;
        let step = partial_color(&sys, &x, cfg, rng)?;
        x = step.x;
        let alive_after = x.iter().filter(|v| !is_frozen(**v, cfg.delta)).count();
        rounds.push(RoundSummary {
            alive_before: alive,
            alive_after,
            restarts: step.restarts,
            steps: step.steps,
        });
    }
    let signs = x
        .iter()
        .map(|&v| {
            if !is_frozen(v, cfg.delta) && leftover == LeftoverRule::PlusOne {
                1
            } else if v < 0.0 {
                -1
            } else {
                1
            }
        })
        .collect();
    Ok(FullSigning {
        signs,
        fractional: x,
        rounds,
    })
}
