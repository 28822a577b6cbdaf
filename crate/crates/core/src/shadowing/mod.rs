//! Reparametrized shadowing decisions with replayable certificates.
//!
//! A trace is shadowed at level eps when some initial point y and some
//! orientation-preserving time reparametrization h keep the flowed y within
//! eps of the trace for all window times. The decision discretizes both
//! curves, searches candidate y over a grid on the eps-ball of the trace
//! start (forced by h(0) = 0), and decides matching existence per candidate.
//! Positive answers carry certificates that replay independently; negative
//! answers are falsification claims at an explicit resolution, never proofs.

pub mod matching;
pub mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::sync::Arc;
use thiserror::Error;

use crate::flow::{Flow, FlowError};
use crate::noise::{DurationLaw, GenSpec, NoiseStrategy, UniformBall};
use crate::pseudo_orbit::{PseudoOrbit, PseudoOrbitError, TailPolicy};
use crate::reparam::{Reparam, ReparamError};
use crate::space::{mix64, Point};

use matching::{candidate_grid, trace_grid, MatchConfig, MatchOutcome, SampleGrid};

/// Nudge applied to tie anchors when making a matched reparametrization
/// strictly increasing.
const STRICT_STEP: f64 = 1e-9;

/// Replay slop shared by the decision and the certificate audit; absorbs the
/// anchor nudges and threshold rounding.
const REPLAY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error("two-sided windows need backward time, which this flow does not support")]
    BackwardUnsupported,
    #[error("schedule invalid: {0}")]
    Schedule(String),
    #[error(transparent)]
    Orbit(#[from] PseudoOrbitError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Reparam(#[from] ReparamError),
}

/// Knobs of one shadowing search; embedded verbatim in certificates and logs
/// so every claim is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SearchConfig {
    pub epsilon: f64,
    /// Time step; None means min(0.1, epsilon/4).
    pub dt: Option<f64>,
    /// Candidate orbits are sampled over dilation * window.
    pub dilation: f64,
    /// Multiplier on local-speed * dt in the feasibility tolerance.
    pub slack_factor: f64,
    /// Candidate grid spacing; None means epsilon/5.
    pub spacing: Option<f64>,
    /// Stop at the first certificate instead of scanning for the best.
    pub first_hit: bool,
    pub max_candidates: usize,
    /// Feasibility evaluations allowed per candidate.
    pub max_cells: u64,
}

impl SearchConfig {
    pub fn new(epsilon: f64) -> Self {
        SearchConfig {
            epsilon,
            dt: None,
            dilation: 1.5,
            slack_factor: 1.5,
            spacing: None,
            first_hit: false,
            max_candidates: 20_000,
            max_cells: 400_000_000,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_first_hit(mut self, on: bool) -> Self {
        self.first_hit = on;
        self
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.spacing = Some(spacing);
        self
    }

    pub fn dt_eff(&self) -> f64 {
        self.dt.unwrap_or_else(|| (self.epsilon / 4.0).min(0.1))
    }

    pub fn spacing_eff(&self) -> f64 {
        self.spacing.unwrap_or(self.epsilon / 5.0)
    }
}

/// Regenerable description of the sample grid a certificate was checked on.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TimeGridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowingCertificate {
    pub flow: String,
    pub epsilon: f64,
    pub y: Point,
    pub h: Reparam,
    /// Max distance on the sample grid, replayed after reconstruction.
    pub achieved_sup: f64,
    /// achieved_sup plus the inter-sample motion bound (2 * speed * dt along
    /// the matched path).
    pub continuous_bound: f64,
    /// Largest tolerance inflation used on the matched path.
    pub slack: f64,
    pub time_grid: TimeGridSpec,
    pub search: SearchConfig,
    pub candidate_index: usize,
}

/// Metadata that makes a negative or inconclusive answer reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchLog {
    pub epsilon: f64,
    pub dt: f64,
    pub spacing: f64,
    pub dilation: f64,
    pub slack_factor: f64,
    pub window: (f64, f64),
    pub candidates: usize,
    /// Candidates whose matching existed only above epsilon (within slack).
    pub inflated_matches: usize,
    pub budget_exhausted: usize,
    pub evolve_errors: Vec<String>,
    /// Deepest row any candidate's frontier reached, out of `rows`.
    pub max_rows_survived: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Shadowed {
        certificate: Box<ShadowingCertificate>,
    },
    NotShadowedAtResolution {
        log: SearchLog,
    },
    Unknown {
        reason: String,
        log: SearchLog,
    },
}

impl Verdict {
    pub fn is_shadowed(&self) -> bool {
        matches!(self, Verdict::Shadowed { .. })
    }

    pub fn certificate(&self) -> Option<&ShadowingCertificate> {
        match self {
            Verdict::Shadowed { certificate } => Some(certificate),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Verdict::Shadowed { .. } => "SHADOWED",
            Verdict::NotShadowedAtResolution { .. } => "NOT_SHADOWED_AT_RESOLUTION",
            Verdict::Unknown { .. } => "UNKNOWN",
        }
    }
}

enum CandOutcome {
    Hit(Box<HitCore>),
    Inflated,
    NoPath { rows_survived: usize },
    Budget,
    Error(String),
}

struct HitCore {
    y: Point,
    h: Reparam,
    grid_sup: f64,
    continuous_bound: f64,
    slack_max: f64,
}

fn reparam_from_path(
    a: &SampleGrid,
    b: &SampleGrid,
    path: &[(usize, usize)],
) -> Result<Reparam, ReparamError> {
    let n_a = a.times.len();
    let mut tau = vec![f64::NAN; n_a];
    for &(i, j) in path {
        // path is ascending, so the last write per row is its max column
        tau[i] = b.times[j];
    }
    tau[a.zero] = 0.0;
    for i in a.zero + 1..n_a {
        if !(tau[i] > tau[i - 1]) {
            tau[i] = tau[i - 1] + STRICT_STEP;
        }
    }
    for i in (0..a.zero).rev() {
        if !(tau[i] < tau[i + 1]) {
            tau[i] = tau[i + 1] - STRICT_STEP;
        }
    }
    let anchors: Vec<(f64, f64)> = a.times.iter().copied().zip(tau).collect();
    Ok(Reparam::from_anchors(anchors, 1.0, 1.0)?.simplify())
}

fn replay_on_grid(flow: &dyn Flow, a: &SampleGrid, y: &Point, h: &Reparam) -> Result<f64, FlowError> {
    let space = flow.space();
    let mut sup = 0.0f64;
    for (k, &t) in a.times.iter().enumerate() {
        let z = flow.evolve(y, h.eval(t))?;
        sup = sup.max(space.dist(&a.points[k], &z));
    }
    Ok(sup)
}

/// Max distance between the orbit trace and the reparametrized orbit of `y`
/// on a fresh sample grid at step `dt`.
pub fn replay_sup(
    flow: &dyn Flow,
    orbit: &PseudoOrbit,
    y: &Point,
    h: &Reparam,
    dt: f64,
) -> Result<f64, ShadowError> {
    let work = orbit.clone().with_policy(TailPolicy::ExtendByOrbit);
    let a = trace_grid(flow, &work, dt)?;
    Ok(replay_on_grid(flow, &a, y, h)?)
}

fn evaluate_candidate(
    flow: &dyn Flow,
    a: &SampleGrid,
    y: &Point,
    cfg: &SearchConfig,
    b_lo: f64,
    b_hi: f64,
    dt: f64,
) -> CandOutcome {
    let b = match candidate_grid(flow, y, b_lo, b_hi, dt) {
        Ok(b) => b,
        Err(e) => return CandOutcome::Error(e.to_string()),
    };
    // the matcher admits cells up to the slack-inflated tolerance for
    // completeness but walks the smallest-bottleneck staircase, so the replay
    // below separates certifiable hits from matches lost to discretization
    let mcfg = MatchConfig {
        eps: cfg.epsilon,
        slack_factor: cfg.slack_factor,
        dt,
        cell_budget: cfg.max_cells,
    };
    let path = match matching::monotone_match(flow.space(), a, &b, &mcfg) {
        MatchOutcome::Matched(path) => path,
        MatchOutcome::BudgetExhausted => return CandOutcome::Budget,
        MatchOutcome::NoPath { rows_survived } => {
            return CandOutcome::NoPath { rows_survived }
        }
    };
    let h = match reparam_from_path(a, &b, &path) {
        Ok(h) => h,
        Err(e) => return CandOutcome::Error(e.to_string()),
    };
    let grid_sup = match replay_on_grid(flow, a, y, &h) {
        Ok(s) => s,
        Err(e) => return CandOutcome::Error(e.to_string()),
    };
    let mut speed_max = 0.0f64;
    let mut slack_max = 0.0f64;
    for &(i, j) in &path {
        let speed = a.speeds[i].max(b.speeds[j]);
        speed_max = speed_max.max(speed);
        slack_max = slack_max.max(cfg.slack_factor * speed * dt);
    }
    if grid_sup <= cfg.epsilon + REPLAY_TOL {
        CandOutcome::Hit(Box::new(HitCore {
            y: y.clone(),
            h,
            grid_sup,
            continuous_bound: grid_sup + 2.0 * speed_max * dt,
            slack_max,
        }))
    } else {
        CandOutcome::Inflated
    }
}

/// Decide eps-shadowability of the orbit's trace over its window.
pub fn decide_shadowing(
    flow: &dyn Flow,
    orbit: &PseudoOrbit,
    cfg: &SearchConfig,
) -> Result<Verdict, ShadowError> {
    let work = orbit.clone().with_policy(TailPolicy::ExtendByOrbit);
    let (lo, hi) = work.span();
    if lo < 0.0 && !flow.supports_negative_time() {
        return Err(ShadowError::BackwardUnsupported);
    }
    let dt = cfg.dt_eff();
    let spacing = cfg.spacing_eff();
    let a = trace_grid(flow, &work, dt)?;
    let b_lo = cfg.dilation * lo;
    let b_hi = cfg.dilation * hi;

    let mut log = SearchLog {
        epsilon: cfg.epsilon,
        dt,
        spacing,
        dilation: cfg.dilation,
        slack_factor: cfg.slack_factor,
        window: (lo, hi),
        candidates: 0,
        inflated_matches: 0,
        budget_exhausted: 0,
        evolve_errors: Vec::new(),
        max_rows_survived: 0,
        rows: a.times.len(),
    };

    let candidates = flow.space().grid_ball(work.point(0), cfg.epsilon, spacing);
    log.candidates = candidates.len();
    if candidates.len() > cfg.max_candidates {
        return Ok(Verdict::Unknown {
            reason: format!(
                "candidate grid has {} points, over the {} budget",
                candidates.len(),
                cfg.max_candidates
            ),
            log,
        });
    }

    let chunk = (rayon::current_num_threads() * 2).max(1);
    let mut best: Option<(usize, Box<HitCore>)> = None;
    'scan: for (base, ys) in candidates.chunks(chunk).enumerate() {
        let outcomes: Vec<CandOutcome> = ys
            .par_iter()
            .map(|y| evaluate_candidate(flow, &a, y, cfg, b_lo, b_hi, dt))
            .collect();
        for (off, out) in outcomes.into_iter().enumerate() {
            let ci = base * chunk + off;
            match out {
                CandOutcome::Hit(core) => {
                    let better = match &best {
                        None => true,
                        Some((_, cur)) => core.grid_sup < cur.grid_sup,
                    };
                    if better {
                        best = Some((ci, core));
                    }
                    if cfg.first_hit {
                        break 'scan;
                    }
                }
                CandOutcome::Inflated => log.inflated_matches += 1,
                CandOutcome::NoPath { rows_survived } => {
                    log.max_rows_survived = log.max_rows_survived.max(rows_survived)
                }
                CandOutcome::Budget => log.budget_exhausted += 1,
                CandOutcome::Error(e) => {
                    if log.evolve_errors.len() < 3 {
                        log.evolve_errors.push(e);
                    } else {
                        log.evolve_errors.truncate(3);
                    }
                }
            }
        }
    }

    if let Some((ci, core)) = best {
        return Ok(Verdict::Shadowed {
            certificate: Box::new(ShadowingCertificate {
                flow: flow.name().to_string(),
                epsilon: cfg.epsilon,
                y: core.y,
                h: core.h,
                achieved_sup: core.grid_sup,
                continuous_bound: core.continuous_bound,
                slack: core.slack_max,
                time_grid: TimeGridSpec {
                    t_min: lo,
                    t_max: hi,
                    dt,
                },
                search: cfg.clone(),
                candidate_index: ci,
            }),
        });
    }
    if log.budget_exhausted > 0 {
        return Ok(Verdict::Unknown {
            reason: "matching budget exhausted before all candidates resolved".into(),
            log,
        });
    }
    if !log.evolve_errors.is_empty() {
        return Ok(Verdict::Unknown {
            reason: format!("candidate evolution failed: {}", log.evolve_errors[0]),
            log,
        });
    }
    if log.inflated_matches > 0 {
        return Ok(Verdict::Unknown {
            reason: "a matching exists only at the slack-inflated tolerance".into(),
            log,
        });
    }
    Ok(Verdict::NotShadowedAtResolution { log })
}

/// Forward-time variant; the orbit must be one-sided.
pub fn decide_forward_shadowing(
    flow: &dyn Flow,
    orbit: &PseudoOrbit,
    cfg: &SearchConfig,
) -> Result<Verdict, ShadowError> {
    let (lo, _) = orbit.span();
    if lo < 0.0 {
        return Err(ShadowError::Schedule(
            "forward shadowing needs a one-sided pseudo-orbit".into(),
        ));
    }
    decide_shadowing(flow, orbit, cfg)
}

#[derive(Debug, Error)]
pub enum CertError {
    #[error("certificate grid step {dt} is coarser than the required {max_dt}")]
    GridTooCoarse { dt: f64, max_dt: f64 },
    #[error("certificate grid [{have_lo}, {have_hi}] does not cover the window [{need_lo}, {need_hi}]")]
    WindowMismatch {
        have_lo: f64,
        have_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error(transparent)]
    Orbit(#[from] PseudoOrbitError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Debug, Clone, Serialize)]
pub struct CertReplay {
    pub pass: bool,
    pub achieved_sup: f64,
}

/// Independent audit of a certificate: regenerate the grid it declares and
/// recompute the sup. Refuses grids coarser than `max_dt`.
pub fn check_certificate(
    flow: &dyn Flow,
    orbit: &PseudoOrbit,
    eps: f64,
    cert: &ShadowingCertificate,
    max_dt: f64,
) -> Result<CertReplay, CertError> {
    if cert.time_grid.dt > max_dt * (1.0 + 1e-12) {
        return Err(CertError::GridTooCoarse {
            dt: cert.time_grid.dt,
            max_dt,
        });
    }
    let work = orbit.clone().with_policy(TailPolicy::ExtendByOrbit);
    let (lo, hi) = work.span();
    let tol = cert.time_grid.dt * 1e-9;
    if cert.time_grid.t_min > lo + tol || cert.time_grid.t_max < hi - tol {
        return Err(CertError::WindowMismatch {
            have_lo: cert.time_grid.t_min,
            have_hi: cert.time_grid.t_max,
            need_lo: lo,
            need_hi: hi,
        });
    }
    let a = trace_grid(flow, &work, cert.time_grid.dt)?;
    let sup = replay_on_grid(flow, &a, &cert.y, &cert.h)?;
    Ok(CertReplay {
        pass: sup <= eps + REPLAY_TOL,
        achieved_sup: sup,
    })
}

/// Shift a certificate along its own matched time: the pair
/// (evolve(y, h(c)), h shifted by c) shadows the trace suffix starting at c.
pub fn transport_certificate(
    flow: &dyn Flow,
    cert: &ShadowingCertificate,
    c: f64,
) -> Result<(Point, Reparam), ShadowError> {
    let y2 = flow.evolve(&cert.y, cert.h.eval(c))?;
    Ok((y2, cert.h.shift(c)))
}

/// How pseudo-orbit trials are built for shadowable-point estimation.
#[derive(Clone)]
pub struct EstimateConfig {
    pub trials_uniform: usize,
    /// Entries on each side of 0 for uniform trials.
    pub base_len: usize,
    pub adversarial: Vec<Arc<dyn NoiseStrategy>>,
    pub adversarial_len: usize,
    pub duration: DurationLaw,
    pub adversarial_duration: DurationLaw,
    /// Forward-only trials (the Sh+ variant).
    pub forward_only: bool,
    pub search: SearchConfig,
    pub seed: u64,
}

impl EstimateConfig {
    pub fn new(search: SearchConfig, seed: u64) -> Self {
        EstimateConfig {
            trials_uniform: 6,
            base_len: 8,
            adversarial: Vec::new(),
            adversarial_len: 40,
            duration: DurationLaw::Uniform { lo: 1.0, hi: 2.0 },
            adversarial_duration: DurationLaw::Fixed { value: 1.0 },
            forward_only: false,
            search,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointVerdict {
    /// All trials shadowed at this noise level.
    Pass { delta: f64 },
    /// A hard witness was produced at every level in the schedule.
    Fail { delta: f64 },
    Unknown,
}

impl PointVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            PointVerdict::Pass { .. } => "PASS",
            PointVerdict::Fail { .. } => "FAIL",
            PointVerdict::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub delta: f64,
    pub trial: usize,
    pub strategy: String,
    pub outcome: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointEstimate {
    pub point: Point,
    pub epsilon: f64,
    pub verdict: PointVerdict,
    #[serde(skip)]
    pub witness: Option<PseudoOrbit>,
    pub trials: Vec<TrialRecord>,
}

fn estimate_point_with_memo(
    flow: &dyn Flow,
    p: &Point,
    eps: f64,
    deltas: &[f64],
    cfg: &EstimateConfig,
    shadowed_memo: &mut HashSet<(usize, usize)>,
) -> Result<PointEstimate, ShadowError> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ShadowError::Schedule(
            "noise schedule must be nonempty and strictly decreasing".into(),
        ));
    }
    let mut search = cfg.search.clone();
    search.epsilon = eps;

    // adversarial trials first: they are the cheap refuters
    let mut plans: Vec<(usize, Arc<dyn NoiseStrategy>, usize, DurationLaw)> = Vec::new();
    for (k, s) in cfg.adversarial.iter().enumerate() {
        plans.push((k, s.clone(), cfg.adversarial_len, cfg.adversarial_duration));
    }
    for k in 0..cfg.trials_uniform {
        plans.push((
            cfg.adversarial.len() + k,
            Arc::new(UniformBall),
            cfg.base_len,
            cfg.duration,
        ));
    }

    let mut trials = Vec::new();
    let mut witness: Option<(f64, PseudoOrbit)> = None;
    let mut witnessed_levels = 0usize;
    for (di, &delta) in deltas.iter().enumerate() {
        let mut all_shadowed = true;
        let mut witnessed_here = false;
        for (trial, strategy, len, duration) in &plans {
            let spec = GenSpec {
                delta,
                duration: *duration,
                n_forward: *len,
                n_backward: if cfg.forward_only { 0 } else { *len },
                strategy: strategy.clone(),
                policy: TailPolicy::ExtendByOrbit,
            };
            let seed = mix64(mix64(cfg.seed, di as u64), *trial as u64);
            let orbit = crate::noise::generate_noisy(flow, p, &spec, seed)?;
            let outcome = if shadowed_memo.contains(&(di, *trial)) {
                "SHADOWED"
            } else {
                let verdict = decide_shadowing(flow, &orbit, &search)?;
                if verdict.is_shadowed() {
                    shadowed_memo.insert((di, *trial));
                } else if let Verdict::NotShadowedAtResolution { .. } = verdict {
                    if !witnessed_here {
                        witnessed_here = true;
                        witness = Some((delta, orbit.clone()));
                    }
                }
                verdict.tag()
            };
            trials.push(TrialRecord {
                delta,
                trial: *trial,
                strategy: strategy.name(),
                outcome: outcome.into(),
            });
            if outcome != "SHADOWED" {
                all_shadowed = false;
                if witnessed_here {
                    break; // this level cannot pass; move to the next
                }
            }
        }
        if witnessed_here {
            witnessed_levels += 1;
        }
        if all_shadowed {
            return Ok(PointEstimate {
                point: p.clone(),
                epsilon: eps,
                verdict: PointVerdict::Pass { delta },
                witness: None,
                trials,
            });
        }
    }
    let verdict = if witnessed_levels == deltas.len() {
        PointVerdict::Fail {
            delta: *deltas.last().unwrap(),
        }
    } else {
        PointVerdict::Unknown
    };
    Ok(PointEstimate {
        point: p.clone(),
        epsilon: eps,
        verdict,
        witness: witness.map(|(_, w)| w),
        trials,
    })
}

/// Estimate whether every small-noise pseudo-orbit through `p` is
/// eps-shadowable. PASS reports the largest level in the schedule at which
/// all trials were shadowed; FAIL requires a concrete unshadowed witness at
/// every level.
pub fn estimate_shadowable_point(
    flow: &dyn Flow,
    p: &Point,
    eps: f64,
    deltas: &[f64],
    cfg: &EstimateConfig,
) -> Result<PointEstimate, ShadowError> {
    estimate_point_with_memo(flow, p, eps, deltas, cfg, &mut HashSet::new())
}

#[derive(Debug, Clone, Serialize)]
pub struct SetEstimate {
    pub epsilons: Vec<f64>,
    pub samples: Vec<Point>,
    /// labels[sample][eps index]
    pub labels: Vec<Vec<PointVerdict>>,
    pub nesting_ok: bool,
    /// (sample index, eps index) pairs where PASS failed to persist upward.
    pub nesting_violations: Vec<(usize, usize)>,
}

/// Label sampled points per epsilon. Certificates from smaller epsilons are
/// reused at larger ones, which makes the sampled sets nested by
/// construction unless a verdict genuinely degrades.
pub fn estimate_shadowable_set(
    flow: &dyn Flow,
    n_samples: usize,
    sample_seed: u64,
    eps_schedule: &[f64],
    deltas: &[f64],
    cfg: &EstimateConfig,
) -> Result<SetEstimate, ShadowError> {
    if eps_schedule.is_empty() || eps_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ShadowError::Schedule(
            "epsilon schedule must be nonempty and strictly increasing".into(),
        ));
    }
    let samples = flow.space().sample(n_samples, sample_seed);
    let mut labels = Vec::with_capacity(samples.len());
    for p in &samples {
        let mut memo = HashSet::new();
        let mut per_eps = Vec::with_capacity(eps_schedule.len());
        for &eps in eps_schedule {
            let est = estimate_point_with_memo(flow, p, eps, deltas, cfg, &mut memo)?;
            per_eps.push(est.verdict);
        }
        labels.push(per_eps);
    }
    let mut violations = Vec::new();
    for (si, row) in labels.iter().enumerate() {
        for ei in 0..row.len().saturating_sub(1) {
            if matches!(row[ei], PointVerdict::Pass { .. })
                && !matches!(row[ei + 1], PointVerdict::Pass { .. })
            {
                violations.push((si, ei));
            }
        }
    }
    Ok(SetEstimate {
        epsilons: eps_schedule.to_vec(),
        samples,
        nesting_ok: violations.is_empty(),
        nesting_violations: violations,
        labels,
    })
}
