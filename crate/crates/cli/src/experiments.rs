//! Experiment drivers. Each cell of a grid is independent; cells run on the
//! rayon pool and results come back in grid order.

use anyhow::{bail, ensure, Context, Result};
use onerun::auditor::{
    audit_run_stream, sample_selection, trial_rng, AuditConfig, GuessVector, Mechanism, SelectionVector,
};
use onerun::bounds::{eps_lower_bound, p_value_audit, ConfidenceLevel, GuessSummary, PrivacyParams};
use onerun::dpsgd::{
    dirac_canaries, synthetic_dataset, theoretical_eps_upper, DpsgdMechanism, Example, Init, LossKind, LossModel,
    ScoreKind, SyntheticData, TrainerConfig,
};
use onerun::mechanisms::{
    expected_correct_gaussian, gaussian_dp_eps, pathological, pathological_branch, randomized_response,
    GaussianReportConfig, PathologicalConfig, RRConfig,
};
use rand_chacha::ChaCha20Rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::FlatConfig;

pub const DEFAULT_DELTA: f64 = 1e-5;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

fn conf_level(confidence: f64) -> Result<ConfidenceLevel> {
    ConfidenceLevel::from_confidence(confidence).context("invalid confidence")
}

/// Powers of two `2, 4, …, 2^max_pow`.
pub fn powers_of_two(max_pow: u32) -> Vec<u64> {
    (1..=max_pow).map(|k| 1u64 << k).collect()
}

/// Powers of two up to `2^14`, plus the decimal anchors 10, 100, 1000, 10000.
pub fn default_pure_grid() -> Vec<u64> {
    let mut g = powers_of_two(14);
    g.extend([10, 100, 1000, 10_000]);
    g.sort_unstable();
    g.dedup();
    g
}

/// Powers of two up to `2^14`, refined to steps of 10 on `[1000, 2000]`
/// where the lower bound peaks for `σ = 2`, `m = 10^5`.
pub fn default_gaussian_grid() -> Vec<u64> {
    let mut g = powers_of_two(14);
    g.extend((1000..=2000).step_by(10));
    g.sort_unstable();
    g.dedup();
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureRow {
    pub r: u64,
    pub v: u64,
    pub eps_lb: f64,
}

/// Randomized response guessing with exactly `⌊r e^ε/(e^ε+1)⌋` correct, `δ = 0`.
pub fn experiment_pure(eps: f64, grid: &[u64], confidence: f64) -> Result<Vec<PureRow>> {
    let accuracy = RRConfig::new(eps)?.accuracy();
    let level = conf_level(confidence)?;
    grid.par_iter()
        .map(|&r| {
            ensure!(r > 0, "grid entries must be positive");
            let v = (r as f64 * accuracy).floor() as u64;
            Ok(PureRow {
                r,
                v,
                eps_lb: eps_lower_bound(r, r, v, 0.0, level)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRow {
    pub sigma: f64,
    pub m: u64,
    pub r: u64,
    pub v: u64,
    pub delta: f64,
    pub confidence: f64,
    pub eps_lb: f64,
    /// `ε` of the Gaussian mechanism itself at this `δ`.
    pub eps_upper: f64,
}

/// Idealized Gaussian scores: expected correct guesses per `r`, then the
/// lower bound per `(r, δ, confidence)` cell.
pub fn experiment_gaussian(
    sigma: f64,
    m: u64,
    r_grid: &[u64],
    delta_grid: &[f64],
    conf_grid: &[f64],
) -> Result<Vec<GaussianRow>> {
    let mech = GaussianReportConfig::new(sigma)?;
    let mut cells = Vec::new();
    for &r in r_grid {
        for &delta in delta_grid {
            for &confidence in conf_grid {
                cells.push((r, delta, confidence));
            }
        }
    }
    let expected: Vec<_> = r_grid
        .par_iter()
        .map(|&r| expected_correct_gaussian(m, r, sigma).map(|e| (r, e.v)))
        .collect::<Result<_, _>>()?;
    let v_of = |r: u64| expected.iter().find(|(rr, _)| *rr == r).map(|(_, v)| *v).expect("r in grid");
    cells
        .par_iter()
        .map(|&(r, delta, confidence)| {
            let v = v_of(r);
            let eps_lb = eps_lower_bound(m, r, v, delta, conf_level(confidence)?)?;
            let eps_upper = if delta > 0.0 { gaussian_dp_eps(mech.rho(), delta)? } else { f64::INFINITY };
            Ok(GaussianRow {
                sigma,
                m,
                r,
                v,
                delta,
                confidence,
                eps_lb,
                eps_upper,
            })
        })
        .collect()
}

/// Row with the largest lower bound among those at `delta` and `confidence`.
pub fn best_gaussian_row(rows: &[GaussianRow], delta: f64, confidence: f64) -> Option<&GaussianRow> {
    rows.iter()
        .filter(|r| r.delta == delta && r.confidence == confidence)
        .fold(None, |best: Option<&GaussianRow>, row| match best {
            Some(b) if b.eps_lb >= row.eps_lb => Some(b),
            _ => Some(row),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathologicalRow {
    pub v: u64,
    pub empirical: f64,
    pub bound: f64,
    pub mc_sigma: f64,
    /// `(empirical - bound) / mc_sigma`; positive values exceed the bound.
    pub excess_sigmas: f64,
}

/// Parameters of the pathological mechanism. With `δ = 0` the boost never
/// fires and the mechanism is randomized response on the first `r` examples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathologicalSetting {
    pub m: u64,
    pub r: u64,
    pub eps: f64,
    pub delta: f64,
    pub beta: f64,
}

impl PathologicalSetting {
    pub fn new(m: u64, r: u64, eps: f64, delta: f64, beta: f64) -> Result<Self> {
        let s = Self { m, r, eps, delta, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta == 0.0 {
            ensure!(self.r >= 1 && self.r <= self.m, "r must lie in 1..={}, got {}", self.m, self.r);
            RRConfig::new(self.eps)?;
            ensure!((0.0..=1.0).contains(&self.beta), "beta must lie in [0, 1]");
        } else {
            self.config()?;
        }
        Ok(())
    }

    fn config(&self) -> Result<PathologicalConfig> {
        Ok(PathologicalConfig::new(self.m, self.r, self.eps, self.delta, self.beta)?)
    }

    fn sample(&self, s: &SelectionVector, forced: bool, rng: &mut ChaCha20Rng) -> Result<GuessVector> {
        if self.delta > 0.0 {
            let cfg = self.config()?;
            return Ok(if forced { pathological_branch(s, &cfg, true, rng)? } else { pathological(s, &cfg, rng)? });
        }
        let mut t = randomized_response(s, &RRConfig::new(self.eps)?, rng).as_slice().to_vec();
        t[self.r as usize..].fill(0);
        Ok(GuessVector::new(t)?)
    }

    /// Per-guess accuracy when the boost fires.
    pub fn boosted_accuracy(&self) -> Result<f64> {
        Ok(if self.delta > 0.0 { self.config()?.boosted_accuracy() } else { RRConfig::new(self.eps)?.accuracy() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathologicalReport {
    pub setting: PathologicalSetting,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<PathologicalRow>,
    /// Rows more than 3 Monte-Carlo sigmas above the bound.
    pub violations: usize,
    pub max_excess_sigmas: f64,
    pub boosted_accuracy_formula: f64,
    pub boosted_accuracy_empirical: f64,
    pub boosted_accuracy_sigma: f64,
}

fn correct_count(s: &[i8], t: &[i8]) -> u64 {
    s.iter().zip(t).filter(|(a, b)| a == b).count() as u64
}

/// Monte-Carlo `Pr[W >= v]` for the pathological mechanism against the
/// p-value bound, over every `v` from `r/2` to `r`.
pub fn pathological_check(cfg: &PathologicalSetting, trials: u64, seed: u64) -> Result<PathologicalReport> {
    ensure!(trials > 0, "trials must be positive");
    cfg.validate()?;
    let (m, r) = (cfg.m as usize, cfg.r);
    let counts: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let s = sample_selection(m, &mut rng);
            let g = cfg.sample(&s, false, &mut rng)?;
            Ok(correct_count(s.as_slice(), g.as_slice()))
        })
        .collect::<Result<_>>()?;
    let mut hist = vec![0u64; r as usize + 2];
    for &w in &counts {
        hist[w as usize] += 1;
    }
    let mut at_least = vec![0u64; r as usize + 2];
    for v in (0..=r as usize).rev() {
        at_least[v] = at_least[v + 1] + hist[v];
    }
    let params = PrivacyParams::new(cfg.eps, cfg.delta)?;
    let n = trials as f64;
    let rows: Vec<PathologicalRow> = (r / 2..=r)
        .map(|v| {
            let empirical = at_least[v as usize] as f64 / n;
            let bound = p_value_audit(&GuessSummary::from_totals(cfg.m, r, v)?, &params);
            let mc_sigma = (bound * (1.0 - bound) / n).sqrt().max(1.0 / n);
            Ok(PathologicalRow {
                v,
                empirical,
                bound,
                mc_sigma,
                excess_sigmas: (empirical - bound) / mc_sigma,
            })
        })
        .collect::<Result<_>>()?;
    let violations = rows.iter().filter(|row| row.excess_sigmas > 3.0).count();
    let max_excess_sigmas = rows.iter().map(|row| row.excess_sigmas).fold(f64::NEG_INFINITY, f64::max);

    let branch_trials = trials.min(20_000);
    let hits: u64 = (0..branch_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed ^ 0x5_eedb_0057, t);
            let s = sample_selection(m, &mut rng);
            let g = cfg.sample(&s, true, &mut rng)?;
            Ok(correct_count(s.as_slice(), g.as_slice()))
        })
        .sum::<Result<u64>>()?;
    let guesses = (branch_trials * r) as f64;
    let formula = cfg.boosted_accuracy()?;
    Ok(PathologicalReport {
        setting: *cfg,
        trials,
        seed,
        rows,
        violations,
        max_excess_sigmas,
        boosted_accuracy_formula: formula,
        boosted_accuracy_empirical: hits as f64 / guesses,
        boosted_accuracy_sigma: (formula * (1.0 - formula) / guesses).sqrt(),
    })
}

/// One DP-SGD audit setting, usually read from a flat config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpsgdAuditSpec {
    pub seed: u64,
    pub repetitions: u64,
    pub m: usize,
    pub dim: usize,
    pub ell: usize,
    pub clip: f64,
    pub sigma: f64,
    pub q: f64,
    pub learning_rate: f64,
    pub init_scale: f64,
    pub loss: LossKind,
    pub score: ScoreKind,
    /// Dirac canaries when true, mislabeled synthetic examples otherwise.
    pub dirac: bool,
    pub data_count: usize,
    pub label_noise: f64,
    pub k_plus: usize,
    pub k_minus: usize,
    pub delta: f64,
    pub confidence: f64,
}

fn parse_loss(s: &str) -> Result<LossKind> {
    Ok(match s {
        "canary-only" => LossKind::CanaryOnly,
        "logistic" => LossKind::Logistic,
        "linear" => LossKind::Linear,
        other => bail!("config key `loss`: unknown value `{other}` (canary-only, logistic, linear)"),
    })
}

fn parse_score(s: &str) -> Result<ScoreKind> {
    Ok(match s {
        "white-box" => ScoreKind::WhiteBox,
        "black-box" => ScoreKind::BlackBox,
        other => bail!("config key `score`: unknown value `{other}` (white-box, black-box)"),
    })
}

impl DpsgdAuditSpec {
    pub fn from_config(cfg: &FlatConfig) -> Result<Self> {
        let loss = parse_loss(cfg.raw("loss").unwrap_or("canary-only"))?;
        let score = parse_score(cfg.raw("score").unwrap_or("white-box"))?;
        let dirac = match cfg.raw("canary").unwrap_or(if loss == LossKind::CanaryOnly { "dirac" } else { "mislabeled" }) {
            "dirac" => true,
            "mislabeled" => false,
            other => bail!("config key `canary`: unknown value `{other}` (dirac, mislabeled)"),
        };
        let m: usize = cfg.require("m")?;
        let spec = Self {
            seed: cfg.get_or("seed", 0)?,
            repetitions: cfg.get_or("repetitions", 1)?,
            m,
            dim: cfg.get_or("dim", m)?,
            ell: cfg.require("ell")?,
            clip: cfg.get_or("clip", 1.0)?,
            sigma: cfg.require("sigma")?,
            q: cfg.get_or("q", 1.0)?,
            learning_rate: cfg.get_or("learning_rate", 1.0)?,
            init_scale: cfg.get_or("init_scale", 0.0)?,
            loss,
            score,
            dirac,
            data_count: cfg.get_or("data_count", 0)?,
            label_noise: cfg.get_or("label_noise", 0.0)?,
            k_plus: cfg.get_or("k_plus", m / 20)?,
            k_minus: cfg.get_or("k_minus", m / 20)?,
            delta: cfg.get_or("delta", DEFAULT_DELTA)?,
            confidence: cfg.get_or("confidence", DEFAULT_CONFIDENCE)?,
        };
        cfg.reject_unknown()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn trainer(&self) -> Result<TrainerConfig> {
        let cfg = TrainerConfig::new(self.ell, self.clip, self.sigma, self.q, self.learning_rate, self.dim)
            .context("trainer settings")?;
        Ok(if self.init_scale > 0.0 {
            cfg.with_init(Init::Gaussian {
                scale: self.init_scale,
                seed: self.seed,
            })
        } else {
            cfg
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.trainer()?;
        ensure!(self.repetitions >= 1, "config key `repetitions`: must be at least 1");
        ensure!(self.m >= 1, "config key `m`: must be at least 1");
        if self.dirac {
            ensure!(self.m <= self.dim, "config key `m`: {} Dirac canaries need dim >= m (dim = {})", self.m, self.dim);
        }
        ensure!(
            self.k_plus + self.k_minus <= self.m,
            "config key `k_plus`: k_plus + k_minus = {} exceeds m = {}",
            self.k_plus + self.k_minus,
            self.m
        );
        ensure!(self.delta > 0.0 && self.delta < 1.0, "config key `delta`: must be in (0, 1)");
        conf_level(self.confidence).context("config key `confidence`")?;
        Ok(())
    }

    fn mechanism(&self, rep: u64) -> Result<DpsgdMechanism> {
        let mut rng = trial_rng(self.seed ^ 0x0da7_a5e7_u64, rep);
        let w_star: Vec<f64> = (0..self.dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let data_kind = if self.loss == LossKind::Linear { LossKind::Linear } else { LossKind::Logistic };
        let data = if self.data_count > 0 && self.loss != LossKind::CanaryOnly {
            let spec = SyntheticData {
                dim: self.dim,
                count: self.data_count,
                label_noise: self.label_noise,
            };
            synthetic_dataset(data_kind, &spec, &w_star, &mut rng)?
        } else {
            Vec::new()
        };
        let canaries = if self.dirac {
            dirac_canaries(self.m, self.dim, self.clip, &mut rng)?
                .into_iter()
                .map(Example::Dirac)
                .collect()
        } else {
            let flipped = if data_kind == LossKind::Linear { 0.0 } else { 1.0 };
            let spec = SyntheticData {
                dim: self.dim,
                count: self.m,
                label_noise: flipped,
            };
            let mut c = synthetic_dataset(data_kind, &spec, &w_star, &mut rng)?;
            if data_kind == LossKind::Linear {
                // push linear canaries far from the regression surface
                for ex in &mut c {
                    if let Example::Labeled { y, .. } = ex {
                        *y = -*y + 3.0;
                    }
                }
            }
            c
        };
        Ok(DpsgdMechanism {
            cfg: self.trainer()?,
            loss: LossModel::new(self.loss),
            data,
            canaries,
            score: self.score,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpsgdRun {
    pub repetition: u64,
    pub k_plus: u64,
    pub k_minus: u64,
    pub v: u64,
    pub eps_lb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpsgdAuditReport {
    pub spec: DpsgdAuditSpec,
    pub theoretical_eps_upper: f64,
    /// `gaussian-curve` for full batches, `rdp-order-2` otherwise.
    pub upper_accountant: String,
    pub runs: Vec<DpsgdRun>,
    pub mean_eps_lb: f64,
    pub fraction_within_upper: f64,
}

pub fn dpsgd_audit(spec: &DpsgdAuditSpec) -> Result<DpsgdAuditReport> {
    spec.validate()?;
    let upper = theoretical_eps_upper(&spec.trainer()?, spec.delta)?;
    let mut audit = AuditConfig::new(spec.m, spec.k_plus, spec.k_minus, spec.delta);
    audit.confidences = vec![spec.confidence];
    let runs: Vec<DpsgdRun> = (0..spec.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mech = spec.mechanism(rep)?;
            let report = audit_run_stream(&mech, &audit, spec.seed, rep)?;
            Ok(DpsgdRun {
                repetition: rep,
                k_plus: report.summary.k_plus(),
                k_minus: report.summary.k_minus(),
                v: report.summary.v(),
                eps_lb: report.eps_lb[0].eps_lb,
            })
        })
        .collect::<Result<_>>()?;
    let n = runs.len() as f64;
    Ok(DpsgdAuditReport {
        spec: spec.clone(),
        theoretical_eps_upper: upper,
        upper_accountant: if spec.q >= 1.0 { "gaussian-curve" } else { "rdp-order-2" }.into(),
        mean_eps_lb: runs.iter().map(|r| r.eps_lb).sum::<f64>() / n,
        fraction_within_upper: runs.iter().filter(|r| r.eps_lb <= upper).count() as f64 / n,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimMechanism {
    RandomizedResponse { eps: f64 },
    Gaussian { sigma: f64 },
    Pathological { r: u64, eps: f64, delta: f64, beta: f64 },
}

/// Repeated seeded audits of a simulated mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulateSpec {
    pub mechanism: SimMechanism,
    pub m: usize,
    pub k_plus: usize,
    pub k_minus: usize,
    pub delta: f64,
    pub confidence: f64,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub spec: SimulateSpec,
    pub declared_eps: f64,
    pub mean_v: f64,
    pub mean_r: f64,
    pub mean_eps_lb: f64,
    /// Runs whose lower bound exceeds the declared `ε`.
    pub exceed_count: u64,
    pub exceed_fraction: f64,
}

pub fn simulate(spec: &SimulateSpec) -> Result<SimulateReport> {
    ensure!(spec.trials > 0, "trials must be positive");
    let mech: Box<dyn Mechanism + Sync> = match spec.mechanism {
        SimMechanism::RandomizedResponse { eps } => Box::new(RRConfig::new(eps)?),
        SimMechanism::Gaussian { sigma } => Box::new(GaussianReportConfig::new(sigma)?),
        SimMechanism::Pathological { r, eps, delta, beta } => {
            Box::new(PathologicalConfig::new(spec.m as u64, r, eps, delta, beta)?)
        }
    };
    let declared = mech
        .declared_eps(spec.delta)
        .with_context(|| format!("{} has no guarantee at delta = {}", mech.name(), spec.delta))?;
    let mut audit = AuditConfig::new(spec.m, spec.k_plus, spec.k_minus, spec.delta);
    audit.confidences = vec![spec.confidence];
    let results: Vec<(u64, u64, f64)> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let rep = audit_run_stream(mech.as_ref(), &audit, spec.seed, t)?;
            Ok((rep.summary.v(), rep.summary.r(), rep.eps_lb[0].eps_lb))
        })
        .collect::<Result<_>>()?;
    let n = spec.trials as f64;
    let exceed_count = results.iter().filter(|r| r.2 > declared).count() as u64;
    Ok(SimulateReport {
        spec: *spec,
        declared_eps: declared,
        mean_v: results.iter().map(|r| r.0 as f64).sum::<f64>() / n,
        mean_r: results.iter().map(|r| r.1 as f64).sum::<f64>() / n,
        mean_eps_lb: results.iter().map(|r| r.2).sum::<f64>() / n,
        exceed_count,
        exceed_fraction: exceed_count as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub m: u64,
    pub r: u64,
    pub v: u64,
    pub delta: f64,
    pub confidence: f64,
    pub eps_lb: f64,
}

/// Fixed guess counts, lower bound across `δ` and confidence levels.
pub fn delta_sweep(m: u64, r: u64, v: u64, delta_grid: &[f64], conf_grid: &[f64]) -> Result<Vec<DeltaRow>> {
    let cells: Vec<(f64, f64)> = delta_grid
        .iter()
        .flat_map(|&d| conf_grid.iter().map(move |&c| (d, c)))
        .collect();
    cells
        .par_iter()
        .map(|&(delta, confidence)| {
            Ok(DeltaRow {
                m,
                r,
                v,
                delta,
                confidence,
                eps_lb: eps_lower_bound(m, r, v, delta, conf_level(confidence)?)?,
            })
        })
        .collect()
}
