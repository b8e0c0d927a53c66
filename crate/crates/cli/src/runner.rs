//! Validated experiment definitions and their execution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::Instant;

use anyhow::{ensure, Result};
use onerun::bounds::{p_value_audit, p_value_general_p, GeneralPParams, GuessSummary, PrivacyParams};
use onerun::mechanisms::{gaussian_dp_eps, GaussianReportConfig};
use serde::Serialize;

use crate::experiments::{
    best_gaussian_row, delta_sweep, dpsgd_audit, experiment_gaussian, experiment_pure, pathological_check,
    simulate, DpsgdAuditSpec, PathologicalSetting, SimulateSpec,
};
use crate::output::{csv_string, sig6, ResultRow};

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    PValue {
        m: u64,
        k_plus: u64,
        k_minus: u64,
        v: u64,
        eps: f64,
        delta: f64,
        p_incl: Option<f64>,
    },
    EpsLb {
        m: u64,
        r: u64,
        v: u64,
        delta: f64,
        confidence: f64,
    },
    PureRr {
        eps: f64,
        r_grid: Vec<u64>,
        confidence: f64,
    },
    GaussianIdealized {
        sigma: f64,
        m: u64,
        r_grid: Vec<u64>,
        delta_grid: Vec<f64>,
        conf_grid: Vec<f64>,
    },
    DeltaSweep {
        m: u64,
        r: u64,
        v: u64,
        delta_grid: Vec<f64>,
        conf_grid: Vec<f64>,
    },
    PathologicalCheck {
        m: u64,
        r: u64,
        eps: f64,
        delta: f64,
        beta: f64,
        trials: u64,
        seed: u64,
    },
    DpsgdAudit(DpsgdAuditSpec),
    Simulate(SimulateSpec),
}

/// Everything a run produces; the binary decides where it goes.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
    /// One record per result, appended to `results.jsonl`.
    pub rows: Vec<ResultRow>,
    /// Full-precision CSV table, if the experiment has one.
    pub table: Option<String>,
    /// Structured report, appended to `<kind>-report.jsonl`.
    pub report: Option<serde_json::Value>,
}

fn inputs(pairs: &[(&str, &dyn Display)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn nonempty<T>(name: &str, xs: &[T]) -> Result<()> {
    ensure!(!xs.is_empty(), "--{name}: grid must not be empty");
    Ok(())
}

fn check_confidences(xs: &[f64]) -> Result<()> {
    for &c in xs {
        ensure!(c > 0.0 && c < 1.0, "confidence {c} must lie in (0, 1)");
    }
    Ok(())
}

fn check_deltas(xs: &[f64]) -> Result<()> {
    for &d in xs {
        ensure!((0.0..=1.0).contains(&d), "delta {d} must lie in [0, 1]");
    }
    Ok(())
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::PValue { .. } => "pvalue",
            Self::EpsLb { .. } => "epslb",
            Self::PureRr { .. } => "pure-rr",
            Self::GaussianIdealized { .. } => "gaussian-idealized",
            Self::DeltaSweep { .. } => "delta-sweep",
            Self::PathologicalCheck { .. } => "pathological-check",
            Self::DpsgdAudit(_) => "dpsgd-audit",
            Self::Simulate(_) => "simulate",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::PathologicalCheck { seed, .. } => Some(*seed),
            Self::DpsgdAudit(s) => Some(s.seed),
            Self::Simulate(s) => Some(s.seed),
            _ => None,
        }
    }

    /// Checks every parameter without running anything.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PValue {
                m,
                k_plus,
                k_minus,
                v,
                eps,
                delta,
                p_incl,
            } => {
                GuessSummary::new(*m, *k_plus, *k_minus, *v)?;
                PrivacyParams::new(*eps, *delta)?;
                if let Some(p) = p_incl {
                    GeneralPParams::new(*p)?;
                }
            }
            Self::EpsLb {
                m,
                r,
                v,
                delta,
                confidence,
            } => {
                GuessSummary::from_totals(*m, *r, *v)?;
                check_deltas(&[*delta])?;
                check_confidences(&[*confidence])?;
            }
            Self::PureRr {
                eps,
                r_grid,
                confidence,
            } => {
                ensure!(*eps >= 0.0 && eps.is_finite(), "--eps must be a finite value >= 0");
                nonempty("r-grid", r_grid)?;
                ensure!(r_grid.iter().all(|&r| r > 0), "--r-grid entries must be positive");
                check_confidences(&[*confidence])?;
            }
            Self::GaussianIdealized {
                sigma,
                m,
                r_grid,
                delta_grid,
                conf_grid,
            } => {
                GaussianReportConfig::new(*sigma)?;
                nonempty("r-grid", r_grid)?;
                nonempty("delta-grid", delta_grid)?;
                nonempty("conf-grid", conf_grid)?;
                for &r in r_grid {
                    ensure!(r > 0 && r <= *m, "--r-grid entry {r} must lie in 1..={m}");
                }
                check_deltas(delta_grid)?;
                check_confidences(conf_grid)?;
            }
            Self::DeltaSweep {
                m,
                r,
                v,
                delta_grid,
                conf_grid,
            } => {
                GuessSummary::from_totals(*m, *r, *v)?;
                nonempty("delta-grid", delta_grid)?;
                nonempty("conf-grid", conf_grid)?;
                check_deltas(delta_grid)?;
                check_confidences(conf_grid)?;
            }
            Self::PathologicalCheck {
                m,
                r,
                eps,
                delta,
                beta,
                trials,
                ..
            } => {
                PathologicalSetting::new(*m, *r, *eps, *delta, *beta)?;
                ensure!(*trials > 0, "--trials must be positive");
            }
            Self::DpsgdAudit(s) => s.validate()?,
            Self::Simulate(s) => {
                ensure!(s.trials > 0, "--trials must be positive");
                ensure!(s.k_plus + s.k_minus <= s.m, "--k-plus + --k-minus exceeds --m");
                check_deltas(&[s.delta])?;
                check_confidences(&[s.confidence])?;
            }
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Outcome> {
        self.validate()?;
        let start = Instant::now();
        let mut out = self.execute()?;
        let ms = start.elapsed().as_millis() as u64;
        for row in &mut out.rows {
            row.runtime_ms = ms;
        }
        Ok(out)
    }

    fn row(&self, inputs: BTreeMap<String, String>) -> ResultRow {
        ResultRow {
            command: self.kind().to_string(),
            inputs,
            p_value: None,
            eps_lb: None,
            confidence: None,
            runtime_ms: 0,
            seed: self.seed(),
        }
    }

    fn execute(&self) -> Result<Outcome> {
        let mut out = Outcome::default();
        match self {
            Self::PValue {
                m,
                k_plus,
                k_minus,
                v,
                eps,
                delta,
                p_incl,
            } => {
                let params = PrivacyParams::new(*eps, *delta)?;
                let p = match p_incl {
                    Some(pi) => p_value_general_p(*m, *k_plus, *k_minus, *v, &params, &GeneralPParams::new(*pi)?)?,
                    None => p_value_audit(&GuessSummary::new(*m, *k_plus, *k_minus, *v)?, &params),
                };
                let mut echo = inputs(&[
                    ("m", m),
                    ("k_plus", k_plus),
                    ("k_minus", k_minus),
                    ("v", v),
                    ("eps", eps),
                    ("delta", delta),
                ]);
                if let Some(pi) = p_incl {
                    echo.insert("p_incl".into(), pi.to_string());
                }
                out.lines.push(sig6(p));
                out.rows.push(ResultRow {
                    p_value: Some(p),
                    ..self.row(echo)
                });
            }
            Self::EpsLb {
                m,
                r,
                v,
                delta,
                confidence,
            } => {
                let rows = delta_sweep(*m, *r, *v, &[*delta], &[*confidence])?;
                let e = rows[0].eps_lb;
                out.lines.push(sig6(e));
                out.rows.push(ResultRow {
                    eps_lb: Some(e),
                    confidence: Some(*confidence),
                    ..self.row(inputs(&[("m", m), ("r", r), ("v", v), ("delta", delta)]))
                });
            }
            Self::PureRr {
                eps,
                r_grid,
                confidence,
            } => {
                let rows = experiment_pure(*eps, r_grid, *confidence)?;
                out.lines.push("r,v,eps_lb".into());
                for row in &rows {
                    out.lines.push(format!("{},{},{}", row.r, row.v, sig6(row.eps_lb)));
                    out.rows.push(ResultRow {
                        eps_lb: Some(row.eps_lb),
                        confidence: Some(*confidence),
                        ..self.row(inputs(&[("eps", eps), ("r", &row.r), ("v", &row.v)]))
                    });
                }
                out.table = Some(csv_string(&rows)?);
            }
            Self::GaussianIdealized {
                sigma,
                m,
                r_grid,
                delta_grid,
                conf_grid,
            } => {
                let rows = experiment_gaussian(*sigma, *m, r_grid, delta_grid, conf_grid)?;
                out.lines.push("r,v,delta,confidence,eps_lb,eps_upper".into());
                for row in &rows {
                    out.lines.push(format!(
                        "{},{},{},{},{},{}",
                        row.r,
                        row.v,
                        sig6(row.delta),
                        sig6(row.confidence),
                        sig6(row.eps_lb),
                        sig6(row.eps_upper)
                    ));
                    out.rows.push(ResultRow {
                        eps_lb: Some(row.eps_lb),
                        confidence: Some(row.confidence),
                        ..self.row(inputs(&[
                            ("sigma", sigma),
                            ("m", m),
                            ("r", &row.r),
                            ("v", &row.v),
                            ("delta", &row.delta),
                        ]))
                    });
                }
                let rho = GaussianReportConfig::new(*sigma)?.rho();
                let mut summary = Vec::new();
                for &delta in delta_grid {
                    let upper = if delta > 0.0 { gaussian_dp_eps(rho, delta)? } else { f64::INFINITY };
                    for &conf in conf_grid {
                        if let Some(best) = best_gaussian_row(&rows, delta, conf) {
                            out.lines.push(format!(
                                "# delta={} confidence={}: best r={} v={} eps_lb={} eps_upper={}",
                                sig6(delta),
                                sig6(conf),
                                best.r,
                                best.v,
                                sig6(best.eps_lb),
                                sig6(upper)
                            ));
                            summary.push(*best);
                        }
                    }
                }
                out.table = Some(csv_string(&rows)?);
                out.report = Some(serde_json::json!({
                    "kind": self.kind(),
                    "sigma": sigma,
                    "m": m,
                    "rho": rho,
                    "best": summary,
                }));
            }
            Self::DeltaSweep {
                m,
                r,
                v,
                delta_grid,
                conf_grid,
            } => {
                let rows = delta_sweep(*m, *r, *v, delta_grid, conf_grid)?;
                out.lines.push("delta,confidence,eps_lb".into());
                for row in &rows {
                    out.lines.push(format!("{},{},{}", sig6(row.delta), sig6(row.confidence), sig6(row.eps_lb)));
                    out.rows.push(ResultRow {
                        eps_lb: Some(row.eps_lb),
                        confidence: Some(row.confidence),
                        ..self.row(inputs(&[("m", m), ("r", r), ("v", v), ("delta", &row.delta)]))
                    });
                }
                out.table = Some(csv_string(&rows)?);
            }
            Self::PathologicalCheck {
                m,
                r,
                eps,
                delta,
                beta,
                trials,
                seed,
            } => {
                let cfg = PathologicalSetting::new(*m, *r, *eps, *delta, *beta)?;
                let rep = pathological_check(&cfg, *trials, *seed)?;
                out.lines.push("v,empirical,bound,excess_sigmas".into());
                for row in &rep.rows {
                    out.lines.push(format!(
                        "{},{},{},{}",
                        row.v,
                        sig6(row.empirical),
                        sig6(row.bound),
                        sig6(row.excess_sigmas)
                    ));
                }
                out.lines.push(format!(
                    "# violations (> 3 sigma): {}  max excess: {} sigma",
                    rep.violations,
                    sig6(rep.max_excess_sigmas)
                ));
                out.lines.push(format!(
                    "# forced branch accuracy: empirical {} formula {} (sigma {})",
                    sig6(rep.boosted_accuracy_empirical),
                    sig6(rep.boosted_accuracy_formula),
                    sig6(rep.boosted_accuracy_sigma)
                ));
                out.rows.push(self.row(inputs(&[
                    ("m", m),
                    ("r", r),
                    ("eps", eps),
                    ("delta", delta),
                    ("beta", beta),
                    ("trials", trials),
                ])));
                out.table = Some(csv_string(&rep.rows)?);
                out.report = Some(serde_json::to_value(&rep)?);
            }
            Self::DpsgdAudit(spec) => {
                let rep = dpsgd_audit(spec)?;
                out.lines.push("repetition,k_plus,k_minus,v,eps_lb".into());
                for run in &rep.runs {
                    out.lines.push(format!(
                        "{},{},{},{},{}",
                        run.repetition,
                        run.k_plus,
                        run.k_minus,
                        run.v,
                        sig6(run.eps_lb)
                    ));
                    let mut echo = spec_inputs(spec)?;
                    echo.insert("repetition".into(), run.repetition.to_string());
                    out.rows.push(ResultRow {
                        eps_lb: Some(run.eps_lb),
                        confidence: Some(spec.confidence),
                        ..self.row(echo)
                    });
                }
                out.lines.push(format!(
                    "# mean eps_lb {}  theoretical eps upper {} ({})",
                    sig6(rep.mean_eps_lb),
                    sig6(rep.theoretical_eps_upper),
                    rep.upper_accountant
                ));
                out.table = Some(csv_string(&rep.runs)?);
                out.report = Some(serde_json::to_value(&rep)?);
            }
            Self::Simulate(spec) => {
                let rep = simulate(spec)?;
                out.lines.push(format!(
                    "declared eps {}  mean eps_lb {}  exceeding {}/{} ({})",
                    sig6(rep.declared_eps),
                    sig6(rep.mean_eps_lb),
                    rep.exceed_count,
                    spec.trials,
                    sig6(rep.exceed_fraction)
                ));
                let mut echo = spec_inputs(spec)?;
                echo.insert("declared_eps".into(), rep.declared_eps.to_string());
                out.rows.push(ResultRow {
                    eps_lb: Some(rep.mean_eps_lb),
                    confidence: Some(spec.confidence),
                    ..self.row(echo)
                });
                out.report = Some(serde_json::to_value(rep)?);
            }
        }
        Ok(out)
    }
}

/// Flattens a serializable spec into string inputs for echoing.
fn spec_inputs<T: Serialize>(spec: &T) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    flatten("", &serde_json::to_value(spec)?, &mut map);
    Ok(map)
}

fn flatten(prefix: &str, v: &serde_json::Value, map: &mut BTreeMap<String, String>) {
    match v {
        serde_json::Value::Object(o) => {
            for (k, x) in o {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, map);
            }
        }
        serde_json::Value::String(s) => {
            map.insert(prefix.to_string(), s.clone());
        }
        other => {
            map.insert(prefix.to_string(), other.to_string());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_specs_are_rejected_before_running() {
        let bad = ExperimentSpec::EpsLb {
            m: 10,
            r: 11,
            v: 3,
            delta: 0.0,
            confidence: 0.95,
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentSpec::PureRr {
            eps: 1.0,
            r_grid: vec![],
            confidence: 0.95,
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentSpec::PathologicalCheck {
            m: 1000,
            r: 100,
            eps: 1.0,
            delta: 0.1,
            beta: 0.05,
            trials: 10,
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pvalue_row_echoes_inputs() {
        let spec = ExperimentSpec::PValue {
            m: 2,
            k_plus: 2,
            k_minus: 0,
            v: 2,
            eps: 0.0,
            delta: 0.1,
            p_incl: None,
        };
        let out = spec.run().unwrap();
        assert_eq!(out.lines, vec!["0.45".to_string()]);
        let row = &out.rows[0];
        assert_eq!(row.inputs["delta"], "0.1");
        assert!((row.p_value.unwrap() - 0.45).abs() < 1e-14);
    }

    #[test]
    fn flatten_nested_specs() {
        let mut map = BTreeMap::new();
        flatten("", &serde_json::json!({"a": {"b": 1, "c": "x"}, "d": 2.5}), &mut map);
        assert_eq!(map["a.b"], "1");
        assert_eq!(map["a.c"], "x");
        assert_eq!(map["d"], "2.5");
    }
}
