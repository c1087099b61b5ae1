use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use log::{info, warn};

use crate::attacks::{AttackConfig, SecondAttackConfig, SecondAttackKind};
use crate::clever::{clever_score, CleverConfig, CleverPreset};
use crate::error::{Error, Result};
use crate::evaluation::{
    default_eps_grid, evaluate, tradeoff_study, Dataset, EvaluationConfig, EvaluationReport,
    RadiusPolicy, TradeoffConfig, TradeoffRow,
};
use crate::geometry::NormKind;
use crate::nn::{Classifier, Network};
use crate::rng::image_seed;

use super::report::format_float;
use super::{load_dataset, load_model, write_report};

/// `--second` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SecondChoice {
    /// The usual attack for the norm.
    #[default]
    Auto,
    Kind(SecondAttackKind),
    None,
}

impl FromStr for SecondChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(SecondChoice::Auto),
            "none" => Ok(SecondChoice::None),
            other => other.parse().map(SecondChoice::Kind),
        }
    }
}

/// Everything a run needs. There is no wall-clock seeding; `seed` is required.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: PathBuf,
    pub data: PathBuf,
    pub norm: NormKind,
    /// Defaults per norm when absent.
    pub eps_step: Option<f64>,
    pub max_iters: Option<usize>,
    pub second: SecondChoice,
    pub second_iterations: Option<usize>,
    pub clever_preset: CleverPreset,
    pub radius_policy: RadiusPolicy,
    pub eps_grid: Option<Vec<f64>>,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    /// Only the first `limit` rows are used.
    pub limit: Option<usize>,
}

impl RunConfig {
    pub fn new(model: impl Into<PathBuf>, data: impl Into<PathBuf>, norm: NormKind, seed: u64, out: impl Into<PathBuf>) -> Self {
        Self {
            model: model.into(),
            data: data.into(),
            norm,
            eps_step: None,
            max_iters: None,
            second: SecondChoice::Auto,
            second_iterations: None,
            clever_preset: CleverPreset::default(),
            radius_policy: RadiusPolicy::GlobalMax,
            eps_grid: None,
            seed,
            out: out.into(),
            workers: None,
            limit: None,
        }
    }

    pub fn attack_config(&self) -> AttackConfig<f64> {
        let mut cfg = AttackConfig::defaults_for(self.norm).with_seed(self.seed);
        if let Some(e) = self.eps_step {
            cfg.eps_step = e;
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m;
        }
        cfg
    }

    pub fn second_config(&self) -> Option<SecondAttackConfig<f64>> {
        let mut cfg = match self.second {
            SecondChoice::None => return None,
            SecondChoice::Auto => SecondAttackConfig::for_norm(self.norm),
            SecondChoice::Kind(kind) => {
                let mut c = SecondAttackConfig::for_norm(self.norm);
                c.kind = kind;
                c
            }
        };
        if let Some(it) = self.second_iterations {
            cfg.iterations = it;
        }
        Some(cfg)
    }

    pub fn evaluation_config(&self, with_clever: bool) -> EvaluationConfig<f64> {
        EvaluationConfig {
            attack: self.attack_config(),
            second: self.second_config(),
            clever: with_clever.then_some(self.clever_preset),
            radius_policy: self.radius_policy,
            eps_grid: self.eps_grid.clone().unwrap_or_else(|| default_eps_grid(self.norm)),
            seed: self.seed,
            workers: self.workers,
        }
    }

    /// Checks the configuration and loads the model and dataset.
    pub fn load(&self) -> Result<(Network<f64>, Dataset<f64>)> {
        for (what, p) in [("model", &self.model), ("dataset", &self.data)] {
            if !p.is_file() {
                return Err(Error::config(format!("{what} file {} does not exist", p.display())));
            }
        }
        self.evaluation_config(true).validate()?;
        let net = load_model(&self.model)?;
        let mut data = load_dataset(&self.data)?;
        if let Some(n) = self.limit {
            data = data.take(n);
        }
        data.check_against(&net)?;
        info!("loaded {} rows from {}", data.len(), self.data.display());
        Ok((net, data))
    }
}

fn log_report(report: &EvaluationReport<f64>) {
    info!(
        "mean adversarial distance {:.6} over {} records",
        report.mean_adversarial_distance,
        report.records.len()
    );
    if report.all_attacks_failed {
        warn!("every attack failed; the mean is the raw budget and carries no information");
    }
}

/// Attacks only; writes `records.csv`, `summary.csv` and `distances.svg`.
pub fn run_attack(cfg: &RunConfig) -> Result<EvaluationReport<f64>> {
    let (net, data) = cfg.load()?;
    let report = evaluate(&net, &data, &cfg.evaluation_config(false))?;
    log_report(&report);
    write_report(Some(&report), None, &cfg.out)?;
    Ok(report)
}

/// Attacks, then CLEVER at the largest distance found.
pub fn run_evaluate(cfg: &RunConfig) -> Result<EvaluationReport<f64>> {
    let (net, data) = cfg.load()?;
    let report = evaluate(&net, &data, &cfg.evaluation_config(true))?;
    log_report(&report);
    if let Some(err) = report.clever_error_ratio {
        info!("CLEVER exceeds the attack distance on {:.2}% of images", 100.0 * err);
    }
    write_report(Some(&report), None, &cfg.out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleverRow {
    pub index: usize,
    pub true_label: usize,
    pub predicted_label: usize,
    /// Absent for misclassified rows.
    pub score: Option<f64>,
    pub capped: Option<bool>,
}

/// CLEVER at a fixed radius; writes `clever.csv`.
pub fn run_clever(cfg: &RunConfig, radius: f64) -> Result<Vec<CleverRow>> {
    use rayon::prelude::*;
    let (net, data) = cfg.load()?;
    let base = CleverConfig::new(radius, cfg.norm, cfg.clever_preset);
    base.validate()?;
    let compute = || {
        (0..data.len())
            .into_par_iter()
            .map(|i| {
                let x = &data.inputs[i];
                let predicted = net.forward(x)?.label;
                let mut row = CleverRow {
                    index: i,
                    true_label: data.labels[i],
                    predicted_label: predicted,
                    score: None,
                    capped: None,
                };
                if predicted == data.labels[i] {
                    let s = clever_score(&net, x, &base.with_seed(image_seed(cfg.seed, i)))?;
                    row.score = Some(s.score);
                    row.capped = Some(s.capped);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    };
    let rows = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config(e.to_string()))?
            .install(compute)?,
        None => compute()?,
    };
    let mut csv = String::from("index,true_label,predicted_label,clever_score,capped\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.index,
            r.true_label,
            r.predicted_label,
            r.score.map(format_float).unwrap_or_default(),
            r.capped.map(|c| c.to_string()).unwrap_or_default()
        );
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let path = cfg.out.join("clever.csv");
    fs::write(&path, csv).map_err(|e| Error::io(path, e))?;
    Ok(rows)
}

/// Early-stopping attack at `eps_step / 2^k` for `k = 0..=halvings`, all
/// with the total budget `eps_step · max_iters`. Writes `tradeoff.csv`
/// and `tradeoff.svg`.
pub fn run_tradeoff(cfg: &RunConfig, halvings: usize, repeats: usize) -> Result<Vec<TradeoffRow<f64>>> {
    let (net, data) = cfg.load()?;
    let attack = cfg.attack_config();
    let tcfg = TradeoffConfig {
        norm: cfg.norm,
        eps_steps: (0..=halvings).map(|k| attack.eps_step / f64::powi(2.0, k as i32)).collect(),
        budget: attack.budget(),
        repeats,
        seed: cfg.seed,
    };
    let rows = tradeoff_study(&net, &data, &tcfg)?;
    for r in &rows {
        info!(
            "eps_step {:.3e}: mean {:.6}, {:.3}s",
            r.eps_step,
            r.mean_distance,
            r.runtime.as_secs_f64()
        );
    }
    write_report::<f64>(None, Some(&rows), &cfg.out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_choice_parses() {
        assert_eq!("auto".parse::<SecondChoice>().unwrap(), SecondChoice::Auto);
        assert_eq!("none".parse::<SecondChoice>().unwrap(), SecondChoice::None);
        assert_eq!(
            "cw".parse::<SecondChoice>().unwrap(),
            SecondChoice::Kind(SecondAttackKind::CarliniWagnerL2)
        );
        assert!("bim".parse::<SecondChoice>().is_err());
    }

    #[test]
    fn auto_picks_the_norm_default() {
        let mut cfg = RunConfig::new("m", "d", NormKind::One, 1, "o");
        assert_eq!(cfg.second_config().unwrap().kind, SecondAttackKind::EadL1);
        cfg.second = SecondChoice::None;
        assert!(cfg.second_config().is_none());
        cfg.eps_step = Some(0.5);
        assert_eq!(cfg.attack_config().eps_step, 0.5);
    }

    #[test]
    fn missing_files_are_config_errors() {
        let cfg = RunConfig::new("/no/such/model.json", "/no/such/data.csv", NormKind::Two, 0, "/tmp/x");
        let err = cfg.load().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn mismatched_second_attack_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.json");
        let d = dir.path().join("d.csv");
        fs::write(&m, r#"{"num_classes":2,"layers":[{"type":"dense","weights":[[1,0],[0,1]],"bias":[0,0]}]}"#).unwrap();
        fs::write(&d, "label,f0,f1\n0,0.9,0.1\n").unwrap();
        let mut cfg = RunConfig::new(&m, &d, NormKind::Infinity, 0, dir.path().join("out"));
        cfg.second = SecondChoice::Kind(SecondAttackKind::CarliniWagnerL2);
        assert!(matches!(cfg.load(), Err(Error::Config(_))));
    }
}
