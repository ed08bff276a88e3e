//! Flat `key = value` run configuration with command-line overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cache: PathBuf,
    pub out_dir: PathBuf,
    /// Output window in beta; the table itself always starts at 0.
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_step: f64,
    pub r_max: f64,
    pub r_step: f64,
    pub n_max: usize,
    pub seed: u64,
    /// Relative tolerance of the kernel march.
    pub tol: f64,
    pub energy_bins: usize,
    pub trials: usize,
    pub sigma: f64,
    /// Scaled parameter of the estimation experiment.
    pub beta: f64,
    /// Jump radii of the estimation shape.
    pub shape: Vec<f64>,
    /// Acceptance criteria run by `validate`; empty means all.
    pub criteria: Vec<u8>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cache: PathBuf::from("kernel.ktab"),
            out_dir: PathBuf::from("out"),
            beta_min: 0.0,
            beta_max: 20.0,
            beta_step: 0.1,
            r_max: 5.0,
            r_step: 0.05,
            n_max: 4,
            seed: 20_240_601,
            tol: 1e-7,
            energy_bins: 100,
            trials: 200,
            sigma: 0.05,
            beta: 1.0,
            shape: vec![1.0],
            criteria: Vec::new(),
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().with_context(|| format!("bad list entry {s:?}")))
        .collect()
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key; dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = |v: &str| v.parse::<f64>().with_context(|| format!("{key}: not a number: {v:?}"));
        let int = |v: &str| v.parse::<u64>().with_context(|| format!("{key}: not an integer: {v:?}"));
        match key.trim().replace('-', "_").as_str() {
            "cache" => self.cache = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "beta_min" => self.beta_min = num(value)?,
            "beta_max" => self.beta_max = num(value)?,
            "beta_step" => self.beta_step = num(value)?,
            "r_max" => self.r_max = num(value)?,
            "r_step" => self.r_step = num(value)?,
            "n_max" => self.n_max = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            "tol" => self.tol = num(value)?,
            "energy_bins" => self.energy_bins = int(value)? as usize,
            "trials" => self.trials = int(value)? as usize,
            "sigma" => self.sigma = num(value)?,
            "beta" => self.beta = num(value)?,
            "shape" => self.shape = parse_list(value)?,
            "criteria" => self.criteria = parse_list(value)?,
            other => bail!("unknown configuration key {other:?}"),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
            self.set(key, value).with_context(|| format!("line {}", lineno + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config {}", path.display()))
    }

    /// Text form that parses back to the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cache = {}", self.cache.display());
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        for (k, v) in [
            ("beta_min", self.beta_min),
            ("beta_max", self.beta_max),
            ("beta_step", self.beta_step),
            ("r_max", self.r_max),
            ("r_step", self.r_step),
            ("tol", self.tol),
            ("sigma", self.sigma),
            ("beta", self.beta),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        for (k, v) in [
            ("n_max", self.n_max as u64),
            ("seed", self.seed),
            ("energy_bins", self.energy_bins as u64),
            ("trials", self.trials as u64),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "shape = {}", join(&self.shape));
        let _ = writeln!(s, "criteria = {}", join(&self.criteria));
        s
    }

    /// Range and ordering checks, run before any computation.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta_max", self.beta_max),
            ("beta_step", self.beta_step),
            ("r_max", self.r_max),
            ("r_step", self.r_step),
            ("tol", self.tol),
            ("beta", self.beta),
        ];
        for (k, v) in positive {
            ensure!(v > 0.0 && v.is_finite(), "{k} must be positive, got {v}");
        }
        ensure!(
            self.beta_min >= 0.0 && self.beta_min < self.beta_max,
            "need 0 <= beta_min < beta_max, got {} and {}",
            self.beta_min,
            self.beta_max
        );
        ensure!(self.beta_step < self.beta_max, "beta_step must be smaller than beta_max");
        ensure!(self.r_step < self.r_max, "r_step must be smaller than r_max");
        ensure!(self.n_max >= 1, "n_max must be at least 1");
        if self.n_max > 4 {
            log::warn!("n_max = {} is expensive: the search grows like grid^n_max", self.n_max);
        }
        ensure!(self.energy_bins >= 2, "energy_bins must be at least 2");
        ensure!(self.trials >= 10, "trials must be at least 10");
        ensure!(self.sigma >= 0.0 && self.sigma.is_finite(), "sigma must be nonnegative");
        ensure!(
            !self.shape.is_empty() && self.shape.windows(2).all(|w| w[1] > w[0]) && self.shape[0] > 0.0,
            "shape radii must be positive and strictly increasing"
        );
        ensure!(
            self.criteria.iter().all(|c| (1..=8).contains(c)),
            "criteria are numbered 1 to 8"
        );
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("beta-max = 5\nr_step=0.1 # coarse\n\nshape = 0.5, 1.5\ncriteria = 2,7\n")
            .unwrap();
        assert_eq!(cfg.beta_max, 5.0);
        assert_eq!(cfg.r_step, 0.1);
        assert_eq!(cfg.shape, vec![0.5, 1.5]);
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_text("colour = red").is_err());
        assert!(cfg.apply_text("beta_max").is_err());
        cfg.beta_min = 30.0;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            r_step: -0.1,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
