//! Run configuration: defaults, then a `key=value` file, then flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::Args;
use photonic_cz::analysis::DetectorLoss;

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file and then to the defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Flat `key=value` file; flags take precedence over its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    /// `pi`, `pi/<k>` or radians.
    #[arg(long, global = true)]
    pub phase: Option<String>,
    #[arg(long = "eta-min", global = true)]
    pub eta_min: Option<f64>,
    #[arg(long = "eta-max", global = true)]
    pub eta_max: Option<f64>,
    #[arg(long = "eta-step", global = true)]
    pub eta_step: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long = "p-herald", global = true)]
    pub p_herald: Option<f64>,
    /// Optimizer multistarts.
    #[arg(long, global = true)]
    pub starts: Option<usize>,
    /// `null-only` or `all`.
    #[arg(long = "detector-loss", global = true)]
    pub detector_loss: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub cutoff: Option<usize>,
    pub phase: Option<f64>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_step: f64,
    pub out: PathBuf,
    pub p_herald: f64,
    pub starts: usize,
    pub detector_loss: DetectorLoss,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 10_000,
            cutoff: None,
            phase: None,
            eta_min: 0.5,
            eta_max: 1.0,
            eta_step: 0.01,
            out: PathBuf::from("."),
            p_herald: 0.01,
            starts: 32,
            detector_loss: DetectorLoss::NullOnly,
        }
    }
}

pub fn parse_phase(text: &str) -> Result<f64, String> {
    let t = text.trim().to_ascii_lowercase();
    if t == "pi" {
        return Ok(PI);
    }
    if let Some(k) = t.strip_prefix("pi/") {
        let k: f64 = k.parse().map_err(|_| format!("bad phase divisor in {text:?}"))?;
        if k == 0.0 {
            return Err(format!("bad phase divisor in {text:?}"));
        }
        return Ok(PI / k);
    }
    t.parse()
        .map_err(|_| format!("bad phase {text:?}: expected pi, pi/<k> or radians"))
}

fn parse_loss(text: &str) -> Result<DetectorLoss, String> {
    match text.trim() {
        "null-only" => Ok(DetectorLoss::NullOnly),
        "all" => Ok(DetectorLoss::All),
        other => Err(format!("bad detector loss {other:?}: expected null-only or all")),
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("bad value {value:?} for {key}"))
}

impl RunConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "samples" => self.samples = parse(key, value)?,
            "cutoff" => self.cutoff = Some(parse(key, value)?),
            "phase" => self.phase = Some(parse_phase(value)?),
            "eta_min" => self.eta_min = parse(key, value)?,
            "eta_max" => self.eta_max = parse(key, value)?,
            "eta_step" => self.eta_step = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "p_herald" => self.p_herald = parse(key, value)?,
            "starts" => self.starts = parse(key, value)?,
            "detector_loss" => self.detector_loss = parse_loss(value)?,
            _ => return Err(format!("unknown config key {key:?}")),
        }
        Ok(())
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), n + 1))?;
            self.set(&key.trim().replace('-', "_"), value)
                .map_err(|e| format!("{}:{}: {e}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn resolve(o: &Overrides) -> Result<Self, String> {
        let mut c = RunConfig::default();
        if let Some(path) = &o.config {
            c.apply_file(path)?;
        }
        if let Some(v) = o.seed {
            c.seed = v;
        }
        if let Some(v) = o.samples {
            c.samples = v;
        }
        if let Some(v) = o.cutoff {
            c.cutoff = Some(v);
        }
        if let Some(v) = &o.phase {
            c.phase = Some(parse_phase(v)?);
        }
        if let Some(v) = o.eta_min {
            c.eta_min = v;
        }
        if let Some(v) = o.eta_max {
            c.eta_max = v;
        }
        if let Some(v) = o.eta_step {
            c.eta_step = v;
        }
        if let Some(v) = &o.out {
            c.out = v.clone();
        }
        if let Some(v) = o.p_herald {
            c.p_herald = v;
        }
        if let Some(v) = o.starts {
            c.starts = v;
        }
        if let Some(v) = &o.detector_loss {
            c.detector_loss = parse_loss(v)?;
        }
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<(), String> {
        if self.cutoff.is_some_and(|c| c < 3) {
            return Err("cutoff must be at least 3".into());
        }
        if self.samples == 0 {
            return Err("samples must be at least 1".into());
        }
        if !(self.p_herald > 0.0 && self.p_herald <= 1.0) {
            return Err("p_herald must lie in (0, 1]".into());
        }
        if self.starts == 0 {
            return Err("starts must be at least 1".into());
        }
        if !(self.eta_min > 0.0 && self.eta_min <= self.eta_max && self.eta_max <= 1.0 && self.eta_step > 0.0)
        {
            return Err("need 0 < eta_min <= eta_max <= 1 and eta_step > 0".into());
        }
        if let Some(phi) = self.phase {
            if !(phi > 0.0 && phi < 2.0 * PI) {
                return Err("phase must lie in (0, 2π)".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases() {
        assert_eq!(parse_phase("pi").unwrap(), PI);
        assert_eq!(parse_phase("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_phase("0.25").unwrap(), 0.25);
        assert!(parse_phase("tau").is_err());
        assert!(parse_phase("pi/0").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# run\nseed = 9\nsamples=20\nphase = pi/2\neta-step = 0.05\n",
        )
        .unwrap();
        let o = Overrides {
            config: Some(path),
            seed: Some(3),
            ..Default::default()
        };
        let c = RunConfig::resolve(&o).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.samples, 20);
        assert_eq!(c.phase, Some(PI / 2.0));
        assert_eq!(c.eta_step, 0.05);
    }

    #[test]
    fn bad_entries_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "colour = blue\n").unwrap();
        let o = Overrides {
            config: Some(path),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&o).unwrap_err().contains("unknown config key"));
        let o = Overrides {
            cutoff: Some(2),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&o).is_err());
        let o = Overrides {
            config: Some(PathBuf::from("/nonexistent/run.cfg")),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&o).unwrap_err().contains("cannot read config"));
    }
}
