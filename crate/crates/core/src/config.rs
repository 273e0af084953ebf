use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tolerance and sample count used by the pipelines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub real_tol: f64,
    pub root_tol: f64,
    pub rank_tol: f64,
    pub eig_sep: f64,
    pub group_tol: f64,
    pub pair_tol: f64,
    pub extend_tol: f64,
    pub rep_tol: f64,
    pub sos_tol: f64,
    pub sos_max_iters: usize,
    pub n_samples: usize,
    pub n_dirs: usize,
    pub variety_samples: usize,
    pub nonconvex_budget: usize,
    pub grid_size: usize,
    pub t_contraction: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            real_tol: 1e-7,
            root_tol: 1e-8,
            rank_tol: 1e-8,
            eig_sep: 1e-6,
            group_tol: 1e-8,
            pair_tol: 1e-8,
            extend_tol: 1e-8,
            rep_tol: 1e-8,
            sos_tol: 1e-6,
            sos_max_iters: 5000,
            n_samples: 200,
            n_dirs: 20,
            variety_samples: 40,
            nonconvex_budget: 2000,
            grid_size: 11,
            t_contraction: 0.995,
            seed: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("real_tol", self.real_tol),
            ("root_tol", self.root_tol),
            ("rank_tol", self.rank_tol),
            ("eig_sep", self.eig_sep),
            ("group_tol", self.group_tol),
            ("pair_tol", self.pair_tol),
            ("extend_tol", self.extend_tol),
            ("rep_tol", self.rep_tol),
            ("sos_tol", self.sos_tol),
        ];
        for (name, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_contraction > 0.0 && self.t_contraction <= 1.0) {
            return Err(Error::Invalid(format!(
                "t_contraction must lie in (0, 1], got {}",
                self.t_contraction
            )));
        }
        if self.grid_size == 0 {
            return Err(Error::Invalid("grid_size must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = Config::from_json(r#"{"seed": 9, "real_tol": 1e-6}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.real_tol, 1e-6);
        assert_eq!(cfg.rank_tol, 1e-8);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_json(r#"{"eig_sep": 0}"#).is_err());
        assert!(Config::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(Config::from_json(r#"{"t_contraction": 1.5}"#).is_err());
    }
}
