use clap::{Args, ValueEnum};
use serde::Serialize;
use sos_transport::transport::SearchConfig;
use sos_transport::CertifyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Text,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Eigenvalue tolerance, relative to max(1, max|p_γ|).
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_eig: f64,
    /// Coefficient tolerance, relative to max(1, max|p_γ|).
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_coeff: f64,
    /// Alternating-projection iterations per certification.
    #[arg(long, global = true, default_value_t = 50_000)]
    pub max_iter: usize,
    /// Largest transport time tried by the τ search.
    #[arg(long, global = true, default_value_t = (1u64 << 30) as f64)]
    pub t_max: f64,
    /// Largest constant tried by the graded searches.
    #[arg(long, global = true, default_value_t = (1u64 << 30) as f64)]
    pub c_max: f64,
    /// Grid growth factor of the searches.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub growth: f64,
    /// First grid value of the τ search (scenario default, else 1).
    #[arg(long, global = true)]
    pub t0: Option<f64>,
    /// First grid value of the graded constant searches.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub c0: f64,
    /// Bisect the search down to relative width 1e-3 after the grid pass.
    #[arg(long, global = true)]
    pub refine: bool,
    /// Degree bound of the invariant-subspace search (default 4|α|+16 per monomial).
    #[arg(long, global = true)]
    pub dmax: Option<u32>,
    /// Step cap of the invariant-subspace search.
    #[arg(long, global = true, default_value_t = 64)]
    pub kmax: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
}

/// Echoed in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub eig_tol: f64,
    pub coeff_tol: f64,
    pub max_iter: usize,
    pub t_max: f64,
    pub c_max: f64,
    pub growth: f64,
    pub t0: f64,
    pub c0: f64,
    pub refine: bool,
    pub d_max: Option<u32>,
    pub k_max: usize,
    pub seed: u64,
    pub inputs: Vec<String>,
    pub output: Option<String>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(g: &GlobalArgs, t0_default: f64, inputs: Vec<String>) -> Result<Self, String> {
        let cfg = RunConfig {
            eig_tol: g.tol_eig,
            coeff_tol: g.tol_coeff,
            max_iter: g.max_iter,
            t_max: g.t_max,
            c_max: g.c_max,
            growth: g.growth,
            t0: g.t0.unwrap_or(t0_default),
            c0: g.c0,
            refine: g.refine,
            d_max: g.dmax,
            k_max: g.kmax,
            seed: g.seed,
            inputs,
            output: g.out.clone(),
            format: g.format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("--{name} must be a positive number, got {v}"))
            }
        };
        positive("tol-eig", self.eig_tol)?;
        positive("tol-coeff", self.coeff_tol)?;
        if self.max_iter < 1 || self.k_max < 1 {
            return Err("--max-iter and --kmax must be at least 1".into());
        }
        if !(self.t_max >= 1.0) || !(self.c_max >= 1.0) {
            return Err("--t-max and --c-max must be at least 1".into());
        }
        if !(self.growth > 1.0) || !self.growth.is_finite() {
            return Err(format!("--growth must exceed 1, got {}", self.growth));
        }
        if !(self.t0 >= 0.0) || !(self.c0 > 0.0) {
            return Err("--t0 must be nonnegative and --c0 positive".into());
        }
        Ok(())
    }

    pub fn certify(&self) -> CertifyConfig {
        CertifyConfig {
            eig_tol: self.eig_tol,
            coeff_tol: self.coeff_tol,
            max_iter: self.max_iter,
            seed: self.seed,
            ..CertifyConfig::default()
        }
    }

    pub fn tau_search(&self) -> SearchConfig {
        SearchConfig {
            start: self.t0,
            growth: self.growth,
            max: self.t_max,
            refine: self.refine,
            certify: self.certify(),
        }
    }

    pub fn constant_search(&self) -> SearchConfig {
        SearchConfig {
            start: self.c0,
            max: self.c_max,
            ..self.tau_search()
        }
    }
}
