use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "qcurv", version, about = "Curvature invariants and identity checks for metrics in closed-form charts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Where the manifold comes from: a spec file or a catalog entry.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Manifold spec file
    #[arg(long, value_name = "FILE", conflicts_with = "catalog")]
    pub spec: Option<PathBuf>,
    /// Catalog entry name (see the `catalog` subcommand)
    #[arg(long, value_name = "NAME")]
    pub catalog: Option<String>,
    /// Dimension of the catalog entry
    #[arg(long, value_name = "N")]
    pub dim: Option<usize>,
    /// Catalog parameter, repeatable
    #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Output {
    /// Compact JSON on one line (the default)
    #[arg(long, conflicts_with = "pretty")]
    pub json: bool,
    /// Indented JSON
    #[arg(long)]
    pub pretty: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Sampling {
    /// Number of sample points
    #[arg(long, value_name = "K", default_value_t = 5)]
    pub points: usize,
    /// Seed for the sample points
    #[arg(long, value_name = "S", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Pointwise curvature invariants, checked against catalog values
    Invariants {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
        /// Relative tolerance for catalog expectations
        #[arg(long, value_name = "T", default_value_t = 1e-8)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Residuals of the curvature identities
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
        /// Identity to check, repeatable (default: all)
        #[arg(long, value_name = "NAME")]
        identity: Vec<String>,
        /// Relative residual tolerance
        #[arg(long, value_name = "T", default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact lattice search for the simplex inequality
    Inequality {
        /// Dimension n
        #[arg(long, value_name = "N")]
        dim: usize,
        /// Lattice denominator
        #[arg(long, value_name = "D", default_value_t = 40)]
        depth: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Conformal transformation laws, Q covariance and the Schoen inequality
    Conformal {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
        /// Exponent f of the factor e^{2f}
        #[arg(long, value_name = "EXPR", conflicts_with = "u")]
        f: Option<String>,
        /// Positive function u of the factor u^{4/(n-2)} or u^{4/(n-4)}
        #[arg(long, value_name = "EXPR")]
        u: Option<String>,
        /// exp, scalar_u or paneitz_u
        #[arg(long, value_name = "NAME")]
        convention: Option<String>,
        /// Quadrature resolution for the Schoen integrals
        #[arg(long, value_name = "R", default_value_t = 16)]
        resolution: usize,
        /// Relative residual tolerance
        #[arg(long, value_name = "T", default_value_t = 1e-7)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Periodic Yamabe profile on S^1(T) x S^{n-1}
    Yamabe {
        /// Dimension n
        #[arg(long, value_name = "N", default_value_t = 6)]
        dim: usize,
        /// Circle length T (default 2π)
        #[arg(long, value_name = "T", allow_negative_numbers = true)]
        period: Option<f64>,
        /// RK4 steps per period
        #[arg(long, value_name = "M", default_value_t = qcurv::conformal::YAMABE_STEPS)]
        steps: usize,
        #[command(flatten)]
        sampling: Sampling,
        /// Tolerance on the induced scalar curvature
        #[arg(long, value_name = "T", default_value_t = 1e-5)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Gauss equations and principal-curvature data of a hypersurface
    Hypersurface {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sampling: Sampling,
        /// Relative residual tolerance
        #[arg(long, value_name = "T", default_value_t = 1e-7)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Integrals of the rigidity condition on a closed chart
    RigidityReport {
        #[command(flatten)]
        source: Source,
        /// Nodes per axis
        #[arg(long, value_name = "R", default_value_t = 16)]
        resolution: usize,
        /// Also run the integration-by-parts check
        #[arg(long)]
        parts: bool,
        /// Tolerance of the integration-by-parts check
        #[arg(long, value_name = "T", default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// List catalog entries, or describe one
    Catalog {
        /// Entry to describe
        #[arg(long, value_name = "NAME")]
        catalog: Option<String>,
        /// Dimension used for the listed expectations
        #[arg(long, value_name = "N", default_value_t = 4)]
        dim: usize,
        /// Catalog parameter, repeatable
        #[arg(long = "param", value_name = "K=V", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected K=V, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}`: value must be finite"));
    }
    Ok((k.trim().to_string(), v))
}
