//! Parameter sweeps over a plant family: a template plant whose coefficients
//! may be polynomials in the swept parameter, run through `critical-slope`
//! or `phase-check` per value, tabulated as CSV. Per-row failures land in
//! the error column and the sweep continues.

use anyhow::{Context, Result};
use clap::Args;
use serde::Deserialize;
use std::path::PathBuf;

use ozf_core::criterion::{
    check_plant, critical_slope, CriterionConfig, CriterionError, MultiplierClass,
};
use ozf_core::xferfn::{DelayedRational, ShiftedPlant};

use crate::commands::{ClassArg, GridArgs};
use crate::io::parse_sign;

/// Template coefficient: a constant, or `{"poly": [c0, c1, ...]}` meaning
/// `c0 + c1·p + c2·p² + ...` in the swept parameter `p`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Coeff {
    Const(f64),
    Poly { poly: Vec<f64> },
}

impl Coeff {
    fn eval(&self, p: f64) -> f64 {
        match self {
            Coeff::Const(c) => *c,
            Coeff::Poly { poly } => poly.iter().rev().fold(0.0, |acc, &c| acc * p + c),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantTemplate {
    num: Vec<Coeff>,
    den: Vec<Coeff>,
    #[serde(default)]
    delay: f64,
}

impl PlantTemplate {
    fn instantiate(&self, p: f64) -> Result<DelayedRational> {
        Ok(DelayedRational::new(
            self.num.iter().map(|c| c.eval(p)).collect(),
            self.den.iter().map(|c| c.eval(p)).collect(),
            self.delay,
        )?)
    }
}

#[derive(clap::ValueEnum, Clone, Copy)]
pub enum InnerCommand {
    CriticalSlope,
    PhaseCheck,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Template plant JSON; coefficients may be {"poly": [...]}.
    #[arg(long)]
    pub template: PathBuf,
    /// Name of the swept parameter (documentation only; one parameter).
    #[arg(long, default_value = "p")]
    pub param: String,
    /// Comma-separated parameter values (empty list allowed).
    #[arg(long, default_value = "")]
    pub values: String,
    #[arg(long, value_enum)]
    pub inner: InnerCommand,
    #[arg(long, value_enum, default_value = "monotone")]
    pub class: ClassArg,
    #[arg(long, value_parser = parse_sign, default_value = "+")]
    pub sign: i8,
    /// Slope for phase-check rows (builds 1/k + sign*G).
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub k_lo: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub k_hi: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.template)
        .with_context(|| format!("reading template {}", args.template.display()))?;
    let template: PlantTemplate = serde_json::from_str(&text)
        .with_context(|| format!("parsing template {}", args.template.display()))?;
    let class: MultiplierClass = args.class.into();
    let config = CriterionConfig {
        grid: if args.grid.linear {
            ozf_core::grid::GridSpec::linear(args.grid.wmin, args.grid.wmax, args.grid.grid)
        } else {
            ozf_core::grid::GridSpec::log(args.grid.wmin, args.grid.wmax, args.grid.grid)
        },
        ..CriterionConfig::default()
    };

    let values: Vec<f64> = args
        .values
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("invalid value {s}")))
        .collect::<Result<_>>()?;

    let mut writer =
        csv::Writer::from_path(&args.out).with_context(|| format!("opening {}", args.out.display()))?;
    writer.write_record([args.param.as_str(), "k_star", "a", "b", "omega0", "error"])?;

    for &value in &values {
        let row = sweep_row(&template, value, &args, class, &config);
        let (k_star, a, b, omega0, error) = match row {
            Ok(r) => r,
            Err(e) => (String::new(), String::new(), String::new(), String::new(), format!("{e:#}")),
        };
        writer.write_record(&[value.to_string(), k_star, a, b, omega0, error])?;
    }
    writer.flush()?;
    Ok(())
}

type Row = (String, String, String, String, String);

fn sweep_row(
    template: &PlantTemplate,
    value: f64,
    args: &SweepArgs,
    class: MultiplierClass,
    config: &CriterionConfig,
) -> Result<Row> {
    let base = template.instantiate(value)?;
    match args.inner {
        InnerCommand::CriticalSlope => {
            match critical_slope(&base, args.sign, class, args.k_lo, args.k_hi, args.tol, config) {
                Ok(res) => Ok((
                    res.k_star.to_string(),
                    res.witness.pair.a().to_string(),
                    res.witness.pair.b().to_string(),
                    res.witness.omega0.to_string(),
                    String::new(),
                )),
                Err(CriterionError::BracketInvalid { fires_hi: false, k_hi, .. }) => Ok((
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("no violation found up to k = {k_hi}"),
                )),
                Err(e) => Err(e.into()),
            }
        }
        InnerCommand::PhaseCheck => {
            let plant = match args.k {
                Some(k) => ShiftedPlant::with_slope(k, args.sign, base)?,
                None => ShiftedPlant::bare(base),
            };
            match check_plant(&plant, class, config)? {
                Some(cert) => Ok((
                    String::new(),
                    cert.pair.a().to_string(),
                    cert.pair.b().to_string(),
                    cert.omega0.to_string(),
                    String::new(),
                )),
                None => Ok((
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "no violation".into(),
                )),
            }
        }
    }
}
