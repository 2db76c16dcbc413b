//! Subcommand definitions and dispatch.

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;

use ozf_core::criterion::{
    check_plant, critical_slope, CoprimePair, CriterionConfig, MultiplierClass,
    ViolationCertificate,
};
use ozf_core::duality::{build_certificate, verify_general, DelayFamily};
use ozf_core::grid::GridSpec;
use ozf_core::interval::{rho_bar, rho_bar_odd, rho_c, rho_c_odd, IntervalProblem};
use ozf_core::luryesim::{nyquist_gain, realize, simulate, LuryeConfig, Nonlinearity};
use ozf_core::multiplier::{
    class_membership, is_suitable, rational_membership, DelayCombo, Membership, MultiplierSpec,
    RationalMultiplier,
};

use crate::io::{emit, load_multiplier, load_plant, parse_sign};
use crate::sweep;

#[derive(Parser)]
#[command(name = "ozf", version, about = "Phase-criterion analysis of O'Shea-Zames-Falb multipliers")]
pub struct Cli {
    /// Worker threads for grid scans (default: all cores; env OZF_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone)]
pub struct GridArgs {
    /// Lower end of the omega scan, rad/s.
    #[arg(long, default_value_t = 1e-3)]
    pub wmin: f64,
    /// Upper end of the omega scan, rad/s.
    #[arg(long, default_value_t = 1e3)]
    pub wmax: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 4001)]
    pub grid: usize,
    /// Use linear instead of logarithmic spacing.
    #[arg(long)]
    pub linear: bool,
}

impl GridArgs {
    fn to_spec(&self) -> GridSpec {
        if self.linear {
            GridSpec::linear(self.wmin, self.wmax, self.grid)
        } else {
            GridSpec::log(self.wmin, self.wmax, self.grid)
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Search for a two-frequency phase violation certificate.
    PhaseCheck {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, value_enum, default_value = "monotone")]
        class: ClassArg,
        /// Slope restriction; builds 1/k + sign*G.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, value_parser = parse_sign)]
        sign: Option<i8>,
        #[arg(long, default_value_t = 20)]
        a_max: u32,
        #[arg(long, default_value_t = 20)]
        b_max: u32,
        #[command(flatten)]
        grid: GridArgs,
        /// Skip zoom/golden refinement of the best grid point.
        #[arg(long)]
        no_refine: bool,
        /// Certificate threshold is 180 + margin degrees.
        #[arg(long, default_value_t = 0.0)]
        margin: f64,
    },
    /// Bisect the slope k at which the criterion first fires.
    CriticalSlope {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long, value_enum, default_value = "monotone")]
        class: ClassArg,
        #[arg(long, value_parser = parse_sign, default_value = "+")]
        sign: i8,
        #[arg(long)]
        k_lo: f64,
        #[arg(long)]
        k_hi: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Verify a candidate multiplier: suitability and class membership.
    VerifyMultiplier {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, value_parser = parse_sign)]
        sign: Option<i8>,
        #[arg(long)]
        multiplier: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Build and verify the two-frequency duality certificate at omega0.
    DualityCert {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, value_parser = parse_sign)]
        sign: Option<i8>,
        #[arg(long)]
        a: u32,
        #[arg(long)]
        b: u32,
        #[arg(long)]
        omega0: f64,
        #[arg(long, value_enum, default_value = "monotone")]
        class: ClassArg,
    },
    /// Interval-approach threshold rho, either for explicit intervals or in
    /// the zero-width limit for a coprime pair.
    IntervalRho {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        a: Option<u32>,
        #[arg(long)]
        b: Option<u32>,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Odd-class variant.
        #[arg(long)]
        odd: bool,
    },
    /// Simulate the Lurye loop and write a CSV trace.
    Simulate {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        gain: f64,
        /// Saturation level, or "off" for the linear loop.
        #[arg(long, default_value = "1")]
        sat: String,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 200.0)]
        t_final: f64,
        /// Output CSV path (columns t,u1,y1,saturated).
        #[arg(long)]
        out: PathBuf,
    },
    /// Nyquist gain of the plant under negative feedback.
    NyquistGain {
        #[arg(long)]
        plant: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sweep a plant-family parameter and tabulate per-value results.
    Sweep(sweep::SweepArgs),
}

#[derive(clap::ValueEnum, Clone, Copy)]
pub enum ClassArg {
    Monotone,
    Odd,
}

impl From<ClassArg> for MultiplierClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Monotone => MultiplierClass::Monotone,
            ClassArg::Odd => MultiplierClass::OddMonotone,
        }
    }
}

pub fn init_threads(threads: Option<usize>) -> Result<()> {
    let n = match threads {
        Some(n) => Some(n),
        None => std::env::var("OZF_THREADS").ok().map(|v| {
            v.parse::<usize>()
                .with_context(|| format!("OZF_THREADS must be an integer, got {v}"))
        })
        .transpose()?,
    };
    if let Some(n) = n {
        anyhow::ensure!(n > 0, "thread count must be positive");
        ozf_core::configure_threads(n).map_err(|e| anyhow::anyhow!(e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PhaseCheckOutput {
    violation: Option<ViolationCertificate>,
}

#[derive(Serialize)]
struct CriticalSlopeOutput {
    k_star: f64,
    pair: CoprimePair,
    omega0: f64,
    gap: f64,
    k_lo: f64,
    k_hi: f64,
}

#[derive(Serialize)]
struct VerifyOutput {
    suitability: ozf_core::multiplier::SuitabilityReport,
    membership: Membership,
    l1_mass: Option<f64>,
    tail_bound: Option<f64>,
}

#[derive(Serialize)]
struct DualityOutput {
    certificate: ozf_core::duality::DualityCertificate,
    sup_general_minus: f64,
    tau_star_minus: f64,
    sup_general_plus: Option<f64>,
    tau_star_plus: Option<f64>,
}

#[derive(Serialize)]
struct RhoOutput {
    rho: f64,
    arg_t: f64,
    mode: &'static str,
}

#[derive(Serialize)]
struct NyquistOutput {
    /// None encodes an infinite gain (locus never crosses).
    k_n: Option<f64>,
    omega_cross: Option<f64>,
}

/// Dispatch. Returns true when a phase-check certificate was found (exit 2).
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::PhaseCheck {
            plant,
            class,
            k,
            sign,
            a_max,
            b_max,
            grid,
            no_refine,
            margin,
        } => {
            let plant = load_plant(&plant, k, sign)?;
            let config = CriterionConfig {
                grid: grid.to_spec(),
                margin,
                refine: !no_refine,
                a_cap: a_max,
                b_cap: b_max,
            };
            let cert = check_plant(&plant, class.into(), &config)?;
            let found = cert.is_some();
            emit(&PhaseCheckOutput { violation: cert })?;
            Ok(found)
        }
        Command::CriticalSlope { plant, class, sign, k_lo, k_hi, tol, grid } => {
            let text = std::fs::read_to_string(&plant)
                .with_context(|| format!("reading plant file {}", plant.display()))?;
            let record: ozf_core::xferfn::PlantRecord =
                serde_json::from_str(&text).context("parsing plant file")?;
            let base = ozf_core::xferfn::DelayedRational::new(
                record.num.clone(),
                record.den.clone(),
                record.delay,
            )?;
            let config = CriterionConfig { grid: grid.to_spec(), ..CriterionConfig::default() };
            let result = critical_slope(&base, sign, class.into(), k_lo, k_hi, tol, &config)?;
            emit(&CriticalSlopeOutput {
                k_star: result.k_star,
                pair: result.witness.pair,
                omega0: result.witness.omega0,
                gap: result.witness.gap,
                k_lo: result.k_lo,
                k_hi: result.k_hi,
            })?;
            Ok(false)
        }
        Command::VerifyMultiplier { plant, k, sign, multiplier, eps, grid } => {
            let plant = load_plant(&plant, k, sign)?;
            let spec = load_multiplier(&multiplier)?;
            let suitability = is_suitable(&spec, &plant, &grid.to_spec(), eps)?;
            let (membership, l1_mass, tail_bound) = match &spec {
                MultiplierSpec::DelayCombo { m0, taps } => {
                    let combo = DelayCombo::new(*m0, taps.clone())?;
                    (class_membership(&combo), None, None)
                }
                MultiplierSpec::Rational { num, den } => {
                    let r = RationalMultiplier::new(num.clone(), den.clone())?;
                    let rep = rational_membership(&r, None, None)?;
                    (rep.membership, Some(rep.l1_mass), Some(rep.tail_bound))
                }
            };
            emit(&VerifyOutput { suitability, membership, l1_mass, tail_bound })?;
            Ok(false)
        }
        Command::DualityCert { plant, k, sign, a, b, omega0, class } => {
            let plant = load_plant(&plant, k, sign)?;
            let pair = CoprimePair::new(a, b)?;
            let class: MultiplierClass = class.into();
            let cert = build_certificate(&plant, pair, omega0, class)?;
            let instance = cert.to_instance(&plant)?;
            let tau_grid = instance.default_tau_grid();
            let (sup_minus, tau_minus) = verify_general(&instance, DelayFamily::Mminus, &tau_grid)?;
            let (sup_plus, tau_plus) = if class == MultiplierClass::OddMonotone {
                let (s, t) = verify_general(&instance, DelayFamily::Mplus, &tau_grid)?;
                (Some(s), Some(t))
            } else {
                (None, None)
            };
            emit(&DualityOutput {
                certificate: cert,
                sup_general_minus: sup_minus,
                tau_star_minus: tau_minus,
                sup_general_plus: sup_plus,
                tau_star_plus: tau_plus,
            })?;
            Ok(false)
        }
        Command::IntervalRho { alpha, beta, gamma, delta, a, b, kappa, odd } => {
            let out = match (alpha, beta, gamma, delta, a, b) {
                (Some(al), Some(be), Some(ga), Some(de), None, None) => {
                    let problem = IntervalProblem::from_intervals(al, be, ga, de, kappa)?;
                    let grid = problem.default_t_grid();
                    let sup = if odd { rho_c_odd(&problem, &grid)? } else { rho_c(&problem, &grid)? };
                    RhoOutput {
                        rho: sup.value,
                        arg_t: sup.arg_t,
                        mode: if odd { "interval-odd" } else { "interval" },
                    }
                }
                (None, None, None, None, Some(a), Some(b)) => {
                    let pair = CoprimePair::new(a, b)?;
                    let sup = if odd { rho_bar_odd(pair, kappa) } else { rho_bar(pair, kappa) };
                    RhoOutput {
                        rho: sup.value,
                        arg_t: sup.arg_t,
                        mode: if odd { "limit-odd" } else { "limit" },
                    }
                }
                _ => anyhow::bail!(
                    "pass either --alpha --beta --gamma --delta or --a --b (with --kappa)"
                ),
            };
            emit(&out)?;
            Ok(false)
        }
        Command::Simulate { plant, gain, sat, step, dt, t_final, out } => {
            let text = std::fs::read_to_string(&plant)
                .with_context(|| format!("reading plant file {}", plant.display()))?;
            let record: ozf_core::xferfn::PlantRecord =
                serde_json::from_str(&text).context("parsing plant file")?;
            let tf = ozf_core::xferfn::DelayedRational::new(
                record.num.clone(),
                record.den.clone(),
                record.delay,
            )?;
            let (nonlinearity, sat_level) = if sat == "off" {
                (Nonlinearity::None, 1.0)
            } else {
                let level: f64 = sat.parse().context("--sat must be a level or 'off'")?;
                anyhow::ensure!(level > 0.0, "saturation level must be positive");
                (Nonlinearity::Saturation, level)
            };
            let config = LuryeConfig {
                plant: realize(&tf)?,
                gain,
                sat_level,
                step_amplitude: step,
                dt,
                t_final,
                nonlinearity,
            };
            let trace = simulate(&config)?;
            let mut writer = csv::Writer::from_path(&out)
                .with_context(|| format!("opening {}", out.display()))?;
            writer.write_record(["t", "u1", "y1", "saturated"])?;
            for i in 0..trace.t.len() {
                writer.write_record(&[
                    trace.t[i].to_string(),
                    trace.u1[i].to_string(),
                    trace.y1[i].to_string(),
                    (trace.saturated[i] as u8).to_string(),
                ])?;
            }
            writer.flush()?;
            if trace.diverged {
                eprintln!("warning: response diverged; trace truncated");
            }
            Ok(false)
        }
        Command::NyquistGain { plant, grid } => {
            let text = std::fs::read_to_string(&plant)
                .with_context(|| format!("reading plant file {}", plant.display()))?;
            let record: ozf_core::xferfn::PlantRecord =
                serde_json::from_str(&text).context("parsing plant file")?;
            let tf = ozf_core::xferfn::DelayedRational::new(
                record.num.clone(),
                record.den.clone(),
                record.delay,
            )?;
            let res = nyquist_gain(&tf, &grid.to_spec());
            emit(&NyquistOutput {
                k_n: res.k_n.is_finite().then_some(res.k_n),
                omega_cross: res.omega_cross,
            })?;
            Ok(false)
        }
        Command::Sweep(args) => {
            sweep::run(args)?;
            Ok(false)
        }
    }
}
