use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use freestein::analytic::{self, MeasureSpec, DEFAULT_POINTS};
use freestein::experiment::{self, ExperimentConfig, ExperimentError, Metric};
use freestein::moments::{self, DEFAULT_ORDER};
use freestein::ncpart::{self, NcLattice, NcPartition};
use freestein::stein;

/// Free probability toolkit and Berry–Esseen experiment harness.
///
/// Measures are given as a preset (semicircle, bernoulli, two-atom), an
/// inline JSON object such as '{"kind":"atomic","atoms":[[1,0.5],[-1,0.5]]}',
/// or a path to a JSON file holding one.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Moment and free cumulant tables.
    Moments {
        #[arg(short, long)]
        measure: String,
        #[arg(short, long, default_value_t = DEFAULT_ORDER)]
        order: usize,
    },
    /// Density of the dilated n-fold free convolution power as CSV.
    Convolve {
        #[arg(short, long)]
        measure: String,
        #[arg(short)]
        n: usize,
        /// Dilation applied to each summand; 1/√n by default.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        window: Option<Vec<f64>>,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Stein discrepancy, generator table and dual pairing residuals.
    SteinCheck {
        #[arg(short, long)]
        measure: String,
        #[arg(long, default_value_t = 1e-5)]
        theta_step: f64,
        #[arg(long, default_value_t = 40.0)]
        theta_max: f64,
        #[arg(long, default_value_t = 200)]
        quad: usize,
    },
    /// Non-crossing partition lattice utilities.
    Nc {
        #[command(subcommand)]
        action: NcAction,
    },
    /// Full rate experiment from a JSON config; prints a JSON summary.
    BerryEsseen {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Log-log slope of one metric column of an experiment CSV.
    Fit {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long, default_value = "w1")]
        metric: String,
        /// Points at or below 10 x floor are excluded.
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
    },
}

#[derive(Subcommand)]
enum NcAction {
    /// |NC(n)| by enumeration next to Catalan(n).
    Count { n: usize },
    /// Every non-crossing partition of [n].
    List { n: usize },
    /// μ(0̂, 1̂) on NC(k) for k ≤ n.
    Mobius { n: usize },
    /// Kreweras complement of a partition written like "1,3|2|4,5,6".
    Kreweras { blocks: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    fn numerical(e: impl std::fmt::Display) -> Self {
        Self {
            code: 3,
            message: e.to_string(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Self {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::config(e)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    let mut out = io::stdout().lock();
    match command {
        Command::Moments { measure, order } => {
            let mu = experiment::parse_measure(&measure)?;
            let m = mu.moments(order).map_err(Failure::config)?;
            let k = moments::moments_to_cumulants(&m).map_err(Failure::numerical)?;
            writeln!(out, "# {mu}")?;
            writeln!(out, "j,moment,free_cumulant")?;
            writeln!(out, "0,{:.16e},", m.get(0))?;
            for j in 1..=m.order() {
                writeln!(out, "{j},{:.16e},{:.16e}", m.get(j), k.get(j))?;
            }
        }
        Command::Convolve {
            measure,
            n,
            scale,
            points,
            window,
            output,
        } => {
            if n == 0 {
                return Err(Failure::config("n must be positive"));
            }
            let mu = experiment::parse_measure(&measure)?;
            let scale = scale.unwrap_or(1.0 / (n as f64).sqrt());
            let ev = analytic::nfold_convolve(&mu, n, scale).map_err(Failure::config)?;
            let window = window.map(|w| (w[0], w[1]));
            let recovery = analytic::recover_density(&*ev, window, points).map_err(Failure::numerical)?;
            let d = recovery.density;
            if d.mass_flagged() {
                eprintln!(
                    "warning: recovered mass {:.6} suggests an atom or a clipped window",
                    d.mass()
                );
            }
            match output {
                Some(path) => d.save(&path).map_err(Failure::config)?,
                None => d.write_csv(&mut out).map_err(Failure::config)?,
            }
        }
        Command::SteinCheck {
            measure,
            theta_step,
            theta_max,
            quad,
        } => {
            let mu = experiment::parse_measure(&measure)?;
            stein_check(&mut out, &mu, theta_step, theta_max, quad)?;
        }
        Command::Nc { action } => nc(&mut out, action)?,
        Command::BerryEsseen { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = experiment::berry_esseen(&cfg)?;
            writeln!(
                out,
                "{}",
                serde_json::to_string_pretty(&summary).map_err(Failure::config)?
            )?;
            return Ok(summary.exit_code() as u8);
        }
        Command::Fit { input, metric, floor } => {
            let metric: Metric = metric.parse()?;
            let rows = experiment::read_rows(&input)?;
            let fit = experiment::fit_rate(metric.name(), &experiment::metric_points(&rows, metric), floor)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&fit).map_err(Failure::config)?)?;
        }
    }
    Ok(0)
}

fn stein_check(out: &mut impl Write, mu: &MeasureSpec, step: f64, theta_max: f64, quad: usize) -> Result<(), Failure> {
    let m = mu.moments(stein::MAX_DEGREE).map_err(Failure::config)?;
    writeln!(out, "# {mu}")?;
    writeln!(out, "# Stein discrepancy d_r = m_(r+1) - sum m_k m_(r-1-k)")?;
    writeln!(out, "r,d_r")?;
    for (r, d) in stein::stein_discrepancy(&m).values().iter().enumerate() {
        writeln!(out, "{r},{d:.6e}")?;
    }
    writeln!(
        out,
        "# generator at theta = 0 against a finite difference with step {step:e}"
    )?;
    writeln!(out, "p,closed_form,finite_difference,abs_error")?;
    for p in 1..=stein::MAX_DEGREE {
        let exact = stein::generator_apply(&m, p).map_err(Failure::numerical)?;
        let fd = stein::generator_finite_difference(mu, p, step).map_err(Failure::config)?;
        writeln!(out, "{p},{exact:.10e},{fd:.10e},{:.3e}", (exact - fd).abs())?;
    }
    writeln!(out, "# dual pairing against <s, x^p> - <mu, x^p>")?;
    writeln!(out, "p,pairing,target,residual,truncated")?;
    for p in 1..=6 {
        let mut h = vec![0.0; p + 1];
        h[p] = 1.0;
        let pairing = stein::dual_stein_pairing(mu, &h, theta_max, quad).map_err(Failure::config)?;
        let target = stein::dual_stein_target(mu, &h).map_err(Failure::numerical)?;
        writeln!(
            out,
            "{p},{:.12e},{target:.12e},{:.3e},{}",
            pairing.value,
            (pairing.value - target).abs(),
            pairing.truncated
        )?;
    }
    Ok(())
}

fn parse_blocks(text: &str) -> Result<NcPartition, Failure> {
    let blocks = text
        .split('|')
        .map(|b| {
            b.split(',')
                .map(|e| {
                    e.trim()
                        .parse::<usize>()
                        .map_err(|_| Failure::config(format!("bad element {e:?}")))
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = blocks.iter().flatten().copied().max().unwrap_or(0);
    NcPartition::new(n, blocks).map_err(Failure::config)
}

fn nc(out: &mut impl Write, action: NcAction) -> Result<(), Failure> {
    match action {
        NcAction::Count { n } => {
            let count = ncpart::enumerate_nc(n).map_err(Failure::config)?.len();
            let catalan = ncpart::catalan(n as u32).map_err(Failure::config)?;
            writeln!(out, "|NC({n})| = {count}, Catalan({n}) = {catalan}")?;
        }
        NcAction::List { n } => {
            for p in ncpart::enumerate_nc(n).map_err(Failure::config)? {
                writeln!(out, "{p}")?;
            }
        }
        NcAction::Mobius { n } => {
            writeln!(out, "k,mobius(0,1)")?;
            for k in 1..=n {
                let lattice = NcLattice::new(k).map_err(Failure::config)?;
                let bottom = lattice
                    .index_of(&NcPartition::finest(k))
                    .expect("finest partition is in NC(k)");
                let top = lattice
                    .index_of(&NcPartition::coarsest(k))
                    .expect("coarsest partition is in NC(k)");
                writeln!(out, "{k},{}", lattice.mobius_row(bottom)[top])?;
            }
        }
        NcAction::Kreweras { blocks } => {
            let p = parse_blocks(&blocks)?;
            let k = p.kreweras().map_err(Failure::config)?;
            writeln!(out, "K({p}) = {k}")?;
        }
    }
    Ok(())
}
