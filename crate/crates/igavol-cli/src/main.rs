//! Command-line surface for the igavol library: calibration, pricing,
//! Monte Carlo cross-checks, error reports and stationary density curves.
//!
//! Exit codes: 0 success (calibration converged), 1 input or usage error,
//! 2 calibration did not converge within budget.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use igavol::blackscholes::{self, BsContext};
use igavol::calibration::{calibrate, error_report, CalibrateOptions};
use igavol::data::{rates_from_market, MarketDataFile, ParamsFile};
use igavol::expansion;
use igavol::montecarlo::{mc_price_put, McConfig};
use igavol::stationary;

#[derive(Parser)]
#[command(
    name = "igavol",
    version,
    about = "Stochastic volatility pricing and calibration (inverse gamma volatility model)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptionKind {
    Put,
    Call,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Expansion,
    Mc,
}

#[derive(Parser, Clone, Copy)]
struct McFlags {
    /// Number of Monte Carlo paths
    #[arg(long, default_value_t = 200_000)]
    paths: usize,
    /// Time steps per year (at least one per parameter interval)
    #[arg(long, default_value_t = 2920)]
    steps_per_year: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Disable antithetic pairing
    #[arg(long)]
    no_antithetic: bool,
    /// Use the heavy reference configuration (1e6 paths, 24 steps/day on a
    /// 365-day year) instead of the desk-scale defaults
    #[arg(long)]
    reference_scale: bool,
}

impl McFlags {
    fn config(&self) -> McConfig {
        if self.reference_scale {
            McConfig {
                paths: 1_000_000,
                steps_per_year: 24 * 365,
                seed: self.seed,
                antithetic: !self.no_antithetic,
                parallel: true,
            }
        } else {
            McConfig {
                paths: self.paths,
                steps_per_year: self.steps_per_year,
                seed: self.seed,
                antithetic: !self.no_antithetic,
                parallel: true,
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the model to a market data file; writes the fitted
    /// parameters as JSON and the per-quote error table as CSV
    Calibrate {
        /// Market data file (JSON)
        input: PathBuf,
        /// Output directory
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Joint refit of all parameters after the bootstrap
        #[arg(long)]
        global_polish: bool,
        /// Objective evaluations per slice and multistart
        #[arg(long, default_value_t = 2000)]
        evals_per_slice: usize,
    },
    /// Price one European option from a calibrated parameter file
    Price {
        /// Parameter file (JSON)
        params: PathBuf,
        #[arg(long)]
        strike: f64,
        /// Maturity in years (must lie inside the rate-curve range)
        #[arg(long)]
        maturity: f64,
        #[arg(long = "type", value_enum, default_value = "put")]
        kind: OptionKind,
        #[arg(long, value_enum, default_value = "expansion")]
        method: Method,
        #[command(flatten)]
        mc: McFlags,
        /// Append the result as a CSV row to this file
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Price one contract with both methods and report the implied-vol gap
    McCheck {
        params: PathBuf,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        maturity: f64,
        #[command(flatten)]
        mc: McFlags,
    },
    /// Compare a parameter file against a market data file, quote by quote
    Report {
        params: PathBuf,
        market: PathBuf,
        /// Also price every quote by Monte Carlo and report expansion errors
        #[arg(long)]
        mc: bool,
        #[command(flatten)]
        mc_flags: McFlags,
        /// Write the full-precision CSV here
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit moment-matched stationary density curves for both models
    Density {
        /// Target mean of the stationary volatility
        #[arg(long)]
        mean: f64,
        /// Target standard deviation of the stationary volatility
        #[arg(long)]
        std: f64,
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Calibrate {
            input,
            output,
            seed,
            global_polish,
            evals_per_slice,
        } => cmd_calibrate(&input, &output, seed, global_polish, evals_per_slice),
        Command::Price {
            params,
            strike,
            maturity,
            kind,
            method,
            mc,
            output,
        } => cmd_price(&params, strike, maturity, kind, method, &mc, output.as_deref()),
        Command::McCheck {
            params,
            strike,
            maturity,
            mc,
        } => cmd_mc_check(&params, strike, maturity, &mc),
        Command::Report {
            params,
            market,
            mc,
            mc_flags,
            output,
        } => cmd_report(&params, &market, mc, &mc_flags, output.as_deref()),
        Command::Density { mean, std, output } => cmd_density(mean, std, &output),
    }
}

fn cmd_calibrate(
    input: &Path,
    output: &Path,
    seed: u64,
    global_polish: bool,
    evals_per_slice: usize,
) -> Result<ExitCode> {
    let market = MarketDataFile::load(input)?;
    let surface = market.to_surface()?;
    let opts = CalibrateOptions {
        seed,
        global_polish,
        evals_per_slice,
        ..Default::default()
    };
    let result = calibrate(&surface, &opts)?;
    let report = error_report(surface.spot, result.v0, &result.schedule, &surface, None)?;

    std::fs::create_dir_all(output)
        .with_context(|| format!("cannot create {}", output.display()))?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("calibration");
    let params = ParamsFile::from_result(&market.name, surface.spot, rates_from_market(&market), &result);
    let json_path = output.join(format!("{stem}.result.json"));
    let csv_path = output.join(format!("{stem}.errors.csv"));
    std::fs::write(&json_path, params.to_json())?;
    std::fs::write(&csv_path, report.to_csv())?;

    println!("calibrated {} ({} slices)", market.name, surface.slices.len());
    println!("v0 {}", result.v0);
    println!(
        "calibration error: median {:.2}bp, mean {:.2}bp",
        result.stats.median_abs_bp, result.stats.mean_abs_bp
    );
    println!("converged {}", result.converged);
    print!("{}", report.to_display_table());
    println!("wrote {}", json_path.display());
    println!("wrote {}", csv_path.display());

    Ok(if result.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

struct Priced {
    price: f64,
    implied_vol: f64,
    std_error: Option<f64>,
}

fn price_contract(
    file: &ParamsFile,
    strike: f64,
    maturity: f64,
    kind: OptionKind,
    method: Method,
    cfg: &McConfig,
) -> Result<Priced> {
    let state = file.state()?;
    let schedule = file.schedule()?;
    let (dd, df) = file.discounts(maturity)?;
    let ctx = BsContext::new(strike, maturity, dd, df)?;
    let parity = ctx.discounted_spot(state.x0()) - ctx.discounted_strike();

    let (put_price, std_error) = match method {
        Method::Expansion => (
            expansion::price_put_expansion(&state, &schedule, &ctx)?,
            None,
        ),
        Method::Mc => {
            let est = mc_price_put(&state, &schedule, &ctx, cfg)?;
            (est.price, Some(est.std_error))
        }
    };
    let r_d_eq = dd / maturity;
    let r_f_eq = df / maturity;
    let implied_vol =
        blackscholes::implied_vol_put(put_price, state.spot, strike, maturity, r_d_eq, r_f_eq)?;
    let price = match kind {
        OptionKind::Put => put_price,
        OptionKind::Call => put_price + parity,
    };
    Ok(Priced {
        price,
        implied_vol,
        std_error,
    })
}

fn cmd_price(
    params: &Path,
    strike: f64,
    maturity: f64,
    kind: OptionKind,
    method: Method,
    mc: &McFlags,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let file = ParamsFile::load(params)?;
    let priced = price_contract(&file, strike, maturity, kind, method, &mc.config())?;
    let method_name = match method {
        Method::Expansion => "expansion",
        Method::Mc => "mc",
    };
    let kind_name = match kind {
        OptionKind::Put => "put",
        OptionKind::Call => "call",
    };
    println!("method {method_name}");
    println!("type {kind_name}");
    println!("strike {strike}");
    println!("maturity {maturity}");
    println!("price {}", priced.price);
    println!("implied_vol {}", priced.implied_vol);
    if let Some(se) = priced.std_error {
        println!("std_error {se}");
    }
    if let Some(path) = output {
        let header = !path.exists();
        let mut row = String::new();
        if header {
            row.push_str("method,type,strike,maturity,price,implied_vol,std_error\n");
        }
        row.push_str(&format!(
            "{method_name},{kind_name},{strike},{maturity},{},{},{}\n",
            priced.price,
            priced.implied_vol,
            priced.std_error.map(|s| s.to_string()).unwrap_or_default()
        ));
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        f.write_all(row.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_mc_check(params: &Path, strike: f64, maturity: f64, mc: &McFlags) -> Result<ExitCode> {
    let file = ParamsFile::load(params)?;
    let cfg = mc.config();
    let expansion = price_contract(&file, strike, maturity, OptionKind::Put, Method::Expansion, &cfg)?;
    let monte = price_contract(&file, strike, maturity, OptionKind::Put, Method::Mc, &cfg)?;

    // standard error of the MC implied vol via the vega at the MC vol
    let state = file.state()?;
    let (dd, df) = file.discounts(maturity)?;
    let ctx = BsContext::new(strike, maturity, dd, df)?;
    let vega = blackscholes::put_vega_sigma(&ctx, state.x0(), monte.implied_vol)?;
    let iv_se = monte.std_error.unwrap_or(0.0) / vega;

    println!("expansion_price {}", expansion.price);
    println!("expansion_implied_vol {}", expansion.implied_vol);
    println!("mc_price {}", monte.price);
    println!("mc_std_error {}", monte.std_error.unwrap_or(0.0));
    println!("mc_implied_vol {}", monte.implied_vol);
    println!("mc_implied_vol_std_error {iv_se}");
    println!(
        "expansion_error_vol {}",
        expansion.implied_vol - monte.implied_vol
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(
    params: &Path,
    market: &Path,
    with_mc: bool,
    mc_flags: &McFlags,
    output: Option<&Path>,
) -> Result<ExitCode> {
    let file = ParamsFile::load(params)?;
    let market = MarketDataFile::load(market)?;
    let surface = market.to_surface()?;
    let schedule = file.schedule()?;
    let cfg = mc_flags.config();
    let mc = if with_mc { Some(&cfg) } else { None };
    let report = error_report(file.spot, file.v0, &schedule, &surface, mc)?;
    print!("{}", report.to_display_table());
    if let Some(path) = output {
        std::fs::write(path, report.to_csv())?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_density(mean: f64, std: f64, output: &Path) -> Result<ExitCode> {
    let curves = stationary::density_curves(mean, std)?;
    std::fs::create_dir_all(output)?;
    let stem = format!("density_mean{mean}_std{std}");
    let csv_path = output.join(format!("{stem}.csv"));
    let json_path = output.join(format!("{stem}.params.json"));

    let mut csv = String::from("x,iga_density,heston_density,log_iga_density,log_heston_density\n");
    let iga = curves.pair.iga();
    let heston = curves.pair.heston();
    for (i, &x) in curves.x.iter().enumerate() {
        csv.push_str(&format!(
            "{x},{},{},{},{}\n",
            curves.iga[i],
            curves.heston[i],
            iga.log_density(x).unwrap(),
            heston.log_density(x).unwrap(),
        ));
    }
    std::fs::write(&csv_path, csv)?;
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&curves.pair).expect("matched pair serializes"),
    )?;
    println!("iga beta {}", curves.pair.iga_beta);
    println!("iga theta {}", curves.pair.iga_theta);
    println!("heston beta {}", curves.pair.heston_beta);
    println!("heston theta {}", curves.pair.heston_theta);
    println!("feller {}", curves.pair.heston_feller);
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(ExitCode::SUCCESS)
}
