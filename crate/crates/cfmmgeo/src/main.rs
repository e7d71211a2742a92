//! Command line front end for the market geometry library.
//!
//! Every subcommand prints a single JSON document to standard output
//! (CSV for `export-curve`) and a JSON diagnostic to standard error on
//! failure. Numbers are rendered with 17 significant digits so identical
//! inputs produce byte-identical output. Exit codes: 0 success, 1 domain
//! error (or a failed `check`), 2 usage error, 3 non-convergence.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use cfmmgeo::duality::{phi_from_pv, pv_from_phi, PortfolioValueFn};
use cfmmgeo::lp::{apply_liquidity, price_invariance_check, LiquidityDirection, LiquidityEvent, ShareLedger};
use cfmmgeo::numerics::{bisect_boundary, expand_bracket, Tolerance};
use cfmmgeo::prediction;
use cfmmgeo::reachable::{self, ReachableSet};
use cfmmgeo::routing;
use cfmmgeo::schema::{parse_ledger, parse_pool_spec, parse_routing_spec};
use cfmmgeo::trade::{self, FeePoolTradingSet};
use cfmmgeo::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cfmmgeo",
    version,
    about = "Geometry of constant function market makers: trading functions, duality, routing"
)]
struct Cli {
    /// Relative tolerance for iterative routines.
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel: f64,

    /// Absolute tolerance for iterative routines.
    #[arg(long, global = true, default_value_t = 1e-12)]
    abs: f64,

    /// Iteration budget for iterative routines.
    #[arg(long, global = true, default_value_t = 200)]
    max_iter: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DualDirection {
    /// Recover the trading function from the portfolio value.
    PvToPhi,
    /// Recover the portfolio value from the trading function.
    PhiToPv,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpDirection {
    Add,
    Remove,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the trading function at given reserves.
    EvalPhi {
        /// Pool description (JSON file).
        #[arg(long)]
        pool: PathBuf,
        /// Comma-separated reserves, or @path to a file holding them.
        #[arg(long)]
        reserves: String,
    },
    /// Evaluate the portfolio value and its minimizing reserves at given prices.
    EvalPv {
        #[arg(long)]
        pool: PathBuf,
        /// Comma-separated prices, or @path.
        #[arg(long)]
        prices: String,
    },
    /// Run one duality transform and report the residual against the direct value.
    Dualize {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, value_enum)]
        direction: DualDirection,
        /// Reserves for pv-to-phi.
        #[arg(long, required_if_eq("direction", "pv-to-phi"))]
        reserves: Option<String>,
        /// Prices for phi-to-pv.
        #[arg(long, required_if_eq("direction", "phi-to-pv"))]
        prices: Option<String>,
    },
    /// Evaluate the prediction-market cost of reaching a quantity vector.
    Cost {
        #[arg(long)]
        pool: PathBuf,
        /// Comma-separated outstanding quantities, or @path.
        #[arg(long)]
        quantities: String,
    },
    /// Find the most profitable single trade against external prices.
    Arb {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        reserves: String,
        /// Fee retention factor in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        prices: String,
    },
    /// Test whether external prices admit no profitable trade.
    NoTrade {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        reserves: String,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        prices: String,
    },
    /// Solve a routing problem described by a JSON instance file.
    Route {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Apply a deposit or withdrawal to a share ledger.
    Lp {
        /// Ledger file: a JSON object of provider to weight.
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        reserves: String,
        #[arg(long)]
        provider: String,
        /// Pool fraction being added or removed.
        #[arg(long)]
        fraction: f64,
        #[arg(long, value_enum)]
        direction: LpDirection,
        /// Optional pool description; when given, also report whether the
        /// event leaves marginal prices unchanged.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Trace the set boundary as CSV for plotting.
    ExportCurve {
        #[arg(long)]
        pool: PathBuf,
        /// Coordinate to sweep (0 or 1; two-asset pools only).
        #[arg(long)]
        axis: usize,
        /// Sweep range as lo,hi.
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Run the axiom suite on a pool; exit 0 only if every check passes.
    Check {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random probes per check.
        #[arg(long, default_value_t = 300)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = Tolerance {
        rel: cli.rel,
        abs: cli.abs,
        max_iter: cli.max_iter,
    };
    if let Err(e) = tol.validate() {
        eprintln!("{}", diagnostic(&e));
        return ExitCode::from(2);
    }
    match run(cli.command, &tol) {
        Ok((output, all_passed)) => {
            println!("{output}");
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command, tol: &Tolerance) -> Result<(String, bool)> {
    match command {
        Command::EvalPhi { pool, reserves } => {
            let set = load_pool(&pool, tol)?;
            let r = parse_vector(&reserves)?;
            let phi = reachable::phi(set.as_ref(), &r, tol)?;
            Ok((obj(&[("phi", num(phi))]), true))
        }
        Command::EvalPv { pool, prices } => {
            let set = load_pool(&pool, tol)?;
            let c = parse_vector(&prices)?;
            let (value, minimizer) = reachable::portfolio_value(set.as_ref(), &c, tol)?;
            Ok((
                obj(&[("value", num(value)), ("minimizer", vec_num(&minimizer))]),
                true,
            ))
        }
        Command::Dualize {
            pool,
            direction,
            reserves,
            prices,
        } => {
            let set = load_pool(&pool, tol)?;
            match direction {
                DualDirection::PvToPhi => {
                    let r = parse_vector(&required(reserves, "--reserves")?)?;
                    let v = PortfolioValueFn::from_set(set.clone(), *tol);
                    let recovered = phi_from_pv(&v, &r, tol)?;
                    let direct = reachable::phi(set.as_ref(), &r, tol)?;
                    let residual = (recovered - direct).abs() / direct.abs().max(1.0);
                    Ok((
                        obj(&[("phi", num(recovered)), ("roundtrip_residual", num(residual))]),
                        true,
                    ))
                }
                DualDirection::PhiToPv => {
                    let c = parse_vector(&required(prices, "--prices")?)?;
                    let inner = set.clone();
                    let inner_tol = *tol;
                    let recovered = pv_from_phi(
                        |r| reachable::phi(inner.as_ref(), r, &inner_tol).unwrap_or(f64::NAN),
                        &c,
                        tol,
                    )?;
                    let direct = reachable::portfolio_value(set.as_ref(), &c, tol)?.0;
                    let residual = (recovered - direct).abs() / direct.abs().max(1.0);
                    Ok((
                        obj(&[("value", num(recovered)), ("roundtrip_residual", num(residual))]),
                        true,
                    ))
                }
            }
        }
        Command::Cost { pool, quantities } => {
            let set = load_pool(&pool, tol)?;
            let q = parse_vector(&quantities)?;
            let cost = prediction::cost_from_set(set.as_ref(), &q, tol)?;
            Ok((obj(&[("cost", num(cost))]), true))
        }
        Command::Arb {
            pool,
            reserves,
            gamma,
            prices,
        } => {
            let set = load_pool(&pool, tol)?;
            let r = parse_vector(&reserves)?;
            let c = parse_vector(&prices)?;
            let t = FeePoolTradingSet::new(set, r, gamma)?;
            let (profit, delta) = trade::arb(&t, &c, tol)?;
            Ok((
                obj(&[("profit", num(profit)), ("trade", vec_num(&delta))]),
                true,
            ))
        }
        Command::NoTrade {
            pool,
            reserves,
            gamma,
            prices,
        } => {
            let set = load_pool(&pool, tol)?;
            let r = parse_vector(&reserves)?;
            let c = parse_vector(&prices)?;
            let t = FeePoolTradingSet::new(set, r, gamma)?;
            let inside = trade::in_no_trade_cone(&t, &c, tol)?;
            Ok((obj(&[("in_cone", boolean(inside))]), true))
        }
        Command::Route { instance } => {
            let spec = parse_routing_spec(&slurp(&instance)?)?;
            let built = spec.build(tol)?;
            let sol = routing::route(&built, tol)?;
            let trades = sol
                .trades
                .iter()
                .map(|t| vec_num(t))
                .collect::<Vec<_>>()
                .join(",");
            Ok((
                obj(&[
                    ("profit", num(sol.primal)),
                    ("dual", num(sol.dual)),
                    ("gap", num(sol.gap)),
                    ("nu", vec_num(&sol.nu)),
                    ("psi", vec_num(&sol.psi)),
                    ("trades", format!("[{trades}]")),
                ]),
                true,
            ))
        }
        Command::Lp {
            ledger,
            reserves,
            provider,
            fraction,
            direction,
            pool,
        } => {
            let weights = parse_ledger(&slurp(&ledger)?)?;
            let book = ShareLedger::new(weights)?;
            let r = parse_vector(&reserves)?;
            let event = LiquidityEvent {
                provider,
                fraction,
                direction: match direction {
                    LpDirection::Add => LiquidityDirection::Add,
                    LpDirection::Remove => LiquidityDirection::Remove,
                },
            };
            let (next, scaled) = apply_liquidity(&book, &r, &event)?;
            let entries = next
                .weights()
                .iter()
                .map(|(who, w)| format!("{}:{}", quote(who), num(*w)))
                .collect::<Vec<_>>()
                .join(",");
            let mut fields = vec![
                ("ledger", format!("{{{entries}}}")),
                ("reserves", vec_num(&scaled)),
            ];
            if let Some(path) = pool {
                let set = load_pool(&path, tol)?;
                let nu = match event.direction {
                    LiquidityDirection::Add => event.fraction,
                    LiquidityDirection::Remove => -event.fraction,
                };
                let invariant = price_invariance_check(set.as_ref(), &r, nu, tol)?;
                fields.push(("price_invariant", boolean(invariant)));
            }
            Ok((obj(&fields), true))
        }
        Command::ExportCurve {
            pool,
            axis,
            range,
            samples,
        } => {
            let set = load_pool(&pool, tol)?;
            let csv = export_curve(set.as_ref(), axis, &range, samples, tol)?;
            Ok((csv, true))
        }
        Command::Check { pool, seed, samples } => {
            let set = load_pool(&pool, tol)?;
            check_pool(set.as_ref(), seed, samples, tol)
        }
    }
}

fn load_pool(path: &Path, tol: &Tolerance) -> Result<cfmmgeo::reachable::SharedSet> {
    parse_pool_spec(&slurp(path)?)?.build(tol)
}

fn slurp(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

fn required(value: Option<String>, flag: &str) -> Result<String> {
    value.ok_or_else(|| Error::InvalidArgument(format!("{flag} is required for this direction")))
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let body = match text.strip_prefix('@') {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?,
        None => text.to_string(),
    };
    body.trim()
        .split(',')
        .map(|token| {
            token
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number {token:?}: {e}")))
        })
        .collect()
}

fn export_curve(
    set: &dyn ReachableSet,
    axis: usize,
    range: &str,
    samples: usize,
    tol: &Tolerance,
) -> Result<String> {
    if set.dim() != 2 {
        return Err(Error::Unsupported(
            "curve export is defined for two-asset pools".into(),
        ));
    }
    if axis > 1 {
        return Err(Error::IndexOutOfRange { index: axis, dim: 2 });
    }
    let bounds = parse_vector(range)?;
    let [lo, hi] = bounds.as_slice() else {
        return Err(Error::InvalidArgument(format!(
            "range must be lo,hi, got {range:?}"
        )));
    };
    if !(*lo > 0.0) || !(*hi >= *lo) || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "range must satisfy 0 < lo <= hi, got {range:?}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let other = 1 - axis;
    let mut out = String::new();
    out.push_str(if axis == 0 { "r1,r2_boundary" } else { "r2,r1_boundary" });
    for i in 0..samples {
        let x = if samples == 1 {
            *lo
        } else {
            lo + (hi - lo) * i as f64 / (samples - 1) as f64
        };
        let mut probe = [0.0; 2];
        let mut pred = |t: f64| {
            probe[axis] = x;
            probe[other] = t;
            reachable::contains(set, &probe).unwrap_or(false)
        };
        let bracket = expand_bracket(&mut pred, 1.0)?;
        let boundary = bisect_boundary(pred, bracket, tol)?;
        out.push('\n');
        out.push_str(&format!("{},{}", raw_num(x), raw_num(boundary)));
    }
    Ok(out)
}

fn check_pool(
    set: &dyn ReachableSet,
    seed: u64,
    samples: usize,
    tol: &Tolerance,
) -> Result<(String, bool)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dim = set.dim();
    let draw = |rng: &mut ChaCha20Rng| -> Vec<f64> {
        (0..dim).map(|_| rng.gen_range(0.1..=10.0)).collect()
    };
    let mut checks: Vec<(&str, usize)> = Vec::new();

    let mut violations = 0usize;
    for _ in 0..samples {
        let r = draw(&mut rng);
        let t: f64 = rng.gen_range(0.5..=2.0);
        let scaled: Vec<f64> = r.iter().map(|x| x * t).collect();
        let phi = reachable::phi(set, &r, tol)?;
        let phi_scaled = reachable::phi(set, &scaled, tol)?;
        if (phi_scaled - t * phi).abs() > 1e-8 * (1.0 + phi.abs() * t) {
            violations += 1;
        }
    }
    checks.push(("homogeneity", violations));

    let mut violations = 0usize;
    for _ in 0..samples {
        let r = draw(&mut rng);
        let mut bumped = r.clone();
        let coord = rng.gen_range(0..dim);
        bumped[coord] += rng.gen_range(0.0..=1.0);
        let phi = reachable::phi(set, &r, tol)?;
        let phi_bumped = reachable::phi(set, &bumped, tol)?;
        if phi_bumped < phi - 1e-9 * (1.0 + phi.abs()) {
            violations += 1;
        }
    }
    checks.push(("monotonicity", violations));

    let mut violations = 0usize;
    for _ in 0..samples {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let mid: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect();
        let phi_a = reachable::phi(set, &a, tol)?;
        let phi_b = reachable::phi(set, &b, tol)?;
        let phi_mid = reachable::phi(set, &mid, tol)?;
        if phi_mid < 0.5 * (phi_a + phi_b) - 1e-9 * (1.0 + phi_mid.abs()) {
            violations += 1;
        }
    }
    checks.push(("midpoint_concavity", violations));

    let mut violations = 0usize;
    for _ in 0..samples {
        let r = draw(&mut rng);
        let phi = reachable::phi(set, &r, tol)?;
        if (phi - 1.0).abs() <= 1e-7 {
            continue;
        }
        let member = reachable::contains(set, &r)?;
        if member != (phi >= 1.0) {
            violations += 1;
        }
    }
    checks.push(("membership_consistency", violations));

    let mut violations = 0usize;
    for _ in 0..samples {
        let r = draw(&mut rng);
        let boundary = reachable::scale_to_boundary(set, &r, tol)?;
        let phi = reachable::phi(set, &boundary, tol)?;
        if (phi - 1.0).abs() > 1e-7 {
            violations += 1;
        }
    }
    checks.push(("boundary_scaling", violations));

    let passed = checks.iter().all(|(_, v)| *v == 0);
    let rendered = checks
        .iter()
        .map(|(name, v)| obj(&[("name", quote(name)), ("violations", v.to_string())]))
        .collect::<Vec<_>>()
        .join(",");
    let output = obj(&[
        ("passed", boolean(passed)),
        ("seed", seed.to_string()),
        ("samples", samples.to_string()),
        ("checks", format!("[{rendered}]")),
    ]);
    Ok((output, passed))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoBracketFound { .. }
        | Error::MaxIterExceeded { .. }
        | Error::RoutingNotConverged { .. } => 3,
        _ => 1,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::NonBracketing => "non_bracketing",
        Error::NoBracketFound { .. } => "no_bracket_found",
        Error::MaxIterExceeded { .. } => "max_iter_exceeded",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::InvalidScale(_) => "invalid_scale",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::NotInSet => "not_in_set",
        Error::ZeroLiquidity => "zero_liquidity",
        Error::NonSmoothPoint => "non_smooth_point",
        Error::DegenerateNumeraire => "degenerate_numeraire",
        Error::Unsupported(_) => "unsupported",
        Error::InfeasibleFirstTrade => "infeasible_first_trade",
        Error::RemoveExceedsShare => "remove_exceeds_share",
        Error::NonPositiveFraction => "non_positive_fraction",
        Error::RoutingNotConverged { .. } => "routing_not_converged",
        Error::Parse(_) => "parse_error",
    }
}

fn diagnostic(e: &Error) -> String {
    obj(&[("error", quote(&e.to_string())), ("kind", quote(kind(e)))])
}

fn obj(fields: &[(&str, String)]) -> String {
    let body = fields
        .iter()
        .map(|(k, v)| format!("{}:{v}", quote(k)))
        .collect::<Vec<_>>()
        .join(",");
    format!("{{{body}}}")
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "null".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"".to_string() } else { "\"-inf\"".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

fn raw_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn vec_num(xs: &[f64]) -> String {
    let body = xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",");
    format!("[{body}]")
}

fn boolean(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
