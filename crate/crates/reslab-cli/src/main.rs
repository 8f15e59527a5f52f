//! Batch front end: parse a system configuration, dispatch to the engines,
//! and emit CSV or key-value report artifacts.
//!
//! Exit codes: 0 on success, 1 on parse/validation errors, 2 when a
//! numerical guard trips on otherwise valid input (divergent region,
//! contour clearance, winding-integral integer check, Newton failure).

mod config;
mod output;

use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use reslab::count::{count_in_strip, growth_fit};
use reslab::resonance::{
    exact_suspension_lattice, locate_resonances, morse_smale_union, resonances_to_csv,
    LocateTolerances, MapResonanceSet, Resonance, WindowSpec,
};
use reslab::systems::{lattice_lines, orbit_data, SystemSpec};
use reslab::trace::{line_lattice_points, trace_check, BoundShape, BumpSpec, SpectralSource};
use reslab::zeta::{ruelle_zeta, zeta1, zeta1_log_derivative};
use reslab::{C64, MERGE_TOLERANCE};

use config::ConfigDocument;

/// Class-table horizon used by point evaluations when the config gives none.
const DEFAULT_HORIZON: f64 = 20.0;

/// Rate floor for line-complete spectral sums: a comb of rate `r` moves the
/// spectral side by at most a small multiple of `|r|`, so lines below this
/// floor are invisible at reporting precision.
const LINE_COMPLETE_FLOOR: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "reslab", version, about = "Periodic-orbit laboratory: zeta functions, resonance lattices, localization, trace-formula and counting checks")]
struct Cli {
    /// Path to the JSON system configuration.
    config: PathBuf,

    /// Write the artifact here (temp file + rename) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Period-class table (total_period, weight) up to a period ceiling.
    Orbits {
        /// Largest total period included in the table.
        #[arg(long)]
        max_period: f64,
    },
    /// Evaluate one zeta representation at a point of the lambda plane.
    ZetaEval {
        /// Evaluation point as `re,im`.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: C64,
        /// Representation to evaluate.
        #[arg(long, value_enum, default_value_t = ZetaFunction::Zeta1)]
        function: ZetaFunction,
    },
    /// Exact resonance lattice inside a window.
    Exact {
        /// Window as `re_min,re_max,im_min,im_max`; overrides the config.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<WindowArg>,
    },
    /// Localize resonances numerically inside a window.
    Locate {
        /// Window as `re_min,re_max,im_min,im_max`; overrides the config.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<WindowArg>,
        /// Bisection stops at boxes of this diameter.
        #[arg(long)]
        seed_diameter: Option<f64>,
        /// Newton convergence tolerance.
        #[arg(long)]
        newton_tol: Option<f64>,
    },
    /// Compare the geometric and spectral sides of the trace identity.
    TraceCheck {
        /// Bump half-width; overrides the config bump.
        #[arg(long)]
        l: Option<f64>,
        /// Bump center; overrides the config bump.
        #[arg(long)]
        d: Option<f64>,
        /// Truncate the spectral side to the strip `Im > -A` instead of
        /// summing every lattice line completely.
        #[arg(long = "A")]
        a: Option<f64>,
        /// Real-part cutoff of the spectral sum.
        #[arg(long, default_value_t = 400.0)]
        re_cutoff: f64,
        /// Epsilon in the expected-residual shape.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Leading constant in the expected-residual shape.
        #[arg(long, default_value_t = 1.0)]
        bound_c: f64,
    },
    /// Count resonances in disk-strip regions, optionally fitting growth.
    Count {
        /// Largest strip radius.
        #[arg(long)]
        emax: f64,
        /// Strip depth; overrides the config strip.
        #[arg(long)]
        beta: Option<f64>,
        /// Fit the growth exponent over the dyadic radius grid emax/32..emax.
        #[arg(long)]
        fit: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ZetaFunction {
    /// Exponential of the resummed orbit sum.
    Zeta1,
    /// Logarithmic derivative of zeta1.
    Zeta1Dlog,
    /// Product over primitive orbits.
    Ruelle,
}

#[derive(Clone, Copy, Debug)]
struct WindowArg {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `re,im`, got `{s}`"));
    }
    let re: f64 = parts[0].trim().parse().map_err(|e| format!("re: {e}"))?;
    let im: f64 = parts[1].trim().parse().map_err(|e| format!("im: {e}"))?;
    Ok(C64::new(re, im))
}

fn parse_window(s: &str) -> Result<WindowArg, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected `re_min,re_max,im_min,im_max`, got `{s}`"));
    }
    let mut v = [0.0f64; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|e| format!("`{part}`: {e}"))?;
    }
    Ok(WindowArg {
        re_min: v[0],
        re_max: v[1],
        im_min: v[2],
        im_max: v[3],
    })
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version exit 0; usage mistakes are validation errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    if let Err(err) = configure_threads() {
        eprintln!("reslab: {err:#}");
        return 1;
    }
    match execute(&cli) {
        Ok(artifact) => match output::write_artifact(cli.out.as_deref(), &artifact) {
            Ok(()) => 0,
            Err(err) => {
                eprintln!("reslab: {err:#}");
                1
            }
        },
        Err(err) => {
            eprintln!("reslab: {err:#}");
            match err.downcast_ref::<reslab::Error>() {
                Some(guard) if guard.is_numerical_guard() => 2,
                _ => 1,
            }
        }
    }
}

/// RESLAB_THREADS caps engine parallelism; 0 or unset keeps the default.
fn configure_threads() -> anyhow::Result<()> {
    let Some(raw) = std::env::var_os("RESLAB_THREADS") else {
        return Ok(());
    };
    let raw = raw.to_string_lossy();
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("RESLAB_THREADS must be a non-negative integer, got `{raw}`"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))?;
    let doc: ConfigDocument = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", cli.config.display()))?;
    doc.validate()?;
    let spec = doc.system.to_spec()?;
    match cli.command {
        Command::Orbits { max_period } => cmd_orbits(&spec, max_period),
        Command::ZetaEval { lambda, function } => cmd_zeta_eval(&doc, &spec, lambda, function),
        Command::Exact { window } => cmd_exact(&doc, &spec, window),
        Command::Locate {
            window,
            seed_diameter,
            newton_tol,
        } => cmd_locate(&doc, &spec, window, seed_diameter, newton_tol),
        Command::TraceCheck {
            l,
            d,
            a,
            re_cutoff,
            epsilon,
            bound_c,
        } => cmd_trace_check(&doc, &spec, l, d, a, re_cutoff, epsilon, bound_c),
        Command::Count { emax, beta, fit } => cmd_count(&doc, &spec, emax, beta, fit),
    }
}

fn cmd_orbits(spec: &SystemSpec, max_period: f64) -> anyhow::Result<String> {
    let data = orbit_data(spec, max_period)?;
    let mut out = String::from("total_period,re_weight,im_weight\n");
    for class in &data.period_classes {
        out.push_str(&format!(
            "{},{},{}\n",
            class.total_period, class.geometric_weight.re, class.geometric_weight.im
        ));
    }
    // Fixed points carry no period classes; list them as a comment sidecar
    // so the artifact still records the full system.
    if let SystemSpec::MorseSmale(ms) = spec {
        for fp in &ms.fixed_points {
            let gen: Vec<String> = fp.generator_eigenvalues.iter().map(C64::to_string).collect();
            let weight: Vec<String> = fp
                .weight_generator_eigenvalues
                .iter()
                .map(C64::to_string)
                .collect();
            out.push_str(&format!(
                "# fixed_point {}: generator_eigenvalues=[{}] stable_count={} weight_generator_eigenvalues=[{}]\n",
                fp.id,
                gen.join(", "),
                fp.stable_count,
                weight.join(", "),
            ));
        }
    }
    Ok(out)
}

fn cmd_zeta_eval(
    doc: &ConfigDocument,
    spec: &SystemSpec,
    lambda: C64,
    function: ZetaFunction,
) -> anyhow::Result<String> {
    let horizon = doc.horizon.unwrap_or(DEFAULT_HORIZON);
    let data = orbit_data(spec, horizon)?;
    let (name, eval) = match function {
        ZetaFunction::Zeta1 => ("zeta1", zeta1(&data, lambda)?),
        ZetaFunction::Zeta1Dlog => ("zeta1-dlog", zeta1_log_derivative(&data, lambda)?),
        ZetaFunction::Ruelle => ("ruelle", ruelle_zeta(&data, lambda)?),
    };
    Ok(format!(
        "function: {name}\nlambda_re: {}\nlambda_im: {}\nvalue_re: {}\nvalue_im: {}\ntruncation_horizon: {}\ntail_bound: {}\nheuristic: {}\n",
        lambda.re,
        lambda.im,
        eval.value.re,
        eval.value.im,
        eval.truncation_horizon,
        eval.tail_bound,
        eval.heuristic
    ))
}

fn resolve_window(doc: &ConfigDocument, flag: Option<WindowArg>) -> anyhow::Result<WindowSpec> {
    let (re_min, re_max, im_min, im_max) = match (flag, &doc.window) {
        (Some(w), _) => (w.re_min, w.re_max, w.im_min, w.im_max),
        (None, Some(w)) => (w.re_min, w.re_max, w.im_min, w.im_max),
        (None, None) => {
            anyhow::bail!("no window: pass --window or set `window` in the config")
        }
    };
    Ok(WindowSpec::new(re_min, re_max, im_min, im_max)?)
}

/// Smallest line rate whose lattice can reach `Im >= im_min`: a line of
/// rate `r` and spacing `T` sits at height `ln|r| / T`. The minimum runs
/// over the system's spacings; infinite when the system has no lines.
fn line_floor(spec: &SystemSpec, im_min: f64) -> f64 {
    let spacings: Vec<f64> = match spec {
        SystemSpec::ToralSuspension(t) => vec![t.roof],
        SystemSpec::HorseshoeSuspension(h) => vec![h.roof],
        SystemSpec::MorseSmale(ms) => {
            ms.closed_orbits.iter().map(|o| o.primitive_period).collect()
        }
        SystemSpec::ExplicitOrbits { orbits } => {
            orbits.iter().map(|o| o.primitive_period).collect()
        }
    };
    spacings
        .iter()
        .map(|t| (t * (im_min - 1e-6)).exp())
        .fold(f64::INFINITY, f64::min)
        .max(f64::MIN_POSITIVE)
}

/// Exact lattice points of the system inside the window. Suspensions go
/// through the map-resonance product representation; assembled flows take
/// the closed-orbit/fixed-point union.
fn exact_points(spec: &SystemSpec, window: &WindowSpec) -> reslab::Result<Vec<Resonance>> {
    match spec {
        SystemSpec::MorseSmale(ms) => {
            morse_smale_union(&ms.closed_orbits, &ms.fixed_points, window)
        }
        SystemSpec::ExplicitOrbits { orbits } => morse_smale_union(orbits, &[], window),
        SystemSpec::ToralSuspension(_) | SystemSpec::HorseshoeSuspension(_) => {
            let roof = match spec {
                SystemSpec::ToralSuspension(t) => t.roof,
                SystemSpec::HorseshoeSuspension(h) => h.roof,
                _ => unreachable!("suspension arm"),
            };
            let lines = lattice_lines(spec, line_floor(spec, window.im_min))?;
            // Identical rates come out adjacent (lines are sorted by rate),
            // so a single fold recovers map-resonance multiplicities.
            let mut rates: Vec<(C64, u32)> = Vec::new();
            for line in &lines {
                match rates.last_mut() {
                    Some((rate, mult)) if (line.rate - *rate).norm() <= MERGE_TOLERANCE => {
                        *mult += 1
                    }
                    _ => rates.push((line.rate, 1)),
                }
            }
            let set = MapResonanceSet::new(rates)?;
            exact_suspension_lattice(&set, roof, window)
        }
    }
}

fn cmd_exact(
    doc: &ConfigDocument,
    spec: &SystemSpec,
    window: Option<WindowArg>,
) -> anyhow::Result<String> {
    let window = resolve_window(doc, window)?;
    let points = exact_points(spec, &window)?;
    Ok(resonances_to_csv(&points))
}

fn cmd_locate(
    doc: &ConfigDocument,
    spec: &SystemSpec,
    window: Option<WindowArg>,
    seed_diameter: Option<f64>,
    newton_tol: Option<f64>,
) -> anyhow::Result<String> {
    let window = resolve_window(doc, window)?;
    let mut tolerances = LocateTolerances::default();
    if let Some(t) = &doc.tolerances {
        if let Some(s) = t.seed_diameter {
            tolerances.seed_diameter = s;
        }
        if let Some(n) = t.newton_tol {
            tolerances.newton_tol = n;
        }
    }
    if let Some(s) = seed_diameter {
        tolerances.seed_diameter = s;
    }
    if let Some(n) = newton_tol {
        tolerances.newton_tol = n;
    }
    let lines = lattice_lines(spec, line_floor(spec, window.im_min))?;
    let located = locate_resonances(&lines, &window, &tolerances)?;
    Ok(resonances_to_csv(&located))
}

#[allow(clippy::too_many_arguments)]
fn cmd_trace_check(
    doc: &ConfigDocument,
    spec: &SystemSpec,
    l: Option<f64>,
    d: Option<f64>,
    a: Option<f64>,
    re_cutoff: f64,
    epsilon: f64,
    bound_c: f64,
) -> anyhow::Result<String> {
    let l = l
        .or(doc.bump.as_ref().map(|b| b.l))
        .context("no bump half-width: pass --l or set bump.l in the config")?;
    let d = d
        .or(doc.bump.as_ref().map(|b| b.d))
        .context("no bump center: pass --d or set bump.d in the config")?;
    let bump = match doc.bump.as_ref().and_then(|b| b.quadrature_order) {
        Some(order) => BumpSpec::with_order(l, d, order)?,
        None => BumpSpec::new(l, d)?,
    };
    let a = a.or(doc.strip.as_ref().and_then(|s| s.a));
    // The geometric side needs classes over the whole bump support
    // [d-l, d+l]; suspensions quantize the table to multiples of the roof,
    // so round the default request up to the next full class.
    let needed = d + l;
    let horizon = doc.horizon.unwrap_or(match spec {
        SystemSpec::ToralSuspension(t) => t.roof * (needed / t.roof).ceil(),
        SystemSpec::HorseshoeSuspension(h) => h.roof * (needed / h.roof).ceil(),
        _ => needed,
    });
    let data = orbit_data(spec, horizon)?;
    let shape = BoundShape {
        c: bound_c,
        epsilon,
        ambient_dimension: spec.ambient_dimension(),
    };
    let report = match a {
        Some(depth) => {
            let lines = lattice_lines(spec, line_floor(spec, -depth))?;
            let points = line_lattice_points(&lines, depth, re_cutoff)?;
            trace_check(
                &data,
                SpectralSource::List(&points),
                &bump,
                depth,
                re_cutoff,
                &shape,
            )?
        }
        None => {
            let lines = lattice_lines(spec, LINE_COMPLETE_FLOOR)?;
            trace_check(
                &data,
                SpectralSource::Lines(&lines),
                &bump,
                f64::INFINITY,
                re_cutoff,
                &shape,
            )?
        }
    };
    Ok(report.to_key_value())
}

fn cmd_count(
    doc: &ConfigDocument,
    spec: &SystemSpec,
    emax: f64,
    beta: Option<f64>,
    fit: bool,
) -> anyhow::Result<String> {
    let beta = beta
        .or(doc.strip.as_ref().map(|s| s.beta))
        .context("no strip depth: pass --beta or set strip.beta in the config")?;
    anyhow::ensure!(
        emax.is_finite() && emax > 0.0,
        "emax must be positive and finite, got {emax}"
    );
    // Slightly oversized so the disk-strip regions are provably covered.
    let completeness = WindowSpec::new(-(emax + 1.0), emax + 1.0, -beta - 1e-6, emax + 1.0)?;
    let points = exact_points(spec, &completeness)?;
    if fit {
        let grid: Vec<f64> = [32.0, 16.0, 8.0, 4.0, 2.0, 1.0]
            .iter()
            .map(|div| emax / div)
            .collect();
        let report = growth_fit(&points, Some(&completeness), &grid, beta)?;
        Ok(format!("{}\n{}", report.to_key_value(), report.strip_counts_csv()))
    } else {
        let count = count_in_strip(&points, Some(&completeness), emax, beta)?;
        Ok(format!("e,count\n{emax},{count}\n"))
    }
}
