//! Command-line front end: `mobedge <command> key=value ... [@file]`.
//!
//! Commands: lyapunov, spectrum, phase-diagram, detect-me, reduce, verify.
//! Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
//! 3 numerical failure.

use mobedge::cocycle::{self, Cocycle};
use mobedge::config::Args;
use mobedge::models::{self, ModelSpec, Variant};
use mobedge::phase::{self, ClassifyConfig};
use mobedge::spectrum;
use mobedge::{Error, Result};
use std::io::Write;

const USAGE: &str = "\
usage: mobedge <command> [key=value ...] [@configfile]

commands:
  lyapunov       Lyapunov exponents on an energy grid
                 model=... lambda=... [energies=a,b,c | emin= emax= ecount=]
                 [steps=30000] [thetas=4] [seed=7] [eps=0]
  spectrum       eigenvalues of a finite box
                 model=... [size=1024] [theta=0.1318] [ipr=0|1]
  phase-diagram  classify an energy x coupling grid
                 model=... [lambdas=a,b | lmin= lmax= lcount=] [emin= emax= ecount=]
  detect-me      locate mobility edges on an energy grid
                 model=... emin= emax= [ecount=] (spacing must be <= 0.01)
  reduce         parameters of the generalized Aubry-Andre normal form
                 model=amo|gaa|long_range_dual|peaky ...
  verify         run the structural invariant suite (exit 1 on any failure)

common keys: alpha=golden|<decimal>|cf:a1,a2,... output=<path> format=csv|json
             threads=N (or MOBEDGE_THREADS); steps/thetas/seed/box/spectrum_thetas
             tune the classifier where applicable";

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(run(&argv));
}

fn run(argv: &[String]) -> i32 {
    let Some(command) = argv.first() else {
        eprintln!("{USAGE}");
        return 2;
    };
    let args = match Args::parse(&argv[1..]) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Err(e) = init_threads(&args) {
        eprintln!("error: {e}");
        return 2;
    }
    let out = match dispatch(command, &args) {
        Ok(text) => text,
        Err(Outcome::VerifyFailed(text)) => {
            print_output(&args, &text);
            return 1;
        }
        Err(Outcome::Fault(e)) => {
            eprintln!("error: {e}");
            return match e {
                Error::Config(_) | Error::Domain(_) | Error::NotApplicable(_) => 2,
                Error::Singular(_) | Error::Convergence(_) => 3,
            };
        }
    };
    print_output(&args, &out);
    0
}

enum Outcome {
    VerifyFailed(String),
    Fault(Error),
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        Outcome::Fault(e)
    }
}

fn dispatch(command: &str, args: &Args) -> std::result::Result<String, Outcome> {
    match command {
        "lyapunov" => Ok(cmd_lyapunov(args)?),
        "spectrum" => Ok(cmd_spectrum(args)?),
        "phase-diagram" => Ok(cmd_phase_diagram(args)?),
        "detect-me" => Ok(cmd_detect_me(args)?),
        "reduce" => Ok(cmd_reduce(args)?),
        "verify" => cmd_verify(args),
        "help" | "--help" | "-h" => Ok(USAGE.to_string()),
        other => Err(Outcome::Fault(Error::Config(format!(
            "unknown command '{other}'\n{USAGE}"
        )))),
    }
}

fn init_threads(args: &Args) -> Result<()> {
    let n = match args.get("threads") {
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("threads={v} is not an integer")))?,
        None => match std::env::var("MOBEDGE_THREADS") {
            Ok(v) => v
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("MOBEDGE_THREADS={v} is not an integer")))?,
            Err(_) => return Ok(()),
        },
    };
    if n == 0 {
        return Err(Error::Config("threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn print_output(args: &Args, text: &str) {
    match args.get("output") {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {path}: {e}");
                std::process::exit(2);
            }
        }
        None => {
            let stdout = std::io::stdout();
            let _ = stdout.lock().write_all(text.as_bytes());
        }
    }
}

fn csv_header(command: &str, args: &Args, columns: &str) -> String {
    format!(
        "# mobedge v{}\n# command: {command}\n# config: {}\n{columns}\n",
        env!("CARGO_PKG_VERSION"),
        args.canonical()
    )
}

fn want_json(args: &Args, default_json: bool) -> Result<bool> {
    match args.get("format") {
        None => Ok(default_json),
        Some("json") => Ok(true),
        Some("csv") => Ok(false),
        Some(other) => Err(Error::Config(format!("format={other} (csv|json)"))),
    }
}

fn classify_config(args: &Args) -> Result<ClassifyConfig> {
    let d = ClassifyConfig::default();
    Ok(ClassifyConfig {
        steps: args.u64_or("steps", d.steps)?,
        theta_samples: args.usize_or("thetas", d.theta_samples)?,
        seed: args.u64_or("seed", d.seed)?,
        box_size: args.usize_or("box", d.box_size)?,
        spectrum_thetas: args.usize_or("spectrum_thetas", d.spectrum_thetas)?,
        eps_grid: d.eps_grid,
        band_halfwidth: args.f64_or("band_halfwidth", d.band_halfwidth)?,
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn cmd_lyapunov(args: &Args) -> Result<String> {
    let model = args.model()?;
    let energies = args
        .energy_grid()?
        .ok_or_else(|| Error::Config("lyapunov needs energies= or emin=/emax=".into()))?;
    let steps = args.u64_or("steps", 30_000)?;
    let thetas = args.usize_or("thetas", 4)?;
    let seed = args.u64_or("seed", 7)?;
    let eps = args.f64_or("eps", 0.0)?;

    let mut rows = Vec::with_capacity(energies.len());
    for &e in &energies {
        let c = Cocycle::one_step(model, e);
        let est = cocycle::lyapunov(&c, steps, thetas, seed);
        let value = if eps == 0.0 {
            est.value
        } else {
            cocycle::lyapunov_complexified(&c, eps, steps, thetas, seed)?
        };
        rows.push((e, value, est.dispersion, est.converged, models::closed_form_le(&model, e)));
    }
    if want_json(args, false)? {
        let items: Vec<serde_json::Value> = rows
            .iter()
            .map(|(e, l, d, conv, f)| {
                serde_json::json!({"energy": e, "le": l, "dispersion": d,
                                   "converged": conv, "le_formula": f})
            })
            .collect();
        return Ok(format!("{}\n", serde_json::to_string_pretty(&items).unwrap()));
    }
    let mut out = csv_header("lyapunov", args, "energy,le,dispersion,converged,le_formula");
    for (e, l, d, conv, f) in rows {
        out.push_str(&format!("{},{},{},{},{}\n", fmt(e), fmt(l), fmt(d), conv, fmt(f)));
    }
    Ok(out)
}

fn cmd_spectrum(args: &Args) -> Result<String> {
    let model = args.model()?;
    let size = args.usize_or("size", 1024)?;
    let theta = args.f64_or("theta", 0.1318)?;
    let with_ipr = args.get("ipr").map(|v| v == "1" || v == "true").unwrap_or(false);
    let op = spectrum::TridiagonalOperator::from_model(&model, theta, size)?;
    let eigs = op.eigenvalues();
    let iprs: Vec<Option<f64>> = if with_ipr {
        eigs.iter()
            .map(|&e| op.eigenvector(e, &[]).ok().map(|v| spectrum::ipr(&v)))
            .collect()
    } else {
        vec![None; eigs.len()]
    };
    if want_json(args, false)? {
        let items: Vec<serde_json::Value> = eigs
            .iter()
            .zip(&iprs)
            .enumerate()
            .map(|(i, (e, ipr))| serde_json::json!({"index": i, "eigenvalue": e, "ipr": ipr}))
            .collect();
        return Ok(format!("{}\n", serde_json::to_string_pretty(&items).unwrap()));
    }
    let mut out = csv_header("spectrum", args, "index,eigenvalue,ipr");
    for (i, (e, ipr)) in eigs.iter().zip(&iprs).enumerate() {
        out.push_str(&format!(
            "{i},{},{}\n",
            fmt(*e),
            ipr.map(fmt).unwrap_or_default()
        ));
    }
    Ok(out)
}

fn lambda_of(model: &ModelSpec) -> f64 {
    match model.variant {
        Variant::Amo { lambda }
        | Variant::Gaa { lambda, .. }
        | Variant::Mosaic { lambda, .. }
        | Variant::LongRangeDual { lambda, .. }
        | Variant::Peaky { lambda, .. } => lambda,
    }
}

fn cmd_phase_diagram(args: &Args) -> Result<String> {
    let model = args.model()?;
    let cfg = classify_config(args)?;
    let lambdas: Vec<f64> = if let Some(list) = args.get("lambdas") {
        list.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad lambda '{t}'")))
            })
            .collect::<Result<_>>()?
    } else if let (Some(lo), Some(hi)) = (args.f64("lmin")?, args.f64("lmax")?) {
        phase::linspace(lo, hi, args.usize_or("lcount", 11)?.max(2))
    } else {
        vec![lambda_of(&model)]
    };
    let energies = match args.energy_grid()? {
        Some(es) => es,
        None => {
            let (lo, hi) = spectrum::spectrum_bounds(&model);
            phase::linspace(lo, hi, args.usize_or("ecount", 201)?.max(2))
        }
    };
    let diagram = phase::sweep(&model, &energies, &lambdas, &cfg)?;
    if want_json(args, false)? {
        return Ok(format!("{}\n", serde_json::to_string_pretty(&diagram).unwrap()));
    }
    let mut out = csv_header(
        "phase-diagram",
        args,
        "lambda,energy,class,le_numeric,le_formula,accel,in_spectrum,ipr_median",
    );
    for (i, &lambda) in diagram.lambdas.iter().enumerate() {
        for c in &diagram.cells[i] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},\n",
                fmt(lambda),
                fmt(c.energy),
                c.class.as_str(),
                fmt(c.le_numeric.value),
                fmt(c.le_formula),
                c.accel.map(|a| format!("{}", a.quantized)).unwrap_or_default(),
                c.membership.in_spectrum
            ));
        }
    }
    Ok(out)
}

fn cmd_detect_me(args: &Args) -> Result<String> {
    let model = args.model()?;
    let cfg = classify_config(args)?;
    let grid = match args.energy_grid()? {
        Some(es) => es,
        None => {
            // default: a 0.01-spaced window around the predicted edges
            let predicted = models::me_prediction(&model).critical_energies;
            if predicted.is_empty() {
                return Err(Error::Config(
                    "detect-me needs emin=/emax= (model has no predicted edge)".into(),
                ));
            }
            let lo = predicted.iter().cloned().fold(f64::INFINITY, f64::min) - 0.5;
            let hi = predicted.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.5;
            let n = ((hi - lo) / 0.01).round() as usize + 1;
            phase::linspace(lo, hi, n)
        }
    };
    let detection = phase::detect_me(&model, &grid, &cfg)?;
    let predicted = models::me_prediction(&model);
    if want_json(args, true)? {
        let doc = serde_json::json!({
            "model": model,
            "prediction": predicted,
            "detection": detection,
        });
        return Ok(format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()));
    }
    let mut out = csv_header(
        "detect-me",
        args,
        "energy,below,above,nearest_predicted,gap",
    );
    for c in &detection.crossings {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(c.energy),
            fmt(c.below),
            fmt(c.above),
            c.nearest_predicted.map(fmt).unwrap_or_default(),
            c.gap.map(fmt).unwrap_or_default()
        ));
    }
    out.push_str(&format!("# {}\n", detection.diagnostic));
    Ok(out)
}

fn cmd_reduce(args: &Args) -> Result<String> {
    let model = args.model()?;
    let r = models::reduce_to_gaa(&model)?;
    let doc = serde_json::json!({
        "lambda_eff": r.lambda_eff,
        "tau": r.tau,
        "shift": r.energy_shift,
        "scale": r.energy_scale,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

struct Check {
    name: &'static str,
    measured: f64,
    tolerance: f64,
    pass: bool,
}

fn check(name: &'static str, measured: f64, tolerance: f64) -> Check {
    Check { name, measured, tolerance, pass: measured <= tolerance }
}

fn cmd_verify(args: &Args) -> std::result::Result<String, Outcome> {
    let alpha = args.alpha().map_err(Outcome::Fault)?;
    let golden = mobedge::golden_mean();
    let mut checks: Vec<Check> = Vec::new();

    // continued-fraction best approximations
    {
        let cf = mobedge::arithmetic::cf_expand(alpha, 20).map_err(Outcome::Fault)?;
        let (ok, slack) = mobedge::arithmetic::best_approx_check(&cf).map_err(Outcome::Fault)?;
        checks.push(Check {
            name: "cf-best-approximations",
            measured: -slack,
            tolerance: 0.0,
            pass: ok,
        });
    }

    // Chebyshev-type block polynomial, closed form vs recurrence
    {
        let mut worst = 0.0_f64;
        for kappa in 1..=6u32 {
            for e in [-2.5, -2.0, -0.7, 0.3, 1.9, 2.0, 3.1] {
                let d = (cocycle::chebyshev_a(kappa, e) - cocycle::chebyshev_a_closed(kappa, e))
                    .abs();
                worst = worst.max(d / cocycle::chebyshev_a(kappa, e).abs().max(1.0));
            }
        }
        checks.push(check("block-polynomial-closed-form", worst, 1e-10));
    }

    let amo = ModelSpec::new(Variant::Amo { lambda: 2.0 }, alpha).map_err(Outcome::Fault)?;
    let gaa =
        ModelSpec::new(Variant::Gaa { lambda: 0.7, tau: 0.5 }, alpha).map_err(Outcome::Fault)?;
    let mosaic =
        ModelSpec::new(Variant::Mosaic { lambda: 1.5, kappa: 2 }, alpha).map_err(Outcome::Fault)?;

    // determinant sequence vs direct transfer product
    {
        let mut worst = 0.0_f64;
        for (m, e) in [(&amo, 1.3), (&gaa, 0.4), (&mosaic, 0.9)] {
            let r = mobedge::greens::transfer_identity_residual(m, 0.318, e, 60)
                .map_err(Outcome::Fault)?;
            worst = worst.max(r);
        }
        checks.push(check("transfer-matrix-identity", worst, 1e-8));
    }

    // mosaic determinant recurrences
    {
        let r = mobedge::greens::mosaic_recurrence_check(&mosaic, 0.8, 0.27, 8)
            .map_err(Outcome::Fault)?;
        checks.push(check("mosaic-recurrences", r[0].max(r[1]).max(r[2]), 1e-8));
    }

    // GAA reflection symmetry + trigonometric degree
    {
        let (asym, high) =
            mobedge::greens::gaa_structure_check(&gaa, 0.4, 20, 128).map_err(Outcome::Fault)?;
        checks.push(check("gaa-determinant-structure", asym.max(high), 1e-8));
    }

    // explicit conjugation at the mosaic critical energy
    {
        let c = cocycle::zero_energy_conjugacy(&mosaic, 1).map_err(Outcome::Fault)?;
        checks.push(check("mosaic-critical-conjugation", c.residual, 1e-10));
    }

    // half-period mirror symmetry (even kappa)
    {
        let r = spectrum::mirror_symmetry_residual(&mosaic, 0.37, 64).map_err(Outcome::Fault)?;
        checks.push(check("mosaic-mirror-symmetry", r, 1e-12));
    }

    // free box eigenvalues against the exact cosine law
    {
        let free = ModelSpec::new(Variant::Amo { lambda: 0.0 }, alpha).map_err(Outcome::Fault)?;
        let op = spectrum::TridiagonalOperator::from_model(&free, 0.0, 128)
            .map_err(Outcome::Fault)?;
        let eigs = op.eigenvalues();
        let n = eigs.len();
        let mut worst = 0.0_f64;
        for (k, &e) in eigs.iter().enumerate() {
            let exact =
                2.0 * (std::f64::consts::PI * (n - k) as f64 / (n as f64 + 1.0)).cos();
            worst = worst.max((e - exact).abs());
        }
        checks.push(check("free-box-eigenvalues", worst, 1e-8));
    }

    // two-block interpolation nodes are 0.1-uniform
    {
        let (_, nodes) = mobedge::greens::two_block_nodes(0.1318, golden, 268);
        let eps = mobedge::greens::uniformity(&nodes).map_err(Outcome::Fault)?;
        checks.push(check("two-block-node-uniformity", eps, 0.1));
    }

    // centered log-sine sums within 10 ln q on golden blocks
    {
        let mut worst = 0.0_f64;
        for q in [13usize, 34, 89, 233, 610, 1597] {
            for x in [0.013, 0.1, 0.37] {
                let (_, s) = mobedge::arithmetic::min_sin_sum(x, golden, q)
                    .map_err(Outcome::Fault)?;
                worst = worst.max(s.abs() / (q as f64).ln());
            }
        }
        checks.push(check("log-sine-sum-bound", worst, 10.0));
    }

    // rotation number of the free cocycle
    {
        let mut worst = 0.0_f64;
        for r in [0.1, 0.25, 0.4] {
            let e = 2.0 * (std::f64::consts::TAU * r).cos();
            let free =
                ModelSpec::new(Variant::Amo { lambda: 0.0 }, alpha).map_err(Outcome::Fault)?;
            let rho = cocycle::rotation_number(&Cocycle::one_step(free, e), 0.0, 100_000);
            worst = worst.max((rho - r).abs());
        }
        checks.push(check("free-rotation-number", worst, 1e-3));
    }

    // site Lyapunov equals block Lyapunov over the period
    {
        let e = 0.9;
        let site = cocycle::lyapunov(&Cocycle::one_step(mosaic, e), 60_000, 4, 7).value;
        let block = Cocycle::block(mosaic, e).map_err(Outcome::Fault)?;
        let per_block = cocycle::lyapunov(&block, 30_000, 4, 7).value / 2.0;
        checks.push(check("block-vs-site-lyapunov", (site - per_block).abs(), 2e-2));
    }

    let mut out = String::new();
    let mut all_pass = true;
    for c in &checks {
        all_pass &= c.pass;
        out.push_str(&format!(
            "{} {:<32} measured {:.3e}  tolerance {:.3e}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance
        ));
    }
    out.push_str(&format!(
        "{} of {} checks passed\n",
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    ));
    if all_pass {
        Ok(out)
    } else {
        Err(Outcome::VerifyFailed(out))
    }
}
