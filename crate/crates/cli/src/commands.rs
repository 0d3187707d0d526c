//! One function per subcommand. Each returns the process exit code on
//! success; hard failures travel as `Failure` with their exit code.

use std::path::{Path, PathBuf};

use perptail::{
    check_equivalence, default_b_grid, default_c_grid, empirical_log_tail, ensemble, find_min_b,
    geometric_grid, tail_ratio_curve, verify_iteration, BoundReport, Law, MLaw, Normalizer,
    PerpetuityConfig, PhiFamily, DEFAULT_DEPTH,
};

use crate::config::{Failure, Settings};
use crate::output::{fmt_f, fmt_opt, write_csv};

pub struct Ctx {
    pub settings: Settings,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn parse_law(s: &str) -> Result<Law, Failure> {
    let spec: MLaw = s.parse().map_err(Failure::from)?;
    Law::new(spec).map_err(Failure::from)
}

// ---------------------------------------------------------------- simulate

pub struct SimulateArgs {
    pub law: Option<String>,
    pub q: Option<f64>,
    pub depth: Option<u32>,
    pub n_paths: Option<u64>,
    pub r0: Option<f64>,
}

pub fn cmd_simulate(ctx: &Ctx, args: SimulateArgs) -> Result<i32, Failure> {
    let s = &ctx.settings;
    let law_str: String = s.resolve(args.law, "law", None)?;
    let q: f64 = s.resolve(args.q, "q", None)?;
    let depth: u32 = s.resolve(args.depth, "depth", Some(DEFAULT_DEPTH))?;
    let n_paths: u64 = s.resolve(args.n_paths, "n-paths", Some(100_000))?;
    let r0: f64 = s.resolve(args.r0, "r0", Some(0.0))?;

    let law = parse_law(&law_str)?;
    let mut config = PerpetuityConfig::new(q, *law.spec(), depth, n_paths, ctx.seed)?;
    config.r0 = r0;
    let ens = ensemble(&config)?;

    write_csv(
        &ctx.path("samples.csv"),
        "r",
        ens.samples.iter().map(|&r| fmt_f(r)),
    )?;

    let quantiles: Vec<serde_json::Value> = ens
        .quantiles
        .iter()
        .map(|&(level, value)| serde_json::json!({ "level": level, "value": value }))
        .collect();
    let summary = serde_json::json!({
        "law": law_str,
        "q": q,
        "depth": depth,
        "n_paths": n_paths,
        "seed": ctx.seed,
        "r0": r0,
        "mean": ens.mean,
        "max": ens.max,
        "quantiles": quantiles,
    });
    std::fs::write(
        ctx.path("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable") + "\n",
    )?;

    println!(
        "simulated {n_paths} paths (depth {depth}): mean = {:.6}, max = {:.6}",
        ens.mean, ens.max
    );
    Ok(0)
}

// ------------------------------------------------------------------ verify

pub struct VerifyArgs {
    pub law: Option<String>,
    pub q: Option<f64>,
    pub phi: Option<String>,
    pub coeff: Option<String>,
    pub z0: Option<f64>,
    pub z_factor: Option<f64>,
    pub z_points: Option<usize>,
}

/// Runs the certificate for `verify` and `bracket`: returns the chosen
/// coefficient B and the grid report.
fn run_certificate(ctx: &Ctx, args: VerifyArgs) -> Result<(Law, f64, BoundReport), Failure> {
    let s = &ctx.settings;
    let law_str: String = s.resolve(args.law, "law", None)?;
    let q: f64 = s.resolve(args.q, "q", None)?;
    let phi_str: String = s.resolve(args.phi, "phi", None)?;
    let coeff_str: String = s.resolve(args.coeff, "coeff", Some("auto".to_string()))?;
    let z0: f64 = s.resolve(args.z0, "z0", Some(20.0))?;
    let z_factor: f64 = s.resolve(args.z_factor, "z-factor", Some(100.0))?;
    let z_points: usize = s.resolve(args.z_points, "z-points", Some(64))?;

    let law = parse_law(&law_str)?;
    let phi: PhiFamily = phi_str.parse().map_err(Failure::from)?;
    let z_grid = geometric_grid(z0, z0 * z_factor, z_points)?;

    let (coeff, report) = if coeff_str == "auto" {
        find_min_b(&law, q, &phi, &z_grid, &default_b_grid())?
    } else {
        let b: f64 = coeff_str
            .parse()
            .map_err(|e| Failure::usage(format!("coeff must be 'auto' or a number: {e}")))?;
        let report = verify_iteration(&law, q, &phi, b, &z_grid)?;
        (b, report)
    };
    Ok((law, coeff, report))
}

fn write_bound_report(path: &Path, report: &BoundReport) -> std::io::Result<()> {
    write_csv(
        path,
        "z,lhs_log,rhs_log,margin",
        report.z_grid.iter().enumerate().map(|(i, &z)| {
            format!(
                "{},{},{},{}",
                fmt_f(z),
                fmt_f(report.lhs_log[i]),
                fmt_f(report.rhs_log[i]),
                fmt_f(report.margin[i])
            )
        }),
    )
}

pub fn cmd_verify(ctx: &Ctx, args: VerifyArgs) -> Result<i32, Failure> {
    let (_, coeff, report) = run_certificate(ctx, args)?;
    write_bound_report(&ctx.path("bound_report.csv"), &report)?;
    let worst = report.margin.iter().cloned().fold(f64::INFINITY, f64::min);
    if report.pass {
        println!("certificate PASS: phi = {}, B = {coeff}, min margin = {worst:.6e}", report.phi);
        Ok(0)
    } else {
        println!("certificate FAIL: phi = {}, B = {coeff}, min margin = {worst:.6e}", report.phi);
        Ok(1)
    }
}

// ----------------------------------------------------------------- bracket

pub struct BracketArgs {
    pub verify: VerifyArgs,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_points: Option<usize>,
    pub normalizer: Option<String>,
    pub n_paths: Option<u64>,
    pub depth: Option<u32>,
}

pub fn cmd_bracket(ctx: &Ctx, args: BracketArgs) -> Result<i32, Failure> {
    let s = &ctx.settings;
    let q: f64 = s.resolve(args.verify.q, "q", None)?;
    let x_min: f64 = s.resolve(args.x_min, "x-min", None)?;
    let x_max: f64 = s.resolve(args.x_max, "x-max", None)?;
    let x_points: usize = s.resolve(args.x_points, "x-points", Some(50))?;
    let norm_str: String = s.resolve(args.normalizer, "normalizer", None)?;
    let n_paths: u64 = s.resolve(args.n_paths, "n-paths", Some(0))?;
    let depth: u32 = s.resolve(args.depth, "depth", Some(DEFAULT_DEPTH))?;
    let normalizer: Normalizer = norm_str.parse().map_err(Failure::from)?;

    let verify_args = VerifyArgs {
        q: Some(q),
        ..args.verify
    };
    let (law, coeff, report) = run_certificate(ctx, verify_args)?;
    write_bound_report(&ctx.path("bound_report.csv"), &report)?;
    if !report.pass {
        eprintln!("iteration certificate failed for B = {coeff}; no upper bound available");
        return Ok(1);
    }

    let x_grid = geometric_grid(x_min, x_max, x_points)?;
    let curve = tail_ratio_curve(&law, q, &x_grid, &report, normalizer, &default_c_grid())?;

    // Optional Monte Carlo overlay on the same x grid.
    let empirical = if n_paths > 0 {
        let config = PerpetuityConfig::new(q, *law.spec(), depth, n_paths, ctx.seed)?;
        let ens = ensemble(&config)?;
        Some(empirical_log_tail(&ens.samples, &x_grid)?)
    } else {
        None
    };

    write_csv(
        &ctx.path("tail_curve.csv"),
        "x,lower_log,upper_log,lower_ratio,upper_ratio,normalizer_value,empirical_log,n_exceed",
        x_grid.iter().enumerate().map(|(i, &x)| {
            let (emp, n_exc) = match &empirical {
                Some(t) => (fmt_opt(t.log_surv[i]), t.n_exceed[i].to_string()),
                None => ("NA".to_string(), "NA".to_string()),
            };
            format!(
                "{},{},{},{},{},{},{},{}",
                fmt_f(x),
                fmt_opt(curve.lower_log[i]),
                fmt_f(curve.upper_log[i]),
                fmt_opt(curve.lower_ratio[i]),
                fmt_f(curve.upper_ratio[i]),
                fmt_f(curve.normalizer_value[i]),
                emp,
                n_exc
            )
        }),
    )?;

    println!(
        "bracketed ln P(R >= x) on [{x_min}, {x_max}] with B = {coeff} ({} points)",
        x_grid.len()
    );
    Ok(0)
}

// ------------------------------------------------------------------ curves

pub struct CurvesArgs {
    pub law: Option<String>,
    pub n_points: Option<usize>,
}

/// Grid floor in w = -ln(1 - t). Mass below is negligible for every
/// catalogue family (worst case genbeta:b=0.2,eta=0.1 holds ~2e-9
/// below it).
const W_MIN: f64 = 1e-80;
/// Target right-tail mass beyond the last grid point.
const TAIL_CUT: f64 = 1e-9;

/// Smallest w with P(M >= 1 - e^{-w}) <= TAIL_CUT. The generalized
/// beta tail is inverted in closed form because the crossing can sit
/// far beyond where 1 - t is representable; the rest of the catalogue
/// crosses well inside [0, 690] and is bisected there.
fn tail_cutoff_w(law: &Law) -> Result<f64, Failure> {
    let target = TAIL_CUT.ln();
    if let MLaw::GenBeta { beta, eta } = *law.spec() {
        return Ok((-target / beta).powf(1.0 / eta));
    }
    let g = |w: f64| -> Result<f64, Failure> {
        Ok(law.ln_tail_mass((-w).exp())? - target)
    };
    let (mut lo, mut hi) = (1e-6, 690.0);
    if g(hi)? > 0.0 {
        // Heavier tail than e^{-690}: accept the cap; the excluded mass
        // is still below f64 resolution of t near 1.
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

pub fn cmd_curves(ctx: &Ctx, args: CurvesArgs) -> Result<i32, Failure> {
    let s = &ctx.settings;
    let law_str: String = s.resolve(args.law, "law", None)?;
    let n_points: usize = s.resolve(args.n_points, "n-points", Some(4096))?;
    let law = parse_law(&law_str)?;
    if law.is_discrete() {
        return Err(Failure {
            code: 2,
            message: format!("curves requires a continuous law, got {}", law.spec()),
        });
    }
    if n_points < 16 {
        return Err(Failure::usage("n-points must be at least 16"));
    }

    let w_max = tail_cutoff_w(&law)?;
    let w_grid = geometric_grid(W_MIN, w_max, n_points)?;

    // ln dF/dw at w: dF/dw = f(1 - e^{-w}) e^{-w}. The generalized
    // beta needs its closed form in w because its grid reaches w ~ 1e20,
    // where subtracting w from the t-space log density cancels every
    // significant digit. The other families keep w below ~700 and the
    // subtraction is harmless.
    let ln_density_w = |w: f64| -> Result<f64, Failure> {
        if let MLaw::GenBeta { beta, eta } = *law.spec() {
            return Ok((beta * eta).ln() + (eta - 1.0) * w.ln() - beta * w.powf(eta));
        }
        let ln_f = if w < 0.5 {
            law.ln_density(-(-w).exp_m1())?
        } else {
            law.ln_density_near_one(-w)?
        };
        Ok(ln_f - w)
    };

    let t_of_w = |w: f64| -(-w).exp_m1();

    let mut dens_w = Vec::with_capacity(n_points);
    for &w in &w_grid {
        dens_w.push(ln_density_w(w)?);
    }

    write_csv(
        &ctx.path("density.csv"),
        "t,w,density,density_t",
        w_grid.iter().zip(&dens_w).map(|(&w, &ln_dw)| {
            let ln_dt = ln_dw + w;
            let density_t = if ln_dt > 709.0 { f64::NAN } else { ln_dt.exp() };
            format!(
                "{},{},{},{}",
                fmt_f(t_of_w(w)),
                fmt_f(w),
                fmt_f(ln_dw.exp()),
                fmt_f(density_t)
            )
        }),
    )?;

    // CDF against the same grid: closed form where the family has one,
    // otherwise a cumulative trapezoid in w (monotone by construction).
    let cdf: Vec<f64> = match *law.spec() {
        MLaw::GenBeta { beta, eta } => w_grid
            .iter()
            .map(|&w| -(-beta * w.powf(eta)).exp_m1())
            .collect(),
        MLaw::Beta { alpha, beta } if alpha == 1.0 => {
            w_grid.iter().map(|&w| -(-beta * w).exp_m1()).collect()
        }
        _ => {
            let mut acc = law.cdf(t_of_w(w_grid[0]))?;
            let mut out = Vec::with_capacity(n_points);
            out.push(acc);
            for i in 1..n_points {
                let dw = w_grid[i] - w_grid[i - 1];
                acc += 0.5 * dw * (dens_w[i].exp() + dens_w[i - 1].exp());
                out.push(acc.min(1.0));
            }
            out
        }
    };

    write_csv(
        &ctx.path("cdf.csv"),
        "t,w,cdf",
        w_grid
            .iter()
            .zip(&cdf)
            .map(|(&w, &c)| format!("{},{},{}", fmt_f(t_of_w(w)), fmt_f(w), fmt_f(c))),
    )?;

    println!(
        "wrote density.csv and cdf.csv for {} on w in [{W_MIN:e}, {w_max:e}] ({n_points} points)",
        law.spec()
    );
    Ok(0)
}

// ------------------------------------------------------------------- equiv

pub struct EquivArgs {
    pub mu: Option<String>,
    pub nu: Option<String>,
    pub epsilon: Option<f64>,
    pub n_grid: Option<usize>,
}

pub fn cmd_equiv(ctx: &Ctx, args: EquivArgs) -> Result<i32, Failure> {
    let s = &ctx.settings;
    let mu_str: String = s.resolve(args.mu, "mu", None)?;
    let nu_str: String = s.resolve(args.nu, "nu", None)?;
    let epsilon: f64 = s.resolve(args.epsilon, "epsilon", Some(0.1))?;
    let n_grid: usize = s.resolve(args.n_grid, "n-grid", Some(25))?;

    let mu = parse_law(&mu_str)?;
    let nu = parse_law(&nu_str)?;
    let report = check_equivalence(&mu, &nu, epsilon, n_grid)?;

    write_csv(
        &ctx.path("equiv.csv"),
        "delta,mu_tail,nu_tail,ratio",
        report.delta_grid.iter().enumerate().map(|(i, &d)| {
            format!(
                "{},{},{},{}",
                fmt_f(d),
                fmt_f(report.mu_tail[i]),
                fmt_f(report.nu_tail[i]),
                fmt_f(report.ratio[i])
            )
        }),
    )?;

    println!(
        "{mu_str} vs {nu_str}: d = {:.6e}, D = {:.6e}, verdict = {:?}",
        report.d_hat, report.big_d_hat, report.verdict
    );
    Ok(if report.pass { 0 } else { 1 })
}

// --------------------------------------------------------------------- c0

pub struct C0Args {
    pub r: Option<f64>,
}

pub fn cmd_c0(ctx: &Ctx, args: C0Args) -> Result<i32, Failure> {
    let r: f64 = ctx.settings.resolve(args.r, "r", None)?;
    if r <= 1.0 {
        return Err(Failure::usage("r must exceed 1"));
    }
    let c0 = perptail::c0_root(r)?;
    let constant = perptail::c0_constant(r)?;
    let r_star = r / (r - 1.0);
    println!("r = {}", fmt_f(r));
    println!("r_star = {}", fmt_f(r_star));
    println!("c0 = {}", fmt_f(c0));
    println!("constant = {}", fmt_f(constant));
    Ok(0)
}

// ------------------------------------------------------------------- hosp

pub struct HospArgs {
    pub y_values: Option<String>,
}

pub fn cmd_hosp(ctx: &Ctx, args: HospArgs) -> Result<i32, Failure> {
    let list: String = ctx
        .settings
        .resolve(args.y_values, "y-values", Some("5,7.5,11,17,25".to_string()))?;
    let mut ys = Vec::new();
    for part in list.split(',') {
        let y: f64 = part
            .trim()
            .parse()
            .map_err(|e| Failure::usage(format!("bad y value '{part}': {e}")))?;
        ys.push(y);
    }

    let mut rows = Vec::with_capacity(ys.len());
    for &y in &ys {
        let ratio = perptail::hosp_ratio(y)?;
        println!("y = {y}: ratio = {}", fmt_f(ratio));
        rows.push(format!("{},{}", fmt_f(y), fmt_f(ratio)));
    }
    write_csv(&ctx.path("hosp.csv"), "y,ratio", rows)?;
    Ok(0)
}
