//! Command-line front end. Exit codes: 0 every verdict passes, 1 some verdict
//! fails, 2 usage or configuration error.
//!
//! `--scheme` takes a scheme JSON file, or `fixture:<name>` for a built-in
//! scheme at `lambda = 1, a = 1/2`. `HYPSTAB_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::report::{cell, emit_report, Report, Table, Verdict};
use crate::resolvent::{self, BlockKind, CompanionBranch, SchemeBoundary, TvConfig};
use crate::scheme::SchemeDef;
use crate::sim::{self, EstimateConfig, ProfileGenerator};
use crate::{fixtures, io, sbp, symbol, wavepacket};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const THREADS_ENV: &str = "HYPSTAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hypstab", version, about = "Stability analysis of finite-difference schemes on the half line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Scheme JSON file or `fixture:<name>`.
    #[arg(long)]
    scheme: String,
    /// Output directory.
    #[arg(long, default_value = "hypstab-out")]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Von Neumann condition and power boundedness of the amplification matrix.
    CheckCauchy(CauchyArgs),
    /// Unit-modulus eigenvalue branches with vanishing derivative.
    CheckGlancing(GlancingArgs),
    /// Scan of the Kreiss-Lopatinskii determinant outside the unit circle.
    CheckUklc(UklcArgs),
    /// Companion-matrix eigenvalue blocks at a point of the unit circle.
    ClassifyBlocks(BlocksArgs),
    /// Summation-by-parts energy decomposition of a one-step scheme.
    SbpDecompose(SbpArgs),
    /// Half-line run with seeded initial data.
    Simulate(SimulateArgs),
    /// Empirical check of an a priori estimate across refinements.
    Verify(VerifyArgs),
    /// Wave-packet trace sums against the horizon.
    PacketExperiment(PacketArgs),
}

#[derive(Debug, Args, Serialize)]
struct CauchyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 512)]
    grid_eta: usize,
    #[arg(long, default_value_t = 200)]
    grid_powers: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol_vn: f64,
}

#[derive(Debug, Args, Serialize)]
struct GlancingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1e-6)]
    tol_glancing: f64,
}

#[derive(Debug, Args, Serialize)]
struct UklcArgs {
    #[command(flatten)]
    common: Common,
    /// Offsets `delta` of the radii `1 + delta`.
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    ntheta: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol_kl: f64,
}

#[derive(Debug, Args, Serialize)]
struct BlocksArgs {
    #[command(flatten)]
    common: Common,
    /// Angle of `z_bar` on the unit circle.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    z_angle: f64,
    /// Also compute the argument total variation of every unit-modulus block.
    #[arg(long)]
    tv: bool,
    #[arg(long, value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4,1e-5")]
    grid_gammas: Vec<f64>,
    #[arg(long, default_value_t = 41)]
    grid_w: usize,
    #[arg(long, default_value_t = 0.1)]
    tol_tv: f64,
}

#[derive(Debug, Args, Serialize)]
struct SbpArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1e-12)]
    tol_criterion: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Profile {
    Decaying,
    Compact,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    grid_dx: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, value_enum, default_value_t = Profile::Decaying)]
    profile: Profile,
    /// Highest trace row recorded.
    #[arg(long, default_value_t = 3)]
    grid_p: i64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Estimate {
    Thm1,
    Strong,
    Semigroup,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    estimate: Estimate,
    #[arg(long, value_delimiter = ',', default_value = "0.0625,0.03125,0.015625,0.0078125")]
    grid_dxs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-2,1e-1,1")]
    grid_gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,8")]
    grid_ps: Vec<i64>,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_uklc: f64,
}

#[derive(Debug, Args, Serialize)]
struct PacketArgs {
    #[command(flatten)]
    common: Common,
    /// Carrier frequency.
    #[arg(long, allow_negative_numbers = true)]
    xi: f64,
    #[arg(long, default_value_t = 0)]
    branch: usize,
    #[arg(long = "Ts", alias = "ts", value_delimiter = ',', default_value = "2,4,6,8,12,16")]
    ts: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.0625,0.03125")]
    dts: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    delta0: f64,
    /// Largest accepted `ratio(T) / ratio(T/2)` for a bounded trace.
    #[arg(long, default_value_t = 1.25)]
    tol_doubling: f64,
    #[arg(long, default_value_t = 0.9)]
    tol_r2: f64,
    #[arg(long, default_value_t = 0.25)]
    tol_slope: f64,
}

/// Parse `argv` (including the program name), run the command, write artifacts.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let start = Instant::now();
    let (out, result) = dispatch(&cli.command);
    match result {
        Ok(mut report) => {
            report.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
            if let Err(e) = emit_report(&report, &out) {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            for v in &report.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            println!("report written to {}", out.join("report.json").display());
            if report.passed() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: &Command) -> (PathBuf, Result<Report>) {
    match cmd {
        Command::CheckCauchy(a) => (a.common.out.clone(), check_cauchy(a)),
        Command::CheckGlancing(a) => (a.common.out.clone(), check_glancing(a)),
        Command::CheckUklc(a) => (a.common.out.clone(), check_uklc(a)),
        Command::ClassifyBlocks(a) => (a.common.out.clone(), classify_blocks(a)),
        Command::SbpDecompose(a) => (a.common.out.clone(), sbp_decompose(a)),
        Command::Simulate(a) => (a.common.out.clone(), simulate(a)),
        Command::Verify(a) => (a.common.out.clone(), verify(a)),
        Command::PacketExperiment(a) => (a.common.out.clone(), packet_experiment(a)),
    }
}

/// Load `--scheme`: a JSON file, or `fixture:<name>`.
pub fn load_scheme_arg(arg: &str) -> Result<SchemeDef> {
    if let Some(name) = arg.strip_prefix("fixture:") {
        return fixtures::by_name(name, 1.0, 0.5).ok_or_else(|| Error::InvalidInput(format!("unknown fixture '{name}'")));
    }
    io::load_scheme(Path::new(arg))
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {x}")))
    }
}

fn all_positive(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidInput(format!("{name} is empty")));
    }
    xs.iter().try_for_each(|&x| positive(name, x))
}

fn start(name: &str, common: &Common, args: &impl Serialize) -> Result<(SchemeDef, Report)> {
    let scheme = load_scheme_arg(&common.scheme)?;
    Ok((scheme, Report::new(name, common.seed, serde_json::to_value(args)?)))
}

fn check_cauchy(a: &CauchyArgs) -> Result<Report> {
    positive("tol-vn", a.tol_vn)?;
    let (scheme, mut rep) = start("check-cauchy", &a.common, a)?;
    let vn = symbol::von_neumann_check(&scheme, a.grid_eta, a.tol_vn)?;
    let pb = symbol::power_bound_estimate(&scheme, a.grid_eta.min(256), a.grid_powers)?;
    rep.verdicts.push(Verdict::new(
        "von_neumann",
        vn.pass,
        format!("max spectral radius {:.12} at eta = {:.6}", vn.max_radius, vn.worst_eta),
    ));
    rep.data = json!({ "von_neumann": vn, "power_bound": pb });
    rep.add_table(branch_table(&scheme)?);
    Ok(rep)
}

fn branch_table(scheme: &SchemeDef) -> Result<Table> {
    let mut t = Table::new("branches", &["branch", "eta", "re", "im", "abs"]);
    for br in symbol::track_branches(scheme, symbol::DEFAULT_ETA_SAMPLES)? {
        for (eta, z) in br.etas.iter().zip(&br.values) {
            t.push(vec![cell(br.index), cell(eta), cell(z.re), cell(z.im), cell(z.norm())]);
        }
    }
    Ok(t)
}

fn check_glancing(a: &GlancingArgs) -> Result<Report> {
    positive("tol-glancing", a.tol_glancing)?;
    let (scheme, mut rep) = start("check-glancing", &a.common, a)?;
    let g = symbol::find_glancing(&scheme, a.tol_glancing)?;
    let etas: Vec<String> = g.hits.iter().map(|h| format!("{:.6}", h.eta)).collect();
    rep.verdicts.push(Verdict::new(
        "non_glancing",
        g.non_glancing,
        if g.non_glancing {
            format!("min |zeta'| on unit-modulus points {:.6e}", g.min_unit_derivative)
        } else {
            format!("glancing at eta = [{}]", etas.join(", "))
        },
    ));
    rep.data = serde_json::to_value(&g)?;
    rep.add_table(branch_table(&scheme)?);
    Ok(rep)
}

fn check_uklc(a: &UklcArgs) -> Result<Report> {
    positive("tol-kl", a.tol_kl)?;
    all_positive("radii", &a.radii)?;
    let (scheme, mut rep) = start("check-uklc", &a.common, a)?;
    let scan = resolvent::uklc_scan(&scheme, &a.radii, a.ntheta, a.tol_kl, &SchemeBoundary)?;
    rep.verdicts.push(Verdict::new(
        "uklc",
        scan.plausible,
        format!(
            "min |Delta| {:.6e} at delta = {}, theta = {:.6}; decay exponent {:.3}",
            scan.min_abs, scan.argmin.0, scan.argmin.1, scan.decay_exponent
        ),
    ));
    let mut t = Table::new("kl_samples", &["delta", "theta", "abs"]);
    for s in &scan.samples {
        t.push(vec![cell(s.delta), cell(s.theta), cell(s.abs)]);
    }
    rep.data = json!({
        "min_abs": scan.min_abs,
        "argmin": { "delta": scan.argmin.0, "theta": scan.argmin.1 },
        "min_by_radius": scan.min_by_radius,
        "decay_exponent": scan.decay_exponent,
        "tolerance": scan.tolerance,
    });
    rep.add_table(t);
    Ok(rep)
}

fn classify_blocks(a: &BlocksArgs) -> Result<Report> {
    all_positive("grid-gammas", &a.grid_gammas)?;
    positive("tol-tv", a.tol_tv)?;
    let (scheme, mut rep) = start("classify-blocks", &a.common, a)?;
    let z_bar = Complex64::from_polar(1.0, a.z_angle);
    let blocks = resolvent::classify_boundary_blocks(&scheme, z_bar)?;
    let glancing = blocks.iter().filter(|b| b.kind == BlockKind::Glancing).count();
    rep.verdicts.push(Verdict::new("no_glancing_block", glancing == 0, format!("{} blocks, {glancing} glancing", blocks.len())));
    let mut t = Table::new("blocks", &["re", "im", "abs", "kind", "stable_side"]);
    for b in &blocks {
        let kind = match b.kind {
            BlockKind::Expanding => "expanding",
            BlockKind::Contracting => "contracting",
            BlockKind::UnitScalar { .. } => "unit_scalar",
            BlockKind::Glancing => "glancing",
        };
        t.push(vec![cell(b.eigenvalue.re), cell(b.eigenvalue.im), cell(b.eigenvalue.norm()), cell(kind), cell(b.stable_side)]);
    }
    rep.add_table(t);
    let mut tv_data = Vec::new();
    if a.tv {
        let cfg = TvConfig { gammas: a.grid_gammas.clone(), w_points: a.grid_w, ..TvConfig::default() };
        let bound = 6.0 * std::f64::consts::PI + a.tol_tv;
        let mut tv_table = Table::new("tv", &["block", "gamma", "sup_tv", "argmax_w", "theta_samples"]);
        for (i, b) in blocks.iter().enumerate() {
            if !matches!(b.kind, BlockKind::UnitScalar { .. } | BlockKind::Glancing) {
                continue;
            }
            let branch = CompanionBranch { scheme: &scheme, z_bar, mu_bar: b.eigenvalue, unstable: !b.stable_side };
            let r = resolvent::arg_total_variation(&branch, &cfg)?;
            for g in &r.per_gamma {
                tv_table.push(vec![cell(i), cell(g.gamma), cell(g.sup_tv), cell(g.argmax_w), cell(g.theta_samples)]);
            }
            if matches!(b.kind, BlockKind::UnitScalar { .. }) {
                rep.verdicts.push(Verdict::new(
                    &format!("tv_bound_block_{i}"),
                    r.sup_tv <= bound,
                    format!("sup TV {:.6} against {:.6}", r.sup_tv, bound),
                ));
            }
            tv_data.push(json!({ "block": i, "report": r }));
        }
        rep.add_table(tv_table);
    }
    rep.data = json!({ "z_bar": z_bar, "blocks": blocks, "tv": tv_data });
    Ok(rep)
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn sbp_decompose(a: &SbpArgs) -> Result<Report> {
    positive("tol-criterion", a.tol_criterion)?;
    let (scheme, mut rep) = start("sbp-decompose", &a.common, a)?;
    let dec = sbp::energy_decomposition(&scheme)?;
    let rows = |ms: &[nalgebra::DMatrix<f64>]| ms.iter().map(matrix_rows).collect::<Vec<_>>();
    let mut data = json!({
        "a_tilde": rows(&dec.a_tilde),
        "s": rows(&dec.s),
        "s_tilde": rows(&dec.s_tilde),
        "q_form": matrix_rows(&dec.q_form),
        "d1": dec.d1,
        "d2": dec.d2,
    });
    if let (Some(d1), Some(d2)) = (dec.d1, dec.d2) {
        let stable = d1 <= a.tol_criterion && d1 + 4.0 * d2 <= a.tol_criterion;
        rep.verdicts.push(Verdict::new("three_point_criterion", stable, format!("d1 = {d1:.12}, d2 = {d2:.12}")));
    }
    if let Ok(rate) = sbp::boundary_energy_rate(&scheme, &dec) {
        data["boundary_rate"] = json!({ "form": matrix_rows(&rate.form), "max_eigenvalue": rate.max_eigenvalue });
    }
    rep.data = data;
    let mut t = Table::new("coefficients", &["family", "index", "row", "col", "value"]);
    for (family, ms) in [("a_tilde", &dec.a_tilde), ("s", &dec.s), ("s_tilde", &dec.s_tilde)] {
        for (k, m) in ms.iter().enumerate() {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    t.push(vec![cell(family), cell(k), cell(i), cell(j), cell(m[(i, j)])]);
                }
            }
        }
    }
    rep.add_table(t);
    Ok(rep)
}

fn profile(kind: Profile, seed: u64, horizon: f64) -> ProfileGenerator {
    match kind {
        Profile::Decaying => ProfileGenerator::decaying(seed, 8, 2.0 * horizon.max(1.0)),
        Profile::Compact => ProfileGenerator::compact(seed, 2.0, 1.0),
    }
}

fn simulate(a: &SimulateArgs) -> Result<Report> {
    positive("grid-dx", a.grid_dx)?;
    positive("horizon", a.horizon)?;
    let (scheme, mut rep) = start("simulate", &a.common, a)?;
    let dx = a.grid_dx;
    let n_max = (a.horizon / (dx * scheme.mesh_ratio())).round() as usize;
    let f = profile(a.profile, a.common.seed, a.horizon).layers(&scheme, dx);
    let rec = sim::record_run(&scheme, &f, n_max, dx, a.grid_p, 0, sim::Forcing::default(), |_, _| Ok(()))?;
    let mut t = Table::new("series", &["n", "t", "energy", "energy_interior", "trace"]);
    let mut sup = 0.0f64;
    let mut trace_sum = 0.0;
    for (n, (e, ei)) in rec.energy.iter().zip(&rec.energy_interior).enumerate() {
        let tr: f64 = rec.rows[n].iter().sum();
        trace_sum += rec.dt * tr;
        sup = sup.max(dx * e);
        t.push(vec![cell(n), cell(n as f64 * rec.dt), cell(dx * e), cell(dx * ei), cell(tr)]);
    }
    let finite = rec.energy.iter().all(|e| e.is_finite());
    rep.verdicts.push(Verdict::new("finite", finite, format!("{} steps", n_max)));
    rep.data = json!({
        "dx": dx,
        "dt": rec.dt,
        "steps": n_max,
        "data_norm": rec.data_norm,
        "sup_energy": sup,
        "sup_ratio": if rec.data_norm > 0.0 { sup / rec.data_norm } else { 0.0 },
        "trace_sum": trace_sum,
    });
    rep.add_table(t);
    Ok(rep)
}

fn verify(a: &VerifyArgs) -> Result<Report> {
    all_positive("grid-dxs", &a.grid_dxs)?;
    all_positive("grid-gammas", &a.grid_gammas)?;
    positive("horizon", a.horizon)?;
    positive("tol-uklc", a.tol_uklc)?;
    let name = match a.estimate {
        Estimate::Thm1 => "verify-thm1",
        Estimate::Strong => "verify-strong",
        Estimate::Semigroup => "verify-semigroup",
    };
    let (scheme, mut rep) = start(name, &a.common, a)?;
    let cfg = EstimateConfig {
        gammas: a.grid_gammas.clone(),
        dxs: a.grid_dxs.clone(),
        ps: a.grid_ps.clone(),
        horizon: a.horizon,
        uklc_tol: a.tol_uklc,
        source_extent: 0.0,
    };
    let gen = ProfileGenerator::decaying(a.common.seed, 8, 20.0);
    let data = |dx: f64| gen.layers(&scheme, dx);
    match a.estimate {
        Estimate::Thm1 | Estimate::Strong => {
            let signal = ProfileGenerator::decaying(a.common.seed ^ 0x5eed, 8, a.horizon);
            let g = |t: f64, _j: i64, out: &mut [Complex64]| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = Complex64::new(signal.value(t) * (1.0 + 0.25 * k as f64), 0.0);
                }
            };
            let r = if matches!(a.estimate, Estimate::Thm1) {
                sim::verify_trace_estimate(&scheme, &data, &cfg)?
            } else {
                sim::verify_strong_stability(&scheme, Some(&g), None, &cfg)?
            };
            push_hypotheses(&mut rep, &r.hypotheses);
            rep.verdicts.push(Verdict::new(
                "bounded",
                r.bounded,
                format!("max growth exponent {:.4} (limit {}), max ratio {:.6}", r.max_slope, sim::SLOPE_LIMIT, r.max_ratio),
            ));
            let mut t = Table::new("cells", &["dx", "dt", "gamma", "p", "lhs", "rhs", "ratio"]);
            for c in &r.cells {
                t.push(vec![cell(c.dx), cell(c.dt), cell(c.gamma), cell(c.p), cell(c.lhs), cell(c.rhs), cell(c.ratio)]);
            }
            rep.add_table(t);
            rep.data = serde_json::to_value(&r)?;
        }
        Estimate::Semigroup => {
            let r = sim::verify_semigroup(&scheme, &data, &cfg)?;
            push_hypotheses(&mut rep, &r.hypotheses);
            rep.verdicts.push(Verdict::new("bounded", r.bounded, format!("growth exponent of C2 {:.4}", r.slope)));
            if r.chain_constant.is_some() {
                rep.verdicts.push(Verdict::new(
                    "per_step_boundary_inequality",
                    r.per_step_holds,
                    format!("chain constant {:.6}", r.chain_constant.unwrap_or(f64::NAN)),
                ));
            }
            let mut t = Table::new("cells", &["dx", "dt", "c2", "worst_step_excess", "sup_interior", "chain_bound"]);
            for c in &r.cells {
                t.push(vec![cell(c.dx), cell(c.dt), cell(c.c2), cell(c.worst_step_excess), cell(c.sup_interior), cell(c.chain_bound)]);
            }
            rep.add_table(t);
            rep.data = serde_json::to_value(&r)?;
        }
    }
    Ok(rep)
}

fn push_hypotheses(rep: &mut Report, h: &sim::Hypotheses) {
    rep.verdicts.push(Verdict::new(
        "hypotheses",
        h.met,
        format!("von Neumann {}, non-glancing {}, min |Delta| {:.3e}", h.von_neumann, h.non_glancing, h.uklc_min_abs),
    ));
}

fn packet_experiment(a: &PacketArgs) -> Result<Report> {
    all_positive("Ts", &a.ts)?;
    all_positive("dts", &a.dts)?;
    positive("delta0", a.delta0)?;
    let (scheme, mut rep) = start("packet-experiment", &a.common, a)?;
    let env = wavepacket::make_envelope(a.delta0, wavepacket::DEFAULT_QUADRATURE)?;
    let spec = wavepacket::make_packet(&scheme, a.xi, a.branch, env)?;
    let r = wavepacket::glancing_trace_experiment(&scheme, &spec, &a.ts, &a.dts)?;
    let flat = !r.doubling_ratios.is_empty() && r.doubling_ratios.iter().all(|&d| d <= a.tol_doubling);
    rep.verdicts.push(Verdict::new(
        "trace_bounded",
        flat,
        format!("ratio(T)/ratio(T/2) = {:?}, |zeta'| = {:.3e}", r.doubling_ratios, r.derivative_abs),
    ));
    let mut t = Table::new("trace", &["T", "dt", "trace", "data_norm"]);
    for c in &r.cells {
        t.push(vec![cell(c.t), cell(c.dt), cell(c.trace), cell(c.data_norm)]);
    }
    rep.add_table(t);
    rep.data = json!({
        "group_velocity": spec.group_velocity,
        "z": spec.z,
        "linear_growth": r.linear_growth(a.tol_r2, a.tol_slope),
        "experiment": r,
    });
    Ok(rep)
}
