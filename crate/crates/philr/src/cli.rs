//! Command implementations behind the `philr` binary. Each command reads
//! Matrix Market or CSV inputs, runs the corresponding pipeline, writes any
//! requested artifacts, and returns a [`RunReport`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::cond::{
    cond_exact_small, strategy_one, strategy_two, CondEstimate, STRATEGY_TWO_DEFAULT_MAX_ITER,
    STRATEGY_TWO_DEFAULT_TOL,
};
use crate::core::{
    norm2_estimate, ComputationError, Result, NORM2_DEFAULT_MAX_ITER, NORM2_DEFAULT_TOL,
};
use crate::eda::{exp_scatter, scatter_factors, LabeledData};
use crate::io;
use crate::lowrank::{apply, build_phi_family, materialize, norm_estimate_eta, LowRankPhiFamily};
use crate::phikernel::expm_dense;
use crate::report::{ReportValue, RunReport};
use crate::scr::{scr_approximate, scr_residual, ScrFactors, ToleranceMode};
use crate::verify::{run_suite, Suite};

/// Matrix-size cap for "compare with the dense oracle" report fields.
const ORACLE_DIM_LIMIT: usize = 600;

#[derive(Debug, Clone)]
pub struct ScrOptions {
    pub input: PathBuf,
    pub tol: f64,
    pub max_rank: usize,
    pub mode: ToleranceMode,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMode {
    Materialize,
    Apply,
}

#[derive(Debug, Clone)]
pub struct PhiOptions {
    pub input: PathBuf,
    pub p: usize,
    pub ell: usize,
    pub mode: PhiMode,
    pub vector: Option<PathBuf>,
    pub tol: f64,
    pub max_rank: usize,
    pub tol_mode: ToleranceMode,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    One,
    Two,
    Both,
    Exact,
}

#[derive(Debug, Clone)]
pub struct CondOptions {
    pub input: PathBuf,
    pub ell: usize,
    pub strategy: StrategyChoice,
    pub tol: f64,
    pub max_rank: usize,
    pub tol_mode: ToleranceMode,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct EdaOptions {
    pub input: PathBuf,
    pub scale_columns: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn artifact_path(out: Option<&Path>, input: &Path, suffix: &str) -> PathBuf {
    match out {
        Some(dir) => dir.join(suffix),
        None => {
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "matrix".to_string());
            input.with_file_name(format!("{stem}-{suffix}"))
        }
    }
}

fn ensure_out_dir(out: Option<&Path>) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| ComputationError::IoFailure(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

fn run_scr_pipeline(
    input: &Path,
    tol: f64,
    max_rank: usize,
    mode: ToleranceMode,
) -> Result<(crate::core::SparseMatrix, ScrFactors)> {
    let a = io::read_sparse(input)?;
    let f = scr_approximate(&a, tol, tol, max_rank, mode)?;
    Ok((a, f))
}

fn record_scr(report: &mut RunReport, a: &crate::core::SparseMatrix, f: &ScrFactors) -> Result<()> {
    let residual = scr_residual(a, f)?;
    report
        .output("rank", f.rank)
        .output("eps_col", f.eps_col)
        .output("eps_row", f.eps_row)
        .output("residual_fro", residual)
        .output(
            "residual_bound",
            (f.eps_col * f.eps_col + f.eps_row * f.eps_row).sqrt(),
        )
        .output("converged", f.converged);
    Ok(())
}

/// `philr scr`: factor the input and write X, Y, T plus the report.
pub fn cmd_scr(opts: &ScrOptions) -> Result<RunReport> {
    let mut report = RunReport::new("scr");
    report
        .input("input", opts.input.display().to_string())
        .input("tol", opts.tol)
        .input("max_rank", opts.max_rank)
        .input("tol_mode", mode_name(opts.mode));
    ensure_out_dir(opts.out.as_deref())?;
    let started = Instant::now();
    let (a, f) = run_scr_pipeline(&opts.input, opts.tol, opts.max_rank, opts.mode)?;
    record_scr(&mut report, &a, &f)?;
    let x_path = artifact_path(opts.out.as_deref(), &opts.input, "x.mtx");
    let y_path = artifact_path(opts.out.as_deref(), &opts.input, "y.mtx");
    let t_path = artifact_path(opts.out.as_deref(), &opts.input, "t.mtx");
    io::write_sparse(&x_path, &f.x)?;
    io::write_sparse(&y_path, &f.y)?;
    io::write_dense(&t_path, &f.t)?;
    report
        .output("x_file", x_path.display().to_string())
        .output("y_file", y_path.display().to_string())
        .output("t_file", t_path.display().to_string());
    report.timing("total", started.elapsed().as_secs_f64());
    Ok(report)
}

/// `philr phi`: factor, build the family, and either materialize
/// `phi_l(Ã)` or apply it to a vector; the eta sandwich is always reported.
pub fn cmd_phi(opts: &PhiOptions) -> Result<RunReport> {
    let mut report = RunReport::new("phi");
    report
        .input("input", opts.input.display().to_string())
        .input("p", opts.p)
        .input("ell", opts.ell)
        .input(
            "mode",
            match opts.mode {
                PhiMode::Materialize => "materialize",
                PhiMode::Apply => "apply",
            },
        )
        .input("tol", opts.tol)
        .input("tol_mode", mode_name(opts.tol_mode));
    if opts.ell > opts.p {
        return Err(ComputationError::DimensionMismatch(format!(
            "ell {} exceeds family order p {}",
            opts.ell, opts.p
        )));
    }
    ensure_out_dir(opts.out.as_deref())?;
    let started = Instant::now();
    let (a, f) = run_scr_pipeline(&opts.input, opts.tol, opts.max_rank, opts.tol_mode)?;
    record_scr(&mut report, &a, &f)?;
    let fam = build_phi_family(&f, opts.p)?;
    let (eta, lower, upper) = norm_estimate_eta(&fam, opts.ell)?;
    report
        .output("eta", eta)
        .output("eta_sandwich_lower", lower)
        .output("eta_sandwich_upper", upper);
    match opts.mode {
        PhiMode::Materialize => {
            let m = materialize(&fam, opts.ell)?;
            let out_path = artifact_path(opts.out.as_deref(), &opts.input, "phi.mtx");
            io::write_dense(&out_path, &m)?;
            report.output("phi_file", out_path.display().to_string());
            if a.rows() <= ORACLE_DIM_LIMIT {
                let oracle =
                    crate::phikernel::phi_taylor_oracle(&a.to_dense(), opts.ell, 80)?;
                let rel = m.sub(&oracle).frobenius_norm() / oracle.frobenius_norm().max(1e-300);
                report.output("rel_err_fro_vs_dense_oracle", rel);
            }
        }
        PhiMode::Apply => {
            let vpath = opts.vector.as_ref().ok_or_else(|| {
                ComputationError::IoFailure("apply mode needs --vector".to_string())
            })?;
            let v = io::read_vector(vpath)?;
            let result = apply(&fam, opts.ell, &v)?;
            let out_path = artifact_path(opts.out.as_deref(), &opts.input, "phi-apply.mtx");
            io::write_vector(&out_path, &result)?;
            report.output("result_file", out_path.display().to_string());
            let norm = result.iter().map(|x| x * x).sum::<f64>().sqrt();
            report.output("result_norm", norm);
        }
    }
    report.timing("total", started.elapsed().as_secs_f64());
    Ok(report)
}

fn cond_to_outputs(report: &mut RunReport, label: &str, est: &CondEstimate) {
    report
        .output(&format!("{label}_absolute"), est.absolute)
        .output(&format!("{label}_relative"), est.relative)
        .output(&format!("{label}_phi_norm"), est.phi_norm);
    for (k, v) in &est.diagnostics {
        report.output(&format!("{label}_{k}"), *v);
    }
}

/// `philr cond`: condition-number estimates for `phi_ell` at the input
/// matrix, by the factored strategies and/or the exact small-scale reference.
pub fn cmd_cond(opts: &CondOptions) -> Result<RunReport> {
    let mut report = RunReport::new("cond");
    report
        .input("input", opts.input.display().to_string())
        .input("ell", opts.ell)
        .input(
            "strategy",
            match opts.strategy {
                StrategyChoice::One => "one",
                StrategyChoice::Two => "two",
                StrategyChoice::Both => "both",
                StrategyChoice::Exact => "exact",
            },
        )
        .input("tol", opts.tol);
    ensure_out_dir(opts.out.as_deref())?;
    let started = Instant::now();
    let a = io::read_sparse(&opts.input)?;

    if opts.strategy == StrategyChoice::Exact {
        let est = cond_exact_small(&a.to_dense(), opts.ell)?;
        cond_to_outputs(&mut report, "exact", &est);
        report.output("norm_a", est.norm_a);
        report.timing("total", started.elapsed().as_secs_f64());
        return Ok(report);
    }

    let norm_report = norm2_estimate(&a, NORM2_DEFAULT_TOL, NORM2_DEFAULT_MAX_ITER)?;
    let norm_a = norm_report.value;
    report
        .output("norm_a", norm_a)
        .output("norm_a_iterations", norm_report.iterations)
        .output("norm_a_converged", norm_report.converged);
    let f = scr_approximate(&a, opts.tol, opts.tol, opts.max_rank, opts.tol_mode)?;
    report.output("rank", f.rank);
    let fam: LowRankPhiFamily = build_phi_family(&f, opts.ell)?;
    match opts.strategy {
        StrategyChoice::One => {
            let est = strategy_one(&fam, opts.ell, norm_a)?;
            cond_to_outputs(&mut report, "strategy_one", &est);
        }
        StrategyChoice::Two => {
            let est = strategy_two(
                &fam,
                opts.ell,
                norm_a,
                STRATEGY_TWO_DEFAULT_TOL,
                STRATEGY_TWO_DEFAULT_MAX_ITER,
            )?;
            cond_to_outputs(&mut report, "strategy_two", &est);
        }
        StrategyChoice::Both => {
            let one = strategy_one(&fam, opts.ell, norm_a)?;
            cond_to_outputs(&mut report, "strategy_one", &one);
            let two = strategy_two(
                &fam,
                opts.ell,
                norm_a,
                STRATEGY_TWO_DEFAULT_TOL,
                STRATEGY_TWO_DEFAULT_MAX_ITER,
            )?;
            cond_to_outputs(&mut report, "strategy_two", &two);
        }
        StrategyChoice::Exact => unreachable!(),
    }
    report.timing("total", started.elapsed().as_secs_f64());
    Ok(report)
}

/// `philr eda`: scatter factors from labeled CSV data and the factored
/// exponentials of both scatter matrices; errors against the dense
/// exponential are reported when the dimension allows the oracle.
pub fn cmd_eda(opts: &EdaOptions) -> Result<RunReport> {
    let mut report = RunReport::new("eda");
    report
        .input("input", opts.input.display().to_string())
        .input("scale_columns", opts.scale_columns);
    ensure_out_dir(opts.out.as_deref())?;
    let started = Instant::now();
    let (data, labels) = io::read_labeled_csv(&opts.input)?;
    let labeled = LabeledData::new(data, labels, opts.scale_columns)?;
    report
        .output("features", labeled.features())
        .output("samples", labeled.samples())
        .output("classes", labeled.class_count());
    let scatter = scatter_factors(&labeled)?;
    let fam_b = exp_scatter(&scatter.h_b)?;
    let fam_w = exp_scatter(&scatter.h_w)?;
    let factored_elapsed = started.elapsed().as_secs_f64();
    report.timing("factored_path", factored_elapsed);

    let hb_path = artifact_path(opts.out.as_deref(), &opts.input, "hb.mtx");
    let hw_path = artifact_path(opts.out.as_deref(), &opts.input, "hw.mtx");
    io::write_dense(&hb_path, &scatter.h_b)?;
    io::write_dense(&hw_path, &scatter.h_w)?;
    let phib_path = artifact_path(opts.out.as_deref(), &opts.input, "phi1-hb.mtx");
    let phiw_path = artifact_path(opts.out.as_deref(), &opts.input, "phi1-hw.mtx");
    io::write_dense(&phib_path, fam_b.phi_of_z(0))?;
    io::write_dense(&phiw_path, fam_w.phi_of_z(0))?;
    report
        .output("hb_file", hb_path.display().to_string())
        .output("hw_file", hw_path.display().to_string())
        .output("phi1_hb_file", phib_path.display().to_string())
        .output("phi1_hw_file", phiw_path.display().to_string());

    if labeled.features() <= ORACLE_DIM_LIMIT {
        let oracle_start = Instant::now();
        let exp_b = expm_dense(&scatter.h_b.matmul(&scatter.h_b.transpose())?)?;
        let exp_w = expm_dense(&scatter.h_w.matmul(&scatter.h_w.transpose())?)?;
        report.timing("dense_oracle", oracle_start.elapsed().as_secs_f64());
        let err_b = materialize(&fam_b, 0)?.sub(&exp_b).frobenius_norm()
            / exp_b.frobenius_norm().max(1e-300);
        let err_w = materialize(&fam_w, 0)?.sub(&exp_w).frobenius_norm()
            / exp_w.frobenius_norm().max(1e-300);
        report
            .output("err_b", err_b)
            .output("err_w", err_w)
            .output("rel_err_fro", err_b.max(err_w));
    }
    report.timing("total", started.elapsed().as_secs_f64());
    Ok(report)
}

/// `philr verify`: run the named property suite on seeded synthetic
/// matrices; every checked inequality lands in the report.
pub fn cmd_verify(opts: &VerifyOptions) -> Result<RunReport> {
    let mut report = RunReport::new("verify");
    report
        .input("suite", suite_name(opts.suite))
        .input("seed", opts.seed as usize);
    ensure_out_dir(opts.out.as_deref())?;
    let started = Instant::now();
    let checks = run_suite(opts.suite, opts.seed)?;
    let mut all_passed = true;
    for check in &checks {
        all_passed &= check.passed;
        report.output(
            &format!("check/{}", check.name),
            ReportValue::List(vec![
                ReportValue::Flag(check.passed),
                ReportValue::Real(check.measured),
                ReportValue::Real(check.threshold),
            ]),
        );
    }
    report
        .output("checks_total", checks.len())
        .output(
            "checks_failed",
            checks.iter().filter(|c| !c.passed).count(),
        )
        .output("all_passed", all_passed);
    report.timing("total", started.elapsed().as_secs_f64());
    Ok(report)
}

pub fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Identity => "identity",
        Suite::Frechet => "frechet",
        Suite::Sandwich => "sandwich",
        Suite::Bounds => "bounds",
        Suite::All => "all",
    }
}

pub fn mode_name(m: ToleranceMode) -> &'static str {
    match m {
        ToleranceMode::Absolute => "abs",
        ToleranceMode::Relative => "rel",
        ToleranceMode::Auto => "auto",
    }
}
