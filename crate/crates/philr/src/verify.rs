//! Self-check suites over seeded synthetic matrices: the factored-family
//! identity, the derivative oracles, the norm sandwiches, and the residual /
//! error-transfer bounds. The CLI `verify` subcommand runs these and reports
//! every checked inequality with its measured slack.

use crate::cond::{
    cond_exact_small, frechet_augmented, frechet_quadrature, kronecker_form_lowrank_series,
    norm_sandwich_check, perturbation_identity_check, strategy_one, strategy_two,
};
use crate::core::{norm2_exact_small, DenseMatrix, Result};
use crate::lowrank::{apply, build_phi_family, materialize, norm_estimate_eta};
use crate::phikernel::{factorial, phi_family_dense, phi_taylor_oracle};
use crate::scr::{scr_approximate, scr_residual, ScrFactors, ToleranceMode};
use crate::synth::{decaying_spectrum, random_dense, random_factored, Spectrum};

/// Suites runnable from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Identity,
    Frechet,
    Sandwich,
    Bounds,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "identity" => Ok(Suite::Identity),
            "frechet" => Ok(Suite::Frechet),
            "sandwich" => Ok(Suite::Sandwich),
            "bounds" => Ok(Suite::Bounds),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite {other}; expected identity|frechet|sandwich|bounds|all"
            )),
        }
    }
}

/// One checked inequality: `measured <= threshold` (or a flag check with
/// threshold 1).
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    fn bound(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured <= threshold,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            measured: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed: ok,
        }
    }
}

/// Runs the named suite on matrices derived from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckResult>> {
    let mut checks = Vec::new();
    match suite {
        Suite::Identity => identity_suite(seed, &mut checks)?,
        Suite::Frechet => frechet_suite(seed, &mut checks)?,
        Suite::Sandwich => sandwich_suite(seed, &mut checks)?,
        Suite::Bounds => bounds_suite(seed, &mut checks)?,
        Suite::All => {
            identity_suite(seed, &mut checks)?;
            frechet_suite(seed, &mut checks)?;
            sandwich_suite(seed, &mut checks)?;
            bounds_suite(seed, &mut checks)?;
        }
    }
    Ok(checks)
}

fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm().max(1e-300)
}

fn identity_suite(seed: u64, checks: &mut Vec<CheckResult>) -> Result<()> {
    for (idx, &r) in [3usize, 6, 10, 16].iter().enumerate() {
        let f = random_factored(120, r, 0.15, 3.0, seed.wrapping_add(idx as u64))?;
        let fam = build_phi_family(&f, 4)?;
        let dense = f.to_dense()?;
        let mut worst = 0.0f64;
        for ell in 0..=4 {
            let oracle = phi_taylor_oracle(&dense, ell, 60)?;
            worst = worst.max(rel_err(&materialize(&fam, ell)?, &oracle));
        }
        checks.push(CheckResult::bound(
            format!("identity/materialize-vs-series-r{r}"),
            worst,
            1e-12,
        ));

        let (eta, lower, upper) = norm_estimate_eta(&fam, 2)?;
        let exact = norm2_exact_small(&materialize(&fam, 2)?)?;
        checks.push(CheckResult::flag(
            format!("identity/eta-sandwich-r{r} (eta {eta:.3e})"),
            lower <= exact + 1e-10 && exact <= upper + 1e-10,
        ));
    }

    for idx in 0..6u64 {
        let n = 6 + 2 * idx as usize;
        let m = random_dense(n, 4.0, seed.wrapping_add(100 + idx));
        let fam = phi_family_dense(&m, 5)?;
        checks.push(CheckResult::bound(
            format!("identity/recurrence-n{n}"),
            fam.recurrence_residual(&m)?,
            1e-10,
        ));
    }

    let f = random_factored(100, 8, 0.15, 2.5, seed.wrapping_add(1000))?;
    let fam = build_phi_family(&f, 4)?;
    let v: Vec<f64> = (0..100).map(|i| ((i * 37 + 11) % 23) as f64 / 23.0 - 0.5).collect();
    let mut worst = 0.0f64;
    for ell in 0..=4 {
        let direct = materialize(&fam, ell)?.matvec(&v)?;
        let fast = apply(&fam, ell, &v)?;
        let num = direct
            .iter()
            .zip(&fast)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = direct.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        worst = worst.max(num / den);
    }
    checks.push(CheckResult::bound("identity/apply-vs-materialize", worst, 1e-12));
    Ok(())
}

fn frechet_suite(seed: u64, checks: &mut Vec<CheckResult>) -> Result<()> {
    for idx in 0..5u64 {
        let n = 3 + (idx as usize % 4);
        let a = random_dense(n, 1.5, seed.wrapping_add(200 + idx));
        let e = random_dense(n, 1.0, seed.wrapping_add(300 + idx));
        let mut worst = 0.0f64;
        for ell in 0..=4 {
            let aug = frechet_augmented(&a, &e, ell)?;
            let quad = frechet_quadrature(&a, &e, ell, 48)?;
            worst = worst.max(aug.sub(&quad).frobenius_norm());
        }
        checks.push(CheckResult::bound(
            format!("frechet/augmented-vs-quadrature-{idx}"),
            worst,
            1e-9,
        ));
    }

    for idx in 0..3u64 {
        let n = 4 + idx as usize;
        let a = random_dense(n, 1.5, seed.wrapping_add(400 + idx));
        let e = random_dense(n, 1.0, seed.wrapping_add(500 + idx));
        let ell = idx as usize + 1;
        let l = frechet_augmented(&a, &e, ell)?;
        let base = phi_family_dense(&a, ell)?;
        let err_at = |h: f64| -> Result<f64> {
            let pert = phi_family_dense(&a.add(&e.scale(h)), ell)?;
            Ok(pert
                .phi(ell)
                .sub(base.phi(ell))
                .scale(1.0 / h)
                .sub(&l)
                .frobenius_norm())
        };
        let ratio = err_at(1e-4)? / err_at(1e-5)?;
        checks.push(CheckResult::flag(
            format!("frechet/fd-ratio-{idx} (ratio {ratio:.3})"),
            (8.0..=12.0).contains(&ratio),
        ));
    }

    for idx in 0..3u64 {
        let n = 4;
        let a = random_dense(n, 1.5, seed.wrapping_add(600 + idx));
        let e0 = random_dense(n, 1.0, seed.wrapping_add(700 + idx));
        let e = e0.scale(0.3 / e0.frobenius_norm());
        let ell = idx as usize;
        let residual = perturbation_identity_check(&a, &e, ell)?;
        let scale = 1.0 + phi_family_dense(&a, ell)?.phi(ell).frobenius_norm();
        checks.push(CheckResult::bound(
            format!("frechet/perturbation-identity-{idx}"),
            residual,
            1e-10 * scale,
        ));
    }
    Ok(())
}

fn sandwich_suite(seed: u64, checks: &mut Vec<CheckResult>) -> Result<()> {
    for idx in 0..5u64 {
        let n = 3 + (idx as usize % 4);
        let a = random_dense(n, 1.2, seed.wrapping_add(800 + idx));
        let ell = (idx as usize) % 5;
        let (lower_ok, upper_ok) = norm_sandwich_check(&a, ell, 150)?;
        checks.push(CheckResult::flag(
            format!("sandwich/two-norm-n{n}-l{ell}"),
            lower_ok && upper_ok,
        ));
    }

    let exp_coeffs: Vec<f64> = (0..20).map(|i| 1.0 / factorial(i)).collect();
    for idx in 0..3u64 {
        let n = 4 + idx as usize;
        let r = 2 + idx as usize % 2;
        let f = random_factored(n, r, 0.6, 1.5, seed.wrapping_add(900 + idx))?;
        let series = kronecker_form_lowrank_series(&f, &exp_coeffs)?;
        let column = kronecker_form_of_truncated_exp(&f, &exp_coeffs)?;
        checks.push(CheckResult::bound(
            format!("sandwich/series-vs-column-kronecker-n{n}"),
            series.entries.sub(&column).frobenius_norm(),
            1e-10,
        ));
    }
    Ok(())
}

/// Column-built Kronecker form of the truncated exponential series, used as
/// the oracle for the closed-form assembly.
fn kronecker_form_of_truncated_exp(f: &ScrFactors, coeffs: &[f64]) -> Result<DenseMatrix> {
    let dense = f.to_dense()?;
    let n = dense.rows();
    let mut pows = vec![DenseMatrix::identity(n)];
    for p in 1..coeffs.len() {
        pows.push(pows[p - 1].matmul(&dense)?);
    }
    let mut k = DenseMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let mut e = DenseMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            let mut l = DenseMatrix::zeros(n, n);
            for (p, &alpha) in coeffs.iter().enumerate().skip(1) {
                for q in 1..=p {
                    let term = pows[q - 1].matmul(&e)?.matmul(&pows[p - q])?;
                    l.axpy(alpha, &term);
                }
            }
            k.col_mut(j * n + i)
                .copy_from_slice(&crate::core::vec_of(&l));
        }
    }
    Ok(k)
}

fn bounds_suite(seed: u64, checks: &mut Vec<CheckResult>) -> Result<()> {
    let spectra = [
        ("geometric", Spectrum::Geometric { rho: 2.0 }),
        ("power-law", Spectrum::PowerLaw { alpha: 2.0 }),
    ];
    for (name, spectrum) in spectra {
        for idx in 0..2u64 {
            let a = decaying_spectrum(150, spectrum, 1e-12, seed.wrapping_add(1100 + idx))?;
            let f = scr_approximate(&a, 1e-5, 1e-5, 120, ToleranceMode::Absolute)?;
            let measured = scr_residual(&a, &f)?;
            let bound = (f.eps_col * f.eps_col + f.eps_row * f.eps_row).sqrt()
                + 1e-10 * a.frobenius_norm();
            checks.push(CheckResult::bound(
                format!("bounds/scr-residual-{name}-{idx} (rank {})", f.rank),
                measured,
                bound,
            ));
        }
    }

    // Error transfer at exact-condition scale.
    for (idx, eps) in [(0u64, 1e-4f64), (1, 1e-6)] {
        let n = 10;
        let f = random_factored(n, 3, 0.6, 1.5, seed.wrapping_add(1300 + idx))?;
        let tilde = f.to_dense()?;
        let e0 = random_dense(n, 1.0, seed.wrapping_add(1400 + idx));
        let e = e0.scale(eps / e0.frobenius_norm());
        let a = tilde.add(&e);
        let fam = build_phi_family(&f, 4)?;
        let mut worst_ratio = 0.0f64;
        for ell in 0..=4 {
            let exact = cond_exact_small(&a, ell)?;
            let diff = phi_family_dense(&a, ell)?
                .phi(ell)
                .sub(&materialize(&fam, ell)?)
                .frobenius_norm();
            worst_ratio = worst_ratio.max(diff / (exact.absolute * eps));
        }
        checks.push(CheckResult::bound(
            format!("bounds/error-transfer-eps{eps:.0e}"),
            worst_ratio,
            10.0,
        ));
    }

    // Strategy estimates against the exact reference, order of magnitude.
    for idx in 0..2u64 {
        let n = 10;
        let f = random_factored(n, 3, 0.6, 1.8, seed.wrapping_add(1500 + idx))?;
        let dense = f.to_dense()?;
        let norm_a = norm2_exact_small(&dense)?;
        let fam = build_phi_family(&f, 4)?;
        let mut worst = 0.0f64;
        for ell in 0..=4 {
            let exact = cond_exact_small(&dense, ell)?.absolute;
            let s1 = strategy_one(&fam, ell, norm_a)?.absolute;
            let s2 = strategy_two(&fam, ell, norm_a, 1e-3, 50)?.absolute;
            for est in [s1, s2] {
                let ratio = if est > exact { est / exact } else { exact / est };
                worst = worst.max(ratio);
            }
        }
        checks.push(CheckResult::bound(
            format!("bounds/strategy-order-of-magnitude-{idx}"),
            worst,
            100.0,
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_on_reference_seed() {
        let checks = run_suite(Suite::All, 7).unwrap();
        assert!(!checks.is_empty());
        for c in &checks {
            assert!(
                c.passed,
                "{}: measured {:.6e} vs threshold {:.6e}",
                c.name, c.measured, c.threshold
            );
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = run_suite(Suite::Frechet, 3).unwrap();
        let b = run_suite(Suite::Frechet, 3).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.measured.to_bits(), y.measured.to_bits());
        }
    }
}
