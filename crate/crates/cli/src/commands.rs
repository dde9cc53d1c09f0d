//! Batch commands. Each returns [`Status::Pass`] or [`Status::Fail`] when it
//! completes and an error on bad input.

use std::path::Path;

use anyhow::{bail, Context, Result};
use parea_core::{
    brute_force_primal_with, certify, check_barrier_condition_with, level_energy, psi_perimeter, solve, superlevel,
    verify_superlevel_minimality_with, Certificate, CertifyTolerances, CellSet, Parallelism, QuantizedSearchSpec,
    Region, Window,
};

use crate::io::{certificate_json, read_scalar_csv, read_vector_csv, write_gap_history, write_json, write_scalar_csv, write_vector_csv};
use crate::problem_file::{load_problem, LoadedProblem};

/// Outcome of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Certified, all sets minimal, every barrier cell passes.
    Pass,
    /// Completed without that verdict.
    Fail,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
        }
    }

    fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Exit code for a command result: 0 pass, 2 fail, 1 error.
pub fn exit_code(r: &Result<Status>) -> u8 {
    match r {
        Ok(s) => s.code(),
        Err(_) => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Seed of randomized estimates.
    pub seed: u64,
    pub par: Parallelism,
}

fn load(problem: &Path, opts: &RunOptions) -> Result<LoadedProblem> {
    let mut p = load_problem(problem)?;
    p.params.seed = opts.seed;
    p.params.par = opts.par;
    Ok(p)
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

/// A certificate that records a failed evaluation.
fn failed_certificate(primal: f64, reason: &'static str) -> Certificate {
    Certificate {
        primal,
        dual: None,
        gap: f64::INFINITY,
        rel_gap: f64::INFINITY,
        dual_feasibility_max: f64::NAN,
        div_residual: f64::NAN,
        trace_residual: f64::NAN,
        alignment_defect: f64::NAN,
        active_cell_count: 0,
        boundary_contact_defect: f64::NAN,
        detached_faces: 0,
        certified: false,
        failures: vec![reason],
    }
}

/// Solves, certifies and writes `u.csv`, `N.csv`, `certificate.json` and
/// `gap_history.csv` into `out`.
pub fn cmd_solve(problem: &Path, out: &Path, opts: &RunOptions) -> Result<Status> {
    let p = load(problem, opts)?;
    ensure_dir(out)?;
    let sol = solve(&p.spec, &p.params)?;
    let r = &sol.report;
    let mut cert = match certify(&sol.u, &sol.n, &p.spec, &CertifyTolerances::default()) {
        Ok(c) => c,
        Err(_) => failed_certificate(r.primal, "evaluation"),
    };
    if r.diverged {
        cert.certified = false;
        cert.failures.push("diverged");
    }
    write_scalar_csv(&out.join("u.csv"), p.spec.dom(), &sol.u)?;
    write_vector_csv(&out.join("N.csv"), p.spec.dom(), &sol.n)?;
    write_json(&out.join("certificate.json"), &certificate_json(&cert, Some(r)))?;
    write_gap_history(&out.join("gap_history.csv"), &r.gap_history)?;
    println!(
        "iterations {} primal {} rel_gap {:.3e} converged {} diverged {} certified {}",
        r.iterations, r.primal, r.rel_gap, r.converged, r.diverged, cert.certified
    );
    if !cert.failures.is_empty() {
        println!("failed checks: {}", cert.failures.join(", "));
    }
    Ok(Status::from_bool(cert.certified))
}

/// Certifies externally supplied fields. Prints the certificate and writes
/// it to `out` when given.
pub fn cmd_certify(problem: &Path, u_csv: &Path, n_csv: &Path, out: Option<&Path>, opts: &RunOptions) -> Result<Status> {
    let p = load(problem, opts)?;
    let dom = p.spec.dom();
    let u = read_scalar_csv(u_csv, dom)?;
    let n = read_vector_csv(n_csv, dom)?;
    let cert = certify(&u, &n, &p.spec, &CertifyTolerances::default())?;
    let js = certificate_json(&cert, None);
    if let Some(out) = out {
        ensure_dir(out)?;
        write_json(&out.join("certificate.json"), &js)?;
    }
    println!("{}", serde_json::to_string_pretty(&js)?);
    Ok(Status::from_bool(cert.certified))
}

fn default_window(p: &LoadedProblem) -> Window {
    let d = p.spec.dom();
    let w = d.nx().min(3);
    let h = d.ny().min(3);
    Window::new((d.nx() - w) / 2, (d.ny() - h) / 2, w, h)
}

fn write_set(path: &Path, e: &CellSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["i", "j", "member"])?;
    for j in 0..e.ny() {
        for i in 0..e.nx() {
            w.write_record([i.to_string(), j.to_string(), u8::from(e.contains(i, j)).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `set_<k>.csv` per level and a `levelsets.csv` summary with the
/// perimeter, level energy and minimality verdict of each super-level set.
pub fn cmd_levelsets(
    problem: &Path,
    u_csv: &Path,
    lambdas: &[f64],
    window: Option<Window>,
    out: &Path,
    opts: &RunOptions,
) -> Result<Status> {
    let p = load(problem, opts)?;
    if lambdas.is_empty() {
        bail!("no levels given");
    }
    let window = window.or(p.window).unwrap_or_else(|| default_window(&p));
    let dom = p.spec.dom();
    let u = read_scalar_csv(u_csv, dom)?;
    ensure_dir(out)?;
    let mut w = csv::Writer::from_path(out.join("levelsets.csv"))?;
    w.write_record(["lambda", "cells", "perimeter", "level_energy", "minimal", "margin"])?;
    let mut all = true;
    for (k, &lambda) in lambdas.iter().enumerate() {
        let e = superlevel(dom, &u, lambda);
        let per = psi_perimeter(&e, &p.spec, Region::Omega)?;
        let le = level_energy(&e, &p.spec, lambda)?;
        let m = verify_superlevel_minimality_with(&u, lambda, &p.spec, window, opts.par)?;
        all &= m.minimal;
        write_set(&out.join(format!("set_{k}.csv")), &e)?;
        w.write_record([
            lambda.to_string(),
            e.len().to_string(),
            per.to_string(),
            le.to_string(),
            m.minimal.to_string(),
            m.margin.to_string(),
        ])?;
        println!("lambda {lambda} cells {} perimeter {per} minimal {} margin {}", e.len(), m.minimal, m.margin);
    }
    w.flush()?;
    Ok(Status::from_bool(all))
}

/// Prints a per-boundary-cell table and writes it to `out/barrier.csv` when given.
pub fn cmd_barrier(problem: &Path, radius: f64, out: Option<&Path>, opts: &RunOptions) -> Result<Status> {
    let p = load(problem, opts)?;
    let cells = check_barrier_condition_with(&p.spec, radius, opts.par)?;
    let mut rows = vec![["i", "j", "ball_cells", "passes", "min_value"].map(String::from).to_vec()];
    for c in &cells {
        rows.push(vec![
            c.cell.0.to_string(),
            c.cell.1.to_string(),
            c.ball_cells.to_string(),
            c.passes.to_string(),
            c.min_value.to_string(),
        ]);
    }
    for r in &rows {
        println!("{}", r.join("\t"));
    }
    if let Some(out) = out {
        ensure_dir(out)?;
        let mut w = csv::Writer::from_path(out.join("barrier.csv"))?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(Status::from_bool(cells.iter().all(|c| c.passes)))
}

/// Exhaustive quantized search; writes the minimizer to `out/u_oracle.csv`.
pub fn cmd_oracle(problem: &Path, levels: &[f64], out: Option<&Path>, opts: &RunOptions) -> Result<Status> {
    let p = load(problem, opts)?;
    let q = QuantizedSearchSpec::new(levels.to_vec(), 10)?;
    let r = brute_force_primal_with(&p.spec, &q, opts.par)?;
    if let Some(out) = out {
        ensure_dir(out)?;
        write_scalar_csv(&out.join("u_oracle.csv"), p.spec.dom(), &r.u_star)?;
    }
    println!("value {}", r.value);
    Ok(Status::Pass)
}
