//! Primal-dual hybrid gradient iteration with a certified duality gap.
//!
//! The saddle problem is `min_u max_b <K u + F~, b> + <H, u>` subject to
//! `phi0(x, b) <= 1`, with `K` the problem gradient. Dual values are only
//! reported for fields that satisfy the divergence constraint exactly: the
//! iterate is corrected by a minimum-norm gradient field (found by conjugate
//! gradients) and, if that leaves the dual ball, blended with a fixed
//! particular solution.

use crate::error::{Error, Result};
use crate::grid::{boundary_trace_normal, divergence, divergence_into, gradient_into, operator_norm_estimate, GridDomain, ScalarField, VectorField};
use crate::par::{self, Parallelism};
use crate::problem::{energy_parts_with, existence_condition_check_with, substitute_dirichlet, ExistenceCheck, ProblemSpec};

/// Iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub tau: f64,
    pub sigma: f64,
    /// Extrapolation weight in `[0, 1]`.
    pub theta: f64,
    /// Stop once `gap / max(1, |primal|)` is at most this.
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Iterations between gap evaluations.
    pub gap_check_stride: usize,
    /// Seed of the randomized coercivity estimate.
    pub seed: u64,
    pub par: Parallelism,
}

impl SolverParams {
    /// Defaults for a domain: `tau = sigma = 0.99 / L`, `theta = 1`.
    pub fn for_domain(dom: &GridDomain) -> SolverParams {
        let l = operator_norm_estimate(dom);
        SolverParams {
            tau: 0.99 / l,
            sigma: 0.99 / l,
            theta: 1.0,
            tol_gap: 1e-4,
            max_iter: 100_000,
            gap_check_stride: 50,
            seed: 0,
            par: Parallelism::default(),
        }
    }

    /// Checks `tau * sigma * L^2 <= 1` and the ranges of the other fields.
    pub fn validate(&self, dom: &GridDomain) -> Result<()> {
        let l = operator_norm_estimate(dom);
        if !(self.tau > 0.0 && self.sigma > 0.0 && self.tau.is_finite() && self.sigma.is_finite()) {
            return Err(Error::Config("step sizes tau and sigma must be finite and > 0".into()));
        }
        let prod = self.tau * self.sigma * l * l;
        if prod > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "step sizes violate tau * sigma * L^2 <= 1 (got {prod:.6} with L = {l:.6})"
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::Config(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.tol_gap >= 0.0) {
            return Err(Error::Config("tol_gap must be >= 0".into()));
        }
        if self.gap_check_stride == 0 {
            return Err(Error::Config("gap_check_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// One gap evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRecord {
    pub iter: usize,
    pub primal: f64,
    /// `None` when no dual-feasible field could be built.
    pub dual: Option<f64>,
    /// `primal - dual`, infinite without a dual value.
    pub gap: f64,
}

/// Iterates of the primal-dual scheme.
#[derive(Debug, Clone)]
pub struct PrimalDualState {
    pub u: ScalarField,
    pub b: VectorField,
    pub u_bar: ScalarField,
    pub iter: usize,
    pub gap_history: Vec<GapRecord>,
    grad: VectorField,
    kt: ScalarField,
}

impl PrimalDualState {
    /// All-zero iterates for a problem.
    pub fn new(spec: &ProblemSpec) -> PrimalDualState {
        let lat = spec.dom().lattice();
        PrimalDualState {
            u: ScalarField::zeros(lat),
            b: VectorField::zeros(lat),
            u_bar: ScalarField::zeros(lat),
            iter: 0,
            gap_history: Vec::new(),
            grad: VectorField::zeros(lat),
            kt: ScalarField::zeros(lat),
        }
    }

    /// Starts from a given primal field (mean-normalized for Neumann problems).
    pub fn with_initial(spec: &ProblemSpec, u0: &ScalarField) -> Result<PrimalDualState> {
        spec.dom().check_lattice(u0.lattice(), "initial field")?;
        let mut s = PrimalDualState::new(spec);
        for &p in spec.dom().mask_indices() {
            s.u.raw_mut()[p] = u0.raw()[p];
        }
        if spec.is_neumann() {
            s.u.remove_mean(spec.dom());
        }
        s.u_bar = s.u.clone();
        Ok(s)
    }
}

/// `K^T b`: minus the divergence, with boundary components ignored for Neumann problems.
fn kt_into(spec: &ProblemSpec, b: &VectorField, par: Parallelism, out: &mut ScalarField) {
    divergence_into(spec.dom(), b, spec.is_neumann(), par, out);
    for v in out.raw_mut() {
        *v = -*v;
    }
}

/// `K u` without drift or boundary data.
fn k_into(spec: &ProblemSpec, u: &ScalarField, par: Parallelism, out: &mut VectorField) {
    gradient_into(spec.dom(), u, None, spec.is_neumann(), par, out);
}

fn remove_mean_par(dom: &GridDomain, u: &mut ScalarField, par: Parallelism) {
    let s = dom.lattice().stride();
    let raw = u.raw();
    let sum = par::sum_rows(par, dom.lattice().rows(), raw.len(), |r| {
        (r * s..(r + 1) * s).filter(|&p| dom.is_mask_p(p)).map(|p| raw[p]).sum()
    });
    let m = sum / dom.cell_count() as f64;
    par::for_each_row(par, u.raw_mut(), s, |r, row| {
        for (c, v) in row.iter_mut().enumerate() {
            if dom.is_mask_p(r * s + c) {
                *v -= m;
            }
        }
    });
}

/// One extrapolated primal-dual step.
pub fn pdhg_step(state: &mut PrimalDualState, spec: &ProblemSpec, params: &SolverParams) -> Result<()> {
    let dom = spec.dom();
    let par = params.par;
    let s = dom.lattice().stride();
    let sigma = params.sigma;
    let tau = params.tau;
    let theta = params.theta;

    spec.shifted_gradient_into(&state.u_bar, par, &mut state.grad);
    {
        let g = state.grad.raw();
        par::for_each_row(par, state.b.raw_mut(), s, |r, row| {
            for (c, b) in row.iter_mut().enumerate() {
                let p = r * s + c;
                *b = if spec.in_support(p) {
                    spec.project_cell(p, [b[0] + sigma * g[p][0], b[1] + sigma * g[p][1]])
                } else {
                    [0.0, 0.0]
                };
            }
        });
    }

    kt_into(spec, &state.b, par, &mut state.kt);
    let old = state.u.clone();
    {
        let kt = state.kt.raw();
        let h = spec.source().raw();
        par::for_each_row(par, state.u.raw_mut(), s, |r, row| {
            for (c, v) in row.iter_mut().enumerate() {
                let p = r * s + c;
                if dom.is_mask_p(p) {
                    *v -= tau * (kt[p] + h[p]);
                }
            }
        });
    }
    if spec.is_neumann() {
        remove_mean_par(dom, &mut state.u, par);
    }
    {
        let un = state.u.raw();
        let uo = old.raw();
        par::for_each_row(par, state.u_bar.raw_mut(), s, |r, row| {
            for (c, v) in row.iter_mut().enumerate() {
                let p = r * s + c;
                *v = un[p] + theta * (un[p] - uo[p]);
            }
        });
    }
    state.iter += 1;
    Ok(())
}

/// Result of a gap evaluation.
#[derive(Debug, Clone)]
pub struct DualityGap {
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: f64,
    /// `gap / max(1, |primal|)`.
    pub rel_gap: f64,
    /// Largest per-cell correction applied to reach the divergence constraint.
    pub repair_magnitude: f64,
    /// Weight of the corrected iterate in the convex blend (1 when no blend was needed).
    pub repair_t: f64,
    /// The exactly feasible dual field behind `dual` (the raw iterate when `dual` is `None`).
    pub b_feas: VectorField,
}

/// Builds dual-feasible fields from dual iterates.
pub(crate) struct Repairer {
    b0: VectorField,
    rho0: f64,
    target: ScalarField,
    dual_drift: VectorField,
}

impl Repairer {
    pub(crate) fn new(spec: &ProblemSpec, par: Parallelism) -> Repairer {
        let target = spec.divergence_target();
        let zero = VectorField::zeros(spec.dom().lattice());
        let b0 = correction(spec, &zero, &target, par);
        let rho0 = max_dual_norm(spec, &b0, par);
        Repairer { b0, rho0, target, dual_drift: spec.dual_drift() }
    }

    /// Returns the feasible field, the correction magnitude and the blend weight.
    pub(crate) fn repair(&self, spec: &ProblemSpec, b: &VectorField, par: Parallelism) -> (Option<VectorField>, f64, f64) {
        let c = correction(spec, b, &self.target, par);
        let mag = c.raw().iter().fold(0.0f64, |m, v| m.max(v[0].hypot(v[1])));
        let fixed = b.add(&c);
        let rho1 = max_dual_norm(spec, &fixed, par);
        if rho1 <= 1.0 {
            return (Some(fixed), mag, 1.0);
        }
        if self.rho0 < 1.0 {
            let t = (1.0 - self.rho0) / (rho1 - self.rho0);
            let blended = fixed.scale(t).add(&self.b0.scale(1.0 - t));
            return (Some(blended), mag, t);
        }
        (None, mag, 0.0)
    }

    pub(crate) fn dual_value(&self, spec: &ProblemSpec, b: &VectorField) -> f64 {
        self.dual_drift.dot(b, spec.dom())
    }
}

fn max_dual_norm(spec: &ProblemSpec, b: &VectorField, par: Parallelism) -> f64 {
    let dom = spec.dom();
    let s = dom.lattice().stride();
    let raw = b.raw();
    let m = par::max_rows(par, dom.lattice().rows(), raw.len(), |r| {
        (r * s..(r + 1) * s)
            .filter(|&p| spec.in_support(p))
            .map(|p| spec.norm().phi_dual_p(p, raw[p]))
            .fold(f64::NEG_INFINITY, f64::max)
    });
    m.max(0.0)
}

/// Minimum-norm `c = K psi` with `K^T (b + c) + target = 0`.
fn correction(spec: &ProblemSpec, b: &VectorField, target: &ScalarField, par: Parallelism) -> VectorField {
    let dom = spec.dom();
    let lat = dom.lattice();
    let mut rhs = ScalarField::zeros(lat);
    kt_into(spec, b, par, &mut rhs);
    for &p in dom.mask_indices() {
        rhs.raw_mut()[p] = -(rhs.raw()[p] + target.raw()[p]);
    }
    if spec.is_neumann() {
        rhs.remove_mean(dom);
    }
    let psi = cg_normal(spec, &rhs, par);
    let mut c = VectorField::zeros(lat);
    k_into(spec, &psi, par, &mut c);
    c
}

/// Conjugate gradients for `K^T K psi = rhs` on mask cells.
fn cg_normal(spec: &ProblemSpec, rhs: &ScalarField, par: Parallelism) -> ScalarField {
    let dom = spec.dom();
    let lat = dom.lattice();
    let idx = dom.mask_indices();
    let dot = |a: &ScalarField, b: &ScalarField| idx.iter().map(|&p| a.raw()[p] * b.raw()[p]).sum::<f64>();
    let mut x = ScalarField::zeros(lat);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut kp = VectorField::zeros(lat);
    let mut ap = ScalarField::zeros(lat);
    let mut rr = dot(&r, &r);
    let stop = rr * 1e-28;
    let max_it = 4 * idx.len() + 100;
    for _ in 0..max_it {
        if rr <= stop || rr == 0.0 {
            break;
        }
        k_into(spec, &p, par, &mut kp);
        kt_into(spec, &kp, par, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for &q in idx {
            x.raw_mut()[q] += alpha * p.raw()[q];
            r.raw_mut()[q] -= alpha * ap.raw()[q];
        }
        if spec.is_neumann() {
            r.remove_mean(dom);
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for &q in idx {
            p.raw_mut()[q] = r.raw()[q] + beta * p.raw()[q];
        }
        rr = rr_new;
    }
    x
}

fn evaluate(spec: &ProblemSpec, rep: &Repairer, u: &ScalarField, b: &VectorField, par: Parallelism) -> Result<DualityGap> {
    let primal = energy_parts_with(spec, u, par)?.total();
    let (feas, mag, t) = rep.repair(spec, b, par);
    let (dual, b_feas) = match feas {
        Some(f) => (Some(rep.dual_value(spec, &f)), f),
        None => (None, b.clone()),
    };
    let gap = dual.map_or(f64::INFINITY, |d| primal - d);
    Ok(DualityGap {
        primal,
        dual,
        gap,
        rel_gap: gap / primal.abs().max(1.0),
        repair_magnitude: mag,
        repair_t: t,
        b_feas,
    })
}

/// Primal value, repaired dual value and their gap for the current iterates.
pub fn duality_gap(state: &PrimalDualState, spec: &ProblemSpec) -> Result<DualityGap> {
    gap_of(spec, &state.u, &state.b)
}

/// Gap evaluation for an arbitrary primal/dual pair.
pub fn gap_of(spec: &ProblemSpec, u: &ScalarField, b: &VectorField) -> Result<DualityGap> {
    spec.dom().check_lattice(u.lattice(), "field")?;
    spec.dom().check_lattice(b.lattice(), "dual field")?;
    let rep = Repairer::new(spec, Parallelism::Sequential);
    evaluate(spec, &rep, u, b, Parallelism::Sequential)
}

/// Residuals of the divergence and normal-trace constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `max |div b - target|`, with target `H - mean H` (Neumann) or `H` (Dirichlet).
    pub div_residual: f64,
    /// `max |[b, nu]|` over boundary faces.
    pub trace_residual: f64,
}

pub fn dual_feasibility_residuals(b: &VectorField, spec: &ProblemSpec) -> Residuals {
    let dom = spec.dom();
    let d = divergence(dom, b);
    let t = spec.divergence_target();
    let div_residual = dom
        .mask_indices()
        .iter()
        .map(|&p| (d.raw()[p] - t.raw()[p]).abs())
        .fold(0.0, f64::max);
    let trace_residual = boundary_trace_normal(dom, b).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Residuals { div_residual, trace_residual }
}

/// Summary of a solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Relative gap reached `tol_gap`.
    pub converged: bool,
    /// The primal values blew up (typically an energy unbounded below).
    pub diverged: bool,
    pub iterations: usize,
    /// Iteration of the returned iterate.
    pub best_iter: usize,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: f64,
    pub rel_gap: f64,
    pub repair_magnitude: f64,
    pub repair_t: f64,
    pub residuals: Residuals,
    pub existence: ExistenceCheck,
    /// Constant added to energies of the zero-shifted problem (Dirichlet only).
    pub energy_constant: f64,
    /// Gap records with energies of the original problem.
    pub gap_history: Vec<GapRecord>,
}

/// Solver output: minimizer, dual field and report.
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: ScalarField,
    pub n: VectorField,
    pub report: SolveReport,
}

const DIVERGENCE_LIMIT: f64 = 1e12;

/// Runs the iteration until the relative gap reaches `tol_gap` or
/// `max_iter` is exhausted, and returns the best iterate.
///
/// Dirichlet problems are solved in zero-shifted form and the extension is
/// added back to the returned field. Running out of iterations is reported
/// through `report.converged`, not as an error.
pub fn solve(spec: &ProblemSpec, params: &SolverParams) -> Result<Solution> {
    solve_from(spec, params, None)
}

/// Like [`solve`], optionally warm-started from a primal field of the original problem.
pub fn solve_from(spec: &ProblemSpec, params: &SolverParams, u0: Option<&ScalarField>) -> Result<Solution> {
    params.validate(spec.dom())?;
    let existence = existence_condition_check_with(spec, 2000, params.seed);
    let work = if spec.is_neumann() { spec.clone() } else { substitute_dirichlet(spec)? };
    let shift = spec.f_extension().cloned();
    let constant = work.energy_constant();
    let par = params.par;

    let mut state = match (u0, &shift) {
        (Some(u0), Some(f)) => PrimalDualState::with_initial(&work, &u0.axpy(-1.0, f))?,
        (Some(u0), None) => PrimalDualState::with_initial(&work, u0)?,
        (None, _) => PrimalDualState::new(&work),
    };
    let rep = Repairer::new(&work, par);

    let mut best: Option<(DualityGap, ScalarField, usize)> = None;
    let mut last: Option<(DualityGap, ScalarField, usize)> = None;
    let mut converged = false;
    let mut diverged = false;
    loop {
        let due = state.iter % params.gap_check_stride == 0 || state.iter == params.max_iter;
        if due {
            match evaluate(&work, &rep, &state.u, &state.b, par) {
                Ok(g) => {
                    state.gap_history.push(GapRecord {
                        iter: state.iter,
                        primal: g.primal + constant,
                        dual: g.dual.map(|d| d + constant),
                        gap: g.gap,
                    });
                    if !g.primal.is_finite() || g.primal.abs() > DIVERGENCE_LIMIT {
                        diverged = true;
                    }
                    let done = g.rel_gap <= params.tol_gap;
                    let better = match &best {
                        None => true,
                        Some((b, _, _)) => g.gap < b.gap,
                    };
                    if g.dual.is_some() && better {
                        best = Some((g.clone(), state.u.clone(), state.iter));
                    }
                    last = Some((g, state.u.clone(), state.iter));
                    if done {
                        converged = true;
                        break;
                    }
                }
                Err(_) => {
                    diverged = true;
                }
            }
            if diverged || state.iter >= params.max_iter {
                break;
            }
        }
        pdhg_step(&mut state, &work, params)?;
        if !state.u.is_finite_on(work.dom()) {
            diverged = true;
            break;
        }
    }

    let (g, mut u, best_iter) = match best.or(last) {
        Some(x) => x,
        None => {
            let g = DualityGap {
                primal: f64::NAN,
                dual: None,
                gap: f64::INFINITY,
                rel_gap: f64::INFINITY,
                repair_magnitude: f64::NAN,
                repair_t: 0.0,
                b_feas: state.b.clone(),
            };
            (g, state.u.clone(), state.iter)
        }
    };
    if let Some(f) = &shift {
        u = u.axpy(1.0, f);
    }
    let residuals = dual_feasibility_residuals(&g.b_feas, spec);
    let report = SolveReport {
        converged,
        diverged,
        iterations: state.iter,
        best_iter,
        primal: g.primal + constant,
        dual: g.dual.map(|d| d + constant),
        gap: g.gap,
        rel_gap: g.rel_gap,
        repair_magnitude: g.repair_magnitude,
        repair_t: g.repair_t,
        residuals,
        existence,
        energy_constant: constant,
        gap_history: state.gap_history,
    };
    Ok(Solution { u, n: g.b_feas, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::{NormKind, NormSpec};
    use crate::problem::{energy_primal, BoundaryCondition};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_neumann(n: usize) -> ProblemSpec {
        let dom = GridDomain::rectangle(n, n, 1.0 / n as f64).unwrap();
        let norm = NormSpec::uniform(NormKind::WeightedEuclidean, n, n, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::zeros(dom.lattice());
        ProblemSpec::new(dom, norm, z, s, BoundaryCondition::Neumann).unwrap()
    }

    fn ramp(n: usize) -> ProblemSpec {
        let dom = GridDomain::rectangle(n, n, 1.0 / n as f64).unwrap();
        let f: Vec<f64> = dom.boundary_faces().iter().map(|f| f.midpoint[0]).collect();
        let norm = NormSpec::uniform(NormKind::WeightedEuclidean, n, n, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::zeros(dom.lattice());
        ProblemSpec::new(dom, norm, z, s, BoundaryCondition::Dirichlet(f)).unwrap()
    }

    #[test]
    fn zero_problem_is_a_fixed_point() {
        let spec = zero_neumann(4);
        let params = SolverParams::for_domain(spec.dom());
        let mut st = PrimalDualState::new(&spec);
        pdhg_step(&mut st, &spec, &params).unwrap();
        assert!(st.u.raw().iter().all(|v| *v == 0.0));
        assert!(st.b.raw().iter().all(|v| *v == [0.0, 0.0]));
        let g = duality_gap(&st, &spec).unwrap();
        assert_eq!((g.primal, g.dual, g.gap), (0.0, Some(0.0), 0.0));
        let sol = solve(&spec, &params).unwrap();
        assert!(sol.report.converged);
        assert_eq!(sol.report.gap, 0.0);
    }

    #[test]
    fn first_step_with_source() {
        let n = 4;
        let dom = GridDomain::rectangle(n, n, 0.25).unwrap();
        let norm = NormSpec::uniform(NormKind::WeightedEuclidean, n, n, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::from_fn(&dom, |i, j| (i + 2 * j) as f64 * 0.1);
        let spec = ProblemSpec::new(dom.clone(), norm, z, s.clone(), BoundaryCondition::Neumann).unwrap();
        let params = SolverParams::for_domain(&dom);
        let mut st = PrimalDualState::new(&spec);
        pdhg_step(&mut st, &spec, &params).unwrap();
        let m = s.mean(&dom);
        for (i, j) in dom.mask_cells() {
            let expect = -params.tau * (s.get(i as isize, j as isize) - m);
            assert_abs_diff_eq!(st.u.get(i as isize, j as isize), expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn step_size_rule_enforced() {
        let spec = zero_neumann(4);
        let mut p = SolverParams::for_domain(spec.dom());
        p.tau *= 1.1;
        p.sigma *= 1.1;
        assert!(matches!(solve(&spec, &p), Err(Error::Config(_))));
    }

    #[test]
    fn residual_examples() {
        let spec = zero_neumann(3);
        let r = dual_feasibility_residuals(&VectorField::zeros(spec.dom().lattice()), &spec);
        assert_eq!((r.div_residual, r.trace_residual), (0.0, 0.0));
        let b = VectorField::constant(spec.dom(), [1.0, 0.0]);
        let r = dual_feasibility_residuals(&b, &spec);
        assert!(r.div_residual.abs() < 1e-12);
        assert_eq!(r.trace_residual, 1.0);
    }

    #[test]
    fn calibration_converges() {
        let spec = ramp(8);
        let mut p = SolverParams::for_domain(spec.dom());
        p.tol_gap = 1e-6;
        let sol = solve(&spec, &p).unwrap();
        assert!(sol.report.converged, "{:?}", sol.report.rel_gap);
        assert_abs_diff_eq!(sol.report.primal, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(energy_primal(&spec, &sol.u).unwrap(), sol.report.primal, epsilon = 1e-9);
        for j in 1..7 {
            for i in 1..7 {
                let v = sol.n.get(i, j);
                assert!((v[0] - 1.0).abs() <= 1e-2 && v[1].abs() <= 1e-2, "{v:?} at {i},{j}");
            }
        }
    }

    #[test]
    fn weak_duality_along_iterations() {
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dom = GridDomain::rectangle(n, n, 1.0 / n as f64).unwrap();
        let norm = NormSpec::uniform(NormKind::WeightedL1, n, n, 1.0).unwrap();
        let f = VectorField::from_fn(&dom, |_, _| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let h = ScalarField::from_fn(&dom, |_, _| rng.gen_range(-0.5..0.5));
        let spec = ProblemSpec::new(dom, norm, f, h, BoundaryCondition::Neumann).unwrap();
        let mut p = SolverParams::for_domain(spec.dom());
        p.max_iter = 2000;
        p.gap_check_stride = 20;
        p.tol_gap = 0.0;
        let sol = solve(&spec, &p).unwrap();
        for r in &sol.report.gap_history {
            assert!(r.gap >= -1e-9, "{r:?}");
        }
    }
}
