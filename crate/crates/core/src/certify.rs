//! Independent optimality checks for a primal/dual pair.

use crate::error::{Error, Result};
use crate::grid::{boundary_trace_normal, ScalarField, VectorField};
use crate::problem::ProblemSpec;
use crate::solver::{dual_feasibility_residuals, gap_of};

/// Tolerances of [`certify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyTolerances {
    /// Bound on `gap / max(1, |primal|)`.
    pub gap_rel: f64,
    /// Bound on `max phi0(x, N) - 1`.
    pub dual_feasibility: f64,
    pub div: f64,
    /// Applied to Neumann problems only.
    pub trace: f64,
    pub alignment: f64,
    /// Applied to Dirichlet problems only.
    pub boundary_contact: f64,
    /// Activity threshold relative to `max |grad u + F|` (and to `max |u - f|` on faces).
    ///
    /// [`certify`] raises both thresholds so that a cell or face only counts
    /// as active when its energy contribution exceeds `gap / tolerance`.
    pub eps_active_rel: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        CertifyTolerances {
            gap_rel: 1e-4,
            dual_feasibility: 1e-9,
            div: 1e-3,
            trace: 1e-3,
            alignment: 1e-2,
            boundary_contact: 1e-2,
            eps_active_rel: 1e-6,
        }
    }
}

/// All residuals of a candidate pair and the resulting verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: f64,
    pub rel_gap: f64,
    /// `max phi0(x, N) - 1`; negative when strictly feasible.
    pub dual_feasibility_max: f64,
    pub div_residual: f64,
    pub trace_residual: f64,
    pub alignment_defect: f64,
    pub active_cell_count: usize,
    pub boundary_contact_defect: f64,
    pub detached_faces: usize,
    pub certified: bool,
    /// Names of the quantities above their tolerance.
    pub failures: Vec<&'static str>,
}

impl Certificate {
    /// Flat `(key, value)` pairs in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("primal", self.primal),
            ("dual", self.dual.unwrap_or(f64::NEG_INFINITY)),
            ("gap", self.gap),
            ("rel_gap", self.rel_gap),
            ("dual_feasibility_max", self.dual_feasibility_max),
            ("div_residual", self.div_residual),
            ("trace_residual", self.trace_residual),
            ("alignment_defect", self.alignment_defect),
            ("active_cell_count", self.active_cell_count as f64),
            ("boundary_contact_defect", self.boundary_contact_defect),
            ("detached_faces", self.detached_faces as f64),
        ]
    }
}

/// `max phi0(x, N(x)) - 1` over the cells carrying dual values.
pub fn check_dual_feasible(n: &VectorField, spec: &ProblemSpec) -> f64 {
    let lat = spec.dom().lattice();
    let mut m = f64::NEG_INFINITY;
    for p in 0..lat.len() {
        if spec.in_support(p) {
            m = m.max(spec.norm().phi_dual_p(p, n.raw()[p]));
        }
    }
    m - 1.0
}

/// Alignment of `N` with the direction of `grad u + F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureCheck {
    /// `max (phi(x, d) - N . d)` with `d = g / |g|` over active cells.
    pub defect: f64,
    pub active_cells: usize,
}

/// Evaluates the alignment defect on cells where `|grad u + F| > eps_active`.
pub fn check_structure(u: &ScalarField, n: &VectorField, spec: &ProblemSpec, eps_active: f64) -> Result<StructureCheck> {
    let dom = spec.dom();
    dom.check_lattice(u.lattice(), "field")?;
    dom.check_lattice(n.lattice(), "dual field")?;
    let g = spec.shifted_gradient(u)?;
    let mut defect = 0.0f64;
    let mut active = 0;
    for p in 0..dom.lattice().len() {
        if !spec.in_support(p) {
            continue;
        }
        let v = g.raw()[p];
        let r = v[0].hypot(v[1]);
        if r > eps_active {
            let d = [v[0] / r, v[1] / r];
            let b = n.raw()[p];
            let e = spec.phi_cell(p, d) - (b[0] * d[0] + b[1] * d[1]);
            if active == 0 {
                defect = e;
            } else {
                defect = defect.max(e);
            }
            active += 1;
        }
    }
    Ok(StructureCheck { defect, active_cells: active })
}

/// Default activity threshold `rel * max |grad u + F|`.
pub fn default_eps_active(u: &ScalarField, spec: &ProblemSpec, rel: f64) -> Result<f64> {
    let g = spec.shifted_gradient(u)?;
    let m = (0..spec.dom().lattice().len())
        .filter(|&p| spec.in_support(p))
        .map(|p| g.raw()[p][0].hypot(g.raw()[p][1]))
        .fold(0.0, f64::max);
    Ok(rel * m)
}

/// Boundary identity on faces where the data are not attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryContact {
    /// `max |phi(x, nu) - sign(f - u) [N, nu]|` over detached faces.
    pub defect: f64,
    pub detached_faces: usize,
}

/// Compares `phi(x, nu)` with the signed normal trace of `N` on every face
/// whose mismatch `|u - f|` exceeds `rel * max |u - f|`.
pub fn check_boundary_contact(u: &ScalarField, n: &VectorField, spec: &ProblemSpec, rel: f64) -> Result<BoundaryContact> {
    check_boundary_contact_eps(u, n, spec, rel, 0.0)
}

fn check_boundary_contact_eps(
    u: &ScalarField,
    n: &VectorField,
    spec: &ProblemSpec,
    rel: f64,
    floor: f64,
) -> Result<BoundaryContact> {
    let f = spec
        .face_data()
        .ok_or_else(|| Error::Usage("boundary contact applies to Dirichlet problems only".into()))?;
    let dom = spec.dom();
    dom.check_lattice(u.lattice(), "field")?;
    dom.check_lattice(n.lattice(), "dual field")?;
    let faces = dom.boundary_faces();
    let mismatch: Vec<f64> = faces
        .iter()
        .zip(f)
        .map(|(face, fv)| u.get(face.cell.0 as isize, face.cell.1 as isize) - fv)
        .collect();
    let eps = (rel * mismatch.iter().fold(0.0f64, |m, v| m.max(v.abs()))).max(floor);
    let trace = boundary_trace_normal(dom, n);
    let lat = dom.lattice();
    let mut defect = 0.0f64;
    let mut count = 0;
    for (k, face) in faces.iter().enumerate() {
        let m = mismatch[k];
        if m.abs() <= eps || m == 0.0 {
            continue;
        }
        let p = lat.idx(face.cell.0 as isize, face.cell.1 as isize);
        let phi_nu = spec.norm().phi_p(p, face.normal);
        let s = -m.signum();
        defect = defect.max((phi_nu - s * trace[k]).abs());
        count += 1;
    }
    Ok(BoundaryContact { defect, detached_faces: count })
}

/// Runs every check and combines them into a verdict. NaN values fail.
pub fn certify(u: &ScalarField, n: &VectorField, spec: &ProblemSpec, tols: &CertifyTolerances) -> Result<Certificate> {
    let g = gap_of(spec, u, n)?;
    let feas = check_dual_feasible(n, spec);
    let res = dual_feasibility_residuals(n, spec);
    // Contributions below the resolution of the gap cannot be certified either way.
    let resolved = if g.gap.is_finite() { g.gap.max(0.0) } else { f64::INFINITY };
    let area = spec.dom().cell_area();
    let eps = default_eps_active(u, spec, tols.eps_active_rel)?.max(resolved / (tols.alignment * area));
    let st = check_structure(u, n, spec, eps)?;
    let bc = if spec.is_neumann() {
        BoundaryContact { defect: 0.0, detached_faces: 0 }
    } else {
        let floor = resolved / (tols.boundary_contact * spec.dom().h());
        check_boundary_contact_eps(u, n, spec, tols.eps_active_rel, floor)?
    };

    let mut failures = Vec::new();
    if !(g.rel_gap <= tols.gap_rel) {
        failures.push("gap");
    }
    if !(feas <= tols.dual_feasibility) {
        failures.push("dual_feasibility_max");
    }
    if !(res.div_residual <= tols.div) {
        failures.push("div_residual");
    }
    if spec.is_neumann() && !(res.trace_residual <= tols.trace) {
        failures.push("trace_residual");
    }
    if !(st.defect <= tols.alignment) {
        failures.push("alignment_defect");
    }
    if !spec.is_neumann() && !(bc.defect <= tols.boundary_contact) {
        failures.push("boundary_contact_defect");
    }
    Ok(Certificate {
        primal: g.primal,
        dual: g.dual,
        gap: g.gap,
        rel_gap: g.rel_gap,
        dual_feasibility_max: feas,
        div_residual: res.div_residual,
        trace_residual: res.trace_residual,
        alignment_defect: st.defect,
        active_cell_count: st.active_cells,
        boundary_contact_defect: bc.defect,
        detached_faces: bc.detached_faces,
        certified: failures.is_empty(),
        failures,
    })
}
