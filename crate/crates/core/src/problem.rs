//! Problem assembly: the primal functional, the drift-pairing lower bound,
//! the Heisenberg drift, the Dirichlet zero-shift and the coercivity check.

use crate::error::{Error, Result};
use crate::grid::{gradient_into, CellKind, GridDomain, ScalarField, VectorField};
use crate::norm::NormSpec;
use crate::par::Parallelism;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Boundary condition of a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// Natural boundary condition; solutions are normalized to mean zero.
    Neumann,
    /// Prescribed value per boundary face, ordered like `GridDomain::boundary_faces`.
    Dirichlet(Vec<f64>),
}

/// A complete problem instance
/// `min sum phi(x, grad u + F) h^2 + sum H u h^2`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    dom: GridDomain,
    norm: NormSpec,
    drift: VectorField,
    source: ScalarField,
    bc: BoundaryCondition,
    f_extension: Option<ScalarField>,
    energy_constant: f64,
}

impl ProblemSpec {
    /// Validates and assembles a problem.
    ///
    /// The drift is read on mask cells only. For Dirichlet problems the
    /// interior extension defaults to [`nearest_boundary_extension`].
    pub fn new(
        dom: GridDomain,
        norm: NormSpec,
        drift: VectorField,
        source: ScalarField,
        bc: BoundaryCondition,
    ) -> Result<ProblemSpec> {
        if norm.nx() != dom.nx() || norm.ny() != dom.ny() {
            return Err(Error::Input(format!(
                "norm field is {}x{}, domain is {}x{}",
                norm.nx(),
                norm.ny(),
                dom.nx(),
                dom.ny()
            )));
        }
        dom.check_lattice(drift.lattice(), "drift")?;
        dom.check_lattice(source.lattice(), "source")?;
        let mut clean = VectorField::zeros(dom.lattice());
        for &p in dom.mask_indices() {
            clean.raw_mut()[p] = drift.raw()[p];
        }
        if !clean.is_finite_on(&dom) {
            return Err(Error::Input("drift has non-finite values on the mask".into()));
        }
        if !source.is_finite_on(&dom) {
            return Err(Error::Input("source has non-finite values on the mask".into()));
        }
        let f_extension = match &bc {
            BoundaryCondition::Neumann => None,
            BoundaryCondition::Dirichlet(f) => {
                if f.len() != dom.boundary_faces().len() {
                    return Err(Error::Input(format!(
                        "Dirichlet data has {} values, domain has {} boundary faces",
                        f.len(),
                        dom.boundary_faces().len()
                    )));
                }
                if f.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Input("Dirichlet data must be finite".into()));
                }
                Some(nearest_boundary_extension(&dom, f))
            }
        };
        Ok(ProblemSpec {
            dom,
            norm,
            drift: clean,
            source,
            bc,
            f_extension,
            energy_constant: 0.0,
        })
    }

    /// Replaces the interior extension of the Dirichlet data.
    pub fn with_f_extension(mut self, ext: ScalarField) -> Result<ProblemSpec> {
        if self.is_neumann() {
            return Err(Error::Usage("an extension only applies to Dirichlet problems".into()));
        }
        self.dom.check_lattice(ext.lattice(), "extension")?;
        if !ext.is_finite_on(&self.dom) {
            return Err(Error::Input("extension has non-finite values".into()));
        }
        self.f_extension = Some(ext);
        Ok(self)
    }

    pub fn dom(&self) -> &GridDomain {
        &self.dom
    }

    pub fn norm(&self) -> &NormSpec {
        &self.norm
    }

    pub fn drift(&self) -> &VectorField {
        &self.drift
    }

    pub fn source(&self) -> &ScalarField {
        &self.source
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn f_extension(&self) -> Option<&ScalarField> {
        self.f_extension.as_ref()
    }

    /// Additive constant recorded by [`substitute_dirichlet`] (0 otherwise).
    pub fn energy_constant(&self) -> f64 {
        self.energy_constant
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self.bc, BoundaryCondition::Neumann)
    }

    pub(crate) fn face_data(&self) -> Option<&[f64]> {
        match &self.bc {
            BoundaryCondition::Neumann => None,
            BoundaryCondition::Dirichlet(f) => Some(f),
        }
    }

    /// Cells carrying a gradient vector: mask and band for Dirichlet, mask for Neumann.
    pub(crate) fn in_support(&self, p: usize) -> bool {
        match self.dom.kind_p(p) {
            CellKind::Mask => true,
            CellKind::Band => !self.is_neumann(),
            CellKind::Outside => false,
        }
    }

    /// Free axes of cell `p`: for Neumann problems the components across an
    /// exit face of the mask, which the energy minimizes out.
    #[inline]
    pub(crate) fn free_axes(&self, p: usize) -> u8 {
        if self.is_neumann() && self.dom.is_mask_p(p) {
            self.dom.exit_axes_p(p)
        } else {
            0
        }
    }

    #[inline]
    pub(crate) fn phi_cell(&self, p: usize, xi: [f64; 2]) -> f64 {
        self.norm.phi_free_p(p, xi, self.free_axes(p))
    }

    #[inline]
    pub(crate) fn project_cell(&self, p: usize, b: [f64; 2]) -> [f64; 2] {
        self.norm.project_free_p(p, b, self.free_axes(p))
    }

    /// `grad u + F` with the problem's boundary handling; free components are zero.
    pub(crate) fn shifted_gradient_into(&self, u: &ScalarField, par: Parallelism, out: &mut VectorField) {
        gradient_into(&self.dom, u, self.face_data(), self.is_neumann(), par, out);
        for (g, f) in out.raw_mut().iter_mut().zip(self.drift.raw()) {
            g[0] += f[0];
            g[1] += f[1];
        }
        if self.is_neumann() {
            let raw = out.raw_mut();
            for &p in self.dom.mask_indices() {
                let free = self.dom.exit_axes_p(p);
                if free & 1 != 0 {
                    raw[p][0] = 0.0;
                }
                if free & 2 != 0 {
                    raw[p][1] = 0.0;
                }
            }
        }
    }

    /// `grad u + F` with the boundary handling of the problem. For Neumann
    /// problems the component across an exit face of the mask is free and
    /// reported as zero.
    pub fn shifted_gradient(&self, u: &ScalarField) -> Result<VectorField> {
        self.dom.check_lattice(u.lattice(), "field")?;
        let mut out = VectorField::zeros(self.dom.lattice());
        self.shifted_gradient_into(u, Parallelism::Sequential, &mut out);
        Ok(out)
    }

    /// The linear term paired with a dual field: `F` plus the gradient of the
    /// zero field under the boundary data.
    pub fn dual_drift(&self) -> VectorField {
        let mut out = VectorField::zeros(self.dom.lattice());
        self.shifted_gradient_into(&ScalarField::zeros(self.dom.lattice()), Parallelism::Sequential, &mut out);
        out
    }

    /// Source term the divergence of a dual-feasible field must match.
    pub fn divergence_target(&self) -> ScalarField {
        if self.is_neumann() {
            let m = self.source.mean(&self.dom);
            let mut t = ScalarField::zeros(self.dom.lattice());
            for &p in self.dom.mask_indices() {
                t.raw_mut()[p] = self.source.raw()[p] - m;
            }
            t
        } else {
            let mut t = ScalarField::zeros(self.dom.lattice());
            for &p in self.dom.mask_indices() {
                t.raw_mut()[p] = self.source.raw()[p];
            }
            t
        }
    }
}

/// Extends face data to mask cells by copying the value of the nearest face
/// midpoint (ties go to the lowest face index).
pub fn nearest_boundary_extension(dom: &GridDomain, f: &[f64]) -> ScalarField {
    let faces = dom.boundary_faces();
    ScalarField::from_fn(dom, |i, j| {
        let c = dom.center(i as isize, j as isize);
        let mut best = (f64::INFINITY, 0usize);
        for (k, face) in faces.iter().enumerate() {
            let dx = face.midpoint[0] - c[0];
            let dy = face.midpoint[1] - c[1];
            let d = dx * dx + dy * dy;
            if d < best.0 {
                best = (d, k);
            }
        }
        f[best.1]
    })
}

/// Integrand part and source part of the primal energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `sum phi(x, grad u + F) h^2`, including boundary-face penalties.
    pub phi: f64,
    /// `sum H u h^2`.
    pub source: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.phi + self.source
    }
}

/// Both parts of the primal energy. Neumann fields are mean-normalized first.
pub fn energy_parts(spec: &ProblemSpec, u: &ScalarField) -> Result<EnergyParts> {
    energy_parts_with(spec, u, Parallelism::Sequential)
}

pub(crate) fn energy_parts_with(spec: &ProblemSpec, u: &ScalarField, par: Parallelism) -> Result<EnergyParts> {
    let dom = &spec.dom;
    dom.check_lattice(u.lattice(), "field")?;
    let mut uu;
    let u = if spec.is_neumann() {
        uu = u.clone();
        uu.remove_mean(dom);
        &uu
    } else {
        u
    };
    let mut g = VectorField::zeros(dom.lattice());
    spec.shifted_gradient_into(u, par, &mut g);
    let s = dom.lattice().stride();
    let rows = dom.lattice().rows();
    let area = dom.cell_area();
    let gr = g.raw();
    let ur = u.raw();
    let hr = spec.source.raw();
    let phi = crate::par::sum_rows(par, rows, dom.lattice().len(), |r| {
        let mut acc = 0.0;
        for p in r * s..(r + 1) * s {
            if spec.in_support(p) {
                acc += spec.phi_cell(p, gr[p]);
            }
        }
        acc
    }) * area;
    let source = crate::par::sum_rows(par, rows, dom.lattice().len(), |r| {
        let mut acc = 0.0;
        for p in r * s..(r + 1) * s {
            if dom.is_mask_p(p) {
                acc += hr[p] * ur[p];
            }
        }
        acc
    }) * area;
    let e = EnergyParts { phi, source };
    if !e.total().is_finite() {
        return Err(Error::Input("energy is not finite".into()));
    }
    Ok(e)
}

/// Primal energy `sum phi(x, grad u + F) h^2 + sum H u h^2`.
pub fn energy_primal(spec: &ProblemSpec, u: &ScalarField) -> Result<f64> {
    energy_parts(spec, u).map(|e| e.total())
}

/// Mask cells within two layers of the boundary: cells with a boundary face and their mask neighbours.
pub(crate) fn boundary_layers(dom: &GridDomain) -> Vec<bool> {
    let lat = dom.lattice();
    let mut first = vec![false; lat.len()];
    for (i, j) in dom.boundary_cells() {
        first[lat.idx(i as isize, j as isize)] = true;
    }
    let mut both = first.clone();
    let s = lat.stride();
    for &p in dom.mask_indices() {
        if first[p] {
            for q in [p - 1, p + 1, p - s, p + s] {
                if dom.is_mask_p(q) {
                    both[q] = true;
                }
            }
        }
    }
    both
}

/// `sum (u div Y - Y . F) h^2` for a compactly supported, dual-feasible `Y`.
///
/// This lower-bounds the integrand part of the energy (`EnergyParts::phi`);
/// adding `sum H u h^2` lower-bounds the full energy.
pub fn pairing_lower_bound(spec: &ProblemSpec, u: &ScalarField, y: &VectorField) -> Result<f64> {
    let dom = &spec.dom;
    dom.check_lattice(u.lattice(), "field")?;
    dom.check_lattice(y.lattice(), "test field")?;
    let layers = boundary_layers(dom);
    let lat = dom.lattice();
    for p in 0..lat.len() {
        let v = y.raw()[p];
        if v == [0.0, 0.0] {
            continue;
        }
        if !dom.is_mask_p(p) || layers[p] {
            let (i, j) = lat.coords(p);
            return Err(Error::Precondition(format!(
                "test field must vanish near the boundary, nonzero at ({i}, {j})"
            )));
        }
        let r = spec.norm.phi_dual_p(p, v);
        if r > 1.0 + 1e-9 {
            let (i, j) = lat.coords(p);
            return Err(Error::Precondition(format!(
                "test field is infeasible at ({i}, {j}): dual norm {r}"
            )));
        }
    }
    let mut uu = u.clone();
    if spec.is_neumann() {
        uu.remove_mean(dom);
    }
    let div = crate::grid::divergence(dom, y);
    let mut s = 0.0;
    for &p in dom.mask_indices() {
        let f = spec.drift.raw()[p];
        let v = y.raw()[p];
        s += uu.raw()[p] * div.raw()[p] - (v[0] * f[0] + v[1] * f[1]);
    }
    Ok(s * dom.cell_area())
}

/// Heisenberg drift `(y, -x)` at cell centers, with coordinates relative to
/// the centroid of the mask. Defined on mask and band cells.
pub fn heisenberg_drift(dom: &GridDomain) -> VectorField {
    let c = dom.centroid();
    VectorField::from_fn(dom, |i, j| {
        let x = dom.center(i, j);
        heisenberg_at(x[0] - c[0], x[1] - c[1])
    })
}

/// The drift `(y, -x)` at a point.
pub fn heisenberg_at(x: f64, y: f64) -> [f64; 2] {
    [y, -x]
}

/// Rewrites a Dirichlet problem with data `f` and extension `f_ext` as the
/// equivalent problem with zero data and drift `F + grad f_ext`.
///
/// `energy(spec, u) == energy(sub, u - f_ext) + sub.energy_constant()`.
pub fn substitute_dirichlet(spec: &ProblemSpec) -> Result<ProblemSpec> {
    let f = match &spec.bc {
        BoundaryCondition::Dirichlet(f) => f,
        BoundaryCondition::Neumann => {
            return Err(Error::Usage("substitution requires a Dirichlet problem".into()))
        }
    };
    let ext = spec
        .f_extension
        .as_ref()
        .ok_or_else(|| Error::Input("Dirichlet problem has no interior extension".into()))?;
    let dom = &spec.dom;
    let mut drift = VectorField::zeros(dom.lattice());
    spec.shifted_gradient_into(ext, Parallelism::Sequential, &mut drift);
    let constant = spec.energy_constant + ext.dot(&spec.source, dom);
    Ok(ProblemSpec {
        dom: dom.clone(),
        norm: spec.norm.clone(),
        drift,
        source: spec.source.clone(),
        bc: BoundaryCondition::Dirichlet(vec![0.0; f.len()]),
        f_extension: Some(ScalarField::zeros(dom.lattice())),
        energy_constant: constant,
    })
}

/// Outcome of the coercivity check `max |H| < beta / C_Omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExistenceCheck {
    pub satisfied: bool,
    /// `beta / C_Omega - max |H|`.
    pub margin: f64,
    /// Estimated Poincare constant (the larger of search and analytic bound).
    pub c_omega: f64,
    /// Best ratio found by the randomized search.
    pub c_search: f64,
    pub h_max: f64,
}

/// Threshold comparison given an estimate of the Poincare constant.
pub fn existence_condition_from(beta: f64, c_omega: f64, h_max: f64) -> (bool, f64) {
    let threshold = beta / c_omega;
    (h_max < threshold, threshold - h_max)
}

/// Coercivity check with 2000 random trials and seed 0.
pub fn existence_condition_check(spec: &ProblemSpec) -> ExistenceCheck {
    existence_condition_check_with(spec, 2000, 0)
}

/// Estimates `C_Omega` as the larger of `diam / 2` and the best ratio
/// `||u||_1 / ||grad u||_1` over random half-plane indicators, discs, linear
/// and smooth fields (mean-zero for Neumann, zero data for Dirichlet), then
/// compares `max |H|` with `beta / C_Omega`.
pub fn existence_condition_check_with(spec: &ProblemSpec, trials: usize, seed: u64) -> ExistenceCheck {
    let dom = &spec.dom;
    let c_search = poincare_search(dom, spec.is_neumann(), trials, seed);
    let c_omega = c_search.max(dom.diameter() / 2.0);
    let h_max = spec.source.max_abs(dom);
    let (satisfied, margin) = existence_condition_from(spec.norm.beta(), c_omega, h_max);
    ExistenceCheck { satisfied, margin, c_omega, c_search, h_max }
}

/// `||u||_1 / ||grad u||_1` with Euclidean gradient magnitude; 0 for constant fields.
pub fn poincare_ratio(dom: &GridDomain, u: &ScalarField, neumann: bool) -> f64 {
    let mut v = u.clone();
    if neumann {
        v.remove_mean(dom);
    }
    let mut g = VectorField::zeros(dom.lattice());
    gradient_into(dom, &v, None, neumann, Parallelism::Sequential, &mut g);
    let num: f64 = v.mask_values(dom).map(f64::abs).sum();
    let den: f64 = g.raw().iter().map(|a| a[0].hypot(a[1])).sum();
    if den <= 1e-300 {
        0.0
    } else {
        num / den
    }
}

fn poincare_search(dom: &GridDomain, neumann: bool, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<(usize, usize)> = dom.mask_cells().collect();
    let w = dom.nx() as f64 * dom.h();
    let ht = dom.ny() as f64 * dom.h();
    let mut best = 0.0f64;
    for t in 0..trials {
        let u = match t % 4 {
            0 => {
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                let (i0, j0) = cells[rng.gen_range(0..cells.len())];
                let o = dom.center(i0 as isize, j0 as isize);
                let n = [th.cos(), th.sin()];
                ScalarField::from_fn(dom, |i, j| {
                    let x = dom.center(i as isize, j as isize);
                    f64::from((x[0] - o[0]) * n[0] + (x[1] - o[1]) * n[1] >= 0.0)
                })
            }
            1 => {
                let (i0, j0) = cells[rng.gen_range(0..cells.len())];
                let o = dom.center(i0 as isize, j0 as isize);
                let r = rng.gen_range(0.5..2.0) * w.max(ht) / 2.0;
                ScalarField::from_fn(dom, |i, j| {
                    let x = dom.center(i as isize, j as isize);
                    f64::from((x[0] - o[0]).hypot(x[1] - o[1]) <= r)
                })
            }
            2 => {
                let th = rng.gen_range(0.0..std::f64::consts::TAU);
                ScalarField::from_fn(dom, |i, j| {
                    let x = dom.center(i as isize, j as isize);
                    x[0] * th.cos() + x[1] * th.sin()
                })
            }
            _ => {
                let kx = rng.gen_range(0..3) as f64;
                let ky = rng.gen_range(0..3) as f64;
                let px = rng.gen_range(0.0..std::f64::consts::TAU);
                let py = rng.gen_range(0.0..std::f64::consts::TAU);
                ScalarField::from_fn(dom, |i, j| {
                    let x = dom.center(i as isize, j as isize);
                    (std::f64::consts::PI * kx * x[0] / w + px).cos()
                        * (std::f64::consts::PI * ky * x[1] / ht + py).cos()
                })
            }
        };
        best = best.max(poincare_ratio(dom, &u, neumann));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormKind;
    use approx::assert_abs_diff_eq;

    fn neumann(n: usize, h: f64, kind: NormKind, f: [f64; 2], hsrc: f64) -> ProblemSpec {
        let dom = GridDomain::rectangle(n, n, h).unwrap();
        let norm = NormSpec::uniform(kind, n, n, 1.0).unwrap();
        let drift = VectorField::constant(&dom, f);
        let src = ScalarField::constant(&dom, hsrc);
        ProblemSpec::new(dom, norm, drift, src, BoundaryCondition::Neumann).unwrap()
    }

    fn ramp(n: usize) -> ProblemSpec {
        let h = 1.0 / n as f64;
        let dom = GridDomain::rectangle(n, n, h).unwrap();
        let f: Vec<f64> = dom.boundary_faces().iter().map(|f| f.midpoint[0]).collect();
        let norm = NormSpec::uniform(NormKind::WeightedEuclidean, n, n, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::zeros(dom.lattice());
        ProblemSpec::new(dom, norm, z, s, BoundaryCondition::Dirichlet(f)).unwrap()
    }

    #[test]
    fn constant_field_zero_energy() {
        let p = neumann(4, 0.25, NormKind::WeightedEuclidean, [0.0, 0.0], 0.0);
        let u = ScalarField::constant(p.dom(), 2.5);
        assert_eq!(energy_primal(&p, &u).unwrap(), 0.0);
    }

    #[test]
    fn drift_only_energy() {
        let p = neumann(2, 1.0, NormKind::WeightedEuclidean, [1.0, 0.0], 0.0);
        let u = ScalarField::zeros(p.dom().lattice());
        // The right column exits the mask in x.
        assert_abs_diff_eq!(energy_primal(&p, &u).unwrap(), 2.0);
    }

    #[test]
    fn ramp_calibration_energy() {
        let p = ramp(8);
        let u = ScalarField::from_fn(p.dom(), |i, j| p.dom().center(i as isize, j as isize)[0]);
        assert_abs_diff_eq!(energy_primal(&p, &u).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn heisenberg_values() {
        assert_eq!(heisenberg_at(0.0, 0.0), [0.0, 0.0]);
        assert_eq!(heisenberg_at(1.0, 2.0), [2.0, -1.0]);
        let dom = GridDomain::rectangle(8, 8, 0.125).unwrap();
        let f = heisenberg_drift(&dom);
        let d = crate::grid::divergence(&dom, &f);
        for (i, j) in dom.mask_cells() {
            assert!(d.get(i as isize, j as isize).abs() <= 1e-12);
        }
    }

    #[test]
    fn substitution_identity() {
        let n = 5;
        let dom = GridDomain::rectangle(n, n, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f: Vec<f64> = dom.boundary_faces().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = NormSpec::uniform(NormKind::WeightedLinf, n, n, 1.3).unwrap();
        let drift = VectorField::from_fn(&dom, |_, _| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let src = ScalarField::from_fn(&dom, |_, _| rng.gen_range(-1.0..1.0));
        let spec = ProblemSpec::new(dom, norm, drift, src, BoundaryCondition::Dirichlet(f)).unwrap();
        let sub = substitute_dirichlet(&spec).unwrap();
        let ext = spec.f_extension().unwrap();
        for _ in 0..20 {
            let u = ScalarField::from_fn(spec.dom(), |_, _| rng.gen_range(-2.0..2.0));
            let lhs = energy_primal(&spec, &u).unwrap();
            let rhs = energy_primal(&sub, &u.axpy(-1.0, ext)).unwrap() + sub.energy_constant();
            assert!((lhs - rhs).abs() <= 1e-10);
        }
    }

    #[test]
    fn substitution_of_zero_data_and_ramp() {
        let dom = GridDomain::rectangle(4, 4, 0.25).unwrap();
        let norm = NormSpec::uniform(NormKind::WeightedEuclidean, 4, 4, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::constant(&dom, 1.0);
        let f = vec![0.0; dom.boundary_faces().len()];
        let spec = ProblemSpec::new(dom.clone(), norm.clone(), z.clone(), s, BoundaryCondition::Dirichlet(f)).unwrap();
        let sub = substitute_dirichlet(&spec).unwrap();
        assert_eq!(sub.energy_constant(), 0.0);
        assert!(sub.drift().raw().iter().all(|v| *v == [0.0, 0.0]));

        let p = ramp(4);
        let ext = ScalarField::from_fn(p.dom(), |i, j| p.dom().center(i as isize, j as isize)[0]);
        let sub = substitute_dirichlet(&p.with_f_extension(ext).unwrap()).unwrap();
        for j in 0..4 {
            for i in 0..3 {
                assert_abs_diff_eq!(sub.drift().get(i, j)[0], 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(sub.drift().get(i, j)[1], 0.0, epsilon = 1e-12);
            }
        }
        let n = neumann(2, 1.0, NormKind::WeightedL1, [0.0, 0.0], 0.0);
        assert!(matches!(substitute_dirichlet(&n), Err(Error::Usage(_))));
    }

    #[test]
    fn pairing_bounds_energy() {
        let p = neumann(6, 1.0 / 6.0, NormKind::WeightedEuclidean, [0.3, -0.2], 0.0);
        let u0 = ScalarField::zeros(p.dom().lattice());
        assert_eq!(pairing_lower_bound(&p, &u0, &VectorField::zeros(p.dom().lattice())).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u = ScalarField::from_fn(p.dom(), |_, _| rng.gen_range(-1.0..1.0));
            let y = VectorField::from_fn_mask(p.dom(), |i, j| {
                if (2..4).contains(&i) && (2..4).contains(&j) {
                    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let r: f64 = rng.gen_range(0.0..1.0);
                    [r * t.cos(), r * t.sin()]
                } else {
                    [0.0, 0.0]
                }
            });
            let lb = pairing_lower_bound(&p, &u, &y).unwrap();
            assert!(lb <= energy_primal(&p, &u).unwrap() + 1e-10);
        }
        let bad = VectorField::from_fn_mask(p.dom(), |i, j| if (i, j) == (0, 0) { [0.1, 0.0] } else { [0.0, 0.0] });
        assert!(matches!(pairing_lower_bound(&p, &u0, &bad), Err(Error::Precondition(_))));
        let big = VectorField::from_fn_mask(p.dom(), |i, j| if (i, j) == (3, 3) { [2.0, 0.0] } else { [0.0, 0.0] });
        assert!(matches!(pairing_lower_bound(&p, &u0, &big), Err(Error::Precondition(_))));
    }

    #[test]
    fn existence_check_cases() {
        let p = neumann(4, 0.25, NormKind::WeightedEuclidean, [0.0, 0.0], 0.0);
        let e = existence_condition_check(&p);
        assert!(e.satisfied && e.margin > 0.0);
        assert_abs_diff_eq!(e.margin, 1.0 / e.c_omega);
        assert!(!existence_condition_from(1.0, 0.5, 3.0).0);
        assert!(existence_condition_from(1.0, 0.5, 1.0).0);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let dom = GridDomain::rectangle(3, 3, 1.0).unwrap();
        let norm = NormSpec::uniform(NormKind::WeightedL1, 4, 3, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::zeros(dom.lattice());
        assert!(ProblemSpec::new(dom.clone(), norm, z.clone(), s.clone(), BoundaryCondition::Neumann).is_err());
        let norm = NormSpec::uniform(NormKind::WeightedL1, 3, 3, 1.0).unwrap();
        assert!(ProblemSpec::new(dom, norm, z, s, BoundaryCondition::Dirichlet(vec![0.0; 3])).is_err());
    }
}
