//! Sets of cells, their drift-and-source perimeter, super-level sets and
//! exhaustive local minimality checks.

use crate::error::{Error, Result};
use crate::grid::{CellKind, Dir, GridDomain, Lattice, ScalarField};
use crate::par::{self, Parallelism};
use crate::problem::ProblemSpec;

/// Largest number of free cells in an exhaustive enumeration.
pub const MAX_ENUM_CELLS: usize = 16;

/// Slack used when comparing enumerated energies.
pub const ENUM_TOL: f64 = 1e-9;

/// A set of cells of the grid extent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    nx: usize,
    ny: usize,
    members: Vec<bool>,
}

impl CellSet {
    pub fn empty(nx: usize, ny: usize) -> CellSet {
        CellSet { nx, ny, members: vec![false; nx * ny] }
    }

    /// All mask cells of a domain.
    pub fn full(dom: &GridDomain) -> CellSet {
        CellSet::from_fn(dom.nx(), dom.ny(), |i, j| dom.in_mask(i as isize, j as isize))
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> bool) -> CellSet {
        let mut s = CellSet::empty(nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                s.members[j * nx + i] = f(i, j);
            }
        }
        s
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && self.members[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.members[j * self.nx + i] = v;
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Member cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.nx;
        self.members
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(move |(k, _)| (k % nx, k / nx))
    }

    /// Indicator as a scalar field (1 on members, 0 elsewhere).
    pub fn indicator(&self) -> ScalarField {
        let v: Vec<f64> = self.members.iter().map(|&m| f64::from(u8::from(m))).collect();
        ScalarField::from_extent(Lattice::new(self.nx, self.ny), &v).expect("sizes agree")
    }

    fn check(&self, dom: &GridDomain) -> Result<()> {
        if self.nx != dom.nx() || self.ny != dom.ny() {
            return Err(Error::Input(format!(
                "cell set is {}x{}, domain is {}x{}",
                self.nx,
                self.ny,
                dom.nx(),
                dom.ny()
            )));
        }
        Ok(())
    }
}

/// Where a perimeter is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Mask cells only, with replicate ghosts at the mask boundary.
    Omega,
    /// The whole plane: every face between a member and a non-member counts.
    All,
}

/// How a set is turned into an energy.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Region(Region),
    /// Dirichlet level energy with exterior indicator `[f >= lambda]`.
    Level(f64),
}

struct SetEnergy<'a> {
    spec: &'a ProblemSpec,
    mode: Mode,
    level_data: Vec<f64>,
}

impl<'a> SetEnergy<'a> {
    fn new(spec: &'a ProblemSpec, mode: Mode) -> SetEnergy<'a> {
        let level_data = match (mode, spec.face_data()) {
            (Mode::Level(l), Some(f)) => f.iter().map(|&v| f64::from(u8::from(v >= l))).collect(),
            _ => Vec::new(),
        };
        SetEnergy { spec, mode, level_data }
    }

    fn lat(&self) -> Lattice {
        self.spec.dom().lattice()
    }

    /// Indicator on the padded lattice; members outside the mask are dropped
    /// except in the whole-plane mode.
    fn chi(&self, e: &CellSet) -> Vec<f64> {
        let lat = self.lat();
        let dom = self.spec.dom();
        let mut chi = vec![0.0; lat.len()];
        for (i, j) in e.cells() {
            let p = lat.idx(i as isize, j as isize);
            if self.mode == Mode::Region(Region::All) || dom.is_mask_p(p) {
                chi[p] = 1.0;
            }
        }
        chi
    }

    /// Cells whose term is part of the energy.
    fn counts(&self, p: usize) -> bool {
        let dom = self.spec.dom();
        match self.mode {
            Mode::Region(Region::Omega) => dom.is_mask_p(p),
            Mode::Region(Region::All) => {
                let (i, j) = self.lat().coords(p);
                i < dom.nx() as isize && j < dom.ny() as isize
            }
            Mode::Level(_) => dom.kind_p(p) != CellKind::Outside,
        }
    }

    fn term(&self, chi: &[f64], p: usize) -> f64 {
        let dom = self.spec.dom();
        let s = self.lat().stride();
        let inv_h = 1.0 / dom.h();
        let f = self.spec.drift().raw()[p];
        let c = chi[p];
        let g = match self.mode {
            Mode::Region(Region::All) => [(chi[p + 1] - c) * inv_h, (chi[p + s] - c) * inv_h],
            Mode::Region(Region::Omega) => {
                let gx = if dom.is_mask_p(p + 1) { (chi[p + 1] - c) * inv_h } else { 0.0 };
                let gy = if dom.is_mask_p(p + s) { (chi[p + s] - c) * inv_h } else { 0.0 };
                [gx, gy]
            }
            Mode::Level(_) => {
                let d = &self.level_data;
                if dom.is_mask_p(p) {
                    let right = if dom.is_mask_p(p + 1) { chi[p + 1] } else { d[dom.face_p(p, Dir::Right)] };
                    let up = if dom.is_mask_p(p + s) { chi[p + s] } else { d[dom.face_p(p, Dir::Up)] };
                    [(right - c) * inv_h, (up - c) * inv_h]
                } else {
                    let gx = if dom.is_mask_p(p + 1) {
                        (chi[p + 1] - d[dom.face_p(p + 1, Dir::Left)]) * inv_h
                    } else {
                        0.0
                    };
                    let gy = if dom.is_mask_p(p + s) {
                        (chi[p + s] - d[dom.face_p(p + s, Dir::Down)]) * inv_h
                    } else {
                        0.0
                    };
                    [gx, gy]
                }
            }
        };
        let v = [g[0] + f[0] * c, g[1] + f[1] * c];
        let free = match self.mode {
            Mode::Region(Region::Omega) => dom.exit_axes_p(p),
            _ => 0,
        };
        self.spec.norm().phi_free_p(p, v, free) + self.spec.source().raw()[p] * c
    }

    fn total(&self, chi: &[f64]) -> f64 {
        let area = self.spec.dom().cell_area();
        (0..chi.len()).filter(|&p| self.counts(p)).map(|p| self.term(chi, p)).sum::<f64>() * area
    }
}

/// Drift-and-source perimeter `sum phi(x, grad chi + F chi) h^2 + sum H chi h^2`.
pub fn psi_perimeter(e: &CellSet, spec: &ProblemSpec, region: Region) -> Result<f64> {
    e.check(spec.dom())?;
    let en = SetEnergy::new(spec, Mode::Region(region));
    Ok(en.total(&en.chi(e)))
}

/// Energy of a set as a level set of a Dirichlet problem: the exterior is
/// the indicator of `f >= lambda`. Neumann problems use [`Region::Omega`].
pub fn level_energy(e: &CellSet, spec: &ProblemSpec, lambda: f64) -> Result<f64> {
    e.check(spec.dom())?;
    let mode = if spec.is_neumann() { Mode::Region(Region::Omega) } else { Mode::Level(lambda) };
    let en = SetEnergy::new(spec, mode);
    Ok(en.total(&en.chi(e)))
}

/// Mask cells with `u >= lambda`.
pub fn superlevel(dom: &GridDomain, u: &ScalarField, lambda: f64) -> CellSet {
    CellSet::from_fn(dom.nx(), dom.ny(), |i, j| {
        dom.in_mask(i as isize, j as isize) && u.get(i as isize, j as isize) >= lambda
    })
}

/// `u1 = max(u - lambda, 0)` and `u2 = u - u1`.
pub fn truncate(u: &ScalarField, lambda: f64) -> (ScalarField, ScalarField) {
    let u1 = u.map(|v| (v - lambda).max(0.0));
    let u2 = u.axpy(-1.0, &u1);
    (u1, u2)
}

/// `min(1, max(u - lambda, 0) / eps)`.
pub fn smoothed_indicator(u: &ScalarField, lambda: f64, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be > 0, got {eps}")));
    }
    Ok(u.map(|v| ((v - lambda).max(0.0) / eps).min(1.0)))
}

/// Axis-aligned rectangle of cells `[i0, i0 + w) x [j0, j0 + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub i0: usize,
    pub j0: usize,
    pub w: usize,
    pub h: usize,
}

impl Window {
    pub fn new(i0: usize, j0: usize, w: usize, h: usize) -> Window {
        Window { i0, j0, w, h }
    }

    pub fn empty() -> Window {
        Window { i0: 0, j0: 0, w: 0, h: 0 }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i < self.i0 + self.w && j >= self.j0 && j < self.j0 + self.h
    }

    /// Mask cells of the window in row-major order.
    pub fn mask_cells(&self, dom: &GridDomain) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for j in self.j0..self.j0 + self.h {
            for i in self.i0..self.i0 + self.w {
                if dom.in_mask(i as isize, j as isize) {
                    v.push((i, j));
                }
            }
        }
        v
    }
}

/// Exhaustive minimum over all sets that agree with `base` outside `free`.
///
/// Candidate `k` puts `free[p]` in the set iff bit `n - 1 - p` of `k` is set,
/// so ties resolve to the lexicographically smallest indicator.
struct Enumeration<'a> {
    en: SetEnergy<'a>,
    base_chi: Vec<f64>,
    free: Vec<usize>,
    affected: Vec<usize>,
    offset: f64,
}

impl<'a> Enumeration<'a> {
    fn new(en: SetEnergy<'a>, base: &CellSet, free_cells: &[(usize, usize)]) -> Result<Enumeration<'a>> {
        if free_cells.len() > MAX_ENUM_CELLS {
            return Err(Error::Budget(format!(
                "{} free cells exceed the enumeration cap of {MAX_ENUM_CELLS}",
                free_cells.len()
            )));
        }
        let lat = en.lat();
        let s = lat.stride();
        let free: Vec<usize> = free_cells.iter().map(|&(i, j)| lat.idx(i as isize, j as isize)).collect();
        let mut base_chi = en.chi(base);
        for &p in &free {
            base_chi[p] = 0.0;
        }
        let mut touched = vec![false; lat.len()];
        for &p in &free {
            for q in [Some(p), p.checked_sub(1), p.checked_sub(s)].into_iter().flatten() {
                touched[q] = true;
            }
        }
        let affected: Vec<usize> = (0..lat.len()).filter(|&p| touched[p] && en.counts(p)).collect();
        let area = en.spec.dom().cell_area();
        let local: f64 = affected.iter().map(|&p| en.term(&base_chi, p)).sum::<f64>() * area;
        let offset = en.total(&base_chi) - local;
        Ok(Enumeration { en, base_chi, free, affected, offset })
    }

    fn count(&self) -> u64 {
        1u64 << self.free.len()
    }

    fn chi_of(&self, k: u64) -> Vec<f64> {
        let n = self.free.len();
        let mut chi = self.base_chi.clone();
        for (idx, &p) in self.free.iter().enumerate() {
            if (k >> (n - 1 - idx)) & 1 == 1 {
                chi[p] = 1.0;
            }
        }
        chi
    }

    fn value(&self, k: u64) -> f64 {
        let chi = self.chi_of(k);
        let area = self.en.spec.dom().cell_area();
        self.offset + self.affected.iter().map(|&p| self.en.term(&chi, p)).sum::<f64>() * area
    }

    fn set_of(&self, k: u64) -> CellSet {
        let chi = self.chi_of(k);
        let dom = self.en.spec.dom();
        let lat = dom.lattice();
        CellSet::from_fn(dom.nx(), dom.ny(), |i, j| chi[lat.idx(i as isize, j as isize)] == 1.0)
    }

    fn argmin(&self, par: Parallelism) -> (f64, u64) {
        let (v, k) = par::argmin_indexed(par, self.count(), |k| Some(self.value(k))).expect("at least one candidate");
        (v, k)
    }
}

/// Outcome of a local minimality check.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityCheck {
    pub minimal: bool,
    pub best_competitor: CellSet,
    /// Best competitor energy minus the energy of the tested set (never positive).
    pub margin: f64,
}

/// Checks that the super-level set `{u >= lambda}` has the least level
/// energy among all sets that agree with it outside `window`.
pub fn verify_superlevel_minimality(
    u: &ScalarField,
    lambda: f64,
    spec: &ProblemSpec,
    window: Window,
) -> Result<MinimalityCheck> {
    verify_superlevel_minimality_with(u, lambda, spec, window, Parallelism::default())
}

pub fn verify_superlevel_minimality_with(
    u: &ScalarField,
    lambda: f64,
    spec: &ProblemSpec,
    window: Window,
    par: Parallelism,
) -> Result<MinimalityCheck> {
    let dom = spec.dom();
    dom.check_lattice(u.lattice(), "field")?;
    let e = superlevel(dom, u, lambda);
    let mode = if spec.is_neumann() { Mode::Region(Region::Omega) } else { Mode::Level(lambda) };
    let free = window.mask_cells(dom);
    let en = Enumeration::new(SetEnergy::new(spec, mode), &e, &free)?;
    let own = en.en.total(&en.en.chi(&e));
    let (best, k) = en.argmin(par);
    let margin = (best - own).min(0.0);
    Ok(MinimalityCheck { minimal: margin >= -ENUM_TOL, best_competitor: en.set_of(k), margin })
}

/// Exact minimizer of [`psi_perimeter`] over sets agreeing with `fixed`
/// outside the mask cells of `window`; ties go to the lexicographically
/// smallest indicator.
pub(crate) fn set_min(
    spec: &ProblemSpec,
    fixed: &CellSet,
    window: Window,
    region: Region,
    par: Parallelism,
) -> Result<(CellSet, f64)> {
    fixed.check(spec.dom())?;
    let free = window.mask_cells(spec.dom());
    let en = Enumeration::new(SetEnergy::new(spec, Mode::Region(region)), fixed, &free)?;
    let (v, k) = en.argmin(par);
    Ok((en.set_of(k), v))
}

/// Barrier verdict at one boundary cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCell {
    pub cell: (usize, usize),
    pub passes: bool,
    /// A minimizer whose boundary touches the domain boundary inside the ball.
    pub violating_set: Option<CellSet>,
    /// Number of mask cells in the ball.
    pub ball_cells: usize,
    /// Minimum whole-plane perimeter over the competitors.
    pub min_value: f64,
}

/// Mask cells whose centers lie within `radius` cells of `(i0, j0)`.
pub fn ball(dom: &GridDomain, (i0, j0): (usize, usize), radius: f64) -> Vec<(usize, usize)> {
    dom.mask_cells()
        .filter(|&(i, j)| {
            let di = i as f64 - i0 as f64;
            let dj = j as f64 - j0 as f64;
            di.hypot(dj) <= radius
        })
        .collect()
}

/// For every boundary cell, minimizes the whole-plane perimeter over all
/// subsets `W` of the mask that agree with the mask outside the ball around
/// it, and fails the cell if any minimizer keeps a ball cell that has a
/// boundary face.
pub fn check_barrier_condition(spec: &ProblemSpec, radius: f64) -> Result<Vec<BarrierCell>> {
    check_barrier_condition_with(spec, radius, Parallelism::default())
}

pub fn check_barrier_condition_with(spec: &ProblemSpec, radius: f64, par: Parallelism) -> Result<Vec<BarrierCell>> {
    let dom = spec.dom();
    if !(radius >= 0.0) {
        return Err(Error::Input(format!("radius must be >= 0, got {radius}")));
    }
    let cells = dom.boundary_cells();
    for &c in &cells {
        let b = ball(dom, c, radius);
        if b.len() > MAX_ENUM_CELLS {
            return Err(Error::Budget(format!(
                "ball of radius {radius} around ({}, {}) holds {} mask cells, cap is {MAX_ENUM_CELLS}",
                c.0,
                c.1,
                b.len()
            )));
        }
    }
    let full = CellSet::full(dom);
    let mut out = Vec::with_capacity(cells.len());
    for c in cells {
        let b = ball(dom, c, radius);
        let en = Enumeration::new(SetEnergy::new(spec, Mode::Region(Region::All)), &full, &b)?;
        let n = en.count();
        let (min, _) = en.argmin(par);
        let touching: Vec<usize> = b
            .iter()
            .enumerate()
            .filter(|(_, &c)| Dir::ALL.iter().any(|&d| dom.face_index(c, d).is_some()))
            .map(|(idx, _)| idx)
            .collect();
        let nb = b.len();
        let violating = par::argmin_indexed(par, n, |k| {
            let keeps = touching.iter().any(|&idx| (k >> (nb - 1 - idx)) & 1 == 1);
            (keeps && en.value(k) <= min + ENUM_TOL).then_some(0.0)
        })
        .map(|(_, k)| k);
        out.push(BarrierCell {
            cell: c,
            passes: violating.is_none(),
            violating_set: violating.map(|k| en.set_of(k)),
            ball_cells: nb,
            min_value: min,
        });
    }
    Ok(out)
}
