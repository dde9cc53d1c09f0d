//! Masked 2-D cell grids and the forward-gradient / backward-divergence pair.
//!
//! Cells `(i, j)` of the extent have centers `((i + 1/2) h, (j + 1/2) h)`.
//! Fields live on a padded lattice `[-1, nx] x [-1, ny]` so stencils never
//! need bounds checks. The gradient of a cell is the forward difference to its
//! right and upper neighbours; a cell outside the mask whose right or upper
//! neighbour is inside belongs to the *exterior band*, and carries the
//! difference across the left or lower boundary face.
//!
//! With these conventions the discrete integration by parts
//!
//! ```text
//! <grad u, b> + <u, div b> = sum over boundary faces of [b, nu] u h
//! ```
//!
//! holds exactly for the replicate-ghost gradient, and with zero right-hand
//! side for the zero-data Dirichlet gradient.

use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Index arithmetic for the padded lattice of an `nx` x `ny` extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    pub fn new(nx: usize, ny: usize) -> Lattice {
        Lattice { nx, ny }
    }

    /// Row length of the padded storage.
    #[inline]
    pub fn stride(&self) -> usize {
        self.nx + 2
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.ny + 2
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.stride() * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage index of cell `(i, j)`, valid for `-1 <= i <= nx`, `-1 <= j <= ny`.
    #[inline]
    pub fn idx(&self, i: isize, j: isize) -> usize {
        ((j + 1) as usize) * self.stride() + (i + 1) as usize
    }

    #[inline]
    pub fn coords(&self, p: usize) -> (isize, isize) {
        let s = self.stride();
        ((p % s) as isize - 1, (p / s) as isize - 1)
    }

    pub fn in_extent(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    pub fn in_padded(&self, i: isize, j: isize) -> bool {
        i >= -1 && j >= -1 && i <= self.nx as isize && j <= self.ny as isize
    }
}

/// Side of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Left,
    Right,
    Down,
    Up,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Left, Dir::Right, Dir::Down, Dir::Up];

    pub fn normal(self) -> [f64; 2] {
        match self {
            Dir::Left => [-1.0, 0.0],
            Dir::Right => [1.0, 0.0],
            Dir::Down => [0.0, -1.0],
            Dir::Up => [0.0, 1.0],
        }
    }

    pub fn offset(self) -> (isize, isize) {
        match self {
            Dir::Left => (-1, 0),
            Dir::Right => (1, 0),
            Dir::Down => (0, -1),
            Dir::Up => (0, 1),
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dir::Left => "left",
            Dir::Right => "right",
            Dir::Down => "down",
            Dir::Up => "up",
        }
    }
}

/// A face between a mask cell and a cell outside the mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    /// The interior (mask) cell.
    pub cell: (usize, usize),
    pub dir: Dir,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Face length, equal to the grid spacing.
    pub length: f64,
    /// Midpoint in domain coordinates.
    pub midpoint: [f64; 2],
}

const NO_FACE: u32 = u32::MAX;

/// Membership of a padded-lattice cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CellKind {
    Outside,
    Mask,
    Band,
}

/// A masked rectangular grid (a polyomino domain).
#[derive(Debug, Clone)]
pub struct GridDomain {
    lat: Lattice,
    h: f64,
    kind: Vec<CellKind>,
    faces: Vec<BoundaryFace>,
    face_of: Vec<[u32; 4]>,
    mask_cells: Vec<usize>,
    band_cells: Vec<usize>,
}

impl GridDomain {
    /// Builds a domain from a row-major mask (`mask[j * nx + i]`).
    ///
    /// The mask must be non-empty and 4-connected.
    pub fn new(nx: usize, ny: usize, h: f64, mask: &[bool]) -> Result<GridDomain> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config("grid needs nx, ny >= 1".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Config(format!("grid spacing must be finite and > 0, got {h}")));
        }
        if mask.len() != nx * ny {
            return Err(Error::Config(format!(
                "mask has {} entries, expected {}",
                mask.len(),
                nx * ny
            )));
        }
        let lat = Lattice::new(nx, ny);
        let mut kind = vec![CellKind::Outside; lat.len()];
        for j in 0..ny {
            for i in 0..nx {
                if mask[j * nx + i] {
                    kind[lat.idx(i as isize, j as isize)] = CellKind::Mask;
                }
            }
        }
        let mask_cells: Vec<usize> = (0..lat.len()).filter(|&p| kind[p] == CellKind::Mask).collect();
        if mask_cells.is_empty() {
            return Err(Error::Config("mask is empty".into()));
        }
        if !four_connected(&lat, &kind, &mask_cells) {
            return Err(Error::Config("mask is not 4-connected".into()));
        }

        let s = lat.stride();
        let mut band_cells = Vec::new();
        for p in 0..lat.len() {
            let (i, j) = lat.coords(p);
            if kind[p] == CellKind::Outside
                && i < nx as isize
                && j < ny as isize
                && (kind[p + 1] == CellKind::Mask || kind[p + s] == CellKind::Mask)
            {
                band_cells.push(p);
            }
        }
        for &p in &band_cells {
            kind[p] = CellKind::Band;
        }

        let mut faces = Vec::new();
        let mut face_of = vec![[NO_FACE; 4]; lat.len()];
        for &p in &mask_cells {
            let (i, j) = lat.coords(p);
            for d in Dir::ALL {
                let (di, dj) = d.offset();
                let q = lat.idx(i + di, j + dj);
                if kind[q] != CellKind::Mask {
                    face_of[p][d.slot()] = faces.len() as u32;
                    let c = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                    let n = d.normal();
                    faces.push(BoundaryFace {
                        cell: (i as usize, j as usize),
                        dir: d,
                        normal: n,
                        length: h,
                        midpoint: [c[0] + 0.5 * h * n[0], c[1] + 0.5 * h * n[1]],
                    });
                }
            }
        }

        Ok(GridDomain { lat, h, kind, faces, face_of, mask_cells, band_cells })
    }

    /// Full `nx` x `ny` rectangle.
    pub fn rectangle(nx: usize, ny: usize, h: f64) -> Result<GridDomain> {
        GridDomain::new(nx, ny, h, &vec![true; nx * ny])
    }

    pub fn lattice(&self) -> Lattice {
        self.lat
    }

    pub fn nx(&self) -> usize {
        self.lat.nx
    }

    pub fn ny(&self) -> usize {
        self.lat.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    /// Number of mask cells.
    pub fn cell_count(&self) -> usize {
        self.mask_cells.len()
    }

    /// Area of the mask, `cells * h^2`.
    pub fn area(&self) -> f64 {
        self.cell_count() as f64 * self.cell_area()
    }

    pub fn in_mask(&self, i: isize, j: isize) -> bool {
        self.lat.in_padded(i, j) && self.kind[self.lat.idx(i, j)] == CellKind::Mask
    }

    /// True for exterior-band cells (outside the mask, with a mask neighbour
    /// to the right or above).
    pub fn in_band(&self, i: isize, j: isize) -> bool {
        self.lat.in_padded(i, j) && self.kind[self.lat.idx(i, j)] == CellKind::Band
    }

    /// Mask cells in storage order (row by row from `j = 0`).
    pub fn mask_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mask_cells.iter().map(move |&p| {
            let (i, j) = self.lat.coords(p);
            (i as usize, j as usize)
        })
    }

    /// Exterior-band cells in storage order; coordinates may be `-1`.
    pub fn band_cells(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        self.band_cells.iter().map(move |&p| self.lat.coords(p))
    }

    /// Index into [`GridDomain::boundary_faces`] of the face on side `dir` of a mask cell.
    pub fn face_index(&self, cell: (usize, usize), dir: Dir) -> Option<usize> {
        let p = self.lat.idx(cell.0 as isize, cell.1 as isize);
        let f = self.face_of.get(p)?[dir.slot()];
        (f != NO_FACE).then_some(f as usize)
    }

    /// Mask cells that have at least one boundary face.
    pub fn boundary_cells(&self) -> Vec<(usize, usize)> {
        self.mask_cells()
            .filter(|&c| Dir::ALL.iter().any(|&d| self.face_index(c, d).is_some()))
            .collect()
    }

    /// Center of cell `(i, j)` in domain coordinates.
    pub fn center(&self, i: isize, j: isize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    /// Mean of the mask cell centers.
    pub fn centroid(&self) -> [f64; 2] {
        let n = self.cell_count() as f64;
        let mut c = [0.0, 0.0];
        for (i, j) in self.mask_cells() {
            let x = self.center(i as isize, j as isize);
            c[0] += x[0];
            c[1] += x[1];
        }
        [c[0] / n, c[1] / n]
    }

    /// Euclidean diameter of the set of mask cells (as closed squares).
    pub fn diameter(&self) -> f64 {
        let cells: Vec<(usize, usize)> = self.boundary_cells();
        let mut d2 = 0.0f64;
        for (a, &(i0, j0)) in cells.iter().enumerate() {
            for &(i1, j1) in &cells[a..] {
                let dx = (i0 as f64 - i1 as f64).abs() + 1.0;
                let dy = (j0 as f64 - j1 as f64).abs() + 1.0;
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        d2.sqrt() * self.h
    }

    #[inline]
    pub(crate) fn kind_p(&self, p: usize) -> CellKind {
        self.kind[p]
    }

    #[inline]
    pub(crate) fn is_mask_p(&self, p: usize) -> bool {
        self.kind[p] == CellKind::Mask
    }

    /// Bit 0 when the right neighbour of mask cell `p` is not in the mask,
    /// bit 1 when the upper one is not.
    #[inline]
    pub(crate) fn exit_axes_p(&self, p: usize) -> u8 {
        let s = self.lattice().stride();
        u8::from(!self.is_mask_p(p + 1)) | (u8::from(!self.is_mask_p(p + s)) << 1)
    }

    #[inline]
    pub(crate) fn face_p(&self, p: usize, dir: Dir) -> usize {
        self.face_of[p][dir.slot()] as usize
    }

    pub(crate) fn mask_indices(&self) -> &[usize] {
        &self.mask_cells
    }

    pub(crate) fn band_indices(&self) -> &[usize] {
        &self.band_cells
    }

    pub(crate) fn check_lattice(&self, lat: Lattice, what: &str) -> Result<()> {
        if lat != self.lat {
            return Err(Error::Input(format!(
                "{what} is {}x{}, domain is {}x{}",
                lat.nx, lat.ny, self.lat.nx, self.lat.ny
            )));
        }
        Ok(())
    }
}

fn four_connected(lat: &Lattice, kind: &[CellKind], cells: &[usize]) -> bool {
    let s = lat.stride();
    let mut seen = vec![false; kind.len()];
    let mut stack = vec![cells[0]];
    seen[cells[0]] = true;
    let mut count = 0;
    while let Some(p) = stack.pop() {
        count += 1;
        for q in [p - 1, p + 1, p - s, p + s] {
            if kind[q] == CellKind::Mask && !seen[q] {
                seen[q] = true;
                stack.push(q);
            }
        }
    }
    count == cells.len()
}

/// Per-cell scalar values over the padded lattice. Only mask cells are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    lat: Lattice,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(lat: Lattice) -> ScalarField {
        ScalarField { lat, data: vec![0.0; lat.len()] }
    }

    /// Evaluates `f(i, j)` at every mask cell; other entries are 0.
    pub fn from_fn(dom: &GridDomain, mut f: impl FnMut(usize, usize) -> f64) -> ScalarField {
        let mut s = ScalarField::zeros(dom.lattice());
        for &p in dom.mask_indices() {
            let (i, j) = dom.lat.coords(p);
            s.data[p] = f(i as usize, j as usize);
        }
        s
    }

    pub fn constant(dom: &GridDomain, c: f64) -> ScalarField {
        ScalarField::from_fn(dom, |_, _| c)
    }

    /// From row-major extent values (`values[j * nx + i]`).
    pub fn from_extent(lat: Lattice, values: &[f64]) -> Result<ScalarField> {
        if values.len() != lat.nx * lat.ny {
            return Err(Error::Input(format!(
                "scalar field has {} values, expected {}",
                values.len(),
                lat.nx * lat.ny
            )));
        }
        let mut s = ScalarField::zeros(lat);
        for j in 0..lat.ny {
            for i in 0..lat.nx {
                s.data[lat.idx(i as isize, j as isize)] = values[j * lat.nx + i];
            }
        }
        Ok(s)
    }

    pub fn lattice(&self) -> Lattice {
        self.lat
    }

    /// Value at a padded-lattice cell.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.lat.idx(i, j)]
    }

    pub fn set(&mut self, i: isize, j: isize, v: f64) {
        let p = self.lat.idx(i, j);
        self.data[p] = v;
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Values at mask cells in storage order.
    pub fn mask_values<'a>(&'a self, dom: &'a GridDomain) -> impl Iterator<Item = f64> + 'a {
        dom.mask_indices().iter().map(move |&p| self.data[p])
    }

    /// `sum_cells self * other * h^2` over the mask.
    pub fn dot(&self, other: &ScalarField, dom: &GridDomain) -> f64 {
        dom.mask_indices().iter().map(|&p| self.data[p] * other.data[p]).sum::<f64>() * dom.cell_area()
    }

    /// Mean over mask cells.
    pub fn mean(&self, dom: &GridDomain) -> f64 {
        self.mask_values(dom).sum::<f64>() / dom.cell_count() as f64
    }

    /// Subtracts the mask mean from every mask cell.
    pub fn remove_mean(&mut self, dom: &GridDomain) {
        let m = self.mean(dom);
        for &p in dom.mask_indices() {
            self.data[p] -= m;
        }
    }

    /// Max absolute value over the mask.
    pub fn max_abs(&self, dom: &GridDomain) -> f64 {
        self.mask_values(dom).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite_on(&self, dom: &GridDomain) -> bool {
        self.mask_values(dom).all(f64::is_finite)
    }

    /// `self + t * other` on every entry.
    pub fn axpy(&self, t: f64, other: &ScalarField) -> ScalarField {
        ScalarField {
            lat: self.lat,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + t * b).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { lat: self.lat, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Per-cell 2-vectors over the padded lattice. Meaningful on mask and band cells.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    lat: Lattice,
    data: Vec<[f64; 2]>,
}

impl VectorField {
    pub fn zeros(lat: Lattice) -> VectorField {
        VectorField { lat, data: vec![[0.0, 0.0]; lat.len()] }
    }

    /// Evaluates `f(i, j)` on mask and band cells (band coordinates may be `-1`).
    pub fn from_fn(dom: &GridDomain, mut f: impl FnMut(isize, isize) -> [f64; 2]) -> VectorField {
        let mut v = VectorField::zeros(dom.lattice());
        for p in 0..dom.lat.len() {
            if dom.kind[p] != CellKind::Outside {
                let (i, j) = dom.lat.coords(p);
                v.data[p] = f(i, j);
            }
        }
        v
    }

    /// Evaluates `f(i, j)` on mask cells only; band cells stay zero.
    pub fn from_fn_mask(dom: &GridDomain, mut f: impl FnMut(usize, usize) -> [f64; 2]) -> VectorField {
        let mut v = VectorField::zeros(dom.lattice());
        for &p in dom.mask_indices() {
            let (i, j) = dom.lat.coords(p);
            v.data[p] = f(i as usize, j as usize);
        }
        v
    }

    pub fn constant(dom: &GridDomain, c: [f64; 2]) -> VectorField {
        VectorField::from_fn(dom, |_, _| c)
    }

    pub fn lattice(&self) -> Lattice {
        self.lat
    }

    pub fn get(&self, i: isize, j: isize) -> [f64; 2] {
        self.data[self.lat.idx(i, j)]
    }

    pub fn set(&mut self, i: isize, j: isize, v: [f64; 2]) {
        let p = self.lat.idx(i, j);
        self.data[p] = v;
    }

    pub(crate) fn raw(&self) -> &[[f64; 2]] {
        &self.data
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.data
    }

    /// `sum (a . b) h^2` over mask and band cells.
    pub fn dot(&self, other: &VectorField, dom: &GridDomain) -> f64 {
        let mut s = 0.0;
        for p in 0..dom.lat.len() {
            if dom.kind[p] != CellKind::Outside {
                let (a, b) = (self.data[p], other.data[p]);
                s += a[0] * b[0] + a[1] * b[1];
            }
        }
        s * dom.cell_area()
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            lat: self.lat,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
        }
    }

    pub fn scale(&self, t: f64) -> VectorField {
        VectorField { lat: self.lat, data: self.data.iter().map(|a| [a[0] * t, a[1] * t]).collect() }
    }

    /// Sets band entries to zero (mask entries untouched).
    pub fn clear_band(&mut self, dom: &GridDomain) {
        for &p in dom.band_indices() {
            self.data[p] = [0.0, 0.0];
        }
    }

    pub fn is_finite_on(&self, dom: &GridDomain) -> bool {
        (0..dom.lat.len())
            .filter(|&p| dom.kind[p] != CellKind::Outside)
            .all(|p| self.data[p][0].is_finite() && self.data[p][1].is_finite())
    }
}

/// How the gradient treats differences across boundary faces.
#[derive(Debug, Clone, Copy)]
pub enum BoundaryMode<'a> {
    /// Ghost cells replicate the interior value: zero normal difference, band zero.
    NeumannGhost,
    /// Ghost cells hold the boundary datum of the face (one value per boundary face).
    DirichletExtension(&'a [f64]),
}

/// Forward-difference gradient on mask and band cells.
pub fn gradient(dom: &GridDomain, u: &ScalarField, bc: BoundaryMode<'_>) -> Result<VectorField> {
    dom.check_lattice(u.lattice(), "scalar field")?;
    let mut out = VectorField::zeros(dom.lattice());
    match bc {
        BoundaryMode::NeumannGhost => gradient_into(dom, u, None, true, Parallelism::Sequential, &mut out),
        BoundaryMode::DirichletExtension(f) => {
            if f.len() != dom.faces.len() {
                return Err(Error::Input(format!(
                    "Dirichlet data has {} values, domain has {} boundary faces",
                    f.len(),
                    dom.faces.len()
                )));
            }
            gradient_into(dom, u, Some(f), false, Parallelism::Sequential, &mut out)
        }
    }
    Ok(out)
}

/// Gradient kernel. `neumann` selects replicate ghosts; otherwise ghosts take
/// `data` (zero when `None`).
pub(crate) fn gradient_into(
    dom: &GridDomain,
    u: &ScalarField,
    data: Option<&[f64]>,
    neumann: bool,
    par: Parallelism,
    out: &mut VectorField,
) {
    let lat = dom.lat;
    let s = lat.stride();
    let inv_h = 1.0 / dom.h;
    let uu = u.raw();
    let datum = |face: usize| data.map_or(0.0, |d| d[face]);
    par::for_each_row(par, out.raw_mut(), s, |r, row| {
        let base = r * s;
        for (c, g) in row.iter_mut().enumerate() {
            let p = base + c;
            *g = match dom.kind[p] {
                CellKind::Mask => {
                    let gx = if dom.kind[p + 1] == CellKind::Mask {
                        (uu[p + 1] - uu[p]) * inv_h
                    } else if neumann {
                        0.0
                    } else {
                        (datum(dom.face_p(p, Dir::Right)) - uu[p]) * inv_h
                    };
                    let gy = if dom.kind[p + s] == CellKind::Mask {
                        (uu[p + s] - uu[p]) * inv_h
                    } else if neumann {
                        0.0
                    } else {
                        (datum(dom.face_p(p, Dir::Up)) - uu[p]) * inv_h
                    };
                    [gx, gy]
                }
                CellKind::Band if !neumann => {
                    let gx = if dom.kind[p + 1] == CellKind::Mask {
                        (uu[p + 1] - datum(dom.face_p(p + 1, Dir::Left))) * inv_h
                    } else {
                        0.0
                    };
                    let gy = if dom.kind[p + s] == CellKind::Mask {
                        (uu[p + s] - datum(dom.face_p(p + s, Dir::Down))) * inv_h
                    } else {
                        0.0
                    };
                    [gx, gy]
                }
                _ => [0.0, 0.0],
            };
        }
    });
}

/// Backward-difference divergence on mask cells, reading `b` on mask and band cells.
///
/// This is minus the adjoint of the zero-data Dirichlet gradient.
pub fn divergence(dom: &GridDomain, b: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(dom.lattice());
    divergence_into(dom, b, false, Parallelism::Sequential, &mut out);
    out
}

/// Divergence kernel. With `interior_only`, components on boundary faces are
/// treated as zero, giving minus the adjoint of the replicate-ghost gradient.
pub(crate) fn divergence_into(
    dom: &GridDomain,
    b: &VectorField,
    interior_only: bool,
    par: Parallelism,
    out: &mut ScalarField,
) {
    let s = dom.lat.stride();
    let inv_h = 1.0 / dom.h;
    let bb = b.raw();
    par::for_each_row(par, out.raw_mut(), s, |r, row| {
        let base = r * s;
        for (c, d) in row.iter_mut().enumerate() {
            let p = base + c;
            if dom.kind[p] != CellKind::Mask {
                *d = 0.0;
                continue;
            }
            let (mut bx, mut bxl, mut by, mut byd) = (bb[p][0], bb[p - 1][0], bb[p][1], bb[p - s][1]);
            if interior_only {
                if dom.kind[p + 1] != CellKind::Mask {
                    bx = 0.0;
                }
                if dom.kind[p - 1] != CellKind::Mask {
                    bxl = 0.0;
                }
                if dom.kind[p + s] != CellKind::Mask {
                    by = 0.0;
                }
                if dom.kind[p - s] != CellKind::Mask {
                    byd = 0.0;
                }
            }
            *d = (bx - bxl + by - byd) * inv_h;
        }
    });
}

/// Weak normal trace `[b, nu]` on every boundary face, ordered like
/// [`GridDomain::boundary_faces`].
pub fn boundary_trace_normal(dom: &GridDomain, b: &VectorField) -> Vec<f64> {
    let lat = dom.lat;
    dom.faces
        .iter()
        .map(|f| {
            let (i, j) = (f.cell.0 as isize, f.cell.1 as isize);
            match f.dir {
                Dir::Right => b.get(i, j)[0],
                Dir::Up => b.get(i, j)[1],
                Dir::Left => -b.raw()[lat.idx(i - 1, j)][0],
                Dir::Down => -b.raw()[lat.idx(i, j - 1)][1],
            }
        })
        .collect()
}

/// Analytic bound `sqrt(8) / h` on the operator norm of the gradient.
pub fn operator_norm_estimate(dom: &GridDomain) -> f64 {
    8f64.sqrt() / dom.h
}

/// Power-iteration estimate of the operator norm of the zero-data Dirichlet
/// gradient (the larger of the two gradients).
pub fn operator_norm_power(dom: &GridDomain, iters: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = ScalarField::from_fn(dom, |_, _| rng.gen_range(-1.0..1.0));
    let mut g = VectorField::zeros(dom.lattice());
    let mut d = ScalarField::zeros(dom.lattice());
    let mut lambda = 0.0;
    for _ in 0..iters {
        let n = u.dot(&u, dom).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        u = u.map(|v| v / n);
        gradient_into(dom, &u, None, false, Parallelism::Sequential, &mut g);
        divergence_into(dom, &g, false, Parallelism::Sequential, &mut d);
        // Rayleigh quotient of grad^T grad = -div grad.
        lambda = g.dot(&g, dom) / u.dot(&u, dom);
        u = d.map(|v| -v);
    }
    lambda.max(0.0).sqrt()
}
