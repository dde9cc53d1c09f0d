//! Position-dependent norm families `phi(x, xi)` and their dual norms.
//!
//! Parameters are piecewise constant per grid cell. Internally they are stored
//! on the padded lattice of [`Lattice`] (one ghost ring around the extent),
//! with ghost entries copied from the nearest extent cell, so that kernels can
//! evaluate the norm at exterior-band cells without bounds checks.

use crate::error::{Error, Result};
use crate::grid::Lattice;

/// The four supported norm families.
///
/// | kind | `phi(x, xi)` | dual `phi0(x, xi)` |
/// |---|---|---|
/// | `WeightedEuclidean` | `a |xi|` | `|xi| / a` |
/// | `AnisotropicRiemannian` | `a sqrt(xi' S xi)` | `sqrt(xi' S^-1 xi) / a` |
/// | `WeightedL1` | `a (|xi1| + |xi2|)` | `max |xi_i| / a` |
/// | `WeightedLinf` | `a max |xi_i|` | `(|xi1| + |xi2|) / a` |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    WeightedEuclidean,
    AnisotropicRiemannian,
    WeightedL1,
    WeightedLinf,
}

impl NormKind {
    pub const ALL: [NormKind; 4] = [
        NormKind::WeightedEuclidean,
        NormKind::AnisotropicRiemannian,
        NormKind::WeightedL1,
        NormKind::WeightedLinf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::WeightedEuclidean => "weighted_euclidean",
            NormKind::AnisotropicRiemannian => "anisotropic_riemannian",
            NormKind::WeightedL1 => "weighted_l1",
            NormKind::WeightedLinf => "weighted_linf",
        }
    }

    pub fn from_name(s: &str) -> Option<NormKind> {
        NormKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn diag(a: f64, b: f64) -> Sym2 {
        Sym2 { xx: a, xy: 0.0, yy: b }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        (mean - r, mean + r)
    }

    /// Eigenpairs `(lambda, unit vector)` in ascending order of `lambda`.
    pub fn eigen(&self) -> ((f64, [f64; 2]), (f64, [f64; 2])) {
        let (l0, l1) = self.eigenvalues();
        let a = [self.xy, l0 - self.xx];
        let b = [l0 - self.yy, self.xy];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        let v0 = if n > 0.0 { [v[0] / n, v[1] / n] } else { [1.0, 0.0] };
        ((l0, v0), (l1, [-v0[1], v0[0]]))
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2 { xx: self.yy / d, xy: -self.xy / d, yy: self.xx / d }
    }

    #[inline]
    pub fn quad(&self, v: [f64; 2]) -> f64 {
        self.xx * v[0] * v[0] + 2.0 * self.xy * v[0] * v[1] + self.yy * v[1] * v[1]
    }

    fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

/// Per-cell norm field with its global bounds `beta |xi| <= phi <= alpha |xi|`.
#[derive(Debug, Clone)]
pub struct NormSpec {
    kind: NormKind,
    lat: Lattice,
    weight: Vec<f64>,
    metric: Vec<Sym2>,
    metric_inv: Vec<Sym2>,
    alpha: f64,
    beta: f64,
    weight_range: (f64, f64),
    eig_range: (f64, f64),
}

impl NormSpec {
    /// Builds a norm field over an `nx` x `ny` extent.
    ///
    /// `weight` and `metric` are row-major over the extent (`j * nx + i`).
    /// `metric` is required for `AnisotropicRiemannian` and ignored otherwise.
    pub fn new(
        kind: NormKind,
        nx: usize,
        ny: usize,
        weight: Vec<f64>,
        metric: Option<Vec<Sym2>>,
    ) -> Result<NormSpec> {
        let n = nx * ny;
        if n == 0 {
            return Err(Error::Config("norm field needs a non-empty extent".into()));
        }
        if weight.len() != n {
            return Err(Error::Config(format!(
                "weight field has {} entries, expected {}",
                weight.len(),
                n
            )));
        }
        if let Some(bad) = weight.iter().find(|a| !a.is_finite() || **a <= 0.0) {
            return Err(Error::Config(format!("weight must be finite and > 0, got {bad}")));
        }
        let metric = match (kind, metric) {
            (NormKind::AnisotropicRiemannian, Some(m)) => {
                if m.len() != n {
                    return Err(Error::Config(format!(
                        "metric field has {} entries, expected {}",
                        m.len(),
                        n
                    )));
                }
                m
            }
            (NormKind::AnisotropicRiemannian, None) => {
                return Err(Error::Config("anisotropic norm requires a metric field".into()))
            }
            _ => vec![Sym2::IDENTITY; n],
        };
        let mut eig_lo = f64::INFINITY;
        let mut eig_hi = 0.0f64;
        for s in &metric {
            if !s.is_finite() {
                return Err(Error::Config("metric entries must be finite".into()));
            }
            let (lo, hi) = s.eigenvalues();
            eig_lo = eig_lo.min(lo);
            eig_hi = eig_hi.max(hi);
        }
        if eig_lo <= 1e-12 * eig_hi.max(1.0) {
            return Err(Error::Config(format!(
                "metric is singular or indefinite (smallest eigenvalue {eig_lo:e})"
            )));
        }
        Ok(Self::assemble(kind, nx, ny, weight, metric))
    }

    /// Constant weight `a` (and identity metric) over the extent.
    pub fn uniform(kind: NormKind, nx: usize, ny: usize, a: f64) -> Result<NormSpec> {
        let metric = (kind == NormKind::AnisotropicRiemannian).then(|| vec![Sym2::IDENTITY; nx * ny]);
        NormSpec::new(kind, nx, ny, vec![a; nx * ny], metric)
    }

    /// Constant weight and constant metric.
    pub fn uniform_anisotropic(nx: usize, ny: usize, a: f64, metric: Sym2) -> Result<NormSpec> {
        NormSpec::new(
            NormKind::AnisotropicRiemannian,
            nx,
            ny,
            vec![a; nx * ny],
            Some(vec![metric; nx * ny]),
        )
    }

    /// Builds the field without validating weights or metric.
    ///
    /// Intended for probing code paths with deliberately broken integrands
    /// (for example a negative weight, which makes `phi` concave).
    pub fn new_unchecked(
        kind: NormKind,
        nx: usize,
        ny: usize,
        weight: Vec<f64>,
        metric: Option<Vec<Sym2>>,
    ) -> NormSpec {
        let metric = metric.unwrap_or_else(|| vec![Sym2::IDENTITY; nx * ny]);
        Self::assemble(kind, nx, ny, weight, metric)
    }

    fn assemble(kind: NormKind, nx: usize, ny: usize, weight: Vec<f64>, metric: Vec<Sym2>) -> NormSpec {
        let lat = Lattice::new(nx, ny);
        let mut w = vec![0.0; lat.len()];
        let mut m = vec![Sym2::IDENTITY; lat.len()];
        for p in 0..lat.len() {
            let (i, j) = lat.coords(p);
            let ci = i.clamp(0, nx as isize - 1) as usize;
            let cj = j.clamp(0, ny as isize - 1) as usize;
            w[p] = weight[cj * nx + ci];
            m[p] = metric[cj * nx + ci];
        }
        let metric_inv: Vec<Sym2> = m.iter().map(Sym2::inverse).collect();
        let (a_min, a_max) = weight
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        let (e_min, e_max) = metric.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            let (a, b) = s.eigenvalues();
            (lo.min(a), hi.max(b))
        });
        let sqrt2 = std::f64::consts::SQRT_2;
        let (alpha, beta) = match kind {
            NormKind::WeightedEuclidean => (a_max, a_min),
            NormKind::AnisotropicRiemannian => {
                // a * sqrt(lambda) extremes are attained cellwise, not globally.
                let mut hi = f64::NEG_INFINITY;
                let mut lo = f64::INFINITY;
                for (a, s) in weight.iter().zip(&metric) {
                    let (l0, l1) = s.eigenvalues();
                    hi = hi.max(a * l1.max(0.0).sqrt());
                    lo = lo.min(a * l0.max(0.0).sqrt());
                }
                (hi, lo)
            }
            NormKind::WeightedL1 => (sqrt2 * a_max, a_min),
            NormKind::WeightedLinf => (a_max, a_min / sqrt2),
        };
        NormSpec {
            kind,
            lat,
            weight: w,
            metric: m,
            metric_inv,
            alpha,
            beta,
            weight_range: (a_min, a_max),
            eig_range: (e_min, e_max),
        }
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn nx(&self) -> usize {
        self.lat.nx
    }

    pub fn ny(&self) -> usize {
        self.lat.ny
    }

    /// Upper bound `alpha` with `phi(x, xi) <= alpha |xi|`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Lower bound `beta` with `beta |xi| <= phi(x, xi)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn weight_range(&self) -> (f64, f64) {
        self.weight_range
    }

    /// Extreme metric eigenvalues (both 1 for the isotropic kinds).
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        self.eig_range
    }

    pub fn weight_at(&self, cell: (usize, usize)) -> Result<f64> {
        Ok(self.weight[self.checked(cell)?])
    }

    pub fn metric_at(&self, cell: (usize, usize)) -> Result<Sym2> {
        Ok(self.metric[self.checked(cell)?])
    }

    fn checked(&self, (i, j): (usize, usize)) -> Result<usize> {
        if i >= self.lat.nx || j >= self.lat.ny {
            return Err(Error::CellOutOfRange {
                i: i as isize,
                j: j as isize,
                nx: self.lat.nx,
                ny: self.lat.ny,
            });
        }
        Ok(self.lat.idx(i as isize, j as isize))
    }

    fn checked_vec(&self, cell: (usize, usize), xi: [f64; 2]) -> Result<usize> {
        let p = self.checked(cell)?;
        if !(xi[0].is_finite() && xi[1].is_finite()) {
            return Err(Error::Input(format!("non-finite vector ({}, {})", xi[0], xi[1])));
        }
        Ok(p)
    }

    /// `phi(x, xi)` at an extent cell.
    pub fn phi(&self, cell: (usize, usize), xi: [f64; 2]) -> Result<f64> {
        let p = self.checked_vec(cell, xi)?;
        Ok(self.phi_p(p, xi))
    }

    /// Dual norm `phi0(x, xi) = sup { xi . p : phi(x, p) <= 1 }` in closed form.
    pub fn phi_dual(&self, cell: (usize, usize), xi: [f64; 2]) -> Result<f64> {
        let p = self.checked_vec(cell, xi)?;
        Ok(self.phi_dual_p(p, xi))
    }

    /// Projection onto the dual unit ball `{q : phi0(x, q) <= 1}`.
    ///
    /// Exact Euclidean nearest point for every kind; for
    /// `AnisotropicRiemannian` the ball is an ellipse and the multiplier is
    /// found iteratively.
    pub fn project_dual_ball(&self, cell: (usize, usize), b: [f64; 2]) -> Result<[f64; 2]> {
        let p = self.checked_vec(cell, b)?;
        Ok(self.project_p(p, b))
    }

    /// `max_k xi . p_k / phi(x, p_k)` over `n_dirs` equally spaced unit directions.
    ///
    /// Never exceeds [`NormSpec::phi_dual`] and converges to it as `n_dirs` grows.
    pub fn support_sample_dual(&self, cell: (usize, usize), xi: [f64; 2], n_dirs: usize) -> Result<f64> {
        let p = self.checked_vec(cell, xi)?;
        if n_dirs < 4 {
            return Err(Error::Input(format!("need at least 4 sample directions, got {n_dirs}")));
        }
        let mut best = 0.0f64;
        for k in 0..n_dirs {
            let t = std::f64::consts::TAU * k as f64 / n_dirs as f64;
            let dir = [t.cos(), t.sin()];
            let v = (xi[0] * dir[0] + xi[1] * dir[1]) / self.phi_p(p, dir);
            best = best.max(v);
        }
        Ok(best)
    }

    // Kernels on padded-lattice indices; callers guarantee `p < lat.len()`.

    #[inline]
    pub(crate) fn phi_p(&self, p: usize, xi: [f64; 2]) -> f64 {
        let a = self.weight[p];
        match self.kind {
            NormKind::WeightedEuclidean => a * xi[0].hypot(xi[1]),
            NormKind::AnisotropicRiemannian => a * self.metric[p].quad(xi).max(0.0).sqrt(),
            NormKind::WeightedL1 => a * (xi[0].abs() + xi[1].abs()),
            NormKind::WeightedLinf => a * xi[0].abs().max(xi[1].abs()),
        }
    }

    #[inline]
    pub(crate) fn phi_dual_p(&self, p: usize, xi: [f64; 2]) -> f64 {
        let a = self.weight[p];
        match self.kind {
            NormKind::WeightedEuclidean => xi[0].hypot(xi[1]) / a,
            NormKind::AnisotropicRiemannian => self.metric_inv[p].quad(xi).max(0.0).sqrt() / a,
            NormKind::WeightedL1 => xi[0].abs().max(xi[1].abs()) / a,
            NormKind::WeightedLinf => (xi[0].abs() + xi[1].abs()) / a,
        }
    }

    /// `phi` minimized over the components flagged in `free` (bit 0 is x, bit 1 is y).
    #[inline]
    pub(crate) fn phi_free_p(&self, p: usize, xi: [f64; 2], free: u8) -> f64 {
        match free & 3 {
            0 => self.phi_p(p, xi),
            1 => xi[1].abs() / self.phi_dual_p(p, [0.0, 1.0]),
            2 => xi[0].abs() / self.phi_dual_p(p, [1.0, 0.0]),
            _ => 0.0,
        }
    }

    /// Projection onto the dual ball intersected with `b[k] = 0` for free axes `k`.
    #[inline]
    pub(crate) fn project_free_p(&self, p: usize, b: [f64; 2], free: u8) -> [f64; 2] {
        match free & 3 {
            0 => self.project_p(p, b),
            1 => {
                let r = 1.0 / self.phi_dual_p(p, [0.0, 1.0]);
                [0.0, b[1].clamp(-r, r)]
            }
            2 => {
                let r = 1.0 / self.phi_dual_p(p, [1.0, 0.0]);
                [b[0].clamp(-r, r), 0.0]
            }
            _ => [0.0, 0.0],
        }
    }

    #[inline]
    pub(crate) fn project_p(&self, p: usize, b: [f64; 2]) -> [f64; 2] {
        let a = self.weight[p];
        match self.kind {
            NormKind::WeightedEuclidean => {
                let r = b[0].hypot(b[1]);
                if r <= a {
                    b
                } else {
                    let s = a / r;
                    [b[0] * s, b[1] * s]
                }
            }
            NormKind::AnisotropicRiemannian => {
                if self.phi_dual_p(p, b) <= 1.0 {
                    return b;
                }
                let q = project_ellipse(b, self.metric_inv[p], a);
                let d = self.phi_dual_p(p, q);
                if d > 1.0 {
                    [q[0] / d, q[1] / d]
                } else {
                    q
                }
            }
            NormKind::WeightedL1 => [b[0].clamp(-a, a), b[1].clamp(-a, a)],
            NormKind::WeightedLinf => project_l1_ball(b, a),
        }
    }
}

/// Nearest point of `{q : q^T m q <= r^2}` to an outside point `b`.
///
/// The minimizer is `(I + mu m)^{-1} b`; `mu` solves the secular equation by
/// Newton's method, which converges monotonically from `mu = 0`.
fn project_ellipse(b: [f64; 2], m: Sym2, r: f64) -> [f64; 2] {
    let ((l0, v0), (l1, v1)) = m.eigen();
    let y = [b[0] * v0[0] + b[1] * v0[1], b[0] * v1[0] + b[1] * v1[1]];
    let lam = [l0, l1];
    let r2 = r * r;
    let mut mu = 0.0f64;
    for _ in 0..200 {
        let mut g = -r2;
        let mut dg = 0.0;
        for k in 0..2 {
            let den = 1.0 + mu * lam[k];
            g += lam[k] * y[k] * y[k] / (den * den);
            dg -= 2.0 * lam[k] * lam[k] * y[k] * y[k] / (den * den * den);
        }
        if g <= r2 * 1e-15 || dg == 0.0 {
            break;
        }
        let next = mu - g / dg;
        if next <= mu {
            break;
        }
        mu = next;
    }
    let x0 = y[0] / (1.0 + mu * l0);
    let x1 = y[1] / (1.0 + mu * l1);
    [x0 * v0[0] + x1 * v1[0], x0 * v0[1] + x1 * v1[1]]
}

/// Euclidean projection of a 2-vector onto the l1 ball of radius `r`.
fn project_l1_ball(b: [f64; 2], r: f64) -> [f64; 2] {
    let (m0, m1) = (b[0].abs(), b[1].abs());
    if m0 + m1 <= r {
        return b;
    }
    let (hi, lo) = if m0 >= m1 { (m0, m1) } else { (m1, m0) };
    // Soft threshold: both coordinates survive unless the gap exceeds r.
    let theta = if hi - lo < r { 0.5 * (hi + lo - r) } else { hi - r };
    let shrink = |v: f64| v.signum() * (v.abs() - theta).max(0.0);
    [shrink(b[0]), shrink(b[1])]
}
