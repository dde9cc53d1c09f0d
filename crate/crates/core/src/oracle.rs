//! Brute-force references for tiny instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::levelset::{set_min, CellSet, Region, Window};
use crate::par::{self, Parallelism};
use crate::problem::{energy_parts_with, ProblemSpec};

/// Largest number of candidates a quantized search may visit.
pub const SEARCH_BUDGET: u64 = 10_000_000;

/// Quantized field search: every mask cell takes one of `levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSearchSpec {
    pub levels: Vec<f64>,
    pub max_cells: usize,
}

impl QuantizedSearchSpec {
    pub fn new(levels: Vec<f64>, max_cells: usize) -> Result<QuantizedSearchSpec> {
        if levels.is_empty() || levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("levels must be a non-empty list of finite values".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("levels must be strictly increasing".into()));
        }
        if max_cells > 10 {
            return Err(Error::Budget(format!("max_cells is {max_cells}, the cap is 10")));
        }
        Ok(QuantizedSearchSpec { levels, max_cells })
    }

    /// `levels` equally spaced values from `lo` to `hi`.
    pub fn uniform(lo: f64, hi: f64, levels: usize, max_cells: usize) -> Result<QuantizedSearchSpec> {
        if levels < 2 {
            return Err(Error::Input("need at least two levels".into()));
        }
        let v = (0..levels).map(|k| lo + (hi - lo) * k as f64 / (levels - 1) as f64).collect();
        QuantizedSearchSpec::new(v, max_cells)
    }

    fn uniformly_spaced(&self) -> bool {
        if self.levels.len() < 3 {
            return true;
        }
        let d = self.levels[1] - self.levels[0];
        self.levels.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-12 * d.abs().max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMin {
    /// Minimizer; mean-free for Neumann problems.
    pub u_star: ScalarField,
    pub value: f64,
}

/// Exhaustive minimum of the primal energy over quantized fields.
///
/// Candidates are numbered in odometer order with mask cell 0 as the most
/// significant digit; ties go to the lowest number.
pub fn brute_force_primal(spec: &ProblemSpec, q: &QuantizedSearchSpec) -> Result<QuantizedMin> {
    brute_force_primal_with(spec, q, Parallelism::default())
}

pub fn brute_force_primal_with(spec: &ProblemSpec, q: &QuantizedSearchSpec, par: Parallelism) -> Result<QuantizedMin> {
    let dom = spec.dom();
    let cells = dom.mask_indices().to_vec();
    let n = cells.len();
    if n > q.max_cells {
        return Err(Error::Budget(format!("{n} mask cells exceed max_cells = {}", q.max_cells)));
    }
    let base = q.levels.len() as u64;
    let count = (0..n).try_fold(1u64, |acc, _| acc.checked_mul(base).filter(|&c| c <= SEARCH_BUDGET));
    let count = count.ok_or_else(|| {
        Error::Budget(format!("{} levels over {n} cells exceed {SEARCH_BUDGET} candidates", q.levels.len()))
    })?;
    // Shifts by a level step give the same mean-free field; keep one per class.
    let dedup = spec.is_neumann() && q.uniformly_spaced();
    let field = |k: u64| -> (ScalarField, bool) {
        let mut u = ScalarField::zeros(dom.lattice());
        let mut rest = k;
        let mut min_digit = u64::MAX;
        for idx in (0..n).rev() {
            let d = rest % base;
            rest /= base;
            min_digit = min_digit.min(d);
            u.raw_mut()[cells[idx]] = q.levels[d as usize];
        }
        (u, n == 0 || min_digit == 0)
    };
    let best = par::argmin_indexed(par, count, |k| {
        let (u, canonical) = field(k);
        if dedup && !canonical {
            return None;
        }
        energy_parts_with(spec, &u, Parallelism::Sequential).ok().map(|e| e.total())
    });
    let (value, k) = best.ok_or_else(|| Error::Input("no candidate has finite energy".into()))?;
    let (mut u_star, _) = field(k);
    if spec.is_neumann() {
        u_star.remove_mean(dom);
    }
    Ok(QuantizedMin { u_star, value })
}

/// Exact minimizer of the in-domain set energy over sets agreeing with
/// `fixed` outside the mask cells of `window`.
pub fn brute_force_set_min(spec: &ProblemSpec, fixed: &CellSet, window: Window) -> Result<(CellSet, f64)> {
    set_min(spec, fixed, window, Region::Omega, Parallelism::default())
}

/// Largest midpoint-convexity violation `I((u+v)/2) - (I(u)+I(v))/2` over
/// random pairs with mask values in `[-1, 1]`.
pub fn convexity_probe(spec: &ProblemSpec, trials: usize) -> f64 {
    convexity_probe_with(spec, trials, 0)
}

pub fn convexity_probe_with(spec: &ProblemSpec, trials: usize, seed: u64) -> f64 {
    let dom = spec.dom();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let energy = |u: &ScalarField| energy_parts_with(spec, u, Parallelism::Sequential).map(|e| e.total());
    for _ in 0..trials {
        let u = ScalarField::from_fn(dom, |_, _| rng.gen_range(-1.0..=1.0));
        let v = ScalarField::from_fn(dom, |_, _| rng.gen_range(-1.0..=1.0));
        let mid = u.axpy(1.0, &v).map(|x| 0.5 * x);
        if let (Ok(a), Ok(b), Ok(m)) = (energy(&u), energy(&v), energy(&mid)) {
            worst = worst.max(m - 0.5 * (a + b));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDomain, VectorField};
    use crate::norm::{NormKind, NormSpec};
    use crate::problem::BoundaryCondition;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, m: usize, kind: NormKind, h_src: f64, bc: BoundaryCondition) -> ProblemSpec {
        let dom = GridDomain::rectangle(n, m, 1.0).unwrap();
        let norm = NormSpec::uniform(kind, n, m, 1.0).unwrap();
        let z = VectorField::zeros(dom.lattice());
        let s = ScalarField::constant(&dom, h_src);
        ProblemSpec::new(dom, norm, z, s, bc).unwrap()
    }

    #[test]
    fn zero_problem() {
        let s = spec(2, 2, NormKind::WeightedEuclidean, 0.0, BoundaryCondition::Dirichlet(vec![0.0; 8]));
        let q = QuantizedSearchSpec::uniform(-1.0, 1.0, 5, 10).unwrap();
        let r = brute_force_primal(&s, &q).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.u_star.mask_values(s.dom()).all(|v| v == 0.0));
    }

    #[test]
    fn single_cell_two_levels() {
        let s = spec(1, 1, NormKind::WeightedL1, 0.0, BoundaryCondition::Dirichlet(vec![1.0; 4]));
        let q = QuantizedSearchSpec::new(vec![0.0, 1.0], 10).unwrap();
        let r = brute_force_primal(&s, &q).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.u_star.get(0, 0), 1.0);
        let zero = ScalarField::zeros(s.dom().lattice());
        assert_abs_diff_eq!(crate::problem::energy_primal(&s, &zero).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn neumann_dedup_matches_full_search() {
        let s = spec(2, 2, NormKind::WeightedL1, 0.0, BoundaryCondition::Neumann);
        let s = {
            let dom = s.dom().clone();
            let src = ScalarField::from_fn(&dom, |i, j| [0.3, -0.2, 0.5, -0.6][j * 2 + i]);
            ProblemSpec::new(dom, s.norm().clone(), VectorField::zeros(s.dom().lattice()), src, BoundaryCondition::Neumann)
                .unwrap()
        };
        let uni = QuantizedSearchSpec::uniform(-1.0, 1.0, 5, 10).unwrap();
        let a = brute_force_primal(&s, &uni).unwrap();
        let mut q = uni.clone();
        q.levels[4] = 1.0 + 1e-3;
        let b = brute_force_primal(&s, &q).unwrap();
        assert!(a.value.is_finite() && b.value <= a.value + 1e-12);
        assert_abs_diff_eq!(a.u_star.mean(s.dom()), 0.0, epsilon = 1e-12);
        assert_eq!(a, brute_force_primal_with(&s, &uni, Parallelism::Sequential).unwrap());
    }

    #[test]
    fn budget_errors() {
        let s = spec(4, 3, NormKind::WeightedL1, 0.0, BoundaryCondition::Neumann);
        let q = QuantizedSearchSpec::uniform(-1.0, 1.0, 3, 10).unwrap();
        assert!(matches!(brute_force_primal(&s, &q), Err(Error::Budget(_))));
        let s = spec(3, 3, NormKind::WeightedL1, 0.0, BoundaryCondition::Neumann);
        let q = QuantizedSearchSpec::uniform(-1.0, 1.0, 7, 10).unwrap();
        assert!(matches!(brute_force_primal(&s, &q), Err(Error::Budget(_))));
        assert!(QuantizedSearchSpec::uniform(0.0, 1.0, 2, 11).is_err());
    }

    #[test]
    fn set_min_examples() {
        let s = spec(4, 4, NormKind::WeightedL1, 0.0, BoundaryCondition::Neumann);
        let full = CellSet::full(s.dom());
        let (e, v) = brute_force_set_min(&s, &full, Window::empty()).unwrap();
        assert_eq!((e, v), (full.clone(), 0.0));
        let (e, _) = brute_force_set_min(&s, &full, Window::new(1, 1, 2, 2)).unwrap();
        assert_eq!(e, full);
        // A large positive source outweighs the eight faces a hole adds.
        let hot = {
            let dom = s.dom().clone();
            let src = ScalarField::from_fn(&dom, |i, j| if (1..3).contains(&i) && (1..3).contains(&j) { 10.0 } else { 0.0 });
            ProblemSpec::new(dom, s.norm().clone(), VectorField::zeros(s.dom().lattice()), src, BoundaryCondition::Neumann)
                .unwrap()
        };
        let (e, v) = brute_force_set_min(&hot, &full, Window::new(1, 1, 2, 2)).unwrap();
        assert_eq!(e, CellSet::from_fn(4, 4, |i, j| !((1..3).contains(&i) && (1..3).contains(&j))));
        assert_abs_diff_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn convexity() {
        let s = spec(6, 6, NormKind::WeightedEuclidean, 0.3, BoundaryCondition::Neumann);
        assert!(convexity_probe(&s, 1000) <= 1e-10);
        assert_eq!(convexity_probe_with(&s, 50, 4), convexity_probe_with(&s, 50, 4));
        let dom = s.dom().clone();
        let bad = NormSpec::new_unchecked(NormKind::WeightedL1, 6, 6, vec![-1.0; 36], None);
        let z = VectorField::zeros(dom.lattice());
        let b = ProblemSpec::new(dom.clone(), bad, z, ScalarField::zeros(dom.lattice()), BoundaryCondition::Neumann).unwrap();
        assert!(convexity_probe(&b, 20) > 1e-3);
    }
}
