//! TOML problem files.
//!
//! Per-cell arrays are lists of rows with row `j = 0` first; each row lists
//! cells `i = 0..nx`. Mask rows are strings of `0` and `1` in the same order.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use parea_core::{
    heisenberg_drift, BoundaryCondition, GridDomain, NormKind, NormSpec, ProblemSpec, ScalarField, SolverParams, Sym2,
    VectorField, Window,
};
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    grid: Spanned<GridSection>,
    norm: Spanned<NormSection>,
    drift: Option<Spanned<DriftSection>>,
    source: Option<Spanned<SourceSection>>,
    bc: Spanned<BcSection>,
    solver: Option<Spanned<SolverSection>>,
    levelset: Option<Spanned<LevelsetSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    nx: usize,
    ny: usize,
    h: f64,
    mask: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScalarOrRows {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MetricInput {
    Constant([[f64; 2]; 2]),
    /// `[xx, xy, yy]` per cell.
    PerCell(Vec<Vec<[f64; 3]>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormSection {
    kind: String,
    a: Option<ScalarOrRows>,
    sigma0: Option<MetricInput>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum DriftPreset {
    Zero,
    Heisenberg,
    Explicit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftSection {
    preset: DriftPreset,
    x: Option<Vec<Vec<f64>>>,
    y: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    value: ScalarOrRows,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum BcKind {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum FacePreset {
    Ramp,
    Step,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BcSection {
    kind: BcKind,
    f: Option<Vec<f64>>,
    preset: Option<FacePreset>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    tau: Option<f64>,
    sigma: Option<f64>,
    theta: Option<f64>,
    tol_gap: Option<f64>,
    max_iter: Option<usize>,
    gap_check_stride: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelsetSection {
    /// `[i0, j0, w, h]`.
    window: [usize; 4],
}

/// A parsed problem file.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub spec: ProblemSpec,
    pub params: SolverParams,
    pub window: Option<Window>,
}

pub fn load_problem(path: &Path) -> Result<LoadedProblem> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_problem(&text).with_context(|| format!("in {}", path.display()))
}

struct Anchor<'a> {
    text: &'a str,
}

impl Anchor<'_> {
    fn line(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: std::ops::Range<usize>, section: &str, msg: impl std::fmt::Display) -> Result<T> {
        bail!("line {}: [{}] {}", self.line(span.start), section, msg)
    }
}

fn rows_to_extent(rows: &[Vec<f64>], nx: usize, ny: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
    if rows.len() != ny {
        return Err(format!("{what} has {} rows, expected ny = {ny}", rows.len()));
    }
    let mut v = Vec::with_capacity(nx * ny);
    for (j, r) in rows.iter().enumerate() {
        if r.len() != nx {
            return Err(format!("{what} row {j} has {} values, expected nx = {nx}", r.len()));
        }
        v.extend_from_slice(r);
    }
    Ok(v)
}

pub fn parse_problem(text: &str) -> Result<LoadedProblem> {
    let raw: RawFile = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
    let at = Anchor { text };

    let gspan = raw.grid.span();
    let g = raw.grid.into_inner();
    let (nx, ny) = (g.nx, g.ny);
    let mask: Vec<bool> = match &g.mask {
        None => vec![true; nx * ny],
        Some(rows) => {
            if rows.len() != ny {
                return at.err(gspan, "grid", format!("mask has {} rows, expected ny = {ny}", rows.len()));
            }
            let mut m = Vec::with_capacity(nx * ny);
            for (j, r) in rows.iter().enumerate() {
                if r.chars().count() != nx {
                    return at.err(gspan, "grid", format!("mask row {j} has {} characters, expected nx = {nx}", r.len()));
                }
                for c in r.chars() {
                    match c {
                        '1' => m.push(true),
                        '0' => m.push(false),
                        _ => return at.err(gspan, "grid", format!("mask row {j} contains {c:?}, expected 0 or 1")),
                    }
                }
            }
            m
        }
    };
    let dom = match GridDomain::new(nx, ny, g.h, &mask) {
        Ok(d) => d,
        Err(e) => return at.err(gspan, "grid", e),
    };

    let nspan = raw.norm.span();
    let n = raw.norm.into_inner();
    let kind = match NormKind::from_name(&n.kind) {
        Some(k) => k,
        None => {
            let names: Vec<&str> = NormKind::ALL.iter().map(|k| k.name()).collect();
            return at.err(nspan, "norm", format!("unknown kind {:?}, expected one of {}", n.kind, names.join(", ")));
        }
    };
    let weight = match &n.a {
        None => vec![1.0; nx * ny],
        Some(ScalarOrRows::Scalar(a)) => vec![*a; nx * ny],
        Some(ScalarOrRows::Rows(r)) => match rows_to_extent(r, nx, ny, "a") {
            Ok(v) => v,
            Err(e) => return at.err(nspan, "norm", e),
        },
    };
    let metric = match (&n.sigma0, kind) {
        (None, NormKind::AnisotropicRiemannian) => Some(vec![Sym2::IDENTITY; nx * ny]),
        (None, _) => None,
        (Some(_), k) if k != NormKind::AnisotropicRiemannian => {
            return at.err(nspan, "norm", format!("sigma0 only applies to anisotropic_riemannian, kind is {}", k.name()))
        }
        (Some(MetricInput::Constant(m)), _) => {
            if m[0][1] != m[1][0] {
                return at.err(nspan, "norm", "sigma0 must be symmetric");
            }
            Some(vec![Sym2 { xx: m[0][0], xy: m[0][1], yy: m[1][1] }; nx * ny])
        }
        (Some(MetricInput::PerCell(rows)), _) => {
            if rows.len() != ny || rows.iter().any(|r| r.len() != nx) {
                return at.err(nspan, "norm", format!("sigma0 must have {ny} rows of {nx} [xx, xy, yy] entries"));
            }
            Some(rows.iter().flatten().map(|m| Sym2 { xx: m[0], xy: m[1], yy: m[2] }).collect())
        }
    };
    let norm = match NormSpec::new(kind, nx, ny, weight, metric) {
        Ok(n) => n,
        Err(e) => return at.err(nspan, "norm", e),
    };

    let drift = match raw.drift {
        None => VectorField::zeros(dom.lattice()),
        Some(d) => {
            let span = d.span();
            let d = d.into_inner();
            if d.preset != DriftPreset::Explicit && (d.x.is_some() || d.y.is_some()) {
                return at.err(span, "drift", "x and y are only read with preset = \"explicit\"");
            }
            match d.preset {
                DriftPreset::Zero => VectorField::zeros(dom.lattice()),
                DriftPreset::Heisenberg => heisenberg_drift(&dom),
                DriftPreset::Explicit => {
                    let (Some(x), Some(y)) = (&d.x, &d.y) else {
                        return at.err(span, "drift", "preset = \"explicit\" needs both x and y");
                    };
                    let x = rows_to_extent(x, nx, ny, "x");
                    let y = rows_to_extent(y, nx, ny, "y");
                    match (x, y) {
                        (Ok(x), Ok(y)) => VectorField::from_fn_mask(&dom, |i, j| [x[j * nx + i], y[j * nx + i]]),
                        (Err(e), _) | (_, Err(e)) => return at.err(span, "drift", e),
                    }
                }
            }
        }
    };

    let source = match raw.source {
        None => ScalarField::zeros(dom.lattice()),
        Some(s) => {
            let span = s.span();
            match s.into_inner().value {
                ScalarOrRows::Scalar(c) => ScalarField::constant(&dom, c),
                ScalarOrRows::Rows(r) => match rows_to_extent(&r, nx, ny, "value") {
                    Ok(v) => ScalarField::from_extent(dom.lattice(), &v)?,
                    Err(e) => return at.err(span, "source", e),
                },
            }
        }
    };

    let bspan = raw.bc.span();
    let b = raw.bc.into_inner();
    let faces = dom.boundary_faces();
    let bc = match b.kind {
        BcKind::Neumann => {
            if b.f.is_some() || b.preset.is_some() {
                return at.err(bspan, "bc", "f and preset only apply to kind = \"dirichlet\"");
            }
            BoundaryCondition::Neumann
        }
        BcKind::Dirichlet => match (&b.f, b.preset) {
            (Some(f), None) => {
                if f.len() != faces.len() {
                    return at.err(bspan, "bc", format!("f has {} values, the mask has {} boundary faces", f.len(), faces.len()));
                }
                BoundaryCondition::Dirichlet(f.clone())
            }
            (None, Some(FacePreset::Ramp)) => BoundaryCondition::Dirichlet(faces.iter().map(|f| f.midpoint[0]).collect()),
            (None, Some(FacePreset::Step)) => {
                let mid = 0.5 * nx as f64 * g.h;
                BoundaryCondition::Dirichlet(faces.iter().map(|f| if f.midpoint[0] >= mid { 1.0 } else { 0.0 }).collect())
            }
            _ => return at.err(bspan, "bc", "dirichlet needs exactly one of f or preset"),
        },
    };

    let spec = match ProblemSpec::new(dom, norm, drift, source, bc) {
        Ok(s) => s,
        Err(e) => return at.err(bspan, "bc", e),
    };

    let mut params = SolverParams::for_domain(spec.dom());
    if let Some(s) = raw.solver {
        let span = s.span();
        let s = s.into_inner();
        if let Some(v) = s.tau {
            params.tau = v;
        }
        if let Some(v) = s.sigma {
            params.sigma = v;
        }
        if let Some(v) = s.theta {
            params.theta = v;
        }
        if let Some(v) = s.tol_gap {
            params.tol_gap = v;
        }
        if let Some(v) = s.max_iter {
            params.max_iter = v;
        }
        if let Some(v) = s.gap_check_stride {
            params.gap_check_stride = v;
        }
        if let Err(e) = params.validate(spec.dom()) {
            return at.err(span, "solver", e);
        }
    }

    let window = raw.levelset.map(|l| {
        let [i0, j0, w, h] = l.into_inner().window;
        Window::new(i0, j0, w, h)
    });

    Ok(LoadedProblem { spec, params, window })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAMP: &str = r#"
[grid]
nx = 4
ny = 4
h = 0.25

[norm]
kind = "weighted_euclidean"
a = 1.0

[bc]
kind = "dirichlet"
preset = "ramp"
"#;

    #[test]
    fn parses_minimal_file() {
        let p = parse_problem(RAMP).unwrap();
        assert_eq!(p.spec.dom().cell_count(), 16);
        assert!(!p.spec.is_neumann());
        assert!(p.window.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let bad = RAMP.replace("a = 1.0", "a = 1.0\ncolour = 3");
        let e = format!("{:#}", parse_problem(&bad).unwrap_err());
        assert!(e.contains("colour") && e.contains("line"), "{e}");
    }

    #[test]
    fn mask_and_rows_are_checked() {
        let bad = RAMP.replace("h = 0.25", "h = 0.25\nmask = [\"1111\", \"1111\", \"111\", \"1111\"]");
        let e = format!("{:#}", parse_problem(&bad).unwrap_err());
        assert!(e.starts_with("line 2: [grid] mask row 2"), "{e}");
        let bad = RAMP.replace("a = 1.0", "a = [[1.0, 1.0]]");
        let e = format!("{:#}", parse_problem(&bad).unwrap_err());
        assert!(e.contains("[norm] a has 1 rows"), "{e}");
    }

    #[test]
    fn step_rule_is_named() {
        let bad = format!("{RAMP}\n[solver]\ntau = 1.0\nsigma = 1.0\n");
        let e = format!("{:#}", parse_problem(&bad).unwrap_err());
        assert!(e.contains("tau * sigma * L^2 <= 1") && e.contains("[solver]"), "{e}");
    }

    #[test]
    fn presets_and_explicit_fields() {
        let text = r#"
[grid]
nx = 2
ny = 2
h = 0.5
mask = ["11", "10"]

[norm]
kind = "anisotropic_riemannian"
sigma0 = [[2.0, 0.5], [0.5, 1.0]]

[drift]
preset = "explicit"
x = [[1.0, 2.0], [3.0, 4.0]]
y = [[0.0, 0.0], [0.0, 0.0]]

[source]
value = [[0.1, 0.2], [0.3, 0.0]]

[bc]
kind = "dirichlet"
preset = "step"

[levelset]
window = [0, 0, 2, 2]
"#;
        let p = parse_problem(text).unwrap();
        assert_eq!(p.spec.dom().cell_count(), 3);
        assert_eq!(p.spec.drift().get(1, 0), [2.0, 0.0]);
        assert_eq!(p.spec.drift().get(1, 1), [0.0, 0.0]);
        assert_eq!(p.spec.source().get(0, 1), 0.3);
        assert_eq!(p.window, Some(Window::new(0, 0, 2, 2)));
    }
}
