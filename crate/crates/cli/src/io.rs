//! Field CSV files, certificate JSON and gap histories.
//!
//! Field files start with a comment line `# nx=<nx> ny=<ny> h=<h>` followed
//! by a CSV table in row-major order (`j` outer, `i` inner). Scalar files
//! hold mask cells with columns `i,j,x,y,u`; dual files also hold exterior
//! band cells (coordinates may be `-1`) with columns `i,j,x,y,n1,n2`.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use parea_core::{Certificate, GapRecord, GridDomain, ScalarField, SolveReport, VectorField};
use serde_json::{Map, Value};

fn header(dom: &GridDomain) -> String {
    format!("# nx={} ny={} h={}\n", dom.nx(), dom.ny(), dom.h())
}

fn check_header(line: &str, dom: &GridDomain, path: &Path) -> Result<()> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| anyhow!("{}: line 1: expected '# nx=.. ny=.. h=..'", path.display()))?;
    let mut nx = None;
    let mut ny = None;
    let mut h = None;
    for tok in body.split_whitespace() {
        match tok.split_once('=') {
            Some(("nx", v)) => nx = v.parse::<usize>().ok(),
            Some(("ny", v)) => ny = v.parse::<usize>().ok(),
            Some(("h", v)) => h = v.parse::<f64>().ok(),
            _ => bail!("{}: line 1: unexpected header token {tok:?}", path.display()),
        }
    }
    match (nx, ny, h) {
        (Some(nx), Some(ny), Some(h)) if nx == dom.nx() && ny == dom.ny() && h == dom.h() => Ok(()),
        (Some(nx), Some(ny), Some(h)) => bail!(
            "{}: line 1: field is nx={nx} ny={ny} h={h}, problem is nx={} ny={} h={}",
            path.display(),
            dom.nx(),
            dom.ny(),
            dom.h()
        ),
        _ => bail!("{}: line 1: header needs nx, ny and h", path.display()),
    }
}

fn support_cells(dom: &GridDomain) -> Vec<(isize, isize)> {
    let mut v = Vec::new();
    for j in -1..=dom.ny() as isize {
        for i in -1..=dom.nx() as isize {
            if dom.in_mask(i, j) || dom.in_band(i, j) {
                v.push((i, j));
            }
        }
    }
    v
}

pub fn write_scalar_csv(path: &Path, dom: &GridDomain, u: &ScalarField) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(header(dom).as_bytes())?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["i", "j", "x", "y", "u"])?;
    for j in 0..dom.ny() as isize {
        for i in 0..dom.nx() as isize {
            if dom.in_mask(i, j) {
                let c = dom.center(i, j);
                w.write_record([i.to_string(), j.to_string(), c[0].to_string(), c[1].to_string(), u.get(i, j).to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv(path: &Path, dom: &GridDomain, n: &VectorField) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(header(dom).as_bytes())?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["i", "j", "x", "y", "n1", "n2"])?;
    for (i, j) in support_cells(dom) {
        let c = dom.center(i, j);
        let v = n.get(i, j);
        w.write_record([
            i.to_string(),
            j.to_string(),
            c[0].to_string(),
            c[1].to_string(),
            v[0].to_string(),
            v[1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A parsed data row: `(line, i, j, values)`.
type Row = (usize, isize, isize, Vec<f64>);

fn read_table(path: &Path, dom: &GridDomain, columns: &[&str]) -> Result<Vec<Row>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    check_header(first.trim_end(), dom, path)?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    let hdr = r.headers()?.clone();
    if hdr.iter().collect::<Vec<_>>() != columns {
        bail!("{}: line 2: expected columns {}", path.display(), columns.join(","));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 3;
        let rec = rec.with_context(|| format!("{}: line {line}", path.display()))?;
        if rec.len() != columns.len() {
            bail!("{}: line {line}: expected {} values, got {}", path.display(), columns.len(), rec.len());
        }
        let i: isize = rec[0].trim().parse().with_context(|| format!("{}: line {line}: bad i", path.display()))?;
        let j: isize = rec[1].trim().parse().with_context(|| format!("{}: line {line}: bad j", path.display()))?;
        let mut vals = Vec::with_capacity(columns.len() - 4);
        for c in 4..columns.len() {
            let v: f64 = rec[c]
                .trim()
                .parse()
                .with_context(|| format!("{}: line {line}: bad {} value {:?}", path.display(), columns[c], &rec[c]))?;
            vals.push(v);
        }
        rows.push((line, i, j, vals));
    }
    Ok(rows)
}

/// Reads a scalar field; every mask cell must appear exactly once.
pub fn read_scalar_csv(path: &Path, dom: &GridDomain) -> Result<ScalarField> {
    let rows = read_table(path, dom, &["i", "j", "x", "y", "u"])?;
    let mut u = ScalarField::zeros(dom.lattice());
    let mut seen = HashSet::new();
    for (line, i, j, v) in rows {
        if !dom.in_mask(i, j) {
            bail!("{}: line {line}: cell ({i}, {j}) is not in the mask", path.display());
        }
        if !seen.insert((i, j)) {
            bail!("{}: line {line}: cell ({i}, {j}) appears twice", path.display());
        }
        u.set(i, j, v[0]);
    }
    if seen.len() != dom.cell_count() {
        bail!("{}: {} of {} mask cells present", path.display(), seen.len(), dom.cell_count());
    }
    Ok(u)
}

/// Reads a dual field; cells may be mask or band cells, absent cells are zero.
pub fn read_vector_csv(path: &Path, dom: &GridDomain) -> Result<VectorField> {
    let rows = read_table(path, dom, &["i", "j", "x", "y", "n1", "n2"])?;
    let mut n = VectorField::zeros(dom.lattice());
    let mut seen = HashSet::new();
    for (line, i, j, v) in rows {
        if !(dom.in_mask(i, j) || dom.in_band(i, j)) {
            bail!("{}: line {line}: cell ({i}, {j}) is neither a mask nor a band cell", path.display());
        }
        if !seen.insert((i, j)) {
            bail!("{}: line {line}: cell ({i}, {j}) appears twice", path.display());
        }
        n.set(i, j, [v[0], v[1]]);
    }
    Ok(n)
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// Flat JSON object with every certificate entry, the verdict and, when
/// given, the solver summary.
pub fn certificate_json(cert: &Certificate, report: Option<&SolveReport>) -> Value {
    let mut m = Map::new();
    for (k, v) in cert.entries() {
        let v = match k {
            "dual" if cert.dual.is_none() => Value::Null,
            "active_cell_count" => Value::from(cert.active_cell_count),
            "detached_faces" => Value::from(cert.detached_faces),
            _ => num(v),
        };
        m.insert(k.to_string(), v);
    }
    m.insert("certified".into(), Value::Bool(cert.certified));
    m.insert("failures".into(), Value::from(cert.failures.clone()));
    if let Some(r) = report {
        m.insert("converged".into(), Value::Bool(r.converged));
        m.insert("diverged".into(), Value::Bool(r.diverged));
        m.insert("iterations".into(), Value::from(r.iterations));
        m.insert("best_iter".into(), Value::from(r.best_iter));
        m.insert("repair_magnitude".into(), num(r.repair_magnitude));
        m.insert("existence_satisfied".into(), Value::Bool(r.existence.satisfied));
        m.insert("existence_margin".into(), num(r.existence.margin));
        m.insert("poincare_constant".into(), num(r.existence.c_omega));
    }
    Value::Object(m)
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let s = serde_json::to_string_pretty(v)?;
    std::fs::write(path, s + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_gap_history(path: &Path, h: &[GapRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["iter", "primal", "dual", "gap"])?;
    for r in h {
        w.write_record([
            r.iter.to_string(),
            r.primal.to_string(),
            r.dual.map(|d| d.to_string()).unwrap_or_default(),
            r.gap.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use parea_core::heisenberg_drift;

    fn l_shape() -> GridDomain {
        let mask: Vec<bool> = (0..12).map(|k| !(k % 4 >= 2 && k / 4 >= 1)).collect();
        GridDomain::new(4, 3, 1.0 / 3.0, &mask).unwrap()
    }

    #[test]
    fn scalar_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let d = l_shape();
        let u = ScalarField::from_fn(&d, |i, j| (i as f64 * 0.1 + 1.0 / 3.0).sin() * (j as f64 + 0.7).exp() * 1e-7);
        let p = dir.path().join("u.csv");
        write_scalar_csv(&p, &d, &u).unwrap();
        assert_eq!(read_scalar_csv(&p, &d).unwrap(), u);
    }

    #[test]
    fn vector_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let d = l_shape();
        let n = heisenberg_drift(&d).scale(1.0 / 7.0);
        let p = dir.path().join("n.csv");
        write_vector_csv(&p, &d, &n).unwrap();
        assert_eq!(read_vector_csv(&p, &d).unwrap(), n);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let d = l_shape();
        let p = dir.path().join("u.csv");
        write_scalar_csv(&p, &d, &ScalarField::zeros(d.lattice())).unwrap();
        let other = GridDomain::rectangle(4, 4, 0.25).unwrap();
        let e = read_scalar_csv(&p, &other).unwrap_err().to_string();
        assert!(e.contains("line 1") && e.contains("nx=4 ny=3"), "{e}");
        std::fs::write(&p, "# nx=4 ny=3 h=0.3333333333333333\ni,j,x,y,u\n0,0,0,0,abc\n").unwrap();
        let e = format!("{:#}", read_scalar_csv(&p, &d).unwrap_err());
        assert!(e.contains("line 3"), "{e}");
    }
}
