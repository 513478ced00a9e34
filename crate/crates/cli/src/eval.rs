//! Tabulating potentials, metrics, momenta and lifts on grids.

use std::io::Write;

use kahler_toric::families::ExponentialFamily;
use kahler_toric::lifts::{parse_lift, LiftMap};
use kahler_toric::potential::SharedPotential;
use kahler_toric::torification::projective::normalize;
use kahler_toric::torification::{make_factorization, TargetGeometry, ToricFactorization};
use kahler_toric::{Complex, Result, Vector};
use serde::Serialize;

use crate::config::{resolve, CheckName, ConfigError, Subject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum What {
    Potential,
    Metric,
    Momentum,
    Lift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Parses `axis;axis;…` where an axis is `start:stop:count` or a comma list.
/// A blank spec is the empty grid.
pub fn parse_grid(spec: &str) -> std::result::Result<Vec<Vec<f64>>, ConfigError> {
    if spec.trim().is_empty() {
        return Ok(Vec::new());
    }
    spec.split(';').map(parse_axis).collect()
}

fn parse_axis(axis: &str) -> std::result::Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError(format!("bad grid axis `{axis}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let axis = axis.trim();
    if axis.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = axis.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let (a, b) = (num(start)?, num(stop)?);
            let k: usize = count.trim().parse().map_err(|_| bad())?;
            Ok(match k {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect(),
            })
        }
        [_] => axis.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

/// Cartesian product, first axis slowest.
pub fn grid_points(axes: &[Vec<f64>]) -> Vec<Vector> {
    if axes.is_empty() || axes.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points.into_iter().flat_map(|p| axis.iter().map(move |&v| [p.clone(), vec![v]].concat())).collect();
    }
    points.into_iter().map(Vector::from_vec).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Complex(Complex),
    Empty,
    Text(String),
}

pub fn fmt_complex(z: Complex) -> String {
    if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Complex(z) => fmt_complex(*z),
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) => s.serialize_f64(*v),
            Cell::Empty => s.serialize_none(),
            other => s.serialize_str(&other.text()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write<W: Write>(&self, out: W, format: Format) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text))?;
                }
                w.flush()
            }
            Format::Json => {
                let objects: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|row| {
                        self.header
                            .iter()
                            .cloned()
                            .zip(row.iter().map(|c| serde_json::to_value(c).expect("cells serialize")))
                            .collect()
                    })
                    .collect();
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, &objects)?;
                writeln!(out)
            }
        }
    }

    /// Rows whose status column is not `ok`.
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.last() != Some(&Cell::Text("ok".into()))).count()
    }
}

enum EvalSubject {
    Potential(SharedPotential),
    Momentum(Box<ToricFactorization>),
    ChartMomentum(TargetGeometry),
    Lift(Box<LiftMap>),
}

fn eval_subject(what: What, target: &str) -> std::result::Result<EvalSubject, ConfigError> {
    Ok(match what {
        What::Potential | What::Metric => match resolve(CheckName::DualFlatness, target)? {
            Subject::Family(f) => EvalSubject::Potential(f.potential()),
            Subject::Potential { potential, .. } => EvalSubject::Potential(potential),
            _ => unreachable!("dual-flatness resolves to potentials"),
        },
        What::Momentum => match resolve(CheckName::Momentum, target)? {
            Subject::Family(f) => {
                EvalSubject::Momentum(Box::new(make_factorization(&f).map_err(|e| ConfigError(e.to_string()))?))
            }
            Subject::Target(t) => EvalSubject::ChartMomentum(t),
            _ => unreachable!("momentum resolves to families or targets"),
        },
        What::Lift => EvalSubject::Lift(Box::new(parse_lift(target).map_err(|e| ConfigError(e.to_string()))?)),
    })
}

fn row_cells(subject: &EvalSubject, x: &Vector) -> Result<Vec<Cell>> {
    let nums = |v: &Vector| v.iter().map(|&a| Cell::Num(a)).collect::<Vec<_>>();
    match subject {
        EvalSubject::Potential(p) => {
            p.check_point(x)?;
            Ok(vec![Cell::Num(p.value(x))])
        }
        EvalSubject::Momentum(fact) => Ok(nums(&fact.momentum_at_theta(x)?)),
        EvalSubject::ChartMomentum(t) => Ok(nums(&t.momentum(&t.chart_point(x)?)?)),
        EvalSubject::Lift(l) => {
            let n = l.source.dim();
            let z: Vec<Complex> =
                (0..n).map(|k| Complex::new(x[k], if x.len() == 2 * n { x[n + k] } else { 0.0 })).collect();
            let w = normalize(&l.apply(&l.source.tau(&z)?)?);
            let mut cells: Vec<Cell> = w.into_iter().map(Cell::Complex).collect();
            cells.push(Cell::Num(l.lift_residual(&z)?));
            Ok(cells)
        }
    }
}

/// Evaluates on every grid point. Points outside the domain give a row with
/// empty values and the error in the `status` column.
pub fn evaluate(what: What, target: &str, grid: &str) -> std::result::Result<Table, ConfigError> {
    let subject = eval_subject(what, target)?;
    let axes = parse_grid(grid)?;
    let (dim, allowed) = match &subject {
        EvalSubject::Potential(p) => (p.dim(), vec![p.dim()]),
        EvalSubject::Momentum(f) => (f.dim(), vec![f.dim()]),
        EvalSubject::ChartMomentum(t) => (t.torus_dim(), vec![t.torus_dim()]),
        EvalSubject::Lift(l) => (l.source.dim(), vec![l.source.dim(), 2 * l.source.dim()]),
    };
    if !axes.is_empty() && !allowed.contains(&axes.len()) {
        return Err(ConfigError(format!("grid has {} axes, `{target}` needs {allowed:?}", axes.len())));
    }
    fn coords(prefix: &'static str, k: usize) -> impl Iterator<Item = String> {
        (1..=k).map(move |i| format!("{prefix}{i}"))
    }
    let mut header: Vec<String> = match &subject {
        EvalSubject::Lift(_) => coords("z", dim).collect(),
        _ => coords("x", dim).collect(),
    };
    let width = match &subject {
        EvalSubject::Potential(_) if what == What::Potential => {
            header.push("value".into());
            1
        }
        EvalSubject::Potential(_) => {
            header.extend((1..=dim).flat_map(|i| (1..=dim).map(move |j| format!("h{i}_{j}"))));
            dim * dim
        }
        EvalSubject::Momentum(_) | EvalSubject::ChartMomentum(_) => {
            header.extend(coords("mu", dim));
            dim
        }
        EvalSubject::Lift(l) => {
            let k = l.target.target.ambient_dim();
            header.extend((0..k).map(|i| format!("w{i}")));
            header.push("lift_residual".into());
            k + 1
        }
    };
    header.push("status".into());

    let mut rows = Vec::new();
    for x in grid_points(&axes) {
        let mut row: Vec<Cell> = match &subject {
            EvalSubject::Lift(_) => (0..dim)
                .map(|k| Cell::Complex(Complex::new(x[k], if x.len() == 2 * dim { x[dim + k] } else { 0.0 })))
                .collect(),
            _ => x.iter().map(|&v| Cell::Num(v)).collect(),
        };
        let values = match (&subject, what) {
            (EvalSubject::Potential(p), What::Metric) => {
                p.check_point(&x).map(|_| p.hessian(&x).transpose().iter().map(|&v| Cell::Num(v)).collect())
            }
            _ => row_cells(&subject, &x),
        };
        match values {
            Ok(v) => {
                row.extend(v);
                row.push(Cell::Text("ok".into()));
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(Cell::Empty, width));
                row.push(Cell::Text(e.to_string()));
            }
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Families accepted by `--target` in evaluations, for help texts.
pub fn family_names() -> Vec<&'static str> {
    ExponentialFamily::catalog().iter().map(|f| f.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![vec![-1.0, 0.0, 1.0]]);
        assert_eq!(parse_grid("0,2;5").unwrap(), vec![vec![0.0, 2.0], vec![5.0]]);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1:2").is_err());
        assert_eq!(grid_points(&parse_grid("0,1;2,3").unwrap()).len(), 4);
        assert_eq!(grid_points(&parse_grid("0:1:0").unwrap()).len(), 0);
    }

    #[test]
    fn categorical_potential_values() {
        let t = evaluate(What::Potential, "categorical:1", "-1,0,1").unwrap();
        assert_eq!(t.header, vec!["x1", "value", "status"]);
        for (row, theta) in t.rows.iter().zip([-1.0f64, 0.0, 1.0]) {
            match row[1] {
                Cell::Num(v) => assert!((v - theta.exp().ln_1p()).abs() < 1e-15),
                _ => panic!("missing value"),
            }
        }
    }

    #[test]
    fn projective_momentum_in_range() {
        let t = evaluate(What::Momentum, "projective:1:1", "-0.5:0.5:11").unwrap();
        assert_eq!(t.rows.len(), 11);
        for row in &t.rows {
            match row[1] {
                Cell::Num(v) => assert!(v > -4.0 * PI && v < 0.0),
                _ => panic!("missing value"),
            }
        }
    }

    #[test]
    fn out_of_domain_rows_are_flagged() {
        let t = evaluate(What::Potential, "negative-binomial:2", "-1,0.5").unwrap();
        assert_eq!(t.failed_rows(), 1);
        assert_eq!(t.rows[1][1], Cell::Empty);
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let t = evaluate(What::Metric, "binomial:2", "").unwrap();
        assert!(t.rows.is_empty());
        let mut buf = Vec::new();
        t.write(&mut buf, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,h1_1,status\n");
    }

    #[test]
    fn complex_cells() {
        assert_eq!(fmt_complex(Complex::new(1.0, -2.5)), "1-2.5i");
        assert_eq!(fmt_complex(Complex::new(0.5, 0.0)), "0.5+0i");
        let t = evaluate(What::Lift, "veronese:2", "0;0").unwrap();
        assert_eq!(t.header.len(), 1 + 3 + 2);
        assert_eq!(t.rows[0][0], Cell::Complex(Complex::new(0.0, 0.0)));
    }
}
