//! Plain-text space format:
//!
//! ```text
//! kappa=<v> metric=<linf|l1|l2|table>
//! <id> <x> <y> <mass>
//! ...
//! table
//! <ρ(1,0)>
//! <ρ(2,0)>,<ρ(2,1)>
//! ...
//! ```
//!
//! The `table` section is present only for `metric=table`. Lines starting
//! with `#` are comments. Comb spaces are written with global coordinates, so
//! points closer than ~1e-14 to a junction lose their exact local distances.

use std::io::{BufRead, Write};

use super::{make_grid_interval, FiniteSpace, Metric, NormKind};
use crate::error::{Error, Result};

pub fn write_space<W: Write>(space: &FiniteSpace, mut out: W) -> Result<()> {
    writeln!(out, "kappa={} metric={}", space.kappa(), space.metric_name())?;
    for i in 0..space.len() {
        let [x, y] = space.coords(i);
        writeln!(out, "{i} {x:.16e} {y:.16e} {:.16e}", space.mass(i))?;
    }
    if let Metric::Table { .. } = space.metric() {
        writeln!(out, "table")?;
        for i in 1..space.len() {
            let row: Vec<String> = (0..i).map(|j| format!("{:.16e}", space.dist(i, j))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn read_space<R: BufRead>(input: R) -> Result<FiniteSpace> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty() && !s.trim_start().starts_with('#')).unwrap_or(true));
    let (ln, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
    let header = header?;
    let mut kappa = None;
    let mut metric = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("kappa", v)) => kappa = Some(v.parse::<f64>().map_err(|_| perr(ln, "bad kappa"))?),
            Some(("metric", v)) => metric = Some(v.to_string()),
            _ => return Err(perr(ln, format!("unexpected header token `{tok}`"))),
        }
    }
    let kappa = kappa.ok_or_else(|| perr(ln, "missing kappa"))?;
    let metric = metric.ok_or_else(|| perr(ln, "missing metric"))?;

    let mut coords = Vec::new();
    let mut masses = Vec::new();
    let mut table: Option<Vec<f64>> = None;
    for (ln, line) in lines {
        let line = line?;
        let line = line.trim();
        if line == "table" {
            table = Some(Vec::new());
            continue;
        }
        if let Some(t) = table.as_mut() {
            for v in line.split(',') {
                t.push(v.trim().parse::<f64>().map_err(|_| perr(ln, "bad table entry"))?);
            }
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(perr(ln, "expected `id x y mass`"));
        }
        let id: usize = f[0].parse().map_err(|_| perr(ln, "bad id"))?;
        if id != coords.len() {
            return Err(perr(ln, format!("ids must be consecutive from 0, got {id}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| perr(ln, format!("bad number `{s}`")));
        coords.push([num(f[1])?, num(f[2])?]);
        masses.push(num(f[3])?);
    }
    match metric.as_str() {
        "table" => {
            let t = table.ok_or_else(|| perr(0, "metric=table needs a table section"))?;
            FiniteSpace::from_table(t, masses, kappa)
        }
        m => {
            let kind = match m {
                "linf" => NormKind::Linf,
                "l1" => NormKind::L1,
                "l2" => NormKind::L2,
                other => return Err(perr(1, format!("unknown metric `{other}`"))),
            };
            if let Some(g) = as_grid(&coords, &masses) {
                return Ok(g);
            }
            FiniteSpace::from_coords(kind, coords, masses)
        }
    }
}

/// Recognizes a file written from an equispaced grid.
fn as_grid(coords: &[[f64; 2]], masses: &[f64]) -> Option<FiniteSpace> {
    let n = coords.len();
    if n < 2 || coords.iter().any(|c| c[1] != 0.0) {
        return None;
    }
    let a = coords[0][0];
    let h = coords[1][0] - a;
    let fits = h > 0.0
        && coords.iter().enumerate().all(|(i, c)| (c[0] - (a + i as f64 * h)).abs() <= 1e-12 * (1.0 + c[0].abs()))
        && masses.iter().all(|m| (m - h).abs() <= 1e-12 * h);
    if !fits {
        return None;
    }
    make_grid_interval(a, a + n as f64 * h, n).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip() {
        let s = make_grid_interval(-1.0, 1.0, 16).unwrap();
        let mut buf = Vec::new();
        write_space(&s, &mut buf).unwrap();
        let t = read_space(&buf[..]).unwrap();
        assert!(t.grid().is_some());
        assert_eq!(t.len(), 16);
        assert_eq!(t.dist(0, 15), s.dist(0, 15));
    }

    #[test]
    fn table_round_trip() {
        let s = FiniteSpace::from_table(vec![1.0, 2.0, 1.5], vec![1.0, 2.0, 3.0], 2.0).unwrap();
        let mut buf = Vec::new();
        write_space(&s, &mut buf).unwrap();
        let t = read_space(&buf[..]).unwrap();
        assert_eq!(t.kappa(), 2.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.dist(i, j), s.dist(i, j));
            }
        }
    }

    #[test]
    fn malformed_input() {
        assert!(read_space("kappa=1\n".as_bytes()).is_err());
        assert!(read_space("kappa=1 metric=linf\n0 1 2\n".as_bytes()).is_err());
        assert!(read_space("kappa=1 metric=linf\n1 0 0 1\n".as_bytes()).is_err());
    }
}
