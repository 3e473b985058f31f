//! Numeric comparison of CSV artifacts against a golden directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Relative tolerance per column name, overriding `rtol`.
    pub columns: BTreeMap<String, f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, columns: BTreeMap::new() }
    }
}

impl Tolerances {
    fn accepts(&self, column: &str, got: f64, want: f64) -> bool {
        if got == want {
            return true;
        }
        if got.is_nan() || want.is_nan() {
            return got.is_nan() && want.is_nan();
        }
        let rtol = self.columns.get(column).copied().unwrap_or(self.rtol);
        (got - want).abs() <= self.atol + rtol * want.abs()
    }
}

fn compare_csv(name: &str, got: &str, want: &str, tol: &Tolerances, out: &mut Vec<String>) {
    let (gl, wl): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    if gl.first() != wl.first() {
        out.push(format!("{name}: header differs: `{}` vs `{}`", gl.first().unwrap_or(&""), wl.first().unwrap_or(&"")));
        return;
    }
    if gl.len() != wl.len() {
        out.push(format!("{name}: {} rows, golden has {}", gl.len().saturating_sub(1), wl.len().saturating_sub(1)));
        return;
    }
    let header: Vec<&str> = wl.first().map(|h| h.split(',').collect()).unwrap_or_default();
    for (row, (g, w)) in gl.iter().zip(&wl).enumerate().skip(1) {
        let (gc, wc): (Vec<&str>, Vec<&str>) = (g.split(',').collect(), w.split(',').collect());
        if gc.len() != wc.len() {
            out.push(format!("{name}:{row}: {} cells, golden has {}", gc.len(), wc.len()));
            continue;
        }
        for (col, (a, b)) in gc.iter().zip(&wc).enumerate() {
            let column = header.get(col).copied().unwrap_or("");
            let ok = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => tol.accepts(column, x, y),
                _ => a == b,
            };
            if !ok {
                out.push(format!("{name}:{row}:{column}: {a} vs golden {b}"));
            }
        }
    }
}

/// Compares every CSV of `golden` with the file of the same name in
/// `artifacts`. Returns one line per difference; empty means identical
/// within tolerance.
pub fn compare_golden(artifacts: &Path, golden: &Path, tol: &Tolerances) -> Result<Vec<String>, CliError> {
    let read_dir = |p: &Path| {
        fs::read_dir(p).map_err(|e| CliError::Usage(format!("cannot read directory {}: {e}", p.display())))
    };
    let mut names: Vec<String> = read_dir(golden)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    read_dir(artifacts)?;
    let mut out = Vec::new();
    if names.is_empty() {
        out.push(format!("golden directory {} holds no CSV files", golden.display()));
    }
    for name in names {
        let want = fs::read_to_string(golden.join(&name)).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        match fs::read_to_string(artifacts.join(&name)) {
            Ok(got) => compare_csv(&name, &got, &want, tol, &mut out),
            Err(_) => out.push(format!("{name}: missing from artifacts")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff(got: &str, want: &str, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        compare_csv("a.csv", got, want, tol, &mut out);
        out
    }

    #[test]
    fn numeric_cells_use_tolerances() {
        let t = Tolerances::default();
        let want = "t,x,pass\n1e0,2.5e0,true\n";
        assert!(diff(want, want, &t).is_empty());
        assert!(diff("t,x,pass\n1e0,2.5000000000001e0,true\n", want, &t).is_empty());
        assert_eq!(diff("t,x,pass\n1e0,2.6e0,true\n", want, &t).len(), 1);
        assert_eq!(diff("t,x,pass\n1e0,2.5e0,false\n", want, &t).len(), 1);
        let mut loose = Tolerances::default();
        loose.columns.insert("x".into(), 0.1);
        assert!(diff("t,x,pass\n1e0,2.6e0,true\n", want, &loose).is_empty());
    }

    #[test]
    fn structural_differences() {
        let t = Tolerances::default();
        assert_eq!(diff("t,y\n1\n", "t,x\n1\n", &t).len(), 1);
        assert_eq!(diff("t\n1\n2\n", "t\n1\n", &t).len(), 1);
        assert_eq!(diff("t,x\n1\n", "t,x\n1,2\n", &t).len(), 1);
        assert!(diff("t\nNaN\n", "t\nNaN\n", &t).is_empty());
    }
}
