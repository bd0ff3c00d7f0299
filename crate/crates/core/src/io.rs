//! Output helpers: round-trip CSV formatting and atomic file writes.

use crate::evolve::ProcessMatrix;
use crate::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Formats a float with 17 significant digits, enough to round-trip any
/// `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    format!("{x:.16e}")
}

/// In-memory CSV table with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Adds a `# key: value` line before the header.
    pub fn comment(&mut self, text: &str) -> &mut Self {
        self.comments.push(text.to_string());
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        assert_eq!(cells.len(), self.header.len(), "row width must match the header");
        self.rows.push(cells);
        self
    }

    pub fn numbers(&mut self, values: &[f64]) -> &mut Self {
        self.row(values.iter().map(|&v| num(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Writes `bytes` to a temporary sibling of `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Entries of a process matrix as `row,col,re,im` with Pauli labels.
pub fn chi_entries(chi: &ProcessMatrix) -> Csv {
    let mut csv = Csv::new(&["row", "col", "re", "im"]);
    for (r, rl) in chi.basis_order.iter().enumerate() {
        for (c, cl) in chi.basis_order.iter().enumerate() {
            let v = chi.chi[(r, c)];
            csv.row(vec![rl.to_string(), cl.to_string(), num(v.re), num(v.im)]);
        }
    }
    csv
}

/// `|chi|` as a labelled square grid for plotting on a logarithmic colour
/// scale.
pub fn chi_magnitudes(chi: &ProcessMatrix) -> Csv {
    let mut header = vec!["row"];
    header.extend(chi.basis_order.iter());
    let mut csv = Csv::new(&header);
    csv.comment("colour-scale: log10");
    csv.comment("value: |chi_mn|");
    for (r, rl) in chi.basis_order.iter().enumerate() {
        let mut row = vec![rl.to_string()];
        row.extend((0..16).map(|c| num(chi.chi[(r, c)].norm())));
        csv.row(row);
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.csv");
        let mut csv = Csv::new(&["x", "y"]);
        csv.numbers(&[1.0, 2.0]);
        csv.write(&p).unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "second");
        let leftovers: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn chi_exports_have_expected_shape() {
        let chi = crate::evolve::chi_from_map(&crate::evolve::ideal::cz());
        assert_eq!(chi_entries(&chi).len(), 256);
        let grid = chi_magnitudes(&chi).render();
        assert!(grid.starts_with("# colour-scale: log10"));
        assert_eq!(grid.lines().count(), 2 + 1 + 16);
    }
}
