use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// JSON summary layout version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

/// Reals carry 17 significant digits so they round-trip exactly.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Real(x) => format_real(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the columns");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(format_cell).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Files written for one run, all sharing the `--out` stem.
#[derive(Debug, Clone)]
pub struct ArtifactPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: Option<PathBuf>,
}

fn with_extension(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_artifacts(
    stem: &Path,
    table: &Table,
    summary: &serde_json::Value,
    svg: Option<&str>,
) -> io::Result<ArtifactPaths> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let paths = ArtifactPaths {
        csv: with_extension(stem, "csv"),
        json: with_extension(stem, "json"),
        svg: svg.map(|_| with_extension(stem, "svg")),
    };
    fs::write(&paths.csv, table.to_csv())?;
    let mut json = serde_json::to_string_pretty(summary).map_err(io::Error::other)?;
    json.push('\n');
    fs::write(&paths.json, json)?;
    if let (Some(path), Some(body)) = (&paths.svg, svg) {
        fs::write(path, body)?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_real(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["a", "b", "c", "d"]);
        t.push(vec![
            Cell::from(1usize),
            Cell::from(0.5),
            Cell::from(true),
            Cell::from("x,y"),
        ]);
        t.push(vec![
            Cell::Missing,
            Cell::from(None),
            Cell::from(false),
            Cell::from("z"),
        ]);
        assert_eq!(t.to_csv(), "a,b,c,d\n1,5.0000000000000000e-1,true,\"x,y\"\n,,false,z\n");
    }

    #[test]
    #[should_panic]
    fn ragged_rows_are_a_bug() {
        Table::new(vec!["a"]).push(vec![]);
    }
}
