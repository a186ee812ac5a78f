//! CSV and `key = value` file helpers.

use std::fmt::Display;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// Writes a header and rows of floats with 17 significant digits.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric CSV table keyed by its header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("no column `{name}`; available columns: {}", self.header.join(", ")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), k + 1))?;
        if row.len() != header.len() {
            bail!("{}: row {} has {} fields, header has {}", path.display(), k + 1, row.len(), header.len());
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn put(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Floats are written in shortest round-trip form.
    pub fn put_f64(&mut self, key: impl Into<String>, value: f64) {
        self.put(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Self { entries }
    }
}

/// File-name form of a time: `1`, `2.5`, `0.05`.
pub fn time_label(t: f64) -> String {
    format!("{t}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = std::env::temp_dir().join(format!("swarmfp-out-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let rows = vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-300, std::f64::consts::PI]];
        write_csv(&path, &["a", "b"], rows.clone()).unwrap();
        let t = read_csv(&path).unwrap();
        assert_eq!(t.rows, rows);
        assert!(t.column("c").unwrap_err().to_string().contains("a, b"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::default();
        s.put_f64("x", 0.1 + 0.2);
        s.put("kind", "continuous_kappa");
        let back = Summary::parse(&s.render());
        assert_eq!(back, s);
        assert_eq!(back.get_f64("x"), Some(0.1 + 0.2));
        assert_eq!(time_label(2.5), "2.5");
        assert_eq!(time_label(10.0), "10");
    }
}
