//! CSV output: comma separated, LF line endings, numbers with 17 significant
//! digits so that every value round-trips.

use std::fmt::Write as _;
use std::path::Path;

use super::{write_text, OutputError};
use crate::mesh::Mesh;
use crate::Vec2;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A rectangular table whose header names carry their unit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        CsvTable { header, rows: Vec::new() }
    }

    pub fn render(&self) -> Result<String, OutputError> {
        if let Some(bad) = self.rows.iter().find(|r| r.len() != self.header.len()) {
            return Err(OutputError::InvalidInput(format!(
                "row has {} values for {} columns",
                bad.len(),
                self.header.len()
            )));
        }
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        write_text(path, &self.render()?)
    }
}

/// Nodal fields sampled at fixed points, one row per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub points: Vec<Vec2>,
    /// `(name, unit)` of each sampled field.
    pub fields: Vec<(String, String)>,
    pub times: Vec<f64>,
    /// `values[snapshot][point * fields.len() + field]`.
    pub values: Vec<Vec<f64>>,
}

impl ProbeSeries {
    /// Fails with `InvalidProbe` for a point outside the mesh.
    pub fn new(mesh: &Mesh, points: Vec<Vec2>, fields: Vec<(String, String)>) -> Result<Self, OutputError> {
        if let Some(p) = points.iter().find(|p| mesh.locate(**p).is_none()) {
            return Err(OutputError::InvalidProbe { x: p.x, y: p.y });
        }
        Ok(ProbeSeries {
            points,
            fields,
            times: Vec::new(),
            values: Vec::new(),
        })
    }

    /// Appends a snapshot; `nodal[f]` is the nodal array of field `f`.
    pub fn record(&mut self, mesh: &Mesh, time: f64, nodal: &[&[f64]]) -> Result<(), OutputError> {
        if nodal.len() != self.fields.len() {
            return Err(OutputError::InvalidInput(format!(
                "{} fields given, {} expected",
                nodal.len(),
                self.fields.len()
            )));
        }
        let mut row = Vec::with_capacity(self.points.len() * self.fields.len());
        for p in &self.points {
            for field in nodal {
                let v = mesh
                    .interpolate(field, *p)
                    .ok_or(OutputError::InvalidProbe { x: p.x, y: p.y })?;
                row.push(v);
            }
        }
        self.times.push(time);
        self.values.push(row);
        Ok(())
    }

    pub fn to_table(&self) -> CsvTable {
        let mut header = vec!["t_s".to_string()];
        for p in &self.points {
            for (name, unit) in &self.fields {
                header.push(format!("{name}_{unit}@({};{})", p.x, p.y));
            }
        }
        let mut table = CsvTable::new(header);
        for (t, row) in self.times.iter().zip(&self.values) {
            let mut r = vec![*t];
            r.extend_from_slice(row);
            table.rows.push(r);
        }
        table
    }
}

pub fn write_csv_timeseries(series: &ProbeSeries, path: &Path) -> Result<(), OutputError> {
    series.to_table().write(path)
}
