use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StateSpaceSystem;
use crate::error::{Error, Result};
use crate::matlin::Mat;

/// On-disk system description: dimensions plus row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub A: Vec<Vec<f64>>,
    pub B: Vec<Vec<f64>>,
    pub C: Vec<Vec<f64>>,
}

fn to_matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<Mat> {
    if rows.len() != nrows {
        return Err(Error::Input(format!("{name}: expected {nrows} rows, found {}", rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::Input(format!(
                "{name}: row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl SystemFile {
    pub fn into_system(self) -> Result<StateSpaceSystem> {
        let a = to_matrix("A", &self.A, self.n, self.n)?;
        let b = to_matrix("B", &self.B, self.n, self.m)?;
        let c = to_matrix("C", &self.C, self.p, self.n)?;
        StateSpaceSystem::new(a, b, c)
    }
}

impl From<&StateSpaceSystem> for SystemFile {
    fn from(sys: &StateSpaceSystem) -> Self {
        Self {
            n: sys.n(),
            m: sys.m(),
            p: sys.p(),
            A: to_rows(sys.a()),
            B: to_rows(sys.b()),
            C: to_rows(sys.c()),
        }
    }
}

pub fn parse_system(text: &str) -> Result<StateSpaceSystem> {
    let file: SystemFile = serde_json::from_str(text)?;
    file.into_system()
}

pub fn load_system(path: impl AsRef<Path>) -> Result<StateSpaceSystem> {
    parse_system(&std::fs::read_to_string(path)?)
}

pub fn system_to_json(sys: &StateSpaceSystem) -> String {
    serde_json::to_string_pretty(&SystemFile::from(sys)).expect("finite matrices serialize")
}

pub fn save_system(sys: &StateSpaceSystem, path: impl AsRef<Path>) -> Result<()> {
    let mut text = system_to_json(sys);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn round_trip_is_bit_identical() {
        for sys in [fixtures::mimo4(), fixtures::scalar(), fixtures::random8()] {
            let back = parse_system(&system_to_json(&sys)).unwrap();
            assert_eq!(back, sys);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = r#"{"n":2,"m":1,"p":1,"A":[[1,0],[0]],"B":[[1],[1]],"C":[[1,1]]}"#;
        let err = parse_system(text).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_system("{\"n\": 1,\n \"m\": }").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn dimension_field_mismatch() {
        let text = r#"{"n":2,"m":1,"p":1,"A":[[1,0],[0,1]],"B":[[1],[1]],"C":[[1,1,1]]}"#;
        assert!(parse_system(text).is_err());
    }
}
