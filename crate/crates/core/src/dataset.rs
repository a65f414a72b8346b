//! Header-matched CSV ingestion of experiment tables.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings and responses read from a table, columns ordered as requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub settings: Vec<Vec<f64>>,
    pub responses: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn response_column(&self, j: usize) -> Vec<f64> {
        self.responses.iter().map(|r| r[j]).collect()
    }

    /// Read a CSV whose header names every factor and objective. Extra
    /// columns are ignored; column order in the file does not matter.
    pub fn read_csv<R: Read>(reader: R, factors: &[&str], objectives: &[&str]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Fixture(format!("unreadable header: {e}")))?
            .clone();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Fixture(format!("missing column `{name}`")))
        };
        let fcols = factors.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;
        let ocols = objectives.iter().map(|n| find(n)).collect::<Result<Vec<_>>>()?;

        let mut data = Dataset {
            settings: Vec::new(),
            responses: Vec::new(),
        };
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Fixture(format!("row {}: {e}", line + 1)))?;
            let parse = |c: usize| -> Result<f64> {
                let raw = rec.get(c).unwrap_or("");
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Fixture(format!("row {}: `{raw}` is not a number", line + 1)))
            };
            data.settings.push(fcols.iter().map(|&c| parse(c)).collect::<Result<_>>()?);
            data.responses.push(ocols.iter().map(|&c| parse(c)).collect::<Result<_>>()?);
        }
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_matched_by_name() {
        let text = "b,extra,a,y\n2,x,1,10\n4,y,3,20\n";
        let d = Dataset::read_csv(text.as_bytes(), &["a", "b"], &["y"]).unwrap();
        assert_eq!(d.settings, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(d.response_column(0), vec![10.0, 20.0]);
    }

    #[test]
    fn malformed_tables() {
        assert!(Dataset::read_csv("a,y\n1,2\n".as_bytes(), &["a", "b"], &["y"]).is_err());
        assert!(Dataset::read_csv("a,y\n1,z\n".as_bytes(), &["a"], &["y"]).is_err());
        assert!(Dataset::read_csv("a,y\n1\n".as_bytes(), &["a"], &["y"]).is_err());
    }
}
