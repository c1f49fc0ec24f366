//! Minimal column store for regression inputs.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<u32> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds a categorical column, numbering levels by first appearance.
    pub fn categorical_from<'a, I: IntoIterator<Item = &'a str>>(values: I) -> Self {
        let mut index: HashMap<&'a str, u32> = HashMap::new();
        let mut levels = Vec::new();
        let codes = values
            .into_iter()
            .map(|v| {
                *index.entry(v).or_insert_with(|| {
                    levels.push(v.to_string());
                    (levels.len() - 1) as u32
                })
            })
            .collect();
        Column::Categorical { levels, codes }
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Column::Numeric(v) => Some(v),
            Column::Categorical { .. } => None,
        }
    }

    /// Text label of row `i`.
    pub fn label(&self, i: usize) -> String {
        match self {
            Column::Numeric(v) => format_number(v[i]),
            Column::Categorical { levels, codes } => levels[codes[i] as usize].clone(),
        }
    }
}

pub(crate) fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// Levels of a column restricted to `rows`, in sorted order (numeric order
/// for numeric columns), with each selected row's level index.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub labels: Vec<String>,
    pub codes: Vec<u32>,
}

impl Factor {
    pub fn from_column(col: &Column, rows: &[usize]) -> Result<Self> {
        match col {
            Column::Numeric(v) => {
                let mut values: Vec<f64> = rows.iter().map(|&i| v[i]).collect();
                if values.iter().any(|x| !x.is_finite()) {
                    return Err(Error::DataValidation("non-finite value in a grouping column".into()));
                }
                values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                values.dedup();
                let codes = rows
                    .iter()
                    .map(|&i| {
                        values
                            .binary_search_by(|p| p.partial_cmp(&v[i]).expect("finite"))
                            .expect("value present") as u32
                    })
                    .collect();
                Ok(Factor { labels: values.into_iter().map(format_number).collect(), codes })
            }
            Column::Categorical { levels, codes } => {
                let mut used: Vec<u32> = rows.iter().map(|&i| codes[i]).collect();
                used.sort_unstable();
                used.dedup();
                let mut order: Vec<(String, u32)> =
                    used.iter().map(|&c| (levels[c as usize].clone(), c)).collect();
                order.sort();
                let mut remap = vec![u32::MAX; levels.len()];
                for (new, (_, old)) in order.iter().enumerate() {
                    remap[*old as usize] = new as u32;
                }
                Ok(Factor {
                    labels: order.into_iter().map(|(l, _)| l).collect(),
                    codes: rows.iter().map(|&i| remap[codes[i] as usize]).collect(),
                })
            }
        }
    }

    pub fn n_levels(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    names: Vec<String>,
    columns: Vec<Column>,
}

impl Table {
    pub fn new() -> Self {
        Table::default()
    }

    /// Appends or replaces a column. Panics if the length disagrees with
    /// existing columns.
    pub fn push(&mut self, name: &str, column: Column) {
        if let Some(first) = self.columns.first() {
            assert_eq!(first.len(), column.len(), "column `{name}` has the wrong length");
        }
        if let Some(pos) = self.names.iter().position(|n| n == name) {
            self.columns[pos] = column;
        } else {
            self.names.push(name.to_string());
            self.columns.push(column);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|i| &self.columns[i])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    /// Copy with rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
                Column::Categorical { levels, codes } => Column::Categorical {
                    levels: levels.clone(),
                    codes: rows.iter().map(|&i| codes[i]).collect(),
                },
            })
            .collect();
        Table { names: self.names.clone(), columns }
    }

    /// Reads a CSV with a header row. A column is numeric when every cell
    /// parses as a number (empty cells read as NaN); otherwise categorical.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for rec in reader.records() {
            let rec = rec?;
            for (j, cell) in rec.iter().enumerate() {
                cells[j].push(cell.to_string());
            }
        }
        let mut table = Table::new();
        for (name, raw) in names.iter().zip(cells) {
            let parsed: Option<Vec<f64>> = raw
                .iter()
                .map(|s| if s.trim().is_empty() { Some(f64::NAN) } else { s.trim().parse().ok() })
                .collect();
            let column = match parsed {
                Some(v) => Column::Numeric(v),
                None => Column::categorical_from(raw.iter().map(String::as_str)),
            };
            table.push(name, column);
        }
        Ok(table)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::DataValidation(format!("{}: {e}", path.display())))?;
        Table::from_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_type_inference() {
        let text = "state,year,y,tag\nA,2008,1.5,x\nB,2009,,y\n";
        let t = Table::from_csv(text.as_bytes()).unwrap();
        assert!(matches!(t.get("state"), Some(Column::Categorical { .. })));
        assert_eq!(t.get("year").unwrap().as_numeric().unwrap(), &[2008.0, 2009.0]);
        assert!(t.get("y").unwrap().as_numeric().unwrap()[1].is_nan());
        assert_eq!(t.n_rows(), 2);
    }

    #[test]
    fn factor_levels_sorted_regardless_of_row_order() {
        let col = Column::Numeric(vec![10.0, 2.0, 10.0, 7.0]);
        let f = Factor::from_column(&col, &[0, 1, 2, 3]).unwrap();
        assert_eq!(f.labels, vec!["2", "7", "10"]);
        assert_eq!(f.codes, vec![2, 0, 2, 1]);
        let cat = Column::categorical_from(["b", "a", "c", "a"]);
        let f = Factor::from_column(&cat, &[0, 1, 3]).unwrap();
        assert_eq!(f.labels, vec!["a", "b"]);
        assert_eq!(f.codes, vec![1, 0, 0]);
    }
}
