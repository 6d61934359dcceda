//! Species tables: CSV keyed by species label.
//!
//! Two layouts are accepted, told apart by the header:
//!
//! ```text
//! species,category        species,p1,p2
//! A,3                     A,0.2,0.25
//! ```
//!
//! Categories are integers 1 to 5; probabilities lie in `[0, 1]`.

use std::collections::HashMap;
use std::io::{Read, Write};

use epd_core::{Category, Phylogeny, ProbabilityVector};

use crate::newick::species_name;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("species table: {0}")]
    Csv(#[from] csv::Error),
    #[error("species table: expected header `species,category` or `species,p1,p2`, found `{0}`")]
    Header(String),
    #[error("species table line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("species table line {line}: species `{label}` listed twice")]
    Duplicate { line: u64, label: String },
    #[error("species table line {line}: category `{value}` of `{label}` is not an integer in 1..=5")]
    BadCategory {
        line: u64,
        label: String,
        value: String,
    },
    #[error("species table line {line}: probability `{value}` of `{label}` is not a number in [0, 1]")]
    BadProbability {
        line: u64,
        label: String,
        value: String,
    },
    #[error("species table: `{0}` is not a species of the tree")]
    UnknownLabel(String),
    #[error("species table: no entry for tree species `{0}`")]
    MissingLabel(String),
    #[error("species table has categories, but probabilities are needed here")]
    NoProbabilities,
    #[error("species table has probabilities, but categories are needed here")]
    NoCategories,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableValues {
    Categories(Vec<Category>),
    /// `(p1, p2)` per row.
    Probabilities(Vec<(f64, f64)>),
}

/// Parsed table, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesTable {
    pub labels: Vec<String>,
    pub values: TableValues,
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, csv::Position::line)
}

impl SpeciesTable {
    pub fn read<R: Read>(reader: R) -> Result<Self, TableError> {
        let mut csv = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
        let with_categories = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
            ["species", "category"] => true,
            ["species", "p1", "p2"] => false,
            _ => return Err(TableError::Header(header.join(","))),
        };

        let mut labels = Vec::new();
        let mut seen = HashMap::new();
        let mut categories = Vec::new();
        let mut probs = Vec::new();
        for record in csv.records() {
            let record = record?;
            let line = line_of(&record);
            if record.len() != header.len() {
                return Err(TableError::FieldCount {
                    line,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            let label = record[0].to_owned();
            if seen.insert(label.clone(), ()).is_some() {
                return Err(TableError::Duplicate { line, label });
            }
            if with_categories {
                let value = &record[1];
                let category = value.parse::<u8>().ok().and_then(Category::new).ok_or_else(|| {
                    TableError::BadCategory {
                        line,
                        label: label.clone(),
                        value: value.to_owned(),
                    }
                })?;
                categories.push(category);
            } else {
                let parse = |value: &str| {
                    value
                        .parse::<f64>()
                        .ok()
                        .filter(|p| (0.0..=1.0).contains(p))
                        .ok_or_else(|| TableError::BadProbability {
                            line,
                            label: label.clone(),
                            value: value.to_owned(),
                        })
                };
                probs.push((parse(&record[1])?, parse(&record[2])?));
            }
            labels.push(label);
        }
        let values = if with_categories {
            TableValues::Categories(categories)
        } else {
            TableValues::Probabilities(probs)
        };
        Ok(Self { labels, values })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<(), TableError> {
        let mut csv = csv::Writer::from_writer(writer);
        match &self.values {
            TableValues::Categories(cats) => {
                csv.write_record(["species", "category"])?;
                for (label, c) in self.labels.iter().zip(cats) {
                    csv.write_record([label.as_str(), &c.get().to_string()])?;
                }
            }
            TableValues::Probabilities(probs) => {
                csv.write_record(["species", "p1", "p2"])?;
                for (label, (p1, p2)) in self.labels.iter().zip(probs) {
                    csv.write_record([label.as_str(), &p1.to_string(), &p2.to_string()])?;
                }
            }
        }
        csv.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Row of each tree species, checking that table and tree name the same
    /// species.
    fn rows_for(&self, tree: &Phylogeny) -> Result<Vec<usize>, TableError> {
        let by_label: HashMap<&str, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let names: Vec<String> = (0..tree.species_count()).map(|s| species_name(tree, s)).collect();
        let rows = names
            .iter()
            .map(|name| {
                by_label
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| TableError::MissingLabel(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if rows.len() != self.labels.len() {
            let known: std::collections::HashSet<&str> = names.iter().map(String::as_str).collect();
            if let Some(extra) = self.labels.iter().find(|l| !known.contains(l.as_str())) {
                return Err(TableError::UnknownLabel(extra.clone()));
            }
        }
        Ok(rows)
    }

    /// Categories in species order of `tree`.
    pub fn categories_for(&self, tree: &Phylogeny) -> Result<Vec<Category>, TableError> {
        let TableValues::Categories(cats) = &self.values else {
            return Err(TableError::NoCategories);
        };
        Ok(self.rows_for(tree)?.into_iter().map(|r| cats[r]).collect())
    }

    /// Column `p1` (`column == 0`) or `p2` in species order of `tree`.
    pub fn probabilities_for(
        &self,
        tree: &Phylogeny,
        column: usize,
    ) -> Result<ProbabilityVector, TableError> {
        let TableValues::Probabilities(probs) = &self.values else {
            return Err(TableError::NoProbabilities);
        };
        let values = self
            .rows_for(tree)?
            .into_iter()
            .map(|r| if column == 0 { probs[r].0 } else { probs[r].1 })
            .collect();
        Ok(ProbabilityVector::new(values).expect("checked while reading"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    fn tree() -> Phylogeny {
        parse_newick("((A:1,B:1):1,C:2);").unwrap()
    }

    #[test]
    fn aligns_by_label() {
        let table = SpeciesTable::read("species,category\nC,5\nA,1\nB,3\n".as_bytes()).unwrap();
        let cats: Vec<u8> = table.categories_for(&tree()).unwrap().iter().map(|c| c.get()).collect();
        assert_eq!(cats, [1, 3, 5]);
        assert!(matches!(table.probabilities_for(&tree(), 0), Err(TableError::NoProbabilities)));

        let table = SpeciesTable::read("species, p1, p2\nB,0.5,0.25\nA,0,1\nC,1,0\n".as_bytes()).unwrap();
        let p2 = table.probabilities_for(&tree(), 1).unwrap();
        assert_eq!(p2.as_slice(), [1.0, 0.25, 0.0]);
    }

    #[test]
    fn rejects_bad_tables() {
        let read = |text: &str| SpeciesTable::read(text.as_bytes()).unwrap_err().to_string();
        assert!(read("name,category\nA,1\n").contains("expected header"));
        assert!(read("species,category\nA,6\n").contains("category `6`"));
        assert!(read("species,category\nA,1\nA,2\n").contains("`A` listed twice"));
        assert!(read("species,p1,p2\nA,0.5,1.5\n").contains("probability `1.5`"));
        assert!(read("species,p1,p2\nA,NaN,0.5\n").contains("`NaN`"));
        assert!(read("species,p1,p2\nA,0.5\n").contains("expected 3 fields"));

        let align = |text: &str| {
            SpeciesTable::read(text.as_bytes())
                .unwrap()
                .categories_for(&tree())
                .unwrap_err()
                .to_string()
        };
        assert!(align("species,category\nA,1\nB,1\n").contains("no entry for tree species `C`"));
        assert!(align("species,category\nA,1\nB,1\nC,1\nD,2\n").contains("`D` is not a species"));
    }

    #[test]
    fn write_then_read() {
        let table = SpeciesTable {
            labels: vec!["x y".into(), "z".into()],
            values: TableValues::Probabilities(vec![(0.1, 0.2), (1.0 / 3.0, 0.0)]),
        };
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        assert_eq!(SpeciesTable::read(&buf[..]).unwrap(), table);
    }
}
