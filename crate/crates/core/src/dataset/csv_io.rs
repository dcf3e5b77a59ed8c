use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{CustomerRecord, Dataset, Gender, PriorClaim, Provenance};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = [
    "id",
    "gender",
    "age",
    "income",
    "smoke",
    "previous_claim",
    "expenditure",
];

/// Loads a dataset whose header is exactly [`CSV_HEADER`].
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv(reader: impl Read) -> Result<Dataset> {
    let (records, has_expenditure) = read_records(reader, false)?;
    debug_assert!(has_expenditure);
    Dataset::new(records, Provenance::Loaded)
}

/// Like [`load_csv`] but the `expenditure` column may be absent, for scoring
/// new customers. Missing actuals are stored as 0; the flag says whether
/// the column was present.
pub fn load_csv_for_prediction(path: impl AsRef<Path>) -> Result<(Dataset, bool)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (records, has_expenditure) = read_records(file, true)?;
    Ok((Dataset::new(records, Provenance::Loaded)?, has_expenditure))
}

fn check_header(header: &[String], expenditure_optional: bool) -> Result<bool> {
    for col in header {
        if !CSV_HEADER.contains(&col.as_str()) {
            return Err(Error::Schema(format!("unexpected column `{col}`")));
        }
    }
    for col in CSV_HEADER {
        if !header.iter().any(|h| h == col) {
            if col == "expenditure" && expenditure_optional {
                continue;
            }
            return Err(Error::Schema(format!("missing column `{col}`")));
        }
    }
    let has_expenditure = header.len() == CSV_HEADER.len();
    let expected = &CSV_HEADER[..header.len()];
    if header != expected {
        return Err(Error::Schema(format!(
            "columns out of order: expected `{}`, got `{}`",
            expected.join(","),
            header.join(",")
        )));
    }
    Ok(has_expenditure)
}

fn cell(row: &csv::StringRecord, idx: usize, line: usize) -> Result<&str> {
    row.get(idx).map(str::trim).ok_or_else(|| Error::Parse {
        row: line,
        column: CSV_HEADER[idx].to_string(),
        message: "missing cell".into(),
    })
}

fn parse_cell<T: std::str::FromStr>(row: &csv::StringRecord, idx: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = cell(row, idx, line)?;
    raw.parse::<T>().map_err(|e| Error::Parse {
        row: line,
        column: CSV_HEADER[idx].to_string(),
        message: format!("`{raw}`: {e}"),
    })
}

fn parse_amount(row: &csv::StringRecord, idx: usize, line: usize) -> Result<f64> {
    let v: f64 = parse_cell(row, idx, line)?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row: line,
            column: CSV_HEADER[idx].to_string(),
            message: format!("`{v}` is not a finite amount"),
        });
    }
    Ok(v)
}

fn read_records(reader: impl Read, expenditure_optional: bool) -> Result<(Vec<CustomerRecord>, bool)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let has_expenditure = check_header(&header, expenditure_optional)?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 1;
        let row = row.map_err(|e| Error::Parse {
            row: line,
            column: "<row>".into(),
            message: e.to_string(),
        })?;
        let smoke = cell(&row, 4, line)?;
        let smoker = match smoke.to_ascii_lowercase().as_str() {
            "yes" => true,
            "no" => false,
            other => {
                return Err(Error::Parse {
                    row: line,
                    column: "smoke".into(),
                    message: format!("`{other}`: expected yes or no"),
                })
            }
        };
        let record = CustomerRecord {
            id: parse_cell(&row, 0, line)?,
            gender: parse_cell::<Gender>(&row, 1, line)?,
            age: parse_cell(&row, 2, line)?,
            income: parse_amount(&row, 3, line)?,
            smoker,
            prior_claim: parse_cell::<PriorClaim>(&row, 5, line)?,
            expenditure: if has_expenditure {
                parse_amount(&row, 6, line)?
            } else {
                0.0
            },
        };
        record.validate()?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::validation("empty dataset"));
    }
    Ok((records, has_expenditure))
}

/// Writes the canonical CSV; amounts use the shortest exact decimal form.
pub fn write_csv(dataset: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for r in dataset.records() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.id,
            r.gender,
            r.age,
            r.income,
            if r.smoker { "yes" } else { "no" },
            r.prior_claim,
            r.expenditure
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::table1_records;

    const TABLE1: &str = "\
id,gender,age,income,smoke,previous_claim,expenditure
1,female,58,0,yes,copd,10250
2,male,32,83000,no,none,0
3,male,45,67000,yes,lung_cancer,148765
4,female,24,45000,no,none,100
5,female,37,30000,no,diabetes,5200
";

    #[test]
    fn loads_table1() {
        let ds = read_csv(TABLE1.as_bytes()).unwrap();
        assert_eq!(ds.len(), 5);
        assert_eq!(ds.records()[2].expenditure, 148_765.0);
        assert_eq!(ds.records(), table1_records().as_slice());
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let err = read_csv("id,gender,age,income,smoke,previous_claim,expenditure\n".as_bytes())
            .unwrap_err();
        assert!(err.to_string().contains("empty dataset"), "{err}");
    }

    #[test]
    fn age_150_names_record_and_bound() {
        let text = "id,gender,age,income,smoke,previous_claim,expenditure\n42,male,150,0,no,none,0\n";
        let err = read_csv(text.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation(_)));
        assert!(msg.contains("42") && msg.contains("[18, 100]"), "{msg}");
    }

    #[test]
    fn missing_and_extra_columns_are_named() {
        let missing = "id,gender,age,income,smoke,expenditure\n";
        let err = read_csv(missing.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("previous_claim"), "{err}");

        let extra = "id,gender,age,income,smoke,previous_claim,expenditure,zip\n";
        let err = read_csv(extra.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("zip"), "{err}");
    }

    #[test]
    fn bad_cell_reports_row() {
        let text = "id,gender,age,income,smoke,previous_claim,expenditure\n1,male,30,1$,no,none,0\n";
        match read_csv(text.as_bytes()).unwrap_err() {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "income");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn write_then_read_reproduces_text() {
        let ds = read_csv(TABLE1.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), TABLE1);
    }
}
