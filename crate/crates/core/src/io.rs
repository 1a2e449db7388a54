//! File formats: raw statement CSV, feature matrix CSV and JSON artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dataprep::{CompanyRecord, Dataset, FeatureSchema, FeatureVector, RECORD_COLUMNS};
use crate::error::{Error, Result};

pub fn read_records<R: Read>(reader: R) -> Result<Vec<CompanyRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn write_records<W: Write>(writer: W, records: &[CompanyRecord]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(RECORD_COLUMNS)?;
    for rec in records {
        wtr.serialize(rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_records(path: &Path) -> Result<Vec<CompanyRecord>> {
    read_records(BufReader::new(File::open(path)?))
}

pub fn save_records(path: &Path, records: &[CompanyRecord]) -> Result<()> {
    write_records(BufWriter::new(File::create(path)?), records)
}

/// Feature matrix header: `company_id,statement_year,<feature columns>,label`.
pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["company_id".to_string(), "statement_year".to_string()];
    header.extend(data.column_names());
    header.push("label".to_string());
    wtr.write_record(&header)?;
    let mut fields = Vec::with_capacity(header.len());
    for row in &data.rows {
        fields.clear();
        fields.push(row.company_id.clone());
        fields.push(row.statement_year.to_string());
        fields.extend(row.features.iter().map(|v| v.to_string()));
        fields.push(row.label.to_string());
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 3
        || header[0] != "company_id"
        || header[1] != "statement_year"
        || header[header.len() - 1] != "label"
    {
        return Err(Error::InvalidInput(
            "feature CSV must start with company_id,statement_year and end with label".into(),
        ));
    }
    let schema = FeatureSchema::from_column_names(&header[2..header.len() - 1])?;
    let width = schema.n_features();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::InvalidInput(format!("row {}: bad {what}", line + 1));
        let statement_year = rec[1].parse().map_err(|_| bad("statement_year"))?;
        let features = (0..width)
            .map(|j| rec[2 + j].parse::<f64>().map_err(|_| bad(&header[2 + j])))
            .collect::<Result<Vec<_>>>()?;
        let label = match &rec[2 + width] {
            "0" => 0,
            "1" => 1,
            _ => return Err(bad("label")),
        };
        rows.push(FeatureVector {
            company_id: rec[0].to_string(),
            statement_year,
            features,
            label,
        });
    }
    Ok(Dataset::new(schema, rows))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_cells_are_missing() {
        let csv = "company_id,statement_year,out_of_business,country_code,total_employees,net_worth,\
total_assets,gross_income,total_liabilities,current_ratio,cash_liquid_assets,sales,working_capital,\
net_income,incorporation_year,previous_sales,financial_debt,total_current_assets,total_current_liabilities\n\
c1,2010,false,FR,,1.5,,,,,,,,,1999,,,,\n";
        let recs = read_records(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].statement_year, Some(2010));
        assert_eq!(recs[0].out_of_business, Some(false));
        assert_eq!(recs[0].net_worth, Some(1.5));
        assert_eq!(recs[0].total_assets, None);
        assert_eq!(recs[0].incorporation_year, Some(1999));
    }

    #[test]
    fn records_roundtrip() {
        let rec = CompanyRecord {
            company_id: "x".into(),
            statement_year: Some(2011),
            out_of_business: Some(true),
            country_code: Some("GB".into()),
            sales: Some(0.1 + 0.2),
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_records(&mut buf, std::slice::from_ref(&rec)).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap(), vec![rec]);
    }

    #[test]
    fn empty_record_file_has_header() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("company_id,statement_year"));
    }

    #[test]
    fn dataset_roundtrip_is_exact() {
        let schema = FeatureSchema::new(vec!["FR".into(), "GB".into()]);
        let mut features: Vec<f64> = (0..9).map(|i| (i as f64).sqrt() / 7.0).collect();
        features.extend([0.0, 1.0]);
        let ds = Dataset::new(
            schema,
            vec![FeatureVector {
                company_id: "c".into(),
                statement_year: 2009,
                features,
                label: 1,
            }],
        );
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }
}
