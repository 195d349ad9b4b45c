use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{QuasiIdentifierSchema, Record};

/// Reads `records.csv`: `record_id,region_id,<attr>...`. Every schema
/// attribute must have a column; extra columns are ignored with a warning.
/// Region references are not resolved here.
pub fn load_records(path: impl AsRef<Path>, schema: &QuasiIdentifierSchema) -> Result<Vec<Record>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));

    let headers = reader.headers().map_err(|e| Error::parse(path, e.to_string()))?.clone();
    if headers.get(0) != Some("record_id") || headers.get(1) != Some("region_id") {
        return Err(Error::parse(path, "header must start with `record_id,region_id`"));
    }
    let columns: Vec<usize> = schema
        .attributes
        .iter()
        .map(|a| {
            headers
                .iter()
                .skip(2)
                .position(|h| h == a.name)
                .map(|p| p + 2)
                .ok_or_else(|| Error::parse(path, format!("missing column for attribute `{}`", a.name)))
        })
        .collect::<Result<_>>()?;
    for (i, h) in headers.iter().enumerate().skip(2) {
        if !columns.contains(&i) {
            log::warn!("{}: ignoring column `{h}` (not in the schema)", path.display());
        }
    }

    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(Error::parse(path, e.to_string())),
        }
        let line = row.position().map_or(0, |p| p.line());
        let values = schema
            .attributes
            .iter()
            .zip(&columns)
            .map(|(attr, &col)| {
                let label = &row[col];
                attr.category_index(label).ok_or_else(|| {
                    Error::parse(
                        path,
                        format!("line {line}: unknown category `{label}` for attribute `{}`", attr.name),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(Record::new(&row[0], &row[1], values));
    }
    Ok(records)
}

/// Writes records with category labels, header `record_id,<region_column>,<attr>...`.
pub(crate) fn write_records_with<'a>(
    path: &Path,
    region_column: &str,
    schema: &QuasiIdentifierSchema,
    rows: impl Iterator<Item = (&'a str, String, &'a [u32])>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::parse(path, e.to_string());

    let mut header = vec!["record_id", region_column];
    header.extend(schema.attributes.iter().map(|a| a.name.as_str()));
    writer.write_record(&header).map_err(csv_err)?;

    for (id, region, values) in rows {
        let mut fields: Vec<&str> = Vec::with_capacity(header.len());
        fields.push(id);
        fields.push(&region);
        fields.extend(
            values
                .iter()
                .zip(&schema.attributes)
                .map(|(&v, a)| a.categories[v as usize].as_str()),
        );
        writer.write_record(&fields).map_err(csv_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Writes `records.csv` in the format [`load_records`] reads.
pub fn write_records(path: impl AsRef<Path>, records: &[Record], schema: &QuasiIdentifierSchema) -> Result<()> {
    write_records_with(
        path.as_ref(),
        "region_id",
        schema,
        records
            .iter()
            .map(|r| (r.id.as_str(), r.region_id.clone(), r.values.as_slice())),
    )
}
