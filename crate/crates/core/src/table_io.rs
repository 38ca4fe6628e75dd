//! Response-table serialization: CSV and a JSON document with metadata.
//!
//! Floats are written with 17 significant digits, which is enough for an
//! exact f64 round trip.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ComplexMat2;
use crate::sweep::{FrequencyResponseTable, TableMeta, TableRow};

pub const CSV_HEADER: [&str; 9] = [
    "f_hz", "re_y11", "im_y11", "re_y12", "im_y12", "re_y21", "im_y21", "re_y22", "im_y22",
];

pub const TABLE_SCHEMA_VERSION: u32 = 1;

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(table: &FrequencyResponseTable, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in table.rows() {
        let mut rec = vec![fmt17(r.f_hz)];
        for e in r.y.entries() {
            rec.push(fmt17(e.re));
            rec.push(fmt17(e.im));
        }
        wr.write_record(&rec).map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<FrequencyResponseTable> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rd
        .headers()
        .map_err(|e| Error::MalformedTable(e.to_string()))?
        .clone();
    if headers.len() != CSV_HEADER.len() || headers.iter().zip(CSV_HEADER).any(|(a, b)| a != b) {
        return Err(Error::MalformedTable(format!(
            "expected header {}, got {}",
            CSV_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedTable(format!("row {}: {e}", k + 1)))?;
        let mut v = [0.0; 9];
        for (j, field) in rec.iter().enumerate() {
            v[j] = field.parse().map_err(|_| {
                Error::MalformedTable(format!("row {}: cannot parse {field:?}", k + 1))
            })?;
        }
        let c = |j: usize| Complex64::new(v[j], v[j + 1]);
        rows.push(TableRow {
            f_hz: v[0],
            y: ComplexMat2::new(c(1), c(3), c(5), c(7)),
        });
    }
    FrequencyResponseTable::new(rows, TableMeta::default())
}

#[derive(Serialize, Deserialize)]
struct TableDocument {
    schema_version: u32,
    #[serde(flatten)]
    table: FrequencyResponseTable,
}

pub fn write_json<W: Write>(table: &FrequencyResponseTable, w: W) -> Result<()> {
    let doc = TableDocument {
        schema_version: TABLE_SCHEMA_VERSION,
        table: table.clone(),
    };
    serde_json::to_writer_pretty(w, &doc)?;
    Ok(())
}

pub fn read_json<R: Read>(r: R) -> Result<FrequencyResponseTable> {
    let doc: TableDocument =
        serde_json::from_reader(r).map_err(|e| Error::MalformedTable(e.to_string()))?;
    if doc.schema_version != TABLE_SCHEMA_VERSION {
        return Err(Error::MalformedTable(format!(
            "unsupported schema_version {}",
            doc.schema_version
        )));
    }
    let t = doc.table;
    FrequencyResponseTable::new(t.rows().to_vec(), t.meta)
}

/// Format chosen from the extension: `.json` or anything else as CSV.
pub fn save(table: &FrequencyResponseTable, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    if is_json(path) {
        write_json(table, f)
    } else {
        write_csv(table, f)
    }
}

pub fn load(path: &Path) -> Result<FrequencyResponseTable> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    if is_json(path) {
        read_json(f)
    } else {
        read_csv(f)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward_table() -> FrequencyResponseTable {
        let c = Complex64::new;
        let rows = (0..20)
            .map(|k| {
                let f = -3.0 + k as f64 * 0.3 + 1e-13 * k as f64;
                let x = (k as f64 + 0.1).sqrt() / 7.0;
                TableRow {
                    f_hz: f,
                    y: ComplexMat2::new(
                        c(x, -1.0 / 3.0),
                        c(f64::MIN_POSITIVE, 1e300),
                        c(-x * 1e-7, 0.1),
                        c(std::f64::consts::PI, -0.0),
                    ),
                }
            })
            .collect();
        FrequencyResponseTable::new(
            rows,
            TableMeta {
                noise: 0.01,
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn csv_roundtrip_bit_exact() {
        let t = awkward_table();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        for (a, b) in t.rows().iter().zip(back.rows()) {
            assert_eq!(a.f_hz.to_bits(), b.f_hz.to_bits());
            for (x, y) in a.y.entries().iter().zip(b.y.entries()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn json_roundtrip_keeps_metadata() {
        let t = awkward_table();
        let mut buf = Vec::new();
        write_json(&t, &mut buf).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(back.meta, t.meta);
        for (a, b) in t.rows().iter().zip(back.rows()) {
            assert_eq!(a.f_hz.to_bits(), b.f_hz.to_bits());
            for (x, y) in a.y.entries().iter().zip(b.y.entries()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn spaced_header_accepted() {
        let text = "f_hz, re_y11, im_y11, re_y12, im_y12, re_y21, im_y21, re_y22, im_y22\n1,0,0,0,0,0,0,0,0\n";
        assert_eq!(read_csv(text.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn truncated_row_rejected() {
        let text = "f_hz,re_y11,im_y11,re_y12,im_y12,re_y21,im_y21,re_y22,im_y22\n1,0,0,0,0,0,0,0,0\n2,0,0,0\n";
        assert!(matches!(
            read_csv(text.as_bytes()),
            Err(Error::MalformedTable(_))
        ));
        assert!(matches!(
            read_csv("a,b\n".as_bytes()),
            Err(Error::MalformedTable(_))
        ));
    }
}
