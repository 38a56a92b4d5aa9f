//! File formats: rasters and tables as CSV, specs and reports as JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::counter::ContextTable;
use crate::error::{Error, Result};
use crate::estimator::EstimatedGraph;
use crate::model::{NetworkSpec, SpecDocument, SpikeRaster};
use crate::Scalar;

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Reads a raster: a header of neuron ids, then one row of 0/1 per time step.
pub fn load_raster(path: impl AsRef<Path>) -> Result<SpikeRaster> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_raster(BufReader::new(file), &display(path))
}

pub fn read_raster<R: std::io::Read>(reader: R, name: &str) -> Result<SpikeRaster> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let parse_err =
        |line: u64, field: String, message: String| Error::Parse { path: name.to_string(), line, field, message };

    let header = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Schema { path: name.to_string(), message: "empty raster file".into() }),
    };
    let mut neurons = Vec::with_capacity(header.len());
    for (k, id) in header.iter().enumerate() {
        let parsed = id.parse::<usize>().map_err(|_| {
            parse_err(1, format!("column {}", k + 1), format!("neuron id {id:?} is not a non-negative integer"))
        })?;
        neurons.push(parsed);
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != neurons.len() {
            return Err(parse_err(
                line,
                "row".into(),
                format!("expected {} entries, found {}", neurons.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(record.len());
        for (k, cell) in record.iter().enumerate() {
            match cell {
                "0" => row.push(0u8),
                "1" => row.push(1u8),
                other => {
                    return Err(parse_err(
                        line,
                        format!("neuron {}", neurons[k]),
                        format!("entry {other:?} is not 0 or 1"),
                    ))
                }
            }
        }
        rows.push(row);
    }
    SpikeRaster::from_rows(neurons, &rows).map_err(|e| Error::Schema { path: name.to_string(), message: e.to_string() })
}

pub fn save_raster(path: impl AsRef<Path>, raster: &SpikeRaster) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_raster(&mut out, raster).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_raster<W: Write>(out: &mut W, raster: &SpikeRaster) -> std::io::Result<()> {
    let header: Vec<String> = raster.neurons().iter().map(ToString::to_string).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::with_capacity(2 * raster.width());
    for row in raster.rows() {
        line.clear();
        for (k, &b) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push(if b == 1 { '1' } else { '0' });
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a network spec document. Syntax errors carry line and column;
/// structurally wrong documents give a schema error. The spec is not
/// validated here.
pub fn load_spec<T: Scalar>(path: impl AsRef<Path>) -> Result<NetworkSpec<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, &display(path))
}

pub fn parse_spec<T: Scalar>(text: &str, name: &str) -> Result<NetworkSpec<T>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: name.to_string(),
        line: e.line() as u64,
        field: format!("column {}", e.column()),
        message: e.to_string(),
    })?;
    let doc: SpecDocument<T> =
        serde_json::from_value(value).map_err(|e| Error::Schema { path: name.to_string(), message: e.to_string() })?;
    doc.into_spec().map_err(|message| Error::Schema { path: name.to_string(), message })
}

pub fn save_spec<T: Scalar>(path: impl AsRef<Path>, spec: &NetworkSpec<T>) -> Result<()> {
    save_json(path, &SpecDocument::from_spec(spec))
}

pub fn spec_to_json<T: Scalar>(spec: &NetworkSpec<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SpecDocument::from_spec(spec))?)
}

/// Context counts, sorted by length then bits: `ell,w,n0,n1`.
pub fn save_table(
    path: impl AsRef<Path>,
    table: &ContextTable,
    only: Option<&[crate::counter::ContextKey]>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["ell", "w", "n0", "n1"])?;
    let rows: Vec<_> = match only {
        Some(keys) => keys.iter().map(|k| (k, table.get(k))).collect(),
        None => table.sorted(),
    };
    for (key, c) in rows {
        w.write_record([key.ell().to_string(), key.to_string(), c.n0.to_string(), c.n1.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per ordered pair: `source,target,delta,epsilon_used,selected`.
pub fn save_graph<T: Scalar>(path: impl AsRef<Path>, graph: &EstimatedGraph<T>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["source", "target", "delta", "epsilon_used", "selected"])?;
    for r in &graph.rows {
        w.write_record([
            r.source.to_string(),
            r.target.to_string(),
            r.delta.to_string(),
            r.epsilon.to_string(),
            u8::from(r.selected).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty-printed JSON.
pub fn save_json<V: Serialize + ?Sized>(path: impl AsRef<Path>, value: &V) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

/// Writes serializable rows as CSV with a header taken from the field names.
pub fn save_rows<V: Serialize>(path: impl AsRef<Path>, rows: &[V]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PulseKernel, RateFunction};

    #[test]
    fn raster_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let raster = SpikeRaster::from_rows(vec![3, 1], &[vec![0, 1], vec![1, 1], vec![0, 0]]).unwrap();
        save_raster(&p, &raster).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "3,1\n0,1\n1,1\n0,0\n");
        assert_eq!(load_raster(&p).unwrap(), raster);
    }

    #[test]
    fn non_binary_cell_is_named() {
        let err = read_raster("1,2\n0,1\n0,2\n".as_bytes(), "mem").unwrap_err();
        match &err {
            Error::Parse { line, field, .. } => {
                assert_eq!(*line, 3);
                assert_eq!(field, "neuron 2");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.is_io());
    }

    #[test]
    fn ragged_and_bad_header() {
        assert!(matches!(read_raster("1,2\n0\n".as_bytes(), "m"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_raster("a,2\n0,1\n".as_bytes(), "m"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_raster("1,1\n0,1\n".as_bytes(), "m"), Err(Error::Schema { .. })));
    }

    #[test]
    fn spec_missing_weights_is_a_schema_error() {
        let text = r#"{"neurons": 2, "rate": {"family": "clipped-sigmoid", "p_star": 0.2, "gain": 1.0},
                      "pulse": {"family": "geometric", "ratio": 0.5}}"#;
        let err = parse_spec::<f64>(text, "s.json").unwrap_err();
        assert!(matches!(&err, Error::Schema { message, .. } if message.contains("weights")), "{err}");
    }

    #[test]
    fn spec_syntax_error_has_position() {
        let err = parse_spec::<f64>("{\n \"neurons\": 2,,\n}", "s.json").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn spec_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        let spec = NetworkSpec::homogeneous(
            &[vec![0.0, 1.0], vec![-0.5, 0.0]],
            RateFunction::linear(0.1, 0.2, 0.5),
            PulseKernel::power(2.0),
        );
        save_spec(&p, &spec).unwrap();
        assert_eq!(load_spec::<f64>(&p).unwrap(), spec);
        let flat = r#"{"neurons": 2, "weights": [0, 1, -0.5, 0],
            "rate": {"family": "clipped-linear", "p_star": 0.1, "slope": 0.2, "intercept": 0.5},
            "pulse": [{"family": "power", "exponent": 2.0}, {"family": "power", "exponent": 2.0}]}"#;
        assert_eq!(parse_spec::<f64>(flat, "m").unwrap(), spec);
    }
}
