//! File formats: tensor, variance and predictor CSVs, pair and summary JSON,
//! and raw little-endian sample files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use mbar_core::ingest::{RatingRecord, RatingTensor};
use mbar_core::model::Prediction;
use mbar_core::{GaussianSummary, PredictorVector, RatingDistribution, ScaleSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TENSOR_HEADER: [&str; 4] = ["user", "item", "trial", "rating"];
pub const PREDICTOR_HEADER: [&str; 3] = ["user", "item", "prediction"];
pub const VARIANCE_HEADER: &str = "variance";

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn at_line(line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("line {line}: {msg}"))
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), CliError> {
    let header = rdr.headers().map_err(|e| at_line(1, e))?;
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(at_line(
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(idx).unwrap_or("");
    raw.parse::<T>()
        .map_err(|e| at_line(record_line(rec), format!("bad {name} {raw:?}: {e}")))
}

/// Parses `user,item,trial,rating` rows into a validated tensor.
pub fn read_tensor<R: Read>(reader: R, scale: ScaleSpec) -> Result<RatingTensor, CliError> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &TENSOR_HEADER)?;
    let mut builder = RatingTensor::builder(scale);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            at_line(line, e)
        })?;
        let line = record_line(&rec);
        let user: String = field(&rec, 0, "user")?;
        let item: String = field(&rec, 1, "item")?;
        if user.is_empty() || item.is_empty() {
            return Err(at_line(line, "empty user or item"));
        }
        let trial: u32 = field(&rec, 2, "trial")?;
        let rating: i64 = field(&rec, 3, "rating")?;
        let rating = i32::try_from(rating).ok().filter(|r| scale.contains(i64::from(*r))).ok_or_else(|| {
            at_line(
                line,
                mbar_core::Error::RatingOutOfScale {
                    value: rating,
                    min: scale.min_category,
                    max: scale.max_category,
                },
            )
        })?;
        builder
            .push(RatingRecord {
                user,
                item,
                trial,
                rating,
            })
            .map_err(|e| at_line(line, e))?;
    }
    Ok(builder.finish())
}

pub fn read_tensor_file(path: &Path, scale: ScaleSpec) -> Result<RatingTensor, CliError> {
    read_tensor(open(path)?, scale).map_err(|e| e.in_file(path))
}

pub fn write_tensor<W: Write>(writer: W, tensor: &RatingTensor) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TENSOR_HEADER)?;
    for r in tensor.records() {
        w.write_record([r.user.as_str(), r.item.as_str(), &r.trial.to_string(), &r.rating.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a one-column `variance` CSV.
pub fn read_variances<R: Read>(reader: R) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &[VARIANCE_HEADER])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| at_line(e.position().map_or(0, |p| p.line()), e))?;
        let v: f64 = field(&rec, 0, "variance")?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(at_line(record_line(&rec), format!("invalid variance {v}")));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn read_variances_file(path: &Path) -> Result<Vec<f64>, CliError> {
    read_variances(open(path)?).map_err(|e| e.in_file(path))
}

pub fn write_variances<W: Write>(writer: W, variances: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([VARIANCE_HEADER])?;
    for v in variances {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `user,item,prediction` rows in file order.
pub fn read_predictors<R: Read>(reader: R) -> Result<PredictorVector, CliError> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, &PREDICTOR_HEADER)?;
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| at_line(e.position().map_or(0, |p| p.line()), e))?;
        let value: f64 = field(&rec, 2, "prediction")?;
        if !value.is_finite() {
            return Err(at_line(record_line(&rec), "prediction must be finite"));
        }
        entries.push(Prediction {
            user: field(&rec, 0, "user")?,
            item: field(&rec, 1, "item")?,
            value,
        });
    }
    Ok(PredictorVector::new(entries))
}

pub fn read_predictors_file(path: &Path) -> Result<PredictorVector, CliError> {
    read_predictors(open(path)?).map_err(|e| e.in_file(path))
}

pub fn write_predictors<W: Write>(writer: W, predictors: &PredictorVector) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PREDICTOR_HEADER)?;
    for p in &predictors.entries {
        w.write_record([p.user.as_str(), p.item.as_str(), &p.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairsDoc {
    Bare(Vec<RatingDistribution>),
    Wrapped { result: PairsField },
    Field(PairsField),
}

#[derive(Deserialize)]
struct PairsField {
    pairs: Vec<RatingDistribution>,
}

/// Reads pairs from a bare JSON array, `{"pairs": [...]}`, or an ingest
/// report `{"result": {"pairs": [...]}}`.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<RatingDistribution>, CliError> {
    let doc: PairsDoc =
        serde_json::from_reader(reader).map_err(|e| CliError::Data(format!("pairs JSON: {e}")))?;
    let pairs = match doc {
        PairsDoc::Bare(p) => p,
        PairsDoc::Wrapped { result } => result.pairs,
        PairsDoc::Field(f) => f.pairs,
    };
    pairs
        .into_iter()
        .map(|d| RatingDistribution::new(d.user, d.item, d.mean, d.variance).map_err(CliError::from))
        .collect()
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<RatingDistribution>, CliError> {
    read_pairs(open(path)?).map_err(|e| e.in_file(path))
}

/// A metric distribution read back from JSON, with its histogram if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub mean: f64,
    pub variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDoc {
    pub edges: Vec<f64>,
    pub heights: Vec<f64>,
}

impl SummaryDoc {
    pub fn gaussian(&self) -> Result<GaussianSummary, CliError> {
        Ok(GaussianSummary::new(self.mean, self.variance)?)
    }
}

/// Reads `{"mean", "variance", "histogram"?}`, either bare or under the
/// `result` key of a report.
pub fn read_summary<R: Read>(reader: R) -> Result<SummaryDoc, CliError> {
    let value: serde_json::Value =
        serde_json::from_reader(reader).map_err(|e| CliError::Data(format!("summary JSON: {e}")))?;
    let body = value.get("result").cloned().unwrap_or(value);
    serde_json::from_value(body).map_err(|e| CliError::Data(format!("summary JSON: {e}")))
}

pub fn read_summary_file(path: &Path) -> Result<SummaryDoc, CliError> {
    read_summary(open(path)?).map_err(|e| e.in_file(path))
}

/// Raw float64 little-endian values, no header.
pub fn write_values<W: Write>(mut writer: W, values: &[f64]) -> Result<(), CliError> {
    for v in values {
        writer.write_all(&v.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_values<R: Read>(mut reader: R) -> Result<Vec<f64>, CliError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Data(format!(
            "values file length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn read_values_file(path: &Path) -> Result<Vec<f64>, CliError> {
    read_values(open(path)?).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scale() -> ScaleSpec {
        ScaleSpec::five_star()
    }

    #[test]
    fn tensor_parses_crlf_and_comments() {
        let text = "user,item,trial,rating\r\n# note\r\nu1,i1,1,4\r\nu1,i1,2,5\r\n";
        let t = read_tensor(text.as_bytes(), scale()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.records()[1].rating, 5);
    }

    #[test]
    fn tensor_errors_carry_line_numbers() {
        let cases = [
            ("user,item,trial,rating\nu,i,1,4\nu,i,2,9\n", "line 3"),
            ("user,item,trial,rating\nu,i,1,4\nu,i,1,3\n", "line 3"),
            ("user,item,trial,rating\nu,i,6,4\n", "line 2"),
            ("user,item,trial,rating\nu,i,x,4\n", "line 2"),
            ("user,item,trial,rating\nu,i,1,99999999999\n", "line 2"),
            ("user,item,rating\nu,i,4\n", "line 1"),
            ("user,item,trial,rating\nu,i,1\n", "line 2"),
        ];
        for (text, line) in cases {
            let err = read_tensor(text.as_bytes(), scale()).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(line), "{text:?}: {err}");
        }
    }

    #[test]
    fn predictors_and_variances() {
        let p = read_predictors("user,item,prediction\na,b,3.5\nc,d,-1\n".as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.entries[1].value, -1.0);
        assert!(read_predictors("user,item,prediction\na,b,nan\n".as_bytes()).is_err());
        let v = read_variances("variance\n0.5\n0\n".as_bytes()).unwrap();
        assert_eq!(v, vec![0.5, 0.0]);
        let err = read_variances("variance\n0.5\n-1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn pairs_accept_three_shapes() {
        let bare = r#"[{"user":"u","item":"i","mean":3.0,"variance":0.5}]"#;
        let field = r#"{"pairs":[{"user":"u","item":"i","mean":3.0,"variance":0.5}]}"#;
        let report = r#"{"tool":"x","result":{"pairs":[{"user":"u","item":"i","mean":3.0,"variance":0.5}]}}"#;
        for text in [bare, field, report] {
            let p = read_pairs(text.as_bytes()).unwrap();
            assert_eq!(p.len(), 1);
            assert_eq!(p[0].variance, 0.5);
        }
        let negative = r#"[{"user":"u","item":"i","mean":3.0,"variance":-0.5}]"#;
        assert!(read_pairs(negative.as_bytes()).is_err());
    }

    #[test]
    fn summary_bare_or_wrapped() {
        let a = read_summary(r#"{"mean":0.7,"variance":0.01}"#.as_bytes()).unwrap();
        assert!(a.histogram.is_none());
        let b = read_summary(
            r#"{"result":{"mean":0.7,"variance":0.01,"histogram":{"edges":[0,1],"heights":[1]}}}"#.as_bytes(),
        )
        .unwrap();
        assert_eq!(b.histogram.unwrap().heights, vec![1.0]);
    }

    fn record_strategy() -> impl Strategy<Value = Vec<(u8, u8, u32, i32)>> {
        prop::collection::vec((0u8..6, 0u8..6, 1u32..=5, 1i32..=5), 0..60)
    }

    proptest! {
        #[test]
        fn tensor_round_trip(raw in record_strategy()) {
            let mut builder = RatingTensor::builder(scale());
            for (u, i, t, r) in raw {
                let _ = builder.push(RatingRecord {
                    user: format!("user {u}"),
                    item: format!("it,{i}"),
                    trial: t,
                    rating: r,
                });
            }
            let tensor = builder.finish();
            let mut buf = Vec::new();
            write_tensor(&mut buf, &tensor).unwrap();
            let back = read_tensor(buf.as_slice(), scale()).unwrap();
            prop_assert_eq!(back, tensor);
        }

        #[test]
        fn values_round_trip(v in prop::collection::vec(any::<f64>(), 0..100)) {
            let mut buf = Vec::new();
            write_values(&mut buf, &v).unwrap();
            let back = read_values(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), v.len());
            for (a, b) in back.iter().zip(&v) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn variances_round_trip(v in prop::collection::vec(0.0f64..100.0, 0..50)) {
            let mut buf = Vec::new();
            write_variances(&mut buf, &v).unwrap();
            prop_assert_eq!(read_variances(buf.as_slice()).unwrap(), v);
        }
    }
}
