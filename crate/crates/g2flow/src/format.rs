//! Profile files (JSON and CSV) and deterministic JSON output.
//!
//! Every float is written with 17 significant digits and a lowercase `e`
//! exponent, so identical runs give identical bytes.

use std::io;
use std::path::Path;

use g2flow_core::orbits::ModelId;
use g2flow_core::Profile;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Format implied by a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown model '{0}' (expected g2-su3, su3-t2, su3-t123 or sp2)")]
    Model(String),
    #[error("CSV profile has no '# model: …' line and no --model was given")]
    MissingModel,
    #[error("invalid profile: {0}")]
    Profile(#[from] g2flow_core::profile::ProfileError),
}

/// A float in the fixed output notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// serde_json formatter that writes floats with [`fmt_f64`]. Wraps
/// either the compact or the pretty layout.
pub struct SciFormatter<F> {
    inner: F,
}

impl<F: Formatter> Formatter for SciFormatter<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

fn write_with<T: Serialize, F: Formatter>(value: &T, inner: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter { inner });
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Indented JSON with fixed float notation and a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    write_with(value, PrettyFormatter::with_indent(b"  "))
}

/// Single-line JSON with fixed float notation and a trailing newline.
pub fn to_json_compact<T: Serialize>(value: &T) -> String {
    write_with(value, serde_json::ser::CompactFormatter)
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub model: String,
    pub t: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ProfileFile {
    pub fn from_profile(p: &Profile) -> Self {
        ProfileFile {
            model: p.model().as_str().to_string(),
            t: p.t().to_vec(),
            f1: p.f1().to_vec(),
            f2: p.f2().to_vec(),
            f3: p.f3().to_vec(),
            theta: p.theta().to_vec(),
        }
    }

    pub fn into_profile(self) -> Result<Profile, FormatError> {
        let model: ModelId = self.model.parse().map_err(|_| FormatError::Model(self.model.clone()))?;
        Ok(Profile::from_arrays(model, self.t, self.f1, self.f2, self.f3, self.theta)?)
    }
}

pub fn profile_to_json(p: &Profile) -> String {
    to_json_compact(&ProfileFile::from_profile(p))
}

pub fn profile_from_json(text: &str) -> Result<Profile, FormatError> {
    let file: ProfileFile = serde_json::from_str(text)?;
    file.into_profile()
}

const CSV_HEADER: [&str; 5] = ["t", "f1", "f2", "f3", "theta"];

/// CSV with a `# model: <id>` first line and columns t, f1, f2, f3, theta.
pub fn profile_to_csv(p: &Profile) -> String {
    let mut out = format!("# model: {}\n", p.model());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for i in 0..p.len() {
        let [f1, f2, f3] = p.radii().at(i);
        let row = [p.t()[i], f1, f2, f3, p.theta()[i]].map(fmt_f64);
        w.write_record(&row).expect("in-memory write");
    }
    let body = w.into_inner().expect("in-memory flush");
    out.push_str(std::str::from_utf8(&body).expect("CSV of ASCII floats"));
    out
}

/// Reads a CSV profile. `model` overrides the `# model:` line.
pub fn profile_from_csv(text: &str, model: Option<ModelId>) -> Result<Profile, FormatError> {
    let declared = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .and_then(|l| l.trim().strip_prefix("model:"))
        .map(|m| m.trim().to_string());
    let model = match (model, declared) {
        (Some(m), _) => m,
        (None, Some(m)) => m.parse().map_err(|_| FormatError::Model(m.clone()))?,
        (None, None) => return Err(FormatError::MissingModel),
    };
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let idx: Vec<Option<usize>> = CSV_HEADER.iter().map(|h| col(h)).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        for (k, c) in idx.iter().enumerate() {
            // f3 defaults to f2 and f2 to f1 when a model shares radii.
            let source = c.or(if k == 3 { idx[2] } else { None }).or(if k >= 2 { idx[1] } else { None });
            let Some(j) = source else {
                return Err(FormatError::Csv(csv_error(format!("missing column '{}'", CSV_HEADER[k]))));
            };
            let field = rec.get(j).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| FormatError::Csv(csv_error(format!("row {}: '{field}' is not a number", line + 1))))?;
            cols[k].push(v);
        }
    }
    let mut it = cols.into_iter();
    let mut next = || it.next().expect("five columns");
    let (t, f1, f2, f3, theta) = (next(), next(), next(), next(), next());
    Ok(Profile::from_arrays(model, t, f1, f2, f3, theta)?)
}

fn csv_error(msg: String) -> csv::Error {
    csv::Error::from(io::Error::new(io::ErrorKind::InvalidData, msg))
}

pub fn profile_to_string(p: &Profile, format: Format) -> String {
    match format {
        Format::Json => profile_to_json(p),
        Format::Csv => profile_to_csv(p),
    }
}

pub fn profile_from_str(text: &str, format: Format, model: Option<ModelId>) -> Result<Profile, FormatError> {
    match format {
        Format::Json => {
            let p = profile_from_json(text)?;
            match model {
                Some(m) if m != p.model() => Ok(p.relabel(m)?),
                _ => Ok(p),
            }
        }
        Format::Csv => profile_from_csv(text, model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use g2flow_core::flows;

    #[test]
    fn float_notation() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.125), "-1.2500000000000000e-1");
        assert_eq!(fmt_f64(6.02e23), "6.0200000000000000e23");
        let x = 0.1f64 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = flows::weak_g2(4.0, (0.0, 1.0), 33).unwrap();
        let text = profile_to_json(&p);
        let q = profile_from_json(&text).unwrap();
        assert_eq!(q.t(), p.t());
        assert_eq!(q.f1(), p.f1());
        assert_eq!(q.theta(), p.theta());
        assert_eq!(profile_to_json(&q), text);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = flows::symplectic_deformed(0.3, (0.5, 2.0), 41).unwrap().profile;
        let text = profile_to_csv(&p);
        assert!(text.starts_with("# model: su3-t2\nt,f1,f2,f3,theta\n"));
        let q = profile_from_csv(&text, None).unwrap();
        assert_eq!(q.f3(), p.f3());
        assert_eq!(profile_to_csv(&q), text);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(profile_from_json("{\"model\": \"su3-t2\", \"t\": [0.0,"), Err(FormatError::Json(_))));
        let bad_model = r#"{"model":"e8","t":[0,1],"f1":[1,1],"f2":[1,1],"f3":[1,1],"theta":[0,0]}"#;
        assert!(matches!(profile_from_json(bad_model), Err(FormatError::Model(_))));
        let short = r#"{"model":"su3-t2","t":[0,1],"f1":[1],"f2":[1,1],"f3":[1,1],"theta":[0,0]}"#;
        assert!(matches!(profile_from_json(short), Err(FormatError::Profile(_))));
        assert!(matches!(profile_from_csv("t,f1,f2,f3,theta\n0,1,1,1,0\n", None), Err(FormatError::MissingModel)));
        assert!(profile_from_csv("# model: su3-t2\nt,f1,f2,f3,theta\n0,1,x,1,0\n", None).is_err());
    }
}
