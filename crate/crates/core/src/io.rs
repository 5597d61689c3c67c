//! On-disk formats for spectra and band reports.
//!
//! CSV columns are fixed:
//!
//! ```text
//! dp_over_gamma,re_eps,im_eps,re_mu,im_mu,re_n,im_n,fom,flags
//! ```
//!
//! Numbers use the shortest decimal that parses back to the same `f64`.
//! Missing values (pole or singular samples) are empty cells, a lossless
//! figure of merit is the literal `inf`, and flags are `|`-separated names.
//! The run metadata of a CSV file goes to a `<file>.meta.json` sidecar so the
//! table itself stays plain. JSON files carry the same rows plus metadata.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::response::{FigureOfMerit, ResponseSample, SampleFlags};
use crate::sweep::{Band, ResponseSpectrum, SpectrumMetadata, SummaryReport};

pub const CSV_HEADER: [&str; 9] = [
    "dp_over_gamma",
    "re_eps",
    "im_eps",
    "re_mu",
    "im_mu",
    "re_n",
    "im_n",
    "fom",
    "flags",
];

/// Literal used for a lossless figure of merit.
pub const LOSSLESS_CELL: &str = "inf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_owned(),
        source,
    }
}

/// One row of a spectrum file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub dp_over_gamma: f64,
    pub re_eps: Option<f64>,
    pub im_eps: Option<f64>,
    pub re_mu: Option<f64>,
    pub im_mu: Option<f64>,
    pub re_n: Option<f64>,
    pub im_n: Option<f64>,
    #[serde(with = "fom_serde")]
    pub fom: Option<FigureOfMerit>,
    #[serde(with = "flags_serde")]
    pub flags: SampleFlags,
}

impl From<&ResponseSample> for SpectrumRow {
    fn from(s: &ResponseSample) -> Self {
        Self {
            dp_over_gamma: s.delta_p,
            re_eps: s.eps_r.map(|z| z.re),
            im_eps: s.eps_r.map(|z| z.im),
            re_mu: s.mu_r.map(|z| z.re),
            im_mu: s.mu_r.map(|z| z.im),
            re_n: s.n.map(|z| z.re),
            im_n: s.n.map(|z| z.im),
            fom: s.fom,
            flags: s.flags,
        }
    }
}

pub fn rows(spectrum: &ResponseSpectrum) -> Vec<SpectrumRow> {
    spectrum.samples.iter().map(SpectrumRow::from).collect()
}

mod fom_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::LOSSLESS_CELL;
    use crate::response::FigureOfMerit;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<FigureOfMerit>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(FigureOfMerit::Finite(x)) => Cell::Number(*x).serialize(s),
            Some(FigureOfMerit::Lossless) => Cell::Text(LOSSLESS_CELL.into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<FigureOfMerit>, D::Error> {
        match Option::<Cell>::deserialize(d)? {
            None => Ok(None),
            Some(Cell::Number(x)) => Ok(Some(FigureOfMerit::Finite(x))),
            Some(Cell::Text(t)) if t == LOSSLESS_CELL => Ok(Some(FigureOfMerit::Lossless)),
            Some(Cell::Text(t)) => Err(serde::de::Error::custom(format!("bad fom `{t}`"))),
        }
    }
}

mod flags_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::response::SampleFlags;

    pub fn serialize<S: Serializer>(v: &SampleFlags, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SampleFlags, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn format_csv(rows: &[SpectrumRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        let fom = match r.fom {
            None => String::new(),
            Some(FigureOfMerit::Lossless) => LOSSLESS_CELL.to_owned(),
            Some(FigureOfMerit::Finite(x)) => x.to_string(),
        };
        w.write_record([
            r.dp_over_gamma.to_string(),
            cell(r.re_eps),
            cell(r.im_eps),
            cell(r.re_mu),
            cell(r.im_mu),
            cell(r.re_n),
            cell(r.im_n),
            fom,
            r.flags.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
}

pub fn parse_csv(text: &str) -> Result<Vec<SpectrumRow>, IoError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header_err = |message: String| IoError::Parse { line: 1, message };
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if columns != CSV_HEADER {
        let missing: Vec<&str> = CSV_HEADER
            .iter()
            .filter(|c| !columns.iter().any(|x| x == *c))
            .copied()
            .collect();
        return Err(header_err(format!(
            "unexpected header `{}` (missing: {})",
            columns.join(","),
            missing.join(", ")
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let f = record.map_err(|e| IoError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line_no = f.position().map_or(0, |p| p.line() as usize);
        let err = |message: String| IoError::Parse {
            line: line_no,
            message,
        };
        let num = |i: usize| -> Result<Option<f64>, IoError> {
            if f[i].is_empty() {
                Ok(None)
            } else {
                f[i].parse().map(Some).map_err(|_| {
                    err(format!(
                        "bad number `{}` in column {}",
                        &f[i], CSV_HEADER[i]
                    ))
                })
            }
        };
        let fom = match &f[7] {
            "" => None,
            LOSSLESS_CELL => Some(FigureOfMerit::Lossless),
            x => Some(FigureOfMerit::Finite(
                x.parse().map_err(|_| err(format!("bad fom `{x}`")))?,
            )),
        };
        rows.push(SpectrumRow {
            dp_over_gamma: num(0)?.ok_or_else(|| err("missing detuning".into()))?,
            re_eps: num(1)?,
            im_eps: num(2)?,
            re_mu: num(3)?,
            im_mu: num(4)?,
            re_n: num(5)?,
            im_n: num(6)?,
            fom,
            flags: f[8].parse().map_err(err)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub metadata: SpectrumMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub rows: Vec<SpectrumRow>,
}

pub fn format_json(file: &SpectrumFile) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(file)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_json(text: &str) -> Result<SpectrumFile, IoError> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, creating missing parent directories.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(io_err(&parent))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io {
        path: path.to_owned(),
        source: e.error,
    })?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes a spectrum file; CSV output also gets a metadata sidecar.
pub fn write_spectrum(
    spectrum: &ResponseSpectrum,
    format: Format,
    path: &Path,
    generated_at: Option<u64>,
) -> Result<(), IoError> {
    match format {
        Format::Csv => {
            write_atomic(path, format_csv(&rows(spectrum)).as_bytes())?;
            let meta = MetadataFile {
                metadata: spectrum.metadata.clone(),
                generated_at,
            };
            let mut text = serde_json::to_string_pretty(&meta)?;
            text.push('\n');
            write_atomic(&sidecar_path(path), text.as_bytes())
        }
        Format::Json => {
            let file = SpectrumFile {
                metadata: spectrum.metadata.clone(),
                generated_at,
                rows: rows(spectrum),
            };
            write_atomic(path, format_json(&file)?.as_bytes())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataFile {
    pub metadata: SpectrumMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<SpectrumRow>, IoError> {
    parse_csv(&fs::read_to_string(path).map_err(io_err(path))?)
}

pub fn read_spectrum_json(path: &Path) -> Result<SpectrumFile, IoError> {
    parse_json(&fs::read_to_string(path).map_err(io_err(path))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub metadata: SpectrumMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
    pub summary: SummaryReport,
}

pub fn format_bands_csv(bands: &[Band]) -> String {
    let mut out = String::from("predicate,lo,hi\n");
    for b in bands {
        out.push_str(&format!("{},{},{}\n", b.predicate, b.lo, b.hi));
    }
    out
}

/// Renders the band report: the full summary as JSON, or the band table as
/// CSV (left-handed, then Re ε < 0, then Re μ < 0 bands).
pub fn format_report(report: &ReportFile, format: Format) -> Result<String, IoError> {
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let s = &report.summary;
            let bands: Vec<Band> = s
                .left_handed
                .iter()
                .map(|b| b.band)
                .chain(s.re_eps_neg.iter().copied())
                .chain(s.re_mu_neg.iter().copied())
                .collect();
            format_bands_csv(&bands)
        }
    })
}

pub fn write_report(report: &ReportFile, format: Format, path: &Path) -> Result<(), IoError> {
    write_atomic(path, format_report(report, format)?.as_bytes())
}
