//! Configuration parsing and report emission for the `mring` binary.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use mring_core::{ErrorKind, MismatchMode, RingConfig};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),

    #[error("missing key '{0}'")]
    MissingKey(&'static str),

    #[error("key '{0}' is not a number")]
    NotNumeric(&'static str),

    #[error("key '{key}': {reason}")]
    InvalidValue { key: &'static str, reason: String },

    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Core(#[from] mring_core::Error),
}

impl CliError {
    /// 1 output I/O, 2 configuration, 3 outside the approximation regime, 4 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Regime => 3,
                ErrorKind::Solver => 4,
            },
            _ => 2,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Experiment configuration as written on disk. Angles are multiples of pi.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub n1: usize,
    pub n2: usize,
    pub theta_over_pi: f64,
    pub alpha_over_pi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<MismatchMode>,
}

impl RunConfig {
    pub fn ring(&self) -> CliResult<RingConfig> {
        Ok(RingConfig::new(
            self.n1,
            self.n2,
            self.theta_over_pi * PI,
            self.alpha_over_pi * PI,
        )?)
    }
}

fn number(doc: &Map<String, Value>, key: &'static str) -> CliResult<Option<f64>> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => n.as_f64().map(Some).ok_or(CliError::NotNumeric(key)),
        Some(_) => Err(CliError::NotNumeric(key)),
    }
}

fn count(doc: &Map<String, Value>, key: &'static str, min: u64) -> CliResult<Option<usize>> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => match n.as_u64() {
            Some(v) if v >= min => Ok(Some(v as usize)),
            _ => Err(CliError::InvalidValue {
                key,
                reason: format!("expected an integer >= {min}, got {n}"),
            }),
        },
        Some(_) => Err(CliError::NotNumeric(key)),
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let doc: Value = serde_json::from_str(text)?;
    let doc = doc.as_object().ok_or(CliError::InvalidValue {
        key: "config",
        reason: "expected a JSON object".into(),
    })?;

    let n1 = count(doc, "n1", 1)?.ok_or(CliError::MissingKey("n1"))?;
    let n2 = count(doc, "n2", 1)?.ok_or(CliError::MissingKey("n2"))?;
    let theta_over_pi =
        number(doc, "theta_over_pi")?.ok_or(CliError::MissingKey("theta_over_pi"))?;
    if !(theta_over_pi > 0.0 && theta_over_pi < 0.5) {
        return Err(CliError::InvalidValue {
            key: "theta_over_pi",
            reason: format!("must lie in (0, 0.5), got {theta_over_pi}"),
        });
    }
    let alpha_over_pi =
        number(doc, "alpha_over_pi")?.ok_or(CliError::MissingKey("alpha_over_pi"))?;
    if !alpha_over_pi.is_finite() {
        return Err(CliError::InvalidValue {
            key: "alpha_over_pi",
            reason: "not finite".into(),
        });
    }
    let steps = count(doc, "steps", 0)?;
    let mode = match doc.get("mode") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value(v.clone()).map_err(|_| CliError::InvalidValue {
                key: "mode",
                reason: format!("expected \"raw\" or \"phase_aligned\", got {v}"),
            })?,
        ),
    };
    let config = RunConfig {
        n1,
        n2,
        theta_over_pi,
        alpha_over_pi,
        steps,
        mode,
    };
    config.ring()?;
    Ok(config)
}

pub fn read_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// JSON formatter writing every float with 17 significant digits.
struct PreciseFloats(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for PreciseFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty-printed JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let fmt = PreciseFloats(serde_json::ser::PrettyFormatter::new());
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Serializes the config back to its on-disk form.
pub fn emit_config(config: &RunConfig) -> CliResult<String> {
    to_json(config)
}

/// Provenance block appended to every JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
        }
    }
}

/// Merges `body` (an object) with a trailing `manifest` key.
pub fn with_manifest<T: Serialize>(body: &T, manifest: &RunManifest) -> CliResult<Value> {
    let mut map = match serde_json::to_value(body)? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("manifest".into(), serde_json::to_value(manifest)?);
    Ok(Value::Object(map))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `site,prob_a,prob_b` rows for `n = 0..=N`; row `N` repeats site 0 so the
/// ring closes when plotted. Empty input gives the header only.
pub fn profile_csv(prob_a: &[f64], prob_b: &[f64]) -> String {
    let mut out = String::from("site,prob_a,prob_b\n");
    let n = prob_a.len().min(prob_b.len());
    for site in 0..n + usize::from(n > 0) {
        let k = site % n.max(1);
        let _ = writeln!(out, "{site},{},{}", fmt_f64(prob_a[k]), fmt_f64(prob_b[k]));
    }
    out
}

/// `site,mismatch` rows.
pub fn mismatch_csv(per_site: &[f64]) -> String {
    let mut out = String::from("site,mismatch\n");
    for (site, m) in per_site.iter().enumerate() {
        let _ = writeln!(out, "{site},{}", fmt_f64(*m));
    }
    out
}

/// Byte prefix of a report before its `manifest` key, the part that must be
/// reproducible between runs.
pub fn report_body(text: &str) -> &str {
    text.find("\"manifest\"").map_or(text, |i| &text[..i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = parse_config(r#"{"n1":7,"n2":7,"theta_over_pi":0.25,"alpha_over_pi":0}"#).unwrap();
        let ring = c.ring().unwrap();
        assert_eq!((ring.n1, ring.n2), (7, 7));
        assert_eq!(ring.theta, 0.25 * PI);
        assert_eq!(c.steps, None);
    }

    #[test]
    fn optional_keys() {
        let c = parse_config(
            r#"{"n1":4,"n2":4,"theta_over_pi":0.25,"alpha_over_pi":0.05,"steps":10,"mode":"raw"}"#,
        )
        .unwrap();
        assert_eq!(c.steps, Some(10));
        assert_eq!(c.mode, Some(MismatchMode::Raw));
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (
                r#"{"n1":0,"n2":7,"theta_over_pi":0.25,"alpha_over_pi":0}"#,
                "n1",
            ),
            (r#"{"n1":7,"theta_over_pi":0.25,"alpha_over_pi":0}"#, "n2"),
            (
                r#"{"n1":7,"n2":7,"theta_over_pi":"x","alpha_over_pi":0}"#,
                "theta_over_pi",
            ),
            (
                r#"{"n1":7,"n2":7,"theta_over_pi":0.7,"alpha_over_pi":0}"#,
                "theta_over_pi",
            ),
            (r#"{"n1":7,"n2":7,"theta_over_pi":0.25}"#, "alpha_over_pi"),
            (
                r#"{"n1":7,"n2":7,"theta_over_pi":0.25,"alpha_over_pi":0,"mode":"x"}"#,
                "mode",
            ),
            (
                r#"{"n1":7,"n2":7,"theta_over_pi":0.25,"alpha_over_pi":0,"steps":-1}"#,
                "steps",
            ),
        ];
        for (text, key) in cases {
            let err = parse_config(text).unwrap_err();
            assert!(err.to_string().contains(key), "{text}: {err}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn floats_have_17_digits() {
        let s = to_json(&[0.1_f64, 1.0 / 3.0]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0]);
    }

    #[test]
    fn profile_rows_close_the_ring() {
        let csv = profile_csv(&[0.5, 0.25, 0.25], &[0.1, 0.2, 0.7]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "site,prob_a,prob_b");
        assert!(lines[4].starts_with("3,5.0000000000000000e-1,"));
        assert_eq!(profile_csv(&[], &[]), "site,prob_a,prob_b\n");
    }

    #[test]
    fn manifest_is_last() {
        let v = with_manifest(
            &serde_json::json!({"a": 1}),
            &RunManifest::new("x", Value::Null),
        )
        .unwrap();
        let text = to_json(&v).unwrap();
        assert!(report_body(&text).contains("\"a\""));
        assert!(!report_body(&text).contains("manifest"));
    }
}
