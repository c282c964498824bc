//! Run manifests and CSV/JSON writers.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use tlid_core::Error;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
    /// Column layout of accompanying CSV output, e.g. `curve/v1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, params: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            schema: None,
        }
    }

    pub fn with_schema(mut self, schema: &str) -> Self {
        self.schema = Some(schema.to_string());
        self
    }
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

/// Print `body` with the manifest merged in under `"manifest"`.
pub fn print_json(body: impl Serialize, manifest: &RunManifest) -> Result<(), Error> {
    let mut v = serde_json::to_value(body).map_err(|e| Error::Config(e.to_string()))?;
    if let Value::Object(map) = &mut v {
        map.insert(
            "manifest".into(),
            serde_json::to_value(manifest).map_err(|e| Error::Config(e.to_string()))?,
        );
    }
    let s = serde_json::to_string_pretty(&v).map_err(|e| Error::Config(e.to_string()))?;
    stdout_result(writeln!(io::stdout().lock(), "{s}"))
}

/// A closed downstream pipe is not an error.
fn stdout_result(r: io::Result<()>) -> Result<(), Error> {
    match r {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
            Err(Error::Config(format!("stdout: {e}")))
        }
        _ => Ok(()),
    }
}

/// 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Write CSV rows. To stdout the manifest leads as a `# manifest:` comment;
/// to a file it goes to `<file>.manifest.json`.
pub fn write_csv(
    out: Option<&Path>,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
    manifest: &RunManifest,
) -> Result<(), Error> {
    let json = serde_json::to_string(manifest).map_err(|e| Error::Config(e.to_string()))?;
    let sink: Box<dyn Write> = match out {
        Some(path) => {
            std::fs::write(sidecar_path(path), format!("{json}\n")).map_err(|e| io_err(path, e))?;
            Box::new(File::create(path).map_err(|e| io_err(path, e))?)
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout_result(writeln!(stdout, "# manifest: {json}"))?;
            Box::new(stdout)
        }
    };
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| Error::Config(e.to_string());
    let body = (|| {
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok::<(), csv::Error>(())
    })();
    match body {
        Err(e) if matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == io::ErrorKind::BrokenPipe) => {
            Ok(())
        }
        r => r.map_err(csv_err),
    }
}
