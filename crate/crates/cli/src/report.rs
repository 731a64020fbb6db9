//! Report bundle: machine-readable results plus plot-ready data files,
//! every file traceable to the resolved-config hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

#[derive(Clone, Debug)]
pub struct Provenance {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(experiment: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: config_hash.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# experiment={} config_hash={} seed={} version={}\n",
            self.experiment, self.config_hash, self.seed, self.version
        )
    }
}

pub struct ReportBundle {
    out_dir: PathBuf,
    provenance: Provenance,
    pub written: Vec<PathBuf>,
}

impl ReportBundle {
    pub fn create(out_dir: &Path, provenance: Provenance) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }


    /// Write the main result JSON with the provenance block attached.
    pub fn write_result(&mut self, mut body: Value) -> std::io::Result<()> {
        if let Value::Object(map) = &mut body {
            map.insert("provenance".into(), self.provenance.to_json());
        }
        let text = serde_json::to_string_pretty(&body).expect("json serializes");
        self.write_raw("result.json", &(text + "\n"))
    }

    /// Write a CSV file, prefixed with a provenance comment line.
    pub fn write_csv(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        let text = format!("{}{}", self.provenance.csv_header(), content);
        self.write_raw(name, &text)
    }

    /// Write a file verbatim (canonical config echo, golden dumps).
    pub fn write_raw(&mut self, name: &str, content: &str) -> std::io::Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, content)?;
        self.written.push(path);
        Ok(())
    }
}

/// CSV of a 4×4 matrix as `state,row,col,value` rows appended to `out`.
pub fn matrix_series(out: &mut String, state: &str, m: &nalgebra::DMatrix<num_complex::Complex64>, imag: bool) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = if imag { m[(i, j)].im } else { m[(i, j)].re };
            out.push_str(&format!("{state},{i},{j},{v:.6}\n"));
        }
    }
}
