//! Deterministic output writers: CSV tables with provenance headers, result
//! JSON, and the per-run manifest.
//!
//! Numbers are printed with 17 significant digits (`{:.16e}`), which
//! round-trips f64 exactly, with LF line endings on every platform.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use fockgen::hilbert::{QuantumState, StateRepr};
use fockgen::metrics::WignerGrid;
use fockgen::protocol::{BranchOutcome, ProtocolResult};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const BASIS_NOTE: &str =
    "basis: field (x) atom_1 (x) ... (x) atom_N; atom basis (|e>, |g>); Fock |0>..|d-1>";
const WIGNER_NOTE: &str = "wigner convention: W(x,p) = (1/pi) Tr[rho D(a) Pi D(a)^dag], \
a = (x + i p)/sqrt(2); integral W dx dp = 1; vacuum peak 1/pi";

/// FNV-1a 64-bit over the canonical config bytes; stamped into every output.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Format one f64 with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates one CSV file: `#`-prefixed provenance header, then rows.
pub struct CsvWriter {
    buf: String,
}

impl CsvWriter {
    pub fn new(config_hash: u64, extra_header: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# fockgen v{VERSION}");
        let _ = writeln!(buf, "# config_hash: fnv1a64:{config_hash:016x}");
        let _ = writeln!(buf, "# {BASIS_NOTE}");
        for line in extra_header {
            let _ = writeln!(buf, "# {line}");
        }
        Self { buf }
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.buf, "# {line}");
    }

    pub fn row_labels(&mut self, labels: &[&str]) {
        let _ = writeln!(self.buf, "{}", labels.join(","));
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    /// Row with a leading integer cell (e.g. a Fock index).
    pub fn row_indexed(&mut self, index: i64, values: &[f64]) {
        let mut cells = vec![index.to_string()];
        cells.extend(values.iter().map(|v| fmt_f64(*v)));
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn write(self, path: &Path) -> anyhow::Result<()> {
        fs::write(path, self.buf).with_context(|| format!("writing {}", path.display()))
    }
}

/// Wigner grid CSV: axis rows, then the value matrix (one row per x sample).
pub fn write_wigner_csv(path: &Path, grid: &WignerGrid, config_hash: u64) -> anyhow::Result<()> {
    let mut w = CsvWriter::new(config_hash, &[WIGNER_NOTE]);
    w.comment("row 1: x axis; row 2: p axis; then W(x_i, p_j) matrix rows (one per x)");
    w.comment(&format!("grid integral: {}", fmt_f64(grid.integral)));
    w.row(&grid.x_axis);
    w.row(&grid.p_axis);
    for row in &grid.values {
        w.row(row);
    }
    w.write(path)
}

/// Per-branch search table.
pub fn write_branches_csv(
    path: &Path,
    branches: &[BranchOutcome],
    config_hash: u64,
) -> anyhow::Result<()> {
    let mut w = CsvWriter::new(config_hash, &[]);
    w.row_labels(&[
        "branch_l",
        "g_tau_seed",
        "g_tau",
        "beta",
        "objective",
        "one_minus_delta",
        "fidelity",
    ]);
    for b in branches {
        w.row_indexed(
            b.l as i64,
            &[b.g_tau_seed, b.g_tau, b.beta, b.objective, b.one_minus_delta, b.fidelity],
        );
    }
    w.write(path)
}

/// Embedded field state: layout metadata plus interleaved re/im amplitudes
/// (pure) or row-major matrix entries (mixed).
#[derive(Serialize)]
struct FieldStateJson {
    kind: &'static str,
    field_dim: usize,
    data: Vec<f64>,
}

fn field_state_json(state: &QuantumState) -> FieldStateJson {
    match state.repr() {
        StateRepr::Pure(amps) => FieldStateJson {
            kind: "pure",
            field_dim: state.layout().field_dim(),
            data: amps.iter().flat_map(|z| [z.re, z.im]).collect(),
        },
        StateRepr::Density(rho) => FieldStateJson {
            kind: "mixed",
            field_dim: state.layout().field_dim(),
            data: rho.data().iter().flat_map(|z| [z.re, z.im]).collect(),
        },
    }
}

/// Result JSON document; field names are part of the output contract.
pub fn write_result_json(
    path: &Path,
    result: &ProtocolResult,
    embed_field_state: bool,
    config_hash: u64,
) -> anyhow::Result<()> {
    let mut doc = serde_json::to_value(result)?;
    let obj = doc.as_object_mut().expect("result serializes to an object");
    obj.insert("artifact_version".into(), serde_json::json!(VERSION));
    obj.insert(
        "config_hash".into(),
        serde_json::json!(format!("fnv1a64:{config_hash:016x}")),
    );
    obj.insert("basis_note".into(), serde_json::json!(BASIS_NOTE));
    if embed_field_state {
        obj.insert(
            "field_state".into(),
            serde_json::to_value(field_state_json(&result.field_state))?,
        );
    }
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Per-run manifest: inputs, versions, outputs, wall time. The wall-time
/// field makes this the one output that is not byte-reproducible.
#[derive(Serialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub run: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub threads: usize,
    pub wall_time_s: f64,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Resolve an output file path inside the run directory.
pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
