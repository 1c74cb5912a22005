//! CSV tables, key-value reports and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use beamforge_core::design::ControlWaveform;
use beamforge_core::dynamics::{PhasePoint, Trajectory};
use beamforge_core::electrodes::{EffectiveControls, VoltageTrace};
use sha2::{Digest, Sha256};

pub const MANIFEST_FORMAT: &str = "beamforge-manifest-1";

/// 17 significant digits, `.` decimal separator.
pub fn num(v: f64) -> String {
    // no negative zero in tables
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// An in-memory CSV table with a single header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        self.rows.push(values.iter().map(|&v| num(v)).collect());
    }

    pub fn push_cells(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn trajectory_table(tr: &Trajectory) -> Table {
    let mut t = Table::new(&[
        "t",
        "mean_z",
        "mean_p",
        "var_z",
        "var_p",
        "cov_zp",
        "invariant_drift_max",
    ]);
    for (i, m) in tr.moments.iter().enumerate() {
        t.push(&[
            tr.times[i],
            m.mean_position,
            m.mean_momentum,
            m.position_variance(),
            m.momentum_variance(),
            m.covariance(),
            tr.invariant_drift_max[i],
        ]);
    }
    t
}

pub fn snapshot_table(points: &[PhasePoint]) -> Table {
    let mut t = Table::new(&["z", "p"]);
    for p in points {
        t.push(&[p.position, p.momentum]);
    }
    t
}

pub fn voltage_table(trace: &VoltageTrace) -> Table {
    let mut t = Table::new(&["t", "U1", "U2"]);
    for i in 0..trace.len() {
        t.push(&[trace.times[i], trace.u1[i], trace.u2[i]]);
    }
    t
}

/// `z0` is empty where the stiffness is below the floor.
pub fn waveform_table(w: &ControlWaveform) -> Table {
    let mut t = Table::new(&["t", "k", "g", "z0"]);
    for i in 0..w.len() {
        t.push_cells(vec![
            num(w.times[i]),
            num(w.stiffness[i]),
            num(w.force_offset[i]),
            w.center[i].map(num).unwrap_or_default(),
        ]);
    }
    t
}

pub fn effective_table(e: &EffectiveControls) -> Table {
    let w = &e.waveform;
    let mut t = Table::new(&["t", "k_eff", "g_eff", "z_eff", "untrapped"]);
    for i in 0..w.len() {
        t.push_cells(vec![
            num(w.times[i]),
            num(w.stiffness[i]),
            num(w.force_offset[i]),
            w.center[i].map(num).unwrap_or_default(),
            u8::from(e.untrapped[i]).to_string(),
        ]);
    }
    t
}

pub fn key_values(lines: &[(String, String)]) -> String {
    lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one output directory and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> io::Result<()> {
        self.write(name, &table.to_csv())
    }

    /// Write `manifest.txt` listing every file written so far.
    pub fn finish(mut self, config_text: &str) -> io::Result<()> {
        self.files.sort();
        let mut text = format!(
            "format = {MANIFEST_FORMAT}\nversion = {}\nconfig_sha256 = {}\n",
            env!("CARGO_PKG_VERSION"),
            sha256_hex(config_text.as_bytes())
        );
        for (name, digest) in &self.files {
            text.push_str(&format!("file.{name} = {digest}\n"));
        }
        fs::write(self.root.join("manifest.txt"), text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_one_header_and_seventeen_digits() {
        let mut t = Table::new(&["a", "b"]);
        t.push(&[0.1, -0.25]);
        let csv = t.to_csv();
        assert_eq!(csv, "a,b\n1.0000000000000001e-1,-2.5000000000000000e-1\n");
        let back: f64 = csv.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
