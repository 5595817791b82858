//! Report writers. Files are written atomically (temp + rename) and all
//! numeric output goes through the shortest-roundtrip float formatter, so
//! identical configs produce bit-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use simop_core::evolution::EvolutionState;
use simop_core::spectral::SpectrumReport;
use simop_core::C64;

use crate::error::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp: PathBuf = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", tmp.display())))?;
        f.write_all(contents.as_bytes())
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", tmp.display())))?;
    }
    fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("cannot move {} into place: {e}", tmp.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    atomic_write(path, &text)
}

/// Complex number as a `[re, im]` pair for JSON reports.
pub fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// `spectrum.csv`: fixed header `block,re,im`; the merged central cell is
/// labeled `central`, outer rows carry their mode index.
pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let mut out = String::from("block,re,im\n");
    for z in &report.central {
        out.push_str(&format!("central,{},{}\n", z.re, z.im));
    }
    for (l, evs) in &report.outer {
        for z in evs {
            out.push_str(&format!("{l},{},{}\n", z.re, z.im));
        }
    }
    out
}

/// `trajectory.csv`: fixed header `t,ell,component,re,im`.
pub fn trajectory_csv(times: &[f64], states: &[EvolutionState]) -> String {
    let mut out = String::from("t,ell,component,re,im\n");
    for (t, state) in times.iter().zip(states) {
        let w = *state.window();
        for l in w.modes() {
            let coeff = state.mode_coeff(l);
            for (c, z) in coeff.iter().enumerate() {
                out.push_str(&format!("{t},{l},{c},{},{}\n", z.re, z.im));
            }
        }
    }
    out
}

/// `trajectory_grid.csv`: physical samples on the uniform grid
/// `s_q = q omega / G`; header `t,s,component,re,im`.
pub fn trajectory_grid_csv(times: &[f64], states: &[EvolutionState], grid_points: usize) -> String {
    let mut out = String::from("t,s,component,re,im\n");
    for (t, state) in times.iter().zip(states) {
        let omega = state.window().omega();
        for q in 0..grid_points {
            let s = omega * (q as f64) / (grid_points as f64);
            let value = state.sample(s);
            for (c, z) in value.iter().enumerate() {
                out.push_str(&format!("{t},{s},{c},{},{}\n", z.re, z.im));
            }
        }
    }
    out
}
