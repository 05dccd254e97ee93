//! Several configurations run on shared randomness and reported together.
//!
//! A config matrix is a base [`SimConfig`] plus labelled cells that override
//! the selection, receiver, codebook or rotation. Every cell inherits the
//! channel shape, SNR grid, block size, stopping rule and master seed, so all
//! cells see the same channels, data and noise.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

use super::config::{dft_rotation, CodebookSource, ReceiverKind, Selection, SimConfig};
use super::harness::Simulation;
use super::report::{snr_at_ber, BerPoint};

pub const GAP_TARGET_BER: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigMatrix {
    pub base: SimConfig,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub label: String,
    #[serde(default)]
    pub selection: Option<Selection>,
    #[serde(default)]
    pub receiver: Option<ReceiverKind>,
    #[serde(default)]
    pub codebook: Option<CodebookSource>,
    #[serde(default)]
    pub rotation: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub label: String,
    pub config: SimConfig,
    pub points: Vec<BerPoint>,
}

/// SNR difference `a − b` at the target BER; positive means `a` needs more power.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub a: String,
    pub b: String,
    pub target_ber: f64,
    pub gap_db: Option<f64>,
}

impl ConfigMatrix {
    /// Effective configuration of each cell.
    pub fn cell_configs(&self) -> Result<Vec<(String, SimConfig)>> {
        if self.cells.is_empty() {
            return param("config matrix has no cells");
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.cells.len());
        for cell in &self.cells {
            if !seen.insert(cell.label.as_str()) {
                return param(format!("duplicate cell label `{}`", cell.label));
            }
            let mut c = self.base.clone();
            if let Some(s) = cell.selection {
                c.selection = s;
            }
            if let Some(r) = cell.receiver {
                c.receiver = r;
            }
            c.codebook = match (&cell.codebook, c.selection.criterion()) {
                (Some(cb), _) => cb.clone(),
                (None, Some(_)) => self.base.codebook.clone(),
                (None, None) => CodebookSource::None,
            };
            c.rotation = match (&cell.rotation, c.selection) {
                (Some(q), _) => Some(q.clone()),
                (None, Selection::FixedRotation) => {
                    Some(self.base.rotation.clone().unwrap_or_else(|| dft_rotation(c.streams)))
                }
                (None, _) => None,
            };
            c.validate()
                .map_err(|e| Error::Parameter(format!("cell `{}`: {e}", cell.label)))?;
            out.push((cell.label.clone(), c));
        }
        Ok(out)
    }

    /// Builds every cell before simulating any, so a bad cell fails fast.
    pub fn simulations(&self) -> Result<Vec<(String, Simulation)>> {
        self.cell_configs()?
            .into_iter()
            .map(|(label, c)| {
                Simulation::new(c)
                    .map(|s| (label.clone(), s))
                    .map_err(|e| match e {
                        Error::Parameter(m) => Error::Parameter(format!("cell `{label}`: {m}")),
                        other => other,
                    })
            })
            .collect()
    }

    pub fn run(&self) -> Result<Vec<CellResult>> {
        run_cells(self.simulations()?)
    }
}

pub fn run_cells(sims: Vec<(String, Simulation)>) -> Result<Vec<CellResult>> {
    sims.into_iter()
        .map(|(label, sim)| {
            Ok(CellResult {
                label,
                points: sim.run()?,
                config: sim.config().clone(),
            })
        })
        .collect()
}

/// Long format: the BER columns preceded by a `cell` label column.
pub fn write_long_csv<W: Write>(results: &[CellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record([
        "cell",
        "snr_db",
        "info_bits",
        "bit_errors",
        "blocks",
        "block_errors",
        "ber",
        "fer",
        "discarded_blocks",
    ])
    .map_err(err)?;
    for r in results {
        for p in &r.points {
            w.write_record([
                r.label.clone(),
                p.snr_db.to_string(),
                p.info_bits.to_string(),
                p.bit_errors.to_string(),
                p.blocks.to_string(),
                p.block_errors.to_string(),
                p.ber.to_string(),
                p.fer.to_string(),
                p.discarded_blocks.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn pairwise_gaps(results: &[CellResult], target_ber: f64) -> Vec<Gap> {
    let at: Vec<Option<f64>> = results.iter().map(|r| snr_at_ber(&r.points, target_ber)).collect();
    let mut gaps = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            gaps.push(Gap {
                a: results[i].label.clone(),
                b: results[j].label.clone(),
                target_ber,
                gap_db: at[i].zip(at[j]).map(|(x, y)| x - y),
            });
        }
    }
    gaps
}
