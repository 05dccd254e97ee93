//! `bicmb`: codebook training, BER sweeps, paired comparisons and distortion
//! reports.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bicmb::sim::{ReceiverKind, Selection};

#[derive(Parser, Debug)]
#[command(name = "bicmb", version, about = "Limited-feedback BICMB simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a codebook with the generalized Lloyd algorithm.
    Train(TrainArgs),
    /// Run a BER sweep and write a results CSV.
    Simulate(SimulateArgs),
    /// Run several configurations on shared randomness.
    Compare(CompareArgs),
    /// Average SC-OE and SC-E distortion of a codebook on fresh channels.
    DistortionReport(ReportArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 2)]
    pub n_tx: usize,
    #[arg(long, default_value_t = 2)]
    pub n_rx: usize,
    #[arg(long, default_value_t = 2)]
    pub streams: usize,
    #[arg(long)]
    pub bits: u32,
    #[arg(long, default_value_t = bicmb::trainer::DEFAULT_TRAIN_SIZE)]
    pub train_size: usize,
    #[arg(long, default_value_t = bicmb::trainer::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = bicmb::trainer::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Codebook JSON; `<out>.history.csv` and `<out>.meta.json` are written alongside.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Rotation {
    Dft,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON file in the effective-config schema; flags given here override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_tx: Option<usize>,
    #[arg(long)]
    pub n_rx: Option<usize>,
    #[arg(long)]
    pub streams: Option<usize>,
    #[arg(long, conflicts_with_all = ["rvq_seed", "perfect"])]
    pub codebook: Option<PathBuf>,
    /// Seed of an untrained random codebook; needs --bits.
    #[arg(long, requires = "bits", conflicts_with = "perfect")]
    pub rvq_seed: Option<u64>,
    #[arg(long)]
    pub bits: Option<u32>,
    /// Unquantized precoder.
    #[arg(long)]
    pub perfect: bool,
    #[arg(long, value_parser = parse_selection)]
    pub selection: Option<Selection>,
    #[arg(long, value_parser = parse_receiver)]
    pub receiver: Option<ReceiverKind>,
    /// Precode with `V̄ Q` for a fixed unitary `Q`.
    #[arg(long, value_enum)]
    pub rotation: Option<Rotation>,
    #[arg(long, requires_all = ["snr_to", "snr_step"])]
    pub snr_from: Option<f64>,
    #[arg(long, requires = "snr_from")]
    pub snr_to: Option<f64>,
    #[arg(long, requires = "snr_from")]
    pub snr_step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub info_bits: Option<usize>,
    #[arg(long)]
    pub interleaver_depth: Option<usize>,
    #[arg(long)]
    pub min_block_errors: Option<u64>,
    #[arg(long)]
    pub min_bit_errors: Option<u64>,
    #[arg(long)]
    pub max_info_bits: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Results CSV; the effective config goes to `<out>.meta.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Config matrix: `{"base": <config>, "cells": [{"label": ..., overrides}]}`.
    pub matrix: PathBuf,
    /// Long-format CSV with a leading `cell` column.
    #[arg(long)]
    pub out: PathBuf,
    /// Pairwise SNR gaps at the target BER as CSV; printed to stdout as well.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub codebook: PathBuf,
    /// Receive antennas of the evaluation channels; defaults to the codebook's n_tx.
    #[arg(long)]
    pub n_rx: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub eval_size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn parse_selection(s: &str) -> Result<Selection, String> {
    s.parse()
}

fn parse_receiver(s: &str) -> Result<ReceiverKind, String> {
    s.parse()
}

/// A failed run with its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<bicmb::Error> for Failure {
    fn from(e: bicmb::Error) -> Self {
        match e {
            bicmb::Error::Parameter(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Compare(a) => commands::compare(a),
        Command::DistortionReport(a) => commands::distortion_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bicmb: {f}");
            ExitCode::from(match f {
                Failure::Usage(_) => 2,
                Failure::Runtime(_) => 1,
            })
        }
    }
}
