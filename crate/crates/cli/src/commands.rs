use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use bicmb::codebook::MAX_BITS;
use bicmb::quantizer::select_sc_e;
use bicmb::sim::compare::{pairwise_gaps, write_long_csv, CellResult, ConfigMatrix, GAP_TARGET_BER};
use bicmb::sim::config::dft_rotation;
use bicmb::sim::report::write_csv;
use bicmb::sim::{CodebookSource, Selection, SimConfig, Simulation};
use bicmb::trainer::{average_distortion, held_out_distortion, lloyd_train, training_set, LloydConfig, MIN_ITEMS_PER_CODEWORD};
use bicmb::Codebook;

use crate::{CompareArgs, Failure, ReportArgs, Rotation, SimulateArgs, TrainArgs};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Meta<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a T,
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn write_meta<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<(), Failure> {
    let meta = Meta {
        tool: "bicmb",
        version: VERSION,
        command,
        config,
    };
    fs::write(sidecar(out, "meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn banner<T: Serialize>(config: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(config)?);
    Ok(())
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

#[derive(Serialize)]
struct TrainConfig {
    n_tx: usize,
    n_rx: usize,
    streams: usize,
    bits: u32,
    train_size: usize,
    epsilon: f64,
    max_iter: usize,
    seed: u64,
    workers: usize,
}

pub fn train(a: TrainArgs) -> Result<(), Failure> {
    if a.bits == 0 || a.bits > MAX_BITS {
        return Err(usage(format!("--bits must be in 1..={MAX_BITS}")));
    }
    let needed = MIN_ITEMS_PER_CODEWORD << a.bits;
    if a.train_size < needed {
        return Err(usage(format!(
            "--train-size {} is below {needed} ({MIN_ITEMS_PER_CODEWORD} per codeword)",
            a.train_size
        )));
    }
    if !(a.epsilon >= 0.0) || a.max_iter == 0 || a.workers == 0 {
        return Err(usage("--epsilon must be >= 0, --max-iter and --workers positive"));
    }
    let cfg = TrainConfig {
        n_tx: a.n_tx,
        n_rx: a.n_rx,
        streams: a.streams,
        bits: a.bits,
        train_size: a.train_size,
        epsilon: a.epsilon,
        max_iter: a.max_iter,
        seed: a.seed,
        workers: a.workers,
    };
    banner(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let (cb, report) = pool.install(|| -> Result<_, Failure> {
        let ts = training_set(a.train_size, a.n_rx, a.n_tx, a.streams, a.seed)?;
        let lloyd = LloydConfig {
            bits: a.bits,
            epsilon: a.epsilon,
            max_iter: a.max_iter,
            seed: a.seed,
        };
        Ok(lloyd_train(&ts, &lloyd)?)
    })?;
    cb.save(&a.out)?;
    let mut w = csv::Writer::from_path(sidecar(&a.out, "history.csv"))?;
    w.write_record(["iteration", "distortion"])?;
    for (m, j) in report.distortion_history.iter().enumerate() {
        w.write_record([m.to_string(), j.to_string()])?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct TrainMeta<'a> {
        #[serde(flatten)]
        config: &'a TrainConfig,
        report: &'a bicmb::trainer::LloydReport,
        /// Average distortion on a fresh set of `train_size` channels drawn with `seed + 1`.
        held_out_distortion: f64,
    }
    let held_out = pool.install(|| held_out_distortion(&cb, a.n_rx, a.train_size, a.seed.wrapping_add(1)))?;
    let meta = TrainMeta {
        config: &cfg,
        report: &report,
        held_out_distortion: held_out,
    };
    write_meta(&a.out, "train", &meta)?;
    eprintln!(
        "trained {} codewords in {} iterations (converged: {}), J = {:.6}",
        cb.len(),
        report.iterations,
        report.converged,
        report.distortion_history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn simulate_config(a: &SimulateArgs) -> Result<SimConfig, Failure> {
    let mut c = match &a.config {
        Some(p) => read_json(p)?,
        None => SimConfig::new(a.n_rx.unwrap_or(2), a.n_tx.unwrap_or(2), a.streams.unwrap_or(2)),
    };
    if let Some(v) = a.n_tx {
        c.n_tx = v;
    }
    if let Some(v) = a.n_rx {
        c.n_rx = v;
    }
    if let Some(v) = a.streams {
        c.streams = v;
    }
    let quantized = |c: &mut SimConfig, source: CodebookSource| {
        c.codebook = source;
        if c.selection.criterion().is_none() {
            c.selection = Selection::ScOe;
        }
        c.rotation = None;
    };
    if let Some(p) = &a.codebook {
        quantized(&mut c, CodebookSource::File { path: p.clone() });
    }
    if let Some(seed) = a.rvq_seed {
        let bits = a.bits.expect("clap enforces --bits");
        quantized(&mut c, CodebookSource::Random { bits, seed });
    } else if a.bits.is_some() {
        return Err(usage("--bits only applies with --rvq-seed"));
    }
    if a.perfect {
        c.codebook = CodebookSource::None;
        c.selection = Selection::Perfect;
        c.rotation = None;
    }
    if let Some(s) = a.selection {
        c.selection = s;
    }
    match a.rotation {
        Some(Rotation::Dft) => {
            if c.selection.criterion().is_some() {
                return Err(usage("--rotation applies to the unquantized precoder only"));
            }
            c.selection = Selection::FixedRotation;
            c.rotation = Some(dft_rotation(c.streams));
        }
        None if c.selection == Selection::FixedRotation && c.rotation.is_none() => {
            c.rotation = Some(dft_rotation(c.streams));
        }
        None => {}
    }
    if let Some(r) = a.receiver {
        c.receiver = r;
    }
    if let (Some(from), Some(to), Some(step)) = (a.snr_from, a.snr_to, a.snr_step) {
        c.snr_db = SimConfig::snr_grid(from, to, step)?;
    }
    if let Some(v) = a.seed {
        c.master_seed = v;
    }
    if let Some(v) = a.info_bits {
        c.info_bits_per_block = v;
    }
    if let Some(v) = a.interleaver_depth {
        c.interleaver_depth = v;
    }
    if let Some(v) = a.min_block_errors {
        c.stop.min_block_errors = v;
    }
    if let Some(v) = a.min_bit_errors {
        c.stop.min_bit_errors = v;
    }
    if let Some(v) = a.max_info_bits {
        c.stop.max_info_bits = v;
    }
    if let Some(v) = a.workers {
        c.workers = v;
    }
    c.validate()?;
    Ok(c)
}

fn run_with_progress(label: &str, sim: &Simulation) -> Result<Vec<bicmb::sim::BerPoint>, Failure> {
    let mut points = Vec::new();
    for i in 0..sim.config().snr_db.len() {
        let p = sim.run_point(i)?;
        eprintln!(
            "{label}{:>6.2} dB  ber {:.3e}  fer {:.3e}  bits {}  blocks {}",
            p.snr_db, p.ber, p.fer, p.info_bits, p.blocks
        );
        points.push(p);
    }
    Ok(points)
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let cfg = simulate_config(&a)?;
    let sim = Simulation::new(cfg.clone())?;
    banner(&cfg)?;
    let points = run_with_progress("", &sim)?;
    write_csv(&points, BufWriter::new(File::create(&a.out)?))?;
    write_meta(&a.out, "simulate", &cfg)
}

#[derive(Serialize)]
struct CompareMeta<'a> {
    matrix: &'a ConfigMatrix,
    cells: Vec<(&'a str, &'a SimConfig)>,
}

pub fn compare(a: CompareArgs) -> Result<(), Failure> {
    let mut matrix: ConfigMatrix = read_json(&a.matrix)?;
    if let Some(w) = a.workers {
        matrix.base.workers = w;
    }
    let sims = matrix.simulations()?;
    banner(&matrix)?;
    let mut results = Vec::with_capacity(sims.len());
    for (label, sim) in sims {
        let points = run_with_progress(&format!("{label}: "), &sim)?;
        results.push(CellResult {
            label,
            config: sim.config().clone(),
            points,
        });
    }
    write_long_csv(&results, BufWriter::new(File::create(&a.out)?))?;
    let gaps = pairwise_gaps(&results, GAP_TARGET_BER);
    eprintln!("SNR gap at BER {GAP_TARGET_BER:e} (a - b):");
    for g in &gaps {
        let v = g.gap_db.map_or("n/a".to_string(), |x| format!("{x:+.2} dB"));
        eprintln!("  {:<20} {:<20} {v}", g.a, g.b);
    }
    if let Some(path) = &a.summary {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["a", "b", "target_ber", "gap_db"])?;
        for g in &gaps {
            w.write_record([
                g.a.clone(),
                g.b.clone(),
                g.target_ber.to_string(),
                g.gap_db.map_or(String::new(), |x| x.to_string()),
            ])?;
        }
        w.flush()?;
    }
    let meta = CompareMeta {
        matrix: &matrix,
        cells: results.iter().map(|r| (r.label.as_str(), &r.config)).collect(),
    };
    write_meta(&a.out, "compare", &meta)
}

#[derive(Serialize)]
struct DistortionReport<'a> {
    tool: &'static str,
    version: &'static str,
    codebook: &'a Path,
    n_tx: usize,
    n_rx: usize,
    streams: usize,
    bits: u32,
    eval_size: usize,
    seed: u64,
    sc_oe: f64,
    sc_e: f64,
}

pub fn distortion_report(a: ReportArgs) -> Result<(), Failure> {
    let cb = Codebook::load(&a.codebook).map_err(|e| Failure::Runtime(format!("{}: {e}", a.codebook.display())))?;
    let n_rx = a.n_rx.unwrap_or(cb.n_tx());
    if a.eval_size == 0 {
        return Err(usage("--eval-size must be positive"));
    }
    let eval = training_set(a.eval_size, n_rx, cb.n_tx(), cb.n_streams(), a.seed)?;
    let sc_oe = average_distortion(&cb, &eval.items)?;
    let mut sum_e = 0.0;
    for v in &eval.items {
        sum_e += select_sc_e(v, &cb)?.distortion;
    }
    let report = DistortionReport {
        tool: "bicmb",
        version: VERSION,
        codebook: &a.codebook,
        n_tx: cb.n_tx(),
        n_rx,
        streams: cb.n_streams(),
        bits: cb.bits(),
        eval_size: a.eval_size,
        seed: a.seed,
        sc_oe,
        sc_e: sum_e / eval.items.len() as f64,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
