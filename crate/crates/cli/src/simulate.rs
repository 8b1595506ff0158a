use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bladefdi::config::RunConfig;
use bladefdi::fdi::{Phase, ResidualWindow};
use bladefdi::sim::{attitude_angles, CycleRecord, Simulation};
use serde::Serialize;

use crate::schema::{trace_header, SCHEMA_VERSION, SPECTRA_HEADER};
use crate::{CliError, SimulateArgs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaultSummary {
    /// One-based.
    pub rotor: usize,
    pub depth: f64,
    pub onset: f64,
    pub injected: bool,
}

/// Contents of `verdict.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub schema_version: u32,
    pub seed: u64,
    pub duration: f64,
    pub trajectory: String,
    pub damping: f64,
    pub threshold: f64,
    pub fault: FaultSummary,
    pub cycles: u64,
    pub detected: bool,
    pub detected_at: Option<f64>,
    pub isolated_at: Option<f64>,
    /// `[detected_at, isolated_at]` once both exist.
    pub fdi_interval: Option<[f64; 2]>,
    /// One-based isolated motor.
    pub verdict: Option<usize>,
    pub correct: Option<bool>,
    pub stage_peaks: Vec<Option<f64>>,
    pub diverged: bool,
    pub divergence: Option<String>,
}

/// Flag, then environment (folded into the flag by clap), then config, then `out`.
pub fn output_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn load_config(args: &SimulateArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(d) = args.duration {
        cfg.duration = d;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn trace_row(rec: &CycleRecord, sim: &Simulation, line: &mut String) {
    line.clear();
    let (phase, stage) = match rec.phase {
        Phase::Monitoring => ("monitoring", String::new()),
        Phase::Stage(j) => ("stage", (j + 1).to_string()),
        Phase::Verdict => ("verdict", String::new()),
    };
    let s = &rec.state;
    let att = attitude_angles(rec);
    let r = &rec.reference;
    let m = &rec.measurement;
    let _ = write!(
        line,
        "{},{},{phase},{stage},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        rec.time,
        rec.cycle,
        rec.pin.as_ref().map(|p| (p.motor + 1).to_string()).unwrap_or_default(),
        rec.pin.as_ref().map(|p| p.lift.to_string()).unwrap_or_default(),
        s.position.x,
        s.position.y,
        s.position.z,
        r.position.x,
        r.position.y,
        r.position.z,
        att.x,
        att.y,
        att.z,
        r.yaw,
        s.velocity.x,
        s.velocity.y,
        s.velocity.z,
        s.angular_velocity.x,
        s.angular_velocity.y,
        s.angular_velocity.z,
    );
    for w in &s.rotor_speeds {
        let _ = write!(line, ",{w}");
    }
    for p in sim.motors().pwm(&s.rotor_speeds) {
        let _ = write!(line, ",{p}");
    }
    for u in rec.lifts.iter() {
        let _ = write!(line, ",{u}");
    }
    let vib = -rec.truth.vibration.total() / sim.airframe().mass;
    let _ = writeln!(
        line,
        ",{},{},{},{},{},{},{},{},{},{},{}",
        m.accel.x,
        m.accel.y,
        m.accel.z,
        m.angular_rate.x,
        m.angular_rate.y,
        m.angular_rate.z,
        opt(rec.residuals.detection),
        opt(rec.residuals.isolation),
        rec.slack,
        vib.x,
        vib.y
    );
}

/// Pulsations of the spectra file: both residual bands and the gap between them.
fn spectrum_grid(cfg: &RunConfig) -> Vec<(f64, &'static str)> {
    let (d, i) = (&cfg.fdi.detection_band, &cfg.fdi.isolation_band);
    let step = d.step.min(i.step);
    let (low, high) = (d.low.min(i.low), d.high.max(i.high));
    let count = ((high - low) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|k| {
            let w = low + k as f64 * step;
            let band = if d.contains(w) {
                "detection"
            } else if i.contains(w) {
                "isolation"
            } else {
                "between"
            };
            (w, band)
        })
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("summary serialises");
    fs::write(path, text + "\n").map_err(CliError::io(path))
}

/// Runs one flight and writes `trace.csv`, `spectra.csv` and `verdict.json` into the output
/// directory. A diverged flight keeps its partial files and returns [`CliError::Diverged`].
pub fn simulate(args: &SimulateArgs) -> Result<VerdictSummary, CliError> {
    let cfg = load_config(args)?;
    let out = output_dir(args.out.as_deref(), &cfg);
    fs::create_dir_all(&out).map_err(CliError::io(&out))?;
    let mut sim = Simulation::new(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let n = cfg.vehicle.rotor_count();

    let trace_path = out.join("trace.csv");
    let mut trace = BufWriter::new(File::create(&trace_path).map_err(CliError::io(&trace_path))?);
    let spectra_path = out.join("spectra.csv");
    let mut spectra = BufWriter::new(File::create(&spectra_path).map_err(CliError::io(&spectra_path))?);
    writeln!(trace, "{}", trace_header(n)).map_err(CliError::io(&trace_path))?;
    writeln!(spectra, "{SPECTRA_HEADER}").map_err(CliError::io(&spectra_path))?;

    let grid = spectrum_grid(&cfg);
    let pulsations: Vec<f64> = grid.iter().map(|g| g.0).collect();
    let mut window = ResidualWindow::<f64>::new(cfg.fdi.window, cfg.imu.sample_rate);
    let scale = cfg.fdi.residual_scale;
    let mut line = String::new();
    let mut divergence = None;

    while !sim.is_finished() {
        let rec = match sim.step_cycle() {
            Ok(r) => r,
            // any numerical failure mid-flight ends it like a divergence
            Err(e) => {
                divergence = Some(e.to_string());
                break;
            }
        };
        trace_row(&rec, &sim, &mut line);
        trace.write_all(line.as_bytes()).map_err(CliError::io(&trace_path))?;

        window.push(&(rec.measurement.accel * scale));
        if window.is_full() && (rec.cycle + 1) % window.capacity() as u64 == 0 {
            let end = rec.time + cfg.control_period();
            let amps = window.spectrum(&pulsations).expect("window is full");
            for ((w, ax, ay), (_, band)) in amps.into_iter().zip(&grid) {
                writeln!(spectra, "{end},{w},{band},{ax},{ay}").map_err(CliError::io(&spectra_path))?;
            }
        }
    }
    trace.flush().map_err(CliError::io(&trace_path))?;
    spectra.flush().map_err(CliError::io(&spectra_path))?;

    let st = sim.fdi().state();
    let detected = st.detected_at.is_some();
    let verdict = st.verdict.map(|v| v + 1);
    let injected = cfg.fault.is_fault();
    let summary = VerdictSummary {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        duration: cfg.duration,
        trajectory: cfg.trajectory.name().into(),
        damping: cfg.imu.damping,
        threshold: cfg.fdi.threshold,
        fault: FaultSummary {
            rotor: cfg.fault.rotor,
            depth: cfg.fault.depth,
            onset: cfg.fault.onset,
            injected,
        },
        cycles: sim.cycle(),
        detected,
        detected_at: st.detected_at,
        isolated_at: st.isolated_at,
        fdi_interval: st.detected_at.zip(st.isolated_at).map(|(a, b)| [a, b]),
        verdict,
        correct: st.isolated_at.map(|_| if injected { verdict == Some(cfg.fault.rotor) } else { verdict.is_none() }),
        stage_peaks: st.stage_peaks.clone(),
        diverged: divergence.is_some(),
        divergence: divergence.clone(),
    };
    write_json(&out.join("verdict.json"), &summary)?;
    match divergence {
        Some(msg) => Err(CliError::Diverged(msg)),
        None => Ok(summary),
    }
}
