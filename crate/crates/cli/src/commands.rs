//! Subcommand bodies. Each writes its artifacts into the output directory
//! and returns the paths it wrote.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use photonic_cz::analysis::{
    default_t3_grid, emit_tables, fidelity_curve, format_sig12, npath_scan, range_grid, success_surface,
    sweep_constraint_curve, to_csv, truncated_coherent, unit_grid, CzGate, GatePair, InputMeasure,
    MeasureKind, PhaseConfig, SweepRow, TableRecord, VerifiedGate,
};
use photonic_cz::circuit::{Circuit, Element};
use photonic_cz::fock::{QubitAmplitudes, SparseState, DEFAULT_CUTOFF};
use photonic_cz::gates::{build_cphase_destructive, build_cphase_klm, build_npath, GateCircuit, NsEmbedding};
use photonic_cz::herald::{herald_ideal, herald_lossy, run, HeraldSpec};
use photonic_cz::optimize::{find_destructive_params, find_ns_params, OptimizerConfig};

use crate::config::RunConfig;

fn optimizer(cfg: &RunConfig) -> OptimizerConfig {
    OptimizerConfig {
        starts: cfg.starts,
        seed: cfg.seed,
    }
}

fn write(cfg: &RunConfig, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let path = cfg.out.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn phase_label(phi: f64) -> String {
    if (phi - PI).abs() < 1e-12 {
        "pi".into()
    } else if (phi - PI / 2.0).abs() < 1e-12 {
        "pi/2".into()
    } else {
        format_sig12(phi)
    }
}

#[derive(Serialize)]
struct LabeledRecord<'a> {
    phase_label: String,
    #[serde(flatten)]
    record: &'a TableRecord,
}

pub fn tables(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let phases = match cfg.phase {
        Some(phi) => vec![phi],
        None => vec![PI, PI / 2.0],
    };
    let pairs = phases
        .iter()
        .map(|&phi| GatePair::discover(phi, &optimizer(cfg)))
        .collect::<photonic_cz::Result<Vec<_>>>()?;
    let records = emit_tables(cfg.p_herald, &pairs.iter().collect::<Vec<_>>())?;
    let labeled: Vec<LabeledRecord> = records
        .iter()
        .map(|r| LabeledRecord {
            phase_label: phase_label(r.phase),
            record: r,
        })
        .collect();
    let mut text = format!(
        "{:<8}{:<18}{:<18}{:<18}{:<18}\n",
        "phase", "P_D", "P_KLM", "P'_D", "P'_KLM"
    );
    for r in &records {
        text.push_str(&format!(
            "{:<8}{:<18}{:<18}{:<18}{:<18}\n",
            phase_label(r.phase),
            format_sig12(r.p_d),
            format_sig12(r.p_klm),
            format_sig12(r.p_d_eff),
            format_sig12(r.p_klm_eff)
        ));
    }
    let text = text.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n";
    Ok(vec![
        write(cfg, "tables.json", &json(&labeled)?)?,
        write(cfg, "tables.txt", &text)?,
    ])
}

pub fn fig5(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let rows: Vec<SweepRow> = sweep_constraint_curve(&default_t3_grid())
        .into_iter()
        .map(|r| SweepRow {
            x: r.x,
            y: r.y[..2].to_vec(),
        })
        .collect();
    Ok(vec![write(cfg, "fig5.csv", &to_csv(&["t3", "t1", "t2"], &rows))?])
}

pub fn fig6(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let rows: Vec<SweepRow> = sweep_constraint_curve(&default_t3_grid())
        .into_iter()
        .map(|r| SweepRow {
            x: r.x,
            y: vec![r.y[2]],
        })
        .collect();
    Ok(vec![write(cfg, "fig6.csv", &to_csv(&["t3", "r2r3"], &rows))?])
}

fn destructive_gate(cfg: &RunConfig) -> Result<VerifiedGate> {
    let phi = cfg.phase.unwrap_or(PI);
    let params = find_destructive_params(phi, &optimizer(cfg))?.params;
    Ok(VerifiedGate::new(CzGate::Destructive(params))?)
}

fn surface(cfg: &RunConfig, name: &str, config: PhaseConfig) -> Result<Vec<PathBuf>> {
    let gate = destructive_gate(cfg)?;
    let grid = unit_grid(21);
    let rows = success_surface(&gate, &grid, &grid, config)?;
    Ok(vec![write(cfg, name, &to_csv(&["alpha", "gamma", "p"], &rows))?])
}

pub fn fig7(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    surface(cfg, "fig7.csv", PhaseConfig::Real)
}

pub fn fig8(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    surface(cfg, "fig8.csv", PhaseConfig::Imaginary)
}

pub fn fig9(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let pair = GatePair::discover(cfg.phase.unwrap_or(PI), &optimizer(cfg))?;
    let grid = range_grid(cfg.eta_min, cfg.eta_max, cfg.eta_step)?;
    let measure = InputMeasure::new(MeasureKind::HaarProduct, cfg.samples, cfg.seed)?;
    let rows = fidelity_curve(&pair, &grid, cfg.detector_loss, &measure)?;
    Ok(vec![write(
        cfg,
        "fig9.csv",
        &to_csv(&["eta", "f_d", "f_klm"], &rows),
    )?])
}

pub fn optimize_ns(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let sol = find_ns_params(cfg.phase.unwrap_or(PI), &optimizer(cfg))?;
    Ok(vec![write(cfg, "optimize_ns.json", &json(&sol)?)?])
}

pub fn optimize_dcz(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let sol = find_destructive_params(cfg.phase.unwrap_or(PI), &optimizer(cfg))?;
    Ok(vec![write(cfg, "optimize_dcz.json", &json(&sol)?)?])
}

pub fn npath(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cutoff = cfg.cutoff.unwrap_or(6);
    let per_path = find_destructive_params(cfg.phase.unwrap_or(PI), &optimizer(cfg))?.params;
    let control = QubitAmplitudes::real(0.6, 0.8)?;
    let inputs = [
        ("fock1", SparseState::basis([1], cutoff)?),
        ("fock2", SparseState::basis([2], cutoff)?),
        ("coherent0.3", truncated_coherent(0.3, 2, cutoff)?),
    ];
    let mut text = String::from("input,n_paths,success,ratio\n");
    for (label, target) in &inputs {
        for row in npath_scan(&per_path, &[1, 2, 3, 4], target, &control, cutoff)? {
            text.push_str(&format!(
                "{label},{},{},{}\n",
                row.x[0],
                row.y[0].map(format_sig12).unwrap_or_default(),
                row.y[1].map(format_sig12).unwrap_or_default()
            ));
        }
    }
    Ok(vec![write(cfg, "npath.csv", &text)?])
}

/// Circuit document accepted by `simulate` and written by `gate`.
#[derive(Serialize, Deserialize)]
pub struct CircuitDocument {
    #[serde(flatten)]
    pub circuit: Circuit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<SparseState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herald: Option<HeraldSpec>,
    /// Circuit modes that take a logical input register.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

#[derive(Serialize)]
struct PureOutput {
    prob: f64,
    state: SparseState,
}

pub fn simulate(cfg: &RunConfig, path: &Path) -> Result<(Vec<PathBuf>, String)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: CircuitDocument =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let circuit = doc.circuit;
    circuit.validate()?;
    let cutoff = cfg.cutoff.or(doc.cutoff).unwrap_or(DEFAULT_CUTOFF);
    let input = match doc.input {
        Some(s) => s.with_cutoff(cutoff.max(s.cutoff()))?,
        None => circuit.vacuum_input(cutoff),
    };
    let lossy_circuit = circuit.elements.iter().any(|e| matches!(e, Element::Loss { .. }));
    let herald = doc.herald.unwrap_or_else(|| HeraldSpec {
        detectors: Vec::new(),
        outputs: (0..circuit.modes).collect(),
    });
    let noisy = herald.detectors.iter().any(|d| d.eta < 1.0 || d.dark > 0.0);
    let out = if lossy_circuit || noisy {
        json(&herald_lossy(&circuit, &input, &herald)?)?
    } else {
        let r = herald_ideal(&run(&circuit, &input)?, &herald)?;
        json(&PureOutput {
            prob: r.prob,
            state: r.state,
        })?
    };
    Ok((vec![write(cfg, "simulate.json", &out)?], out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum GateName {
    Ns,
    CphaseKlm,
    CphaseDestructive,
    Npath,
}

pub fn gate(cfg: &RunConfig, name: GateName, paths: usize) -> Result<Vec<PathBuf>> {
    let phi = cfg.phase.unwrap_or(PI);
    let opt = optimizer(cfg);
    let (file, gc): (&str, GateCircuit) = match name {
        GateName::Ns => {
            let ns = find_ns_params(phi, &opt)?.params;
            let (circuit, herald) = ns.circuit();
            let gc = GateCircuit {
                circuit,
                herald,
                inputs: vec![0],
                cutoff: DEFAULT_CUTOFF,
            };
            ("gate_ns.json", gc)
        }
        GateName::CphaseKlm => {
            let ns = find_ns_params(phi, &opt)?.params;
            (
                "gate_cphase_klm.json",
                build_cphase_klm(phi, &ns, NsEmbedding::Explicit)?,
            )
        }
        GateName::CphaseDestructive => {
            let params = find_destructive_params(phi, &opt)?.params;
            (
                "gate_cphase_destructive.json",
                build_cphase_destructive(&params, NsEmbedding::Explicit)?,
            )
        }
        GateName::Npath => {
            let params = find_destructive_params(phi, &opt)?.params;
            let cutoff = cfg.cutoff.unwrap_or(6);
            (
                "gate_npath.json",
                build_npath(paths, &params, 1, NsEmbedding::Effective, cutoff)?,
            )
        }
    };
    let doc = CircuitDocument {
        circuit: gc.circuit,
        input: None,
        herald: Some(gc.herald),
        inputs: Some(gc.inputs),
        cutoff: Some(gc.cutoff),
    };
    Ok(vec![write(cfg, file, &json(&doc)?)?])
}
