//! The four workflows.

use herald_core::optics::{DetectorKind, DetectorModel};
use herald_core::oracle::{exact_noon, mixed_order_herald};
use herald_core::scheme::{
    eta_scan, fit_fringe, noon_scan, phase_grid, phase_sensitivity, run_herald, shot_noise_sensitivity, sweep_tau,
};
use herald_core::StateVector;
use serde::Serialize;

use crate::config::{EtaRun, Format, HeraldRun, NoonRun, RunConfig, SweepRun};
use crate::error::CliError;
use crate::output::{csv, emit, json, schema, sig, sig_opt};

/// Largest oracle/simulation difference accepted by `--oracle-check`.
const ORACLE_TOLERANCE: f64 = 1e-9;

pub fn execute(config: &RunConfig) -> Result<(), CliError> {
    match config {
        RunConfig::Herald(r) => herald(r),
        RunConfig::NoonScan(r) => noon(r),
        RunConfig::SweepTau(r) => sweep(r),
        RunConfig::EtaScan(r) => etas(r),
    }
}

#[derive(Serialize)]
struct Echo<'a, T> {
    workflow: &'static str,
    #[serde(flatten)]
    run: &'a T,
    note: &'static str,
}

const CONDITIONAL_NOTE: &str = "probabilities are conditional on the listed emission orders";

#[derive(Serialize)]
struct Term {
    state: String,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct BranchOut {
    weight: f64,
    terms: Vec<Term>,
}

#[derive(Serialize)]
struct SingleOccupancy {
    weight: f64,
    fidelity: Option<f64>,
}

#[derive(Serialize)]
struct OracleReport {
    herald_probability: f64,
    fidelity: Option<f64>,
    max_abs_difference: f64,
}

#[derive(Serialize)]
struct HeraldOut<'a> {
    schema: String,
    config: Echo<'a, HeraldRun>,
    herald_probability: f64,
    fidelity: Option<f64>,
    target_label: String,
    single_occupancy: SingleOccupancy,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_check: Option<OracleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    branches: Option<Vec<BranchOut>>,
}

fn terms(state: &StateVector) -> Vec<Term> {
    state.terms().map(|(f, a)| Term { state: f.to_string(), re: sig(a.re), im: sig(a.im) }).collect()
}

fn check(gap: f64) -> Result<(), CliError> {
    if gap > ORACLE_TOLERANCE {
        return Err(CliError::OracleMismatch(format!("max difference {gap:e} above {ORACLE_TOLERANCE:e}")));
    }
    Ok(())
}

fn herald(run: &HeraldRun) -> Result<(), CliError> {
    let result = run_herald(&run.source, run.detector, &run.pattern)?;
    let oracle = if run.oracle_check {
        let orders: Vec<u32> = run.source.orders.iter().copied().collect();
        let exact = mixed_order_herald(
            run.source.n_crystals,
            &orders,
            run.source.tau,
            run.source.delta_phi,
            &run.pattern.0,
            &result.target,
        )?;
        let mut gap = (exact.herald_probability - result.herald_probability).abs();
        match (exact.fidelity, result.fidelity) {
            (Some(a), Some(b)) => gap = gap.max((a - b).abs()),
            (None, None) => {}
            _ => gap = f64::INFINITY,
        }
        Some((exact, gap))
    } else {
        None
    };
    let out = HeraldOut {
        schema: schema("herald"),
        config: Echo { workflow: "herald", run, note: CONDITIONAL_NOTE },
        herald_probability: sig(result.herald_probability),
        fidelity: sig_opt(result.fidelity),
        target_label: result.target_label.clone(),
        single_occupancy: SingleOccupancy {
            weight: sig(result.single_occupancy_weight),
            fidelity: sig_opt(result.single_occupancy_fidelity),
        },
        oracle_check: oracle.as_ref().map(|(e, gap)| OracleReport {
            herald_probability: sig(e.herald_probability),
            fidelity: sig_opt(e.fidelity),
            max_abs_difference: sig(*gap),
        }),
        branches: run.dump_state.then(|| {
            result
                .conditional_ensemble
                .branches
                .iter()
                .map(|b| BranchOut { weight: sig(b.weight), terms: terms(&b.state) })
                .collect()
        }),
    };
    emit(&json(&out), run.output.path.as_deref())?;
    match oracle {
        Some((_, gap)) => check(gap),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct FringeRow {
    delta_phi: f64,
    probability: f64,
}

#[derive(Serialize)]
struct FitOut {
    frequency: f64,
    visibility: f64,
    offset: f64,
    amplitude: f64,
    phase: f64,
    rms_residual: f64,
}

#[derive(Serialize)]
struct NoonOut<'a> {
    schema: String,
    config: Echo<'a, NoonRun>,
    fit: FitOut,
    sensitivity: Option<f64>,
    photons: usize,
    shot_noise: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_max_abs_difference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<Vec<FringeRow>>,
}

fn noon(run: &NoonRun) -> Result<(), CliError> {
    let phis = phase_grid(run.points);
    let scan = noon_scan(run.n_crystals, &phis, &run.pattern)?;
    let fit = fit_fringe(&scan)?;
    let oracle_gap = if run.oracle_check {
        let exact = exact_noon(run.n_crystals, &run.pattern.0)?;
        let gap = scan
            .points
            .iter()
            .map(|&(phi, p)| (exact.herald_probability.evaluate(phi).re - p).abs())
            .fold(0.0, f64::max);
        Some(gap)
    } else {
        None
    };
    let rows: Vec<FringeRow> =
        scan.points.iter().map(|&(phi, p)| FringeRow { delta_phi: sig(phi), probability: sig(p) }).collect();
    let photons = 4 * run.n_crystals;
    let mut summary = NoonOut {
        schema: schema("noon-scan"),
        config: Echo { workflow: "noon-scan", run, note: CONDITIONAL_NOTE },
        fit: FitOut {
            frequency: sig(fit.frequency),
            visibility: sig(fit.visibility),
            offset: sig(fit.offset),
            amplitude: sig(fit.amplitude),
            phase: sig(fit.phase),
            rms_residual: sig(fit.rms_residual),
        },
        sensitivity: phase_sensitivity(&fit).ok().map(sig),
        photons,
        shot_noise: sig(shot_noise_sensitivity(photons as f64)),
        oracle_max_abs_difference: oracle_gap.map(sig),
        points: None,
    };
    let path = run.output.path.as_deref();
    match run.output.format {
        Format::Json => {
            summary.points = Some(rows);
            emit(&json(&summary), path)?;
        }
        Format::Csv => {
            emit(&csv(&rows)?, path)?;
            // the summary takes standard output unless the table already has it
            if path.is_some() {
                emit(&json(&summary), None)?;
            } else {
                eprint!("{}", String::from_utf8_lossy(&json(&summary)));
            }
        }
    }
    oracle_gap.map_or(Ok(()), check)
}

fn kind_name(d: &DetectorModel) -> &'static str {
    match d.kind {
        DetectorKind::Bucket => "bucket",
        DetectorKind::Pnr => "pnr",
    }
}

#[derive(Serialize)]
struct SweepOutRow {
    tau: f64,
    detector: &'static str,
    eta: f64,
    fidelity: Option<f64>,
    herald_probability: f64,
}

#[derive(Serialize)]
struct TableOut<'a, T, R> {
    schema: String,
    config: Echo<'a, T>,
    rows: Vec<R>,
}

fn table<T: Serialize, R: Serialize>(
    workflow: &'static str,
    run: &T,
    rows: Vec<R>,
    format: Format,
    path: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let bytes = match format {
        Format::Csv => csv(&rows)?,
        Format::Json => {
            json(&TableOut { schema: schema(workflow), config: Echo { workflow, run, note: CONDITIONAL_NOTE }, rows })
        }
    };
    emit(&bytes, path)
}

fn sweep(run: &SweepRun) -> Result<(), CliError> {
    let extra = (run.orders.len() - 1) as u32;
    let rows = sweep_tau(run.n_crystals, run.delta_phi_rad, &run.taus, &run.detectors, extra)?;
    let rows = rows
        .iter()
        .map(|r| SweepOutRow {
            tau: sig(r.tau),
            detector: kind_name(&r.detector),
            eta: sig(r.detector.eta),
            fidelity: sig_opt(r.fidelity),
            herald_probability: sig(r.herald_probability),
        })
        .collect();
    table("sweep-tau", run, rows, run.output.format, run.output.path.as_deref())
}

#[derive(Serialize)]
struct EtaOutRow {
    eta: f64,
    fidelity: Option<f64>,
    herald_probability: f64,
}

fn etas(run: &EtaRun) -> Result<(), CliError> {
    let rows = eta_scan(&run.source, run.detector, &run.pattern, &run.etas)?;
    let rows = rows
        .iter()
        .map(|r| EtaOutRow {
            eta: sig(r.eta),
            fidelity: sig_opt(r.fidelity),
            herald_probability: sig(r.herald_probability),
        })
        .collect();
    table("eta-scan", run, rows, run.output.format, run.output.path.as_deref())
}
