//! Batch front-end for the heralded-CNOT simulator.
//!
//! Every command is deterministic given its configuration and seed, writes
//! self-describing JSON (configuration echo plus artifact version) and
//! optionally CSV tables. Exit codes: 0 success, 1 configuration error,
//! 2 runtime error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use config::{resolve, Overrides, OutputFormat, ResolvedConfig};
use opticnot::design::{
    calibrate_dispersion, design_pbs, extinction_over_bandwidth, improvement_ratio,
    overlap_efficiency, CouplerSpec, GaussianMode,
};
use opticnot::experiment::{
    bell_tomo_experiment, hom_scan, truth_table_experiment, BRANCH_LABELS, INPUT_LABELS,
};
use opticnot::protocol::cnot_ideal_table;
use opticnot::qubit::BellState;
use opticnot::stats::{read_count_table_file, write_count_table_file};
use opticnot::experiment::setting_counts_from_records;
use opticnot::tomography::{compensate_local_unitaries, fidelity, mle_reconstruct};

#[derive(Parser)]
#[command(
    name = "opticnot",
    version,
    about = "Heralded linear-optical CNOT gate simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Computational-basis truth table with double-pair noise, subtraction
    /// and Monte-Carlo errors.
    TruthTable,
    /// |D,H⟩ input: per-herald-branch count tables, tomography and Bell
    /// fidelities.
    BellTomo,
    /// Two-photon interference scan over the wavepacket overlap.
    HomScan,
    /// Fiber-to-waveguide mode overlap figures.
    Coupling,
    /// Birefringent directional-coupler splitter design and extinction.
    CouplerDesign,
    /// Reconstruct a density matrix from an external CSV count table.
    TomoFit {
        /// CSV count table (setting_q1,setting_q2,outcome,raw,blocked_ct,blocked_anc).
        #[arg(long)]
        input: PathBuf,
        /// Optional Bell-state label to report fidelity against
        /// (phi_plus, phi_minus, psi_plus, psi_minus).
        #[arg(long)]
        target: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TruthTable => "truth-table",
            Command::BellTomo => "bell-tomo",
            Command::HomScan => "hom-scan",
            Command::Coupling => "coupling",
            Command::CouplerDesign => "coupler-design",
            Command::TomoFit { .. } => "tomo-fit",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(cli.command.name(), &cli.overrides) {
        Ok(cfg) => cfg,
        Err(problems) => {
            eprintln!("configuration error:");
            for p in &problems {
                eprintln!("  - {p}");
            }
            return ExitCode::from(1);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.io.output_dir) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::TruthTable => cmd_truth_table(&cfg),
        Command::BellTomo => cmd_bell_tomo(&cfg),
        Command::HomScan => cmd_hom_scan(&cfg),
        Command::Coupling => cmd_coupling(&cfg),
        Command::CouplerDesign => cmd_coupler_design(&cfg),
        Command::TomoFit { input, target } => cmd_tomo_fit(&cfg, input, target.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn report<T: Serialize>(cfg: &ResolvedConfig, results: &T) -> serde_json::Value {
    json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment,
        "config": cfg,
        "results": results,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), String> {
    let mut text = header.join(",") + "\n";
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_truth_table(cfg: &ResolvedConfig) -> Result<(), String> {
    let exp = truth_table_experiment(
        &cfg.noise_config(),
        &cfg.rate_model(),
        cfg.statistics.integration_time_s,
        cfg.statistics.mc_samples,
        cfg.statistics.seed,
    )
    .map_err(|e| e.to_string())?;
    let ideal_overlap = opticnot::protocol::truth_table_overlap(
        &exp.analytic_table,
        &cnot_ideal_table(),
    );
    let results = json!({
        "analytic": {
            "table": exp.analytic_table,
            "overlap": exp.analytic_overlap,
        },
        "estimated": {
            "table": exp.estimated_table,
            "overlap": exp.estimated_overlap,
            "overlap_std": exp.overlap_std,
            "table_std": exp.table_std,
            "mc_rejected": exp.mc_rejected,
        },
        "ideal_overlap_check": ideal_overlap,
        "row_labels": INPUT_LABELS,
    });
    let out = &cfg.io.output_dir;
    write_json(&out.join("truth_table.json"), &report(cfg, &results))?;
    write_count_table_file(&out.join("truth_table_counts.csv"), &exp.records)
        .map_err(|e| e.to_string())?;
    if cfg.io.format == OutputFormat::Csv {
        let mut rows = Vec::new();
        for (i, label) in INPUT_LABELS.iter().enumerate() {
            let mut row = vec![label.to_string()];
            row.extend(exp.estimated_table[i].iter().map(|v| format!("{v}")));
            rows.push(row);
        }
        write_table_csv(
            &out.join("truth_table.csv"),
            &["input", "p_HH", "p_HV", "p_VH", "p_VV"],
            &rows,
        )?;
    }
    println!(
        "truth table overlap: analytic {:.4}, estimated {:.4} +/- {:.4}",
        exp.analytic_overlap, exp.estimated_overlap, exp.overlap_std
    );
    Ok(())
}

fn cmd_bell_tomo(cfg: &ResolvedConfig) -> Result<(), String> {
    let exp = bell_tomo_experiment(
        &cfg.noise_config(),
        &cfg.rate_model(),
        cfg.statistics.integration_time_s,
        cfg.statistics.mc_samples,
        cfg.statistics.seed,
    )
    .map_err(|e| e.to_string())?;
    let out = &cfg.io.output_dir;
    let mut branch_reports = Vec::new();
    for (i, b) in exp.branches.iter().enumerate() {
        let counts_path = out.join(format!("bell_tomo_counts_{}.csv", BRANCH_LABELS[i]));
        write_count_table_file(&counts_path, &b.records).map_err(|e| e.to_string())?;
        branch_reports.push(json!({
            "branch": BRANCH_LABELS[i],
            "target_bell_state": b.target.name(),
            "density_matrix": b.rho.to_nested(),
            "density_matrix_compensated": b.rho_compensated.to_nested(),
            "compensation_phases": [b.compensation_phases.0, b.compensation_phases.1],
            "fidelity": b.fidelity,
            "fidelity_std": b.fidelity_std,
            "analytic_fidelity": b.analytic_fidelity,
            "mle_converged": b.mle_converged,
            "mc_rejected": b.mc_rejected,
            "counts_file": counts_path.file_name().unwrap().to_str(),
        }));
    }
    write_json(
        &out.join("bell_tomo.json"),
        &report(cfg, &json!({ "branches": branch_reports })),
    )?;
    for b in &exp.branches {
        println!(
            "branch {}{}: target {}, fidelity {:.4} +/- {:.4}",
            match b.ancilla1 {
                opticnot::protocol::Ancilla1Result::D => "D",
                opticnot::protocol::Ancilla1Result::A => "A",
            },
            match b.ancilla2 {
                opticnot::protocol::Ancilla2Result::H => "H",
                opticnot::protocol::Ancilla2Result::V => "V",
            },
            b.target.name(),
            b.fidelity,
            b.fidelity_std
        );
    }
    Ok(())
}

fn cmd_hom_scan(cfg: &ResolvedConfig) -> Result<(), String> {
    let scan = hom_scan(&cfg.noise_config(), &cfg.rate_model(), cfg.hom.n_points)
        .map_err(|e| e.to_string())?;
    let out = &cfg.io.output_dir;
    let rows: Vec<Vec<String>> = scan
        .points
        .iter()
        .map(|p| {
            vec![
                format!("{}", p.overlap),
                format!("{}", p.signal),
                format!("{}", p.raw),
            ]
        })
        .collect();
    write_table_csv(
        &out.join("hom_scan.csv"),
        &["overlap", "coincidence_signal", "coincidence_raw"],
        &rows,
    )?;
    write_json(
        &out.join("hom_scan.json"),
        &report(
            cfg,
            &json!({
                "v_subtracted": scan.v_subtracted,
                "v_raw": scan.v_raw,
                "curve_file": "hom_scan.csv",
            }),
        ),
    )?;
    println!(
        "two-photon interference visibility: subtracted {:.4}, raw {:.4}",
        scan.v_subtracted, scan.v_raw
    );
    Ok(())
}

fn cmd_coupling(cfg: &ResolvedConfig) -> Result<(), String> {
    let fiber = GaussianMode::circular_mfd(cfg.coupling.fiber_mfd_um).map_err(|e| e.to_string())?;
    let expanded = GaussianMode::circular_mfd(cfg.coupling.expanded_fiber_mfd_um)
        .map_err(|e| e.to_string())?;
    let waveguide = GaussianMode::from_mfd(
        cfg.coupling.waveguide_mfd_um[0],
        cfg.coupling.waveguide_mfd_um[1],
    )
    .map_err(|e| e.to_string())?;
    let eta_fiber = overlap_efficiency(&fiber, &waveguide);
    let eta_expanded = overlap_efficiency(&expanded, &waveguide);
    let ratio = improvement_ratio(eta_expanded, eta_fiber);
    write_json(
        &cfg.io.output_dir.join("coupling.json"),
        &report(
            cfg,
            &json!({
                "eta": { "fiber": eta_fiber, "expanded_fiber": eta_expanded },
                "ratio": ratio,
            }),
        ),
    )?;
    println!(
        "mode overlap: fiber {:.4}, expanded fiber {:.4}, improvement {:.4}",
        eta_fiber, eta_expanded, ratio
    );
    Ok(())
}

fn cmd_coupler_design(cfg: &ResolvedConfig) -> Result<(), String> {
    let design = design_pbs(
        cfg.coupler.kappa_h,
        cfg.coupler.kappa_v,
        cfg.coupler.max_length_mm,
    )
    .map_err(|e| e.to_string())?;
    let dispersion = calibrate_dispersion(
        &design.spec,
        cfg.coupler.bandwidth_nm,
        cfg.coupler.target_extinction,
    )
    .map_err(|e| e.to_string())?;
    let calibrated = CouplerSpec {
        dkappa_h: dispersion,
        dkappa_v: dispersion,
        ..design.spec
    };
    let extinction = extinction_over_bandwidth(&calibrated, cfg.coupler.bandwidth_nm)
        .map_err(|e| e.to_string())?;
    write_json(
        &cfg.io.output_dir.join("coupler_design.json"),
        &report(
            cfg,
            &json!({
                "L_mm": design.spec.length_mm,
                "leakage": design.leakage(),
                "leakage_h": design.leakage_h,
                "leakage_v": design.leakage_v,
                "calibrated_dispersion_per_mm_nm": dispersion,
                "extinction": extinction,
                "bandwidth_nm": cfg.coupler.bandwidth_nm,
            }),
        ),
    )?;
    println!(
        "splitter: L = {:.6} mm, leakage {:.3e}, extinction {:.1}:1 over {} nm",
        design.spec.length_mm,
        design.leakage(),
        extinction,
        cfg.coupler.bandwidth_nm
    );
    Ok(())
}

fn cmd_tomo_fit(cfg: &ResolvedConfig, input: &Path, target: Option<&str>) -> Result<(), String> {
    let records = read_count_table_file(input, cfg.statistics.integration_time_s)
        .map_err(|e| e.to_string())?;
    let counts = setting_counts_from_records(&records).map_err(|e| e.to_string())?;
    let mle = mle_reconstruct(&counts).map_err(|e| e.to_string())?;
    let mut results = json!({
        "density_matrix": mle.rho.to_nested(),
        "iterations": mle.iterations,
        "converged": mle.converged,
        "clamped_negative_counts": mle.clamped_negative,
        "purity": mle.rho.purity(),
    });
    if let Some(name) = target {
        let bell = BellState::ALL
            .iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| format!("unknown Bell state {name:?}"))?;
        let (compensated, phases) = compensate_local_unitaries(&mle.rho, &bell.ket());
        results["target"] = json!({
            "bell_state": bell.name(),
            "fidelity": fidelity(&mle.rho, &bell.ket()),
            "fidelity_compensated": fidelity(&compensated, &bell.ket()),
            "compensation_phases": [phases.0, phases.1],
        });
    }
    write_json(
        &cfg.io.output_dir.join("tomo_fit.json"),
        &report(cfg, &results),
    )?;
    println!(
        "reconstructed state: purity {:.4}, converged {}",
        mle.rho.purity(),
        mle.converged
    );
    Ok(())
}
