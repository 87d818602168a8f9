//! Scenario runners: each writes its declared outputs into the run
//! directory and returns the list of files written.

use std::path::Path;

use anyhow::Result;
use fockgen::dynamics::{
    build_h_int, energy_expectations, evolve_lindblad_dt, evolve_unitary, DecoherenceSpec,
    DEFAULT_LINDBLAD_DT,
};
use fockgen::hilbert::{
    coherent_state, default_field_dim, displacement_exact, protocol_atomic_state, CoherentSpec,
    HilbertLayout, QuantumState,
};
use fockgen::linalg::{partial_trace, Subsystem};
use fockgen::metrics::{photon_distribution, purity, wigner};
use fockgen::protocol::{cqed_preset, optimize, robustness_sweep, OptimizeOptions, ProtocolOutcome};
use fockgen::C64;

use crate::config::{Scenario, ScenarioConfig};
use crate::output::{
    out_path, write_branches_csv, write_result_json, write_wigner_csv, CsvWriter,
};

/// Decoherence rates for a lossy run: the cavity-QED preset with per-field
/// overrides.
pub fn decoherence_from(cfg: &ScenarioConfig) -> DecoherenceSpec {
    let preset = cqed_preset().dec;
    DecoherenceSpec {
        kappa: cfg.kappa.unwrap_or(preset.kappa),
        gamma: cfg.gamma.unwrap_or(preset.gamma),
        n_th: cfg.n_th.unwrap_or(preset.n_th),
    }
}

fn optimize_options(cfg: &ScenarioConfig) -> OptimizeOptions {
    OptimizeOptions {
        metric: cfg.optimize_metric(),
        branches: cfg.branches.clone(),
        field_dim: cfg.field_dim,
        lindblad_dt: cfg.g_dt,
        ..Default::default()
    }
}

fn run_optimize(cfg: &ScenarioConfig, target_n: usize) -> Result<ProtocolOutcome> {
    let spec = CoherentSpec::from_nbar(cfg.n_bar_value());
    let dec = cfg.lossy.then(|| decoherence_from(cfg));
    let outcome = optimize(&spec, cfg.n_atoms, target_n, dec.as_ref(), &optimize_options(cfg))?;
    Ok(outcome)
}

/// Run one scenario; returns the file names written into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    match cfg.scenario {
        Scenario::Optimize => scenario_optimize(cfg, dir, hash),
        Scenario::Evolve => scenario_evolve(cfg, dir, hash),
        Scenario::SweepN => scenario_sweep_n(cfg, dir, hash),
        Scenario::Robustness => scenario_robustness(cfg, dir, hash),
        Scenario::Decoherence => scenario_decoherence(cfg, dir, hash),
        Scenario::Wigner => scenario_wigner(cfg, dir, hash),
        Scenario::Distribution => scenario_distribution(cfg, dir, hash),
    }
}

fn scenario_optimize(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let out = run_optimize(cfg, cfg.target_n)?;
    write_result_json(&out_path(dir, "result.json"), &out.result, cfg.embed_field_state, hash)?;
    write_branches_csv(&out_path(dir, "branches.csv"), &out.branches, hash)?;
    eprintln!(
        "optimize: l={} g_tau={:.6} beta={:.6} 1-delta={:.6} fidelity={:.6}",
        out.result.branch_l,
        out.result.g_tau_f,
        out.result.beta_f,
        out.result.one_minus_delta,
        out.result.fidelity
    );
    Ok(vec!["result.json".into(), "branches.csv".into()])
}

fn scenario_evolve(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let nbar = cfg.n_bar_value();
    let spec = CoherentSpec::from_nbar(nbar);
    let field_dim = cfg.field_dim.unwrap_or_else(|| default_field_dim(nbar, cfg.target_n));
    let layout = HilbertLayout::new(field_dim, cfg.n_atoms)?;
    let h = build_h_int(&layout, 1.0);
    let field = coherent_state(&spec, field_dim)?;
    let atoms = protocol_atomic_state(cfg.n_atoms)?;
    let psi0 = QuantumState::tensor_pure(&field, &atoms);

    let t_max = cfg.t_max.unwrap_or_else(|| {
        1.2 * fockgen::protocol::analytic_tau(cfg.target_n, 1, cfg.n_atoms).unwrap_or(30.0)
    });
    let grid: Vec<f64> =
        (0..cfg.t_points).map(|i| t_max * i as f64 / (cfg.t_points - 1) as f64).collect();

    let states: Vec<QuantumState> = if cfg.lossy {
        let dec = decoherence_from(cfg);
        let rho0 = QuantumState::density(layout, psi0.to_density());
        evolve_lindblad_dt(&rho0, &h, &dec, &grid, cfg.g_dt.unwrap_or(DEFAULT_LINDBLAD_DT))?
    } else {
        grid.iter().map(|&t| evolve_unitary(&psi0, &h, t)).collect::<fockgen::Result<_>>()?
    };

    let mut w = CsvWriter::new(hash, &[]);
    w.row_labels(&[
        "g_t",
        "field_energy",
        "atomic_energy",
        "interaction_energy",
        "total_energy",
        "field_purity",
        "target_population",
    ]);
    for (st, &t) in states.iter().zip(&grid) {
        let e = energy_expectations(st, &layout);
        let rho_f = partial_trace(&st.to_density(), &layout, Subsystem::Field)?;
        let field_state = QuantumState::density(HilbertLayout::field_only(field_dim), rho_f);
        let pur = purity(&field_state);
        let pop = field_state.to_density()[(cfg.target_n, cfg.target_n)].re;
        w.row(&[t, e.field, e.atomic, e.interaction, e.total, pur, pop]);
        eprintln!("evolve: g_t={t:.4}");
    }
    w.write(&out_path(dir, "evolve.csv"))?;
    Ok(vec!["evolve.csv".into()])
}

fn scenario_sweep_n(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let [lo, hi] = cfg.targets.unwrap_or([1, 2 * cfg.target_n + 5]);
    let mut w = CsvWriter::new(hash, &[]);
    w.comment(&format!("initial mean photon number n_bar = {}", cfg.n_bar_value()));
    w.row_labels(&[
        "target_n",
        "g_tau_f",
        "beta_f",
        "branch_l",
        "one_minus_delta",
        "fidelity",
        "purity",
    ]);
    for n in lo..=hi {
        let out = run_optimize(cfg, n)?;
        let r = &out.result;
        w.row_indexed(
            n as i64,
            &[r.g_tau_f, r.beta_f, r.branch_l as f64, r.one_minus_delta, r.fidelity, r.purity],
        );
        eprintln!("sweep-n: target {n} done (1-delta = {:.6})", r.one_minus_delta);
    }
    w.write(&out_path(dir, "sweep.csv"))?;
    Ok(vec!["sweep.csv".into()])
}

fn scenario_robustness(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let out = run_optimize(cfg, cfg.target_n)?;
    let r = &out.result;
    let spec = CoherentSpec::from_nbar(cfg.n_bar_value());
    let dec = cfg.lossy.then(|| decoherence_from(cfg));
    let grid = robustness_sweep(
        &spec,
        r,
        dec.as_ref(),
        (r.beta_f - cfg.beta_window, r.beta_f + cfg.beta_window),
        (r.g_tau_f - cfg.tau_window, r.g_tau_f + cfg.tau_window),
        (cfg.grid_points, cfg.grid_points),
    )?;
    let mut w = CsvWriter::new(hash, &[]);
    w.comment("row 1: beta axis; row 2: g_tau axis; then fidelity matrix rows (one per beta)");
    w.comment(&format!(
        "optimum: g_tau = {}, beta = {}, fidelity = {}",
        crate::output::fmt_f64(r.g_tau_f),
        crate::output::fmt_f64(r.beta_f),
        crate::output::fmt_f64(r.fidelity)
    ));
    w.row(&grid.beta_axis);
    w.row(&grid.g_tau_axis);
    for row in &grid.fidelity {
        w.row(row);
    }
    w.write(&out_path(dir, "robustness.csv"))?;
    write_result_json(&out_path(dir, "result.json"), r, cfg.embed_field_state, hash)?;
    Ok(vec!["robustness.csv".into(), "result.json".into()])
}

fn scenario_decoherence(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let spec = CoherentSpec::from_nbar(cfg.n_bar_value());
    let opts = optimize_options(cfg);
    let lossless = optimize(&spec, cfg.n_atoms, cfg.target_n, None, &opts)?;
    eprintln!("decoherence: lossless branch done (fidelity = {:.6})", lossless.result.fidelity);
    let dec = decoherence_from(cfg);
    let lossy = optimize(&spec, cfg.n_atoms, cfg.target_n, Some(&dec), &opts)?;
    eprintln!("decoherence: lossy branch done (fidelity = {:.6})", lossy.result.fidelity);

    write_result_json(&out_path(dir, "result_lossless.json"), &lossless.result, false, hash)?;
    write_result_json(&out_path(dir, "result_lossy.json"), &lossy.result, false, hash)?;
    let mut w = CsvWriter::new(hash, &[]);
    w.comment(&format!(
        "decoherence rates (units of g): kappa = {}, gamma = {}, n_th = {}",
        crate::output::fmt_f64(dec.kappa),
        crate::output::fmt_f64(dec.gamma),
        crate::output::fmt_f64(dec.n_th)
    ));
    w.row_labels(&["lossy", "g_tau_f", "beta_f", "one_minus_delta", "fidelity", "purity"]);
    for (flag, r) in [(0, &lossless.result), (1, &lossy.result)] {
        w.row_indexed(
            flag,
            &[r.g_tau_f, r.beta_f, r.one_minus_delta, r.fidelity, r.purity],
        );
    }
    w.write(&out_path(dir, "decoherence.csv"))?;
    Ok(vec![
        "result_lossless.json".into(),
        "result_lossy.json".into(),
        "decoherence.csv".into(),
    ])
}

fn scenario_wigner(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let out = run_optimize(cfg, cfg.target_n)?;
    let half = cfg
        .wigner_half_width
        .unwrap_or_else(|| 2.0 * (cfg.target_n as f64).sqrt() + 4.0);
    let axis: Vec<f64> = (0..cfg.wigner_points)
        .map(|i| -half + 2.0 * half * i as f64 / (cfg.wigner_points - 1) as f64)
        .collect();
    let grid = wigner(&out.result.field_state, &axis, &axis)?;
    if (grid.integral - 1.0).abs() > 5e-2 {
        eprintln!(
            "warning: Wigner grid too coarse or too small (integral = {:.4}); \
             widen wigner_half_width or raise wigner_points",
            grid.integral
        );
    }
    write_wigner_csv(&out_path(dir, "wigner.csv"), &grid, hash)?;
    write_result_json(&out_path(dir, "result.json"), &out.result, cfg.embed_field_state, hash)?;
    Ok(vec!["wigner.csv".into(), "result.json".into()])
}

fn scenario_distribution(cfg: &ScenarioConfig, dir: &Path, hash: u64) -> Result<Vec<String>> {
    let out = run_optimize(cfg, cfg.target_n)?;
    let r = &out.result;
    let field_dim = r.field_state.layout().field_dim();
    let p_prepared = photon_distribution(&r.field_state)?;
    // undo the correction displacement so the raw field distribution can be
    // compared with the ideal target displaced the opposite way
    let d_neg = displacement_exact(C64::from(-r.beta_f), field_dim);
    let rho_raw = d_neg.matmul(&r.field_state.to_density()).matmul(&d_neg.dagger());
    let raw_state = QuantumState::density(HilbertLayout::field_only(field_dim), rho_raw);
    let p_raw = photon_distribution(&raw_state)?;
    let mut w = CsvWriter::new(hash, &[]);
    w.comment("prepared = after the correction displacement; raw = before it");
    w.row_labels(&["n", "p_n_prepared", "p_n_raw", "p_n_ideal_displaced_target"]);
    for n in 0..field_dim {
        let ideal = d_neg[(n, r.target_n)].norm_sqr();
        w.row_indexed(n as i64, &[p_prepared[n], p_raw[n], ideal]);
    }
    w.write(&out_path(dir, "distribution.csv"))?;
    write_result_json(&out_path(dir, "result.json"), r, cfg.embed_field_state, hash)?;
    Ok(vec!["distribution.csv".into(), "result.json".into()])
}
