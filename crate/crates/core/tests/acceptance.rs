//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured values (run with `--nocapture` to see
//! the lines for passing criteria).
//!
//! Criterion 5 asserts branch membership of the optimal times against the
//! analytic seed formula at a 0.1 tolerance. The search genuinely optimizes
//! the objective, and its optima sit 0.3-1.3 below the analytic times (the
//! seed formula is a stationarity approximation), so that criterion reports
//! FAIL with the measured offsets; the printed detail includes the
//! branch-matched collective-speedup ratios, which do confirm the physics.

use std::time::Instant;

use fockgen::dynamics::{
    build_h_int, energy_expectations, evolve_lindblad, evolve_unitary, DecoherenceSpec,
};
use fockgen::hilbert::{
    coherent_state, default_field_dim, displacement_exact, displacement_laguerre,
    protocol_atomic_state, CoherentSpec, HilbertLayout, QuantumState,
};
use fockgen::linalg::{inner, ComplexMatrix};
use fockgen::metrics::{fidelity, purity, trace_distance, wigner};
use fockgen::protocol::{
    analytic_tau, cqed_preset, optimize, robustness_sweep, AtomicOutcome, OptimizeMetric,
    OptimizeOptions,
};
use fockgen::C64;

fn report(id: u32, pass: bool, detail: &str, started: Instant) {
    println!(
        "[acceptance] criterion {id:2}: {} - {detail} ({:.2?})",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed()
    );
}

#[test]
fn criterion_01_displacement_equivalence() {
    let started = Instant::now();
    let dim = 60;
    let pad = 40; // the exponential oracle needs truncation headroom
    let mut worst = 0.0f64;
    for &beta in &[0.1, 0.477, 0.649, 1.0] {
        let exact = displacement_exact(C64::from(beta), dim + pad);
        for m in 0..dim {
            for n in 0..dim {
                let lag = displacement_laguerre(beta, m, n);
                worst = worst.max((exact[(m, n)] - C64::from(lag)).norm());
            }
        }
    }
    let pass = worst < 1e-9 && started.elapsed().as_secs_f64() < 5.0;
    report(1, pass, &format!("max |laguerre - exact| = {worst:.3e} (limit 1e-9)"), started);
    assert!(pass);
}

#[test]
fn criterion_02_closed_form_vs_propagator() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(5.0);
    let layout = HilbertLayout::new(default_field_dim(5.0, 5), 1).unwrap();
    let h = build_h_int(&layout, 1.0);
    let field = coherent_state(&spec, layout.field_dim()).unwrap();
    let atom = protocol_atomic_state(1).unwrap();
    let psi0 = QuantumState::tensor_pure(&field, &atom);

    let mut worst = 0.0f64;
    for i in 0..50 {
        let t = 50.0 * i as f64 / 49.0;
        let cf = fockgen::dynamics::closed_form_single_atom(&spec, t, &layout).unwrap();
        let ev = evolve_unitary(&psi0, &h, t).unwrap();
        let deficit = 1.0 - inner(cf.amplitudes(), ev.amplitudes()).norm();
        worst = worst.max(deficit);
    }
    let pass = worst < 1e-8 && started.elapsed().as_secs_f64() < 10.0;
    report(2, pass, &format!("max overlap deficit = {worst:.3e} (limit 1e-8)"), started);
    assert!(pass);
}

#[test]
fn criterion_03_lossless_optimum_n10() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(10.0);
    let out = optimize(&spec, 1, 10, None, &OptimizeOptions::default()).unwrap();
    let fid = out.result.fidelity;

    let opts_ps = OptimizeOptions {
        metric: OptimizeMetric::PostSelected(AtomicOutcome::all_excited(1)),
        ..Default::default()
    };
    let out_ps = optimize(&spec, 1, 10, None, &opts_ps).unwrap();
    let cond = out_ps.result.post_selected.as_ref().unwrap().conditional_fidelity;

    let pass = (fid - 0.84).abs() <= 0.02
        && (cond - 0.92).abs() <= 0.02
        && started.elapsed().as_secs_f64() < 300.0;
    report(
        3,
        pass,
        &format!("fidelity = {fid:.5} (0.84 +- 0.02); post-selected on e = {cond:.5} (0.92 +- 0.02)"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_04_optimal_displacement_n5() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(5.0);
    let opts = OptimizeOptions { metric: OptimizeMetric::Fidelity, ..Default::default() };
    let out = optimize(&spec, 1, 5, None, &opts).unwrap();
    let beta_winner = out.result.beta_f;
    let beta_alt = out.branches.iter().find(|b| b.l == 2).map(|b| b.beta).unwrap_or(f64::NAN);

    let pass = (beta_winner - 0.649).abs() <= 0.02
        && (beta_alt + 0.477).abs() <= 0.02
        && started.elapsed().as_secs_f64() < 120.0;
    report(
        4,
        pass,
        &format!(
            "beta_F = {beta_winner:+.4} (0.649 +- 0.02, branch l={}); alternate branch beta = {beta_alt:+.4} (-0.477 +- 0.02)",
            out.result.branch_l
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_05_branch_membership() {
    let started = Instant::now();
    let cases = [(5usize, 1usize), (10, 1), (15, 1), (20, 1), (5, 2), (10, 2), (15, 2), (20, 2)];
    let mut taus = std::collections::HashMap::new();
    let mut offsets = Vec::new();
    for &(n, n_atoms) in &cases {
        let spec = CoherentSpec::from_nbar(n as f64);
        let out = optimize(&spec, n_atoms, n, None, &OptimizeOptions::default()).unwrap();
        let tau = out.result.g_tau_f;
        let nearest = (0..10)
            .map(|l| (tau - analytic_tau(n, l, n_atoms).unwrap()).abs())
            .fold(f64::INFINITY, f64::min);
        offsets.push(((n, n_atoms), nearest));
        taus.insert((n, n_atoms), tau);
    }
    let max_offset = offsets.iter().map(|(_, o)| *o).fold(0.0f64, f64::max);
    let membership_ok = max_offset < 0.1;

    let ratios: Vec<(usize, f64)> = [5usize, 10, 15, 20]
        .iter()
        .map(|&n| (n, taus[&(n, 2)] / (taus[&(n, 1)] / 2.0)))
        .collect();
    let ratios_ok = ratios.iter().all(|(_, r)| (r - 1.0).abs() <= 0.10);

    let pass = membership_ok && ratios_ok && started.elapsed().as_secs_f64() < 1800.0;
    let offsets_str: Vec<String> =
        offsets.iter().map(|((n, a), o)| format!("n={n},N={a}:{o:+.3}")).collect();
    let ratios_str: Vec<String> =
        ratios.iter().map(|(n, r)| format!("n={n}:{r:.3}")).collect();
    report(
        5,
        pass,
        &format!(
            "max |g_tau_F - nearest branch| = {max_offset:.3} (limit 0.1); offsets [{}]; N=2/(N=1/2) ratios [{}] (limit 10%)",
            offsets_str.join(", "),
            ratios_str.join(", ")
        ),
        started,
    );
    assert!(
        pass,
        "branch membership fails: the true optima sit below the analytic seed times \
         (max offset {max_offset:.3}), and at n=5 the N=1/N=2 winners sit on different branches \
         (ratios {ratios_str:?}); the seed formula is a stationarity approximation of the \
         objective, not its optimizer"
    );
}

#[test]
fn criterion_06_purity_at_optimum() {
    let started = Instant::now();
    let opts = OptimizeOptions { metric: OptimizeMetric::Fidelity, ..Default::default() };
    let mut purities = Vec::new();
    for &n in &[5usize, 10, 20] {
        let spec = CoherentSpec::from_nbar(n as f64);
        let out = optimize(&spec, 1, n, None, &opts).unwrap();
        purities.push((n, out.result.purity));
    }
    let n1_ok = purities.iter().all(|(_, p)| (p - 0.80).abs() <= 0.05);
    let n1_at_10 = purities.iter().find(|(n, _)| *n == 10).unwrap().1;

    let spec10 = CoherentSpec::from_nbar(10.0);
    let out2 = optimize(&spec10, 2, 10, None, &opts).unwrap();
    let p2 = out2.result.purity;
    let n2_ok = p2 < n1_at_10 && p2 < 0.75;

    let pass = n1_ok && n2_ok && started.elapsed().as_secs_f64() < 900.0;
    let list: Vec<String> = purities.iter().map(|(n, p)| format!("n={n}:{p:.4}")).collect();
    report(
        6,
        pass,
        &format!(
            "N=1 purities [{}] (0.80 +- 0.05); N=2 n=10 purity = {p2:.4} (< 0.75 and < N=1's {n1_at_10:.4})",
            list.join(", ")
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_07_target_matching() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(10.0);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut at10 = 0.0;
    for n in 1..=25usize {
        let out = optimize(&spec, 1, n, None, &OptimizeOptions::default()).unwrap();
        let v = out.result.one_minus_delta;
        if v > best.1 {
            best = (n, v);
        }
        if n == 10 {
            at10 = v;
        }
    }
    let pass = best.0 == 10 && started.elapsed().as_secs_f64() < 1800.0;
    report(
        7,
        pass,
        &format!("1-delta maximized at n = {} (value {:.5}); value at n = 10: {at10:.5}", best.0, best.1),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_08_lindblad_validity() {
    let started = Instant::now();

    // (a) unitary limit at nbar = 5, g t = 10
    let spec = CoherentSpec::from_nbar(5.0);
    let layout = HilbertLayout::new(default_field_dim(5.0, 5), 1).unwrap();
    let h = build_h_int(&layout, 1.0);
    let field = coherent_state(&spec, layout.field_dim()).unwrap();
    let atom = protocol_atomic_state(1).unwrap();
    let psi0 = QuantumState::tensor_pure(&field, &atom);
    let rho0 = QuantumState::density(layout, psi0.to_density());
    let grid = [0.0, 5.0, 10.0];
    let states = evolve_lindblad(&rho0, &h, &DecoherenceSpec::lossless(), &grid).unwrap();
    let exact = evolve_unitary(&psi0, &h, 10.0).unwrap();
    let dist = trace_distance(&states[2], &exact).unwrap();
    let drift_a = states
        .iter()
        .map(|s| (s.to_density().trace().re - 1.0).abs())
        .fold(0.0f64, f64::max);

    // (b) pure cavity decay: <n>(t) = nbar exp(-kappa t)
    let nbar_b = 4.0;
    let layout_b = HilbertLayout::new(default_field_dim(nbar_b, 4), 1).unwrap();
    let h_b = build_h_int(&layout_b, 0.0);
    let dec_b = DecoherenceSpec { kappa: 0.05, gamma: 0.0, n_th: 0.0 };
    let field_b = coherent_state(&CoherentSpec::from_nbar(nbar_b), layout_b.field_dim()).unwrap();
    let psi0_b = QuantumState::tensor_pure(&field_b, &protocol_atomic_state(1).unwrap());
    let rho0_b = QuantumState::density(layout_b, psi0_b.to_density());
    let grid_b = [0.0, 5.0, 10.0, 15.0, 20.0];
    let states_b = evolve_lindblad(&rho0_b, &h_b, &dec_b, &grid_b).unwrap();
    let (_, _, n_op) = fockgen::hilbert::ladder_operators(layout_b.field_dim());
    let n_full =
        fockgen::linalg::kron(&n_op, &ComplexMatrix::identity(layout_b.atoms_dim()));
    let mut rel_err = 0.0f64;
    for (st, &t) in states_b.iter().zip(&grid_b) {
        let mean = st.expectation(&n_full).re;
        let want = nbar_b * (-dec_b.kappa * t).exp();
        rel_err = rel_err.max((mean - want).abs() / want);
    }
    let drift_b = states_b
        .iter()
        .map(|s| (s.to_density().trace().re - 1.0).abs())
        .fold(0.0f64, f64::max);

    let drift = drift_a.max(drift_b);
    let pass = dist < 1e-6 && rel_err < 1e-4 && drift < 1e-8
        && started.elapsed().as_secs_f64() < 600.0;
    report(
        8,
        pass,
        &format!(
            "unitary-limit distance = {dist:.2e} (limit 1e-6); decay rel err = {rel_err:.2e} (limit 1e-4); trace drift = {drift:.2e} (limit 1e-8)"
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_09_cqed_decoherence() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(10.0);
    let preset = cqed_preset();
    let opts = OptimizeOptions::default();
    let lossless = optimize(&spec, 1, 10, None, &opts).unwrap();
    let lossy = optimize(&spec, 1, 10, Some(&preset.dec), &opts).unwrap();
    let (fl, fd) = (lossless.result.fidelity, lossy.result.fidelity);
    let pass = fd < fl && fd > 0.5 && started.elapsed().as_secs_f64() < 3600.0;
    report(
        9,
        pass,
        &format!("lossy fidelity = {fd:.5} vs lossless {fl:.5} (strictly below, above 0.5)"),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_10_large_n_fast_path() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(100.0);
    let opts = OptimizeOptions {
        metric: OptimizeMetric::Fidelity,
        branches: (0..=6).collect(),
        ..Default::default()
    };
    let out = optimize(&spec, 1, 100, None, &opts).unwrap();
    let fid = out.result.fidelity;
    let pass = fid >= 0.68 && started.elapsed().as_secs_f64() < 7200.0;
    report(
        10,
        pass,
        &format!(
            "n = 100 fidelity = {fid:.5} (>= 0.68) at g_tau = {:.2}, branch l = {}",
            out.result.g_tau_f, out.result.branch_l
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_11_conservation_and_metric_properties() {
    let started = Instant::now();
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    // total-excitation conservation along a unitary trajectory
    let layout = HilbertLayout::new(default_field_dim(5.0, 5), 1).unwrap();
    let h = build_h_int(&layout, 1.0);
    let field = coherent_state(&CoherentSpec::from_nbar(5.0), layout.field_dim()).unwrap();
    let psi0 = QuantumState::tensor_pure(&field, &protocol_atomic_state(1).unwrap());
    let e0 = energy_expectations(&psi0, &layout);
    let mut max_drift = 0.0f64;
    for i in 1..=20 {
        let st = evolve_unitary(&psi0, &h, i as f64 * 1.7).unwrap();
        let e = energy_expectations(&st, &layout);
        max_drift = max_drift.max((e.field + e.atomic - (e0.field + e0.atomic)).abs());
        max_drift = max_drift.max((e.total - e0.total).abs());
    }

    // purity displacement-invariance
    let mut rng = StdRng::seed_from_u64(2024);
    let dim = 24;
    let b = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let p = b.matmul(&b.dagger());
    let rho = p.scaled(C64::from(1.0 / p.trace().re));
    let rho_state = QuantumState::density(HilbertLayout::field_only(dim), rho.clone());
    let d = displacement_exact(C64::from(0.6), dim);
    let disp = d.matmul(&rho).matmul(&d.dagger());
    let disp_state = QuantumState::density(HilbertLayout::field_only(dim), disp);
    let purity_dev = (purity(&rho_state) - purity(&disp_state)).abs();

    // Fuchs - van de Graaf on 100 random pairs
    let mut fvdg_ok = true;
    for _ in 0..100 {
        let mk = |rng: &mut StdRng| {
            let b = ComplexMatrix::from_fn(8, 8, |_, _| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let p = b.matmul(&b.dagger());
            let rho = p.scaled(C64::from(1.0 / p.trace().re));
            QuantumState::density(HilbertLayout::field_only(8), rho)
        };
        let a = mk(&mut rng);
        let c = mk(&mut rng);
        let f = fidelity(&a, &c).unwrap();
        let dl = trace_distance(&a, &c).unwrap();
        if 1.0 - f.sqrt() > dl + 1e-10 || dl > (1.0 - f).sqrt() + 1e-10 {
            fvdg_ok = false;
        }
    }

    // Wigner reference points and normalization
    let wdim = 40;
    let axis: Vec<f64> = (0..121).map(|i| -6.0 + 0.1 * i as f64).collect();
    let mk_fock = |n: usize| {
        let mut amps = vec![C64::ZERO; wdim];
        amps[n] = C64::ONE;
        QuantumState::pure(HilbertLayout::field_only(wdim), amps)
    };
    let inv_pi = 1.0 / std::f64::consts::PI;
    let g0 = wigner(&mk_fock(0), &axis, &axis).unwrap();
    let g1 = wigner(&mk_fock(1), &axis, &axis).unwrap();
    let mid = 60;
    let w0 = g0.values[mid][mid];
    let w1 = g1.values[mid][mid];
    let wigner_ok = (w0 - inv_pi).abs() <= 1e-6
        && (w1 + inv_pi).abs() <= 1e-6
        && (g0.integral - 1.0).abs() <= 1e-2
        && (g1.integral - 1.0).abs() <= 1e-2;

    let pass = max_drift < 1e-8 && purity_dev < 1e-10 && fvdg_ok && wigner_ok
        && started.elapsed().as_secs_f64() < 120.0;
    report(
        11,
        pass,
        &format!(
            "excitation drift = {max_drift:.2e}; purity-displacement dev = {purity_dev:.2e}; FvdG ok = {fvdg_ok}; W_vac(0,0) = {w0:.6}, W_1(0,0) = {w1:.6}, integrals = {:.4}/{:.4}",
            g0.integral, g1.integral
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_12_robustness_plateau() {
    let started = Instant::now();
    let spec = CoherentSpec::from_nbar(5.0);
    let opts = OptimizeOptions { metric: OptimizeMetric::Fidelity, ..Default::default() };
    let out = optimize(&spec, 1, 5, None, &opts).unwrap();
    let r = &out.result;

    // sample the fidelity along both axes through the optimum
    let grid_beta = robustness_sweep(
        &spec,
        r,
        None,
        (r.beta_f - 0.02, r.beta_f + 0.02),
        (r.g_tau_f, r.g_tau_f),
        (3, 1),
    )
    .unwrap();
    let delta_beta = grid_beta
        .fidelity
        .iter()
        .map(|row| (row[0] - r.fidelity).abs())
        .fold(0.0f64, f64::max);

    let grid_tau = robustness_sweep(
        &spec,
        r,
        None,
        (r.beta_f, r.beta_f),
        (r.g_tau_f - 0.05, r.g_tau_f + 0.05),
        (1, 3),
    )
    .unwrap();
    let delta_tau = grid_tau.fidelity[0]
        .iter()
        .map(|f| (f - r.fidelity).abs())
        .fold(0.0f64, f64::max);

    let pass = delta_beta < 0.01 && delta_tau > delta_beta
        && started.elapsed().as_secs_f64() < 300.0;
    report(
        12,
        pass,
        &format!(
            "fidelity change: |d beta| <= 0.02 -> {delta_beta:.5} (< 0.01); |d g_tau| = 0.05 -> {delta_tau:.5} (must exceed the beta change)"
        ),
        started,
    );
    assert!(pass);
}
