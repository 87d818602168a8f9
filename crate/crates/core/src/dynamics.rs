//! Time evolution: exact spectral propagation under the resonant interaction
//! Hamiltonian, the single-atom closed-form solution, and a fixed-step
//! fourth-order Runge-Kutta integrator for the master equation with cavity
//! decay, atomic decay, and thermal photons.
//!
//! Times are in units of `1/g`; decay rates in units of `g`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::hilbert::{
    atomic_operators, coherent_state, ladder_operators, CoherentSpec, HilbertLayout, QuantumState,
    StateRepr,
};
use crate::linalg::{herm_eig, ComplexMatrix, EigenDecomposition};
use crate::C64;

/// Resonant interaction Hamiltonian `H = g sum_i (a sigma_+^i + a^dag
/// sigma_-^i)` with a lazily cached eigendecomposition for repeated
/// propagation to scattered times.
#[derive(Debug)]
pub struct InteractionHamiltonian {
    layout: HilbertLayout,
    g: f64,
    matrix: ComplexMatrix,
    eig: OnceLock<EigenDecomposition>,
}

impl InteractionHamiltonian {
    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigendecomposition, computed on first use and shared afterwards.
    pub fn eig(&self) -> &EigenDecomposition {
        self.eig.get_or_init(|| {
            herm_eig(&self.matrix).expect("interaction Hamiltonian is Hermitian by construction")
        })
    }
}

/// Build the resonant interaction Hamiltonian on the composite space.
pub fn build_h_int(layout: &HilbertLayout, g: f64) -> InteractionHamiltonian {
    let (a, a_dag, _) = ladder_operators(layout.field_dim());
    let eye_atoms = ComplexMatrix::identity(layout.atoms_dim());
    let a_full = crate::linalg::kron(&a, &eye_atoms);
    let a_dag_full = crate::linalg::kron(&a_dag, &eye_atoms);
    let total = layout.total_dim();
    let mut h = ComplexMatrix::zeros(total, total);
    for i in 0..layout.atom_count() {
        let (sp, sm, _, _) = atomic_operators(layout, i).expect("atom index in range");
        h = h.add(&a_full.matmul(&sp)).add(&a_dag_full.matmul(&sm));
    }
    let h = h.scaled(C64::from(g));
    InteractionHamiltonian { layout: *layout, g, matrix: h, eig: OnceLock::new() }
}

/// Decay channels of the master equation: cavity decay `kappa`, atomic decay
/// `gamma`, and thermal occupancy `n_th` (all rates in units of `g`).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DecoherenceSpec {
    pub kappa: f64,
    pub gamma: f64,
    pub n_th: f64,
}

impl DecoherenceSpec {
    pub fn lossless() -> Self {
        Self { kappa: 0.0, gamma: 0.0, n_th: 0.0 }
    }

    pub fn is_lossless(&self) -> bool {
        self.kappa == 0.0 && self.gamma == 0.0
    }
}

/// Propagate a state for time `t` under `exp(-i H t)` using the cached
/// eigendecomposition. Pure states stay pure; density matrices are
/// conjugated by the propagator.
pub fn evolve_unitary(
    state: &QuantumState,
    h: &InteractionHamiltonian,
    t: f64,
) -> Result<QuantumState> {
    if state.dim() != h.layout.total_dim() {
        return Err(Error::DimensionMismatch { expected: h.layout.total_dim(), got: state.dim() });
    }
    let eig = h.eig();
    match state.repr() {
        StateRepr::Pure(psi) => {
            let evolved = eig.apply_fn_vec(|l| C64::new(0.0, -l * t).exp(), psi);
            Ok(QuantumState::pure(*state.layout(), evolved))
        }
        StateRepr::Density(rho) => {
            let u = eig.apply_fn(|l| C64::new(0.0, -l * t).exp());
            let evolved = u.matmul(rho).matmul(&u.dagger());
            Ok(QuantumState::density(*state.layout(), evolved))
        }
    }
}

/// Closed-form single-atom solution for an initially excited atom and a
/// coherent field: amplitudes `C_n cos(t sqrt(n+1))` on `|n,e>` and
/// `-i C_n (sqrt(n)/alpha) sin(t sqrt(n))` on `|n,g>`, renormalized within
/// the truncation. Time is in units of `1/g`.
pub fn closed_form_single_atom(
    spec: &CoherentSpec,
    t: f64,
    layout: &HilbertLayout,
) -> Result<QuantumState> {
    if layout.atom_count() != 1 {
        return Err(Error::UnsupportedAtomCount(layout.atom_count()));
    }
    let field = coherent_state(spec, layout.field_dim())?;
    let c = field.amplitudes();
    let alpha = spec.alpha;
    let mut amps = vec![C64::ZERO; layout.total_dim()];
    let mut norm2 = 0.0;
    for n in 0..layout.field_dim() {
        let nf = n as f64;
        let e_amp = c[n] * (t * (nf + 1.0).sqrt()).cos();
        let g_amp = if n == 0 {
            C64::ZERO
        } else {
            -C64::new(0.0, 1.0) * c[n] * (nf.sqrt() / alpha) * (t * nf.sqrt()).sin()
        };
        amps[2 * n] = e_amp;
        amps[2 * n + 1] = g_amp;
        norm2 += e_amp.norm_sqr() + g_amp.norm_sqr();
    }
    let deficit = 1.0 - norm2;
    if deficit > 1e-8 {
        return Err(Error::TruncationTooSmall { deficit });
    }
    let scale = C64::from(1.0 / norm2.sqrt());
    for a in amps.iter_mut() {
        *a *= scale;
    }
    Ok(QuantumState::pure(*layout, amps))
}

/// Compressed sparse rows; the Lindblad right-hand side applies every
/// operator in this form, so one step costs O(nnz * dim) instead of O(dim^3).
#[derive(Debug, Clone)]
struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOp {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let dim = m.rows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != C64::ZERO {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    /// `out = self * rho` (dense rho).
    fn mul_dense_into(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix) {
        let d = self.dim;
        let rdata = rho.data();
        out.data_mut().fill(C64::ZERO);
        for i in 0..d {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let k = self.cols[idx];
                let v = self.vals[idx];
                let src = &rdata[k * d..(k + 1) * d];
                let dst = &mut out.data_mut()[i * d..(i + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
    }

    /// `out += coeff * rho * self^dag`.
    fn accumulate_right_dagger(&self, rho: &ComplexMatrix, coeff: f64, out: &mut ComplexMatrix) {
        let d = self.dim;
        let rdata = rho.data();
        for r in 0..d {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[idx];
                let v = self.vals[idx].conj() * coeff;
                // (rho * L^dag)[i, r] += rho[i, c] * conj(L[r, c])
                let odata = out.data_mut();
                for i in 0..d {
                    odata[i * d + r] += rdata[i * d + c] * v;
                }
            }
        }
    }
}

/// Fixed-step RK4 integrator for the master equation, applying the
/// right-hand side directly to the density matrix (no superoperator is
/// materialized).
#[derive(Debug)]
pub struct LindbladPropagator {
    dim: usize,
    /// `-iH - (1/2) sum_j c_j L_j^dag L_j`, applied from the left; its
    /// adjoint action from the right completes the anticommutator terms.
    k_op: SparseOp,
    /// jump channels `(c_j, L_j)`
    channels: Vec<(f64, SparseOp)>,
    dt: f64,
}

impl LindbladPropagator {
    /// Assemble the channel operators for the given Hamiltonian and
    /// decoherence rates. `dt` is the default step in units of `1/g`.
    pub fn new(h: &InteractionHamiltonian, dec: &DecoherenceSpec, dt: f64) -> Self {
        let layout = h.layout;
        let eye_atoms = ComplexMatrix::identity(layout.atoms_dim());
        let (a, a_dag, _) = ladder_operators(layout.field_dim());
        let a_full = crate::linalg::kron(&a, &eye_atoms);
        let a_dag_full = crate::linalg::kron(&a_dag, &eye_atoms);

        let mut raw: Vec<(f64, ComplexMatrix)> = Vec::new();
        if dec.kappa > 0.0 {
            raw.push((dec.kappa * (dec.n_th + 1.0), a_full.clone()));
            if dec.n_th > 0.0 {
                raw.push((dec.kappa * dec.n_th, a_dag_full.clone()));
            }
        }
        if dec.gamma > 0.0 {
            for i in 0..layout.atom_count() {
                let (sp, sm, _, _) = atomic_operators(&layout, i).expect("atom index in range");
                raw.push((dec.gamma * (dec.n_th + 1.0), sm));
                if dec.n_th > 0.0 {
                    raw.push((dec.gamma * dec.n_th, sp));
                }
            }
        }

        let total = layout.total_dim();
        let mut k_dense = h.matrix().scaled(C64::new(0.0, -1.0));
        for (c, l) in &raw {
            let ldl = l.dagger().matmul(l);
            k_dense.add_scaled_assign(&ldl, C64::from(-0.5 * c));
        }
        let channels = raw.iter().map(|(c, l)| (*c, SparseOp::from_dense(l))).collect();
        Self { dim: total, k_op: SparseOp::from_dense(&k_dense), channels, dt }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn set_dt(&mut self, dt: f64) {
        self.dt = dt;
    }

    /// Master-equation right-hand side. Requires Hermitian `rho` (RK4 stage
    /// matrices stay Hermitian because the map preserves Hermiticity).
    fn rhs_into(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix, scratch: &mut ComplexMatrix) {
        // out = K rho + (K rho)^dag
        self.k_op.mul_dense_into(rho, scratch);
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = scratch[(i, j)] + scratch[(j, i)].conj();
            }
        }
        for (c, l) in &self.channels {
            l.mul_dense_into(rho, scratch);
            l.accumulate_right_dagger(scratch, *c, out);
        }
    }

    /// One RK4 step of size `h` in place.
    fn step(&self, rho: &mut ComplexMatrix, h: f64, ws: &mut Workspace) {
        let Workspace { k1, k2, k3, k4, stage, scratch } = ws;
        self.rhs_into(rho, k1, scratch);

        stage.clone_from(rho);
        stage.add_scaled_assign(k1, C64::from(h / 2.0));
        self.rhs_into(stage, k2, scratch);

        stage.clone_from(rho);
        stage.add_scaled_assign(k2, C64::from(h / 2.0));
        self.rhs_into(stage, k3, scratch);

        stage.clone_from(rho);
        stage.add_scaled_assign(k3, C64::from(h));
        self.rhs_into(stage, k4, scratch);

        rho.add_scaled_assign(k1, C64::from(h / 6.0));
        rho.add_scaled_assign(k2, C64::from(h / 3.0));
        rho.add_scaled_assign(k3, C64::from(h / 3.0));
        rho.add_scaled_assign(k4, C64::from(h / 6.0));
        rho.hermitize();
    }

    /// Advance `rho` by `duration`, splitting into equal substeps no larger
    /// than the configured `dt`.
    pub fn propagate(&self, rho: &mut ComplexMatrix, duration: f64) {
        if duration <= 0.0 {
            return;
        }
        let n_steps = (duration / self.dt).ceil().max(1.0) as usize;
        let h = duration / n_steps as f64;
        let mut ws = Workspace::new(self.dim);
        for _ in 0..n_steps {
            self.step(rho, h, &mut ws);
        }
    }
}

struct Workspace {
    k1: ComplexMatrix,
    k2: ComplexMatrix,
    k3: ComplexMatrix,
    k4: ComplexMatrix,
    stage: ComplexMatrix,
    scratch: ComplexMatrix,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            k1: ComplexMatrix::zeros(dim, dim),
            k2: ComplexMatrix::zeros(dim, dim),
            k3: ComplexMatrix::zeros(dim, dim),
            k4: ComplexMatrix::zeros(dim, dim),
            stage: ComplexMatrix::zeros(dim, dim),
            scratch: ComplexMatrix::zeros(dim, dim),
        }
    }
}

/// Default integrator step in units of `1/g`.
pub const DEFAULT_LINDBLAD_DT: f64 = 1e-3;

/// Integrate the master equation from `rho0` and return the state at every
/// grid time. The grid must start at zero and ascend.
///
/// The step starts at [`DEFAULT_LINDBLAD_DT`] and is halved (up to three
/// times) if the trace drifts by more than 1e-8 over the run; a drift above
/// 1e-6 after refinement reports [`Error::StepSizeTooLarge`].
pub fn evolve_lindblad(
    rho0: &QuantumState,
    h: &InteractionHamiltonian,
    dec: &DecoherenceSpec,
    t_grid: &[f64],
) -> Result<Vec<QuantumState>> {
    evolve_lindblad_dt(rho0, h, dec, t_grid, DEFAULT_LINDBLAD_DT)
}

/// [`evolve_lindblad`] with an explicit initial step size.
pub fn evolve_lindblad_dt(
    rho0: &QuantumState,
    h: &InteractionHamiltonian,
    dec: &DecoherenceSpec,
    t_grid: &[f64],
    dt0: f64,
) -> Result<Vec<QuantumState>> {
    if rho0.dim() != h.layout.total_dim() {
        return Err(Error::DimensionMismatch { expected: h.layout.total_dim(), got: rho0.dim() });
    }
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::DimensionMismatch { expected: 1, got: t_grid.len() });
    }
    let layout = *rho0.layout();
    let mut dt = dt0;
    let mut last_drift = f64::INFINITY;
    for _ in 0..4 {
        let prop = LindbladPropagator::new(h, dec, dt);
        let mut rho = rho0.to_density();
        let mut out = Vec::with_capacity(t_grid.len());
        let mut drift = 0.0f64;
        let mut prev_t = 0.0;
        for &t in t_grid {
            prop.propagate(&mut rho, t - prev_t);
            prev_t = t;
            drift = drift.max((rho.trace().re - 1.0).abs());
            out.push(QuantumState::density(layout, rho.clone()));
        }
        last_drift = drift;
        if drift < 1e-8 {
            return Ok(out);
        }
        dt /= 2.0;
    }
    Err(Error::StepSizeTooLarge { drift: last_drift })
}

/// Field, atomic, and interaction energy expectations in units of `hbar g`,
/// plus their sum. The field term is `<a^dag a>`, the atomic term counts
/// `|e>` populations, and the interaction term is `<H_int>/g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub field: f64,
    pub atomic: f64,
    pub interaction: f64,
    pub total: f64,
}

/// Energy bookkeeping for conservation checks along unitary trajectories.
pub fn energy_expectations(state: &QuantumState, layout: &HilbertLayout) -> EnergyBreakdown {
    let eye_atoms = ComplexMatrix::identity(layout.atoms_dim());
    let (_, _, n_op) = ladder_operators(layout.field_dim());
    let n_full = crate::linalg::kron(&n_op, &eye_atoms);
    let field = state.expectation(&n_full).re;

    let total_dim = layout.total_dim();
    let mut excit = ComplexMatrix::zeros(total_dim, total_dim);
    for i in 0..layout.atom_count() {
        let (sp, sm, _, _) = atomic_operators(layout, i).expect("atom index in range");
        excit = excit.add(&sp.matmul(&sm));
    }
    let atomic = state.expectation(&excit).re;

    let h = build_h_int(layout, 1.0);
    let interaction = state.expectation(h.matrix()).re;

    EnergyBreakdown { field, atomic, interaction, total: field + atomic + interaction }
}
