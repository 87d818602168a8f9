//! Truncated Fock space, atomic registers, canonical operators, coherent
//! states, and the displacement operator by two independent routes (matrix
//! exponential and the associated-Laguerre closed form).
//!
//! Basis conventions, fixed once for all file outputs: tensor factors are
//! ordered `field (x) atom_1 (x) ... (x) atom_N`; each atom uses the basis
//! `(|e>, |g>)` so index 0 is the excited state. Fock states run
//! `|0> ... |field_dim - 1>`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{kron, outer, ComplexMatrix};
use crate::C64;

/// Shape of the composite Hilbert space: Fock truncation and atom count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct HilbertLayout {
    field_dim: usize,
    atom_count: usize,
}

impl HilbertLayout {
    /// Layout with a field factor and `atom_count` two-level systems.
    pub fn new(field_dim: usize, atom_count: usize) -> Result<Self> {
        if field_dim < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: field_dim });
        }
        if atom_count == 0 || atom_count > 3 {
            return Err(Error::UnsupportedAtomCount(atom_count));
        }
        Ok(Self { field_dim, atom_count })
    }

    /// Field-only layout (no atomic factor); used for reduced field states.
    pub fn field_only(field_dim: usize) -> Self {
        Self { field_dim, atom_count: 0 }
    }

    /// Atoms-only layout (trivial field factor); used for the protocol's
    /// initial atomic states.
    pub fn atoms_only(atom_count: usize) -> Result<Self> {
        if atom_count == 0 || atom_count > 3 {
            return Err(Error::UnsupportedAtomCount(atom_count));
        }
        Ok(Self { field_dim: 1, atom_count })
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    /// Dimension of the atomic register, `2^atom_count`.
    pub fn atoms_dim(&self) -> usize {
        1 << self.atom_count
    }

    /// Total composite dimension.
    pub fn total_dim(&self) -> usize {
        self.field_dim * self.atoms_dim()
    }
}

/// Default Fock truncation for a coherent field with mean photon number
/// `nbar` and a target Fock state `target`: generous enough that the Poisson
/// tail and the displaced support both fit with margin.
pub fn default_field_dim(nbar: f64, target: usize) -> usize {
    let m = nbar.max(target as f64).max(1.0);
    let a = (2.2 * m).ceil();
    let b = m.ceil() + (7.0 * m.sqrt()).ceil();
    a.max(b) as usize + 10
}

/// Pure-vector or density-matrix representation of a state.
#[derive(Debug, Clone)]
pub enum StateRepr {
    Pure(Vec<C64>),
    Density(ComplexMatrix),
}

/// A quantum state tagged with its Hilbert-space layout.
#[derive(Debug, Clone)]
pub struct QuantumState {
    layout: HilbertLayout,
    repr: StateRepr,
}

impl QuantumState {
    /// Pure state from amplitudes. The amplitudes must be normalized.
    pub fn pure(layout: HilbertLayout, amplitudes: Vec<C64>) -> Self {
        assert_eq!(layout.total_dim(), amplitudes.len(), "amplitude length mismatch");
        debug_assert!(
            (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-8,
            "pure state not normalized"
        );
        Self { layout, repr: StateRepr::Pure(amplitudes) }
    }

    /// Density-matrix state. The matrix must be Hermitian with unit trace.
    pub fn density(layout: HilbertLayout, rho: ComplexMatrix) -> Self {
        assert_eq!(layout.total_dim(), rho.rows(), "density dimension mismatch");
        Self { layout, repr: StateRepr::Density(rho) }
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, StateRepr::Pure(_))
    }

    /// Amplitudes of a pure state; panics on density matrices.
    pub fn amplitudes(&self) -> &[C64] {
        match &self.repr {
            StateRepr::Pure(v) => v,
            StateRepr::Density(_) => panic!("amplitudes() on a density matrix"),
        }
    }

    /// Density-matrix form (an outer product for pure states).
    pub fn to_density(&self) -> ComplexMatrix {
        match &self.repr {
            StateRepr::Pure(v) => outer(v, v),
            StateRepr::Density(rho) => rho.clone(),
        }
    }

    /// Tensor product of two pure states, left factor major.
    pub fn tensor_pure(field: &QuantumState, atoms: &QuantumState) -> QuantumState {
        let fv = field.amplitudes();
        let av = atoms.amplitudes();
        let mut out = Vec::with_capacity(fv.len() * av.len());
        for f in fv {
            for a in av {
                out.push(f * a);
            }
        }
        let layout = HilbertLayout {
            field_dim: field.layout.field_dim * atoms.layout.field_dim,
            atom_count: field.layout.atom_count + atoms.layout.atom_count,
        };
        QuantumState::pure(layout, out)
    }

    /// Expectation value of an operator.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        match &self.repr {
            StateRepr::Pure(v) => {
                let ov = op.matvec(v);
                crate::linalg::inner(v, &ov)
            }
            StateRepr::Density(rho) => op.matmul(rho).trace(),
        }
    }
}

/// Coherent-state specification: complex amplitude `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct CoherentSpec {
    pub alpha: C64,
}

impl CoherentSpec {
    pub fn new(alpha: C64) -> Self {
        Self { alpha }
    }

    /// Real-amplitude coherent state with mean photon number `nbar`.
    pub fn from_nbar(nbar: f64) -> Self {
        Self { alpha: C64::new(nbar.sqrt(), 0.0) }
    }

    /// Mean photon number `|alpha|^2`.
    pub fn nbar(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Natural log of `n!`, from a cached cumulative table.
pub fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0f64; 4096];
        for i in 1..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    table[n]
}

/// Annihilation, creation, and number operators on the truncated Fock space.
///
/// `a |n> = sqrt(n) |n-1>`; the truncation makes `[a, a^dag]` deviate from
/// the identity only in its last diagonal entry.
pub fn ladder_operators(field_dim: usize) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let mut a = ComplexMatrix::zeros(field_dim, field_dim);
    for n in 1..field_dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.dagger();
    let n_op = a_dag.matmul(&a);
    (a, a_dag, n_op)
}

/// Truncated coherent state `|alpha>` with Poissonian amplitudes
/// `C_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)`, renormalized after
/// truncation.
pub fn coherent_state(spec: &CoherentSpec, field_dim: usize) -> Result<QuantumState> {
    let nbar = spec.nbar();
    let mag = spec.alpha.norm();
    let phase = spec.alpha.arg();
    let mut amps = Vec::with_capacity(field_dim);
    let mut norm2 = 0.0;
    for n in 0..field_dim {
        let ln_mag = if mag > 0.0 {
            -nbar / 2.0 + n as f64 * mag.ln() - 0.5 * ln_factorial(n)
        } else if n == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        let c = C64::from_polar(ln_mag.exp(), phase * n as f64);
        norm2 += c.norm_sqr();
        amps.push(c);
    }
    let deficit = 1.0 - norm2;
    if deficit > 1e-8 {
        return Err(Error::TruncationTooSmall { deficit });
    }
    let scale = C64::from(1.0 / norm2.sqrt());
    for a in amps.iter_mut() {
        *a *= scale;
    }
    Ok(QuantumState::pure(HilbertLayout::field_only(field_dim), amps))
}

/// Displacement operator `D(beta) = exp(beta a^dag - beta* a)` computed as a
/// matrix exponential of the truncated generator. Exactly unitary on the
/// truncated space; entries near the truncation edge differ from the
/// infinite-dimensional operator.
pub fn displacement_exact(beta: C64, field_dim: usize) -> ComplexMatrix {
    let (a, a_dag, _) = ladder_operators(field_dim);
    // beta a^dag - beta* a is anti-Hermitian; i times it is Hermitian.
    let m = a_dag.scaled(beta).sub(&a.scaled(beta.conj()));
    let h = m.scaled(C64::new(0.0, 1.0));
    crate::linalg::expm_hermitian_scaled(&h, C64::new(0.0, -1.0))
        .expect("displacement generator is Hermitian by construction")
}

/// Matrix element `<m| D(beta) |n>` for real `beta` via the
/// associated-Laguerre closed form.
///
/// For `m >= n` this is `e^{-beta^2/2} beta^{m-n} sqrt(n!/m!)
/// L_n^{m-n}(beta^2)`; for `m < n` the same with `(-beta)^{n-m}` and the
/// roles of the factorials swapped. Factorial ratios run through
/// [`ln_factorial`], which keeps the evaluation stable to indices of a few
/// hundred.
pub fn displacement_laguerre(beta: f64, m: usize, n: usize) -> f64 {
    let x = beta * beta;
    let (degree, k, base) = if m >= n { (n, m - n, beta) } else { (m, n - m, -beta) };
    let lag = laguerre_assoc(degree, k, x);
    let ln_amp = -x / 2.0 + 0.5 * (ln_factorial(degree) - ln_factorial(degree + k));
    let pow = if k == 0 {
        1.0
    } else if base == 0.0 {
        return 0.0;
    } else {
        let sign = if base < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        sign * (k as f64 * base.abs().ln()).exp()
    };
    lag * ln_amp.exp() * pow
}

/// Matrix element `<m| D(alpha) |n>` for complex `alpha` (same closed form
/// with `alpha^{m-n}` and `(-alpha*)^{n-m}` phase factors).
pub fn displacement_element(alpha: C64, m: usize, n: usize) -> C64 {
    let x = alpha.norm_sqr();
    let (degree, k, base) = if m >= n { (n, m - n, alpha) } else { (m, n - m, -alpha.conj()) };
    let lag = laguerre_assoc(degree, k, x);
    let ln_amp = -x / 2.0 + 0.5 * (ln_factorial(degree) - ln_factorial(degree + k));
    let pow = if k == 0 {
        C64::ONE
    } else if base.norm() == 0.0 {
        return C64::ZERO;
    } else {
        C64::from_polar((k as f64 * base.norm().ln()).exp(), k as f64 * base.arg())
    };
    pow * (lag * ln_amp.exp())
}

/// Full displacement matrix for complex `alpha` from the closed form,
/// assembled diagonal-by-diagonal with the three-term Laguerre recurrence.
/// O(dim^2); stable up to dimensions of a few hundred.
pub fn displacement_matrix_laguerre(alpha: C64, dim: usize) -> ComplexMatrix {
    let x = alpha.norm_sqr();
    let envelope = (-x / 2.0).exp();
    let mut out = ComplexMatrix::zeros(dim, dim);
    // diagonal offset k: rows m = q + k (lower wedge, alpha^k) and the
    // mirrored upper wedge ((-alpha*)^k).
    let mut pow_lower = C64::ONE;
    let mut pow_upper = C64::ONE;
    for k in 0..dim {
        if k > 0 {
            pow_lower *= alpha;
            pow_upper *= -alpha.conj();
        }
        // prefactor sqrt(q!/(q+k)!) maintained incrementally
        let mut pref = (-0.5 * ln_factorial(k)).exp();
        let (mut l_prev, mut l_curr) = (1.0, 1.0 + k as f64 - x);
        for q in 0..dim - k {
            let lag = if q == 0 { 1.0 } else { l_curr };
            let scaled = envelope * pref * lag;
            out[(q + k, q)] = pow_lower * scaled;
            if k > 0 {
                out[(q, q + k)] = pow_upper * scaled;
            }
            if q >= 1 {
                let qq = q as f64;
                let next = ((2.0 * qq + 1.0 + k as f64 - x) * l_curr - (qq + k as f64) * l_prev)
                    / (qq + 1.0);
                l_prev = l_curr;
                l_curr = next;
            }
            pref *= ((q as f64 + 1.0) / (q as f64 + 1.0 + k as f64)).sqrt();
        }
    }
    out
}

/// Associated Laguerre polynomial `L_degree^k(x)` by the three-term
/// recurrence in the degree.
fn laguerre_assoc(degree: usize, k: usize, x: f64) -> f64 {
    if degree == 0 {
        return 1.0;
    }
    let kf = k as f64;
    let mut l_prev = 1.0;
    let mut l_curr = 1.0 + kf - x;
    for q in 1..degree {
        let qq = q as f64;
        let next = ((2.0 * qq + 1.0 + kf - x) * l_curr - (qq + kf) * l_prev) / (qq + 1.0);
        l_prev = l_curr;
        l_curr = next;
    }
    l_curr
}

fn sigma_matrices() -> [ComplexMatrix; 4] {
    // basis (|e>, |g>)
    let mut sp = ComplexMatrix::zeros(2, 2);
    sp[(0, 1)] = C64::ONE; // sigma_+ = |e><g|
    let sm = sp.dagger();
    let sz = ComplexMatrix::from_diag(&[C64::ONE, -C64::ONE]);
    let mut sx = ComplexMatrix::zeros(2, 2);
    sx[(0, 1)] = C64::ONE;
    sx[(1, 0)] = C64::ONE;
    [sp, sm, sz, sx]
}

fn embed_atomic(layout: &HilbertLayout, atom_index: usize, op: &ComplexMatrix) -> ComplexMatrix {
    let before = 1usize << atom_index;
    let after = 1usize << (layout.atom_count - atom_index - 1);
    let field_eye = ComplexMatrix::identity(layout.field_dim);
    let mid = kron(&kron(&ComplexMatrix::identity(before), op), &ComplexMatrix::identity(after));
    kron(&field_eye, &mid)
}

/// Raising, lowering, z, and x Pauli operators for one atom, embedded on the
/// composite space with identities on every other factor.
pub fn atomic_operators(
    layout: &HilbertLayout,
    atom_index: usize,
) -> Result<(ComplexMatrix, ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
    if atom_index >= layout.atom_count {
        return Err(Error::IndexOutOfRange { index: atom_index, len: layout.atom_count });
    }
    let [sp, sm, sz, sx] = sigma_matrices();
    Ok((
        embed_atomic(layout, atom_index, &sp),
        embed_atomic(layout, atom_index, &sm),
        embed_atomic(layout, atom_index, &sz),
        embed_atomic(layout, atom_index, &sx),
    ))
}

/// Collective operator `S_x = sum_i sigma_x^(i)` on the composite space.
pub fn collective_sx(layout: &HilbertLayout) -> ComplexMatrix {
    let total = layout.total_dim();
    let mut out = ComplexMatrix::zeros(total, total);
    let [.., sx] = sigma_matrices();
    for i in 0..layout.atom_count {
        out = out.add(&embed_atomic(layout, i, &sx));
    }
    out
}

/// The initial atomic states of the protocol: equal superpositions of the
/// two extremal collective-S_x eigenstates.
///
/// N = 1: `|e>`; N = 2: `(|gg> + |ee>)/sqrt(2)`;
/// N = 3: `(|eee> + |egg> + |geg> + |gge>)/2`.
pub fn protocol_atomic_state(n_atoms: usize) -> Result<QuantumState> {
    let layout = HilbertLayout::atoms_only(n_atoms)?;
    let dim = layout.atoms_dim();
    let mut amps = vec![C64::ZERO; dim];
    // index bit convention: atom i contributes bit (n_atoms-1-i); |e> = 0
    match n_atoms {
        1 => {
            amps[0] = C64::ONE; // |e>
        }
        2 => {
            let w = C64::from(1.0 / 2.0f64.sqrt());
            amps[0b00] = w; // |ee>
            amps[0b11] = w; // |gg>
        }
        3 => {
            let w = C64::from(0.5);
            amps[0b000] = w; // |eee>
            amps[0b011] = w; // |egg>
            amps[0b101] = w; // |geg>
            amps[0b110] = w; // |gge>
        }
        other => return Err(Error::UnsupportedAtomCount(other)),
    }
    Ok(QuantumState::pure(layout, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::herm_eig;

    #[test]
    fn ladder_small_and_commutator() {
        let (a, a_dag, n_op) = ladder_operators(2);
        assert!((a[(0, 1)] - C64::ONE).norm() < 1e-15);
        assert!(a[(1, 0)].norm() < 1e-15);

        let d = 9;
        let (a, a_dag2, n_op2) = ladder_operators(d);
        let comm = a.matmul(&a_dag2).sub(&a_dag2.matmul(&a));
        for i in 0..d - 1 {
            assert!((comm[(i, i)] - C64::ONE).norm() < 1e-12);
        }
        // truncation edge: 1 - d
        assert!((comm[(d - 1, d - 1)] - C64::from(1.0 - d as f64)).norm() < 1e-12);
        for i in 0..d {
            assert!((n_op2[(i, i)] - C64::from(i as f64)).norm() < 1e-12);
        }
        let _ = (a_dag, n_op);
    }

    #[test]
    fn coherent_vacuum_and_poisson() {
        let vac = coherent_state(&CoherentSpec::new(C64::ZERO), 4).unwrap();
        assert!((vac.amplitudes()[0] - C64::ONE).norm() < 1e-15);

        let spec = CoherentSpec::from_nbar(5.0);
        let st = coherent_state(&spec, 40).unwrap();
        // |C_5|^2 = 5^5 e^-5 / 5! = 0.1754673697678507
        let p5 = st.amplitudes()[5].norm_sqr();
        assert!((p5 - 0.175_467_369_767_850_7).abs() < 1e-9);
    }

    #[test]
    fn coherent_mean_photon_number() {
        let spec = CoherentSpec::new(C64::new(2.2, 0.0));
        let dim = default_field_dim(spec.nbar(), 0);
        let st = coherent_state(&spec, dim).unwrap();
        let (_, _, n_op) = ladder_operators(dim);
        let mean = st.expectation(&n_op).re;
        assert!((mean - spec.nbar()).abs() < 1e-8);
    }

    #[test]
    fn coherent_truncation_error() {
        let spec = CoherentSpec::from_nbar(25.0);
        assert!(matches!(
            coherent_state(&spec, 10),
            Err(Error::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn displacement_exact_basics() {
        let d0 = displacement_exact(C64::ZERO, 8);
        assert!(d0.sub(&ComplexMatrix::identity(8)).max_abs() < 1e-12);

        let beta = C64::new(0.7, 0.0);
        let dim = 40;
        let dp = displacement_exact(beta, dim);
        // D(beta)|0> is the coherent state |beta>
        let vac: Vec<C64> = (0..dim).map(|i| if i == 0 { C64::ONE } else { C64::ZERO }).collect();
        let disp = dp.matvec(&vac);
        let coh = coherent_state(&CoherentSpec::new(beta), dim).unwrap();
        let overlap_err: f64 = disp
            .iter()
            .zip(coh.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(overlap_err < 1e-9);

        // inverse pair
        let dm = displacement_exact(-beta, dim);
        assert!(dp.matmul(&dm).sub(&ComplexMatrix::identity(dim)).max_abs() < 1e-10);
        // unitarity
        assert!(dp.dagger().matmul(&dp).sub(&ComplexMatrix::identity(dim)).max_abs() < 1e-10);
    }

    #[test]
    fn laguerre_element_special_values() {
        let beta = 0.65f64;
        // <0|D|0> = e^{-beta^2/2}
        let want = (-beta * beta / 2.0).exp();
        assert!((displacement_laguerre(beta, 0, 0) - want).abs() < 1e-14);
        // identity displacement
        for (m, n) in [(0, 0), (3, 3), (7, 7)] {
            assert!((displacement_laguerre(0.0, m, n) - 1.0).abs() < 1e-14);
        }
        for (m, n) in [(0, 1), (5, 2), (2, 5)] {
            assert!(displacement_laguerre(0.0, m, n).abs() < 1e-14);
        }
    }

    #[test]
    fn laguerre_matches_padded_exponential() {
        // compare on the 60x60 corner of a padded exact operator, where the
        // truncated exponential has converged to the infinite-dim elements
        let dim = 60;
        let pad = 40;
        let beta = 0.65;
        let exact = displacement_exact(C64::from(beta), dim + pad);
        let mut worst = 0.0f64;
        for m in 0..dim {
            for n in 0..dim {
                let lag = displacement_laguerre(beta, m, n);
                let err = (exact[(m, n)] - C64::from(lag)).norm();
                worst = worst.max(err);
            }
        }
        assert!(worst < 1e-9, "worst deviation {worst:.3e}");
    }

    #[test]
    fn complex_element_and_matrix_builder_agree_with_exact() {
        let alpha = C64::new(0.4, -0.3);
        let dim = 30;
        let pad = 30;
        let exact = displacement_exact(alpha, dim + pad);
        let built = displacement_matrix_laguerre(alpha, dim);
        let mut worst = 0.0f64;
        for m in 0..dim {
            for n in 0..dim {
                let el = displacement_element(alpha, m, n);
                worst = worst.max((exact[(m, n)] - el).norm());
                worst = worst.max((built[(m, n)] - el).norm());
            }
        }
        assert!(worst < 1e-9, "worst deviation {worst:.3e}");
    }

    #[test]
    fn atomic_operator_actions() {
        let layout = HilbertLayout::new(2, 1).unwrap();
        let (sp, sm, sz, _) = atomic_operators(&layout, 0).unwrap();
        // on the atomic factor: sigma_- |e> = |g>, sigma_- |g> = 0
        // composite index: field 0, atom e -> 0; atom g -> 1
        let e0 = vec![C64::ONE, C64::ZERO, C64::ZERO, C64::ZERO];
        let lowered = sm.matvec(&e0);
        assert!((lowered[1] - C64::ONE).norm() < 1e-15);
        let g0 = vec![C64::ZERO, C64::ONE, C64::ZERO, C64::ZERO];
        let lowered_g = sm.matvec(&g0);
        assert!(lowered_g.iter().all(|z| z.norm() < 1e-15));
        // adjoint pair
        assert!(sp.sub(&sm.dagger()).max_abs() < 1e-15);
        // sz eigenvalues on |e>, |g>
        assert!((sz.matvec(&e0)[0] - C64::ONE).norm() < 1e-15);
        assert!((sz.matvec(&g0)[1] + C64::ONE).norm() < 1e-15);
    }

    #[test]
    fn distinct_atoms_commute() {
        let layout = HilbertLayout::new(2, 2).unwrap();
        let (_, _, sz1, _) = atomic_operators(&layout, 0).unwrap();
        let (_, _, _, sx2) = atomic_operators(&layout, 1).unwrap();
        let comm = sz1.matmul(&sx2).sub(&sx2.matmul(&sz1));
        assert!(comm.max_abs() < 1e-13);
    }

    #[test]
    fn atomic_index_out_of_range() {
        let layout = HilbertLayout::new(2, 1).unwrap();
        assert!(matches!(
            atomic_operators(&layout, 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn collective_sx_spectra() {
        for (n_atoms, expect_max) in [(1usize, 1.0f64), (2, 2.0), (3, 3.0)] {
            let layout = HilbertLayout::new(2, n_atoms).unwrap();
            let sx = collective_sx(&layout);
            let eig = herm_eig(&sx).unwrap();
            let max = eig.eigenvalues.last().unwrap();
            assert!((max - expect_max).abs() < 1e-10);
        }
        // N = 2 spectrum is (-2, 0, 0, +2) on the atomic factor
        let layout = HilbertLayout::new(2, 2).unwrap();
        let sx = collective_sx(&layout);
        let eig = herm_eig(&sx).unwrap();
        let mut vals: Vec<f64> = eig.eigenvalues.clone();
        vals.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        // each field level doubles the multiplicities; distinct values remain
        let distinct: Vec<i64> = vals.iter().map(|v| v.round() as i64).collect();
        assert!(distinct.contains(&-2) && distinct.contains(&0) && distinct.contains(&2));
    }

    #[test]
    fn protocol_states_are_sx_eigenpair_superpositions() {
        for n_atoms in 1..=3usize {
            let st = protocol_atomic_state(n_atoms).unwrap();
            let norm: f64 = st.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);

            // expand in the S_x eigenbasis of the atoms-only layout
            let layout = HilbertLayout::atoms_only(n_atoms).unwrap();
            let sx = collective_sx(&layout);
            let eig = herm_eig(&sx).unwrap();
            let dim = layout.atoms_dim();
            let mut weight_by_eigenvalue = std::collections::BTreeMap::new();
            for j in 0..dim {
                let col = eig.eigenvectors.col(j);
                let ov = crate::linalg::inner(&col, st.amplitudes());
                let w = ov.norm_sqr();
                let key = (eig.eigenvalues[j].round()) as i64;
                *weight_by_eigenvalue.entry(key).or_insert(0.0) += w;
            }
            // exactly the +-N pair, each with weight 1/2
            let n = n_atoms as i64;
            for (key, w) in &weight_by_eigenvalue {
                if *key == n || *key == -n {
                    assert!((w - 0.5).abs() < 1e-10, "N={n_atoms} weight at {key}: {w}");
                } else {
                    assert!(*w < 1e-12, "N={n_atoms} stray weight at {key}: {w}");
                }
            }
        }
    }

    #[test]
    fn unsupported_atom_count() {
        assert!(matches!(protocol_atomic_state(4), Err(Error::UnsupportedAtomCount(4))));
    }
}
