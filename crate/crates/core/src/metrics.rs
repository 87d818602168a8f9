//! State-comparison and characterization functionals: Uhlmann fidelity,
//! trace distance, purity, photon-number distributions, displaced-parity
//! Wigner functions, and the analytic displaced density-matrix elements of
//! the single-atom protocol.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{
    coherent_state, displacement_matrix_laguerre, displacement_laguerre, CoherentSpec,
    QuantumState, StateRepr,
};
use crate::linalg::{herm_eig, inner, sqrtm_psd, trace_norm};
use crate::C64;

/// Uhlmann fidelity `[Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2`.
///
/// Reduces to `|<psi|phi>|^2` for two pure states and to `<phi|rho|phi>`
/// when one argument is pure.
pub fn fidelity(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let f = match (rho.repr(), sigma.repr()) {
        (StateRepr::Pure(a), StateRepr::Pure(b)) => inner(a, b).norm_sqr(),
        (StateRepr::Pure(a), StateRepr::Density(m)) | (StateRepr::Density(m), StateRepr::Pure(a)) => {
            let ma = m.matvec(a);
            inner(a, &ma).re
        }
        (StateRepr::Density(a), StateRepr::Density(b)) => {
            let r = sqrtm_psd(a)?;
            let inner_m = r.matmul(b).matmul(&r);
            let s = sqrtm_psd(&inner_m)?;
            let t = s.trace().re;
            t * t
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Trace distance `(1/2) Tr |rho - sigma|`.
pub fn trace_distance(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let diff = rho.to_density().sub(&sigma.to_density());
    Ok(0.5 * trace_norm(&diff)?)
}

/// Purity `Tr rho^2`; pure states return 1 by definition.
pub fn purity(state: &QuantumState) -> f64 {
    match state.repr() {
        StateRepr::Pure(_) => 1.0,
        StateRepr::Density(rho) => rho.matmul(rho).trace().re,
    }
}

/// Diagonal of a field-only state in the Fock basis, `p_n = <n|rho|n>`.
pub fn photon_distribution(state: &QuantumState) -> Result<Vec<f64>> {
    if state.layout().atom_count() != 0 {
        return Err(Error::DimensionMismatch {
            expected: state.layout().field_dim(),
            got: state.dim(),
        });
    }
    Ok(match state.repr() {
        StateRepr::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect(),
        StateRepr::Density(rho) => (0..rho.rows()).map(|n| rho[(n, n)].re).collect(),
    })
}

/// Wigner function samples over a rectangular `(x, p)` grid.
///
/// Convention: `W(x, p) = (1/pi) Tr[rho D(alpha) Pi D(alpha)^dag]` with
/// `alpha = (x + i p)/sqrt(2)` and parity `Pi`, so the vacuum peaks at
/// `1/pi`, `|W| <= 1/pi`, and `integral W dx dp = 1`.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[i][j] = W(x_axis[i], p_axis[j])`
    pub values: Vec<Vec<f64>>,
    /// Trapezoid estimate of the full grid integral; deviates from 1 on
    /// grids that are too coarse or too small for the state.
    pub integral: f64,
}

/// Evaluate the Wigner function of a field-only state on the given axes.
///
/// Each pixel conjugates the state's eigenvectors by a displacement built
/// from the associated-Laguerre closed form and sums parity-weighted
/// populations; pixels are evaluated in parallel.
pub fn wigner(state: &QuantumState, x_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    if state.layout().atom_count() != 0 {
        return Err(Error::DimensionMismatch {
            expected: state.layout().field_dim(),
            got: state.dim(),
        });
    }
    let dim = state.layout().field_dim();
    // pad the working dimension so displaced support at the far grid
    // corners stays inside the truncation
    let amax2 = x_axis
        .iter()
        .map(|x| x * x)
        .fold(0.0f64, f64::max)
        .max(p_axis.iter().map(|p| p * p).fold(0.0, f64::max));
    let corner = amax2; // |alpha|^2 = (x^2 + p^2)/2 <= max(x^2, p^2)
    let dim_work = dim.max((corner + 7.0 * corner.sqrt()).ceil() as usize + 10);
    // spectral form of rho: parity expectation needs only the significant
    // eigenvectors (rank <= 2^N for protocol states)
    let components: Vec<(f64, Vec<C64>)> = match state.repr() {
        StateRepr::Pure(v) => vec![(1.0, v.clone())],
        StateRepr::Density(rho) => {
            let eig = herm_eig(rho)?;
            let mut comps = Vec::new();
            for (j, &w) in eig.eigenvalues.iter().enumerate() {
                if w > 1e-13 {
                    comps.push((w, eig.eigenvectors.col(j)));
                }
            }
            comps
        }
    };

    let nx = x_axis.len();
    let np = p_axis.len();
    let flat: Vec<f64> = (0..nx * np)
        .into_par_iter()
        .map(|idx| {
            let i = idx / np;
            let j = idx % np;
            let alpha = C64::new(x_axis[i], p_axis[j]) / 2.0f64.sqrt();
            let d_neg = displacement_matrix_laguerre(-alpha, dim_work);
            let mut acc = 0.0;
            for (w, psi) in &components {
                // phi = D(-alpha) psi, with psi supported on the first
                // `dim` entries
                let mut parity = 0.0;
                for m in 0..dim_work {
                    let mut amp = C64::ZERO;
                    for (n, &pn) in psi.iter().enumerate() {
                        amp += d_neg[(m, n)] * pn;
                    }
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    parity += sign * amp.norm_sqr();
                }
                acc += w * parity;
            }
            acc / std::f64::consts::PI
        })
        .collect();

    let values: Vec<Vec<f64>> = (0..nx).map(|i| flat[i * np..(i + 1) * np].to_vec()).collect();
    let integral = trapezoid_2d(x_axis, p_axis, &values);
    Ok(WignerGrid { x_axis: x_axis.to_vec(), p_axis: p_axis.to_vec(), values, integral })
}

fn trapezoid_2d(x: &[f64], p: &[f64], v: &[Vec<f64>]) -> f64 {
    let wx = trapezoid_weights(x);
    let wp = trapezoid_weights(p);
    let mut acc = 0.0;
    for (i, row) in v.iter().enumerate() {
        let mut row_acc = 0.0;
        for (j, val) in row.iter().enumerate() {
            row_acc += wp[j] * val;
        }
        acc += wx[i] * row_acc;
    }
    acc
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    if n < 2 {
        return vec![1.0; n];
    }
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = axis[i + 1] - axis[i];
        w[i] += h / 2.0;
        w[i + 1] += h / 2.0;
    }
    w
}

/// Element `<m| rho_f(beta, t) |l>` of the displaced field density matrix
/// for the single-atom protocol (initial `|e> (x) |alpha>`), evaluated by
/// the analytic double sum over Fock indices with displacement elements
/// from the associated-Laguerre closed form.
///
/// The sum is truncated where the Poisson envelope drops below 1e-16 of its
/// peak.
pub fn f_matrix_element(
    spec: &CoherentSpec,
    beta: f64,
    t: f64,
    m: usize,
    l: usize,
) -> Result<C64> {
    let nbar = spec.nbar();
    let dim = crate::hilbert::default_field_dim(nbar, m.max(l));
    let coh = coherent_state(spec, dim)?;
    let c = coh.amplitudes();
    let peak = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let window: Vec<usize> = (0..dim).filter(|&n| c[n].norm() > 1e-16 * peak).collect();

    let alpha = spec.alpha;
    let cos_t: Vec<f64> = (0..dim).map(|n| (t * ((n + 1) as f64).sqrt()).cos()).collect();
    let sin_t: Vec<f64> = (0..dim).map(|n| (t * (n as f64).sqrt()).sin()).collect();
    let d_m: Vec<f64> = (0..dim).map(|n| displacement_laguerre(beta, m, n)).collect();
    let d_l: Vec<f64> = (0..dim).map(|n| displacement_laguerre(beta, l, n)).collect();

    let mut acc = C64::ZERO;
    for &n in &window {
        let cn = c[n];
        let dmn = d_m[n];
        for &np in &window {
            let weight = cn * c[np].conj() * (dmn * d_l[np]);
            if weight == C64::ZERO {
                continue;
            }
            let cos_term = cos_t[n] * cos_t[np];
            let sin_term = if n == 0 || np == 0 {
                0.0
            } else {
                ((n as f64) * (np as f64)).sqrt() / alpha.norm_sqr() * sin_t[n] * sin_t[np]
            };
            acc += weight * (cos_term + sin_term);
        }
    }
    Ok(acc)
}

/// Closed-form field vectors of the displaced single-atom state:
/// `u = D(beta) (C_n cos(t sqrt(n+1)))` (atom measured `|e>`) and
/// `v = D(beta) (-i C_n (sqrt(n)/alpha) sin(t sqrt(n)))` (atom `|g>`), so the
/// reduced field density matrix is `u u^dag + v v^dag`.
///
/// This is the fast evaluation route behind the analytic F-matrix: the
/// element `<m|rho_f|l>` equals `u_m conj(u_l) + v_m conj(v_l)`.
pub fn displaced_closed_form_vectors(
    spec: &CoherentSpec,
    beta: f64,
    t: f64,
    dim: usize,
) -> Result<(Vec<C64>, Vec<C64>)> {
    let coh = coherent_state(spec, dim)?;
    let c = coh.amplitudes();
    let alpha = spec.alpha;
    let mut ue = vec![C64::ZERO; dim];
    let mut vg = vec![C64::ZERO; dim];
    for n in 0..dim {
        let nf = n as f64;
        ue[n] = c[n] * (t * (nf + 1.0).sqrt()).cos();
        if n > 0 {
            vg[n] = -C64::new(0.0, 1.0) * c[n] * (nf.sqrt() / alpha) * (t * nf.sqrt()).sin();
        }
    }
    let d = displacement_matrix_laguerre(C64::from(beta), dim);
    Ok((d.matvec(&ue), d.matvec(&vg)))
}
