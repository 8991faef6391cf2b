use nalgebra::{DMatrix, SymmetricEigen};

use super::amplifier::{build_p, hermiticity_deviation, AmplifierInstance};
use crate::error::{Error, Result};
use crate::statevector::{StateVector, C64};

/// Residual tolerance for eigenpairs, reconstruction and Gram checks.
pub const EIGEN_TOLERANCE: f64 = 1e-8;
/// Hermiticity and spectrum-range tolerance.
pub const SPECTRUM_TOLERANCE: f64 = 1e-10;
/// A branch whose weight `p` or `1 − p` is below this is left undefined.
pub const DEGENERATE_WEIGHT: f64 = 1e-9;

/// Eigenbasis of `P` and the induced flag-0 / flag-1 branches
/// `U(ψ_i ⊗ |0⟩) = √p_i φ1_i + √(1 − p_i) φ0_i`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Descending. Raw solver output, not clamped to `[0, 1]`.
    pub eigenvalues: Vec<f64>,
    /// On the input layout.
    pub eigenvectors: Vec<StateVector>,
    /// On the full layout; `None` where `1 − p_i` is degenerate.
    pub phi0: Vec<Option<StateVector>>,
    /// On the full layout; `None` where `p_i` is degenerate.
    pub phi1: Vec<Option<StateVector>>,
    /// `max_i ‖P ψ_i − p_i ψ_i‖`.
    pub eigen_residual: f64,
    /// `max_i ‖U(ψ_i ⊗ |0⟩) − √p_i φ1_i − √(1 − p_i) φ0_i‖`.
    pub reconstruction_residual: f64,
    /// `max |G − I|` over all defined branches.
    pub gram_residual: f64,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.phi0[i].is_none() || self.phi1[i].is_none()
    }

    /// Every eigenvalue in `[−tol, 1 + tol]`.
    pub fn spectrum_in_unit_interval(&self, tol: f64) -> bool {
        self.eigenvalues
            .iter()
            .all(|&p| p >= -tol && p <= 1.0 + tol)
    }

    /// Squared overlaps `|⟨ψ_i|s⟩|²` of an input-space state with each eigenvector.
    pub fn weights(&self, s: &StateVector) -> Result<Vec<f64>> {
        self.eigenvectors
            .iter()
            .map(|v| Ok(v.inner(s)?.norm_sqr()))
            .collect()
    }
}

/// `build_p` followed by [`eigen_decompose`].
pub fn spectral_decomposition(inst: &AmplifierInstance) -> Result<SpectralDecomposition> {
    eigen_decompose(inst, &build_p(inst)?)
}

/// Hermitian eigendecomposition of `p` with branch extraction through `inst`.
///
/// Eigenvectors are sorted by descending eigenvalue, ties by the index of
/// the first nonzero amplitude, and rephased so that amplitude is real
/// positive.
pub fn eigen_decompose(inst: &AmplifierInstance, p: &DMatrix<C64>) -> Result<SpectralDecomposition> {
    let dim_h = inst.input_layout().dim();
    if p.nrows() != dim_h || p.ncols() != dim_h {
        return Err(Error::LayoutMismatch(format!(
            "P is {}×{} but the input space has dimension {dim_h}",
            p.nrows(),
            p.ncols()
        )));
    }
    let herm = hermiticity_deviation(p);
    if herm > SPECTRUM_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "P deviates from Hermitian by {herm:e}"
        )));
    }

    let eig = SymmetricEigen::new(p.clone());
    let mut pairs: Vec<(f64, Vec<C64>)> = (0..dim_h)
        .map(|i| {
            let v: Vec<C64> = eig.eigenvectors.column(i).iter().copied().collect();
            (eig.eigenvalues[i], fix_phase(v))
        })
        .collect();
    pairs.sort_by(|a, b| {
        let ka = (a.0 * 1e9).round();
        let kb = (b.0 * 1e9).round();
        kb.total_cmp(&ka)
            .then_with(|| first_nonzero(&a.1).cmp(&first_nonzero(&b.1)))
    });

    let mut eigen_residual: f64 = 0.0;
    let mut reconstruction_residual: f64 = 0.0;
    let mut eigenvalues = Vec::with_capacity(dim_h);
    let mut eigenvectors = Vec::with_capacity(dim_h);
    let mut phi0 = Vec::with_capacity(dim_h);
    let mut phi1 = Vec::with_capacity(dim_h);
    for (lambda, v) in pairs {
        let col = nalgebra::DVector::from_column_slice(&v);
        let r = (p * &col - &col * C64::new(lambda, 0.0)).norm();
        eigen_residual = eigen_residual.max(r);

        let psi = StateVector::normalized(inst.input_layout().clone(), v)?;
        let full = inst.evolve(&psi)?;
        let (inside, outside) = inst.flag().split(&full)?;
        let pc = lambda.clamp(0.0, 1.0);
        let b1 = branch(inst, inside, pc)?;
        let b0 = branch(inst, outside, 1.0 - pc)?;

        // recompose; an undefined branch contributes nothing, so its
        // residual weight shows up here
        let mut rec = vec![C64::new(0.0, 0.0); full.amps().len()];
        for (b, w) in [(&b1, pc), (&b0, 1.0 - pc)] {
            if let Some(b) = b {
                let s = w.sqrt();
                rec.iter_mut().zip(b.amps()).for_each(|(r, a)| *r += a * s);
            }
        }
        let err = full
            .amps()
            .iter()
            .zip(&rec)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        reconstruction_residual = reconstruction_residual.max(err);

        eigenvalues.push(lambda);
        eigenvectors.push(psi);
        phi0.push(b0);
        phi1.push(b1);
    }
    if eigen_residual > EIGEN_TOLERANCE {
        return Err(Error::IllConditioned {
            residual: eigen_residual,
        });
    }

    let defined: Vec<&StateVector> = phi0.iter().chain(&phi1).flatten().collect();
    let gram_residual = gram_residual(&defined);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        phi0,
        phi1,
        eigen_residual,
        reconstruction_residual,
        gram_residual,
    })
}

/// Scales an unnormalized branch by `1/√weight`; `None` for degenerate weight.
fn branch(inst: &AmplifierInstance, amps: Vec<C64>, weight: f64) -> Result<Option<StateVector>> {
    if weight < DEGENERATE_WEIGHT {
        return Ok(None);
    }
    let s = 1.0 / weight.sqrt();
    let amps = amps.into_iter().map(|a| a * s).collect();
    // deliberately not renormalized: the Gram check measures ‖φ‖ − 1
    Ok(Some(StateVector::from_raw(inst.layout().clone(), amps)))
}

fn first_nonzero(v: &[C64]) -> usize {
    v.iter().position(|a| a.norm() > 1e-9).unwrap_or(v.len())
}

fn fix_phase(mut v: Vec<C64>) -> Vec<C64> {
    if let Some(i) = v.iter().position(|a| a.norm() > 1e-9) {
        let ph = v[i].conj() / v[i].norm();
        v.iter_mut().for_each(|a| *a *= ph);
    }
    v
}

/// `max |⟨a|b⟩ − δ_ab|` over a list of vectors.
pub fn gram_residual(states: &[&StateVector]) -> f64 {
    let k = states.len();
    if k == 0 {
        return 0.0;
    }
    let dim = states[0].amps().len();
    let m = DMatrix::from_fn(dim, k, |i, j| states[j].amp(i));
    let g = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}
