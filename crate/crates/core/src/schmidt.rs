//! Schmidt decomposition of pure states across a bipartition.

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Spectrum};
use crate::state::{self, Bipartition, MultiState};

/// Coefficients above this count toward the Schmidt number.
pub const RANK_CUT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// `min(d_X, d_Y)` nonnegative values, descending.
    pub coefficients: Spectrum,
    /// Column `k` is `|k⟩_X`.
    pub left_basis: ComplexMatrix,
    /// Column `k` is `|k⟩_Y`.
    pub right_basis: ComplexMatrix,
    pub schmidt_number: usize,
}

impl SchmidtDecomposition {
    /// Squared coefficients, i.e. the reduced-state eigenvalues.
    pub fn probabilities(&self) -> Spectrum {
        Spectrum::new(self.coefficients.values().iter().map(|c| c * c).collect())
    }

    /// `Σ_k c_k |k⟩_X ⊗ |k⟩_Y` as a `d_X × d_Y` coefficient matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let (dx, dy) = (self.left_basis.rows(), self.right_basis.rows());
        let mut m = ComplexMatrix::zeros(dx, dy);
        for (k, &c) in self.coefficients.values().iter().enumerate() {
            for i in 0..dx {
                let a = self.left_basis[(i, k)] * c;
                for j in 0..dy {
                    m[(i, j)] += a * self.right_basis[(j, k)];
                }
            }
        }
        m
    }
}

pub fn schmidt_decompose(s: &MultiState, bp: &Bipartition) -> Result<SchmidtDecomposition> {
    if !s.is_pure() {
        return Err(Error::NotPure);
    }
    let m = state::group_as_bipartite(s, bp)?;
    decompose_matrix(&m)
}

/// Schmidt form of a `d_X × d_Y` coefficient matrix.
pub(crate) fn decompose_matrix(m: &ComplexMatrix) -> Result<SchmidtDecomposition> {
    let svd = linalg::svd(m)?;
    // m = U Σ V†, so |k⟩_Y carries the conjugate of V's column
    let right_basis = svd.v.conj();
    let schmidt_number = svd.singular_values.count_above(RANK_CUT);
    Ok(SchmidtDecomposition {
        coefficients: svd.singular_values,
        left_basis: svd.u,
        right_basis,
        schmidt_number,
    })
}

/// `−Σ p log₂ p` over the squared coefficients, in bits.
pub fn entanglement_entropy(sd: &SchmidtDecomposition) -> f64 {
    shannon_bits(sd.coefficients.values().iter().map(|c| c * c))
}

pub(crate) fn shannon_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    h.max(0.0)
}

/// Entropy of a probability vector in bits.
pub fn entropy_of(probs: &[f64]) -> f64 {
    shannon_bits(probs.iter().copied())
}
