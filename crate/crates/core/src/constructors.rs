//! Explicit local unitaries for pairs that are equivalent.
//!
//! Every constructor returns `U = U_X ⊗ U_Y` oriented so that
//! `first = U · second · U†`, which is exactly what [`verify_equivalence`]
//! measures.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::Tolerance;
use crate::linalg::{self, ComplexMatrix, Spectrum, ONE, ZERO};
use crate::schmidt::{self, RANK_CUT};
use crate::state::{self, Bipartition, Grouping, MultiState, Side, StateKind};

/// Residual bound every returned unitary must satisfy.
pub const EQUIVALENCE_RESIDUAL: f64 = 1e-8;

/// Reduced-state matrix elements below this do not fix a basis phase.
const EDGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalUnitary {
    pub bipartition: Bipartition,
    #[serde(serialize_with = "crate::io::serialize_matrix")]
    pub u_x: ComplexMatrix,
    #[serde(serialize_with = "crate::io::serialize_matrix")]
    pub u_y: ComplexMatrix,
}

impl LocalUnitary {
    pub fn new(bipartition: Bipartition, u_x: ComplexMatrix, u_y: ComplexMatrix) -> Self {
        LocalUnitary { bipartition, u_x, u_y }
    }

    /// Inverse transformation.
    pub fn adjoint(&self) -> LocalUnitary {
        LocalUnitary::new(self.bipartition.clone(), self.u_x.adjoint(), self.u_y.adjoint())
    }

    pub fn apply(&self, s: &MultiState) -> Result<MultiState> {
        state::apply_local_unitary(s, &self.bipartition, &self.u_x, &self.u_y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Construction {
    Found { lu: LocalUnitary, residual: f64 },
    NotEquivalent { reason: String, first: Spectrum, second: Spectrum },
    Inapplicable { reason: String },
}

impl Construction {
    pub fn local_unitary(&self) -> Option<&LocalUnitary> {
        match self {
            Construction::Found { lu, .. } => Some(lu),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Construction::Found { .. })
    }
}

/// `‖U σ U† − ϱ‖_max`; pure inputs are compared as density operators, so a
/// global phase does not count.
pub fn verify_equivalence(rho: &MultiState, sigma: &MultiState, lu: &LocalUnitary) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimMismatch(format!(
            "party dimensions {:?} vs {:?}",
            rho.dims().as_slice(),
            sigma.dims().as_slice()
        )));
    }
    let moved = lu.apply(sigma)?;
    if rho.is_pure() && moved.is_pure() {
        let a = rho.data().as_slice();
        let b = moved.data().as_slice();
        let mut worst = 0.0f64;
        for i in 0..a.len() {
            for j in 0..a.len() {
                worst = worst.max((a[i] * a[j].conj() - b[i] * b[j].conj()).norm());
            }
        }
        Ok(worst)
    } else {
        Ok(moved.density().max_abs_diff(&rho.density()))
    }
}

fn same_dims(a: &MultiState, b: &MultiState) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch(format!(
            "party dimensions {:?} vs {:?}",
            a.dims().as_slice(),
            b.dims().as_slice()
        )));
    }
    Ok(())
}

/// Unitary sending the first `k` columns of `from` onto those of `to`,
/// both completed to full bases.
fn basis_map(to: &ComplexMatrix, from: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    let t = linalg::complete_to_unitary(&to.leading_columns(k))?;
    let f = linalg::complete_to_unitary(&from.leading_columns(k))?;
    Ok(&t * &f.adjoint())
}

fn finish(rho: &MultiState, sigma: &MultiState, lu: LocalUnitary) -> Result<Construction> {
    let residual = verify_equivalence(rho, sigma, &lu)?;
    if residual > EQUIVALENCE_RESIDUAL {
        return Err(Error::Numerical(format!(
            "constructed local unitary leaves residual {residual:.3e} above {EQUIVALENCE_RESIDUAL:e}"
        )));
    }
    Ok(Construction::Found { lu, residual })
}

/// Pure pairs: equivalent iff the Schmidt coefficients agree. On success the
/// factors map the Schmidt bases of `phi` onto those of `psi`; degenerate
/// blocks are paired in the order the SVD returns them.
pub fn pure_lu_construct(
    psi: &MultiState,
    phi: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<Construction> {
    if !psi.is_pure() || !phi.is_pure() {
        return Err(Error::NotPure);
    }
    same_dims(psi, phi)?;
    let a = schmidt::schmidt_decompose(psi, bp)?;
    let b = schmidt::schmidt_decompose(phi, bp)?;
    if !linalg::multiset_equal(&a.coefficients, &b.coefficients, tol.spectrum) {
        return Ok(Construction::NotEquivalent {
            reason: "Schmidt coefficients differ".into(),
            first: a.coefficients,
            second: b.coefficients,
        });
    }
    let r = a.schmidt_number;
    let u_x = basis_map(&a.left_basis, &b.left_basis, r)?;
    let u_y = basis_map(&a.right_basis, &b.right_basis, r)?;
    finish(psi, phi, LocalUnitary::new(bp.clone(), u_x, u_y))
}

/// Product basis `{e_m ⊗ f_n}` fixed from the leading eigenvector's Schmidt
/// form, with phases pinned by the reduced states.
struct Frame {
    /// `d_X × d_X` unitary, columns `e_m`.
    ex: ComplexMatrix,
    /// `d_Y × d_Y` unitary, columns `f_n`.
    fy: ComplexMatrix,
    /// Every phase was fixed by a nonzero reduced-state element.
    complete: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Support(usize),
    XOnly(usize),
    YOnly(usize),
}

impl Node {
    fn x_col(self, r: usize) -> Option<usize> {
        match self {
            Node::Support(s) => Some(s),
            Node::XOnly(j) => Some(r + j),
            Node::YOnly(_) => None,
        }
    }

    fn y_col(self, r: usize) -> Option<usize> {
        match self {
            Node::Support(s) => Some(s),
            Node::YOnly(j) => Some(r + j),
            Node::XOnly(_) => None,
        }
    }
}

/// Basis of the complement of `support`: eigenvectors of the compressed
/// marginal with nonzero weight (descending), then a deterministic completion.
/// Returns the number of weighted vectors, or `Err(reason)` when those
/// weights are degenerate.
fn complement_basis(
    support: &[Vec<Complex64>],
    marginal: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<std::result::Result<(Vec<Vec<Complex64>>, usize), String>> {
    let d = marginal.rows();
    let mut proj = ComplexMatrix::identity(d);
    for u in support {
        proj = &proj - &ComplexMatrix::outer(u);
    }
    let compressed = &(&proj * marginal) * &proj;
    let eig = linalg::hermitian_eig(&compressed, 1e-9)?;
    let weights = eig.values.values();
    let weighted = weights.iter().take_while(|&&w| w > tol.gap).count().min(d - support.len());
    if weights[..weighted].windows(2).any(|w| w[0] - w[1] <= tol.gap) {
        return Ok(Err("reduced state is degenerate outside the leading Schmidt vectors".into()));
    }
    let mut cols: Vec<Vec<Complex64>> = support.to_vec();
    for k in 0..weighted {
        cols.push(eig.vectors.col(k));
    }
    let partial = ComplexMatrix::from_columns(d, &cols);
    let full = linalg::complete_to_unitary(&orthonormalized(&partial))?;
    Ok(Ok(((0..d).map(|c| full.col(c)).collect(), weighted)))
}

fn orthonormalized(m: &ComplexMatrix) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for c in 0..m.cols() {
        let mut w = m.col(c);
        for prev in &cols {
            let o = linalg::inner(prev, &w);
            for (x, p) in w.iter_mut().zip(prev) {
                *x -= o * p;
            }
        }
        let n = linalg::vec_norm(&w);
        cols.push(w.iter().map(|z| z / n).collect());
    }
    ComplexMatrix::from_columns(m.rows(), &cols)
}

fn sandwich(a: &[Complex64], m: &ComplexMatrix, b: &[Complex64]) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.len() {
        let row = m.row(i);
        let mb: Complex64 = row.iter().zip(b).map(|(x, y)| x * y).sum();
        acc += a[i].conj() * mb;
    }
    acc
}

fn reference_frame(
    lead: &ComplexMatrix,
    rho_x: &ComplexMatrix,
    rho_y: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<std::result::Result<Frame, String>> {
    let sd = schmidt::decompose_matrix(lead)?;
    let c = sd.coefficients.values();
    if c.windows(2).any(|w| w[0] - w[1] <= tol.gap) {
        return Ok(Err("leading eigenvector has degenerate Schmidt coefficients".into()));
    }
    let r = c.iter().filter(|&&v| v > RANK_CUT).count();
    let us: Vec<Vec<Complex64>> = (0..r).map(|s| sd.left_basis.col(s)).collect();
    let vs: Vec<Vec<Complex64>> = (0..r).map(|s| sd.right_basis.col(s)).collect();
    let (mut ex, wx) = match complement_basis(&us, rho_x, tol)? {
        Ok(v) => v,
        Err(reason) => return Ok(Err(reason)),
    };
    let (mut fy, wy) = match complement_basis(&vs, rho_y, tol)? {
        Ok(v) => v,
        Err(reason) => return Ok(Err(reason)),
    };

    let nodes: Vec<Node> = (0..r)
        .map(Node::Support)
        .chain((0..wx).map(Node::XOnly))
        .chain((0..wy).map(Node::YOnly))
        .collect();
    let mut known = vec![false; nodes.len()];
    known[0] = true;
    'grow: loop {
        for (bi, &b) in nodes.iter().enumerate() {
            if known[bi] {
                continue;
            }
            for (ai, &a) in nodes.iter().enumerate() {
                if !known[ai] {
                    continue;
                }
                if let (Some(ca), Some(cb)) = (a.x_col(r), b.x_col(r)) {
                    let z = sandwich(&ex[ca], rho_x, &ex[cb]);
                    if z.norm() > EDGE_EPS {
                        let phase = z / z.norm();
                        ex[cb].iter_mut().for_each(|v| *v *= phase.conj());
                        if let Node::Support(s) = b {
                            fy[s].iter_mut().for_each(|v| *v *= phase);
                        }
                        known[bi] = true;
                        continue 'grow;
                    }
                }
                if let (Some(ca), Some(cb)) = (a.y_col(r), b.y_col(r)) {
                    let z = sandwich(&fy[ca], rho_y, &fy[cb]);
                    if z.norm() > EDGE_EPS {
                        let phase = z / z.norm();
                        fy[cb].iter_mut().for_each(|v| *v *= phase.conj());
                        if let Node::Support(s) = b {
                            ex[s].iter_mut().for_each(|v| *v *= phase);
                        }
                        known[bi] = true;
                        continue 'grow;
                    }
                }
            }
        }
        break;
    }
    let dx = rho_x.rows();
    let dy = rho_y.rows();
    Ok(Ok(Frame {
        ex: ComplexMatrix::from_columns(dx, &ex),
        fy: ComplexMatrix::from_columns(dy, &fy),
        complete: known.iter().all(|&k| k),
    }))
}

/// Coefficients `⟨e_m f_n|v⟩` with the phase gauge applied: the first entry
/// (row-major) whose magnitude is within `1e-6` of the largest is made real
/// positive.
fn gauged_coefficients(frame: &Frame, grouped: &ComplexMatrix) -> ComplexMatrix {
    let coeffs = &(&frame.ex.adjoint() * grouped) * &frame.fy.conj();
    let largest = coeffs.max_abs();
    let pivot = coeffs
        .as_slice()
        .iter()
        .find(|z| z.norm() >= largest * (1.0 - 1e-6))
        .copied()
        .unwrap_or(ONE);
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
    coeffs.scale(phase)
}

/// Non-degenerate pairs: fix the product basis from the Schmidt form of the
/// leading eigenvector of each state, expand every eigenvector in it and
/// compare coefficients.
///
/// Only nonzero eigenvalues must be pairwise distinct. A coefficient mismatch
/// is `NotEquivalent` only when every basis phase was pinned by the state;
/// otherwise the basis choice itself is ambiguous and the result is
/// `Inapplicable`.
pub fn nondegenerate_lu_construct(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<Construction> {
    same_dims(rho, sigma)?;
    let g = Grouping::new(rho.dims(), bp)?;
    let er = linalg::hermitian_eig(&rho.density(), 1e-9)?;
    let es = linalg::hermitian_eig(&sigma.density(), 1e-9)?;
    if !linalg::multiset_equal(&er.values, &es.values, tol.spectrum) {
        return Ok(Construction::NotEquivalent {
            reason: "global spectra differ".into(),
            first: er.values,
            second: es.values,
        });
    }
    let nonzero = er.values.count_above(tol.gap);
    for e in [&er, &es] {
        let v = &e.values.values()[..nonzero];
        if v.windows(2).any(|w| w[0] - w[1] <= tol.gap) {
            return Ok(Construction::Inapplicable { reason: "spectrum is degenerate".into() });
        }
    }
    let grouped_vec = |e: &linalg::Eigen, k: usize| g.group_vector(&e.vectors.col(k));
    let rho_m = rho.to_mixed();
    let sigma_m = sigma.to_mixed();
    let marginals = |s: &MultiState| -> Result<(ComplexMatrix, ComplexMatrix)> {
        Ok((state::partial_trace(s, bp, Side::X)?, state::partial_trace(s, bp, Side::Y)?))
    };
    let (rx, ry) = marginals(&rho_m)?;
    let (sx, sy) = marginals(&sigma_m)?;
    let fr = match reference_frame(&grouped_vec(&er, 0), &rx, &ry, tol)? {
        Ok(f) => f,
        Err(reason) => return Ok(Construction::Inapplicable { reason }),
    };
    let fs = match reference_frame(&grouped_vec(&es, 0), &sx, &sy, tol)? {
        Ok(f) => f,
        Err(reason) => return Ok(Construction::Inapplicable { reason }),
    };

    for k in 0..nonzero {
        let alpha = gauged_coefficients(&fr, &grouped_vec(&er, k));
        let beta = gauged_coefficients(&fs, &grouped_vec(&es, k));
        if alpha.max_abs_diff(&beta) > tol.gap {
            if !(fr.complete && fs.complete) {
                return Ok(Construction::Inapplicable {
                    reason: "reference basis phases are not fixed by the reduced states".into(),
                });
            }
            let weights = |m: &ComplexMatrix| Spectrum::new(m.as_slice().iter().map(|z| z.norm_sqr()).collect());
            return Ok(Construction::NotEquivalent {
                reason: format!("coefficients of eigenvector {} differ in the reference basis", k + 1),
                first: weights(&alpha),
                second: weights(&beta),
            });
        }
    }
    let u_x = &fr.ex * &fs.ex.adjoint();
    let u_y = &fr.fy * &fs.fy.adjoint();
    let lu = LocalUnitary::new(bp.clone(), u_x, u_y);
    // keep the caller's representation for the residual
    let rho_out = if rho.kind() == StateKind::Pure && sigma.kind() == StateKind::Pure { rho } else { &rho_m };
    finish(rho_out, sigma, lu)
}
