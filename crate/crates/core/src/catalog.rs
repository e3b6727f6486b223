//! Named states and seeded random instances.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::constructors::LocalUnitary;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ZERO};
use crate::state::{self, Bipartition, MultiState, PartyDims, StateKind};

/// Minimum gap between consecutive eigenvalues of random mixed states.
pub const RANDOM_SPECTRUM_GAP: f64 = 1e-4;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(Σ_k |k⟩^{⊗N}) / √d`.
pub fn ghz(parties: usize, d: usize) -> Result<MultiState> {
    if parties < 2 {
        return Err(Error::BadArgs(format!("GHZ needs at least 2 parties, got {parties}")));
    }
    let dims = PartyDims::uniform(parties, d).map_err(|e| Error::BadArgs(e.to_string()))?;
    let step = (dims.total() - 1) / (d - 1);
    let mut amps = vec![ZERO; dims.total()];
    let c = real((1.0 / d as f64).sqrt());
    for k in 0..d {
        amps[k * step] = c;
    }
    MultiState::pure(dims, amps)
}

/// `(|10…0⟩ + |01…0⟩ + … + |0…01⟩) / √N` on qubits.
pub fn w_state(parties: usize) -> Result<MultiState> {
    if parties < 2 {
        return Err(Error::BadArgs(format!("W needs at least 2 parties, got {parties}")));
    }
    let dims = PartyDims::uniform(parties, 2)?;
    let mut amps = vec![ZERO; dims.total()];
    let c = real((1.0 / parties as f64).sqrt());
    for p in 0..parties {
        amps[1 << p] = c;
    }
    MultiState::pure(dims, amps)
}

/// `|EPR⟩₁₂ ⊗ |φ⟩_{3…N}` with `φ` defaulting to all zeros.
pub fn epr_with_ancilla(parties: usize, phi: Option<&MultiState>) -> Result<MultiState> {
    if parties < 2 {
        return Err(Error::BadArgs(format!("need at least 2 parties, got {parties}")));
    }
    let epr = ghz(2, 2)?;
    let extra = parties - 2;
    match phi {
        None if extra == 0 => Ok(epr),
        None => state::tensor_product(&epr, &MultiState::basis(PartyDims::uniform(extra, 2)?, 0)?),
        Some(phi) => {
            if !phi.is_pure() {
                return Err(Error::NotPure);
            }
            if phi.dims().as_slice() != vec![2; extra].as_slice() {
                return Err(Error::DimMismatch(format!(
                    "ancilla has dims {:?}, expected {extra} qubits",
                    phi.dims().as_slice()
                )));
            }
            state::tensor_product(&epr, phi)
        }
    }
}

/// `2n + 1` qubits on a ring; X holds positions `0…n−1`, Y holds `n…2n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingGeometry {
    n: usize,
}

impl RingGeometry {
    pub const MAX_N: usize = 5;

    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > Self::MAX_N {
            return Err(Error::BadArgs(format!("ring size n must be in 1..={}, got {n}", Self::MAX_N)));
        }
        Ok(RingGeometry { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> usize {
        2 * self.n + 1
    }

    pub fn x_positions(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn y_positions(&self) -> std::ops::Range<usize> {
        self.n..self.total()
    }

    /// Steps along the shorter arc.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let diff = i.abs_diff(j);
        diff.min(self.total() - diff)
    }

    /// Ring positions of the 1-bits of `bits`, least significant bit at the
    /// lowest position of the block.
    fn occupied(&self, bits: usize, block: std::ops::Range<usize>) -> Vec<usize> {
        block.enumerate().filter(|(b, _)| bits >> b & 1 == 1).map(|(_, p)| p).collect()
    }

    fn internal(&self, pos: &[usize]) -> usize {
        let mut s = 0;
        for (a, &i) in pos.iter().enumerate() {
            for &j in &pos[a + 1..] {
                s += self.distance(i, j);
            }
        }
        s
    }

    fn cross(&self, a: &[usize], b: &[usize]) -> usize {
        a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| self.distance(i, j)).sum()
    }

    /// Natural index within a block whose first party is its most
    /// significant digit.
    fn block_index(bits: usize, width: usize) -> usize {
        (0..width).filter(|b| bits >> b & 1 == 1).map(|b| 1 << (width - 1 - b)).sum()
    }

    /// Columns `|α_k⟩`, each normalized, as a `2^{n+1} × 2^n` matrix in the
    /// natural Y index.
    pub fn alpha_vectors(&self) -> ComplexMatrix {
        let (n, ny) = (self.n, self.n + 1);
        let scale = 1.0 / ((1usize << ny) as f64).sqrt();
        let mut m = ComplexMatrix::zeros(1 << ny, 1 << n);
        for k in 0..1usize << n {
            let xk = self.occupied(k, self.x_positions());
            let dk = self.internal(&xk);
            for l in 0..1usize << ny {
                let yl = self.occupied(l, self.y_positions());
                let exponent = dk + self.internal(&yl) + self.cross(&xk, &yl);
                let sign = if exponent % 2 == 0 { 1.0 } else { -1.0 };
                m[(Self::block_index(l, ny), k)] = real(sign * scale);
            }
        }
        m
    }

    /// X|Y cut.
    pub fn cut(&self) -> Bipartition {
        Bipartition::new(&self.x_positions().collect::<Vec<_>>(), self.total()).expect("valid ring cut")
    }
}

/// `2^{-n/2} Σ_k |k⟩_X ⊗ |α_k⟩_Y` with its X|Y cut.
pub fn ring_state(n: usize) -> Result<(MultiState, Bipartition)> {
    let geo = RingGeometry::new(n)?;
    let alpha = geo.alpha_vectors();
    let dims = PartyDims::uniform(geo.total(), 2)?;
    let dy = alpha.rows();
    let c = 1.0 / ((1usize << n) as f64).sqrt();
    let mut amps = vec![ZERO; dims.total()];
    for k in 0..alpha.cols() {
        let ix = RingGeometry::block_index(k, n);
        for y in 0..dy {
            amps[ix * dy + y] = alpha[(y, k)] * c;
        }
    }
    // the α family is not orthonormal for every n, so rescale explicitly
    Ok((MultiState::pure_normalized(dims, amps)?, geo.cut()))
}

/// Eigenvalues shared by both counterexample states, in printed order.
pub const COUNTEREXAMPLE_EIGENVALUES: [f64; 4] = [0.25, 0.375, 0.3125, 0.0625];

/// Eigenvalue `i` of σ goes with printed eigenvector `PRINTED_ORDER[i]`.
pub const PRINTED_ORDER: [usize; 4] = [0, 1, 2, 3];

fn ket(terms: &[(usize, usize)]) -> Vec<Complex64> {
    let mut v = vec![ZERO; 16];
    let c = real(1.0 / (terms.len() as f64).sqrt());
    for &(x, y) in terms {
        v[x * 8 + y] = c;
    }
    v
}

fn synthesize(dims: &PartyDims, values: &[f64], vectors: &[Vec<Complex64>]) -> Result<MultiState> {
    let v = ComplexMatrix::from_columns(dims.total(), vectors);
    let gram = v.gram_residual();
    if gram > 1e-12 {
        return Err(Error::NotOrthonormal(gram));
    }
    let d = dims.total();
    let rho = ComplexMatrix::from_fn(d, d, |i, j| {
        values.iter().zip(vectors).map(|(&l, u)| u[i] * u[j].conj() * l).sum()
    });
    MultiState::mixed(dims.clone(), rho)
}

/// Four-qubit pair split as qubit 1 against qubits 2–4, with `|x, y⟩` the
/// basis state of qubit `x` and three-qubit value `y`. `assignment` pairs
/// σ's eigenvalues with its printed eigenvectors.
pub fn counterexample_pair(assignment: &[usize; 4]) -> Result<(MultiState, MultiState, Bipartition)> {
    let mut check = *assignment;
    check.sort_unstable();
    if check != [0, 1, 2, 3] {
        return Err(Error::BadArgs(format!("{assignment:?} is not a permutation of 0..4")));
    }
    let dims = PartyDims::uniform(4, 2)?;
    let rho_vecs = [
        ket(&[(0, 1), (0, 2), (0, 4), (1, 0)]),
        ket(&[(1, 7)]),
        ket(&[(0, 5)]),
        ket(&[(1, 1), (1, 2), (1, 4)]),
    ];
    let sigma_printed = [ket(&[(1, 7)]), ket(&[(0, 7), (1, 3), (0, 5)]), ket(&[(0, 0)]), ket(&[(0, 1)])];
    let sigma_vecs: Vec<Vec<Complex64>> = assignment.iter().map(|&i| sigma_printed[i].clone()).collect();
    let rho = synthesize(&dims, &COUNTEREXAMPLE_EIGENVALUES, &rho_vecs)?;
    let sigma = synthesize(&dims, &COUNTEREXAMPLE_EIGENVALUES, &sigma_vecs)?;
    Ok((rho, sigma, Bipartition::new(&[0], 4)?))
}

/// All 24 eigenvalue-to-eigenvector assignments, lexicographic.
pub fn all_assignments() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut s = p;
                    s.sort_unstable();
                    if s == [0, 1, 2, 3] {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar unitary: Gram–Schmidt on a complex Ginibre matrix.
fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    loop {
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut w: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
            for _ in 0..2 {
                for b in &cols {
                    let o = linalg::inner(b, &w);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= o * y);
                }
            }
            let norm = linalg::vec_norm(&w);
            if norm < 1e-6 {
                break;
            }
            cols.push(w.iter().map(|z| z / norm).collect());
        }
        if cols.len() == dim {
            return ComplexMatrix::from_columns(dim, &cols);
        }
    }
}

pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    haar_unitary(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Uniform point on the probability simplex whose sorted entries are
/// separated by more than [`RANDOM_SPECTRUM_GAP`] from each other and from 0.
fn separated_simplex_point(rank: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..rank).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        let mut p: Vec<f64> = e.iter().map(|x| x / s).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        let separated = p.windows(2).all(|w| w[0] - w[1] > RANDOM_SPECTRUM_GAP);
        if separated && p[rank - 1] > RANDOM_SPECTRUM_GAP {
            return p;
        }
    }
}

/// Haar pure state (`rank` must be 1), or a mixed state of the given rank
/// with a non-degenerate random spectrum and Haar eigenvectors.
pub fn random_state(dims: &PartyDims, kind: StateKind, rank: usize, seed: u64) -> Result<MultiState> {
    let total = dims.total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        StateKind::Pure => {
            if rank != 1 {
                return Err(Error::BadArgs(format!("a pure state has rank 1, got {rank}")));
            }
            let amps: Vec<Complex64> = (0..total).map(|_| gaussian(&mut rng)).collect();
            MultiState::pure_normalized(dims.clone(), amps)
        }
        StateKind::Mixed => {
            if rank == 0 || rank > total {
                return Err(Error::BadArgs(format!("rank {rank} outside 1..={total}")));
            }
            let p = if rank == 1 { vec![1.0] } else { separated_simplex_point(rank, &mut rng) };
            let u = haar_unitary(total, &mut rng);
            let vectors: Vec<Vec<Complex64>> = (0..rank).map(|k| u.col(k)).collect();
            let mut rho = ComplexMatrix::from_fn(total, total, |i, j| {
                p.iter().zip(&vectors).map(|(&l, v)| v[i] * v[j].conj() * l).sum()
            });
            for i in 0..total {
                rho[(i, i)] = real(rho[(i, i)].re);
                for j in i + 1..total {
                    rho[(j, i)] = rho[(i, j)].conj();
                }
            }
            MultiState::mixed(dims.clone(), rho)
        }
    }
}

/// One Haar unitary per party.
pub fn random_party_unitaries(dims: &PartyDims, seed: u64) -> Vec<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dims.as_slice().iter().map(|&d| haar_unitary(d, &mut rng)).collect()
}

/// Haar factors on the two grouped sides of `bp`.
pub fn random_local_unitary(dims: &PartyDims, bp: &Bipartition, seed: u64) -> Result<LocalUnitary> {
    if bp.parties() != dims.parties() {
        return Err(Error::BadPartition(format!(
            "cut covers {} parties, dims have {}",
            bp.parties(),
            dims.parties()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_x = haar_unitary(dims.dim_of(bp.x()), &mut rng);
    let u_y = haar_unitary(dims.dim_of(bp.y()), &mut rng);
    Ok(LocalUnitary::new(bp.clone(), u_x, u_y))
}
