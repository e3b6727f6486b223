//! Multi-qudit states, bipartitions and the structural operations on them.
//!
//! Basis index `i` of a state on parties `A_1 … A_N` encodes the digits
//! `(k_1, …, k_N)` with party 1 the most significant digit.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Spectrum, ZERO};

/// Validation tolerance for norms, traces, Hermiticity and positivity.
pub const STATE_TOL: f64 = 1e-9;

/// Local Hilbert-space dimensions, one per party.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PartyDims(Vec<usize>);

impl PartyDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::BadDims("at least one party is required".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::BadDims(format!("party dimension {d} is below 2")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::BadDims("total dimension overflows".into()))?;
        Ok(PartyDims(dims))
    }

    /// `n` parties of dimension `d`.
    pub fn uniform(n: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn parties(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    /// Product of the dimensions of the given parties.
    pub fn dim_of(&self, parties: &[usize]) -> usize {
        parties.iter().map(|&p| self.0[p]).product()
    }

    /// Dimensions of the listed parties, in the listed order.
    pub fn select(&self, parties: &[usize]) -> PartyDims {
        PartyDims(parties.iter().map(|&p| self.0[p]).collect())
    }

    pub fn concat(&self, other: &PartyDims) -> PartyDims {
        PartyDims(self.0.iter().chain(&other.0).copied().collect())
    }

    /// Mixed-radix digits of `index`, party 1 first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.0.len()];
        for (slot, &d) in out.iter_mut().zip(&self.0).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.0).fold(0, |acc, (&k, &d)| acc * d + k)
    }
}

impl TryFrom<Vec<usize>> for PartyDims {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        PartyDims::new(v)
    }
}

impl From<PartyDims> for Vec<usize> {
    fn from(p: PartyDims) -> Vec<usize> {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

/// Split of the party indices (0-based) into two nonempty complementary sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    x: Vec<usize>,
    y: Vec<usize>,
}

impl Bipartition {
    /// `x` is one side; the other side is its complement in `0..parties`.
    pub fn new(x: &[usize], parties: usize) -> Result<Self> {
        let mut xs = x.to_vec();
        xs.sort_unstable();
        xs.dedup();
        if xs.len() != x.len() {
            return Err(Error::BadPartition("repeated party index".into()));
        }
        if let Some(&p) = xs.iter().find(|&&p| p >= parties) {
            return Err(Error::BadPartition(format!("party {} out of range 1..={parties}", p + 1)));
        }
        let ys: Vec<usize> = (0..parties).filter(|p| !xs.contains(p)).collect();
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::BadPartition("both sides must be nonempty".into()));
        }
        Ok(Bipartition { x: xs, y: ys })
    }

    /// Both sides given explicitly; they must cover `0..parties` disjointly.
    pub fn from_sides(x: &[usize], y: &[usize], parties: usize) -> Result<Self> {
        let bp = Self::new(x, parties)?;
        let mut ys = y.to_vec();
        ys.sort_unstable();
        if ys != bp.y {
            return Err(Error::BadPartition("sides are not complementary".into()));
        }
        Ok(bp)
    }

    /// Parses `1,2|3,4` with 1-based party labels.
    pub fn parse(spec: &str, parties: usize) -> Result<Self> {
        let (left, right) = spec
            .split_once('|')
            .ok_or_else(|| Error::BadPartition(format!("expected `i,j|k,l`, got `{spec}`")))?;
        let side = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .map(|t| {
                    let t = t.trim();
                    match t.parse::<usize>() {
                        Ok(v) if v >= 1 => Ok(v - 1),
                        _ => Err(Error::BadPartition(format!("bad party label `{t}`"))),
                    }
                })
                .collect()
        };
        Self::from_sides(&side(left)?, &side(right)?, parties)
    }

    pub fn x(&self) -> &[usize] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn side(&self, side: Side) -> &[usize] {
        match side {
            Side::X => &self.x,
            Side::Y => &self.y,
        }
    }

    pub fn parties(&self) -> usize {
        self.x.len() + self.y.len()
    }

    pub fn swapped(&self) -> Bipartition {
        Bipartition { x: self.y.clone(), y: self.x.clone() }
    }

    /// All `2^{N−1} − 1` unordered bipartitions of `N` parties, ordered by
    /// the size of `x` and then lexicographically.
    pub fn enumerate(parties: usize) -> Vec<Bipartition> {
        let mut out = Vec::new();
        if parties < 2 {
            return out;
        }
        let mut seen = std::collections::HashSet::new();
        for size in 1..parties {
            for subset in combinations(parties, size) {
                let bp = Bipartition::new(&subset, parties).expect("valid subset");
                let key = if bp.x.contains(&0) { bp.x.clone() } else { bp.y.clone() };
                if seen.insert(key) {
                    out.push(bp);
                }
            }
        }
        out
    }

    /// `1,2|3` with 1-based labels.
    pub fn label(&self) -> String {
        let fmt = |v: &[usize]| v.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",");
        format!("{}|{}", fmt(&self.x), fmt(&self.y))
    }
}

impl Serialize for Bipartition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Index maps from the natural ordering to the grouped `(x, y)` ordering.
#[derive(Debug, Clone)]
pub(crate) struct Grouping {
    pub dx: usize,
    pub dy: usize,
    /// For natural index `i`: `(ix, iy)`.
    pub split: Vec<(usize, usize)>,
}

impl Grouping {
    pub fn new(dims: &PartyDims, bp: &Bipartition) -> Result<Self> {
        if bp.parties() != dims.parties() {
            return Err(Error::BadPartition(format!(
                "bipartition covers {} parties, state has {}",
                bp.parties(),
                dims.parties()
            )));
        }
        let xd = dims.select(bp.x());
        let yd = dims.select(bp.y());
        let split = (0..dims.total())
            .map(|i| {
                let digits = dims.digits(i);
                let xs: Vec<usize> = bp.x().iter().map(|&p| digits[p]).collect();
                let ys: Vec<usize> = bp.y().iter().map(|&p| digits[p]).collect();
                (xd.index_of(&xs), yd.index_of(&ys))
            })
            .collect();
        Ok(Grouping { dx: xd.total(), dy: yd.total(), split })
    }

    /// Grouped (X-major) index of natural index `i`.
    pub fn grouped(&self, i: usize) -> usize {
        let (ix, iy) = self.split[i];
        ix * self.dy + iy
    }

    pub fn group_vector(&self, v: &[Complex64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dx, self.dy);
        for (i, &z) in v.iter().enumerate() {
            let (ix, iy) = self.split[i];
            m[(ix, iy)] = z;
        }
        m
    }

    pub fn ungroup_vector(&self, m: &ComplexMatrix) -> Vec<Complex64> {
        self.split.iter().map(|&(ix, iy)| m[(ix, iy)]).collect()
    }

    pub fn group_operator(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let n = self.split.len();
        let perm: Vec<usize> = (0..n).map(|i| self.grouped(i)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(perm[i], perm[j])] = rho[(i, j)];
            }
        }
        out
    }

    pub fn ungroup_operator(&self, g: &ComplexMatrix) -> ComplexMatrix {
        let n = self.split.len();
        let perm: Vec<usize> = (0..n).map(|i| self.grouped(i)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| g[(perm[i], perm[j])])
    }
}

/// A pure amplitude column or a density operator over `dims`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiState {
    dims: PartyDims,
    kind: StateKind,
    data: ComplexMatrix,
}

impl MultiState {
    /// Validated pure state.
    pub fn pure(dims: PartyDims, amplitudes: Vec<Complex64>) -> Result<Self> {
        let data = ComplexMatrix::from_vec(amplitudes.len(), 1, amplitudes)?;
        validate(MultiState { dims, kind: StateKind::Pure, data })
    }

    /// Pure state rescaled to unit norm.
    pub fn pure_normalized(dims: PartyDims, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = linalg::vec_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::pure(dims, amplitudes)
    }

    /// Validated density operator.
    pub fn mixed(dims: PartyDims, rho: ComplexMatrix) -> Result<Self> {
        validate(MultiState { dims, kind: StateKind::Mixed, data: rho })
    }

    /// Computational basis state.
    pub fn basis(dims: PartyDims, index: usize) -> Result<Self> {
        let n = dims.total();
        if index >= n {
            return Err(Error::BadDims(format!("basis index {index} out of range {n}")));
        }
        let mut amps = vec![ZERO; n];
        amps[index] = linalg::ONE;
        Self::pure(dims, amps)
    }

    /// Unchecked constructor for data already known to be valid.
    pub(crate) fn from_parts(dims: PartyDims, kind: StateKind, data: ComplexMatrix) -> Self {
        MultiState { dims, kind, data }
    }

    pub fn dims(&self) -> &PartyDims {
        &self.dims
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn is_pure(&self) -> bool {
        self.kind == StateKind::Pure
    }

    /// Raw storage: `D × 1` amplitudes or the `D × D` operator.
    pub fn data(&self) -> &ComplexMatrix {
        &self.data
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        self.is_pure().then(|| self.data.as_slice())
    }

    /// The density operator (formed explicitly for pure states).
    pub fn density(&self) -> ComplexMatrix {
        match self.kind {
            StateKind::Pure => ComplexMatrix::outer(self.data.as_slice()),
            StateKind::Mixed => self.data.clone(),
        }
    }

    /// The same state as a density operator.
    pub fn to_mixed(&self) -> MultiState {
        MultiState { dims: self.dims.clone(), kind: StateKind::Mixed, data: self.density() }
    }

    /// Eigenvalues of the density operator; exact `(1, 0, …)` for pure states.
    pub fn spectrum(&self) -> Result<Spectrum> {
        match self.kind {
            StateKind::Pure => {
                let mut v = vec![0.0; self.dims.total()];
                v[0] = linalg::vec_norm(self.data.as_slice()).powi(2);
                Ok(Spectrum::new(v))
            }
            StateKind::Mixed => Ok(linalg::hermitian_eig(&self.data, STATE_TOL)?.values),
        }
    }

    /// Reorders parties: party `order[k]` of `self` becomes party `k`.
    pub fn permute_parties(&self, order: &[usize]) -> Result<MultiState> {
        let n = self.dims.parties();
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::BadArgs(format!("{order:?} is not a permutation of the parties")));
        }
        let new_dims = self.dims.select(order);
        // natural index in self -> index in the permuted layout
        let map: Vec<usize> = (0..self.dims.total())
            .map(|i| {
                let d = self.dims.digits(i);
                let nd: Vec<usize> = order.iter().map(|&p| d[p]).collect();
                new_dims.index_of(&nd)
            })
            .collect();
        let total = map.len();
        let data = match self.kind {
            StateKind::Pure => {
                let mut amps = vec![ZERO; total];
                for (i, &z) in self.data.as_slice().iter().enumerate() {
                    amps[map[i]] = z;
                }
                ComplexMatrix::column(amps)
            }
            StateKind::Mixed => {
                let mut m = ComplexMatrix::zeros(total, total);
                for i in 0..total {
                    for j in 0..total {
                        m[(map[i], map[j])] = self.data[(i, j)];
                    }
                }
                m
            }
        };
        Ok(MultiState { dims: new_dims, kind: self.kind, data })
    }
}

/// Checks every `MultiState` invariant and returns the state unchanged.
pub fn validate(s: MultiState) -> Result<MultiState> {
    let total = s.dims.total();
    match s.kind {
        StateKind::Pure => {
            if s.data.rows() != total || s.data.cols() != 1 {
                return Err(Error::BadDims(format!(
                    "pure state over {:?} needs {total} amplitudes, got {}x{}",
                    s.dims.as_slice(),
                    s.data.rows(),
                    s.data.cols()
                )));
            }
            let norm = linalg::vec_norm(s.data.as_slice());
            if (norm - 1.0).abs() > STATE_TOL {
                return Err(Error::NotNormalized(norm));
            }
        }
        StateKind::Mixed => {
            if s.data.rows() != total || s.data.cols() != total {
                return Err(Error::BadDims(format!(
                    "density operator over {:?} must be {total}x{total}, got {}x{}",
                    s.dims.as_slice(),
                    s.data.rows(),
                    s.data.cols()
                )));
            }
            let herm = s.data.hermiticity_residual();
            if herm > STATE_TOL {
                return Err(Error::NotHermitian(herm));
            }
            let tr = s.data.trace().re;
            if (tr - 1.0).abs() > STATE_TOL {
                return Err(Error::BadTrace(tr));
            }
            let spec = linalg::hermitian_eig(&s.data, STATE_TOL)?.values;
            let min = spec.values().last().copied().unwrap_or(0.0);
            if min < -STATE_TOL {
                return Err(Error::NotPositive(min));
            }
        }
    }
    Ok(s)
}

/// Grouped form across `bp`: the `d_X × d_Y` coefficient matrix of a pure
/// state, or the X-major `(d_X d_Y)²` operator of a mixed one.
pub fn group_as_bipartite(s: &MultiState, bp: &Bipartition) -> Result<ComplexMatrix> {
    let g = Grouping::new(&s.dims, bp)?;
    Ok(match s.kind {
        StateKind::Pure => g.group_vector(s.data.as_slice()),
        StateKind::Mixed => g.group_operator(&s.data),
    })
}

/// Inverse of [`group_as_bipartite`].
pub fn ungroup_from_bipartite(
    grouped: &ComplexMatrix,
    dims: &PartyDims,
    kind: StateKind,
    bp: &Bipartition,
) -> Result<ComplexMatrix> {
    let g = Grouping::new(dims, bp)?;
    let expected = match kind {
        StateKind::Pure => (g.dx, g.dy),
        StateKind::Mixed => (g.dx * g.dy, g.dx * g.dy),
    };
    if (grouped.rows(), grouped.cols()) != expected {
        return Err(Error::DimMismatch(format!(
            "grouped matrix is {}x{}, expected {}x{}",
            grouped.rows(),
            grouped.cols(),
            expected.0,
            expected.1
        )));
    }
    Ok(match kind {
        StateKind::Pure => ComplexMatrix::column(g.ungroup_vector(grouped)),
        StateKind::Mixed => g.ungroup_operator(grouped),
    })
}

/// `Tr` over the complement of `keep`; the result acts on the kept side with
/// that side's parties in increasing order.
pub fn partial_trace(s: &MultiState, bp: &Bipartition, keep: Side) -> Result<ComplexMatrix> {
    let g = Grouping::new(&s.dims, bp)?;
    Ok(match s.kind {
        StateKind::Pure => {
            let m = g.group_vector(s.data.as_slice());
            match keep {
                Side::X => &m * &m.adjoint(),
                Side::Y => &m.transpose() * &m.conj(),
            }
        }
        StateKind::Mixed => {
            let (dx, dy) = (g.dx, g.dy);
            let grouped = g.group_operator(&s.data);
            match keep {
                Side::X => ComplexMatrix::from_fn(dx, dx, |i, j| {
                    (0..dy).map(|y| grouped[(i * dy + y, j * dy + y)]).sum()
                }),
                Side::Y => ComplexMatrix::from_fn(dy, dy, |i, j| {
                    (0..dx).map(|x| grouped[(x * dy + i, x * dy + j)]).sum()
                }),
            }
        }
    })
}

/// Reduced (mixed) state on the given parties, kept in increasing order.
pub fn reduce(s: &MultiState, parties: &[usize]) -> Result<MultiState> {
    let n = s.dims.parties();
    let mut keep = parties.to_vec();
    keep.sort_unstable();
    if keep.len() == n {
        return Ok(s.to_mixed());
    }
    let bp = Bipartition::new(&keep, n)?;
    let rho = partial_trace(s, &bp, Side::X)?;
    Ok(MultiState::from_parts(s.dims.select(&keep), StateKind::Mixed, rho))
}

/// Partial transpose of the chosen side, returned in the natural ordering.
/// Pure inputs are expanded to their density operator first.
pub fn partial_transpose(s: &MultiState, bp: &Bipartition, side: Side) -> Result<ComplexMatrix> {
    let g = Grouping::new(&s.dims, bp)?;
    let grouped = g.group_operator(&s.density());
    let t = partial_transpose_grouped(&grouped, g.dx, g.dy, side);
    Ok(g.ungroup_operator(&t))
}

/// Partial transpose of an X-major `(dx·dy)²` operator.
pub fn partial_transpose_grouped(m: &ComplexMatrix, dx: usize, dy: usize, side: Side) -> ComplexMatrix {
    let n = dx * dy;
    assert_eq!((m.rows(), m.cols()), (n, n), "operator does not match dx*dy");
    ComplexMatrix::from_fn(n, n, |r, c| {
        let (rx, ry) = (r / dy, r % dy);
        let (cx, cy) = (c / dy, c % dy);
        match side {
            Side::Y => m[(rx * dy + cy, cx * dy + ry)],
            Side::X => m[(cx * dy + ry, rx * dy + cy)],
        }
    })
}

/// `a ⊗ b` with `a`'s parties first.
pub fn tensor_product(a: &MultiState, b: &MultiState) -> Result<MultiState> {
    if a.kind != b.kind {
        return Err(Error::KindMismatch);
    }
    Ok(MultiState { dims: a.dims.concat(&b.dims), kind: a.kind, data: a.data.kron(&b.data) })
}

/// `(U_X ⊗ U_Y) s (U_X ⊗ U_Y)†` with the factors acting on the grouped sides.
pub fn apply_local_unitary(
    s: &MultiState,
    bp: &Bipartition,
    u_x: &ComplexMatrix,
    u_y: &ComplexMatrix,
) -> Result<MultiState> {
    let g = Grouping::new(&s.dims, bp)?;
    check_factor(u_x, g.dx, "U_X")?;
    check_factor(u_y, g.dy, "U_Y")?;
    let data = match s.kind {
        StateKind::Pure => {
            let m = g.group_vector(s.data.as_slice());
            let out = &(u_x * &m) * &u_y.transpose();
            ComplexMatrix::column(g.ungroup_vector(&out))
        }
        StateKind::Mixed => {
            let w = u_x.kron(u_y);
            let grouped = g.group_operator(&s.data);
            let out = &(&w * &grouped) * &w.adjoint();
            g.ungroup_operator(&out)
        }
    };
    Ok(MultiState { dims: s.dims.clone(), kind: s.kind, data })
}

/// Applies one unitary per party.
pub fn apply_per_party(s: &MultiState, factors: &[ComplexMatrix]) -> Result<MultiState> {
    let n = s.dims.parties();
    if factors.len() != n {
        return Err(Error::DimMismatch(format!("{} factors for {n} parties", factors.len())));
    }
    if n == 1 {
        check_factor(&factors[0], s.dims.total(), "U")?;
        let u = &factors[0];
        let data = match s.kind {
            StateKind::Pure => u * &s.data,
            StateKind::Mixed => &(u * &s.data) * &u.adjoint(),
        };
        return Ok(MultiState { dims: s.dims.clone(), kind: s.kind, data });
    }
    let bp = Bipartition::new(&[0], n)?;
    let u_y = factors[1..].iter().skip(1).fold(factors[1].clone(), |acc, f| acc.kron(f));
    apply_local_unitary(s, &bp, &factors[0], &u_y)
}

pub(crate) fn check_factor(u: &ComplexMatrix, dim: usize, name: &str) -> Result<()> {
    if u.rows() != dim || u.cols() != dim {
        return Err(Error::DimMismatch(format!(
            "{name} is {}x{}, side dimension is {dim}",
            u.rows(),
            u.cols()
        )));
    }
    let r = u.unitarity_residual();
    if r > STATE_TOL {
        return Err(Error::NotUnitary(r));
    }
    Ok(())
}
