//! Can the entanglement across a cut be carried by independent qudit pairs?
//!
//! A pure state on `n + m` qudits of common dimension `d` is pairable across
//! `X|Y` (`|X| = n ≤ m = |Y|`) when its `dⁿ` squared Schmidt coefficients are
//! the products `a_{1,k₁} ··· a_{n,kₙ}` of `n` probability vectors. The pair
//! state then shares `Σ_k √a_{j,k} |k⟩|k⟩` between `X_j` and `Y_j`.

use serde::Serialize;

use crate::constructors::{self, Construction, LocalUnitary};
use crate::error::{Error, Result};
use crate::invariants::Tolerance;
use crate::linalg::{self, Spectrum, ZERO};
use crate::schmidt;
use crate::state::{Bipartition, MultiState, PartyDims};

/// Largest grid `dⁿ` the exact search accepts by default.
pub const DEFAULT_BUDGET: usize = 256;

/// Tolerance on reassembled products.
pub const PRODUCT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairabilityProblem {
    q: Spectrum,
    d: usize,
    n: usize,
    m: usize,
}

impl PairabilityProblem {
    pub fn new(q: Vec<f64>, d: usize, n: usize, m: usize) -> Result<Self> {
        if d < 2 || n == 0 {
            return Err(Error::BadArgs(format!("need d >= 2 and n >= 1, got d = {d}, n = {n}")));
        }
        if n > m {
            return Err(Error::BadPartition(format!("X side has {n} qudits but Y side only {m}")));
        }
        let cells = grid_size(d, n);
        if cells != Some(q.len()) {
            return Err(Error::BadArgs(format!("expected d^n entries, got {}", q.len())));
        }
        if let Some(&bad) = q.iter().find(|&&x| !x.is_finite() || x < -linalg::DEFAULT_TOL) {
            return Err(Error::BadArgs(format!("entry {bad} is not a probability")));
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > linalg::DEFAULT_TOL {
            return Err(Error::BadArgs(format!("entries sum to {sum}, expected 1")));
        }
        Ok(PairabilityProblem { q: Spectrum::new(q.into_iter().map(|x| x.max(0.0)).collect()), d, n, m })
    }

    pub fn q(&self) -> &Spectrum {
        &self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

fn grid_size(d: usize, n: usize) -> Option<usize> {
    d.checked_pow(u32::try_from(n).ok()?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSolution {
    /// `a[j]` is the Schmidt spectrum of pair `j`, descending.
    pub a: Vec<Vec<f64>>,
    /// `assignment[r]` is the tuple `(k₁, …, kₙ)` carrying the `r`-th largest `q`.
    pub assignment: Vec<Vec<usize>>,
}

impl PairSolution {
    pub fn d(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn product(&self, tuple: &[usize]) -> f64 {
        tuple.iter().zip(&self.a).map(|(&k, a)| a[k]).product()
    }

    /// Entanglement entropy of each pair, in bits.
    pub fn pair_entropies(&self) -> Vec<f64> {
        self.a.iter().map(|a| schmidt::entropy_of(a)).collect()
    }

    /// `Σ_j S(a_j)`.
    pub fn entropy(&self) -> f64 {
        self.pair_entropies().iter().sum()
    }

    /// Pairs whose spectrum is uniform within `tol`, i.e. maximally entangled.
    pub fn maximally_entangled_pairs(&self, tol: f64) -> usize {
        self.a.iter().filter(|a| a.iter().all(|&x| (x - 1.0 / a.len() as f64).abs() <= tol)).count()
    }

    /// Pairs carrying any entanglement.
    pub fn entangled_pairs(&self, tol: f64) -> usize {
        self.a.iter().filter(|a| a[0] < 1.0 - tol).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Factorization {
    Feasible(PairSolution),
    /// The search tree was exhausted after visiting `explored` nodes.
    Infeasible { explored: usize },
}

pub fn product_factorize(p: &PairabilityProblem, tol: f64) -> Result<Factorization> {
    product_factorize_with_budget(p, tol, DEFAULT_BUDGET)
}

/// Exact backtracking over the marginal values.
///
/// Work in ratios `r_{j,k} = a_{j,k} / a_{j,0}` with each marginal sorted
/// descending, so `q_max = Π_j a_{j,0}` and every `q / q_max` is a product of
/// ratios. Once the leading ratios of every factor are known, the largest
/// product not yet generated is the next ratio of some factor; that value
/// must be the largest remaining `q`, which leaves only the choice of factor.
pub fn product_factorize_with_budget(p: &PairabilityProblem, tol: f64, budget: usize) -> Result<Factorization> {
    let size = p.q.len();
    if size > budget {
        return Err(Error::TooLarge { size, budget });
    }
    let q0 = p.q.values()[0];
    let rtol = tol / q0;
    // the all-zero tuple accounts for the leading value
    let remaining: Vec<f64> = p.q.values()[1..].iter().map(|&x| x / q0).collect();
    let mut search = Search { d: p.d, rtol, explored: 0 };
    let mut ratios = vec![vec![1.0]; p.n];
    if !search.extend(&mut ratios, remaining) {
        return Ok(Factorization::Infeasible { explored: search.explored });
    }
    for r in &mut ratios {
        r.resize(p.d, 0.0);
    }
    let a: Vec<Vec<f64>> = ratios
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        })
        .collect();
    let assignment = assign(&a, &p.q)?;
    Ok(Factorization::Feasible(PairSolution { a, assignment }))
}

struct Search {
    d: usize,
    rtol: f64,
    explored: usize,
}

impl Search {
    /// `remaining` is sorted descending and holds the ratios not yet
    /// produced by the known prefixes.
    fn extend(&mut self, ratios: &mut Vec<Vec<f64>>, remaining: Vec<f64>) -> bool {
        self.explored += 1;
        let Some(&top) = remaining.first() else { return true };
        if top <= self.rtol {
            return true;
        }
        for j in 0..ratios.len() {
            let len = ratios[j].len();
            if len == self.d || top > ratios[j][len - 1] + self.rtol {
                continue;
            }
            if ratios[..j].iter().any(|r| r == &ratios[j]) {
                continue;
            }
            let Some(rest) = self.consume(ratios, j, top, &remaining) else { continue };
            ratios[j].push(top);
            if self.extend(ratios, rest) {
                return true;
            }
            ratios[j].pop();
        }
        false
    }

    /// Removes every product generated by appending `value` to factor `j`.
    fn consume(&self, ratios: &[Vec<f64>], j: usize, value: f64, remaining: &[f64]) -> Option<Vec<f64>> {
        let mut products = vec![value];
        for (i, r) in ratios.iter().enumerate() {
            if i != j {
                products = products.iter().flat_map(|p| r.iter().map(move |x| p * x)).collect();
            }
        }
        let mut rest = remaining.to_vec();
        for p in products {
            let idx = nearest(&rest, p)?;
            if (rest[idx] - p).abs() > self.rtol {
                return None;
            }
            rest.remove(idx);
        }
        Some(rest)
    }
}

/// Index of the entry closest to `x` in a descending slice.
fn nearest(sorted_desc: &[f64], x: f64) -> Option<usize> {
    if sorted_desc.is_empty() {
        return None;
    }
    let pos = sorted_desc.partition_point(|&v| v > x);
    [pos.checked_sub(1), Some(pos)]
        .into_iter()
        .flatten()
        .filter(|&i| i < sorted_desc.len())
        .min_by(|&a, &b| (sorted_desc[a] - x).abs().total_cmp(&(sorted_desc[b] - x).abs()))
}

fn tuples(d: usize, n: usize) -> Vec<Vec<usize>> {
    let dims = vec![d; n];
    let total = grid_size(d, n).unwrap_or(0);
    (0..total)
        .map(|i| PartyDims::new(dims.clone()).map(|p| p.digits(i)).unwrap_or_default())
        .collect()
}

/// Pairs sorted products with sorted `q` and checks every match.
fn assign(a: &[Vec<f64>], q: &Spectrum) -> Result<Vec<Vec<usize>>> {
    let d = a[0].len();
    let mut cells: Vec<(f64, Vec<usize>)> =
        tuples(d, a.len()).into_iter().map(|t| (t.iter().zip(a).map(|(&k, aj)| aj[k]).product(), t)).collect();
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));
    for ((prod, t), &target) in cells.iter().zip(q.values()) {
        if (prod - target).abs() > PRODUCT_TOL {
            return Err(Error::Numerical(format!(
                "product {prod:.3e} at {t:?} misses the target {target:.3e}"
            )));
        }
    }
    Ok(cells.into_iter().map(|(_, t)| t).collect())
}

/// `⊗_j (Σ_k √a_{j,k} |k⟩_{X_j}|k⟩_{Y_j}) ⊗ |rest⟩` on parties
/// `X₁ … Xₙ Y₁ … Y_m`; `rest` defaults to all zeros on `Y_{n+1} … Y_m`.
pub fn build_pair_state(sol: &PairSolution, m: usize, rest: Option<&MultiState>) -> Result<MultiState> {
    let n = sol.a.len();
    let d = sol.d();
    if n == 0 || m < n {
        return Err(Error::DimMismatch(format!("{n} pairs do not fit {m} Y-side qudits")));
    }
    let extra = m - n;
    let rest_amps: Vec<num_complex::Complex64> = match rest {
        Some(r) => {
            if !r.is_pure() {
                return Err(Error::NotPure);
            }
            if r.dims().as_slice() != vec![d; extra].as_slice() {
                return Err(Error::DimMismatch(format!(
                    "rest has dims {:?}, expected {extra} qudits of dimension {d}",
                    r.dims().as_slice()
                )));
            }
            r.data().as_slice().to_vec()
        }
        None if extra == 0 => vec![linalg::ONE],
        None => {
            let mut v = vec![ZERO; d.pow(extra as u32)];
            v[0] = linalg::ONE;
            v
        }
    };
    let dims = PartyDims::uniform(n + m, d)?;
    let dn = d.pow(n as u32);
    let drest = rest_amps.len();
    let mut amps = vec![ZERO; dims.total()];
    for (k, t) in tuples(d, n).iter().enumerate() {
        let c = sol.product(t).sqrt();
        for (s, &z) in rest_amps.iter().enumerate() {
            amps[(k * dn + k) * drest + s] = z * c;
        }
    }
    let state = MultiState::pure_normalized(dims, amps)?;
    let bp = Bipartition::new(&(0..n).collect::<Vec<_>>(), n + m)?;
    let probs = schmidt::schmidt_decompose(&state, &bp)?.probabilities();
    let expected = Spectrum::new(tuples(d, n).iter().map(|t| sol.product(t)).collect());
    if !linalg::multiset_equal(&probs, &expected, PRODUCT_TOL) {
        return Err(Error::Numerical("pair state Schmidt spectrum differs from the products".into()));
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Pairability {
    Pairable {
        solution: PairSolution,
        /// Pair state in the party layout of the input.
        target: MultiState,
        /// `target = lu · ψ`.
        lu: LocalUnitary,
        residual: f64,
    },
    Infeasible {
        q: Spectrum,
        explored: usize,
    },
}

/// Decides pairability of `psi` across `bp` and, when pairable, returns the
/// pair state laid out like `psi` (pair `j` joins the `j`-th X party with the
/// `j`-th Y party in ascending order) together with a local unitary onto it.
pub fn pairable(psi: &MultiState, bp: &Bipartition, tol: &Tolerance) -> Result<Pairability> {
    if !psi.is_pure() {
        return Err(Error::NotPure);
    }
    let dims = psi.dims().as_slice();
    let d = dims[0];
    if dims.iter().any(|&x| x != d) {
        return Err(Error::MixedDims(dims.to_vec()));
    }
    if bp.parties() != dims.len() {
        return Err(Error::BadPartition(format!("cut covers {} parties, state has {}", bp.parties(), dims.len())));
    }
    let (n, m) = (bp.x().len(), bp.y().len());
    if n > m {
        return Err(Error::BadPartition(format!("X side ({n} parties) is larger than Y side ({m})")));
    }
    if grid_size(d, n).map_or(true, |s| s > DEFAULT_BUDGET) {
        return Err(Error::TooLarge { size: grid_size(d, n).unwrap_or(usize::MAX), budget: DEFAULT_BUDGET });
    }
    let q = schmidt::schmidt_decompose(psi, bp)?.probabilities();
    let sum = q.sum();
    let problem = PairabilityProblem::new(q.values().iter().map(|x| x / sum).collect(), d, n, m)?;
    let solution = match product_factorize(&problem, tol.spectrum)? {
        Factorization::Feasible(s) => s,
        Factorization::Infeasible { explored } => return Ok(Pairability::Infeasible { q, explored }),
    };
    let canonical = build_pair_state(&solution, m, None)?;
    // layout party p takes canonical party order[p]
    let mut order = vec![0; n + m];
    for (c, &p) in bp.x().iter().chain(bp.y()).enumerate() {
        order[p] = c;
    }
    let target = canonical.permute_parties(&order)?;
    match constructors::pure_lu_construct(&target, psi, bp, tol)? {
        Construction::Found { lu, residual } => Ok(Pairability::Pairable { solution, target, lu, residual }),
        other => Err(Error::Numerical(format!("pair state not reachable by a local unitary: {other:?}"))),
    }
}
