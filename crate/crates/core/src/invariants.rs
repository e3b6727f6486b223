//! Necessary conditions for local unitary equivalence across a bipartition.
//!
//! * A1: global spectrum
//! * A2: spectra of both reduced states
//! * A3: per-eigenvalue projector rank and the spectra of its two marginals
//! * A4: spectra of both partial transposes
//!
//! A pair that fails any of them is not locally equivalent for that cut.
//! Passing all of them proves nothing; see the `constructors` module for the
//! sufficiency side.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, Spectrum, DEFAULT_GAP, DEFAULT_TOL};
use crate::state::{self, Bipartition, Grouping, MultiState, Side, StateKind, STATE_TOL};

/// Numerical thresholds shared by the checks and constructors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    /// Elementwise tolerance for comparing spectra.
    pub spectrum: f64,
    /// Eigenvalues closer than this belong to one degenerate cluster.
    pub gap: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { spectrum: DEFAULT_TOL, gap: DEFAULT_GAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Fail dominates Inconclusive, which dominates Pass.
    pub fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum InvariantId {
    A1,
    A2,
    A3,
    A4,
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The two spectra that failed to match.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub invariant: InvariantId,
    pub detail: String,
    pub first: Spectrum,
    pub second: Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

impl InvariantCheck {
    fn pass() -> Self {
        InvariantCheck { verdict: Verdict::Pass, witnesses: Vec::new() }
    }

    fn compare(id: InvariantId, detail: &str, a: Spectrum, b: Spectrum, tol: f64) -> Self {
        let mut c = Self::pass();
        c.expect_equal(id, detail, a, b, tol);
        c
    }

    fn expect_equal(&mut self, id: InvariantId, detail: &str, a: Spectrum, b: Spectrum, tol: f64) {
        if !linalg::multiset_equal(&a, &b, tol) {
            self.record(id, detail, a, b);
        }
    }

    fn record(&mut self, id: InvariantId, detail: &str, a: Spectrum, b: Spectrum) {
        self.verdict = Verdict::Fail;
        self.witnesses.push(Witness { invariant: id, detail: detail.to_string(), first: a, second: b });
    }
}

/// One degenerate eigenvalue cluster and its projector's marginals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenprojectorSummary {
    pub eigenvalue: f64,
    /// Rank of the projector.
    pub dimension: usize,
    pub reduced_x_spectrum: Spectrum,
    pub reduced_y_spectrum: Spectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub bipartition: Bipartition,
    pub a1_global: Verdict,
    pub a2_reduced: Verdict,
    pub a3_projectors: Verdict,
    pub a4_partial_transpose: Verdict,
    pub witnesses: Vec<Witness>,
    pub verdict: Verdict,
}

impl InvariantReport {
    /// Names of the invariants that failed, in order.
    pub fn failing(&self) -> Vec<InvariantId> {
        let mut ids: Vec<InvariantId> = self.witnesses.iter().map(|w| w.invariant).collect();
        ids.dedup();
        ids
    }
}

fn same_dims(rho: &MultiState, sigma: &MultiState) -> Result<()> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimMismatch(format!(
            "party dimensions {:?} vs {:?}",
            rho.dims().as_slice(),
            sigma.dims().as_slice()
        )));
    }
    Ok(())
}

pub fn check_a1_global(rho: &MultiState, sigma: &MultiState, tol: &Tolerance) -> Result<InvariantCheck> {
    if rho.dims().total() != sigma.dims().total() {
        return Err(Error::DimMismatch(format!(
            "total dimension {} vs {}",
            rho.dims().total(),
            sigma.dims().total()
        )));
    }
    Ok(InvariantCheck::compare(InvariantId::A1, "global spectrum", rho.spectrum()?, sigma.spectrum()?, tol.spectrum))
}

fn reduced_spectrum(s: &MultiState, bp: &Bipartition, keep: Side) -> Result<Spectrum> {
    let r = state::partial_trace(s, bp, keep)?;
    Ok(linalg::hermitian_eig(&r, STATE_TOL)?.values)
}

pub fn check_a2_reduced(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<InvariantCheck> {
    same_dims(rho, sigma)?;
    let mut c = InvariantCheck::pass();
    for (side, detail) in [(Side::X, "reduced state on X"), (Side::Y, "reduced state on Y")] {
        c.expect_equal(
            InvariantId::A2,
            detail,
            reduced_spectrum(rho, bp, side)?,
            reduced_spectrum(sigma, bp, side)?,
            tol.spectrum,
        );
    }
    Ok(c)
}

/// Marginal spectra of `Σ_c v_c v_c†` for unit columns `v_c` (natural order).
fn projector_marginals(columns: &[Vec<Complex64>], g: &Grouping) -> Result<(Spectrum, Spectrum)> {
    let mut rx = ComplexMatrix::zeros(g.dx, g.dx);
    let mut ry = ComplexMatrix::zeros(g.dy, g.dy);
    for v in columns {
        let m = g.group_vector(v);
        rx = &rx + &(&m * &m.adjoint());
        ry = &ry + &(&m.transpose() * &m.conj());
    }
    Ok((linalg::hermitian_eig(&rx, STATE_TOL)?.values, linalg::hermitian_eig(&ry, STATE_TOL)?.values))
}

/// Eigenprojector summaries in descending eigenvalue order, plus a flag set
/// when two clusters sit closer than `10 × tol.spectrum`.
pub fn eigenprojector_summaries(
    s: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<(Vec<EigenprojectorSummary>, bool)> {
    let g = Grouping::new(s.dims(), bp)?;
    if s.kind() == StateKind::Pure {
        // P_1 = |ψ⟩⟨ψ|, P_0 = 1 − P_1 so Tr_Y P_0 = d_Y·1 − ρ_X
        let rx = reduced_spectrum(s, bp, Side::X)?;
        let ry = reduced_spectrum(s, bp, Side::Y)?;
        let total = s.dims().total();
        let mut out = vec![EigenprojectorSummary {
            eigenvalue: 1.0,
            dimension: 1,
            reduced_x_spectrum: rx.clone(),
            reduced_y_spectrum: ry.clone(),
        }];
        if total > 1 {
            out.push(EigenprojectorSummary {
                eigenvalue: 0.0,
                dimension: total - 1,
                reduced_x_spectrum: Spectrum::new(rx.values().iter().map(|v| g.dy as f64 - v).collect()),
                reduced_y_spectrum: Spectrum::new(ry.values().iter().map(|v| g.dx as f64 - v).collect()),
            });
        }
        return Ok((out, false));
    }

    let eig = linalg::hermitian_eig(s.data(), STATE_TOL)?;
    let values = eig.values.values();
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i - 1] - values[i] > tol.gap {
            clusters.push((start, i));
            start = i;
        }
    }
    let ambiguous = clusters.windows(2).any(|w| values[w[0].1 - 1] - values[w[1].0] < 10.0 * tol.spectrum);
    let mut out = Vec::with_capacity(clusters.len());
    for (lo, hi) in clusters {
        let cols: Vec<Vec<Complex64>> = (lo..hi).map(|k| eig.vectors.col(k)).collect();
        let (sx, sy) = projector_marginals(&cols, &g)?;
        let mean = values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        out.push(EigenprojectorSummary {
            eigenvalue: mean,
            dimension: hi - lo,
            reduced_x_spectrum: sx,
            reduced_y_spectrum: sy,
        });
    }
    Ok((out, ambiguous))
}

pub fn check_a3_projectors(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<InvariantCheck> {
    same_dims(rho, sigma)?;
    let (pr, amb_r) = eigenprojector_summaries(rho, bp, tol)?;
    let (ps, amb_s) = eigenprojector_summaries(sigma, bp, tol)?;
    if amb_r || amb_s {
        return Ok(InvariantCheck { verdict: Verdict::Inconclusive, witnesses: Vec::new() });
    }
    let mut c = InvariantCheck::pass();
    let cluster_values = |p: &[EigenprojectorSummary]| Spectrum::new(p.iter().map(|e| e.eigenvalue).collect());
    if pr.len() != ps.len() {
        c.record(InvariantId::A3, "eigenvalue clusters", cluster_values(&pr), cluster_values(&ps));
        return Ok(c);
    }
    for (a, b) in pr.iter().zip(&ps) {
        if (a.eigenvalue - b.eigenvalue).abs() > tol.spectrum || a.dimension != b.dimension {
            c.record(
                InvariantId::A3,
                &format!("eigenvalue {:.6} multiplicity {} vs {}", a.eigenvalue, a.dimension, b.dimension),
                Spectrum::new(vec![a.eigenvalue; a.dimension]),
                Spectrum::new(vec![b.eigenvalue; b.dimension]),
            );
            continue;
        }
        c.expect_equal(
            InvariantId::A3,
            &format!("Tr_Y of eigenprojector for {:.6}", a.eigenvalue.max(0.0)),
            a.reduced_x_spectrum.clone(),
            b.reduced_x_spectrum.clone(),
            tol.spectrum,
        );
        c.expect_equal(
            InvariantId::A3,
            &format!("Tr_X of eigenprojector for {:.6}", a.eigenvalue.max(0.0)),
            a.reduced_y_spectrum.clone(),
            b.reduced_y_spectrum.clone(),
            tol.spectrum,
        );
    }
    Ok(c)
}

fn transpose_spectra(s: &MultiState, bp: &Bipartition) -> Result<(Spectrum, Spectrum)> {
    let g = Grouping::new(s.dims(), bp)?;
    let grouped = g.group_operator(&s.density());
    let ty = state::partial_transpose_grouped(&grouped, g.dx, g.dy, Side::Y);
    let tx = state::partial_transpose_grouped(&grouped, g.dx, g.dy, Side::X);
    Ok((linalg::hermitian_eig(&ty, STATE_TOL)?.values, linalg::hermitian_eig(&tx, STATE_TOL)?.values))
}

pub fn check_a4_partial_transpose(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<InvariantCheck> {
    same_dims(rho, sigma)?;
    let (ry, rx) = transpose_spectra(rho, bp)?;
    let (sy, sx) = transpose_spectra(sigma, bp)?;
    let mut c = InvariantCheck::pass();
    c.expect_equal(InvariantId::A4, "partial transpose on Y", ry, sy, tol.spectrum);
    c.expect_equal(InvariantId::A4, "partial transpose on X", rx, sx, tol.spectrum);
    Ok(c)
}

/// A1 together with A2–A4 for one cut.
pub fn check_bipartition(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
) -> Result<InvariantReport> {
    same_dims(rho, sigma)?;
    let a1 = check_a1_global(rho, sigma, tol)?;
    check_with_a1(rho, sigma, bp, tol, &a1)
}

fn check_with_a1(
    rho: &MultiState,
    sigma: &MultiState,
    bp: &Bipartition,
    tol: &Tolerance,
    a1: &InvariantCheck,
) -> Result<InvariantReport> {
    let a2 = check_a2_reduced(rho, sigma, bp, tol)?;
    let a3 = check_a3_projectors(rho, sigma, bp, tol)?;
    let a4 = check_a4_partial_transpose(rho, sigma, bp, tol)?;
    let verdict = a1.verdict.combine(a2.verdict).combine(a3.verdict).combine(a4.verdict);
    let witnesses = [a1, &a2, &a3, &a4].iter().flat_map(|c| c.witnesses.iter().cloned()).collect();
    Ok(InvariantReport {
        bipartition: bp.clone(),
        a1_global: a1.verdict,
        a2_reduced: a2.verdict,
        a3_projectors: a3.verdict,
        a4_partial_transpose: a4.verdict,
        witnesses,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScanOptions {
    /// Keep recursing below failing cuts.
    pub full: bool,
}

/// Reports for one set of parties: its reduced-state pair is checked at
/// every cut, and each cut points at the nodes for its two sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanNode {
    /// 1-based labels of the parties this node covers.
    pub parties: Vec<usize>,
    pub a1_global: Verdict,
    pub cuts: Vec<ScanCut>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCut {
    /// Cut in 1-based labels of the original parties.
    pub cut: String,
    pub report: InvariantReport,
    /// Node indices of the two sides; absent when recursion was cut short.
    pub children: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    /// Node 0 is the full party set.
    pub nodes: Vec<ScanNode>,
    /// Fail if any node failed, Inconclusive otherwise.
    pub verdict: Verdict,
    /// `(node, cut)` of the first failure in scan order, or the node alone
    /// when its global spectra already differ.
    pub first_failure: Option<(usize, Option<String>)>,
}

/// Checks every bipartition, then recurses on the reduced-state pairs of
/// both sides until single parties remain. Nodes are shared between cuts
/// that produce the same party subset.
pub fn recursive_scan(
    rho: &MultiState,
    sigma: &MultiState,
    tol: &Tolerance,
    opts: ScanOptions,
) -> Result<ScanReport> {
    same_dims(rho, sigma)?;
    if rho.dims().parties() < 2 {
        return Err(Error::BadPartition("a scan needs at least two parties".into()));
    }
    let mut scan = Scanner { rho, sigma, tol, opts, nodes: Vec::new(), index: BTreeMap::new() };
    let all: Vec<usize> = (0..rho.dims().parties()).collect();
    scan.visit(&all)?;

    let mut verdict = Verdict::Inconclusive;
    let mut first_failure = None;
    for (i, node) in scan.nodes.iter().enumerate() {
        if node.a1_global == Verdict::Fail {
            verdict = Verdict::Fail;
            first_failure.get_or_insert((i, None));
        }
        for cut in &node.cuts {
            if cut.report.verdict == Verdict::Fail {
                verdict = Verdict::Fail;
                first_failure.get_or_insert((i, Some(cut.cut.clone())));
            }
        }
    }
    Ok(ScanReport { nodes: scan.nodes, verdict, first_failure })
}

struct Scanner<'a> {
    rho: &'a MultiState,
    sigma: &'a MultiState,
    tol: &'a Tolerance,
    opts: ScanOptions,
    nodes: Vec<ScanNode>,
    index: BTreeMap<Vec<usize>, usize>,
}

impl Scanner<'_> {
    fn visit(&mut self, parties: &[usize]) -> Result<usize> {
        if let Some(&i) = self.index.get(parties) {
            return Ok(i);
        }
        let (r, s) = if parties.len() == self.rho.dims().parties() {
            (self.rho.clone(), self.sigma.clone())
        } else {
            (state::reduce(self.rho, parties)?, state::reduce(self.sigma, parties)?)
        };
        let a1 = check_a1_global(&r, &s, self.tol)?;
        let id = self.nodes.len();
        self.nodes.push(ScanNode {
            parties: parties.iter().map(|p| p + 1).collect(),
            a1_global: a1.verdict,
            cuts: Vec::new(),
        });
        self.index.insert(parties.to_vec(), id);

        for bp in Bipartition::enumerate(parties.len()) {
            let report = check_with_a1(&r, &s, &bp, self.tol, &a1)?;
            let gx: Vec<usize> = bp.x().iter().map(|&p| parties[p]).collect();
            let gy: Vec<usize> = bp.y().iter().map(|&p| parties[p]).collect();
            let label = Bipartition::from_sides(&gx, &gy, self.rho.dims().parties())
                .map(|b| b.label())
                .unwrap_or_else(|_| {
                    let f = |v: &[usize]| v.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",");
                    format!("{}|{}", f(&gx), f(&gy))
                });
            let expand = self.opts.full || report.verdict != Verdict::Fail;
            let children = if expand { Some((self.visit(&gx)?, self.visit(&gy)?)) } else { None };
            self.nodes[id].cuts.push(ScanCut { cut: label, report, children });
        }
        Ok(id)
    }
}
