//! Independent reference computations shared by the integration tests.
//!
//! Everything here works on natural-order indices with explicit digit loops
//! and never calls the grouping code under test.

#![allow(dead_code)]

use luequiv::linalg::ComplexMatrix;
use luequiv::PartyDims;
use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `Tr` over every party not in `keep`; kept parties stay in increasing order.
pub fn partial_trace(rho: &ComplexMatrix, dims: &PartyDims, keep: &[usize]) -> ComplexMatrix {
    let n = dims.parties();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let kd = dims.select(&keep);
    let out_dim = kd.total();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for i in 0..dims.total() {
        let di = dims.digits(i);
        for j in 0..dims.total() {
            let dj = dims.digits(j);
            if traced.iter().all(|&p| di[p] == dj[p]) {
                let a: Vec<usize> = keep.iter().map(|&p| di[p]).collect();
                let b: Vec<usize> = keep.iter().map(|&p| dj[p]).collect();
                out[(kd.index_of(&a), kd.index_of(&b))] += rho[(i, j)];
            }
        }
    }
    out
}

/// Transposes the digits of `side` parties, natural order throughout.
pub fn partial_transpose(rho: &ComplexMatrix, dims: &PartyDims, side: &[usize]) -> ComplexMatrix {
    let d = dims.total();
    ComplexMatrix::from_fn(d, d, |i, j| {
        let mut di = dims.digits(i);
        let mut dj = dims.digits(j);
        for &p in side {
            std::mem::swap(&mut di[p], &mut dj[p]);
        }
        rho[(dims.index_of(&di), dims.index_of(&dj))]
    })
}

/// `⊗_p U_p` in natural order.
pub fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    factors[1..].iter().fold(factors[0].clone(), |acc, f| acc.kron(f))
}

/// Operator acting as `u_x` on the X parties and `u_y` on the rest, in
/// natural order.
pub fn embed(dims: &PartyDims, x: &[usize], u_x: &ComplexMatrix, u_y: &ComplexMatrix) -> ComplexMatrix {
    let n = dims.parties();
    let y: Vec<usize> = (0..n).filter(|p| !x.contains(p)).collect();
    let (dx, dy) = (dims.select(x), dims.select(&y));
    let d = dims.total();
    ComplexMatrix::from_fn(d, d, |i, j| {
        let (di, dj) = (dims.digits(i), dims.digits(j));
        let xi = dx.index_of(&x.iter().map(|&p| di[p]).collect::<Vec<_>>());
        let xj = dx.index_of(&x.iter().map(|&p| dj[p]).collect::<Vec<_>>());
        let yi = dy.index_of(&y.iter().map(|&p| di[p]).collect::<Vec<_>>());
        let yj = dy.index_of(&y.iter().map(|&p| dj[p]).collect::<Vec<_>>());
        u_x[(xi, xj)] * u_y[(yi, yj)]
    })
}

/// Real eigenvalues of a Hermitian matrix from nalgebra, descending.
pub fn nalgebra_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.rows();
    let na = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
    let mut v: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Singular values from nalgebra, descending.
pub fn nalgebra_singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let na = nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)]);
    let mut v: Vec<f64> = na.singular_values().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else { return false };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Whether the `dⁿ` values laid out on the grid in this order form a product
/// distribution, judged by comparing each cell with the product of marginals.
fn is_product_layout(q: &[f64], d: usize, n: usize, tol: f64) -> bool {
    let dims = PartyDims::uniform(n, d).unwrap();
    let mut marg = vec![vec![0.0; d]; n];
    for (i, &v) in q.iter().enumerate() {
        for (j, &k) in dims.digits(i).iter().enumerate() {
            marg[j][k] += v;
        }
    }
    q.iter().enumerate().all(|(i, &v)| {
        let p: f64 = dims.digits(i).iter().enumerate().map(|(j, &k)| marg[j][k]).product();
        (p - v).abs() <= tol
    })
}

/// Exhaustive search over every placement of `q` on the `dⁿ` grid.
/// Returns the marginals of the first product layout found.
pub fn brute_force_factorize(q: &[f64], d: usize, n: usize, tol: f64) -> Option<Vec<Vec<f64>>> {
    let size = q.len();
    assert_eq!(size, d.pow(n as u32));
    assert!(size <= 9, "brute force is limited to tiny grids");
    let mut perm: Vec<usize> = (0..size).collect();
    loop {
        let layout: Vec<f64> = perm.iter().map(|&i| q[i]).collect();
        if is_product_layout(&layout, d, n, tol) {
            let dims = PartyDims::uniform(n, d).unwrap();
            let mut marg = vec![vec![0.0; d]; n];
            for (i, &v) in layout.iter().enumerate() {
                for (j, &k) in dims.digits(i).iter().enumerate() {
                    marg[j][k] += v;
                }
            }
            return Some(marg);
        }
        if !next_permutation(&mut perm) {
            return None;
        }
    }
}
