mod common;

use common::{embed, kron_all};
use luequiv::catalog;
use luequiv::state::{self, Bipartition, MultiState, PartyDims, Side, StateKind};
use luequiv::ComplexMatrix;
use proptest::prelude::*;

const DIMS: &[&[usize]] = &[&[2, 2], &[2, 3], &[3, 2], &[2, 2, 2], &[2, 3, 2], &[2, 2, 3], &[2, 2, 2, 2]];

#[derive(Debug, Clone)]
struct Case {
    dims: PartyDims,
    state: MultiState,
    cut: Bipartition,
}

fn case() -> impl Strategy<Value = Case> {
    (0..DIMS.len(), any::<u64>(), any::<bool>(), 0usize..64).prop_map(|(di, seed, pure, pick)| {
        let dims = PartyDims::new(DIMS[di].to_vec()).unwrap();
        let state = if pure {
            catalog::random_state(&dims, StateKind::Pure, 1, seed).unwrap()
        } else {
            let rank = 1 + (seed as usize % dims.total().min(4));
            catalog::random_state(&dims, StateKind::Mixed, rank, seed).unwrap()
        };
        let cuts = Bipartition::enumerate(dims.parties());
        let cut = cuts[pick % cuts.len()].clone();
        Case { dims, state, cut }
    })
}

fn operator(dim: usize, seed: u64) -> ComplexMatrix {
    // general (non-unitary, non-Hermitian) operator
    let u = catalog::random_unitary(dim, seed);
    let v = catalog::random_unitary(dim, seed.wrapping_add(1));
    let d = ComplexMatrix::from_real_diagonal(&(0..dim).map(|k| 0.3 + k as f64).collect::<Vec<_>>());
    &(&u * &d) * &v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn partial_trace_matches_digit_oracle(c in case()) {
        let rho = c.state.density();
        for (side, parties) in [(Side::X, c.cut.x()), (Side::Y, c.cut.y())] {
            let ours = state::partial_trace(&c.state, &c.cut, side).unwrap();
            let oracle = common::partial_trace(&rho, &c.dims, parties);
            prop_assert!(ours.max_abs_diff(&oracle) < 1e-14);
        }
    }

    #[test]
    fn partial_transpose_matches_oracle_and_is_an_involution(c in case()) {
        let rho = c.state.density();
        for (side, parties) in [(Side::X, c.cut.x()), (Side::Y, c.cut.y())] {
            let t = state::partial_transpose(&c.state, &c.cut, side).unwrap();
            prop_assert!(t.max_abs_diff(&common::partial_transpose(&rho, &c.dims, parties)) == 0.0);
            let back = MultiState::mixed(c.dims.clone(), rho.clone()).unwrap();
            let tt = state::partial_transpose(&back, &c.cut, side).unwrap();
            let again = common::partial_transpose(&tt, &c.dims, parties);
            prop_assert!(again.max_abs_diff(&rho) <= 1e-12);
        }
    }

    #[test]
    fn local_unitary_matches_embedded_operator(c in case(), seed in any::<u64>()) {
        let lu = catalog::random_local_unitary(&c.dims, &c.cut, seed).unwrap();
        let moved = lu.apply(&c.state).unwrap();
        let w = embed(&c.dims, c.cut.x(), &lu.u_x, &lu.u_y);
        let expected = &(&w * &c.state.density()) * &w.adjoint();
        prop_assert!(moved.density().max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn per_party_unitaries_match_kronecker_product(c in case(), seed in any::<u64>()) {
        let us = catalog::random_party_unitaries(&c.dims, seed);
        let moved = state::apply_per_party(&c.state, &us).unwrap();
        let w = kron_all(&us);
        let expected = &(&w * &c.state.density()) * &w.adjoint();
        prop_assert!(moved.density().max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn grouping_round_trips(c in case()) {
        let g = state::group_as_bipartite(&c.state, &c.cut).unwrap();
        let back = state::ungroup_from_bipartite(&g, &c.dims, c.state.kind(), &c.cut).unwrap();
        prop_assert!(back.max_abs_diff(c.state.data()) == 0.0);
    }

    #[test]
    fn spectra_survive_party_permutation(c in case(), rot in 0usize..4) {
        let n = c.dims.parties();
        let order: Vec<usize> = (0..n).map(|k| (k + rot) % n).collect();
        let p = c.state.permute_parties(&order).unwrap();
        let inverse: Vec<usize> = (0..n).map(|k| (k + n - rot % n) % n).collect();
        prop_assert_eq!(p.permute_parties(&inverse).unwrap(), c.state.clone());
        let a = c.state.to_mixed().spectrum().unwrap();
        let b = p.to_mixed().spectrum().unwrap();
        prop_assert!(luequiv::linalg::multiset_equal(&a, &b, 1e-12));
    }
}

/// `(K⊗L ϱ M⊗N)^{T_Y} = (K⊗Nᵀ) ϱ^{T_Y} (M⊗Lᵀ)` on random operator quadruples.
#[test]
fn partial_transpose_moves_factors_across() {
    let dims = PartyDims::new(vec![2, 3]).unwrap();
    let cut = Bipartition::new(&[0], 2).unwrap();
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let rho = catalog::random_state(&dims, StateKind::Mixed, 1 + (t as usize % 6), t).unwrap();
        let (k, l, m, n) = (operator(2, 10 * t), operator(3, 10 * t + 2), operator(2, 10 * t + 4), operator(3, 10 * t + 6));
        let lhs_inner = &(&k.kron(&l) * rho.data()) * &m.kron(&n);
        let lhs = state::partial_transpose_grouped(&lhs_inner, 2, 3, Side::Y);
        let rho_t = state::partial_transpose(&rho, &cut, Side::Y).unwrap();
        let rhs = &(&k.kron(&n.transpose()) * &rho_t) * &m.kron(&l.transpose());
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    assert!(worst <= 1e-10, "residual {worst:e}");
}

#[test]
fn reduce_matches_partial_trace() {
    let dims = PartyDims::new(vec![2, 3, 2]).unwrap();
    let s = catalog::random_state(&dims, StateKind::Pure, 1, 4).unwrap();
    let r = state::reduce(&s, &[2, 0]).unwrap();
    assert_eq!(r.dims().as_slice(), &[2, 2]);
    let oracle = common::partial_trace(&s.density(), &dims, &[0, 2]);
    assert!(r.data().max_abs_diff(&oracle) < 1e-15);
}
