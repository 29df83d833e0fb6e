mod common;

use ndarray::Array2;
use proptest::prelude::*;
use taxica_core::sparsity::lemma1_bound;
use taxica_core::{
    build_model, ca_decompose, five_number, map_similarity, parse_table, reduce_to_minimal, seven_number, tca_decompose,
    verify, CheckStatus, ContingencyTable, Decomposition, QuantileMethod, TcaOptions,
};

fn table_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = ContingencyTable> {
    sized_table_strategy(2, max_rows, max_cols)
}

fn sized_table_strategy(min: usize, max_rows: usize, max_cols: usize) -> impl Strategy<Value = ContingencyTable> {
    (min..=max_rows, min..=max_cols)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop_oneof![2 => Just(0u32), 3 => 1u32..30], r * c).prop_map(move |v| (r, c, v)))
        .prop_filter_map("empty line", |(r, c, v)| {
            let counts = Array2::from_shape_vec((r, c), v.into_iter().map(f64::from).collect()).ok()?;
            let ok = counts.rows().into_iter().all(|x| x.sum() > 0.0) && counts.columns().into_iter().all(|x| x.sum() > 0.0);
            ok.then(|| {
                let rl = (1..=r).map(|i| format!("r{i}")).collect();
                let cl = (1..=c).map(|j| format!("c{j}")).collect();
                ContingencyTable::new(rl, cl, counts).unwrap()
            })
        })
}

fn decompose(t: &ContingencyTable) -> (Decomposition, Decomposition) {
    let m = build_model(t).unwrap();
    let k = m.max_axes();
    (ca_decompose(&m, k).unwrap(), tca_decompose(&m, k, TcaOptions::default()).unwrap())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Splits row `i` into two proportional halves.
fn split_row(t: &ContingencyTable, i: usize) -> ContingencyTable {
    let counts = t.counts();
    let (rows, cols) = t.shape();
    let mut out = Array2::zeros((rows + 1, cols));
    for k in 0..rows {
        out.row_mut(k).assign(&counts.row(k));
    }
    let half = &counts.row(i) * 0.5;
    out.row_mut(i).assign(&half);
    out.row_mut(rows).assign(&half);
    let mut rl = t.row_labels().to_vec();
    rl.push(format!("{}-split", rl[i]));
    ContingencyTable::new(rl, t.col_labels().to_vec(), out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_invariance(t in table_strategy(6, 7), k in 1u32..20) {
        let (ca, tca) = decompose(&t);
        let (ca_k, tca_k) = decompose(&t.scaled(f64::from(k)).unwrap());
        prop_assert!(close(&ca.sigmas(), &ca_k.sigmas(), 1e-9));
        prop_assert!(close(&tca.sigmas(), &tca_k.sigmas(), 1e-9));
        for (a, b) in ca.axes.iter().zip(&ca_k.axes).chain(tca.axes.iter().zip(&tca_k.axes)) {
            if a.sigma > 1e-6 {
                prop_assert!(close(a.f.as_slice().unwrap(), b.f.as_slice().unwrap(), 1e-6));
            }
        }
    }

    #[test]
    fn csv_round_trip(t in table_strategy(8, 8)) {
        let back = parse_table(&t.to_csv(b','), b',').unwrap();
        prop_assert_eq!(back, t.clone());
        let back = parse_table(&t.to_csv(b';'), b';').unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn reduction_is_idempotent(t in table_strategy(8, 8)) {
        let m = reduce_to_minimal(&t).unwrap().minimal;
        let again = reduce_to_minimal(&m).unwrap();
        prop_assert!(again.is_identity());
        prop_assert_eq!(again.minimal, m);
    }

    #[test]
    fn minimal_table_ignores_row_order(t in table_strategy(7, 6), seed in any::<u64>()) {
        let n = t.n_rows();
        let mut order: Vec<usize> = (0..n).collect();
        let mut state = seed;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (state >> 33) as usize % (i + 1));
        }
        let counts = Array2::from_shape_fn(t.shape(), |(i, j)| t.counts()[[order[i], j]]);
        let labels = order.iter().map(|&i| t.row_labels()[i].clone()).collect();
        let shuffled = ContingencyTable::new(labels, t.col_labels().to_vec(), counts).unwrap();
        let a = reduce_to_minimal(&t).unwrap().minimal;
        let b = reduce_to_minimal(&shuffled).unwrap().minimal;
        prop_assert_eq!(a.shape(), b.shape());
        let mut ra: Vec<Vec<u64>> = a.counts().rows().into_iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
        let mut rb: Vec<Vec<u64>> = b.counts().rows().into_iter().map(|r| r.iter().map(|x| x.to_bits()).collect()).collect();
        ra.sort();
        rb.sort();
        prop_assert_eq!(ra, rb);
    }

    #[test]
    fn spectrum_invariant_under_proportional_split(t in table_strategy(6, 6), i in 0usize..6) {
        let i = i % t.n_rows();
        let (ca, tca) = decompose(&t);
        let (ca_s, tca_s) = decompose(&split_row(&t, i));
        prop_assert!(close(&ca.sigmas(), &ca_s.sigmas(), 1e-9));
        prop_assert!(close(&tca.sigmas(), &tca_s.sigmas(), 1e-9));
    }

    #[test]
    fn lemma1_bound_holds_for_minimal_tables(t in table_strategy(8, 8)) {
        let m = reduce_to_minimal(&t).unwrap().minimal;
        let s = seven_number(&m, QuantileMethod::Hinges).unwrap();
        prop_assert!(s.pct_zero <= lemma1_bound(m.n_rows(), m.n_cols()) + 1e-9);
    }

    #[test]
    fn identities_hold(t in table_strategy(6, 7)) {
        let (ca, tca) = decompose(&t);
        for d in [&ca, &tca] {
            let report = verify(d);
            for c in &report.checks {
                prop_assert!(c.status != CheckStatus::Fail, "{} {}: {:e}", d.method, c.name, c.max_residual);
            }
        }
    }

    #[test]
    fn five_number_ignores_order(mut batch in prop::collection::vec(0.5f64..100.0, 1..40), shift in 0usize..40) {
        for method in [QuantileMethod::Hinges, QuantileMethod::Interpolated] {
            let a = five_number(&batch, method).unwrap();
            let k = shift % batch.len();
            batch.rotate_left(k);
            batch.reverse();
            prop_assert_eq!(a, five_number(&batch, method).unwrap());
            let v = a.as_array();
            prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn seven_number_scales(t in table_strategy(6, 6), k in 2u32..10) {
        let k = f64::from(k);
        let a = seven_number(&t, QuantileMethod::Hinges).unwrap();
        let b = seven_number(&t.scaled(k).unwrap(), QuantileMethod::Hinges).unwrap();
        prop_assert!((b.ave - k * a.ave).abs() < 1e-9 * b.ave.max(1.0));
        prop_assert_eq!(a.pct_zero, b.pct_zero);
        for (x, y) in a.mh1.as_array().iter().zip(b.mh1.as_array()) {
            prop_assert!((y - k * x).abs() < 1e-9 * y.max(1.0));
        }
    }

    #[test]
    fn similarity_ignores_axis_signs_and_reduction(t in sized_table_strategy(3, 6, 6)) {
        let (ca, tca) = decompose(&t);
        prop_assume!(ca.axes.len() >= 2 && tca.axes.len() >= 2);
        let base = map_similarity(&ca, &tca, 2, 0.9).unwrap();
        let mut flipped = tca.clone();
        for axis in &mut flipped.axes {
            axis.flip();
        }
        let other = map_similarity(&ca, &flipped, 2, 0.9).unwrap();
        prop_assert!(close(&base.phi, &other.phi, 1e-12));
        prop_assert_eq!(base.verdict, other.verdict);

        let (ca_m, tca_m) = decompose(&reduce_to_minimal(&t).unwrap().minimal);
        prop_assume!(ca_m.axes.len() >= 2 && tca_m.axes.len() >= 2);
        let reduced = map_similarity(&ca_m, &tca_m, 2, 0.9).unwrap();
        // phi is only defined up to the basis choice inside repeated dispersions
        let distinct = |d: &Decomposition| d.sigmas().windows(2).take(2).all(|w| (w[0] - w[1]).abs() > 1e-6);
        prop_assume!(distinct(&ca) && distinct(&tca));
        prop_assert!(close(&base.phi, &reduced.phi, 1e-6), "{:?} vs {:?}", base.phi, reduced.phi);
    }
}
