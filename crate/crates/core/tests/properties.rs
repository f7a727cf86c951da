use ndarray::Array2;
use proptest::prelude::*;

use conflictforge::conflict::{conflict_factor_values, normalize_scores, pair_state};
use conflictforge::eval::{fleiss_kappa, regression_metrics, roc_auc, RankedList};
use conflictforge::graph::normalized_adjacency;
use conflictforge::learn::{stratified_split, time_ordered_split, GcnParams};
use conflictforge::sentiment::{aggregate_probabilities, argmax_label, TdProbability};

fn td_pair() -> impl Strategy<Value = (Vec<u8>, Vec<u8>)> {
    (1usize..40).prop_flat_map(|n| (prop::collection::vec(0u8..=3, n), prop::collection::vec(0u8..=3, n)))
}

fn symmetric_weights() -> impl Strategy<Value = Array2<f64>> {
    (1usize..12).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0..5.0f64], n * n).prop_map(move |w| {
            Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { w[i.min(j) * n + i.max(j)] })
        })
    })
}

fn labelled_scores() -> impl Strategy<Value = (Vec<bool>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (prop::collection::vec(any::<bool>(), n), prop::collection::vec(-5i32..5, n)).prop_filter_map(
            "needs both classes",
            |(mut l, s)| {
                l[0] = true;
                l[1] = false;
                Some((l, s.into_iter().map(f64::from).collect()))
            },
        )
    })
}

proptest! {
    #[test]
    fn conflict_factor_is_symmetric_and_bounded((a, b) in td_pair()) {
        let ab = conflict_factor_values(&a, &b).unwrap();
        prop_assert_eq!(ab, conflict_factor_values(&b, &a).unwrap());
        prop_assert!(ab.value >= 0.0 && ab.value <= 2.0 * ab.common_terms as f64);
        prop_assert_eq!(conflict_factor_values(&a, &a).unwrap().value, 0.0);
    }

    #[test]
    fn normalized_adjacency_is_symmetric_and_bounded(a in symmetric_weights()) {
        let h = normalized_adjacency(&a).unwrap();
        for ((i, j), v) in h.indexed_iter() {
            prop_assert!((v - h[[j, i]]).abs() <= 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(v));
            prop_assert_eq!(*v == 0.0, a[[i, j]] == 0.0);
        }
    }

    #[test]
    fn auc_ignores_order_and_monotone_maps((labels, scores) in labelled_scores(), shift in -3.0..3.0f64) {
        let auc = roc_auc(&labels, &scores).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
        let mapped: Vec<f64> = scores.iter().map(|s| (s + shift).exp()).collect();
        prop_assert!((roc_auc(&labels, &mapped).unwrap() - auc).abs() <= 1e-12);
        let (rl, rs): (Vec<bool>, Vec<f64>) = labels.iter().copied().zip(scores.iter().copied()).rev().unzip();
        prop_assert!((roc_auc(&rl, &rs).unwrap() - auc).abs() <= 1e-12);
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((roc_auc(&labels, &negated).unwrap() - (1.0 - auc)).abs() <= 1e-12);
    }

    #[test]
    fn ranked_list_metrics_stay_in_unit_interval(rel in prop::collection::vec(any::<bool>(), 1..30)) {
        let list = RankedList::from_ranked(rel.clone());
        match (list.average_precision(), list.reciprocal_rank()) {
            (Some(ap), Some(rr)) => {
                prop_assert!(ap > 0.0 && ap <= 1.0 && rr > 0.0 && rr <= 1.0);
                if rel[0] { prop_assert_eq!(rr, 1.0); }
            }
            (None, None) => prop_assert!(rel.iter().all(|r| !r)),
            _ => prop_assert!(false, "AP and RR disagree on emptiness"),
        }
    }

    #[test]
    fn regression_metrics_are_consistent(pairs in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 1..40)) {
        let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = regression_metrics(&y, &p).unwrap();
        prop_assert!((m.rmse * m.rmse - m.mse).abs() <= 1e-9 * m.mse.max(1.0));
        prop_assert!((0.0..=2.0 + 1e-12).contains(&m.smape));
        let same = regression_metrics(&y, &y).unwrap();
        prop_assert_eq!(same.mse, 0.0);
    }

    #[test]
    fn normalized_scores_span_the_interval(s in prop::collection::vec(-100.0..100.0f64, 1..30), lo in -5.0..5.0f64, width in 0.1..10.0f64) {
        let out = normalize_scores(&s, lo, lo + width).unwrap();
        for v in &out {
            prop_assert!(*v >= lo - 1e-9 && *v <= lo + width + 1e-9);
        }
        let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, k| if v[k] > v[b] { k } else { b });
        prop_assert_eq!(argmax(&s), argmax(&out));
    }

    #[test]
    fn aggregation_ignores_occurrence_order(raw in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64), 0..8)) {
        let probs: Vec<TdProbability> = raw
            .iter()
            .map(|(a, b, c)| {
                let s = a + b + c + 1e-9;
                TdProbability::new(a / s, b / s, (c + 1e-9) / s).unwrap()
            })
            .collect();
        let mut reversed = probs.clone();
        reversed.reverse();
        let label = aggregate_probabilities(&probs);
        prop_assert_eq!(label, aggregate_probabilities(&reversed));
        prop_assert_eq!(label.is_none(), probs.is_empty());
        if let Some(l) = label { prop_assert!((1..=3).contains(&l)); }
    }

    #[test]
    fn argmax_label_is_a_polar_or_neutral_label(s in prop::array::uniform3(0.0..1.0f64)) {
        prop_assert!((1..=3).contains(&argmax_label(s)));
    }

    #[test]
    fn time_split_partitions_in_time_order(times in prop::collection::vec(0i64..1000, 1..60), test in 0.0..0.9f64, dev in 0.0..0.9f64) {
        let s = time_ordered_split(&times, test, dev).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..times.len()).collect::<Vec<_>>());
        let latest = |ix: &[usize]| ix.iter().map(|&k| times[k]).max();
        let earliest = |ix: &[usize]| ix.iter().map(|&k| times[k]).min();
        if let (Some(a), Some(b)) = (latest(&s.train), earliest(&s.dev)) { prop_assert!(a <= b); }
        if let (Some(a), Some(b)) = (latest(&s.dev), earliest(&s.test)) { prop_assert!(a <= b); }
        if let (Some(a), Some(b)) = (latest(&s.train), earliest(&s.test)) { prop_assert!(a <= b); }
    }

    #[test]
    fn stratified_split_keeps_every_stratum_on_both_sides(sizes in prop::collection::vec(2usize..10, 1..6), seed: u64) {
        let strata: Vec<String> = sizes.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat(format!("s{k}")).take(n)).collect();
        let s = stratified_split(&strata, 0.3, 2, seed).unwrap();
        prop_assert_eq!(s.train.len() + s.test.len(), strata.len());
        for k in 0..sizes.len() {
            let name = format!("s{k}");
            prop_assert!(s.train.iter().any(|&i| strata[i] == name));
            prop_assert!(s.test.iter().any(|&i| strata[i] == name));
        }
    }

    #[test]
    fn fleiss_kappa_is_at_most_one(rows in prop::collection::vec(prop::collection::vec(0usize..4, 3), 2..10)) {
        // force a constant rater count by topping up the last category
        let raters = 6;
        let rows: Vec<Vec<usize>> = rows
            .into_iter()
            .map(|mut r| {
                let s: usize = r.iter().sum::<usize>().min(raters);
                r.iter_mut().fold(s, |left, v| { *v = (*v).min(left); left - *v });
                let used: usize = r.iter().sum();
                r.push(raters - used);
                r
            })
            .collect();
        if let Ok(k) = fleiss_kappa(&rows) {
            prop_assert!(k <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gcn_parameters_round_trip(d in 1usize..6, seed: u64) {
        let p = GcnParams::init(d, [4, 3, 3, 2], seed);
        let flat = p.flatten();
        prop_assert_eq!(p.unflatten(&flat).unwrap(), p.clone());
        let back = GcnParams::from_checkpoint(&p.to_checkpoint()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn pair_state_accepts_any_history(h in prop::collection::vec(0.0..4.0f64, 1..10)) {
        prop_assert!(pair_state(&h, 1.0).is_ok());
    }
}
