use affinity_core::association::{combine_channels, ChannelWeights};
use affinity_core::cluster::{dense_labels, rand_index, ClusterAssignment, Method};
use affinity_core::text::{cosine_similarity, extract_context_vector, TokenList};
use proptest::prelude::*;

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|d| {
        (
            prop::collection::vec(-100.0..100.0f64, d),
            prop::collection::vec(-100.0..100.0f64, d),
        )
    })
}

proptest! {
    #[test]
    fn cosine_symmetric_bounded_scale_free((a, b) in vec_pair(), s in 0.01..1000.0f64) {
        let ab = cosine_similarity(&a, &b);
        prop_assert_eq!(ab, cosine_similarity(&b, &a));
        prop_assert!(ab.abs() <= 1.0 + 1e-12);
        let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
        prop_assert!((cosine_similarity(&scaled, &b) - ab).abs() <= 1e-9);
    }

    #[test]
    fn combined_score_lies_between_channel_extremes(
        s in prop::collection::vec(prop::option::of(0.0..=1.0f64), 3),
        w in prop::collection::vec(0.0..5.0f64, 3),
    ) {
        prop_assume!(w.iter().any(|x| *x > 0.0));
        let weights = ChannelWeights { mcq_graph: w[0], text_graph: w[1], text_vector: w[2] };
        let c = combine_channels([s[0], s[1], s[2]], &weights).unwrap();
        let used: Vec<f64> = s.iter().zip(&w).filter(|(_, w)| **w > 0.0).filter_map(|(s, _)| *s).collect();
        if used.is_empty() {
            prop_assert_eq!(c, 0.0);
        } else {
            let lo = used.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = used.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
        }
    }

    #[test]
    fn rand_index_symmetric_and_label_free(
        a in prop::collection::vec(0usize..5, 2..60),
        shift in 1usize..10,
    ) {
        let b: Vec<usize> = a.iter().rev().cloned().collect();
        let r = rand_index(&a, &b).unwrap();
        prop_assert_eq!(r, rand_index(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&r));
        let renamed: Vec<usize> = a.iter().map(|x| (x + shift) * 3).collect();
        prop_assert_eq!(rand_index(&a, &renamed).unwrap(), 1.0);
    }

    #[test]
    fn dense_labels_preserve_partition(a in prop::collection::vec(0usize..20, 1..50)) {
        let d = dense_labels(&a);
        prop_assert_eq!(dense_labels(&d), d.clone());
        prop_assert_eq!(d[0], 0);
        for i in 0..a.len() {
            for j in 0..a.len() {
                prop_assert_eq!(a[i] == a[j], d[i] == d[j]);
            }
        }
        let k = d.iter().max().unwrap() + 1;
        let assignment = ClusterAssignment::new(&a, k, Method::KMeans, None);
        prop_assert_eq!(assignment.labels(), &d[..]);
    }

    #[test]
    fn context_vectors_ranked_and_sub_stochastic(
        words in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..40),
        top_n in 1usize..8,
    ) {
        let tokens: TokenList = words.iter().copied().collect();
        let cv = extract_context_vector(&tokens, top_n).unwrap();
        prop_assert!(cv.len() <= top_n);
        prop_assert!(cv.scores().sum::<f64>() <= 1.0 + 1e-12);
        for w in cv.entries().windows(2) {
            prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
        }
    }
}
