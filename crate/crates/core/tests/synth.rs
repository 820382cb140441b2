use ace_core::error::Error;
use ace_core::external::{clustering_accuracy, nmi};
use ace_core::stats::{dip_pvalue, pca_first_component};
use ace_core::synth::*;
use ace_core::IndexId;

fn silhouette(z: &ace_core::EmbeddingMatrix, rho: &ace_core::Partition) -> f64 {
    IndexId::SilhouetteEuclidean
        .evaluate(z, rho)
        .unwrap()
        .oriented
}

#[test]
fn far_separated_noiseless_trials_recover_truth() {
    let mut spec = SynthSpec::with_defaults(2, 200, 6, 4, 3);
    spec.separations = vec![50.0, 50.0];
    spec.label_noise = vec![0.0, 0.0];
    let b = generate_bundle(&spec).unwrap();
    let truth = b.truth().unwrap();
    assert_eq!(truth.sizes(), vec![50; 4]);
    for t in b.trials() {
        assert_eq!(nmi(&t.partition, truth).unwrap(), 1.0);
        assert!(silhouette(&t.embedding, &t.partition) > 0.9);
    }
}

#[test]
fn centers_sit_at_the_requested_distance() {
    let mut spec = SynthSpec::with_defaults(1, 4000, 5, 3, 9);
    spec.separations = vec![7.0];
    spec.label_noise = vec![0.0];
    let b = generate_bundle(&spec).unwrap();
    let t = &b.trials()[0];
    let mut sums = vec![vec![0.0; 5]; 3];
    let sizes = t.partition.sizes();
    for (row, &l) in t.embedding.iter_rows().zip(t.partition.labels()) {
        for (s, v) in sums[l].iter_mut().zip(row) {
            *s += v / sizes[l] as f64;
        }
    }
    for a in 0..3 {
        for c in a + 1..3 {
            let d: f64 = sums[a]
                .iter()
                .zip(&sums[c])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((d - 7.0).abs() < 0.15, "center distance {d}");
        }
    }
}

#[test]
fn label_noise_flips_the_requested_count() {
    let mut spec = SynthSpec::with_defaults(3, 300, 4, 3, 5);
    spec.label_noise = vec![0.0, 0.1, 0.3];
    let b = generate_bundle(&spec).unwrap();
    let mut last = f64::INFINITY;
    for (t, expected) in b.trials().iter().zip([0, 30, 90]) {
        // At these noise levels the identity matching is optimal, so the
        // accuracy shortfall counts the flips exactly.
        let acc = clustering_accuracy(b.truth().unwrap(), &t.partition).unwrap();
        assert_eq!(((1.0 - acc) * 300.0).round() as usize, expected);
        let score = nmi(&t.partition, b.truth().unwrap()).unwrap();
        assert!(score < last);
        last = score;
    }
}

#[test]
fn generation_is_deterministic() {
    let mut spec = SynthSpec::with_defaults(4, 100, 5, 3, 21);
    spec.corrupt = vec![1];
    spec.raw_dim = Some(3);
    let a = serde_json::to_string(&generate_bundle(&spec).unwrap()).unwrap();
    let b = serde_json::to_string(&generate_bundle(&spec.clone()).unwrap()).unwrap();
    assert_eq!(a, b);
    spec.seed = 22;
    assert_ne!(
        a,
        serde_json::to_string(&generate_bundle(&spec).unwrap()).unwrap()
    );
}

#[test]
fn corrupted_trials_look_unimodal() {
    let mut quiet = 0;
    for seed in 0..100 {
        let mut spec = SynthSpec::with_defaults(1, 300, 8, 3, seed);
        spec.corrupt = vec![0];
        let b = generate_bundle(&spec).unwrap();
        let t = &b.trials()[0];
        assert_eq!(t.partition.labels().len(), 300);
        let proj = pca_first_component(&t.embedding).unwrap();
        if dip_pvalue(&proj, 200, seed).unwrap().p_value > 0.05 {
            quiet += 1;
        }
    }
    assert!(
        quiet >= 90,
        "{quiet}/100 corrupted trials passed the dip test"
    );
}

#[test]
fn invalid_specs_are_rejected() {
    let ok = SynthSpec::with_defaults(3, 50, 4, 3, 0);
    type Edit = Box<dyn Fn(&mut SynthSpec)>;
    let cases: Vec<Edit> = vec![
        Box::new(|s| s.corrupt = vec![3]),
        Box::new(|s| s.separations[1] = 0.0),
        Box::new(|s| s.separations.pop().map(|_| ()).unwrap()),
        Box::new(|s| s.label_noise[0] = 1.0),
        Box::new(|s| s.d = 2),
        Box::new(|s| s.k = 1),
        Box::new(|s| s.m = 0),
    ];
    for f in cases {
        let mut s = ok.clone();
        f(&mut s);
        assert!(
            matches!(generate_bundle(&s), Err(Error::InvalidSpec(_))),
            "{s:?}"
        );
    }
    assert!(generate_bundle(&ok).is_ok());
}

#[test]
fn concentration_shrinks_contrast_and_index() {
    let stats = concentration_demo(100, &[2, 20, 200, 2000], 20, 1).unwrap();
    assert_eq!(stats.dims, vec![2, 20, 200, 2000]);
    assert!(
        stats.ratio_median.windows(2).all(|w| w[1] < w[0]),
        "{:?}",
        stats.ratio_median
    );
    assert!(stats.ratio_median.iter().all(|&r| r >= 1.0));
    assert!(
        stats.index_abs_median[3] < 0.25 * stats.index_abs_median[0],
        "{:?}",
        stats.index_abs_median
    );
}

#[test]
fn concentration_edge_cases() {
    let one = concentration_demo(30, &[5], 3, 2).unwrap();
    assert_eq!(one.ratio_median.len(), 1);
    assert!(one.ratio_median[0] >= 1.0);
    for (dims, reps) in [(vec![20, 2], 3), (vec![2, 2], 3), (vec![2], 0), (vec![], 3)] {
        assert!(matches!(
            concentration_demo(30, &dims, reps, 0),
            Err(Error::InvalidParams(_))
        ));
    }
}

#[test]
fn scale_mismatch_pair_defeats_paired_scores() {
    for seed in 0..10 {
        let b = make_scale_mismatch_pair(seed);
        let [a, bb] = b.trials() else { panic!() };
        let truth = b.truth().unwrap();
        assert!(silhouette(&a.embedding, &a.partition) > silhouette(&bb.embedding, &bb.partition));
        assert!(silhouette(&bb.embedding, &a.partition) < silhouette(&bb.embedding, &bb.partition));
        assert!(silhouette(&a.embedding, &a.partition) < silhouette(&a.embedding, &bb.partition));
        assert!(nmi(&bb.partition, truth).unwrap() > nmi(&a.partition, truth).unwrap());
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
    #[test]
    fn ratios_are_at_least_one(n in 4usize..30, p in 1usize..50, seed in 0u64..1000) {
        let s = concentration_demo(n, &[p], 2, seed).unwrap();
        proptest::prop_assert!(s.ratio_median[0] >= 1.0);
    }
}
