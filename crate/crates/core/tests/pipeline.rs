use ace_core::error::Error;
use ace_core::exec::Executor;
use ace_core::grouping::SubgroupOrigin;
use ace_core::indices::compute_score_matrix;
use ace_core::pipeline::*;
use ace_core::synth::{generate_bundle, SynthSpec};
use ace_core::*;

/// Splits jobs over scoped threads in interleaved order.
struct Threads(usize);

impl Executor for Threads {
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let job = &job;
        let mut parts: Vec<Vec<(usize, T)>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..self.0)
                .map(|w| {
                    s.spawn(move || {
                        (w..len)
                            .step_by(self.0)
                            .map(|i| (i, job(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut out: Vec<(usize, T)> = parts.drain(..).flatten().collect();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, t)| t).collect()
    }
}

fn quick(seed: u64) -> AceConfig {
    AceConfig {
        dip_replicates: 200,
        seed,
        ..Default::default()
    }
}

fn benchmark_bundle(seed: u64, n: usize) -> (SynthSpec, TrialBundle) {
    let mut spec = SynthSpec::with_defaults(10, n, 16, 5, seed);
    spec.corrupt = vec![2, 5, 8];
    let bundle = generate_bundle(&spec).unwrap();
    (spec, bundle)
}

fn assert_close(a: &[Option<f64>], b: &[Option<f64>], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= tol, "{x} vs {y}"),
            (None, None) => {}
            _ => panic!("missing mismatch: {x:?} vs {y:?}"),
        }
    }
}

#[test]
fn identical_embeddings_collapse_all_regimes() {
    let mut spec = SynthSpec::with_defaults(1, 200, 4, 3, 11);
    spec.separations = vec![12.0];
    let base = generate_bundle(&spec).unwrap();
    let t = &base.trials()[0];
    let mut noisy = t.partition.labels().to_vec();
    for l in noisy.iter_mut().step_by(7) {
        *l = (*l + 1) % 3;
    }
    let trials = vec![
        t.clone(),
        Trial::new(
            "noisy",
            t.embedding.clone(),
            Partition::canonicalize(&noisy).unwrap(),
        )
        .unwrap(),
    ];
    let bundle = TrialBundle::new(trials, None, base.truth().cloned()).unwrap();
    let r = ace(&bundle, &quick(3)).unwrap();
    assert_eq!(r.retained, vec![0, 1]);
    assert_eq!(r.subgroups.len(), 1);
    assert_close(&r.ace, &r.pooled, 1e-12);
    assert_close(&r.ace, &r.paired, 1e-12);
}

#[test]
fn corrupted_spaces_are_never_selected() {
    for seed in [1, 2, 3] {
        let (spec, bundle) = benchmark_bundle(seed, 300);
        let r = ace(&bundle, &quick(seed)).unwrap();
        for m in &r.selected_members {
            assert!(
                !spec.corrupt.contains(m),
                "seed {seed}: selected corrupted space {m}"
            );
        }
        for m in &spec.corrupt {
            assert!(
                !r.retained.contains(m),
                "seed {seed}: dip kept corrupted space {m}"
            );
        }
    }
}

#[test]
fn pure_noise_retains_nothing() {
    for seed in 0..5 {
        let mut spec = SynthSpec::with_defaults(5, 300, 8, 3, seed);
        spec.corrupt = (0..5).collect();
        let bundle = generate_bundle(&spec).unwrap();
        let cfg = quick(seed);
        assert!(
            matches!(ace(&bundle, &cfg), Err(Error::NoRetainedSpaces)),
            "seed {seed}"
        );
        let pooling = AceConfig {
            pool_without_dip: true,
            ..cfg
        };
        let direct = baselines(&bundle, &pooling, &ace_core::Sequential).unwrap();
        assert_eq!(direct.retained, (0..5).collect::<Vec<_>>());
        let r = ace(&bundle, &pooling).unwrap();
        assert!(r.retained.is_empty());
        assert_eq!(r.ace, direct.pooled);
        assert_eq!(r.selected_members, direct.retained);
    }
}

#[test]
fn report_invariants() {
    for seed in [4, 5] {
        let (_, bundle) = benchmark_bundle(seed, 200);
        let r = ace(&bundle, &quick(seed)).unwrap();
        let best = r.subgroups[r.selected].mean.unwrap();
        for (s, sg) in r.subgroups.iter().enumerate() {
            if sg.origin != SubgroupOrigin::Phase1Outlier || s == r.selected {
                assert!(sg.mean.unwrap() <= best);
            }
            let sum: f64 = sg.weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
        let members = &r.selected_members;
        for j in 0..bundle.len() {
            let vals: Vec<f64> = members
                .iter()
                .filter_map(|&m| r.scores.oriented(m, j))
                .collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = r.ace[j].unwrap();
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
        for m in &r.retained {
            assert!(r.subgroups.iter().any(|sg| sg.members.contains(m)));
        }
    }
}

#[test]
fn report_is_independent_of_executor() {
    let (_, bundle) = benchmark_bundle(1, 300);
    for cfg in [
        quick(1),
        AceConfig {
            link_method: ace_core::link::LinkMethod::Hits,
            ..quick(1)
        },
    ] {
        let a = ace_with(&bundle, &cfg, &ace_core::Sequential).unwrap();
        let b = ace_with(&bundle, &cfg, &Threads(4)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn pooled_averages_retained_rows() {
    let (_, bundle) = benchmark_bundle(7, 200);
    let r = ace(&bundle, &quick(7)).unwrap();
    assert_close(&r.pooled, &mean_rows(&r.scores, &r.retained), 0.0);
    let all = baselines(
        &bundle,
        &AceConfig {
            pool_without_dip: true,
            ..quick(7)
        },
        &ace_core::Sequential,
    )
    .unwrap();
    let every: Vec<usize> = (0..bundle.len()).collect();
    assert_close(&all.pooled, &mean_rows(&r.scores, &every), 0.0);
    assert_eq!(all.paired, r.paired);
}

#[test]
fn mean_rows_arithmetic() {
    let z = EmbeddingMatrix::new(4, 1, vec![0.0, 1.0, 10.0, 11.0]).unwrap();
    let rho = Partition::canonicalize(&[0, 0, 1, 1]).unwrap();
    let bundle = TrialBundle::new(
        vec![
            Trial::new("a", z.clone(), rho.clone()).unwrap(),
            Trial::new("b", z, rho).unwrap(),
        ],
        None,
        None,
    )
    .unwrap();
    let mut s = compute_score_matrix(&bundle, IndexId::CalinskiHarabasz);
    for (c, v) in [0.0, 1.0, 2.0, 3.0].into_iter().enumerate() {
        s.cells[c] = Some(IndexValue {
            raw: v,
            oriented: v,
        });
    }
    assert_eq!(mean_rows(&s, &[0, 1]), vec![Some(1.0), Some(2.0)]);
    s.cells[2] = None;
    assert_eq!(mean_rows(&s, &[0, 1]), vec![Some(0.0), Some(2.0)]);
}

#[test]
fn raw_scores() {
    let mut spec = SynthSpec::with_defaults(3, 120, 4, 3, 8);
    spec.raw_dim = Some(4);
    let with_raw = generate_bundle(&spec).unwrap();
    let raw = with_raw.raw_input().unwrap().clone();
    let same: Vec<Trial> = with_raw
        .trials()
        .iter()
        .map(|t| Trial::new(t.id.clone(), raw.clone(), t.partition.clone()).unwrap())
        .collect();
    let bundle = TrialBundle::new(same, Some(raw), None).unwrap();
    assert_eq!(
        raw_score(&bundle, IndexId::Dunn).unwrap(),
        paired_score(&bundle, IndexId::Dunn)
    );
    spec.raw_dim = None;
    let bare = generate_bundle(&spec).unwrap();
    assert!(matches!(
        raw_score(&bare, IndexId::Dunn),
        Err(Error::MissingRawInput)
    ));
}

#[test]
fn regime_table_extremes() {
    let (_, bundle) = benchmark_bundle(9, 200);
    let mut r = ace(&bundle, &quick(9)).unwrap();
    let (nmis, accs) = external_scores(&bundle, bundle.truth().unwrap()).unwrap();
    r.ace = nmis.iter().map(|&v| Some(v)).collect();
    r.pooled = nmis.iter().map(|&v| Some(-v)).collect();
    let table = regime_table(&r, &nmis, &accs).unwrap();
    let row = |reg, ext| {
        *table
            .rows
            .iter()
            .find(|x| x.regime == reg && x.external == ext)
            .unwrap()
    };
    let ace_nmi = row(Regime::Ace, External::Nmi);
    assert_eq!((ace_nmi.r_s, ace_nmi.tau_b), (Some(1.0), Some(1.0)));
    assert_eq!(row(Regime::Pooled, External::Nmi).r_s, Some(-1.0));
    assert!(table.rows.iter().all(|x| x.regime != Regime::Raw));
    assert_eq!(table.rows.len(), 6);
    assert!(matches!(
        evaluate_regimes(
            &r,
            None,
            &TrialBundle::new(bundle.trials().to_vec(), None, None).unwrap()
        ),
        Err(Error::MissingTruth)
    ));
}

#[test]
fn config_validation() {
    let bundle = benchmark_bundle(1, 100).1;
    assert!(matches!(
        ace(
            &bundle,
            &AceConfig {
                dip_alpha: 1.5,
                ..quick(0)
            }
        ),
        Err(Error::InvalidAlpha(_))
    ));
    assert!(matches!(
        ace(
            &bundle,
            &AceConfig {
                damping: 1.0,
                ..quick(0)
            }
        ),
        Err(Error::InvalidParams(_))
    ));
    let one = TrialBundle::new(bundle.trials()[..1].to_vec(), None, None).unwrap();
    assert!(matches!(
        ace(&one, &quick(0)),
        Err(Error::TooFewPoints { .. })
    ));
    let json = r#"{"index":"dunn","seed":5}"#;
    let cfg: AceConfig = serde_json::from_str(json).unwrap();
    assert_eq!(
        cfg,
        AceConfig {
            index: IndexId::Dunn,
            seed: 5,
            ..Default::default()
        }
    );
    assert!(serde_json::from_str::<AceConfig>(r#"{"bogus":1}"#).is_err());
}
