//! Property tests for structural invariants.

mod common;

use chrono::Duration;
use proptest::prelude::*;

use common::*;
use tsclust::cohort::{build_cohort, ActivityRecord, ChurnConfig, CohortConfig, SubjectAttributes, TelemetryStore};
use tsclust::dissim::{pairwise_matrix, Measure, MeasureConfig};
use tsclust::synthgen::{generate, BenchmarkSpec};
use tsclust::viz;
use tsclust::{agglomerate_ward, cut, DissimilarityMatrix, Partition, SubjectId, TimeSeries, VariableKind};

fn dense(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(0.01f64..100.0, k * (k - 1) / 2).prop_map(move |lower| {
        let mut d = vec![vec![0.0; k]; k];
        let mut it = lower.into_iter();
        for i in 0..k {
            for j in 0..i {
                let v = it.next().unwrap();
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        d
    })
}

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..20).prop_flat_map(dense)
}

fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3usize..12, 4usize..30).prop_flat_map(|(n, len)| {
        prop::collection::vec(prop::collection::vec(0.0f64..50.0, len), n)
    })
}

fn same_grouping(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn matrix_invariants(d: &DissimilarityMatrix) -> Result<(), TestCaseError> {
    let n = d.size();
    for i in 0..n {
        prop_assert_eq!(d.get(i, i), 0.0);
        for j in 0..n {
            let v = d.get(i, j);
            prop_assert!(v.is_finite() && v >= 0.0, "entry ({}, {}) = {}", i, j, v);
            prop_assert_eq!(v, d.get(j, i));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ward_heights_are_monotone(d in matrix_strategy()) {
        let dend = agglomerate_ward(&to_matrix(&d)).unwrap();
        let h = dend.heights();
        prop_assert_eq!(h.len(), d.len() - 1);
        prop_assert!(h.windows(2).all(|w| w[0] <= w[1]), "heights {:?}", h);
        prop_assert_eq!(dend.merges().last().unwrap().size, d.len());
    }

    #[test]
    fn cut_yields_exactly_k_clusters(d in matrix_strategy(), frac in 0.0f64..1.0) {
        let n = d.len();
        let k = 1 + ((n - 1) as f64 * frac) as usize;
        let dend = agglomerate_ward(&to_matrix(&d)).unwrap();
        let p = cut(&dend, k).unwrap();
        prop_assert_eq!(p.k(), k);
        prop_assert_eq!(p.len(), n);
        prop_assert!(p.sizes().iter().all(|&s| s > 0));
        prop_assert!(cut(&dend, n + 1).is_err());
        prop_assert!(cut(&dend, 0).is_err());
    }

    #[test]
    fn cuts_are_nested(d in matrix_strategy()) {
        let n = d.len();
        let dend = agglomerate_ward(&to_matrix(&d)).unwrap();
        for k in 1..n {
            let coarse = cut(&dend, k).unwrap();
            let fine = cut(&dend, k + 1).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if fine.labels()[i] == fine.labels()[j] {
                        prop_assert_eq!(coarse.labels()[i], coarse.labels()[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn ward_is_permutation_equivariant(d in (3usize..12).prop_flat_map(dense), seed in any::<u64>()) {
        let n = d.len();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng(seed));
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| d[i][j]).collect()).collect();
        let a = agglomerate_ward(&to_matrix(&d)).unwrap();
        let b = agglomerate_ward(&to_matrix(&permuted)).unwrap();
        for (x, y) in a.heights().iter().zip(b.heights()) {
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0), "heights differ: {} vs {}", x, y);
        }
        for k in 1..=n {
            let pa = cut(&a, k).unwrap();
            let pb = cut(&b, k).unwrap();
            let back: Vec<usize> = {
                let mut v = vec![0; n];
                for (pos, &orig) in perm.iter().enumerate() {
                    v[orig] = pb.labels()[pos];
                }
                v
            };
            prop_assert!(same_grouping(pa.labels(), &back), "k={}", k);
        }
    }

    #[test]
    fn every_measure_builds_a_valid_matrix(rows in rows_strategy()) {
        // Keep correlation measures defined: add a distinct ramp so no row is flat.
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.iter().enumerate().map(|(t, v)| v + (t * (i + 1)) as f64 * 0.01).collect())
            .collect();
        let set = series_set(&rows, VariableKind::Time);
        for m in [Measure::Euclidean, Measure::Cor, Measure::Cort, Measure::Dtw, Measure::Cid] {
            let d = pairwise_matrix(&set, &MeasureConfig::new(m)).unwrap();
            prop_assert_eq!(d.size(), rows.len());
            matrix_invariants(&d)?;
        }
    }

    #[test]
    fn nan_inputs_are_rejected(len in 2usize..20, at in 0usize..20) {
        let mut v = vec![1.0; len];
        v[at % len] = f64::NAN;
        let s = TimeSeries::new(SubjectId::new("x"), start(), VariableKind::Time, v);
        prop_assert!(s.is_err());
        let mut entries = vec![0.0, 1.0, 1.0, 0.0];
        entries[1 + at % 2] = f64::NAN;
        prop_assert!(DissimilarityMatrix::from_dense(2, entries).is_err());
    }
}

// ---- cohort ----

#[derive(Debug, Clone)]
struct Subject {
    install_offset: i64,
    last_offset: i64,
    active: Vec<bool>,
    purchase: Vec<bool>,
    has_attributes: bool,
}

fn subject_strategy() -> impl Strategy<Value = Subject> {
    (
        -40i64..5,
        10i64..80,
        prop::collection::vec(prop::bool::weighted(0.9), 21),
        prop::collection::vec(prop::bool::weighted(0.1), 21),
        prop::bool::weighted(0.95),
    )
        .prop_map(|(install_offset, last_offset, active, purchase, has_attributes)| Subject {
            install_offset,
            last_offset,
            active,
            purchase,
            has_attributes,
        })
}

fn records(subjects: &[Subject]) -> (Vec<ActivityRecord>, Vec<SubjectAttributes>) {
    let mut acts = Vec::new();
    let mut attrs = Vec::new();
    for (i, s) in subjects.iter().enumerate() {
        let id = SubjectId::new(format!("u{i:03}"));
        for d in 0..21 {
            if s.active[d] || s.purchase[d] {
                acts.push(ActivityRecord {
                    subject_id: id.clone(),
                    date: start() + Duration::days(d as i64),
                    time_played: if s.active[d] { 300.0 + d as f64 } else { 0.0 },
                    sessions: 1.0,
                    actions: 10.0,
                    purchase: if s.purchase[d] { 1.99 } else { 0.0 },
                });
            }
        }
        if s.has_attributes {
            attrs.push(SubjectAttributes {
                subject_id: id,
                install_date: start() + Duration::days(s.install_offset),
                level_at_start: 1 + i as u32 % 9,
                is_paying_user_at_start: i % 2 == 0,
                last_activity_date: start() + Duration::days(s.last_offset),
            });
        }
    }
    (acts, attrs)
}

/// Independent restatement of the inclusion rule.
fn qualifies(s: &Subject, kind: VariableKind) -> bool {
    if !s.has_attributes || s.install_offset >= 0 || s.last_offset <= 20 {
        return false;
    }
    if kind == VariableKind::Purchase {
        s.purchase.iter().any(|&b| b)
    } else {
        s.active.chunks(7).all(|w| w.iter().filter(|&&b| b).count() >= 6)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cohort_matches_independent_filter(
        subjects in prop::collection::vec(subject_strategy(), 1..25),
        purchase in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let kind = if purchase { VariableKind::Purchase } else { VariableKind::Time };
        let (mut acts, mut attrs) = records(&subjects);
        let cfg = CohortConfig::new(start(), 3, kind);
        let expected: Vec<String> = subjects
            .iter()
            .enumerate()
            .filter(|(_, s)| qualifies(s, kind))
            .map(|(i, _)| format!("u{i:03}"))
            .collect();
        let store = TelemetryStore::from_records(acts.clone(), attrs.clone()).unwrap();
        let built = build_cohort(&store, &cfg);
        if expected.is_empty() {
            prop_assert!(built.is_err());
            return Ok(());
        }
        let set = built.unwrap();
        let ids: Vec<String> = set.ids().iter().map(|s| s.to_string()).collect();
        prop_assert_eq!(&ids, &expected);
        for s in set.series() {
            prop_assert_eq!(s.len(), 21);
        }

        rand::seq::SliceRandom::shuffle(acts.as_mut_slice(), &mut rng(seed));
        rand::seq::SliceRandom::shuffle(attrs.as_mut_slice(), &mut rng(seed ^ 1));
        let shuffled = build_cohort(&TelemetryStore::from_records(acts, attrs).unwrap(), &cfg).unwrap();
        prop_assert_eq!(shuffled, set);
    }

    #[test]
    fn sampling_is_seeded(subjects in prop::collection::vec(subject_strategy(), 20..40), seed in 0u64..1000) {
        let (acts, attrs) = records(&subjects);
        let store = TelemetryStore::from_records(acts, attrs).unwrap();
        let eligible = subjects.iter().filter(|s| qualifies(s, VariableKind::Time)).count();
        prop_assume!(eligible >= 8);
        let mut cfg = CohortConfig::new(start(), 3, VariableKind::Time);
        cfg.sample_size = 4;
        cfg.rng_seed = seed;
        let a = build_cohort(&store, &cfg).unwrap();
        let b = build_cohort(&store, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), 4);
        let ids = a.ids();
        prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        // Different seeds must not always collapse to the same sample.
        let distinct = (1..=8u64)
            .map(|s| {
                cfg.rng_seed = seed + s * 7919;
                build_cohort(&store, &cfg).unwrap().ids()
            })
            .filter(|other| *other != ids)
            .count();
        prop_assert!(distinct > 0);
    }

    #[test]
    fn churn_is_monotone_in_checkpoint(
        lasts in prop::collection::vec(21i64..200, 2..30),
        gaps in prop::collection::vec(1i64..40, 1..6),
        window in 1u32..60,
        k in 1usize..4,
    ) {
        let p_end = start() + Duration::days(20);
        let mut cps = Vec::new();
        let mut at = p_end;
        for g in gaps {
            at += Duration::days(g);
            cps.push(at);
        }
        let cfg = ChurnConfig::new(cps.clone(), window, p_end).unwrap();
        let n = lasts.len();
        let k = k.min(n);
        let p = Partition::new((0..n).map(|i| i % k + 1).collect()).unwrap();
        let ids: Vec<SubjectId> = (0..n).map(|i| SubjectId::new(format!("c{i:03}"))).collect();
        let attrs = ids
            .iter()
            .zip(&lasts)
            .map(|(id, &l)| {
                (id.clone(), SubjectAttributes {
                    subject_id: id.clone(),
                    install_date: start() - Duration::days(10),
                    level_at_start: 1,
                    is_paying_user_at_start: false,
                    last_activity_date: start() + Duration::days(l),
                })
            })
            .collect();
        let table = tsclust::cohort::churn_table(&p, &ids, &attrs, &cfg).unwrap();
        for row in &table.ratios {
            prop_assert_eq!(row.len(), cps.len());
            prop_assert!(row.iter().all(|r| (0.0..=1.0).contains(r)));
            prop_assert!(row.windows(2).all(|w| w[0] <= w[1]), "{:?}", row);
        }
    }
}

// ---- synthetic data and rendering ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synthetic_truth_has_equal_clusters(seed in any::<u64>(), n in 2usize..12, which in 0usize..3) {
        let mut spec = match which {
            0 => BenchmarkSpec::shape_preset(seed),
            1 => BenchmarkSpec::shift_preset(seed),
            _ => BenchmarkSpec::sparse_preset(seed),
        };
        spec.n_per_cluster = n;
        let (set, truth) = generate(&spec).unwrap();
        prop_assert_eq!(truth.k(), spec.archetypes.len());
        prop_assert!(truth.sizes().iter().all(|&s| s == n));
        prop_assert_eq!(set.len(), n * spec.archetypes.len());
        prop_assert!(set.series().iter().all(|s| s.values().iter().all(|v| *v >= 0.0)));
        let (again, truth2) = generate(&spec).unwrap();
        prop_assert_eq!(again, set);
        prop_assert_eq!(truth2, truth);
    }

    #[test]
    fn svg_output_is_deterministic_and_well_formed(seed in any::<u64>(), k in 1usize..5, per_cluster in any::<bool>()) {
        let mut spec = BenchmarkSpec::shape_preset(seed);
        spec.n_per_cluster = 4;
        let (set, _) = generate(&spec).unwrap();
        let d = pairwise_matrix(&set, &MeasureConfig::new(Measure::Euclidean)).unwrap();
        let dend = agglomerate_ward(&d).unwrap();
        let p = cut(&dend, k).unwrap();
        let render = || -> Vec<String> {
            vec![
                viz::render_dendrogram(&dend, Some(k), "tree <&>").unwrap(),
                viz::render_cluster_means(&set, &p, set.event_boundaries(), "means").unwrap(),
                viz::render_cluster_heatmaps(&set, &p, per_cluster, Some(&dend), "heat").unwrap(),
                viz::render_weekly_boxplots(&set, &p, "box").unwrap(),
            ]
        };
        let first = render();
        prop_assert_eq!(&first, &render());
        for svg in &first {
            let doc = roxmltree::Document::parse(svg);
            prop_assert!(doc.is_ok(), "{:?}", doc.err());
            prop_assert_eq!(doc.unwrap().root_element().tag_name().name(), "svg");
        }
    }
}
