use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use rankbias::pool::{aggregate_labels, pool_queries, ModelQueryBias};
use rankbias::report::{build_report, OutputFormat};
use rankbias::{
    BiasReport, Category, Cutoff, GenderMagnitude, MagnitudeTable, Measure, MissingPolicy,
    RankedList, Run, TfMode,
};

fn tables() -> impl Strategy<Value = Vec<ModelQueryBias>> {
    let model = prop::collection::btree_map(0u8..30, prop_oneof![Just(0.0), -1.0f64..1.0], 0..30);
    prop::collection::vec(model, 1..4).prop_map(|models| {
        models
            .into_iter()
            .enumerate()
            .map(|(i, rab)| ModelQueryBias {
                model_tag: format!("m{i}"),
                rab: rab
                    .into_iter()
                    .map(|(q, v)| (format!("q{q:02}"), v))
                    .collect(),
            })
            .collect()
    })
}

/// Whether `qid` is among the `depth` most extreme queries of `table` in either direction.
fn selected_by(table: &ModelQueryBias, qid: &str, depth: usize) -> bool {
    let Some(&v) = table.rab.get(qid) else {
        return false;
    };
    let ahead_female = table
        .rab
        .iter()
        .filter(|(q, &x)| x < v || (x == v && q.as_str() < qid))
        .count();
    let ahead_male = table
        .rab
        .iter()
        .filter(|(q, &x)| x > v || (x == v && q.as_str() < qid))
        .count();
    ahead_female < depth || ahead_male < depth
}

proptest! {
    #[test]
    fn pool_matches_rescan(tables in tables(), depth in 1usize..12) {
        let pooled = pool_queries(&tables, depth);
        let all: BTreeSet<&String> = tables.iter().flat_map(|t| t.rab.keys()).collect();
        let expected: Vec<String> = all
            .into_iter()
            .filter(|q| tables.iter().any(|t| selected_by(t, q, depth)))
            .cloned()
            .collect();
        prop_assert_eq!(&pooled, &expected);

        let upper = 2 * depth * tables.len();
        let lower = tables.iter().map(|t| t.rab.len().min(depth)).max().unwrap_or(0);
        prop_assert!(pooled.len() <= upper && pooled.len() >= lower);
        prop_assert_eq!(pool_queries(&tables, depth), pooled);
    }

    #[test]
    fn labels_partition_queries(votes in prop::collection::btree_map(0u8..20, prop::collection::vec(0usize..4, 3), 1..20)) {
        let mut csv = String::from("query_id,annotator_id,category\n");
        for (q, vs) in &votes {
            for (a, v) in vs.iter().enumerate() {
                csv.push_str(&format!("q{q:02},a{a},{}\n", Category::ALL[*v].as_str()));
            }
        }
        let agg = aggregate_labels(csv.as_bytes(), 3).unwrap();
        let labeled: BTreeSet<String> = agg.labels.iter().map(|l| l.query_id.clone()).collect();
        let dropped: BTreeSet<String> = agg.dropped.iter().cloned().collect();
        prop_assert!(labeled.is_disjoint(&dropped));
        let union: BTreeSet<String> = labeled.union(&dropped).cloned().collect();
        let all: BTreeSet<String> = votes.keys().map(|q| format!("q{q:02}")).collect();
        prop_assert_eq!(union, all);
        for label in &agg.labels {
            let idx = Category::ALL.iter().position(|c| *c == label.category).unwrap();
            prop_assert!(label.vote_counts[idx] >= 2);
        }
    }
}

fn report_inputs() -> impl Strategy<Value = (Vec<Run>, Vec<MagnitudeTable>)> {
    let mags = prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), 10);
    let list = prop::collection::vec(0usize..10, 1..10);
    let run = prop::collection::vec(list, 3);
    (mags, run.clone(), run).prop_map(|(mags, a, b)| {
        let mut tf = MagnitudeTable::new(Measure::Tf, TfMode::Smoothed);
        let mut boolean = MagnitudeTable::new(Measure::Boolean, TfMode::Smoothed);
        for (i, (f, m)) in mags.into_iter().enumerate() {
            tf.insert(format!("d{i}"), GenderMagnitude::new(f, m))
                .unwrap();
            let flag = |x: f64| if x > 1.5 { 1.0 } else { 0.0 };
            boolean
                .insert(format!("d{i}"), GenderMagnitude::new(flag(f), flag(m)))
                .unwrap();
        }
        let make = |tag: &str, lists: Vec<Vec<usize>>| {
            let mut run = Run::new(tag);
            for (q, docs) in lists.into_iter().enumerate() {
                let unique: Vec<usize> = docs
                    .iter()
                    .copied()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                run.insert(RankedList::from_scored(
                    format!("q{q}"),
                    unique.iter().rev().map(|d| (format!("d{d}"), *d as f64)),
                ));
            }
            run
        };
        (vec![make("base", a), make("neural", b)], vec![tf, boolean])
    })
}

proptest! {
    #[test]
    fn report_is_deterministic_and_formats_agree((runs, tables) in report_inputs()) {
        let references = BTreeMap::from([("neural".to_string(), "base".to_string())]);
        let build = || build_report(&runs, &tables, &Cutoff::defaults(), &references, MissingPolicy::Strict).unwrap();
        let report = build();
        prop_assert_eq!(&report, &build());

        let emit = |format| {
            let mut out = Vec::new();
            report.emit(format, &mut out).unwrap();
            out
        };
        let csv = emit(OutputFormat::Csv);
        let json = emit(OutputFormat::Json);
        prop_assert_eq!(&csv, &emit(OutputFormat::Csv));

        let from_json = BiasReport::from_json(json.as_slice()).unwrap();
        prop_assert_eq!(&from_json, &report);
        let from_csv = BiasReport::from_csv(csv.as_slice()).unwrap();
        prop_assert_eq!(from_csv.rows.len(), report.rows.len());
        for (c, j) in from_csv.rows.iter().zip(&report.rows) {
            prop_assert_eq!((&c.model_tag, c.measure, c.tf_mode, c.metric, c.cutoff), (&j.model_tag, j.measure, j.tf_mode, j.metric, j.cutoff));
            prop_assert!((c.value - j.value).abs() <= 0.0005 + 1e-12);
            prop_assert_eq!(c.delta_vs_reference.is_some(), j.delta_vs_reference.is_some());
            prop_assert_eq!((c.n_queries, c.n_excluded), (j.n_queries, j.n_excluded));
        }
    }
}
