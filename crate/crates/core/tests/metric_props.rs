use proptest::prelude::*;

use rankbias::metrics::{qarab, qrab};
use rankbias::{model_bias, query_bias, Cutoff, GenderMagnitude, Measure, TfMode};

fn t(n: usize) -> Cutoff {
    Cutoff::new(n).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..5.0], 1..40)
}

fn list() -> impl Strategy<Value = Vec<GenderMagnitude>> {
    prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 1..40).prop_map(|v| {
        v.into_iter()
            .map(|(f, m)| GenderMagnitude::new(f, m))
            .collect()
    })
}

proptest! {
    #[test]
    fn qarab_is_mean_of_qrab(v in values(), cut in 1usize..50) {
        let k = cut.min(v.len());
        let naive = (1..=k).map(|x| qrab(&v, t(x)).unwrap()).sum::<f64>() / k as f64;
        prop_assert!((qarab(&v, t(cut)).unwrap() - naive).abs() <= 1e-12);
    }

    #[test]
    fn documents_below_cutoff_are_ignored(v in values(), tail in values(), cut in 1usize..50) {
        prop_assume!(v.len() >= cut);
        let mut longer = v.clone();
        longer.extend(tail);
        prop_assert_eq!(qrab(&v, t(cut)), qrab(&longer, t(cut)));
        prop_assert_eq!(qarab(&v, t(cut)), qarab(&longer, t(cut)));
    }

    #[test]
    fn more_male_never_lowers_bias(
        m in list(),
        pos in any::<prop::sample::Index>(),
        extra in 0.0f64..3.0,
        cut in 1usize..50,
    ) {
        let i = pos.index(m.len());
        let mut raised = m.clone();
        raised[i].male += extra;
        let a = query_bias("q", &m, t(cut)).unwrap();
        let b = query_bias("q", &raised, t(cut)).unwrap();
        prop_assert!(b.rab >= a.rab);
        prop_assert!(b.arab >= a.arab);
    }

    #[test]
    fn swapping_genders_negates(m in list(), cut in 1usize..50) {
        let swapped: Vec<_> = m.iter().map(|g| g.swapped()).collect();
        let a = query_bias("q", &m, t(cut)).unwrap();
        let b = query_bias("q", &swapped, t(cut)).unwrap();
        prop_assert_eq!(a.rab, -b.rab);
        prop_assert_eq!(a.arab, -b.arab);
    }

    #[test]
    fn model_value_lies_within_query_values(lists in prop::collection::vec(list(), 1..12), cut in 1usize..50) {
        let biases: Vec<_> = lists
            .iter()
            .enumerate()
            .map(|(i, l)| query_bias(&format!("q{i:02}"), l, t(cut)).unwrap())
            .collect();
        let model = model_bias("m", Measure::Tf, Some(TfMode::Smoothed), t(cut), &biases).unwrap();
        let lo = biases.iter().map(|q| q.rab).fold(f64::INFINITY, f64::min);
        let hi = biases.iter().map(|q| q.rab).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(model.rab >= lo - 1e-12 && model.rab <= hi + 1e-12);
        prop_assert_eq!(model.n_queries, lists.len());

        let mut reversed = biases.clone();
        reversed.reverse();
        let again = model_bias("m", Measure::Tf, Some(TfMode::Smoothed), t(cut), &reversed).unwrap();
        prop_assert_eq!(model, again);
    }
}
