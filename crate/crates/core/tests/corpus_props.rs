use proptest::prelude::*;

use rankbias::corpus::{compute_magnitude_table, LexiconCounts};
use rankbias::runs::{parse_trec_run, truncate};
use rankbias::{
    magnitude, Corpus, Document, GenderLexicon, Measure, RankMode, RankedList, Run, TfMode,
};

fn lexicon() -> GenderLexicon {
    GenderLexicon::new(["she", "her", "woman"], ["he", "his", "man"]).unwrap()
}

fn text() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec![
        "she", "her", "woman", "he", "his", "man", "nurse", "doctor", "the", "a", "HER", "He",
    ]);
    let sep = prop::sample::select(vec![" ", ", ", ". ", "-", "'"]);
    prop::collection::vec((word, sep), 0..30)
        .prop_map(|parts| parts.into_iter().map(|(w, s)| format!("{w}{s}")).collect())
}

const MODES: [(Measure, TfMode); 3] = [
    (Measure::Tf, TfMode::Smoothed),
    (Measure::Tf, TfMode::PaperLiteral),
    (Measure::Boolean, TfMode::Smoothed),
];

proptest! {
    #[test]
    fn modes_agree_on_presence(text in text()) {
        let lex = lexicon();
        let doc = Document::new("d", text);
        let boolean = magnitude(&doc, &lex, Measure::Boolean, TfMode::Smoothed);
        let smoothed = magnitude(&doc, &lex, Measure::Tf, TfMode::Smoothed);
        let literal = magnitude(&doc, &lex, Measure::Tf, TfMode::PaperLiteral);
        for (b, s, l) in [
            (boolean.female, smoothed.female, literal.female),
            (boolean.male, smoothed.male, literal.male),
        ] {
            prop_assert!(b == 0.0 || b == 1.0);
            prop_assert_eq!(s > 0.0, b == 1.0);
            prop_assert!(l >= 0.0);
            prop_assert!(l == 0.0 || b == 1.0);
            prop_assert!(l <= s);
        }
    }

    #[test]
    fn swapping_lexicon_swaps_magnitudes(text in text()) {
        let lex = lexicon();
        let doc = Document::new("d", text);
        for (measure, mode) in MODES {
            let a = magnitude(&doc, &lex, measure, mode);
            let b = magnitude(&doc, &lex.swapped(), measure, mode);
            prop_assert_eq!(a.swapped(), b);
        }
    }

    #[test]
    fn repeated_text_doubles_counts(text in text()) {
        let lex = lexicon();
        let once = LexiconCounts::from_text(&text, &lex);
        let twice = LexiconCounts::from_text(&format!("{text} {text}"), &lex);
        for (word, count) in &once.female {
            prop_assert_eq!(twice.female[word], 2 * count);
        }
        for (word, count) in &once.male {
            prop_assert_eq!(twice.male[word], 2 * count);
        }
        prop_assert_eq!(once.female.len(), twice.female.len());
        prop_assert_eq!(once.male.len(), twice.male.len());
    }

    #[test]
    fn table_ignores_document_order(texts in prop::collection::vec(text(), 1..15), seed in any::<u64>()) {
        let lex = lexicon();
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), t.clone()))
            .collect();
        let mut shuffled = docs.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        shuffled.reverse();
        let a = Corpus::new(docs).unwrap();
        let b = Corpus::new(shuffled).unwrap();
        for (measure, mode) in MODES {
            let ta = compute_magnitude_table(a.stream(), &lex, measure, mode).unwrap();
            let tb = compute_magnitude_table(b.stream(), &lex, measure, mode).unwrap();
            prop_assert_eq!(ta, tb);
        }
    }

    #[test]
    fn magnitude_cache_round_trips(texts in prop::collection::vec(text(), 1..10)) {
        let lex = lexicon();
        let corpus = Corpus::new(
            texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), t.clone())).collect(),
        )
        .unwrap();
        for (measure, mode) in MODES {
            let table = compute_magnitude_table(corpus.stream(), &lex, measure, mode).unwrap();
            let mut first = Vec::new();
            table.write_tsv(&mut first).unwrap();
            let back = rankbias::MagnitudeTable::read_tsv(first.as_slice()).unwrap();
            let mut second = Vec::new();
            back.write_tsv(&mut second).unwrap();
            prop_assert_eq!(&first, &second);
            for (id, m) in table.iter() {
                let r = back.get(id).unwrap();
                prop_assert!((m.female - r.female).abs() <= 1e-8 * m.female.max(1.0));
                prop_assert!((m.male - r.male).abs() <= 1e-8 * m.male.max(1.0));
            }
        }
    }
}

fn run_strategy() -> impl Strategy<Value = Run> {
    let list = (0usize..6, prop::collection::vec(-50.0f64..50.0, 1..12));
    prop::collection::vec(list, 1..6).prop_map(|lists| {
        let mut run = Run::new("model");
        for (q, mut scores) in lists {
            scores.sort_by(|a, b| b.total_cmp(a));
            run.insert(RankedList::from_scored(
                format!("q{q}"),
                scores
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| (format!("d{i}"), s)),
            ));
        }
        run
    })
}

proptest! {
    #[test]
    fn trec_round_trip_is_a_fixed_point(run in run_strategy()) {
        let mut first = Vec::new();
        run.write_trec(&mut first).unwrap();
        let parsed = parse_trec_run(first.as_slice(), RankMode::Strict).unwrap();
        prop_assert_eq!(&parsed, &run);
        let mut second = Vec::new();
        parsed.write_trec(&mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn truncation_composes(run in run_strategy(), a in 1usize..15, b in 1usize..15) {
        for list in run.lists.values() {
            let twice = truncate(&truncate(list, a), b);
            prop_assert_eq!(&twice, &truncate(list, a.min(b)));
            prop_assert_eq!(truncate(list, a).len(), a.min(list.len()));
            prop_assert!(truncate(list, a).entries.iter().zip(&list.entries).all(|(x, y)| x == y));
        }
    }
}
