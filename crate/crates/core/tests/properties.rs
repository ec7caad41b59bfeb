use proptest::prelude::*;

use subword_lab::analysis::{pearson, spearman};
use subword_lab::bpe::pretokenize::normalize;
use subword_lab::bpe::{train_bpe, BpeModel, CachedEncoder, Subword, Vocabulary};
use subword_lab::extraction::overlap;

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-eäß]{1,6}[.,!]?", 1..8).prop_map(|w| w.join(" "))
}

fn corpus() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(sentence(), 2..25)
}

fn trained(sentences: &[String], extra: usize) -> Option<BpeModel> {
    let probe = train_bpe(sentences.iter().map(String::as_str), usize::MAX).ok()?;
    train_bpe(sentences.iter().map(String::as_str), probe.alphabet().len() + extra).ok()
}

fn vocabulary() -> impl Strategy<Value = Vocabulary> {
    prop::collection::vec(("[a-f]{1,3}", any::<bool>()), 1..30).prop_map(|items| {
        let mut v = Vocabulary::new();
        for (t, c) in items {
            v.insert(Subword::new(t, c));
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decode_inverts_encode(train in corpus(), probe in sentence(), extra in 1usize..80) {
        let Some(model) = trained(&train, extra) else { return Ok(()) };
        for s in train.iter().chain([&probe]) {
            prop_assert_eq!(model.encode(s).decode().text, normalize(s));
        }
    }

    #[test]
    fn longer_merge_prefix_never_adds_tokens(train in corpus(), extra in 1usize..80) {
        let Some(model) = trained(&train, extra) else { return Ok(()) };
        let count = |m: &BpeModel| {
            let mut e = CachedEncoder::new(m);
            train.iter().map(|s| e.count(s)).sum::<usize>()
        };
        let mut last = usize::MAX;
        for k in 0..=model.merges().len() {
            let c = count(&model.truncated(k));
            prop_assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn merge_file_round_trips(train in corpus(), extra in 1usize..80) {
        let Some(model) = trained(&train, extra) else { return Ok(()) };
        let text = model.save_merges();
        let back = BpeModel::load_merges(&text).unwrap();
        prop_assert_eq!(back.save_merges(), text);
        prop_assert_eq!(back.vocab(), model.vocab());
        for s in &train {
            prop_assert_eq!(back.encode(s), model.encode(s));
        }
    }

    #[test]
    fn vocabulary_file_round_trips(v in vocabulary()) {
        let back = Vocabulary::from_file_str(&v.to_file_string()).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(a in vocabulary(), b in vocabulary()) {
        let ab = overlap(&a, &b).unwrap();
        prop_assert_eq!(ab, overlap(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(overlap(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn correlation_ignores_positive_affine_maps(
        xy in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..30),
        a in 0.01f64..100.0,
        b in -1e3f64..1e3,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        if let (Ok(p), Ok(q)) = (pearson(&x, &y), pearson(&moved, &y)) {
            prop_assert!((p - q).abs() < 1e-9, "{p} vs {q}");
        }
        if let (Ok(p), Ok(q)) = (spearman(&x, &y), spearman(&moved, &y)) {
            prop_assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }
}
