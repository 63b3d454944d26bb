mod common;

use fewshot_hs::corpus::{GroupId, PostRecord, Source, Split, TargetType};
use fewshot_hs::scheme::{all_variants, expected_prediction, linearize, parse, SchemeConfig};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[a-z]{2,10}".prop_filter("reserved answer", |w| w != "none" && w != "yes" && w != "no")
}

fn group() -> impl Strategy<Value = GroupId> {
    prop_oneof![
        prop::sample::select(vec!["women", "black folks", "jewish folks", "muslims", "trans women", "unspecified"])
            .prop_map(|g| GroupId::new(g).unwrap()),
        (word(), word()).prop_map(|(a, b)| GroupId::new(&format!("{a} {b}")).unwrap()),
    ]
}

/// Records satisfying the SBIC label invariants.
fn sbic_record() -> impl Strategy<Value = PostRecord> {
    (
        "[ -~]{0,80}",
        0..4u8,
        prop::collection::vec(group(), 1..4),
        prop::option::of(prop::collection::vec(word(), 1..6).prop_map(|w| w.join(" "))),
    )
        .prop_map(|(text, kind, groups, implication)| {
            let mut dedup: Vec<GroupId> = Vec::new();
            for g in groups {
                if !dedup.contains(&g) {
                    dedup.push(g);
                }
            }
            let (offensive, target_type) = match kind {
                0 => (false, TargetType::None),
                1 => (true, TargetType::None),
                2 => (true, TargetType::Individual),
                _ => (true, TargetType::Group),
            };
            let hs = target_type == TargetType::Group;
            PostRecord {
                id: "p".into(),
                text,
                offensive,
                target_type,
                groups: if hs { dedup } else { Vec::new() },
                implication: if hs { implication } else { None },
                hs,
                source: Source::Sbic,
                split: Split::TrainPool,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn round_trip_every_scheme(r in sbic_record()) {
        prop_assert!(r.check_invariants().is_ok());
        for c in all_variants() {
            let ex = linearize(&r, &c).unwrap();
            let p = parse(&ex.output, &c);
            prop_assert!(p.valid, "{}: {}", c, ex.output);
            prop_assert_eq!(p, expected_prediction(&r, &c));
        }
    }

    #[test]
    fn parse_is_total(s in "\\PC{0,120}", idx in 0usize..8) {
        let c = &all_variants()[idx];
        let p = parse(&s, c);
        prop_assert_eq!(&p.raw, &s);
        if !p.valid {
            prop_assert!(!p.scored_hs());
        }
    }

    #[test]
    fn case_folding_keeps_validity(r in sbic_record()) {
        let c = SchemeConfig::full();
        let out = linearize(&r, &c).unwrap().output;
        let upper = parse(&out.to_ascii_uppercase(), &c);
        prop_assert!(upper.valid);
        prop_assert_eq!(upper.hs, Some(r.hs));
        prop_assert_eq!(upper.target_type, Some(r.target_type));
    }
}

#[test]
fn aggregated_records_round_trip() {
    let records = common::aggregated_sbic(1200, 11);
    assert!(records.len() >= 1000);
    for r in &records {
        r.check_invariants().unwrap();
        for c in all_variants() {
            let ex = linearize(r, &c).unwrap();
            let p = parse(&ex.output, &c);
            assert!(p.valid, "{c}: {}", ex.output);
            assert_eq!(p, expected_prediction(r, &c));
        }
    }
}
