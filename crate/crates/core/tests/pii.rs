mod common;

use std::collections::BTreeSet;

use common::*;
use fm_core::pii::{
    assess, classify, reduce, Assertion, Classification, Holder, ProprietorshipLedger, Term, TrivialityRules,
    Truth,
};
use proptest::prelude::*;

fn oracle_class(n: usize) -> Classification {
    match n {
        0 => Classification::NotPii,
        1 => Classification::Apii,
        arity => Classification::Cpii { arity },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn classification_matches_oracle(a in assertion()) {
        let r = people_registry();
        let c = classify(&a, &r);
        let expected = oracle_referents(&a, &r);
        prop_assert_eq!(&c.record.referents, &expected);
        prop_assert_eq!(c.record.classification, oracle_class(expected.len()));
    }

    #[test]
    fn truth_does_not_matter(a in assertion(), t in truth()) {
        let r = people_registry();
        let flipped = a.clone().with_truth(t);
        prop_assert_eq!(classify(&a, &r), classify(&flipped, &r));
    }

    #[test]
    fn repeating_an_argument_changes_nothing(a in assertion(), k in 0usize..8) {
        prop_assume!(!a.arguments.is_empty());
        let r = people_registry();
        let mut b = a.clone();
        b.arguments.push(a.arguments[k % a.arguments.len()].clone());
        prop_assert_eq!(classify(&a, &r).record, classify(&b, &r).record);
    }

    #[test]
    fn reduction_law((a, n) in cpii_assertion()) {
        let r = people_registry();
        let c = classify(&a, &r);
        prop_assert_eq!(c.record.classification, Classification::Cpii { arity: n });
        let red = reduce(&c.record, &a, &r).unwrap();
        prop_assert_eq!(red.parts.len(), n);
        let mut union = BTreeSet::new();
        for p in &red.parts {
            prop_assert_eq!(p.record.classification, Classification::Apii);
            // each part names its own person and nobody else
            let again = classify(&p.assertion, &r);
            prop_assert_eq!(&again.record.referents, &BTreeSet::from([p.person.clone()]));
            union.extend(p.record.referents.iter().cloned());
        }
        prop_assert_eq!(union, c.record.referents);
    }
}

#[test]
fn john_and_mary() {
    let r = registry();
    let a = Assertion::new("love", "love", vec![Term::Name("John".into()), Term::Name("Mary".into())])
        .with_text("John and Mary are in love");
    let c = classify(&a, &r);
    assert_eq!(c.record.classification, Classification::Cpii { arity: 2 });
    let red = reduce(&c.record, &a, &r).unwrap();
    let texts: Vec<&str> = red.parts.iter().map(|p| p.assertion.text.as_str()).collect();
    assert_eq!(texts, ["John and someone are in love", "Someone and Mary are in love"]);
    assert_eq!(red.parts[0].person, "john");
    assert_eq!(red.parts[1].person, "mary");
}

#[test]
fn loves_reads_active_and_passive() {
    let r = registry();
    let a = Assertion::new("l", "loves", vec![Term::Name("John".into()), Term::Name("Mary".into())])
        .with_text("John loves Mary");
    let c = classify(&a, &r);
    let red = reduce(&c.record, &a, &r).unwrap();
    let proj: Vec<&str> = red.parts.iter().map(|p| p.projection.as_str()).collect();
    assert_eq!(proj, ["loves(John)", "being-loved(Mary)"]);
}

#[test]
fn corpus_fixture() {
    let r = registry();
    let corpus = fm_core::dsl::parse_corpus(&fixture("corpus.txt")).unwrap();
    let rules = TrivialityRules::default();
    let got: Vec<(String, String, bool)> = corpus
        .iter()
        .map(|a| {
            let c = assess(a, &r, &rules, None);
            (a.id.clone(), c.record.classification.to_string(), c.record.trivial)
        })
        .collect();
    let want = [
        ("love", "CPII(2)", false),
        ("loves", "CPII(2)", false),
        ("wounded", "APII", false),
        ("give", "CPII(2)", false),
        ("airport", "NotPII", false),
        ("honest", "APII", false),
        ("dishonest", "APII", false),
        ("identity", "APII", true),
        ("hands", "APII", true),
        ("record", "APII", false),
    ];
    let want: Vec<(String, String, bool)> =
        want.iter().map(|(a, b, c)| (a.to_string(), b.to_string(), *c)).collect();
    assert_eq!(got, want);
}

#[test]
fn misinformation_is_still_pii() {
    let r = registry();
    let t = Assertion::new("t", "honest", vec![Term::Name("John".into())]).with_truth(Truth::True);
    let f = t.clone().with_truth(Truth::False);
    assert_eq!(classify(&t, &r).record, classify(&f, &r).record);
}

// ledger

#[derive(Debug, Clone)]
enum Op {
    Possess(usize, bool, usize),
    Release(usize, bool, usize),
    AddProprietor(usize, usize),
    RemoveProprietor(usize, usize),
    Transfer(usize, usize, usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..8, any::<bool>(), 0usize..8).prop_map(|(r, p, h)| Op::Possess(r, p, h)),
        (0usize..8, any::<bool>(), 0usize..8).prop_map(|(r, p, h)| Op::Release(r, p, h)),
        (0usize..8, 0usize..8).prop_map(|(r, p)| Op::AddProprietor(r, p)),
        (0usize..8, 0usize..8).prop_map(|(r, p)| Op::RemoveProprietor(r, p)),
        (0usize..8, 0usize..8, 0usize..8).prop_map(|(r, a, b)| Op::Transfer(r, a, b)),
    ]
}

fn holder(person: bool, i: usize) -> Holder {
    if person {
        Holder::Person(PERSON_NAMES[i % PERSON_NAMES.len()].to_lowercase())
    } else {
        Holder::Entity(["acme", "bank", "clinic"][i % 3].to_owned())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn proprietors_never_change(
        corpus in prop::collection::vec(cpii_assertion(), 1..5),
        ops in prop::collection::vec(op(), 0..40),
    ) {
        let r = people_registry();
        let records: Vec<_> = corpus
            .iter()
            .enumerate()
            .map(|(i, (a, _))| {
                let mut a = a.clone();
                a.id = format!("r{i}");
                classify(&a, &r).record
            })
            .collect();
        let mut ledger = ProprietorshipLedger::new();
        for rec in &records {
            ledger = ledger.register(rec).unwrap();
        }
        let owners = |l: &ProprietorshipLedger| -> Vec<BTreeSet<String>> {
            records.iter().map(|rec| l.get(&rec.assertion).unwrap().proprietors.clone()).collect()
        };
        let initial = owners(&ledger);
        for (i, rec) in records.iter().enumerate() {
            prop_assert_eq!(&initial[i], &rec.referents);
        }
        for op in ops {
            let before = ledger.clone();
            let pick = |k: usize| &records[k % records.len()];
            let res = match &op {
                Op::Possess(k, p, h) => {
                    let res = ledger.record_possession(pick(*k), holder(*p, *h));
                    if !p {
                        prop_assert!(res.is_ok(), "entity possession refused: {op:?}");
                    }
                    res
                }
                Op::Release(k, p, h) => ledger.release_possession(&pick(*k).assertion, &holder(*p, *h)),
                Op::AddProprietor(k, p) => {
                    let res = ledger.add_proprietor(&pick(*k).assertion, PERSON_NAMES[p % 7]);
                    prop_assert_eq!(res.as_ref().map_err(|e| e.code()).err(), Some("TRANSFER_FORBIDDEN"));
                    res
                }
                Op::RemoveProprietor(k, p) => {
                    let res = ledger.remove_proprietor(&pick(*k).assertion, PERSON_NAMES[p % 7]);
                    prop_assert!(res.is_err());
                    res
                }
                Op::Transfer(k, a, b) => {
                    let res = ledger.transfer_proprietorship(
                        &pick(*k).assertion,
                        PERSON_NAMES[a % 7],
                        PERSON_NAMES[b % 7],
                    );
                    prop_assert!(res.is_err());
                    res
                }
            };
            // operations never mutate their input
            prop_assert_eq!(&ledger, &before);
            if let Ok(next) = res {
                ledger = next;
            }
            prop_assert_eq!(owners(&ledger), initial.clone());
        }
    }
}

#[test]
fn not_pii_cannot_be_registered() {
    let r = registry();
    let a = Assertion::new("x", "busy_airport", vec![Term::Name("John F. Kennedy".into())]);
    let rec = classify(&a, &r).record;
    assert_eq!(ProprietorshipLedger::new().register(&rec).unwrap_err().code(), "NOT_PII");
}

#[test]
fn one_person_named_many_times_is_atomic() {
    let r = people_registry();
    for k in 1..=10 {
        let a = Assertion::new("a", "met", vec![Term::Name("Alice".into()); k]);
        assert_eq!(classify(&a, &r).record.classification, Classification::Apii, "k = {k}");
    }
}

#[test]
fn shared_names_are_not_resolved() {
    let r = people_registry();
    let a = Assertion::new("a", "met", vec![Term::Name("Sam".into())]);
    let c = classify(&a, &r);
    assert_eq!(c.record.classification, Classification::NotPii);
    assert!(c.warnings.iter().any(|w| w.code == "AMBIGUOUS_NAME"));
}

#[test]
fn ledger_json_round_trips() {
    let r = registry();
    let a = Assertion::new("g", "give", vec![Term::Name("John".into()), Term::Name("George".into())]);
    let rec = classify(&a, &r).record;
    let l =
        ProprietorshipLedger::new().record_possession(&rec, Holder::Entity("hospital_corp".into())).unwrap();
    let text = serde_json::to_string(&l).unwrap();
    assert_eq!(serde_json::from_str::<ProprietorshipLedger>(&text).unwrap(), l);
}
