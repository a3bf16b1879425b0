//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use fm_core::dsl;
use fm_core::model::{assemble, Declaration};
use fm_core::pii::{classify, reduce, Assertion, Classification, Holder, ProprietorshipLedger, Term, Truth};
use fm_core::policy::{check_model, check_trace, PiiContext};
use fm_core::sim;
use fm_core::validate::validate;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const HEALTHCARE_BUDGET: Duration = Duration::from_secs(1);
const GENERATED_MODELS: usize = 100;
const ROUND_TRIP_MODELS: usize = 500;
const FUZZ_INPUTS: usize = 10_000;
const CORPUS_SIZE: usize = 1000;
const CPII_CASES: usize = 300;
const LEDGER_RUNS: usize = 200;

fn runner() -> TestRunner {
    TestRunner::new_with_rng(Config::default(), TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Draws `n` values from a strategy with a fixed seed.
fn sample<S: Strategy>(s: S, n: usize) -> Vec<S::Value> {
    let mut r = runner();
    (0..n).map(|_| s.new_tree(&mut r).expect("strategy").current()).collect()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn healthcare() -> Outcome {
    let m = model("healthcare.fm");
    let start = Instant::now();
    for k in 0..=5 {
        let (labels, report) = healthcare_labels(&m, k);
        if labels != healthcare_expected(k) {
            return Err(format!("k={k}: got {labels:?}"));
        }
        if !report.is_ok() {
            return Err(format!("k={k}: {report:?}"));
        }
    }
    let elapsed = start.elapsed();
    let (ok, fail3) = (healthcare_labels(&m, 0).0, healthcare_labels(&m, 3).0);
    let pos = |v: &[String], l: &str| v.iter().position(|x| x == l);
    if !(pos(&ok, "E7") < pos(&ok, "E8") && pos(&ok, "E6").is_none()) {
        return Err(format!("success run: {ok:?}"));
    }
    let e5 = fail3.iter().filter(|l| *l == "E5").count();
    if e5 != 3 || fail3.last().map(String::as_str) != Some("E6") || pos(&fail3, "E7").is_some() {
        return Err(format!("triple failure: {fail3:?}"));
    }
    if elapsed >= HEALTHCARE_BUDGET {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("fail counts 0-5 conform, {elapsed:?}"))
}

fn validator() -> Outcome {
    let models = sample(valid_model(), GENERATED_MODELS);
    for (i, m) in models.iter().enumerate() {
        let r = validate(m);
        if !r.is_empty() {
            return Err(format!("model {i} rejected: {:?}", r.violations));
        }
    }
    let mut caught = 0;
    let mut total = 0;
    for (i, m) in models.iter().enumerate() {
        for fault in FAULTS {
            total += 1;
            let bad = mutate(m, fault, i * 7 + 3);
            if validate(&bad).iter().any(|v| v.rule.code() == fault.code()) {
                caught += 1;
            }
        }
    }
    if caught != total {
        return Err(format!("{caught}/{total} faults detected"));
    }
    Ok(format!("{GENERATED_MODELS} valid models pass, {caught}/{total} faults detected"))
}

fn round_trip() -> Outcome {
    for (i, m) in sample(valid_model(), ROUND_TRIP_MODELS).iter().enumerate() {
        let text = dsl::format_model(m);
        let back = dsl::parse_model(&text).map_err(|d| format!("model {i}: {d:?}"))?;
        if &back != m {
            return Err(format!("model {i} changed by parse(format)"));
        }
        if dsl::format_model(&back) != text {
            return Err(format!("model {i}: formatter not idempotent"));
        }
    }
    let hc = model("healthcare.fm");
    let inputs = sample(proptest::collection::vec(proptest::num::u8::ANY, 0..256), FUZZ_INPUTS);
    for (i, bytes) in inputs.iter().enumerate() {
        let text = String::from_utf8_lossy(bytes);
        let res = catch_unwind(AssertUnwindSafe(|| {
            let _ = dsl::parse_model(&text);
            let _ = dsl::parse_guard(&text);
            let _ = dsl::parse_policies(&text);
            let _ = dsl::parse_corpus(&text);
            let _ = dsl::parse_scenario(&text, &hc);
        }));
        if res.is_err() {
            return Err(format!("parser panicked on fuzz input {i}: {bytes:?}"));
        }
    }
    Ok(format!("{ROUND_TRIP_MODELS} models round-trip, {FUZZ_INPUTS} fuzz inputs parsed without panic"))
}

fn classification() -> Outcome {
    let r = people_registry();
    let corpus = sample(assertion(), CORPUS_SIZE);
    let mut arities = BTreeSet::new();
    for a in &corpus {
        let expected = oracle_referents(a, &r);
        let c = classify(a, &r).record;
        let class = match expected.len() {
            0 => Classification::NotPii,
            1 => Classification::Apii,
            n => Classification::Cpii { arity: n },
        };
        if c.referents != expected || c.classification != class {
            return Err(format!("{}: got {:?}, oracle {expected:?}", a.structured(), c.referents));
        }
        arities.insert(a.arguments.len().min(5));
        for t in [Truth::True, Truth::False, Truth::Unknown] {
            if classify(&a.clone().with_truth(t), &r).record != c {
                return Err(format!("{}: classification depends on truth", a.structured()));
            }
        }
    }
    if arities.len() < 6 {
        return Err(format!("corpus only covers arities {arities:?}"));
    }
    Ok(format!("{CORPUS_SIZE} assertions agree with the oracle under all truth values"))
}

fn reduction() -> Outcome {
    let r = people_registry();
    for (a, n) in sample(cpii_assertion(), CPII_CASES) {
        let c = classify(&a, &r).record;
        let red = reduce(&c, &a, &r).map_err(|e| e.to_string())?;
        let union: BTreeSet<String> = red.parts.iter().flat_map(|p| p.record.referents.clone()).collect();
        let atomic = red
            .parts
            .iter()
            .all(|p| classify(&p.assertion, &r).record.classification == Classification::Apii);
        if red.parts.len() != n || union != c.referents || !atomic {
            return Err(format!("{}: {} parts", a.structured(), red.parts.len()));
        }
    }
    let reg = registry();
    let love = Assertion::new("love", "love", vec![Term::Name("John".into()), Term::Name("Mary".into())])
        .with_text("John and Mary are in love");
    let rec = classify(&love, &reg).record;
    let red = reduce(&rec, &love, &reg).map_err(|e| e.to_string())?;
    let texts: Vec<&str> = red.parts.iter().map(|p| p.assertion.text.as_str()).collect();
    if texts != ["John and someone are in love", "Someone and Mary are in love"] {
        return Err(format!("John/Mary reduced to {texts:?}"));
    }
    Ok(format!("{CPII_CASES} CPII reduce to n APIIs covering all referents; John/Mary verbatim"))
}

fn proprietorship() -> Outcome {
    let r = people_registry();
    let strat = (
        proptest::collection::vec(cpii_assertion(), 1..5),
        proptest::collection::vec((0usize..5, 0usize..8, 0usize..8), 0..40),
    );
    let mut ops = 0;
    for (corpus, script) in sample(strat, LEDGER_RUNS) {
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
            ledger = ledger.register(rec).map_err(|e| e.to_string())?;
        }
        for (kind, k, x) in script {
            ops += 1;
            let rec = &records[k % records.len()];
            let person = PERSON_NAMES[x % PERSON_NAMES.len()].to_lowercase();
            let entity = Holder::Entity(format!("org{x}"));
            let res = match kind {
                0 => match ledger.record_possession(rec, entity) {
                    Ok(l) => Ok(l),
                    Err(e) => return Err(format!("entity possession refused: {e}")),
                },
                1 => ledger.release_possession(&rec.assertion, &Holder::Person(person.clone())),
                2 => match ledger.add_proprietor(&rec.assertion, &person) {
                    Err(e) if e.code() == "TRANSFER_FORBIDDEN" => Err(e),
                    _ => return Err("proprietor addition accepted".into()),
                },
                3 => ledger.remove_proprietor(&rec.assertion, &person),
                _ => ledger.transfer_proprietorship(&rec.assertion, &person, "zed"),
            };
            if let Ok(next) = res {
                ledger = next;
            }
            for rec in &records {
                if ledger.get(&rec.assertion).map(|o| &o.proprietors) != Some(&rec.referents) {
                    return Err(format!("proprietors of {} changed", rec.assertion));
                }
            }
        }
    }
    Ok(format!("{LEDGER_RUNS} random sequences, {ops} operations, proprietor sets unchanged"))
}

fn policies() -> Outcome {
    let reg = registry();
    let bh = model("beach_house.fm");
    let trace = run_fixture(&bh, "beach_house.fms");
    let ctx = PiiContext { model: &bh, registry: &reg };
    let finin = fixture("finin.fmp");
    let count = |text: &str| -> Result<usize, String> {
        let p = dsl::parse_policy(text).map_err(|d| format!("{d:?}"))?;
        Ok(check_trace(&trace, &p, &ctx).map_err(|e| e.to_string())?.len())
    };
    let n = count(&finin)?;
    if n != 1 {
        return Err(format!("Finin policy: {n} violations"));
    }
    for (from, to) in [
        ("by colleagues", "by family"),
        ("at beach_house", "at office"),
        ("during weekend", "during weekday"),
        ("while party", "while meeting"),
    ] {
        let n = count(&finin.replace(from, to))?;
        if n != 0 {
            return Err(format!("`{to}` still gives {n} violations"));
        }
    }
    let cutoff = dsl::parse_policy(&fixture("cutoff.fmp")).map_err(|d| format!("{d:?}"))?;
    let id = model("identifier.fm");
    let v = check_model(&id, &cutoff, &reg).map_err(|e| e.to_string())?;
    let on_arc =
        matches!(&v[..], [x] if x.evidence == fm_core::policy::Evidence::Arc { arc: "identify".into() });
    if !on_arc {
        return Err(format!("cutoff: {v:?}"));
    }
    let without = assemble(
        id.to_declarations()
            .into_iter()
            .filter(|d| !matches!(d, Declaration::Trigger(t) if t.id.as_str() == "identify")),
    )
    .map_err(|e| format!("{e:?}"))?;
    let v = check_model(&without, &cutoff, &reg).map_err(|e| e.to_string())?;
    if !v.is_empty() {
        return Err(format!("cutoff without the arc: {v:?}"));
    }
    Ok("Finin 1 violation, 4 counterfactuals 0; cutoff 1 on `identify`, 0 without it".into())
}

fn determinism() -> Outcome {
    for name in MODEL_FIXTURES {
        let a = fm_core::dot::to_dot(&model(name)).map_err(|e| format!("{name}: {e}"))?;
        let b = fm_core::dot::to_dot(&model(name)).map_err(|e| format!("{name}: {e}"))?;
        if a != b {
            return Err(format!("{name}: DOT differs"));
        }
    }
    for (m, s) in SCENARIO_FIXTURES {
        let a = sim::trace_to_jsonl(&run_fixture(&model(m), s));
        let b = sim::trace_to_jsonl(&run_fixture(&model(m), s));
        if a != b {
            return Err(format!("{s}: trace differs"));
        }
    }
    Ok(format!(
        "{} DOT renderings and {} traces byte-identical",
        MODEL_FIXTURES.len(),
        SCENARIO_FIXTURES.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("healthcare scenario reproduction", healthcare),
        ("validator soundness", validator),
        ("DSL round-trip and fuzzing", round_trip),
        ("classification oracle equivalence", classification),
        ("reduction law", reduction),
        ("proprietorship immutability", proprietorship),
        ("policy fixtures", policies),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
