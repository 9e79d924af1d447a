use std::collections::HashSet;

use proptest::prelude::*;
use psan_core::config::SanitizerConfig;
use psan_core::fpe::{self, format, Tweak};
use psan_core::pipeline::{report, HelperString, MechanismNoise, Sanitizer};
use psan_core::{Category, SanitizerKey, SensitiveType};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn key(byte: u8) -> SanitizerKey {
    SanitizerKey::from_bytes(&[byte; 32]).unwrap()
}

fn sanitizer(byte: u8) -> Sanitizer {
    Sanitizer::with_builtin_patterns(SanitizerConfig::with_key(key(byte)))
}

fn noise(seed: u64) -> MechanismNoise<ChaCha20Rng> {
    MechanismNoise(ChaCha20Rng::seed_from_u64(seed))
}

#[test]
fn small_formats_are_permutations() {
    let names = psan_core::fpe::NameIndex::builtin();
    for (name, lo, hi, width) in [("two_digit", 10, 99, 2), ("four_digit", 0, 9999, 4)] {
        let spec = format::builtin(name, &names).unwrap();
        let tweak = Tweak::from("Age");
        let mut seen = HashSet::new();
        for v in lo..=hi {
            let pt = format!("{v:0width$}");
            let ct = fpe::encrypt(&key(3), &spec, &tweak, &pt).unwrap();
            let n: i64 = ct.parse().unwrap();
            assert!((lo..=hi).contains(&n) && ct.len() == width, "{name}: {ct}");
            assert!(seen.insert(ct.clone()), "{name}: collision on {ct}");
            assert_eq!(fpe::decrypt(&key(3), &spec, &tweak, &ct).unwrap(), pt);
        }
        assert_eq!(seen.len(), (hi - lo + 1) as usize);
    }
}

#[test]
fn salary_helper_string_from_json() {
    let s = sanitizer(7);
    let prompt = "My monthly salary is $5,000, so my yearly salary is $60,000.";
    let psi =
        HelperString::from_json(r#"{"derive":[{"target":1,"rule":"scale","from":0,"factor":"12"}]}"#).unwrap();
    for seed in 0..20 {
        let out = s.sanitize_text(prompt, Some(&psi), &mut noise(seed)).unwrap();
        let seq = s.annotate(&out.text).unwrap();
        let values: Vec<i64> = seq.tokens().iter().map(|t| t.text.replace(',', "").parse().unwrap()).collect();
        assert_eq!(values[1], values[0] * 12, "{}", out.text);
        assert_eq!(out.t, 1);
    }
}

#[test]
fn sanitizing_is_independent_of_history() {
    let p1 = "Hello Mr. Kaiser Soze, SSN 055-46-6168, card 4111-1111-1111-1111.";
    let p2 = "Mr. Keyser Sose has SSN 123-45-6789 and zip code 10001.";
    let s = sanitizer(11);
    let first = s.sanitize_text(p1, None, &mut noise(1)).unwrap();
    let after = s.sanitize_text(p2, None, &mut noise(2)).unwrap();
    let fresh = sanitizer(11).sanitize_text(p2, None, &mut noise(2)).unwrap();
    assert_eq!(after, fresh);
    assert_eq!(s.sanitize_text(p1, None, &mut noise(1)).unwrap(), first);
}

#[test]
fn key_change_changes_ciphertexts() {
    let prompt = "SSN 055-46-6168";
    let a = sanitizer(1).sanitize_text(prompt, None, &mut noise(0)).unwrap();
    let b = sanitizer(2).sanitize_text(prompt, None, &mut noise(0)).unwrap();
    assert_ne!(a.text, b.text);
}

fn filler() -> impl Strategy<Value = String> {
    prop::sample::select(vec![" ", " and ", ". Also ", ", then ", " (note) ", "\n", " · ", " über "])
        .prop_map(str::to_owned)
}

fn sensitive_piece() -> impl Strategy<Value = String> {
    let names = psan_core::fpe::NameIndex::builtin();
    let (first, last) = (names.first_names().to_vec(), names.last_names().to_vec());
    prop_oneof![
        (0u32..1000, 1u32..100, 1u32..10000).prop_map(|(a, b, c)| format!("SSN {:03}-{:02}-{:04}", a.max(1), b, c)),
        (100u32..1000, 0u32..10000).prop_map(|(a, b)| format!("call ({a}) 555-{b:04}")),
        (1u32..200_000).prop_map(|v| format!("pay ${}", v)),
        (10u32..99).prop_map(|v| format!("my age is {v}")),
        (0usize..first.len(), 0usize..last.len()).prop_map(move |(i, j)| format!("{} {}", first[i], last[j])),
        (10000u32..99999).prop_map(|v| format!("zip code {v}")),
    ]
}

fn prompt() -> impl Strategy<Value = String> {
    prop::collection::vec((filler(), sensitive_piece()), 0..6)
        .prop_map(|parts| parts.into_iter().map(|(f, s)| f + &s).collect::<String>() + ".")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn segments_concatenate_to_the_prompt(text in prompt()) {
        let seq = sanitizer(5).annotate(&text).unwrap();
        prop_assert_eq!(seq.reconstruct(), text);
        for w in seq.tokens().windows(2) {
            prop_assert!(w[0].span.end <= w[1].span.start);
        }
    }

    #[test]
    fn sanitized_prompt_keeps_its_shape(text in prompt(), seed in any::<u64>()) {
        let s = sanitizer(5);
        let before = s.annotate(&text).unwrap();
        let out = s.sanitize_text(&text, None, &mut noise(seed)).unwrap();
        let after = s.annotate(&out.text).unwrap();
        let types = |seq: &psan_core::TypedSequence| -> Vec<SensitiveType> {
            seq.tokens().iter().map(|t| t.ty.clone()).collect()
        };
        prop_assert_eq!(types(&before), types(&after));
        prop_assert_eq!(out.types(), types(&before));
        for (t, r) in after.tokens().iter().zip(&out.report) {
            prop_assert_eq!(t.span, r.span);
        }
        if out.t > 0 {
            prop_assert_eq!(report::total_share(&out.report), num_rational::Ratio::from_integer(1));
        }
        let noised = out.report.iter().filter(|r| r.epsilon.is_some()).count();
        prop_assert_eq!(noised, out.t);
        prop_assert!(out.report.iter().filter(|r| r.category == Category::I).all(|r| r.epsilon.is_none()));
    }

    #[test]
    fn category_one_round_trips(text in prompt(), seed in any::<u64>()) {
        let s = sanitizer(6);
        let out = s.sanitize_text(&text, None, &mut noise(seed)).unwrap();
        let back = s.desanitize(&out.text, Some(&text)).unwrap();
        let orig = s.annotate(&text).unwrap();
        let restored = s.annotate(&back.text).unwrap();
        for (a, b) in orig.tokens().iter().zip(restored.tokens()) {
            if a.category == Category::I {
                prop_assert_eq!(&a.text, &b.text);
            }
        }
    }
}
