//! End-to-end acceptance suite. Prints one line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::HashSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use psan_core::config::SanitizerConfig;
use psan_core::fpe::format::{builtin, luhn_valid, FormatDef, FormatSpec, RankDef};
use psan_core::fpe::names::NameIndex;
use psan_core::fpe::{FpeCipher, Tweak};
use psan_core::mldp::{self, IntegerDomain, MldpError};
use psan_core::pipeline::report::total_share;
use psan_core::pipeline::{HelperString, MechanismNoise, NoiseSource, Sanitizer};
use psan_core::{SanitizerKey, SensitiveType};
use psan_harness::eval::{run_eval, EvalSample, Metric};
use psan_harness::game::{apply_ner_leakage, trial_rng, GamePair};
use psan_harness::metrics::order_preservation_probability;
use psan_harness::stats;
use psan_harness::{play_pair, LikelihoodRatio, MockOracle, MockTask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rust_decimal::Decimal;

type Outcome = Result<String, String>;
type Generator = Box<dyn Fn(&mut ChaCha20Rng) -> String>;
type Criterion = (&'static str, fn() -> Outcome);

const EPS_GRID: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixed_key(byte: u8) -> SanitizerKey {
    SanitizerKey::from_bytes(&[byte; 32]).unwrap()
}

fn sanitizer(eps: f64) -> Sanitizer {
    Sanitizer::with_builtin_patterns(SanitizerConfig::with_key(fixed_key(7)).with_epsilon(eps).unwrap())
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn ratio_bound() -> Outcome {
    let start = Instant::now();
    let dom = IntegerDomain::range(1, 100).unwrap();
    let mut worst: f64 = 0.0;
    for eps in EPS_GRID {
        let r = mldp::ratio_bound_check(eps, dom).map_err(|e| e.to_string())?;
        ensure(r <= 1.0 + 1e-9, || format!("eps {eps}: worst ratio {r}"))?;
        worst = worst.max(r);
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("worst ratio {worst:.12} in {:.2?}", start.elapsed()))
}

fn mode_and_monotonicity() -> Outcome {
    let mut checked = 0u64;
    for eps in EPS_GRID {
        for k in 1..=200i64 {
            let dom = IntegerDomain::range(1, k).unwrap();
            for x in 0..k as usize {
                let d = mldp::distribution_at_index(x, eps, dom).map_err(|e| e.to_string())?;
                let p = d.probs();
                for i in 0..p.len() {
                    ensure(i == x || p[i] < p[x], || format!("eps {eps} k {k} x {x}: mode lost at {i}"))?;
                    if i > x {
                        ensure(p[i] < p[i - 1], || format!("eps {eps} k {k} x {x}: rises at {i}"))?;
                    }
                    if i < x {
                        ensure(p[i] < p[i + 1], || format!("eps {eps} k {k} x {x}: rises at {i}"))?;
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} probabilities compared exactly"))
}

fn sampler_fidelity() -> Outcome {
    let start = Instant::now();
    let n = 100_000usize;
    let d = mldp::distribution(5, 1.0, IntegerDomain::range(1, 10).unwrap()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut counts = [0usize; 10];
    for _ in 0..n {
        counts[d.sample_index(&mut rng)] += 1;
    }
    let mut worst_z: f64 = 0.0;
    for (i, (&c, &p)) in counts.iter().zip(d.probs()).enumerate() {
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let f = c as f64 / n as f64;
        worst_z = worst_z.max((f - p).abs() / se);
        ensure((f - p).abs() <= 3.0 * se, || format!("bin {i}: frequency {f} vs {p}"))?;
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("worst bin at {worst_z:.2} standard errors, {:.2?}", start.elapsed()))
}

fn custom(name: &str, pattern: &str, rank: RankDef) -> FormatSpec {
    FormatSpec::compile(name, FormatDef { pattern: pattern.into(), rank }, &NameIndex::builtin()).unwrap()
}

fn enumerate_permutation(cipher: &FpeCipher, spec: &FormatSpec, domain: &[String]) -> Result<(), String> {
    let tweak = Tweak::new(spec.name().as_bytes());
    let plain: HashSet<&String> = domain.iter().collect();
    let mut seen = HashSet::new();
    for x in domain {
        let y = cipher.encrypt(spec, &tweak, x).map_err(|e| format!("{}: {e}", spec.name()))?;
        ensure(plain.contains(&y), || format!("{}: {x} left the domain as {y}", spec.name()))?;
        ensure(seen.insert(y.clone()), || format!("{}: collision on {y}", spec.name()))?;
        let back = cipher.decrypt(spec, &tweak, &y).map_err(|e| e.to_string())?;
        ensure(&back == x, || format!("{}: {x} came back as {back}", spec.name()))?;
    }
    Ok(())
}

fn random_digits(rng: &mut ChaCha20Rng, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.gen_range(0..10u8))).collect()
}

fn luhn_complete(body: &str) -> String {
    (0..10).map(|d| format!("{body}{d}")).find(|s| luhn_valid(s)).unwrap()
}

fn fpe_bijectivity() -> Outcome {
    let names = NameIndex::builtin();
    let cipher = FpeCipher::new(&fixed_key(3));
    let mut enumerated = Vec::new();
    let small: Vec<(FormatSpec, Vec<String>)> = vec![
        (builtin("two_digit", &names).unwrap(), (10..100).map(|v| v.to_string()).collect()),
        (builtin("four_digit", &names).unwrap(), (0..10_000).map(|v| format!("{v:04}")).collect()),
        (builtin("sex", &names).unwrap(), vec!["male".into(), "female".into()]),
        (
            custom("three_digit", r"\d{1,3}", RankDef::IntegerRange { lo: 0, hi: 999 }),
            (0..1000).map(|v| v.to_string()).collect(),
        ),
        (
            custom("hex3", r"[0-9A-F]{3}", RankDef::Alphabet { alphabet: "0123456789ABCDEF".into(), luhn: false }),
            (0..4096).map(|v| format!("{v:03X}")).collect(),
        ),
        (
            custom(
                "weekday",
                r"(?i:mon|tue|wed|thu|fri|sat|sun)",
                RankDef::Enumerated { values: ["mon", "tue", "wed", "thu", "fri", "sat", "sun"].map(String::from).to_vec() },
            ),
            ["mon", "tue", "wed", "thu", "fri", "sat", "sun"].map(String::from).to_vec(),
        ),
        (
            custom(
                "feb",
                r"\d{4}-\d{2}-\d{2}",
                RankDef::Date { min: "2024-02-01".into(), max: "2024-02-29".into(), layouts: vec!["%Y-%m-%d".into()] },
            ),
            (1..=29).map(|d| format!("2024-02-{d:02}")).collect(),
        ),
    ];
    for (spec, domain) in &small {
        ensure(spec.fixed_size().is_none_or(|n| n == domain.len() as u128), || {
            format!("{}: domain size {:?} vs {}", spec.name(), spec.fixed_size(), domain.len())
        })?;
        enumerate_permutation(&cipher, spec, domain)?;
        enumerated.push(format!("{}={}", spec.name(), domain.len()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let samples = 10_000;
    let generators: Vec<(&str, SensitiveType, Generator)> = vec![
        ("ssn", SensitiveType::Ssn, Box::new(|r| format!("{}-{}-{}", random_digits(r, 3), random_digits(r, 2), random_digits(r, 4)))),
        (
            "credit_card",
            SensitiveType::CreditCard,
            Box::new(|r| {
                let c = luhn_complete(&random_digits(r, 15));
                format!("{}-{}-{}-{}", &c[..4], &c[4..8], &c[8..12], &c[12..])
            }),
        ),
        ("zipcode", SensitiveType::Zipcode, Box::new(|r| random_digits(r, 5))),
        (
            "phone",
            SensitiveType::Phone,
            Box::new(|r| format!("({}) {}-{}", random_digits(r, 3), random_digits(r, 3), random_digits(r, 4))),
        ),
    ];
    for (name, ty, generate) in &generators {
        let spec = builtin(name, &names).unwrap();
        let tweak = Tweak::for_type(ty);
        for _ in 0..samples {
            let x = generate(&mut rng);
            let y = cipher.encrypt(&spec, &tweak, &x).map_err(|e| format!("{name}: {e}"))?;
            ensure(spec.accepts(&y) && y.len() == x.len(), || format!("{name}: {y} breaks the format of {x}"))?;
            if *name == "credit_card" {
                let digits: String = y.chars().filter(char::is_ascii_digit).collect();
                ensure(luhn_valid(&digits), || format!("credit_card: {y} fails the Luhn check"))?;
            }
            let back = cipher.decrypt(&spec, &tweak, &y).map_err(|e| e.to_string())?;
            ensure(back == x, || format!("{name}: {x} came back as {back}"))?;
        }
    }
    Ok(format!(
        "permutations: {}; {samples} round trips each for ssn/credit_card/zipcode/phone, all in format",
        enumerated.join(" ")
    ))
}

fn psan(dir: &Path, args: &[&str], stdin: &str) -> Result<String, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_psan"))
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).map_err(|e| e.to_string())?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("psan {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn statelessness() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = dir.path();
    psan(dir, &["register", "--key", "psan.key", "--config", "psan.toml"], "")?;
    std::fs::remove_file(dir.join("psan.toml")).map_err(|e| e.to_string())?;
    let prompts = [
        "My SSN is 055-46-6168 and my age is 41.",
        "Charge card 4111-1111-1111-1111, ship to zip code 94110.",
        "Call me at (415) 555-0134 or 415-555-0199. SSN 123-45-6789.",
    ];
    let sanitize = |i: usize| psan(dir, &["sanitize", "--key", "psan.key", "--seed", &i.to_string()], prompts[i]);
    let desanitize = |text: &str| psan(dir, &["desanitize", "--key", "psan.key"], text);

    let s1 = sanitize(0)?;
    let d1 = desanitize(&s1)?;
    let s2 = sanitize(1)?;
    let d2 = desanitize(&s2)?;
    let s3 = sanitize(2)?;
    let d3 = desanitize(&s3)?;
    let a1 = [s1, d1, s2, d2, s3, d3];

    let s1 = sanitize(0)?;
    let s2 = sanitize(1)?;
    let d2 = desanitize(&s2)?;
    let s3 = sanitize(2)?;
    let d1 = desanitize(&s1)?;
    let d3 = desanitize(&s3)?;
    let a2 = [s1, d1, s2, d2, s3, d3];

    ensure(a1 == a2, || format!("sequences diverge: {a1:?} vs {a2:?}"))?;
    for (i, p) in prompts.iter().enumerate() {
        ensure(a1[2 * i] != *p, || format!("prompt {i} was not sanitized"))?;
    }
    ensure(a1[3] == prompts[1] && a1[5] == prompts[2], || "category I prompts did not restore exactly".into())?;
    ensure(a1[1].contains("055-46-6168"), || format!("SSN not restored: {}", a1[1]))?;
    Ok("A1 and A2 agree byte for byte across 18 fresh processes with only the key file".into())
}

fn budget_split() -> Outcome {
    let s = sanitizer(1.0);
    let mut rng = MechanismNoise(ChaCha20Rng::seed_from_u64(6));
    let mut shown = Vec::new();
    for t in [1usize, 2, 3, 5] {
        let prompt: Vec<String> = (0..t).map(|i| format!("age is {}", 20 + 11 * i)).collect();
        let out = s.sanitize_text(&prompt.join("; "), None, &mut rng).map_err(|e| e.to_string())?;
        ensure(out.t == t, || format!("t = {} for {t} ages", out.t))?;
        let total = total_share(&out.report);
        ensure(total.numer() == total.denom(), || format!("t {t}: shares sum to {total}"))?;
        let noised = out.report.iter().filter(|r| r.epsilon.is_some()).count();
        ensure(noised == t, || format!("t {t}: {noised} noised records"))?;
        shown.push(format!("t={t}: {}x{}", t, out.report[0].epsilon_share.as_deref().unwrap_or("?")));
    }
    Ok(format!("shares sum to exactly 1 ({})", shown.join(", ")))
}

struct Scripted(Vec<i64>);

impl NoiseSource for Scripted {
    fn perturb(&mut self, _x: usize, _epsilon: f64, domain: IntegerDomain) -> Result<usize, MldpError> {
        domain.index_of(self.0.remove(0))
    }
}

fn helper_string_golden() -> Outcome {
    let s = sanitizer(1.0);
    let prompt = "My monthly salary is $5,000 and my yearly salary is $60,000 and I have $10,000 in annual deductions. \
                  My annual taxable income is $50,000";
    let psi = HelperString::from_json(
        r#"{"derive":[{"target":1,"rule":"scale","from":0,"factor":"12"},
                      {"target":3,"rule":"difference","minuend":1,"subtrahend":2}]}"#,
    )
    .map_err(|e| e.to_string())?;
    let out = s.sanitize_text(prompt, Some(&psi), &mut Scripted(vec![5200, 9800])).map_err(|e| e.to_string())?;
    let expected = "My monthly salary is $5,200 and my yearly salary is $62,400 and I have $9,800 in annual deductions. \
                    My annual taxable income is $52,600";
    ensure(out.text == expected, || format!("got {:?}", out.text))?;

    let age_psi =
        HelperString::from_json(r#"{"derive":[{"target":1,"rule":"year_from_age","from":0}]}"#).map_err(|e| e.to_string())?;
    ensure(s.config().reference_year() == 2025, || "reference year is not 2025".into())?;
    let age = s
        .sanitize_text("My age is 30, I was born in 1995. I am 30 years old.", Some(&age_psi), &mut Scripted(vec![25]))
        .map_err(|e| e.to_string())?;
    let expected_age = "My age is 25, I was born in 2000. I am 25 years old.";
    ensure(age.text == expected_age, || format!("got {:?}", age.text))?;
    Ok("62,400 and 52,600 from 5,200 and 9,800; age 25 gives born in 2000".into())
}

fn privacy_game() -> Outcome {
    let start = Instant::now();
    let trials = 100_000;
    let mut lines = Vec::new();

    let s = sanitizer(1.0);
    let same = "My age is 40, my SSN is 055-46-6168 and my zip code is 94110.";
    let pair = GamePair::new(same, same, &s).map_err(|e| e.to_string())?;
    let hash_adversary = |text: &str| text.bytes().fold(0u32, |h, b| h.wrapping_mul(31).wrapping_add(u32::from(b))) & 1 == 1;
    let r = play_pair(&pair, trials, 0, &hash_adversary).map_err(|e| e.to_string())?;
    let sigma = r.sigma_win_rate;
    lines.push(format!("identical adv {:+.4} (3σ {:.4})", r.empirical_advantage, 3.0 * sigma));
    ensure(r.empirical_advantage.abs() < 3.0 * sigma, || {
        format!("identical pair: |adv| {} >= 3σ {}", r.empirical_advantage.abs(), 3.0 * sigma)
    })?;

    for (eps, l) in [(0.5, 5i64), (1.0, 1), (1.0, 10)] {
        let s = sanitizer(eps);
        let pair = GamePair::new("My age is 40.", &format!("My age is {}.", 40 + l), &s).map_err(|e| e.to_string())?;
        let r = play_pair(&pair, trials, 0, &LikelihoodRatio::new(&pair).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let dom = IntegerDomain::range(10, 99).unwrap();
        let tv = mldp::tv_distance(
            &mldp::distribution(40, eps, dom).unwrap(),
            &mldp::distribution(40 + l, eps, dom).unwrap(),
        );
        let bound = 1.0 - (-eps * l as f64).exp();
        let sigma = r.sigma_win_rate;
        lines.push(format!(
            "(ε={eps}, l={l}) adv {:.4} tv {tv:.4} bound {bound:.4}",
            r.empirical_advantage
        ));
        ensure(r.exact_tv_bound.is_some_and(|t| (t - tv).abs() < 1e-12), || {
            format!("(ε={eps}, l={l}): reported tv {:?} vs {tv}", r.exact_tv_bound)
        })?;
        ensure(r.empirical_advantage <= bound + 3.0 * sigma, || {
            format!("(ε={eps}, l={l}): adv {} > {bound} + 3σ", r.empirical_advantage)
        })?;
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{}; {:.1?}", lines.join("; "), start.elapsed()))
}

fn ssn(rng: &mut ChaCha20Rng) -> String {
    format!("{:03}-{:02}-{:04}", rng.gen_range(1..900), rng.gen_range(1..100), rng.gen_range(1..10_000))
}

fn invariant_utility() -> Outcome {
    let s = sanitizer(1.0);
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let corpus: Vec<EvalSample> = (0..100)
        .map(|i| {
            let v = ssn(&mut rng);
            EvalSample {
                prompt: format!("Record {i}: SSN {v}, age is {}, zip code {:05}. What is the SSN?", rng.gen_range(18..90), rng.gen_range(0..100_000)),
                expected: v,
                psi: None,
            }
        })
        .collect();
    let oracle = MockOracle::new(MockTask::RetrieveField(SensitiveType::Ssn), s.recognizers().clone());
    let report = run_eval(&corpus, &s, &oracle, Metric::ExactField(SensitiveType::Ssn), 0);
    ensure(report.failures == 0, || format!("{} failures", report.failures))?;
    ensure(report.alpha == Some(1.0) && report.beta == Some(1.0), || {
        format!("alpha {:?} beta {:?}", report.alpha, report.beta)
    })?;
    Ok("alpha = beta = 1.0 over 100 samples".into())
}

fn trend() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let incomes: Vec<EvalSample> = (0..500)
        .map(|_| EvalSample {
            prompt: format!("My annual income is ${}. What is 20% of it?", rng.gen_range(200..1500) * 100),
            expected: String::new(),
            psi: None,
        })
        .collect();
    let comparisons: Vec<EvalSample> = (0..2000)
        .map(|_| EvalSample {
            prompt: "My age is 30 and my sister's age is 34. Who is older?".into(),
            expected: "second".into(),
            psi: None,
        })
        .collect();
    let linear = MockTask::LinearFormula(vec![Decimal::new(2, 1)]);
    let mut medians = Vec::new();
    let mut order = Vec::new();
    for eps in EPS_GRID {
        let s = sanitizer(eps);
        let report = run_eval(&incomes, &s, &MockOracle::new(linear.clone(), s.recognizers().clone()), Metric::Consistency, 0);
        ensure(report.failures == 0, || format!("ε={eps}: {} failures", report.failures))?;
        medians.push(report.percentiles.ok_or("no percentiles")?.p50);

        let s2 = sanitizer(2.0 * eps);
        let oracle = MockOracle::new(MockTask::CompareTwoValues, s2.recognizers().clone());
        let cmp = run_eval(&comparisons, &s2, &oracle, Metric::Comparison, 1);
        ensure(cmp.failures == 0, || format!("ε={eps}: {} comparison failures", cmp.failures))?;
        let exact = order_preservation_probability(30, 34, eps, IntegerDomain::range(10, 99).unwrap())
            .map_err(|e| e.to_string())?;
        let scores = cmp.beta_scores();
        let mean = stats::mean(&scores).unwrap();
        let se = stats::std_dev(&scores).unwrap() / (scores.len() as f64).sqrt();
        ensure((mean - exact).abs() <= 3.0 * se, || format!("ε={eps}: order kept {mean} vs exact {exact} (σ {se})"))?;
        order.push(format!("{mean:.3}/{exact:.3}"));
    }
    ensure(medians.windows(2).all(|w| w[1] < w[0]), || format!("medians not strictly decreasing: {medians:?}"))?;
    let medians: Vec<String> = medians.iter().map(|m| format!("{m:.5}")).collect();
    Ok(format!("median consistency {} ; order kept empirical/exact {}", medians.join(" > "), order.join(" ")))
}

fn ner_leakage() -> Outcome {
    let s = sanitizer(1.0);
    let p0 = "SSN 055-46-6168, zip code 94110, my age is 30, my father's age is 60.";
    let p1 = "SSN 723-45-6789, zip code 10001, my age is 33, my father's age is 66.";
    let mut lines = Vec::new();
    for (k, lambda) in [0.0, 50.0, 100.0].into_iter().enumerate() {
        let leak = apply_ner_leakage(p0, p1, lambda, &s, &mut trial_rng(11, k as u64)).map_err(|e| e.to_string())?;
        let pair = GamePair::new(p0, &leak.prompt, &s).map_err(|e| e.to_string())?;
        let remaining = pair.numeric_differences().map_err(|e| e.to_string())?;
        let bound = remaining.iter().fold(0.0, |acc, d| acc + d.bound);
        let adversary = LikelihoodRatio::new(&pair).map_err(|e| e.to_string())?;
        let r = play_pair(&pair, 50_000, 12, &adversary).map_err(|e| e.to_string())?;
        let sigma = r.sigma_win_rate;
        ensure(r.empirical_advantage <= bound + 3.0 * sigma, || {
            format!("λ={lambda}: adv {} > {bound} + 3σ", r.empirical_advantage)
        })?;
        if lambda == 100.0 {
            ensure(leak.prompt == p0, || "full leakage left a difference".into())?;
            ensure(r.empirical_advantage.abs() < 3.0 * sigma, || format!("λ=100: adv {}", r.empirical_advantage))?;
        }
        lines.push(format!(
            "λ={lambda}: {} copied, {} differing, adv {:+.4} <= {bound:.4}",
            leak.copied.len(),
            pair.differing_tokens().len(),
            r.empirical_advantage
        ));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("mLDP ratio bound", ratio_bound),
        ("mode and monotonicity", mode_and_monotonicity),
        ("sampler fidelity", sampler_fidelity),
        ("FPE bijectivity", fpe_bijectivity),
        ("statelessness", statelessness),
        ("budget split", budget_split),
        ("helper-string golden", helper_string_golden),
        ("privacy game", privacy_game),
        ("invariant-prompt utility", invariant_utility),
        ("trend reproduction", trend),
        ("NER-leakage game", ner_leakage),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL {detail}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
