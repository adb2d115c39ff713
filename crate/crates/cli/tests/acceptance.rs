//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use betashift::admissibility::{self, is_admissible};
use betashift::density::{self, ApproxConfig, RecoveredParams, Validation};
use betashift::dynamics::{self, ExactParams, ParamSource, Point, Precision, Side};
use betashift::real::Real;
use betashift::subshift::{self, build_automaton, count_words_bruteforce, count_words_matrix, Classification};
use betashift::words::{lex_compare, EventuallyPeriodicWord, FiniteWord};

fn w(s: &str) -> EventuallyPeriodicWord {
    s.parse().unwrap()
}

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn golden_example() -> Result<String, String> {
    let start = Instant::now();
    let src = ExactParams::golden();
    let p = src.params(256).map_err(|e| e.to_string())?;
    let pair = dynamics::detect_kneading_period(&p, 512).map_err(|e| e.to_string())?;
    ensure(pair == Some((w("(011)"), w("(100)"))), || format!("kneading pair {pair:?}"))?;
    let crit = dynamics::critical_point(&p);
    let err = crit.sub(&Real::from_f64(0.5, 256)).abs_upper();
    ensure(err.lt(&Real::from_f64(1e-70, 256)), || format!("|p - 1/2| = {err:?}"))?;
    let class = subshift::classify_shift(&p, 512).map_err(|e| e.to_string())?;
    let Classification::FiniteType { certificate } = class else {
        return Err(format!("classified as {}", class.label()));
    };
    let forbidden: Vec<String> = certificate.forbidden.iter().map(|w| w.to_string()).collect();
    ensure(forbidden == ["000", "111"], || format!("forbidden words {forbidden:?}"))?;
    let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
    let h = certificate.entropy.to_f64();
    ensure((h - ln_phi).abs() < 1e-10, || format!("entropy {h}"))?;
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("(011),(100); forbidden {{000,111}}; entropy {h:.12}; {t:.2?}"))
}

fn primitive_words(first: u8, len: usize) -> Vec<EventuallyPeriodicWord> {
    (0..1u32 << (len - 1))
        .filter_map(|bits| {
            let mut letters = vec![first];
            letters.extend((0..len - 1).map(|i| ((bits >> (len - 2 - i)) & 1) as u8));
            let word = EventuallyPeriodicWord::periodic(FiniteWord::new(letters)).ok()?;
            (word.period_len() == len).then_some(word)
        })
        .collect()
}

/// Periodically admissible pairs with both periods at most 8, recovered as
/// parameters and read back through `classify_shift`.
fn test_pairs() -> Vec<(EventuallyPeriodicWord, EventuallyPeriodicWord)> {
    static PAIRS: OnceLock<Vec<(EventuallyPeriodicWord, EventuallyPeriodicWord)>> = OnceLock::new();
    PAIRS.get_or_init(generate_pairs).clone()
}

fn generate_pairs() -> Vec<(EventuallyPeriodicWord, EventuallyPeriodicWord)> {
    let mut candidates = Vec::new();
    for p in 3..=8 {
        for q in 3..=8 {
            let lowers = primitive_words(0, p);
            let uppers = primitive_words(1, q);
            let mut found: Vec<_> = lowers
                .iter()
                .flat_map(|l| uppers.iter().map(move |u| (l.clone(), u.clone())))
                .filter(|(l, u)| admissibility::check_condition2(l, u))
                .filter(|(l, u)| is_admissible(l, u).periodically_admissible)
                .collect();
            found.truncate(1);
            candidates.extend(found);
        }
    }
    candidates
        .into_iter()
        .filter_map(|(l, u)| {
            let src = RecoveredParams::new(&l, &u).ok()?;
            let p = src.params(256).ok()?;
            match subshift::classify_shift(&p, 512).ok()? {
                Classification::FiniteType { certificate } => Some(certificate.pair),
                _ => None,
            }
        })
        .collect()
}

fn oracle_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let pairs = test_pairs();
    ensure(pairs.len() >= 10, || format!("only {} test pairs", pairs.len()))?;
    for (l, u) in &pairs {
        let aut = build_automaton(l, u).map_err(|e| e.to_string())?;
        for n in 1..=12 {
            let m = count_words_matrix(&aut, n).to_string();
            let b = count_words_bruteforce(l, u, n).to_string();
            ensure(m == b, || format!("{l},{u} n={n}: matrix {m}, brute force {b}"))?;
        }
    }
    let t = within(start, Duration::from_secs(30))?;
    Ok(format!("{} pairs, n <= 12; {t:.2?}", pairs.len()))
}

fn entropy_sandwich() -> Result<String, String> {
    let pairs = test_pairs();
    let mut worst: f64 = 0.0;
    for (l, u) in &pairs {
        let aut = build_automaton(l, u).map_err(|e| e.to_string())?;
        let ln_count: Vec<f64> =
            (0..=14).map(|n| count_words_matrix(&aut, n).to_string().parse::<f64>().unwrap().ln()).collect();
        for m in 1..14 {
            for n in 1..=14 - m {
                ensure(ln_count[m + n] <= ln_count[m] + ln_count[n] + 1e-12, || {
                    format!("{l},{u}: sub-additivity fails at m={m}, n={n}")
                })?;
            }
        }
        let rho = aut.spectral_radius(128);
        let ln_rho = rho.upper().ln().unwrap().upper().to_f64();
        let rate = ln_count[14] / 14.0;
        ensure(rate >= ln_rho - 1e-12, || format!("{l},{u}: rate {rate} below ln rho {ln_rho}"))?;
        let gap = rate - ln_rho;
        ensure(gap < 0.05, || format!("{l},{u}: gap {gap}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("{} pairs; largest gap at n = 14: {worst:.4}", pairs.len()))
}

fn random_interior(rng: &mut ChaCha8Rng, beta_lo: f64, beta_hi: f64) -> ExactParams {
    let den = 1_000_000i64;
    let b = rng.gen_range((beta_lo * den as f64) as i64..(beta_hi * den as f64) as i64);
    let t = rng.gen_range(20_000..980_000i64);
    let beta = format!("{b}/{den}");
    let alpha = format!("({t}/{den}) * (2 - {beta})");
    ExactParams::parse(&beta, &alpha).unwrap()
}

fn commuting_diagram() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bits = 256;
    let tol = Real::from_f64(1e-20, bits);
    let mut checked = 0;
    for _ in 0..50 {
        let src = random_interior(&mut rng, 1.2, 1.98);
        let p = src.params(bits).map_err(|e| e.to_string())?;
        let beta = p.beta().to_f64();
        // digits needed for the tail β^-N/(β-1) to drop below 1e-22
        let long = ((22.0 * 10f64.ln() - (beta - 1.0).ln()) / beta.ln()).ceil() as usize;
        for k in 0..64 {
            let x = Real::from_ratio(&(2 * k + 1).into(), &128.into(), bits);
            for side in [Side::Plus, Side::Minus] {
                let point = Point::Value(x.clone());
                let word = dynamics::expand(&p, &point, 33, side).map_err(|e| format!("{src}: {e}"))?;
                let image = dynamics::apply_map(&p, &point, side).map_err(|e| e.to_string())?;
                let shifted = dynamics::expand(&p, &image, 32, side).map_err(|e| e.to_string())?;
                ensure(word.letters()[1..] == *shifted.letters(), || format!("{src} x={k}/64: shift mismatch"))?;
                let digits = dynamics::expand(&p, &point, long, side).map_err(|e| e.to_string())?;
                let approx = EventuallyPeriodicWord::new(digits, FiniteWord::new(vec![0])).unwrap();
                let err = dynamics::project(&p, &approx).sub(&x).abs_upper();
                ensure(err.lt(&tol), || format!("{src} x={k}/64: |pi(tau(x)) - x| = {err:?}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} expansions"))
}

fn density_pipeline() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points: Vec<ExactParams> = (0..25).map(|_| random_interior(&mut rng, 1.01, 1.99)).collect();
    let config = ApproxConfig::default();
    let bits = config.precision.start;
    let mut runs = 0;
    let mut worst_ratio: f64 = 0.0;
    for eps_f in [1e-2, 1e-3] {
        let eps = Real::from_f64(eps_f, bits);
        for src in &points {
            let ap = density::approximate_sft(src, &eps, &config).map_err(|e| format!("{src}: {e}"))?;
            let p = src.params(bits).unwrap();
            ensure(ap.err_beta.abs_upper().lt(&eps), || format!("{src}: beta error {:?}", ap.err_beta))?;
            ensure(ap.err_alpha.abs_upper().lt(&eps), || format!("{src}: alpha error {:?}", ap.err_alpha))?;
            ensure(!ap.target_b.lt(p.beta()), || format!("{src}: b < beta"))?;
            let (l, u) = &ap.pair;
            ensure(is_admissible(l, u).periodically_admissible, || {
                format!("{src}: {l},{u} not periodically admissible")
            })?;
            let class = subshift::classify(&RecoveredParams::new(l, u).unwrap(), Precision::default(), 512)
                .map_err(|e| e.to_string())?;
            ensure(class.is_finite_type(), || format!("{src}: (b, a) classifies as {}", class.label()))?;
            let bound = ap.alpha_error_bound();
            ensure(!ap.err_alpha.abs().gt(&bound), || format!("{src}: |a - alpha| exceeds the offset bound"))?;
            worst_ratio = worst_ratio.max(ap.err_alpha.abs().to_f64() / bound.to_f64());
            runs += 1;
        }
    }
    let t = within(start, Duration::from_secs(300))?;
    Ok(format!("{runs} runs; largest |a - alpha| / bound = {worst_ratio:.3}; {t:.2?}"))
}

fn periodization_contract() -> Result<String, String> {
    let mut prefix: FiniteWord = "0110110100".parse().unwrap();
    let t = density::periodize_lower(&mut prefix, 7).map_err(|e| e.to_string())?;
    ensure((t.n, t.j, t.k) == (7, 3, 8), || format!("indices {:?}", (t.n, t.j, t.k)))?;
    ensure(t.result == w("(01101101)"), || format!("result {}", t.result))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fuzzed = 0;
    while fuzzed < 100 {
        let src = random_interior(&mut rng, 1.05, 1.95);
        let Ok(p) = src.params(512) else { continue };
        let Ok(pair) = dynamics::kneading(&p, 160) else { continue };
        let side = if fuzzed % 2 == 0 { Side::Minus } else { Side::Plus };
        let (mut word, cut_letter) = match side {
            Side::Minus => (pair.lower, 0),
            Side::Plus => (pair.upper, 1),
        };
        let cuts: Vec<usize> = (3..=40).filter(|&n| word.get(n - 1) == cut_letter).collect();
        if cuts.is_empty() {
            continue;
        }
        let n = cuts[rng.gen_range(0..cuts.len())];
        let run = match side {
            Side::Minus => density::periodize_lower(&mut word, n),
            Side::Plus => density::periodize_upper(&mut word, n),
        };
        let t = match run {
            Ok(t) => t,
            Err(betashift::Error::CallbackExhausted { .. }) => continue,
            Err(e) => return Err(format!("{src} n={n}: {e}")),
        };
        ensure(t.verify(), || format!("{src} n={n}: index equations fail"))?;
        // The lower word moves up and the upper word moves down.
        let input = EventuallyPeriodicWord::new(t.prefix.clone(), FiniteWord::new(vec![cut_letter])).unwrap();
        let ord = lex_compare(&t.result, &input);
        let expected = if side == Side::Minus { std::cmp::Ordering::Greater } else { std::cmp::Ordering::Less };
        ensure(ord == expected, || format!("{src} n={n}: result {} not beyond input", t.result))?;
        fuzzed += 1;
    }
    Ok(format!("hand trace j = 3, k = 8; {fuzzed} fuzzed prefixes"))
}

fn greedy_boundary() -> Result<String, String> {
    let golden = ExactParams::parse("phi", "0").unwrap();
    let class = subshift::classify(&golden, Precision::new(256), 512).map_err(|e| e.to_string())?;
    ensure(class.is_finite_type(), || format!("(phi, 0) classifies as {}", class.label()))?;
    let random = ExactParams::parse("1.7234871", "0").unwrap();
    let class = subshift::classify(&random, Precision::default(), 512).map_err(|e| e.to_string())?;
    ensure(matches!(class, Classification::Undetermined { prefix_len: 512 }), || {
        format!("1.7234871 classifies as {}", class.label())
    })?;
    Ok("(phi, 0) finite type; 1.7234871 undetermined at 512".into())
}

fn negative_controls() -> Result<String, String> {
    let r = is_admissible(&w("(01)"), &w("(10)"));
    ensure(!r.cond2 && !r.admissible, || format!("((01),(10)): {r:?}"))?;
    ensure(r.entropy.to_f64() == 0.0, || format!("((01),(10)) entropy {:?}", r.entropy))?;
    let r = is_admissible(&w("(10)"), &w("(01)"));
    ensure(!r.cond1 && !r.admissible, || format!("((10),(01)): {r:?}"))?;

    // cond1-3 hold but cond4 fails: recomputation must not confirm the pair
    let (l, u) = (w("(011100)"), w("(100011011)"));
    let r = is_admissible(&l, &u);
    ensure(r.cond1 && r.cond2 && r.cond3 && !r.cond4, || format!("violator report {r:?}"))?;
    let src = RecoveredParams::new(&l, &u).map_err(|e| e.to_string())?;
    let v = density::validate_pair(&src, &l, &u, Precision::default(), 512).map_err(|e| e.to_string())?;
    let Validation::Reduced { lower, upper, .. } = v else {
        return Err("violator was confirmed".into());
    };
    ensure((lower.to_string(), upper.to_string()) == ("(011)".into(), "(100)".into()), || {
        format!("reduced to {lower},{upper}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let config = ApproxConfig::default();
    let eps = Real::from_f64(1e-2, config.precision.start);
    for _ in 0..10 {
        let src = random_interior(&mut rng, 1.05, 1.95);
        let ap = density::approximate_sft(&src, &eps, &config).map_err(|e| e.to_string())?;
        let at = RecoveredParams::new(&ap.pair.0, &ap.pair.1).map_err(|e| e.to_string())?;
        let again = dynamics::with_precision(&at, Precision::default(), |p| dynamics::detect_kneading_period(p, 4096))
            .map_err(|e| e.to_string())?;
        ensure(again.as_ref() == Some(&ap.pair), || format!("{src}: certified pair disagrees with {again:?}"))?;
    }
    Ok("((01),(10)) cond2 false, entropy 0; ((10),(01)) cond1 false; guard holds".into())
}

fn determinism() -> Result<String, String> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_betashift"))
            .args(["--bits", "192", "scan", "--beta-steps", "10", "--alpha-steps", "10", "--eps", "1e-2", "--out"])
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("scan exited with {status}"))?;
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let a = run("a.csv")?;
    let b = run("b.csv")?;
    ensure(a == b, || "the two scans differ".into())?;
    let mut rd = csv::Reader::from_reader(a.as_slice());
    let statuses: Vec<String> = rd.records().map(|r| r.unwrap()[2].to_string()).collect();
    ensure(statuses.len() == 100, || format!("{} rows", statuses.len()))?;
    let ft = statuses.iter().filter(|s| *s == "finite_type").count();
    ensure(ft == 100, || format!("{ft} of 100 rows are finite_type"))?;
    let t = within(start, Duration::from_secs(600))?;
    Ok(format!("10x10 grid twice, {} bytes identical; {t:.2?}", a.len()))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("golden-ratio worked example", golden_example),
        ("oracle equivalence", oracle_equivalence),
        ("sub-additivity and entropy sandwich", entropy_sandwich),
        ("commuting diagram", commuting_diagram),
        ("density pipeline end-to-end", density_pipeline),
        ("periodization contract", periodization_contract),
        ("greedy boundary criterion", greedy_boundary),
        ("negative controls", negative_controls),
        ("determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
