//! Acceptance suite. Each test covers one numbered criterion and prints one
//! pass line; criterion 9 (byte-identical CLI output across worker counts)
//! lives in the CLI crate's acceptance suite.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::{
    api, benchmark_fs, bundled_index, is_prime, load_benchmark_draft, oracle_automaton_accepts,
    oracle_solutions, parse_draft_str, parse_fn, Gen,
};
use rand::Rng;

use splice_core::ast::Program;
use splice_core::draft::Requirement;
use splice_core::engine::{
    ablation_run, measure_precision, splice, SpliceConfig, ValidationCtx,
};
use splice_core::index::{
    build_index, cosine, jaccard, knn_query, CorpusIndex, FeatureVector, IndexEntry,
    QueryWeights, SourceId,
};
use splice_core::interp::{eval, run_tests, ApiEvent, Limits, Value, VirtualFs};
use splice_core::pretty::pretty_print;
use splice_core::FeatureConfig;

/// Benchmark-suite configuration: defaults except for tighter per-candidate
/// execution limits so looping candidates are cut off quickly.
fn bench_cfg() -> SpliceConfig {
    SpliceConfig {
        test_limits: Limits::new(2_000_000, Duration::from_millis(150)),
        ..SpliceConfig::default()
    }
}

fn standalone_sieve_value(program: &Program, n: i64) -> Option<bool> {
    let api = api();
    match eval(
        program,
        vec![Value::Int(n)],
        &api,
        &VirtualFs::new(),
        &Limits::default(),
    )
    .result
    {
        Ok(Value::Bool(b)) => Some(b),
        _ => None,
    }
}

#[test]
fn acceptance_1_end_to_end_sieve() {
    let started = Instant::now();
    let index = bundled_index();
    let planted = [
        "sieve",
        "binarySearch",
        "matrixMultiply",
        "lcsTable",
        "quicksort",
        "readCsv",
        "detectFaces",
    ];
    assert!(index.len() >= 50, "corpus has {} functions", index.len());
    let distractors = index
        .entries
        .iter()
        .filter(|e| !planted.contains(&e.program.name.as_str()))
        .count();
    assert!(distractors >= 40, "only {distractors} distractors");

    let draft = load_benchmark_draft("sieve");
    let api = api();
    let fs = VirtualFs::new();
    let vc = ValidationCtx { api: &api, fs: &fs };
    let cfg = SpliceConfig::default(); // k = 5
    assert_eq!(cfg.k, 5);
    let out = splice(&draft, &index, &cfg, &vc).unwrap();
    assert!(!out.solutions.is_empty(), "no sieve solution found");

    let fully_correct = out.solutions.iter().find(|s| {
        standalone_sieve_value(&s.program, 1) == Some(false)
            && standalone_sieve_value(&s.program, 2) == Some(true)
            && standalone_sieve_value(&s.program, 29) == Some(true)
            && (1..=100).all(|n| standalone_sieve_value(&s.program, n) == Some(is_prime(n)))
    });
    assert!(
        fully_correct.is_some(),
        "no returned solution agrees with trial division on 1..=100"
    );

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("ACCEPTANCE 1 (end-to-end sieve, {elapsed:?}): PASS");
}

#[test]
fn acceptance_2_benchmark_suite() {
    let suite_start = Instant::now();
    let index = bundled_index();
    let api = api();
    let cfg = bench_cfg();
    assert_eq!(cfg.k, 5);

    for name in [
        "sieve",
        "binsearch",
        "matmul",
        "lcs",
        "quicksort",
        "csvread",
        "facedetect",
    ] {
        let started = Instant::now();
        let draft = load_benchmark_draft(name);
        let fs = benchmark_fs(name);
        let vc = ValidationCtx { api: &api, fs: &fs };
        let out = splice(&draft, &index, &cfg, &vc).unwrap();
        assert!(!out.solutions.is_empty(), "{name}: no solution");

        // re-validate the first solution independently of the search
        let first = &out.solutions[0];
        let ok = match &draft.requirement {
            Requirement::Tests(t) => run_tests(&first.program, t, &api, &fs, &cfg.test_limits),
            Requirement::Automaton(a) => {
                let run = eval(&first.program, vec![], &api, &fs, &cfg.test_limits);
                run.result.is_ok() && a.check(&run.trace)
            }
        };
        assert!(ok, "{name}: first solution fails re-validation");

        let elapsed = started.elapsed();
        assert!(
            elapsed < Duration::from_secs(60),
            "{name} took {elapsed:?}"
        );
        println!("  benchmark {name}: {} solution(s) in {elapsed:?}", out.solutions.len());
    }
    let total = suite_start.elapsed();
    assert!(total < Duration::from_secs(300), "suite took {total:?}");
    println!("ACCEPTANCE 2 (benchmark suite, {total:?}): PASS");
}

#[test]
fn acceptance_3_ablation_count_orderings() {
    let index = bundled_index();
    let api = api();
    let cfg = bench_cfg();

    // benchmarks with at least one expression hole
    for name in ["sieve", "binsearch", "facedetect"] {
        let draft = load_benchmark_draft(name);
        let fs = benchmark_fs(name);
        let vc = ValidationCtx { api: &api, fs: &fs };
        let (_, with_both) = ablation_run(&draft, &index, &cfg, true, true, &vc).unwrap();
        let (_, no_types) = ablation_run(&draft, &index, &cfg, false, true, &vc).unwrap();
        let (_, no_roles) = ablation_run(&draft, &index, &cfg, true, false, &vc).unwrap();
        assert!(
            no_types.candidates_evaluated > with_both.candidates_evaluated,
            "{name}: no-types {} !> with-types {}",
            no_types.candidates_evaluated,
            with_both.candidates_evaluated
        );
        assert!(
            no_roles.candidates_evaluated >= with_both.candidates_evaluated,
            "{name}: no-roles {} < with-roles {}",
            no_roles.candidates_evaluated,
            with_both.candidates_evaluated
        );
        println!(
            "  {name}: with={} no-types={} no-roles={}",
            with_both.candidates_evaluated,
            no_types.candidates_evaluated,
            no_roles.candidates_evaluated
        );
    }

    // the statement-hole-only benchmark: role matching is expression-only,
    // so disabling it changes nothing at all
    let draft = load_benchmark_draft("lcs");
    let fs = benchmark_fs("lcs");
    let vc = ValidationCtx { api: &api, fs: &fs };
    let (sols_on, with_roles) = ablation_run(&draft, &index, &cfg, true, true, &vc).unwrap();
    let (sols_off, no_roles) = ablation_run(&draft, &index, &cfg, true, false, &vc).unwrap();
    assert_eq!(
        with_roles.candidates_evaluated,
        no_roles.candidates_evaluated
    );
    assert_eq!(with_roles.tests_run, no_roles.tests_run);
    let texts = |sols: &[splice_core::Solution]| -> Vec<String> {
        sols.iter().map(|s| pretty_print(&s.program)).collect()
    };
    assert_eq!(texts(&sols_on), texts(&sols_off));
    println!("ACCEPTANCE 3 (ablation count orderings): PASS");
}

/// In-memory index over generated donor functions; retrieval order is by
/// source id (all scores tie at zero), which keeps the search deterministic.
fn synthetic_index(donors: &[Program]) -> CorpusIndex {
    let entries = donors
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let source = SourceId(i as u32);
            IndexEntry {
                source,
                feature: FeatureVector {
                    nl_weights: BTreeMap::new(),
                    names: BTreeSet::new(),
                    source,
                },
                program: p.clone(),
                path: std::path::PathBuf::from("<memory>"),
                span: (0, 0),
            }
        })
        .collect();
    CorpusIndex {
        entries,
        doc_freq: BTreeMap::new(),
        config: FeatureConfig::bundled(),
    }
}

fn solution_set(
    draft: &splice_core::Draft,
    index: &CorpusIndex,
    type_matching: bool,
    role_matching: bool,
) -> BTreeSet<String> {
    let api = api();
    let fs = VirtualFs::new();
    let vc = ValidationCtx { api: &api, fs: &fs };
    let cfg = SpliceConfig {
        k: index.len(),
        max_solutions: 10_000,
        type_matching,
        role_matching,
        test_limits: Limits::new(200_000, Duration::from_millis(200)),
        workers: 1,
        ..SpliceConfig::default()
    };
    splice(draft, index, &cfg, &vc)
        .unwrap()
        .solutions
        .iter()
        .map(|s| pretty_print(&s.program))
        .collect()
}

#[test]
fn acceptance_4_heuristic_soundness_randomized() {
    let mut gen = Gen::new(0xacce55);
    let mut nonempty = 0;
    let trials = 200;
    for trial in 0..trials {
        let donors: Vec<Program> = (0..2)
            .map(|i| parse_fn(&gen.function(&format!("d{trial}x{i}"))))
            .collect();
        let two_holes = gen.rng.gen_bool(0.5);
        let stmt_hole = gen.rng.gen_bool(0.3);
        let draft = parse_draft_str(&gen.draft(two_holes, stmt_hole));
        let index = synthetic_index(&donors);

        let types_on = solution_set(&draft, &index, true, true);
        let types_off = solution_set(&draft, &index, false, true);
        assert_eq!(
            types_on, types_off,
            "trial {trial}: type matching changed the solution set"
        );
        let roles_off = solution_set(&draft, &index, true, false);
        assert!(
            types_on.is_subset(&roles_off),
            "trial {trial}: role matching produced solutions absent without it"
        );
        if !types_on.is_empty() {
            nonempty += 1;
        }
    }
    assert!(nonempty > 10, "only {nonempty}/{trials} trials had solutions");
    println!(
        "ACCEPTANCE 4 (heuristic soundness, {trials} trials, {nonempty} non-vacuous): PASS"
    );
}

#[test]
fn acceptance_5_knn_matches_brute_force() {
    let mut gen = Gen::new(0x5ca1e);
    let words = [
        "alpha", "beta", "gamma", "delta", "sigma", "omega", "kappa", "theta",
    ];
    let query_draft = parse_draft_str(
        "/* COMMENT: alpha beta gamma delta\n * TEST:\n * return q(1) == 1;\n */\n\
         int q(int alphaBeta) { int gammaDelta = alphaBeta; return gammaDelta; }",
    );
    let dummy = parse_fn("int d() { return 0; }");

    for corpus in 0..100 {
        let n = gen.rng.gen_range(1..=200);
        let mut entries = Vec::new();
        for i in 0..n {
            let mut nl = BTreeMap::new();
            for w in &words {
                if gen.rng.gen_bool(0.5) {
                    nl.insert(w.to_string(), gen.rng.gen_range(1..100) as f64 / 8.0);
                }
            }
            let mut names = BTreeSet::new();
            for w in &words {
                if gen.rng.gen_bool(0.3) {
                    names.insert(w.to_string());
                }
            }
            // sprinkle exact duplicates to exercise tie-breaking
            if i > 0 && gen.rng.gen_bool(0.15) {
                let prev: &IndexEntry = &entries[i - 1];
                nl = prev.feature.nl_weights.clone();
                names = prev.feature.names.clone();
            }
            let source = SourceId(i as u32);
            entries.push(IndexEntry {
                source,
                feature: FeatureVector {
                    nl_weights: nl,
                    names,
                    source,
                },
                program: dummy.clone(),
                path: std::path::PathBuf::from("<memory>"),
                span: (0, 0),
            });
        }
        let mut doc_freq = BTreeMap::new();
        for w in &words {
            let df = entries
                .iter()
                .filter(|e| e.feature.nl_weights.contains_key(*w))
                .count() as u32;
            if df > 0 {
                doc_freq.insert(w.to_string(), df);
            }
        }
        let index = CorpusIndex {
            entries,
            doc_freq,
            config: FeatureConfig::bundled(),
        };
        let w_nl = gen.rng.gen_range(0..=10) as f64 / 10.0;
        let weights = QueryWeights::new(w_nl, 1.0 - w_nl).unwrap();
        let k = gen.rng.gen_range(1..=n + 3);

        let got = knn_query(&index, &query_draft, k, &weights).unwrap();

        // brute force: score every entry, then select maxima repeatedly
        let (q_nl, q_names) = index.draft_features(&query_draft);
        let mut scored: Vec<(SourceId, f64)> = index
            .entries
            .iter()
            .map(|e| {
                let s = weights.nl() * cosine(&q_nl, &e.feature.nl_weights)
                    + weights.names() * jaccard(&q_names, &e.feature.names);
                (e.source, s)
            })
            .collect();
        let mut expected = Vec::new();
        while expected.len() < k && !scored.is_empty() {
            let mut best = 0;
            for i in 1..scored.len() {
                let (id_b, s_b) = scored[best];
                let (id_i, s_i) = scored[i];
                if s_i > s_b || (s_i == s_b && id_i < id_b) {
                    best = i;
                }
            }
            expected.push(scored.remove(best));
        }

        assert_eq!(got.len(), expected.len(), "corpus {corpus}");
        for (g, e) in got.iter().zip(&expected) {
            assert_eq!(g.0, e.0, "corpus {corpus}: rank order diverges");
            assert_eq!(
                g.1.to_bits(),
                e.1.to_bits(),
                "corpus {corpus}: scores not bit-exact"
            );
        }
    }
    println!("ACCEPTANCE 5 (k-NN brute-force oracle, 100 corpora): PASS");
}

#[test]
fn acceptance_6_precision_ground_truth() {
    let valid = [
        "// doubles by self addition\nint twice(int y) { return y + y; }\n",
        "// doubles by multiplication\nint doubled(int z) { return z * 2; }\n",
        "// doubles with the factor first\nint timesTwo(int q) { return 2 * q; }\n",
        "// doubling helper\nint dupe(int r) { return r + r; }\n",
        "// scale by two\nint scaleTwo(int w) { return w * 2; }\n",
    ];
    let invalid = [
        "// always zero\nint zero(int a) { return 0; }\n",
        "// identity\nint identity(int b) { return b; }\n",
        "// decrement\nint dec(int c) { return c - 1; }\n",
        "// constant five\nint five(int d) { return 5; }\n",
        "// square\nint square(int e) { return e * e; }\n",
    ];
    let draft_text = "/* COMMENT:\n * double the input value\n * TEST:\n * __solution__\n\
                      * return dbl(0) == 0 && dbl(3) == 6;\n */\n\
                      int dbl(int x) {\n  return ??;\n}\n";

    let cases: [(usize, Vec<&str>); 3] = [
        (0, invalid.to_vec()),
        (2, vec![valid[0], invalid[0], valid[1], invalid[1], invalid[3]]),
        (5, valid.to_vec()),
    ];
    let api = api();
    for (h, functions) in cases {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("corpus.spl"), functions.concat()).unwrap();
        let (index, diags) =
            build_index(dir.path(), api.sigs(), FeatureConfig::bundled()).unwrap();
        assert!(diags.is_empty());
        assert_eq!(index.len(), 5);
        let draft = parse_draft_str(draft_text);
        let fs = VirtualFs::new();
        let vc = ValidationCtx { api: &api, fs: &fs };
        let got = measure_precision(&draft, &index, 5, &QueryWeights::default(), &vc).unwrap();
        let expected = h as f64 / 5.0;
        assert_eq!(got, expected, "h={h}");
    }
    println!("ACCEPTANCE 6 (precision ground truth 0/5, 2/5, 5/5): PASS");
}

#[test]
fn acceptance_7_name_boost_ratio() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("a.spl"),
        "// prune filter\nvoid prune(int x) { return; }\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("b.spl"),
        "// unrelated words entirely\nvoid other(int y) { return; }\n",
    )
    .unwrap();
    let api = api();
    let (index, _) = build_index(dir.path(), api.sigs(), FeatureConfig::bundled()).unwrap();
    let entry = index
        .entries
        .iter()
        .find(|e| e.program.name == "prune")
        .unwrap();
    // both terms occur in exactly one of the two documents (equal idf);
    // "prune" adds one function-name occurrence to one comment occurrence
    let w_prune = entry.feature.nl_weights["prune"];
    let w_filter = entry.feature.nl_weights["filter"];
    let ratio = w_prune / w_filter;
    assert!(
        (ratio - 6.0).abs() <= 1e-9,
        "boost ratio {ratio} (prune={w_prune}, filter={w_filter})"
    );
    println!("ACCEPTANCE 7 (tf-idf name boost ratio {ratio}): PASS");
}

#[test]
fn acceptance_8_automaton_checking() {
    let draft = load_benchmark_draft("facedetect");
    let Requirement::Automaton(automaton) = &draft.requirement else {
        panic!("face draft must carry an automaton");
    };
    let api = api();
    let fs = benchmark_fs("facedetect");
    let expected_order = [
        "newClassifier",
        "imread",
        "detectMultiScale",
        "rectangle",
        "imwrite",
    ];

    // hand-assembled candidate completions: one in the constrained order,
    // the rest reordered or truncated
    let candidates = [
        // the right call sequence
        "void facedetect() {\n  String input = \"lena.jpg\";\n  Classifier cls = newClassifier(\"haarcascade.xml\");\n\
         \n  Image picture = imread(input);\n  Detections faces = detectMultiScale(cls, picture);\n\
         \n  rectangle(picture, faces);\n  imwrite(\"faces.png\", picture);\n}",
        // reads the image twice
        "void facedetect() {\n  String input = \"lena.jpg\";\n  Classifier cls = newClassifier(\"haarcascade.xml\");\n\
         \n  Image first = imread(input);\n  Image picture = imread(input);\n  Detections faces = detectMultiScale(cls, picture);\n\
         \n  rectangle(picture, faces);\n  imwrite(\"faces.png\", picture);\n}",
        // writes before detecting
        "void facedetect() {\n  String input = \"lena.jpg\";\n  Classifier cls = newClassifier(\"haarcascade.xml\");\n\
         \n  Image picture = imread(input);\n  imwrite(\"faces.png\", picture);\n  Detections faces = detectMultiScale(cls, picture);\n\
         \n  rectangle(picture, faces);\n}",
        // never draws
        "void facedetect() {\n  String input = \"lena.jpg\";\n  Classifier cls = newClassifier(\"haarcascade.xml\");\n\
         \n  Image picture = imread(input);\n  Detections faces = detectMultiScale(cls, picture);\n\
         \n  imwrite(\"faces.png\", picture);\n}",
        // unconstrained call in the middle is fine
        "void facedetect() {\n  String input = \"lena.jpg\";\n  Classifier cls = newClassifier(\"haarcascade.xml\");\n\
         \n  Image picture = imread(input);\n  String noise = readFile(\"lena.jpg\");\n  Detections faces = detectMultiScale(cls, picture);\n\
         \n  rectangle(picture, faces);\n  imwrite(\"faces.png\", picture);\n}",
    ];
    assert!(candidates.len() >= 3);
    let mut accepted = Vec::new();
    for (i, text) in candidates.iter().enumerate() {
        let program = parse_fn(text);
        let out = eval(&program, vec![], &api, &fs, &Limits::default());
        assert!(out.result.is_ok(), "candidate {i} crashed");
        let got = automaton.check(&out.trace);
        let oracle = oracle_automaton_accepts(automaton, &out.trace);
        assert_eq!(got, oracle, "candidate {i}: implementation vs simulator");
        // accepted exactly when the constrained subsequence appears in order
        let constrained: Vec<&str> = out
            .trace
            .iter()
            .map(|e| e.fname.as_str())
            .filter(|f| expected_order.contains(f))
            .collect();
        assert_eq!(got, constrained == expected_order, "candidate {i}");
        if got {
            accepted.push(i);
        }
    }
    assert_eq!(accepted, vec![0, 4], "exactly the in-order candidates pass");

    // every permutation of the five constrained events, checked against the
    // independent simulator: only the identity order is accepted
    let mk = |f: &str| ApiEvent {
        fname: f.to_string(),
        arg_types: vec![],
        receiver_type: (f == "detectMultiScale").then(|| "Classifier".to_string()),
        seq: 0,
    };
    let perms = permutations(&expected_order);
    let mut accepted_perms = 0;
    for p in &perms {
        let trace: Vec<ApiEvent> = p.iter().map(|f| mk(f)).collect();
        let got = automaton.check(&trace);
        assert_eq!(got, oracle_automaton_accepts(automaton, &trace));
        assert_eq!(got, *p == expected_order);
        if got {
            accepted_perms += 1;
        }
    }
    assert_eq!(perms.len(), 120);
    assert_eq!(accepted_perms, 1);

    // and the engine finds at least one automaton-satisfying completion
    let index = bundled_index();
    let vc = ValidationCtx { api: &api, fs: &fs };
    let out = splice(&draft, &index, &bench_cfg(), &vc).unwrap();
    assert!(!out.solutions.is_empty());
    println!("ACCEPTANCE 8 (automaton checking, 120 permutations): PASS");
}

fn permutations<'a>(items: &[&'a str]) -> Vec<Vec<&'a str>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn acceptance_10_brute_force_synthesis_oracle() {
    let api = api();
    let fs = VirtualFs::new();
    let limits = Limits::new(200_000, Duration::from_millis(200));

    // a fixed instance with a statement hole and renaming
    let fixed_draft = parse_draft_str(
        "/* COMMENT: accumulate\n * TEST:\n * __solution__\n * return f(4) == 8;\n */\n\
         int f(int x) {\n  int out = 0;\n  ??;\n  return out;\n}\n",
    );
    let fixed_donors = vec![
        parse_fn("int dblsum(int a) { int acc = 0; acc = a + a; return acc; }"),
        parse_fn("int noisy(int b) { int k = 3; k = k * b; return k; }"),
    ];

    let mut gen = Gen::new(0x1eaf);
    let mut instances: Vec<(splice_core::Draft, Vec<Program>)> =
        vec![(fixed_draft, fixed_donors)];
    for trial in 0..8 {
        let donors: Vec<Program> = (0..3)
            .map(|i| parse_fn(&gen.function(&format!("o{trial}x{i}"))))
            .collect();
        let two = gen.rng.gen_bool(0.5);
        let stmt = gen.rng.gen_bool(0.4);
        instances.push((parse_draft_str(&gen.draft(two, stmt)), donors));
    }

    let mut nonempty = 0;
    for (i, (draft, donors)) in instances.iter().enumerate() {
        let expected = oracle_solutions(draft, donors, &api, &fs, &limits, 8);

        let index = synthetic_index(donors);
        let vc = ValidationCtx { api: &api, fs: &fs };
        let cfg = SpliceConfig {
            k: donors.len(),
            max_solutions: 100_000,
            role_matching: false,
            test_limits: limits,
            ..SpliceConfig::default()
        };
        let got: BTreeSet<String> = splice(draft, &index, &cfg, &vc)
            .unwrap()
            .solutions
            .iter()
            .map(|s| pretty_print(&s.program))
            .collect();
        assert_eq!(got, expected, "instance {i}");
        if !expected.is_empty() {
            nonempty += 1;
        }
    }
    assert!(nonempty >= 2, "oracle comparison was mostly vacuous");
    println!(
        "ACCEPTANCE 10 (brute-force synthesis oracle, {} instances, {nonempty} non-vacuous): PASS",
        instances.len()
    );
}
