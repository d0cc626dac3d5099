//! Acceptance suite: one line per criterion, then a summary. Runs without
//! the libtest harness so the lines are printed even when everything passes.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use milcheck::bisim::{
    check_invariance, duplicate_world, largest_bisimulation, unfold, InvarianceVerdict,
};
use milcheck::bounded_sat::{bounded_sat, SatQuery};
use milcheck::checker::{check, CheckConfig};
use milcheck::cli::corpus::{default_vars, random_formula, random_model, AtomKind};
use milcheck::dining::{
    build_model, evaluate, independence_family, succinctness_trend, verify_proposition,
};
use milcheck::fo_translate::{encode_structure, eval_eso, translate, verify_prefix};
use milcheck::formula::{parse, vars, Formula};
use milcheck::kripke::{KripkeModel, Team, WorldId};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

const PLAIN: CheckConfig = CheckConfig {
    enable_flat_shortcut: false,
    enable_memo: false,
    max_enumeration_budget: None,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn example_models() -> (KripkeModel, KripkeModel) {
    let m = KripkeModel::builder(2).edge(0, 1).build().unwrap();
    let m2 = KripkeModel::builder(3).edge(0, 1).edge(0, 2).build().unwrap();
    (m, m2)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (m, m2) = example_models();
    let f = parse("[]D[zero](x)").unwrap();
    let left = check(&m, &Team::from_indices([0]), &f, CheckConfig::default()).unwrap();
    let right = check(&m2, &Team::from_indices([0]), &f, CheckConfig::default()).unwrap();
    let z = largest_bisimulation(&m, &m2, &vars(&["x"]));
    let pairs = [(0, 0), (1, 1), (1, 2)];
    let has_pairs = pairs.iter().all(|&(a, b)| z.contains(WorldId(a), WorldId(b)));
    let fast = start.elapsed() < Duration::from_secs(1);
    outcome(
        left && !right && has_pairs && fast,
        format!(
            "M,{{w}}: {left}; M',{{w'}}: {right}; bisimulation pairs {:?}; {:?}",
            z.pairs().map(|(a, b)| (a.0, b.0)).collect::<Vec<_>>(),
            start.elapsed()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut checks = 0;
    let mut r = rng(2);
    for j in 0..500 {
        let f = random_formula(&mut r, j % 3, AtomKind::None, &default_vars());
        assert!(f.is_flat());
        for _ in 0..4 {
            let (m, t) = random_model(&mut r, 4, &default_vars());
            let team = check(&m, &t, &f, PLAIN).unwrap();
            let pointwise = t
                .iter()
                .all(|w| check(&m, &Team::singleton(w), &f, PLAIN).unwrap());
            checks += 1;
            if team != pointwise || !check(&m, &Team::empty(), &f, PLAIN).unwrap() {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < Duration::from_secs(30),
        format!("500 flat formulas, {checks} team checks without the flat shortcut, {violations} violations, {elapsed:?}"),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut r = rng(3);
    for j in 0..500 {
        let f = random_formula(&mut r, j % 3, AtomKind::Dep, &default_vars());
        let g = f.rewrite_dep_to_indep();
        let (m, t) = random_model(&mut r, 4, &default_vars());
        if g.contains_dep() || check(&m, &t, &f, PLAIN).unwrap() != check(&m, &t, &g, PLAIN).unwrap() {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < Duration::from_secs(30),
        format!("500 dependence formulas, {violations} violations, {elapsed:?}"),
    )
}

/// Every model of at most `max` worlds without edges, labels over `p, q`.
fn edge_free_models(max: usize) -> Vec<KripkeModel> {
    let vs = vars(&["p", "q"]);
    let mut out = Vec::new();
    for n in 1..=max {
        for code in 0..4usize.pow(n as u32) {
            let labels = (0..n)
                .map(|i| {
                    let mask = code / 4usize.pow(i as u32) % 4;
                    vs.iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            out.push(KripkeModel::new(labels, std::iter::empty()).unwrap());
        }
    }
    out
}

fn non_closure_witness(f: &Formula) -> Option<(KripkeModel, Team, Team)> {
    for m in edge_free_models(4) {
        let full = m.full_team();
        for t in full.subteams() {
            if !check(&m, &t, f, CheckConfig::default()).unwrap() {
                continue;
            }
            for s in t.subteams() {
                if !check(&m, &s, f, CheckConfig::default()).unwrap() {
                    return Some((m.clone(), t.clone(), s));
                }
            }
        }
    }
    None
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut r = rng(4);
    for j in 0..300 {
        let f = random_formula(&mut r, j % 3, AtomKind::Dep, &default_vars());
        let (m, t) = random_model(&mut r, 4, &default_vars());
        if check(&m, &t, &f, CheckConfig::default()).unwrap() {
            for s in t.subteams() {
                if !check(&m, &s, &f, CheckConfig::default()).unwrap() {
                    violations += 1;
                }
            }
        }
    }
    let f = parse("indep(p ; ; q)").unwrap();
    let witness = non_closure_witness(&f);
    let elapsed = start.elapsed();
    let detail = match &witness {
        Some((m, t, s)) => format!(
            "{} holds on {:?} of a {}-world model but not on {:?}",
            f,
            t.iter().map(|w| w.0).collect::<Vec<_>>(),
            m.world_count(),
            s.iter().map(|w| w.0).collect::<Vec<_>>()
        ),
        None => format!("no non-closure witness for {f}"),
    };
    // the witness must hold up under the brute-force oracle
    let confirmed = witness.as_ref().is_some_and(|(m, t, s)| {
        common::sat(m, &common::worlds_of(t), &f) && !common::sat(m, &common::worlds_of(s), &f)
    });
    outcome(
        violations == 0 && confirmed && elapsed < Duration::from_secs(60),
        format!("300 dependence formulas, {violations} closure violations; {detail}; {elapsed:?}"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut bad_prefix = 0;
    let mut comparisons = 0;
    let mut r = rng(5);
    for j in 0..200 {
        let kind = AtomKind::MIL[j % 3];
        let f = random_formula(&mut r, j / 3 % 3, kind, &default_vars());
        let s = translate(&f).unwrap();
        if !verify_prefix(&s) {
            bad_prefix += 1;
        }
        for _ in 0..3 {
            let (m, t) = random_model(&mut r, 3, &default_vars());
            comparisons += 1;
            let eso = eval_eso(&s, &encode_structure(&m, &t), None).unwrap();
            if eso != check(&m, &t, &f, CheckConfig::default()).unwrap() {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && bad_prefix == 0 && elapsed < Duration::from_secs(300),
        format!("200 formulas, {comparisons} model comparisons, {violations} violations, {bad_prefix} bad prefixes, {elapsed:?}"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut r = rng(6);
    let formulas: Vec<Formula> = (0..30)
        .map(|j| random_formula(&mut r, j % 3, AtomKind::MIL[j / 3 % 3], &default_vars()))
        .collect();
    let mut violations = 0;
    let mut checks = 0;
    for pair in 0..200 {
        let (m, t) = random_model(&mut r, 4, &default_vars());
        if pair % 2 == 0 {
            let w = WorldId(pair as u32 / 2 % m.world_count() as u32);
            let (d, copy) = duplicate_world(&m, w);
            let t2 = if t.contains(w) {
                Team::from_worlds(t.iter().filter(|&v| v != w).chain([copy]))
            } else {
                t.clone()
            };
            for f in &formulas {
                checks += 1;
                if !matches!(check_invariance(&m, &t, &d, &t2, f), Ok(InvarianceVerdict::Invariant(_))) {
                    violations += 1;
                }
            }
        } else {
            // the unfolding to depth 2 agrees with the model up to 2 steps,
            // which is all a formula of modal depth at most 2 can see
            let w = WorldId(pair as u32 / 2 % m.world_count() as u32);
            let (tree, root) = unfold(&m, w, 2);
            for f in &formulas {
                checks += 1;
                let a = check(&m, &Team::singleton(w), f, CheckConfig::default()).unwrap();
                let b = check(&tree, &Team::singleton(root), f, CheckConfig::default()).unwrap();
                if a != b {
                    violations += 1;
                }
            }
        }
    }
    let (m, m2) = example_models();
    let zero = check_invariance(
        &m,
        &Team::from_indices([0]),
        &m2,
        &Team::from_indices([0]),
        &parse("[]D[zero](x)").unwrap(),
    );
    let reproduced = matches!(zero, Ok(InvarianceVerdict::ExpectedNonInvariance { left: true, right: false, .. }));
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && reproduced && elapsed < Duration::from_secs(120),
        format!("200 pairs x 30 formulas, {checks} comparisons, {violations} violations; zero atom non-invariance reproduced: {reproduced}; {elapsed:?}"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let inst = build_model(3).unwrap();
    let worlds = inst.model.world_count();
    let base = evaluate(&inst, CheckConfig::default()).unwrap();
    let anonymity = base.anonymity();
    let proposition = verify_proposition(&inst);
    let mut caught = 0;
    let mut falsified = 0;
    let mut missed = Vec::new();
    let finals: Vec<_> = inst
        .payers()
        .into_iter()
        .flat_map(|p| (0..8).map(move |b| (p, b)))
        .collect();
    for &(payer, b) in &finals {
        let cut = evaluate(&inst.without_world(inst.final_world(payer, b)), CheckConfig::default()).unwrap();
        if cut.any_false() {
            falsified += 1;
        }
        if base.lost_in(&cut).is_empty() {
            missed.push(format!("{payer:?}/{b:03b}"));
        } else {
            caught += 1;
        }
    }
    let elapsed = start.elapsed();
    let failing_local = base.local.iter().filter(|&&(_, v)| !v).count();
    outcome(
        worlds == 37 && anonymity && proposition && missed.is_empty() && elapsed < Duration::from_secs(300),
        format!(
            "{worlds} worlds; phi_g {}; {failing_local} of {} phi_i_k false, so anonymity_formula(3) {}; verify_proposition {proposition}; \
             deletions detected by a check that held before: {caught}/{} (undetected: {}); \
             deletions leaving some check false: {falsified}/{}; {elapsed:?}",
            base.global,
            base.local.len(),
            if anonymity { "holds" } else { "fails" },
            finals.len(),
            missed.join(" "),
            finals.len(),
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let contradiction = parse("p & ~p").unwrap();
    let unsat_everywhere = (1..=4).all(|b| bounded_sat(&SatQuery::new(contradiction.clone(), b)).unwrap().is_none());
    let f = parse("<>p & <>~p").unwrap();
    let found = bounded_sat(&SatQuery::new(f.clone(), 4)).unwrap();
    let reverified = found.as_ref().is_some_and(|(m, t)| {
        check(m, t, &f, PLAIN).unwrap() && common::sat(m, &common::worlds_of(t), &f)
    });
    let size = found.as_ref().map(|(m, _)| m.world_count());
    // oracle for minimality: one world cannot carry both a p and a ~p successor
    let one_world_none = bounded_sat(&SatQuery::new(f.clone(), 1)).unwrap().is_none();
    let elapsed = start.elapsed();
    outcome(
        unsat_everywhere && size == Some(3) && reverified && elapsed < Duration::from_secs(60),
        format!(
            "p & ~p unsat at bounds 1..4: {unsat_everywhere}; <>p & <>~p witness has {size:?} worlds \
             (expected 3; 1-world search empty: {one_world_none}); witness re-verified: {reverified}; {elapsed:?}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let trend = succinctness_trend(4, Some(50_000_000)).unwrap();
    let branching: Vec<Option<usize>> = trend.iter().map(|p| p.branching).collect();
    let increasing = branching.len() >= 3
        && branching.iter().all(Option::is_some)
        && branching.windows(2).all(|w| w[0] < w[1]);
    // assignment count: i independent variables need 2^i distinct successors
    let counted = trend.iter().all(|p| p.branching == Some(1 << p.i));
    let sizes: Vec<i64> = (2..=10).map(|i| independence_family(i).size() as i64).collect();
    let second: BTreeSet<i64> = sizes.windows(3).map(|w| w[2] - 2 * w[1] + w[0]).collect();
    let quadratic = second.len() == 1 && second.iter().all(|&d| d > 0);
    let elapsed = start.elapsed();
    outcome(
        increasing && counted && quadratic && elapsed < Duration::from_secs(300),
        format!(
            "min branching for i=1..4: {branching:?}; matches 2^i: {counted}; sizes for i=2..10: {sizes:?}, \
             second differences {second:?}; {elapsed:?}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("example reproduction, zero atom", criterion_1),
        ("flatness", criterion_2),
        ("dependence as independence", criterion_3),
        ("downward closure", criterion_4),
        ("translation oracle", criterion_5),
        ("bisimulation invariance", criterion_6),
        ("dining cryptographers n=3", criterion_7),
        ("bounded satisfiability", criterion_8),
        ("succinctness trend", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{}] {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
