mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use milcheck::bisim::{check_invariance, duplicate_world, InvarianceVerdict};
use milcheck::bounded_sat::canonical_enumeration;
use milcheck::checker::{check, check_with_certificate, replay, CheckConfig};
use milcheck::cli::corpus::{default_vars, random_formula, random_model, AtomKind};
use milcheck::fo_translate::{encode_structure, eval_eso, translate, verify_prefix};
use milcheck::formula::{parse, vars, Formula};
use milcheck::kripke::{successor_teams, KripkeModel, Team, WorldId};

use common::{sat, worlds_of};

const CONFIGS: [CheckConfig; 4] = [
    CheckConfig {
        enable_flat_shortcut: true,
        enable_memo: true,
        max_enumeration_budget: None,
    },
    CheckConfig {
        enable_flat_shortcut: false,
        enable_memo: true,
        max_enumeration_budget: None,
    },
    CheckConfig {
        enable_flat_shortcut: true,
        enable_memo: false,
        max_enumeration_budget: None,
    },
    CheckConfig {
        enable_flat_shortcut: false,
        enable_memo: false,
        max_enumeration_budget: None,
    },
];

fn case(seed: u64, kinds: &[AtomKind], max_worlds: usize) -> (Formula, KripkeModel, Team) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = kinds[(seed % kinds.len() as u64) as usize];
    let depth = (seed / 7 % 3) as usize;
    let f = random_formula(&mut rng, depth, kind, &default_vars());
    let (m, t) = random_model(&mut rng, max_worlds, &default_vars());
    (f, m, t)
}

/// No flat shortcut and no memo.
const PLAIN: CheckConfig = CONFIGS[3];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn render_parse_round_trip(seed in any::<u64>()) {
        let (f, _, _) = case(seed, &AtomKind::ALL, 3);
        prop_assert_eq!(parse(&f.render()).unwrap(), f);
    }

    #[test]
    fn checker_matches_brute_force(seed in any::<u64>()) {
        let (f, m, t) = case(seed, &AtomKind::ALL, 3);
        let expected = sat(&m, &worlds_of(&t), &f);
        for cfg in CONFIGS {
            prop_assert_eq!(check(&m, &t, &f, cfg).unwrap(), expected, "{} {:?}", f, cfg);
        }
    }

    #[test]
    fn certificates_replay(seed in any::<u64>()) {
        let (f, m, t) = case(seed, &AtomKind::ALL, 3);
        let (v, cert) = check_with_certificate(&m, &t, &f, CheckConfig::default()).unwrap();
        prop_assert_eq!(v, cert.is_some());
        if let Some(c) = cert {
            prop_assert!(replay(&m, &t, &f, &c));
        }
    }

    #[test]
    fn dep_and_its_independence_rewrite_agree(seed in any::<u64>()) {
        let (f, m, t) = case(seed, &[AtomKind::Dep], 4);
        let g = f.rewrite_dep_to_indep();
        prop_assert!(!g.contains_dep());
        prop_assert_eq!(check(&m, &t, &f, PLAIN).unwrap(), check(&m, &t, &g, PLAIN).unwrap());
    }

    #[test]
    fn atom_free_formulas_are_flat(seed in any::<u64>()) {
        let (f, m, t) = case(seed, &[AtomKind::None], 4);
        let team = check(&m, &t, &f, PLAIN).unwrap();
        let pointwise = t.iter().all(|w| check(&m, &Team::singleton(w), &f, PLAIN).unwrap());
        prop_assert_eq!(team, pointwise);
    }

    #[test]
    fn dependence_fragment_is_downward_closed(seed in any::<u64>()) {
        let (f, m, t) = case(seed, &[AtomKind::None, AtomKind::Dep], 4);
        if check(&m, &t, &f, CheckConfig::default()).unwrap() {
            for s in t.subteams() {
                prop_assert!(check(&m, &s, &f, CheckConfig::default()).unwrap(), "{} on {:?}", f, s);
            }
        }
    }

    #[test]
    fn empty_team_satisfies_zero_free_formulas(seed in any::<u64>()) {
        let (f, m, _) = case(seed, &AtomKind::ALL[..5], 3);
        prop_assert!(check(&m, &Team::empty(), &f, CheckConfig::default()).unwrap());
    }

    #[test]
    fn translation_agrees_with_checker(seed in any::<u64>()) {
        let (f, m, t) = case(seed, &AtomKind::ALL[..5], 3);
        let s = translate(&f).unwrap();
        prop_assert!(verify_prefix(&s));
        let eso = eval_eso(&s, &encode_structure(&m, &t), None).unwrap();
        prop_assert_eq!(eso, check(&m, &t, &f, CheckConfig::default()).unwrap(), "{}", f);
    }

    #[test]
    fn duplication_preserves_verdicts(seed in any::<u64>(), pick in any::<u32>()) {
        let (f, m, t) = case(seed, &AtomKind::MIL, 4);
        let w = WorldId(pick % m.world_count() as u32);
        let (d, copy) = duplicate_world(&m, w);
        let t2 = if t.contains(w) { t.union(&Team::singleton(copy)) } else { t.clone() };
        let v = check_invariance(&m, &t, &d, &t2, &f).unwrap();
        prop_assert!(matches!(v, InvarianceVerdict::Invariant(_)), "{:?}", v);
    }

    #[test]
    fn successor_teams_are_the_covering_subsets(seed in any::<u64>()) {
        let (_, m, t) = case(seed, &[AtomKind::None], 4);
        let image: BTreeSet<WorldId> = t.iter().flat_map(|w| m.successors(w).to_vec()).collect();
        let image: Vec<WorldId> = image.into_iter().collect();
        let mut expected: Vec<Team> = (0..1u32 << image.len())
            .map(|mask| Team::from_worlds((0..image.len()).filter(|i| mask >> i & 1 == 1).map(|i| image[i])))
            .filter(|u| t.iter().all(|w| m.successors(w).iter().any(|s| u.contains(*s))))
            .collect();
        let mut got: Vec<Team> = successor_teams(&m, &t).collect();
        let sizes: Vec<usize> = got.iter().map(Team::len).collect();
        prop_assert!(sizes.windows(2).all(|p| p[0] <= p[1]));
        expected.sort();
        got.sort();
        prop_assert_eq!(got, expected);
    }
}

/// Isomorphism classes counted by brute force: canonical form is the least
/// (labels, edge set) over all world permutations.
fn brute_force_classes(n: usize, nvars: usize) -> usize {
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    for labels in 0..(1usize << nvars).pow(n as u32) {
        let lab: Vec<usize> = (0..n).map(|i| labels / (1usize << nvars).pow(i as u32) % (1usize << nvars)).collect();
        for code in 0..1u64 << (n * n) {
            let canon = perms
                .iter()
                .map(|p| {
                    let l: Vec<usize> = (0..n).map(|i| lab[p[i]]).collect();
                    let e: Vec<bool> = (0..n * n).map(|k| code >> (p[k / n] * n + p[k % n]) & 1 == 1).collect();
                    (l, e)
                })
                .min()
                .unwrap();
            seen.insert(canon);
        }
    }
    seen.len()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn canonical_enumeration_counts_isomorphism_classes() {
    // 10 and 104 are the counts of directed graphs with loops on 2 and 3 nodes
    assert_eq!(brute_force_classes(2, 0), 10);
    assert_eq!(brute_force_classes(3, 0), 104);
    for (n, nvars) in [(1, 0), (1, 2), (2, 0), (2, 1), (3, 0), (3, 1)] {
        let names = ["p", "q"];
        let vs = vars(&names[..nvars]);
        assert_eq!(
            canonical_enumeration(n, &vs).count(),
            brute_force_classes(n, nvars),
            "n={n} vars={nvars}"
        );
    }
}
