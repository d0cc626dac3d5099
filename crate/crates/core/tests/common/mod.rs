//! Test-only oracles written straight from the semantic clauses, sharing no
//! code with the checker.

#![allow(dead_code)]

use std::collections::BTreeSet;

use milcheck::formula::{Formula, VarId};
use milcheck::kripke::{KripkeModel, WorldId};

pub type Worlds = BTreeSet<usize>;

fn val(m: &KripkeModel, w: usize, v: &VarId) -> bool {
    m.holds(WorldId(w as u32), v)
}

fn vals(m: &KripkeModel, w: usize, vs: &[VarId]) -> Vec<bool> {
    vs.iter().map(|v| val(m, w, v)).collect()
}

fn succ(m: &KripkeModel, w: usize) -> Worlds {
    m.successors(WorldId(w as u32)).iter().map(|s| s.index()).collect()
}

fn image(m: &KripkeModel, t: &Worlds) -> Worlds {
    t.iter().flat_map(|&w| succ(m, w)).collect()
}

fn subsets(s: &Worlds) -> Vec<Worlds> {
    let items: Vec<usize> = s.iter().copied().collect();
    (0..1u32 << items.len())
        .map(|mask| (0..items.len()).filter(|i| mask >> i & 1 == 1).map(|i| items[i]).collect())
        .collect()
}

/// `M, T ⊨ φ`, by brute force over every split and every successor team.
pub fn sat(m: &KripkeModel, t: &Worlds, f: &Formula) -> bool {
    match f {
        Formula::Prop(v) => t.iter().all(|&w| val(m, w, v)),
        Formula::NegProp(v) => t.iter().all(|&w| !val(m, w, v)),
        Formula::And(a, b) => sat(m, t, a) && sat(m, t, b),
        Formula::Or(a, b) => subsets(t).into_iter().any(|l| {
            subsets(t)
                .into_iter()
                .any(|r| l.union(&r).copied().collect::<Worlds>() == *t && sat(m, &l, a) && sat(m, &r, b))
        }),
        Formula::Diamond(g) => subsets(&image(m, t)).into_iter().any(|u| {
            t.iter().all(|&w| succ(m, w).intersection(&u).next().is_some()) && sat(m, &u, g)
        }),
        Formula::Box(g) => sat(m, &image(m, t), g),
        Formula::Dep {
            determiners,
            determined,
        } => t.iter().all(|&w| {
            t.iter().all(|&w2| {
                vals(m, w, determiners) != vals(m, w2, determiners) || val(m, w, determined) == val(m, w2, determined)
            })
        }),
        Formula::Indep { left, cond, right } => t.iter().all(|&w| {
            t.iter().all(|&w2| {
                vals(m, w, cond) != vals(m, w2, cond)
                    || t.iter().any(|&w3| {
                        vals(m, w3, cond) == vals(m, w, cond)
                            && vals(m, w3, left) == vals(m, w, left)
                            && vals(m, w3, right) == vals(m, w2, right)
                    })
            })
        }),
        Formula::GenAtom { atom, args } => {
            let half = args.len() / 2;
            match atom.as_str() {
                "dep" => {
                    let (det, out) = args.split_at(args.len() - 1);
                    sat(
                        m,
                        t,
                        &Formula::Dep {
                            determiners: det.to_vec(),
                            determined: out[0].clone(),
                        },
                    )
                }
                "inc" => t
                    .iter()
                    .all(|&w| t.iter().any(|&w2| vals(m, w, &args[..half]) == vals(m, w2, &args[half..]))),
                "exc" => t
                    .iter()
                    .all(|&w| t.iter().all(|&w2| vals(m, w, &args[..half]) != vals(m, w2, &args[half..]))),
                "zero" => t.len() == 1 && t.iter().all(|&w| !val(m, w, &args[0])),
                other => panic!("oracle does not know atom {other}"),
            }
        }
    }
}

pub fn all_worlds(m: &KripkeModel) -> Worlds {
    (0..m.world_count()).collect()
}

pub fn worlds_of(t: &milcheck::kripke::Team) -> Worlds {
    t.iter().map(|w| w.index()).collect()
}
