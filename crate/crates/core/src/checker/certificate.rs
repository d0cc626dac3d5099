use crate::atoms::{builtin_registry, team_matrix, AtomRegistry};
use crate::formula::Formula;
use crate::kripke::{succ_team, KripkeModel, Team};

use super::{dependence_on_team, independence_on_team};

/// The choices behind a true verdict, shaped like the formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// A literal holding on the whole team.
    Literal,
    /// A dependence, independence or generalized atom holding on the team.
    Atom,
    And(Box<Certificate>, Box<Certificate>),
    Or {
        left_team: Team,
        right_team: Team,
        left: Box<Certificate>,
        right: Box<Certificate>,
    },
    Diamond {
        witness: Team,
        inner: Box<Certificate>,
    },
    Box(Box<Certificate>),
}

impl Certificate {
    /// Witness teams chosen for `◇`, in pre-order.
    pub fn diamond_witnesses(&self) -> Vec<&Team> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(c) = stack.pop() {
            match c {
                Certificate::Literal | Certificate::Atom => {}
                Certificate::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Certificate::Or { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
                Certificate::Diamond { witness, inner } => {
                    out.push(witness);
                    stack.push(inner);
                }
                Certificate::Box(inner) => stack.push(inner),
            }
        }
        out
    }
}

/// Re-derives `M, T ⊨ φ` from the recorded choices alone: splits must cover
/// the team, diamond witnesses must be legal successor teams, and leaves are
/// evaluated directly.
pub fn replay(m: &KripkeModel, t: &Team, f: &Formula, cert: &Certificate) -> bool {
    replay_with_registry(m, t, f, cert, builtin_registry())
}

pub fn replay_with_registry(
    m: &KripkeModel,
    t: &Team,
    f: &Formula,
    cert: &Certificate,
    registry: &AtomRegistry,
) -> bool {
    match (f, cert) {
        (Formula::Prop(v), Certificate::Literal) => t.iter().all(|w| m.holds(w, v)),
        (Formula::NegProp(v), Certificate::Literal) => t.iter().all(|w| !m.holds(w, v)),
        (
            Formula::Dep {
                determiners,
                determined,
            },
            Certificate::Atom,
        ) => dependence_on_team(m, t, determiners, determined),
        (Formula::Indep { left, cond, right }, Certificate::Atom) => {
            independence_on_team(m, t, left, cond, right)
        }
        (Formula::GenAtom { atom, args }, Certificate::Atom) => registry
            .get(atom)
            .is_some_and(|a| a.arity().admits(args.len()) && a.evaluate(&team_matrix(m, t, args))),
        (Formula::And(l, r), Certificate::And(cl, cr)) => {
            replay_with_registry(m, t, l, cl, registry) && replay_with_registry(m, t, r, cr, registry)
        }
        (
            Formula::Or(l, r),
            Certificate::Or {
                left_team,
                right_team,
                left,
                right,
            },
        ) => {
            left_team.union(right_team) == *t
                && replay_with_registry(m, left_team, l, left, registry)
                && replay_with_registry(m, right_team, r, right, registry)
        }
        (Formula::Diamond(g), Certificate::Diamond { witness, inner }) => {
            let inside = witness
                .iter()
                .all(|s| t.iter().any(|w| m.has_edge(w, s)));
            let covering = t
                .iter()
                .all(|w| witness.iter().any(|s| m.has_edge(w, s)));
            inside && covering && replay_with_registry(m, witness, g, inner, registry)
        }
        (Formula::Box(g), Certificate::Box(inner)) => {
            replay_with_registry(m, &succ_team(m, t), g, inner, registry)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{check_with_certificate, CheckConfig};
    use crate::formula::parse;

    #[test]
    fn tampered_certificates_fail() {
        let m = KripkeModel::builder(3)
            .label(1, &["p"])
            .edge(0, 1)
            .edge(0, 2)
            .build()
            .unwrap();
        let root = Team::from_indices([0]);
        let f = parse("<>p & <>~p").unwrap();
        let (v, cert) = check_with_certificate(&m, &root, &f, CheckConfig::default()).unwrap();
        assert!(v);
        let cert = cert.unwrap();
        assert!(replay(&m, &root, &f, &cert));
        let wits: Vec<Team> = cert.diamond_witnesses().into_iter().cloned().collect();
        assert_eq!(wits, vec![Team::from_indices([1]), Team::from_indices([2])]);

        let swapped = match cert {
            Certificate::And(a, b) => Certificate::And(b, a),
            other => other,
        };
        assert!(!replay(&m, &root, &f, &swapped));
        assert!(!replay(&m, &root, &f, &Certificate::Literal));
    }
}
