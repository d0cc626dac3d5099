//! Solver input for the first-order part of a translated sentence.
//!
//! The `Y` predicates are left uninterpreted, so the output is satisfiable
//! exactly when the ESO sentence is.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::str::FromStr;

use thiserror::Error;

use super::fo_part;
use super::syntax::{EsoSentence, FoFormula, FoVar, Pred, Quant};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ExportFormat {
    Tptp,
    Smtlib,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported export format {0:?} (expected tptp or smtlib)")]
pub struct UnsupportedFormat(pub String);

impl FromStr for ExportFormat {
    type Err = UnsupportedFormat;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tptp" => Ok(ExportFormat::Tptp),
            "smtlib" | "smt-lib" | "smt2" => Ok(ExportFormat::Smtlib),
            _ => Err(UnsupportedFormat(s.to_string())),
        }
    }
}

pub fn export(s: &EsoSentence, format: ExportFormat) -> String {
    match format {
        ExportFormat::Tptp => tptp(s),
        ExportFormat::Smtlib => smtlib(s),
    }
}

fn tptp_pred(p: &Pred) -> String {
    match p {
        Pred::Team => "t".into(),
        Pred::Edge => "e".into(),
        Pred::Prop(v) => format!("a_{v}"),
        Pred::Column(i) => format!("col{i}"),
        Pred::Aux(i) => format!("y{i}"),
    }
}

fn tptp_var(v: FoVar) -> String {
    v.to_string().to_ascii_uppercase()
}

fn tptp_formula(f: &FoFormula, out: &mut String) {
    let join = |fs: &[FoFormula], op: &str, out: &mut String| {
        out.push('(');
        for (i, g) in fs.iter().enumerate() {
            if i > 0 {
                write!(out, " {op} ").unwrap();
            }
            tptp_formula(g, out);
        }
        out.push(')');
    };
    match f {
        FoFormula::True => out.push_str("$true"),
        FoFormula::False => out.push_str("$false"),
        FoFormula::Atom(p, args) => {
            let args: Vec<String> = args.iter().map(|v| tptp_var(*v)).collect();
            write!(out, "{}({})", tptp_pred(p), args.join(",")).unwrap();
        }
        FoFormula::Eq(a, b) => write!(out, "{} = {}", tptp_var(*a), tptp_var(*b)).unwrap(),
        FoFormula::Not(g) => {
            out.push('~');
            tptp_formula(g, out);
        }
        FoFormula::And(gs) => join(gs, "&", out),
        FoFormula::Or(gs) => join(gs, "|", out),
        FoFormula::Implies(a, b) => join(&[(**a).clone(), (**b).clone()], "=>", out),
        FoFormula::Iff(a, b) => join(&[(**a).clone(), (**b).clone()], "<=>", out),
        FoFormula::Forall(v, g) => {
            write!(out, "![{}]: ", tptp_var(*v)).unwrap();
            tptp_formula(g, out);
        }
        FoFormula::Exists(v, g) => {
            write!(out, "?[{}]: ", tptp_var(*v)).unwrap();
            tptp_formula(g, out);
        }
    }
}

fn tptp(s: &EsoSentence) -> String {
    let body = fo_part(s);
    let mut out = String::from("% first-order part; y* predicates are uninterpreted\n");
    out.push_str("fof(phi, axiom,\n    ");
    let mut i = 0;
    while i < body.prefix.len() {
        let q = body.prefix[i].0;
        let mut vs = Vec::new();
        while i < body.prefix.len() && body.prefix[i].0 == q {
            vs.push(tptp_var(body.prefix[i].1));
            i += 1;
        }
        let sym = if q == Quant::Forall { '!' } else { '?' };
        write!(out, "{sym}[{}]: ", vs.join(",")).unwrap();
    }
    tptp_formula(&body.matrix, &mut out);
    out.push_str(").\n");
    out
}

fn smt_pred(p: &Pred) -> String {
    match p {
        Pred::Column(i) => format!("A{}", i + 1),
        other => other.to_string(),
    }
}

fn smt_formula(f: &FoFormula, out: &mut String) {
    let app = |op: &str, fs: &[&FoFormula], out: &mut String| {
        write!(out, "({op}").unwrap();
        for g in fs {
            out.push(' ');
            smt_formula(g, out);
        }
        out.push(')');
    };
    match f {
        FoFormula::True => out.push_str("true"),
        FoFormula::False => out.push_str("false"),
        FoFormula::Atom(p, args) => {
            write!(out, "({}", smt_pred(p)).unwrap();
            for a in args {
                write!(out, " {a}").unwrap();
            }
            out.push(')');
        }
        FoFormula::Eq(a, b) => write!(out, "(= {a} {b})").unwrap(),
        FoFormula::Not(g) => app("not", &[g], out),
        FoFormula::And(gs) => app("and", &gs.iter().collect::<Vec<_>>(), out),
        FoFormula::Or(gs) => app("or", &gs.iter().collect::<Vec<_>>(), out),
        FoFormula::Implies(a, b) => app("=>", &[a, b], out),
        FoFormula::Iff(a, b) => app("=", &[a, b], out),
        FoFormula::Forall(v, g) => {
            write!(out, "(forall (({v} W)) ").unwrap();
            smt_formula(g, out);
            out.push(')');
        }
        FoFormula::Exists(v, g) => {
            write!(out, "(exists (({v} W)) ").unwrap();
            smt_formula(g, out);
            out.push(')');
        }
    }
}

fn smtlib(s: &EsoSentence) -> String {
    let body = fo_part(s);
    let mut out = String::from("; first-order part; Y* predicates are uninterpreted\n");
    out.push_str("(set-logic UF)\n(declare-sort W 0)\n");
    let preds: BTreeSet<Pred> = body.matrix.predicates().into_iter().collect();
    for p in &preds {
        let args = vec!["W"; p.arity()].join(" ");
        writeln!(out, "(declare-fun {} ({args}) Bool)", smt_pred(p)).unwrap();
    }
    out.push_str("(assert ");
    let mut closing = 0;
    let mut i = 0;
    while i < body.prefix.len() {
        let q = body.prefix[i].0;
        let mut vs = Vec::new();
        while i < body.prefix.len() && body.prefix[i].0 == q {
            vs.push(format!("({} W)", body.prefix[i].1));
            i += 1;
        }
        let kw = if q == Quant::Forall { "forall" } else { "exists" };
        write!(out, "({kw} ({}) ", vs.join(" ")).unwrap();
        closing += 1;
    }
    smt_formula(&body.matrix, &mut out);
    out.push_str(&")".repeat(closing));
    out.push_str(")\n(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo_translate::translate;
    use crate::formula::{parse, Formula};

    #[test]
    fn tptp_single_axiom() {
        let s = translate(&Formula::prop("p")).unwrap();
        let text = export(&s, ExportFormat::Tptp);
        assert_eq!(text.matches("fof(").count(), 1);
        assert!(text.contains("![X,Y]: ?[Z1]: (t(X) => a_p(X)))."), "{text}");
    }

    #[test]
    fn smtlib_declares_everything() {
        let s = translate(&parse("p | <>q").unwrap()).unwrap();
        let text = export(&s, ExportFormat::Smtlib);
        for decl in ["(declare-fun T (W) Bool)", "(declare-fun E (W W) Bool)", "(declare-fun Y0 (W) Bool)", "(declare-fun A_q (W) Bool)"] {
            assert!(text.contains(decl), "{decl} missing in\n{text}");
        }
        assert!(text.ends_with("(check-sat)\n"));
        assert_eq!(text.matches('(').count(), text.matches(')').count());
    }

    #[test]
    fn byte_stable() {
        let f = parse("[](p | indep(p ; q ; r)) & <>exc(p ; q)").unwrap();
        for fmt in [ExportFormat::Tptp, ExportFormat::Smtlib] {
            assert_eq!(export(&translate(&f).unwrap(), fmt), export(&translate(&f).unwrap(), fmt));
        }
        assert!("dimacs".parse::<ExportFormat>().is_err());
    }
}
