//! Exact checks of BRST closure on constant field configurations.
//!
//! Field values are su(2)-valued supernumbers with exact rational
//! coefficients, so a vanishing residual is a literal equality. Transformation
//! rules live in text tables (see [`table`]); closure is tested on seeded random
//! states, and rule signs can be recalibrated by a transparent search.

pub mod closure;
pub mod grassmann;
pub mod table;

use thiserror::Error;

pub use closure::{
    apply_q, gauge_variation, random_states, run_check, run_table, twistor_check, CheckOptions, ClosureReport,
    Convention, FailingComponent, FieldState, TableReport, DEFAULT_STATES,
};
pub use grassmann::{GrassmannElement, Parity, Supernumber};
pub use table::{compile, CompiledTable};

#[derive(Debug, Error)]
pub enum BrstError {
    #[error("table line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0} Grassmann generators needed, at most 128 available")]
    GeneratorBudget(u32),
    #[error("parity mismatch: {0}")]
    Parity(String),
    #[error("no rule for {op} on {field}")]
    RuleMissing { op: String, field: String },
    #[error("{0} rule lines; the sign calibrator handles at most 63")]
    TooManyRules(usize),
    #[error("unknown table {0:?}; built-in tables are abelian, brst, covariant, allq")]
    UnknownTable(String),
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error("unknown name {0:?}")]
    UnknownName(String),
}

pub const BUILTIN_TABLES: [&str; 4] = ["abelian", "brst", "covariant", "allq"];

/// Source text of a built-in table.
pub fn builtin_source(name: &str) -> Result<&'static str, BrstError> {
    match name {
        "abelian" => Ok(include_str!("../../tables/abelian.tbl")),
        "brst" => Ok(include_str!("../../tables/brst.tbl")),
        "covariant" => Ok(include_str!("../../tables/covariant.tbl")),
        "allq" => Ok(include_str!("../../tables/allq.tbl")),
        _ => Err(BrstError::UnknownTable(name.into())),
    }
}

/// A built-in table by name, or a table file by path.
pub fn load_table(name_or_path: &str) -> Result<CompiledTable, BrstError> {
    match builtin_source(name_or_path) {
        Ok(src) => compile(src),
        Err(e) => match std::fs::read_to_string(name_or_path) {
            Ok(src) => compile(&src),
            Err(_) => Err(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ExactComplex;

    fn opts() -> CheckOptions {
        CheckOptions::new(0)
    }

    fn one_check(table: &str, check: &str) -> Vec<ClosureReport> {
        let t = load_table(table).unwrap();
        run_table(&t, Some(check), &opts()).unwrap().checks
    }

    #[test]
    fn abelian_square_vanishes_on_all_fields() {
        let r = &one_check("abelian", "Q2")[0];
        let t = load_table("abelian").unwrap();
        assert_eq!(t.components.iter().map(|c| c.field.clone()).collect::<std::collections::BTreeSet<_>>().len(), 13);
        assert_eq!(r.components_checked, t.components.len());
        assert!(r.closed && r.max_residual == 0.0 && !r.convention.searched);
    }

    #[test]
    fn scalar_sector_closes_on_phi() {
        let r = &one_check("brst", "Q2scalars")[0];
        assert_eq!(r.states, 10);
        assert_eq!(r.components_checked, 5);
        assert!(r.closed && !r.convention.searched);
        assert_eq!(r.convention.gauge_sign, 1);
        assert_eq!(r.gauge_parameter, "phi");
    }

    #[test]
    fn full_q_square_closes_on_phi() {
        assert!(one_check("brst", "Q2")[0].closed);
    }

    #[test]
    fn rule_examples() {
        let t = load_table("brst").unwrap();
        let st = &random_states(&t, 3, 1).unwrap()[0];
        let q = t.basic_op("Q").unwrap();
        let img = apply_q(&t, st, q, 0).unwrap();
        let id = |n: &str| t.component_id(n).unwrap();
        let v = |n: &str| &st.values[id(n)];
        assert!(img.values[id("phi")].is_zero());
        assert_eq!(img.values[id("phibar")], *v("eta"));
        assert_eq!(img.values[id("eta")], v("phibar").bracket(v("phi"), false).scale(&ExactComplex::i()));
        for (k, x) in img.values.iter().enumerate() {
            assert_eq!(x.parity, t.field_parity(k).flip());
        }
        let a = load_table("abelian").unwrap();
        let sa = &random_states(&a, 3, 1).unwrap()[0];
        let qa = apply_q(&a, sa, a.basic_op("Q").unwrap(), 0).unwrap();
        assert!(qa.values[a.component_id("zeta").unwrap()].is_zero());
    }

    #[test]
    fn gauge_variation_examples() {
        let t = load_table("brst").unwrap();
        let st = &random_states(&t, 5, 1).unwrap()[0];
        let zero = gauge_variation(&t, st, &Vec::new(), 1);
        assert!(zero.values.iter().all(|v| v.is_zero()));
        let phi = t.scalar_expr("phi").unwrap();
        let d = gauge_variation(&t, st, &phi, 1);
        assert!(d.values[t.component_id("phi").unwrap()].is_zero());
        assert!(!d.values[t.component_id("C").unwrap()].is_zero());
        let a = load_table("abelian").unwrap();
        let sa = &random_states(&a, 5, 1).unwrap()[0];
        let da = gauge_variation(&a, sa, &a.scalar_expr("phi").unwrap(), 1);
        assert!(da.values.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn second_differential_reports_missing_rules() {
        let r = &one_check("brst", "Qp2")[0];
        assert!(!r.closed);
        for f in ["D_1", "psit_1", "Ht_1"] {
            assert!(r.missing_rules.contains(&format!("Qp on {f}")), "{:?}", r.missing_rules);
        }
        assert!(one_check("brst", "Qp2scalars")[0].closed);
        assert!(one_check("brst", "QQpscalars")[0].closed);
    }

    #[test]
    fn covariant_closes() {
        let rs = one_check("covariant", "QQ");
        assert_eq!(rs.len(), 3);
        assert!(rs.iter().all(|r| r.closed), "{rs:?}");
    }

    #[test]
    fn four_differentials_close() {
        let t = load_table("allq").unwrap();
        let r = run_table(&t, None, &CheckOptions { states: 3, ..opts() }).unwrap();
        assert_eq!(r.checks.len(), 3 + 3 + 4);
        assert!(r.all_closed(), "{:?}", r.checks.iter().filter(|c| !c.closed).collect::<Vec<_>>());
    }

    #[test]
    fn twistor_square() {
        let t = load_table("allq").unwrap();
        let c = |n| ExactComplex::from_int(n);
        let cands = ["phi^{11}", "phi^{12}", "phi^{22}", "rho"];
        let r = twistor_check(&t, [c(1), c(2)], [c(-3), c(1)], &cands, &CheckOptions { states: 2, ..opts() }).unwrap();
        assert!(r.closed, "{r:?}");
    }

    #[test]
    fn sign_typo_is_calibrated_away() {
        let src = builtin_source("covariant").unwrap().replace("rule Q^a B = chi^a", "rule Q^a B = - chi^a");
        let t = compile(&src).unwrap();
        let r = run_table(&t, None, &CheckOptions { states: 3, ..opts() }).unwrap();
        assert!(r.all_closed());
        assert!(r.checks.iter().any(|c| c.convention.searched && !c.convention.flipped_rules.is_empty()));
    }

    #[test]
    fn coefficient_typo_is_reported() {
        let src = builtin_source("covariant")
            .unwrap()
            .replace("- eps_{bc} [phi^{ab}, chi^c]", "- 2 eps_{bc} [phi^{ab}, chi^c]");
        let line = src.lines().position(|l| l.starts_with("rule Q^a G")).unwrap() + 1;
        let t = compile(&src).unwrap();
        let r = run_table(&t, None, &CheckOptions { states: 3, ..opts() }).unwrap();
        assert!(!r.all_closed());
        let bad: Vec<_> = r.checks.iter().flat_map(|c| c.failing.iter()).collect();
        assert!(!bad.is_empty());
        assert!(bad.iter().all(|f| f.rule_lines.contains(&line)), "{bad:?}");
    }

    #[test]
    fn reports_are_reproducible() {
        let t = load_table("covariant").unwrap();
        let a = serde_json::to_string(&run_table(&t, None, &opts()).unwrap()).unwrap();
        let b = serde_json::to_string(&run_table(&t, None, &opts()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_names() {
        assert!(matches!(load_table("nope"), Err(BrstError::UnknownTable(_))));
        let t = load_table("abelian").unwrap();
        assert!(matches!(run_table(&t, Some("nope"), &opts()), Err(BrstError::UnknownCheck(_))));
    }
}
