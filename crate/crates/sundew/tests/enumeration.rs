//! The solver's verdict on small-domain chktests agrees with running the
//! evaluator on every input in the domain.

use aisette_core::eval::Runtime;
use aisette_core::types::check_source;
use aisette_core::Value;
use aisette_sundew::{reproduces, Sundew, ValidationResult};
use proptest::prelude::*;

const LO: i64 = -12;
const HI: i64 = 12;

fn int_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("x".to_string()), (-4i64..5).prop_map(|k| format!("{k}i"))];
    leaf.prop_recursive(3, 12, 2, |inner| {
        (inner.clone(), prop_oneof![Just("+"), Just("-"), Just("*"), Just("/")], inner)
            .prop_map(|(a, op, b)| format!("({a} {op} {b})"))
    })
}

fn pred() -> impl Strategy<Value = String> {
    let cmp = (
        int_expr(),
        prop_oneof![Just("<"), Just("<="), Just("==="), Just("!==")],
        int_expr(),
    )
        .prop_map(|(a, op, b)| format!("{a} {op} {b}"));
    cmp.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|p| format!("!({p})")),
            (inner.clone(), prop_oneof![Just("&&"), Just("||")], inner)
                .prop_map(|(a, op, b)| format!("({a}) {op} ({b})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn verdict_matches_enumeration(p in pred()) {
        let src = format!(
            "chktest t(x: Int): Bool {{\n  if (x < {LO}i || x > {HI}i) {{\n    return true;\n  }}\n  return {p};\n}}\n"
        );
        let tm = check_source(&src).unwrap_or_else(|d| panic!("{src}\n{d:?}"));
        let failing: Vec<i64> = (LO..=HI)
            .filter(|x| Runtime::new(&tm).run_chktest("t", vec![Value::Int(*x)]).is_err())
            .collect();
        match Sundew::default().run_chktest(&tm, "t").unwrap() {
            ValidationResult::Valid => prop_assert!(failing.is_empty(), "{src}: fails on {failing:?}"),
            ValidationResult::Counterexample(w) => {
                prop_assert!(reproduces(&tm, &w), "{src}: {w:?}");
                let Some(Value::Int(x)) = w.get("x") else { panic!("{w:?}") };
                prop_assert!(failing.contains(x), "{src}: x = {x}");
            }
            ValidationResult::Unknown(r) => prop_assert!(false, "{src}: unknown {r}"),
        }
    }
}
