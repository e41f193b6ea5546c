use std::time::Duration;

use aisette_core::types::check_source;

use super::*;

const SIGN: &str = include_str!("../../../corpus/sign.bsq");
const HOLES: &str = include_str!("../../../corpus/holes.bsq");
const TEMPS: &str = include_str!("../../../corpus/temps.bsq");
const PAYMENTS: &str = include_str!("../../../corpus/payments.bsq");
const PREFIX: &str = include_str!("../../../corpus/splitbill_prefix.bsq");
const GUARDED: &str = include_str!("../../../corpus/splitbill_guarded.bsq");
const ZERO: &str = include_str!("../../../corpus/zero_transfer.bsq");

fn sundew() -> Sundew {
    Sundew::default()
}

fn tm(src: &str) -> TypedModule {
    check_source(src).unwrap_or_else(|d| panic!("{d:?}"))
}

fn int(v: &Value) -> i64 {
    match v.base() {
        Value::Int(i) => *i,
        other => panic!("not an Int: {other:?}"),
    }
}

fn declared_names(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for s in parse_sexps(text).unwrap() {
        if let Sexp::List(items) = s {
            if let [Sexp::Atom(head), Sexp::Atom(name), ..] = items.as_slice() {
                if head == "declare-const" || head == "declare-fun" {
                    out.push(name.clone());
                }
            }
        }
    }
    out
}

#[test]
fn sign_becomes_define_fun() {
    let s = emit_smt(&tm(SIGN), &Target::ChkTest("signRange".into()), Bounds::default()).unwrap();
    assert!(
        s.text.contains("(define-fun sign ((x Int)) Int (ite (< x 0) (- 1) 1))"),
        "{}",
        s.text
    );
    assert!(s.text.starts_with("(set-option :produce-models true)\n(set-logic ALL)\n"));
    assert!(s.text.trim_end().ends_with("(check-sat)"));
    assert_eq!(s.logic, "ALL");
}

#[test]
fn chktest_script_negates_assertion() {
    let s = emit_smt(&tm(SIGN), &Target::ChkTest("signRange".into()), Bounds::default()).unwrap();
    let a = s
        .sites
        .iter()
        .find(|x| x.kind == FaultKind::Assertion)
        .expect("assertion site");
    assert_eq!(a.clause.as_deref(), Some("-1i <= sgn && sgn <= 1i"));
    assert!(s.text.contains("(not (and "), "{}", s.text);
}

#[test]
fn symbol_map_covers_free_symbols() {
    for (src, target) in [
        (SIGN, Target::ChkTest("signRange".into())),
        (HOLES, Target::Function("abs".into())),
        (TEMPS, Target::Function("forecast".into())),
        (TEMPS, Target::Function("spread".into())),
    ] {
        let s = emit_smt(&tm(src), &target, Bounds::default()).unwrap();
        let names = declared_names(&s.text);
        assert!(!names.is_empty());
        for n in names {
            assert!(s.symbols.contains_key(&n), "{n} missing from symbol map");
        }
        assert_eq!(s.symbols.len(), declared_names(&s.text).len());
    }
}

#[test]
fn hole_body_is_uninterpreted_and_constrained() {
    let s = emit_smt(&tm(HOLES), &Target::Function("abs".into()), Bounds::default()).unwrap();
    assert!(s.text.contains("(declare-fun |hole._absbody| (Int) Int)"), "{}", s.text);
    assert!(s.text.contains("(assert (>= "), "{}", s.text);
}

#[test]
fn emission_is_deterministic() {
    let m = tm(TEMPS);
    let a = emit_smt(&m, &Target::Function("forecast".into()), Bounds::default()).unwrap();
    let b = emit_smt(&m, &Target::Function("forecast".into()), Bounds::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn zero_bounds_are_rejected() {
    let b = Bounds {
        list_len: 0,
        ..Bounds::default()
    };
    assert!(matches!(
        emit_smt(&tm(SIGN), &Target::Function("sign".into()), b),
        Err(SundewError::Bounds(_))
    ));
}

#[test]
fn unknown_target_is_an_error() {
    assert!(matches!(
        emit_smt(&tm(SIGN), &Target::Function("nope".into()), Bounds::default()),
        Err(SundewError::UnknownTarget(_))
    ));
}

#[test]
fn emitted_scripts_parse_in_solver() {
    let m = tm(TEMPS);
    for f in ["mk", "forecast", "spread"] {
        let s = emit_smt(&m, &Target::Function(f.into()), Bounds::default()).unwrap();
        let a = SolverConfig::default().check(&s.text, &[]).unwrap();
        assert!(matches!(a, Answer::Sat(_) | Answer::Unsat), "{f}: {a:?}");
    }
}

#[test]
fn sign_range_is_valid() {
    assert_eq!(sundew().run_chktest(&tm(SIGN), "signRange").unwrap(), ValidationResult::Valid);
}

#[test]
fn mutated_sign_has_negative_counterexample() {
    let m = tm(&SIGN.replace("y = -1i;", "y = 2i;"));
    match sundew().run_chktest(&m, "signRange").unwrap() {
        ValidationResult::Counterexample(w) => {
            assert!(int(w.get("x").unwrap()) < 0);
            assert_eq!(w.site.kind, FaultKind::Assertion);
            assert!(reproduces(&m, &w));
            assert_eq!(w.render(&m), format!("x = {}", bapi::encode(&m, w.get("x").unwrap(), &Type::Int, WireForm::Verbose)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn zero_timeout_is_unknown() {
    let s = Sundew::new(SolverConfig::default().with_timeout(Duration::ZERO));
    assert_eq!(
        s.run_chktest(&tm(SIGN), "signRange").unwrap(),
        ValidationResult::Unknown(UnknownReason::Timeout)
    );
}

#[test]
fn missing_solver_is_reported() {
    let s = Sundew::new(SolverConfig::new("/nonexistent/z3"));
    assert!(matches!(
        s.run_chktest(&tm(SIGN), "signRange"),
        Err(SundewError::SolverNotFound(_))
    ));
}

#[test]
fn temp_range_invariant_is_reachable_from_mk() {
    let m = tm(TEMPS);
    let r = sundew().check_function(&m, "mk").unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].site.kind, FaultKind::Invariant);
    assert_eq!(r[0].site.owner, "TempRange");
    match &r[0].verdict {
        Reachability::Witness(w) => {
            assert!(int(w.get("lo").unwrap()) > int(w.get("hi").unwrap()));
            assert!(reproduces(&m, w));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn requires_guard_the_invariant_in_forecast() {
    let r = sundew().check_function(&tm(TEMPS), "forecast").unwrap();
    let inv: Vec<_> = r.iter().filter(|s| s.site.kind == FaultKind::Invariant).collect();
    assert_eq!(inv.len(), 1);
    assert_eq!(inv[0].verdict, Reachability::Impossible);
}

#[test]
fn subtraction_overflow_witness_replays() {
    let m = tm(TEMPS);
    let r = sundew().check_function(&m, "spread").unwrap();
    let ov = r.iter().find(|s| s.site.kind == FaultKind::Overflow).expect("overflow site");
    match &ov.verdict {
        Reachability::Witness(w) => assert!(reproduces(&m, w)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn negation_in_sign_is_impossible() {
    let r = sundew().check_function(&tm(SIGN), "sign").unwrap();
    assert!(!r.is_empty());
    for s in &r {
        assert_eq!(s.site.kind, FaultKind::Overflow);
        assert_eq!(s.verdict, Reachability::Impossible, "{}", s.site);
    }
}

#[test]
fn division_free_function_without_contracts_has_no_sites() {
    let m = tm("function isPos(x: Int): Bool { return x > 0i; }");
    assert!(sundew().check_function(&m, "isPos").unwrap().is_empty());
    assert_eq!(sundew().check_error_reachability(&m).unwrap().len(), 1);
}

#[test]
fn division_by_zero_witness() {
    let m = tm("function inv(x: Int): Int { return 100i / x; }");
    let r = sundew().check_function(&m, "inv").unwrap();
    assert_eq!(r.len(), 1);
    match &r[0].verdict {
        Reachability::Witness(w) => {
            assert_eq!(int(w.get("x").unwrap()), 0);
            assert!(reproduces(&m, w));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unfilled_hole_is_reachable() {
    let m = tm(HOLES);
    let r = sundew().check_function(&m, "abs").unwrap();
    let h = r.iter().find(|s| s.site.kind == FaultKind::UnfilledHole).expect("hole site");
    match &h.verdict {
        Reachability::Witness(w) => assert!(reproduces(&m, w)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn decimal_arithmetic_matches_evaluator() {
    let m = tm("type USD = Decimal;\nfunction half(a: USD): USD\n  ensures $result * 2.0<USD> <= a;\n{\n  return a / 2.0<USD>;\n}");
    let r = sundew().check_function(&m, "half").unwrap();
    for s in &r {
        if let Reachability::Witness(w) = &s.verdict {
            assert!(reproduces(&m, w), "{}", s.site);
        }
    }
    let post = r.iter().find(|s| s.site.kind == FaultKind::Postcondition).unwrap();
    assert!(matches!(post.verdict, Reachability::Witness(_)), "{:?}", post.verdict);
}

fn facts_approve(m: &TypedModule, amt: &str) -> Value {
    let account = bapi::decode(
        m,
        "Account{ '111', '2222', '123456789' }",
        &Type::Named("Account".into()),
        WireForm::Minimal,
    )
    .unwrap();
    eval::construct_entity(
        m,
        "Approve",
        vec![
            ("payee".into(), account),
            ("amt".into(), eval::make_alias(m, "USD", Value::Decimal(amt.parse().unwrap())).unwrap()),
        ],
    )
    .unwrap()
}

#[test]
fn split_bill_prefix_misses_limit_check() {
    let m = module_with_prefix(PAYMENTS, PREFIX).unwrap();
    let r = sundew().check_api_call_site(&m, "splitBill", "transfer", &[]).unwrap();
    assert!(!r.satisfied);
    let lim = r
        .missing
        .iter()
        .find(|o| o.clause.starts_with("amt <= env.PAYMENT_LIMIT"))
        .expect("limit clause missing");
    assert_eq!(
        lim.clause,
        "amt <= env.PAYMENT_LIMIT ||\n    $events.contains(Approve{|payee=payee, amt=amt|})"
    );
    assert_eq!(
        lim.summary,
        "amt may exceed PAYMENT_LIMIT in env and no matching `Approve` event is recorded"
    );
    let get = |n: &str| lim.witness.iter().find(|b| b.name == n).map(|b| b.value.clone()).unwrap();
    let dec = |v: Value| match v.base() {
        Value::Decimal(d) => *d,
        Value::Option(Some(x)) => match x.base() {
            Value::Decimal(d) => *d,
            o => panic!("{o:?}"),
        },
        o => panic!("{o:?}"),
    };
    assert!(dec(get("transfer.amt")) > dec(get("env.PAYMENT_LIMIT")));
    assert!(dec(get("amt")) > dec(get("env.PAYMENT_LIMIT")));
    let j = r.to_json();
    assert_eq!(j["satisfied"], false);
    assert!(r.render(&m).contains("MISSING transfer"));
}

#[test]
fn split_bill_prefix_also_misses_positive_amount() {
    let m = module_with_prefix(PAYMENTS, PREFIX).unwrap();
    let r = sundew().check_api_call_site(&m, "splitBill", "transfer", &[]).unwrap();
    let pos = r.missing.iter().find(|o| o.clause == "0.0<USD> < amt").unwrap();
    assert_eq!(pos.summary, "amt may be at most 0.00<USD>");
}

#[test]
fn guarded_split_bill_is_satisfied() {
    let m = module_with_prefix(PAYMENTS, GUARDED).unwrap();
    let r = sundew().check_api_call_site(&m, "splitBill", "transfer", &[]).unwrap();
    assert!(r.satisfied, "{r:?}");
    assert_eq!(r.render(&m), "SATISFIED transfer\n");
}

#[test]
fn zero_transfer_misses_positive_amount() {
    let m = module_with_prefix(PAYMENTS, ZERO).unwrap();
    let r = sundew().check_api_call_site(&m, "payNothing", "transfer", &[]).unwrap();
    assert_eq!(r.missing.len(), 1, "{r:?}");
    assert_eq!(r.missing[0].clause, "0.0<USD> < amt");
    let amt = r.missing[0].witness.iter().find(|b| b.name == "transfer.amt").unwrap();
    assert_eq!(amt.value.base(), &Value::Decimal(Decimal::ZERO));
}

#[test]
fn recorded_approval_can_discharge_limit() {
    let m = module_with_prefix(PAYMENTS, ZERO.replace("0.0<USD>", "5.0<USD>").as_str()).unwrap();
    let r = sundew().check_api_call_site(&m, "payNothing", "transfer", &[]).unwrap();
    assert_eq!(r.missing.len(), 1);
    assert!(r.missing[0].clause.starts_with("amt <= env.PAYMENT_LIMIT"));
    let fact = facts_approve(&m, "5.0");
    let r = sundew().check_api_call_site(&m, "payNothing", "transfer", &[fact]).unwrap();
    assert_eq!(r.missing.len(), 1, "payee is symbolic so one fact does not cover it");
}

#[test]
fn unknown_api_is_an_error() {
    let m = module_with_prefix(PAYMENTS, PREFIX).unwrap();
    assert!(matches!(
        sundew().check_api_call_site(&m, "splitBill", "nope", &[]),
        Err(SundewError::UnknownTarget(_))
    ));
}

#[test]
fn prefix_closing() {
    assert_eq!(close_prefix("action a(): None {\n  if (true) {\n").unwrap(), "action a(): None {\n  if (true) {\n}\n}\n");
    assert_eq!(close_prefix("function f(): Int { return 1i; }").unwrap(), "function f(): Int { return 1i; }\n");
}

#[test]
fn summaries() {
    let m = tm("function f(x: Int, y: Int): Bool { return x >= y && 3i !== x; }");
    let Body::Block(b) = &m.function("f").unwrap().body else { panic!() };
    let aisette_core::ast::StmtKind::Return(Some(e)) = &b[0].kind else { panic!() };
    assert_eq!(summarize(e), "x may be below y or x may equal 3i");
}

use aisette_core::ast::Body;

#[test]
fn functions_named_like_solver_builtins() {
    let m = tm("function abs(x: Int): Int\n  ensures $result >= 0i;\n{\n  return x;\n}\nchktest absPos(mod: Int): Bool {\n  assert abs(mod) >= 0i;\n}\n");
    let r = sundew().check_function(&m, "abs").unwrap();
    let post = r.iter().find(|s| s.site.kind == FaultKind::Postcondition).unwrap();
    match &post.verdict {
        Reachability::Witness(w) => assert!(reproduces(&m, w)),
        other => panic!("{other:?}"),
    }
    match sundew().run_chktest(&m, "absPos").unwrap() {
        ValidationResult::Counterexample(w) => assert!(reproduces(&m, &w)),
        other => panic!("{other:?}"),
    }
}
