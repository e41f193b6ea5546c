use std::sync::{Arc, Mutex};

use super::*;
use crate::agent::{AgentRegistry, ScriptedTable};
use crate::bapi::{self, WireForm};
use crate::types::check_source;

const SIGN: &str = include_str!("../../../../corpus/sign.bsq");
const HOLES: &str = include_str!("../../../../corpus/holes.bsq");
const COLLECTIONS: &str = include_str!("../../../../corpus/collections.bsq");
const TEMPS: &str = include_str!("../../../../corpus/temps.bsq");
const PAYMENTS: &str = include_str!("../../../../corpus/payments.bsq");

fn module(src: &str) -> TypedModule {
    check_source(src).unwrap_or_else(|d| panic!("{d:?}"))
}

fn ints(xs: &[i64]) -> Value {
    Value::List(xs.iter().map(|x| Value::Int(*x)).collect())
}

fn decode(tm: &TypedModule, text: &str, ty: &str) -> Value {
    bapi::decode(tm, text, &Type::Named(ty.into()), WireForm::Verbose).unwrap()
}

fn usd(s: &str) -> Value {
    Value::alias("USD", Value::Decimal(s.parse().unwrap()), false)
}

#[test]
fn sign_runs() {
    let tm = module(SIGN);
    let mut rt = Runtime::new(&tm);
    for (x, want) in [(-5, -1), (0, 1), (7, 1)] {
        assert_eq!(rt.call_function("sign", vec![Value::Int(x)]).unwrap(), Value::Int(want));
    }
}

#[test]
fn collection_ops() {
    let tm = module(COLLECTIONS);
    let mut rt = Runtime::new(&tm);
    assert_eq!(rt.call_function("demo", vec![]).unwrap(), ints(&[2, 3, 4]));
    assert_eq!(rt.call_function("positives", vec![ints(&[-1, 2, 0, 5])]).unwrap(), ints(&[2, 5]));
    assert_eq!(rt.call_function("allNonNegative", vec![ints(&[0, 1])]).unwrap(), Value::Bool(true));
    assert_eq!(rt.call_function("noneNegative", vec![ints(&[3, -1])]).unwrap(), Value::Bool(false));
    assert_eq!(rt.call_function("total", vec![ints(&[])]).unwrap(), Value::Int(0));
    assert_eq!(rt.call_function("total", vec![ints(&[4, 5])]).unwrap(), Value::Int(9));
}

#[test]
fn sum_overflow_faults() {
    let tm = module(COLLECTIONS);
    let mut rt = Runtime::new(&tm);
    let f = rt.call_function("total", vec![ints(&[i64::MAX, 1])]).unwrap_err();
    assert_eq!(f.kind, FaultKind::Overflow);
    let f = rt.call_function("increment", vec![ints(&[i64::MAX])]).unwrap_err();
    assert_eq!(f.kind, FaultKind::Overflow);
}

#[test]
fn division_by_zero_faults() {
    let tm = module("function d(a: Int, b: Int): Int { return a / b; }");
    let f = Runtime::new(&tm).call_function("d", vec![Value::Int(1), Value::Int(0)]).unwrap_err();
    assert_eq!(f.kind, FaultKind::DivByZero);
    assert_eq!(f.owner.as_deref(), Some("d"));
}

#[test]
fn invariant_fault_carries_clause() {
    let tm = module(TEMPS);
    let f = |a: i64| Value::alias("Fahrenheit", Value::Int(a), false);
    let mut rt = Runtime::new(&tm);
    let r = rt.call_function("mk", vec![f(40), f(70)]).unwrap();
    assert_eq!(r.field("high"), Some(&f(70)));
    let e = rt.call_function("mk", vec![f(70), f(40)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::Invariant);
    assert_eq!(e.clause.as_deref(), Some("$low <= $high"));
    assert_eq!(e.owner.as_deref(), Some("TempRange"));
}

#[test]
fn precondition_fault_names_clause() {
    let tm = module(TEMPS);
    let f = |a: i64| Value::alias("Fahrenheit", Value::Int(a), false);
    let zip = make_alias(&tm, "ZipCode", Value::CString("98052".into())).unwrap();
    let e = Runtime::new(&tm).call_function("forecast", vec![zip, f(9), f(1)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::Precondition);
    assert_eq!(e.clause.as_deref(), Some("lo <= hi"));
}

#[test]
fn alias_constraint_checked_on_make() {
    let tm = module(TEMPS);
    let e = make_alias(&tm, "ZipCode", Value::CString("9805".into())).unwrap_err();
    assert_eq!(e.kind, FaultKind::Constraint);
    assert!(make_alias(&tm, "ZipCode", Value::CString("98052-1234".into())).is_ok());
}

#[test]
fn unfilled_hole_names_its_id() {
    let tm = module(SIGN.replace("y = -1i;", "y = ?_ -> Int;").as_str());
    let mut rt = Runtime::new(&tm);
    let e = rt.call_function("sign", vec![Value::Int(-2)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::UnfilledHole);
    assert!(e.message.contains("sign#"), "{}", e.message);
}

#[test]
fn resolver_fills_and_memoizes() {
    let tm = module(HOLES);
    let asked = Arc::new(Mutex::new(0));
    let seen = asked.clone();
    let mut rt = Runtime::new(&tm).with_resolver(move |req: &HoleRequest<'_>| {
        *seen.lock().unwrap() += 1;
        assert_eq!(req.ty, &Type::Int);
        Some(Value::Int(-1))
    });
    assert_eq!(rt.call_function("sign", vec![Value::Int(-4)]).unwrap(), Value::Int(-1));
    assert_eq!(rt.call_function("sign", vec![Value::Int(-4)]).unwrap(), Value::Int(-1));
    assert_eq!(*asked.lock().unwrap(), 1);
    assert_eq!(rt.call_function("sign", vec![Value::Int(3)]).unwrap(), Value::Int(1));
}

#[test]
fn ill_typed_hole_value_faults() {
    let tm = module(HOLES);
    let mut rt = Runtime::new(&tm).with_resolver(|_: &HoleRequest<'_>| Some(Value::Bool(true)));
    let e = rt.call_function("sign", vec![Value::Int(-4)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::HoleType);
}

#[test]
fn hole_body_ensures_still_checked() {
    let tm = module(HOLES);
    let mut rt = Runtime::new(&tm).with_resolver(|_: &HoleRequest<'_>| Some(Value::Int(-3)));
    let e = rt.call_function("abs", vec![Value::Int(-3)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::Postcondition);
    assert_eq!(e.clause.as_deref(), Some("$result >= 0i"));
}

#[test]
fn hole_examples_persist_across_runs() {
    let tm = module(HOLES);
    let dir = tempfile::tempdir().unwrap();
    {
        let mut rt = Runtime::new(&tm)
            .with_holes(HoleStore::with_dir(dir.path()))
            .with_resolver(|req: &HoleRequest<'_>| match req.args[0].1 {
                Value::Int(x) => Some(Value::Int(x.abs())),
                _ => None,
            });
        assert_eq!(rt.call_function("abs", vec![Value::Int(-3)]).unwrap(), Value::Int(3));
    }
    let path = HoleStore::with_dir(dir.path()).example_path("_absbody").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.trim(), "HoleExample{ hole = '_absbody', args = HoleArgs{ x = -3i }, result = 3i }");
    let mut rt = Runtime::new(&tm).with_holes(HoleStore::with_dir(dir.path()));
    assert_eq!(rt.call_function("abs", vec![Value::Int(-3)]).unwrap(), Value::Int(3));
    let e = rt.call_function("abs", vec![Value::Int(-4)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::UnfilledHole);
}

struct Payments {
    tm: TypedModule,
}

impl Payments {
    fn new() -> Self {
        Self { tm: module(PAYMENTS) }
    }

    fn account(&self, routing: &str, account: &str) -> Value {
        decode(
            &self.tm,
            &format!("Account{{ routing = '{routing}', account = '{account}', holder = '123456789' }}"),
            "Account",
        )
    }

    fn env(&self, limit: &str) -> EnvRecord {
        let mut env = EnvRecord::new();
        env.insert("account".into(), self.account("111", "2222"));
        env.insert(
            "PAYMENT_AUTHORIZATION".into(),
            make_alias(&self.tm, "OAUTH_TOKEN", Value::CString("tok".into())).unwrap(),
        );
        env.insert("PAYMENT_LIMIT".into(), usd(limit));
        env
    }

    fn agents() -> AgentRegistry {
        let t = ScriptedTable::parse(".*\\$45\\.50.*\tWhat is half of the bill\\?\t22.75\n").unwrap();
        AgentRegistry::new().with("Chat::compute", Arc::new(t))
    }
}

#[test]
fn split_bill_end_to_end() {
    let p = Payments::new();
    let hits = Arc::new(Mutex::new(Vec::new()));
    let log = hits.clone();
    let host = move |c: &HostCall<'_>| {
        c.access("account:111/2222")?;
        log.lock().unwrap().push(c.arg("amt").cloned().unwrap());
        Ok(Value::Unit)
    };
    let mut rt = Runtime::new(&p.tm)
        .with_agents(Payments::agents())
        .bind_api("transfer", Arc::new(host));
    let payee = p.account("999", "1");
    let msg = Value::String("Dinner came to $45.50 total".into());
    let r = rt.run_task("splitBill", &p.env("100.0"), vec![msg, payee.clone()]).unwrap();
    assert_eq!(r, usd("22.75"));
    assert_eq!(*hits.lock().unwrap(), vec![usd("22.75")]);
    assert_eq!(rt.calls[0].policy, vec!["account:111/2222".to_string()]);
    assert_eq!(rt.events.entries().last().unwrap().field("task"), Some(&Value::CString("splitBill".into())));

    let miss = Value::String("no numbers".into());
    let e = rt.run_task("splitBill", &p.env("100.0"), vec![miss, payee]).unwrap_err();
    assert_eq!(e.kind, FaultKind::User);
    assert_eq!(e.message, "Could not get amount from message.");
    let last = rt.events.entries().last().unwrap();
    assert_eq!(last.field("code"), Some(&Value::CString("user".into())));
}

#[test]
fn over_limit_needs_approval_event() {
    let p = Payments::new();
    let payee = p.account("999", "1");
    let env = p.env("10.0");
    let args = || vec![usd("22.75"), p.account("111", "2222"), payee.clone()];
    let mut rt = Runtime::new(&p.tm).with_default_host(Arc::new(NullHost));
    let e = rt.invoke_api("transfer", &env, args()).unwrap_err();
    assert_eq!(e.kind, FaultKind::Precondition);
    assert!(e.clause.unwrap().contains("$events.contains"));
    assert!(rt.calls.is_empty());

    let approve = Value::Entity {
        name: "Approve".into(),
        fields: vec![("payee".into(), payee.clone()), ("amt".into(), usd("22.75"))],
    };
    rt.events.append(approve);
    rt.invoke_api("transfer", &env, args()).unwrap();
    assert_eq!(rt.calls.len(), 1);
}

#[test]
fn api_env_is_required_and_filtered() {
    let p = Payments::new();
    let mut env = p.env("100.0");
    env.insert("EXTRA".into(), Value::Int(1));
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let host = move |c: &HostCall<'_>| {
        log.lock().unwrap().extend(c.env.keys().cloned());
        Ok(Value::Unit)
    };
    let mut rt = Runtime::new(&p.tm).bind_api("transfer", Arc::new(host));
    let args = vec![usd("1.0"), p.account("111", "2222"), p.account("999", "9")];
    rt.invoke_api("transfer", &env, args.clone()).unwrap();
    assert_eq!(*seen.lock().unwrap(), vec!["PAYMENT_AUTHORIZATION".to_string(), "PAYMENT_LIMIT".to_string()]);

    env.remove("PAYMENT_AUTHORIZATION");
    let e = rt.invoke_api("transfer", &env, args).unwrap_err();
    assert_eq!(e.kind, FaultKind::EnvMissing);
}

#[test]
fn host_outside_sandbox_is_denied() {
    let p = Payments::new();
    let host = |c: &HostCall<'_>| {
        c.access("account:111/9999")?;
        Ok(Value::Unit)
    };
    let mut rt = Runtime::new(&p.tm).bind_api("transfer", Arc::new(host));
    let args = vec![usd("1.0"), p.account("111", "2222"), p.account("999", "9")];
    let e = rt.invoke_api("transfer", &p.env("100.0"), args).unwrap_err();
    assert_eq!(e.kind, FaultKind::PermissionDenied);
}

#[test]
fn bodiless_api_without_host_is_unbound() {
    let p = Payments::new();
    let args = vec![usd("1.0"), p.account("111", "2222"), p.account("999", "9")];
    let e = Runtime::new(&p.tm).invoke_api("transfer", &p.env("100.0"), args).unwrap_err();
    assert_eq!(e.kind, FaultKind::Unbound);
}

#[test]
fn missing_agent_binding_is_transport_fault() {
    let p = Payments::new();
    let args = vec![Value::String("$45.50".into()), p.account("999", "9")];
    let e = Runtime::new(&p.tm).call("splitBill", &p.env("100.0"), args).unwrap_err();
    assert_eq!(e.kind, FaultKind::Transport);
}

#[test]
fn chktest_false_is_assertion() {
    let tm = module(
        "function sq(x: Int): Int { return x * x; }\n\
         chktest sqPositive(x: Int): Bool { return sq(x) > 0i; }",
    );
    let mut rt = Runtime::new(&tm);
    rt.run_chktest("sqPositive", vec![Value::Int(2)]).unwrap();
    let e = rt.run_chktest("sqPositive", vec![Value::Int(0)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::Assertion);
    assert_eq!(e.kind.code(), "assertion");
}

#[test]
fn wrong_arguments_are_type_faults() {
    let tm = module(SIGN);
    let e = Runtime::new(&tm).call_function("sign", vec![Value::Bool(true)]).unwrap_err();
    assert_eq!(e.kind, FaultKind::Type);
}

mod props {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #[test]
        fn sign_matches_signum(x in -i64::MAX..=i64::MAX) {
            let tm = module(SIGN);
            let v = Runtime::new(&tm).call_function("sign", vec![Value::Int(x)]).unwrap();
            prop_assert_eq!(v, Value::Int(if x < 0 { -1 } else { 1 }));
        }

        #[test]
        fn int_ops_fault_exactly_on_overflow(a in any::<i64>(), b in any::<i64>()) {
            prop_assume!(a != i64::MIN && b != i64::MIN);
            let tm = module("function f(a: Int, b: Int): Int { return a + b; }");
            let r = Runtime::new(&tm).call_function("f", vec![Value::Int(a), Value::Int(b)]);
            let exact = a as i128 + b as i128;
            if exact.abs() <= i64::MAX as i128 {
                prop_assert_eq!(r.unwrap(), Value::Int(exact as i64));
            } else {
                prop_assert_eq!(r.unwrap_err().kind, FaultKind::Overflow);
            }
        }
    }
}
