use proptest::prelude::*;

use super::*;
use crate::types::check_source;
use crate::value::{Decimal, INT_MAX};

const ORDER: &str = include_str!("../../../../corpus/order.bsq");
const TEMPS: &str = include_str!("../../../../corpus/temps.bsq");

const SCHEMA: &str = r#"
type OrderId = CString of /[A-Z][0-9]+/;
sensitive type TIN = CString of /[0-9]{9}/;
type USD = Decimal;
sensitive type Pin = Int;
type Note = String;

entity Line {
  field qty: Int;
  field price: USD;
  field note: Option<Note>;
}

entity Cart {
  field id: OrderId;
  field owner: TIN;
  field lines: List<Line>;
  field gift: Option<Option<Bool>>;
  field pin: Pin;
  field tag: CString;
  field tags: List<String>;
}
"#;

fn order_tm() -> TypedModule {
    check_source(ORDER).unwrap()
}

fn order_ty() -> Type {
    Type::Named("Order".into())
}

fn order(tm: &TypedModule) -> Value {
    Value::Entity {
        name: "Order".into(),
        fields: vec![
            ("orderid".into(), eval::make_alias(tm, "OrderId", Value::CString("A53".into())).unwrap()),
            ("amount".into(), Value::Decimal("45.50".parse().unwrap())),
            ("customer".into(), eval::make_alias(tm, "TIN", Value::CString("123456789".into())).unwrap()),
        ],
    }
}

use crate::eval;

#[test]
fn order_verbose_golden() {
    let tm = order_tm();
    assert_eq!(
        encode(&tm, &order(&tm), &order_ty(), WireForm::Verbose),
        "Order{ orderid = 'A53'<OrderId>, amount = 45.50d, customer = '123456789'<TIN> }"
    );
}

#[test]
fn order_minimal_golden() {
    let tm = order_tm();
    assert_eq!(
        encode(&tm, &order(&tm), &order_ty(), WireForm::Minimal),
        "Order{ 'A53', 45.50d, '123456789' }"
    );
}

#[test]
fn order_redacted_golden() {
    let tm = order_tm();
    assert_eq!(
        encode(&tm, &order(&tm), &order_ty(), WireForm::Redacted),
        "Order{ orderid = 'A53'<OrderId>, amount = 45.50d, customer = '*********'<TIN> }"
    );
}

#[test]
fn order_json_golden() {
    let tm = order_tm();
    let j = encode(&tm, &order(&tm), &order_ty(), WireForm::Json);
    assert_eq!(j, r#"{"orderid":"A53","amount":45.50,"customer":"123456789"}"#);
    assert_eq!(decode(&tm, &j, &order_ty(), WireForm::Json).unwrap(), order(&tm));
}

#[test]
fn minimal_decodes_to_order() {
    let tm = order_tm();
    let v = decode(&tm, "Order{ 'A53', 45.50d, '123456789' }", &order_ty(), WireForm::Minimal).unwrap();
    assert_eq!(v, order(&tm));
}

#[test]
fn order_minimal_is_shortest() {
    let tm = order_tm();
    let v = order(&tm);
    let m = encode(&tm, &v, &order_ty(), WireForm::Minimal).len();
    assert!(m < encode(&tm, &v, &order_ty(), WireForm::Verbose).len());
    assert!(m < encode(&tm, &v, &order_ty(), WireForm::Json).len());
}

#[test]
fn minimal_arity_is_exact() {
    let tm = order_tm();
    let e = decode(&tm, "Order{ 'A53', 45.50d }", &order_ty(), WireForm::Minimal).unwrap_err();
    assert!(matches!(e, DecodeError::FieldCount { expected: 3, found: 2, .. }), "{e}");
    let e = decode(&tm, "Order{ 'A53', 45.50d, '123456789', 1i }", &order_ty(), WireForm::Minimal).unwrap_err();
    assert!(matches!(e, DecodeError::FieldCount { expected: 3, .. }), "{e}");
}

#[test]
fn constraint_violation_names_alias() {
    let tm = order_tm();
    let e = decode(&tm, "Order{ 'a53', 45.50d, '123456789' }", &order_ty(), WireForm::Minimal).unwrap_err();
    match e {
        DecodeError::Constraint { alias, .. } => assert_eq!(alias, "OrderId"),
        other => panic!("{other}"),
    }
}

#[test]
fn wrong_alias_annotation_rejected() {
    let tm = order_tm();
    let text = "Order{ orderid = 'A53'<TIN>, amount = 45.50d, customer = '123456789'<TIN> }";
    assert!(decode(&tm, text, &order_ty(), WireForm::Verbose).is_err());
}

#[test]
fn invariant_checked_while_decoding() {
    let tm = check_source(TEMPS).unwrap();
    let ty = Type::Named("TempRange".into());
    assert!(decode(&tm, "TempRange{ 10, 20 }", &ty, WireForm::Minimal).is_ok());
    let e = decode(&tm, "TempRange{ low = 30<Fahrenheit>, high = 20<Fahrenheit> }", &ty, WireForm::Verbose).unwrap_err();
    match e {
        DecodeError::Invariant { entity, clause, .. } => {
            assert_eq!(entity, "TempRange");
            assert_eq!(clause, "$low <= $high");
        }
        other => panic!("{other}"),
    }
}

#[test]
fn verbose_and_minimal_mix_at_nesting() {
    let tm = check_source(TEMPS).unwrap();
    let ty = Type::Named("TempForecast".into());
    let a = decode(&tm, "TempForecast{ location = '98052'<ZipCode>, temp = { 40, 70 } }", &ty, WireForm::Verbose).unwrap();
    let b = decode(
        &tm,
        "TempForecast{ '98052', TempRange{ low = 40<Fahrenheit>, high = 70<Fahrenheit> } }",
        &ty,
        WireForm::Minimal,
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(
        encode(&tm, &a, &ty, WireForm::Verbose),
        "TempForecast{ location = '98052'<ZipCode>, temp = TempRange{ low = 40<Fahrenheit>, high = 70<Fahrenheit> } }"
    );
}

#[test]
fn big_ints_use_sentinel_in_json() {
    let tm = order_tm();
    let v = Value::Int(1 << 60);
    let j = encode(&tm, &v, &Type::Int, WireForm::Json);
    assert_eq!(j, "\"#n:1152921504606846976\"");
    assert_eq!(decode(&tm, &j, &Type::Int, WireForm::Json).unwrap(), v);
    assert_eq!(encode(&tm, &Value::Int(JSON_INT_LIMIT), &Type::Int, WireForm::Json), "9007199254740991");
}

#[test]
fn none_is_null() {
    let tm = order_tm();
    let ty = Type::option(Type::Int);
    assert_eq!(encode(&tm, &Value::none(), &ty, WireForm::Json), "null");
    assert_eq!(decode(&tm, "null", &ty, WireForm::Json).unwrap(), Value::none());
}

#[test]
fn redacted_markers_do_not_decode() {
    let tm = check_source(SCHEMA).unwrap();
    let e = decode(&tm, "#redacted", &Type::Named("Pin".into()), WireForm::Verbose).unwrap_err();
    assert!(matches!(e, DecodeError::Redacted { .. }));
}

#[test]
fn redact_masks_and_is_idempotent() {
    let tm = order_tm();
    let r = redact(&order(&tm));
    assert_eq!(r.field("customer").and_then(Value::leaf_text).as_deref(), Some("*********"));
    assert_eq!(redact(&r), r);
    let plain = Value::List(vec![Value::Int(3), Value::String("x".into())]);
    assert_eq!(redact(&plain), plain);
}

#[test]
fn media_types() {
    assert_eq!(WireForm::from_media_type("application/bapi+min; q=1"), Some(WireForm::Minimal));
    assert_eq!(WireForm::Redacted.media_type(), None);
    assert_eq!(args_entity_name("transfer"), "TransferArgs");
}

fn alias(tm: &TypedModule, n: &str, v: Value) -> Value {
    eval::make_alias(tm, n, v).unwrap()
}

fn decimal() -> impl Strategy<Value = Decimal> {
    (-(i64::MAX / 2)..(i64::MAX / 2)).prop_map(|s| Decimal::from_scaled(s).unwrap())
}

fn text() -> impl Strategy<Value = String> {
    prop_oneof!["[a-z \"'\\\\\n\t]{0,8}", "\\PC{0,8}"]
}

fn line(tm: TypedModule) -> impl Strategy<Value = Value> {
    (-INT_MAX..=INT_MAX, decimal(), proptest::option::of(text())).prop_map(move |(q, p, n)| Value::Entity {
        name: "Line".into(),
        fields: vec![
            ("qty".into(), Value::Int(q)),
            ("price".into(), alias(&tm, "USD", Value::Decimal(p))),
            (
                "note".into(),
                Value::Option(n.map(|s| Box::new(alias(&tm, "Note", Value::String(s))))),
            ),
        ],
    })
}

fn cart(tm: TypedModule) -> impl Strategy<Value = Value> {
    let gift = prop_oneof![
        Just(Value::none()),
        Just(Value::some(Value::none())),
        any::<bool>().prop_map(|b| Value::some(Value::some(Value::Bool(b)))),
    ];
    (
        "[A-Z][0-9]{1,6}",
        "[0-9]{9}",
        proptest::collection::vec(line(tm.clone()), 0..4),
        gift,
        1_000_000_000_000i64..1_000_000_000_000_000,
        "[ -~]{0,10}",
        proptest::collection::vec(text(), 0..3),
    )
        .prop_map(move |(id, owner, lines, gift, pin, tag, tags)| Value::Entity {
            name: "Cart".into(),
            fields: vec![
                ("id".into(), alias(&tm, "OrderId", Value::CString(id))),
                ("owner".into(), alias(&tm, "TIN", Value::CString(owner))),
                ("lines".into(), Value::List(lines)),
                ("gift".into(), gift),
                ("pin".into(), alias(&tm, "Pin", Value::Int(pin))),
                ("tag".into(), Value::CString(tag)),
                ("tags".into(), Value::List(tags.into_iter().map(Value::String).collect())),
            ],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn round_trip_every_form(v in cart(check_source(SCHEMA).unwrap())) {
        let tm = check_source(SCHEMA).unwrap();
        let ty = Type::Named("Cart".into());
        for form in [WireForm::Verbose, WireForm::Minimal, WireForm::Json] {
            let text = encode(&tm, &v, &ty, form);
            let back = decode(&tm, &text, &ty, form);
            prop_assert_eq!(back.as_ref(), Ok(&v), "{} text: {}", form, text);
        }
    }

    #[test]
    fn minimal_never_longer(v in cart(check_source(SCHEMA).unwrap())) {
        let tm = check_source(SCHEMA).unwrap();
        let ty = Type::Named("Cart".into());
        prop_assert!(encode(&tm, &v, &ty, WireForm::Minimal).len() <= encode(&tm, &v, &ty, WireForm::Verbose).len());
    }

    #[test]
    fn redacted_leaks_no_sensitive_leaf(v in cart(check_source(SCHEMA).unwrap())) {
        let tm = check_source(SCHEMA).unwrap();
        let text = encode(&tm, &v, &Type::Named("Cart".into()), WireForm::Redacted);
        for s in v.sensitive_leaves() {
            prop_assert!(!text.contains(&s), "{} leaked in {}", s, text);
        }
        prop_assert_eq!(redact(&redact(&v)), redact(&v));
    }

    #[test]
    fn json_ints_round_trip(i in -INT_MAX..=INT_MAX) {
        let tm = order_tm();
        let j = encode(&tm, &Value::Int(i), &Type::Int, WireForm::Json);
        prop_assert_eq!(decode(&tm, &j, &Type::Int, WireForm::Json).unwrap(), Value::Int(i));
    }
}
