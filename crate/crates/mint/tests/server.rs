use std::sync::Arc;

use aisette_core::agent::{AgentRegistry, ScriptedTable};
use aisette_core::ast::Type;
use aisette_core::bapi::{self, WireForm};
use aisette_core::eval::HostCall;
use aisette_core::types::{check_source, TypedModule, TASK_ABORTED, TASK_COMPLETED};
use aisette_core::Value;
use aisette_mint::auth::{issue, Claims};
use aisette_mint::{Ceiling, Mint, MintConfig, MintError, RouteConfig, Visibility};
use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use proptest::prelude::*;
use tower::ServiceExt;

const TIN: &str = "123456789";
const TOKEN: &str = "tok-Zq81x";
const SECRET: &str = "unit-secret";

fn corpus(name: &str) -> String {
    let p = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{p}: {e}"))
}

fn payments() -> TypedModule {
    check_source(&corpus("payments.bsq")).expect("payments module checks")
}

fn account(routing: &str, acct: &str, holder: &str) -> String {
    format!("Account{{ routing = '{routing}'<RoutingNumber>, account = '{acct}'<AccountNumber>, holder = '{holder}'<TIN> }}")
}

fn config(limit: &str, auth: bool) -> MintConfig {
    MintConfig {
        routes: vec![
            RouteConfig::task("/pay/transfer", "transfer", Visibility::Private),
            RouteConfig::task("/pay/split", "splitBill", Visibility::Private),
        ],
        env: vec![
            ("account".into(), account("111", "222", TIN)),
            ("PAYMENT_AUTHORIZATION".into(), format!("'{TOKEN}'<OAUTH_TOKEN>")),
            ("PAYMENT_LIMIT".into(), format!("{limit}<USD>")),
        ],
        logging: true,
        auth,
        secret: Some(SECRET.into()),
        ..MintConfig::default()
    }
}

fn stub() -> AgentRegistry {
    let table = ScriptedTable::parse(".*\t.*half.*\t22.75").unwrap();
    AgentRegistry::new().with("Chat::compute", Arc::new(table))
}

/// Transfer host that touches the payer's account, as its permission allows.
fn honest(call: &HostCall<'_>) -> Result<Value, aisette_core::eval::Fault> {
    let p = call.arg("payer").unwrap();
    let uri = format!(
        "account:{}/{}",
        p.field("routing").unwrap().leaf_text().unwrap(),
        p.field("account").unwrap().leaf_text().unwrap()
    );
    call.access(&uri)?;
    Ok(Value::Unit)
}

/// Transfer host that reaches into the payee's account instead.
fn overreaching(call: &HostCall<'_>) -> Result<Value, aisette_core::eval::Fault> {
    let p = call.arg("payee").unwrap();
    let uri = format!(
        "account:{}/{}",
        p.field("routing").unwrap().leaf_text().unwrap(),
        p.field("account").unwrap().leaf_text().unwrap()
    );
    call.access(&uri)?;
    Ok(Value::Unit)
}

fn mint(limit: &str) -> Mint {
    Mint::builder(payments(), config(limit, false))
        .agents(stub())
        .bind_api("transfer", Arc::new(honest))
        .build()
        .unwrap()
}

struct Reply {
    status: StatusCode,
    media: String,
    body: String,
}

async fn send(m: &Mint, req: Request<Body>) -> Reply {
    let resp = m.router().oneshot(req).await.unwrap();
    let status = resp.status();
    let media = resp
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|h| h.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    Reply {
        status,
        media,
        body: String::from_utf8(bytes.to_vec()).unwrap(),
    }
}

fn get(path: &str) -> Request<Body> {
    Request::get(path).body(Body::empty()).unwrap()
}

fn get_as(path: &str, token: &str) -> Request<Body> {
    Request::get(path)
        .header(header::AUTHORIZATION, format!("Bearer {token}"))
        .body(Body::empty())
        .unwrap()
}

fn post(path: &str, media: &str, body: String) -> Request<Body> {
    Request::post(path)
        .header(header::CONTENT_TYPE, media)
        .body(Body::from(body))
        .unwrap()
}

fn transfer_body(amt: &str, payer: (&str, &str), payee: (&str, &str)) -> String {
    format!(
        "TransferArgs{{ amt = {amt}<USD>, payer = {}, payee = {} }}",
        account(payer.0, payer.1, TIN),
        account(payee.0, payee.1, "987654321")
    )
}

fn split_body() -> String {
    format!(
        "SplitBillArgs{{ msg = \"lunch was $45.50\", payee = {} }}",
        account("333", "444", "987654321")
    )
}

fn token(perms: &[&str]) -> String {
    issue(
        SECRET,
        &Claims {
            sub: "tester".into(),
            perms: perms.iter().map(|p| p.to_string()).collect(),
        },
    )
}

fn names(index_json: &str) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(index_json).unwrap();
    v["actions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["name"].as_str().unwrap().to_string())
        .collect()
}

fn count(m: &Mint, entity: &str) -> usize {
    m.events()
        .entries()
        .iter()
        .filter(|e| matches!(e, Value::Entity { name, .. } if name == entity))
        .count()
}

/// Every log surface the server writes, concatenated.
fn all_logs(m: &Mint) -> String {
    let mut out = m.request_log().join("\n");
    for f in m.faults() {
        out.push_str(&serde_json::to_string(&f).unwrap());
    }
    for e in m.events().entries() {
        out.push_str(&format!("{e:?}"));
    }
    out
}

const VERBOSE: &str = "application/bapi+verbose";
const MINIMAL: &str = "application/bapi+min";

#[tokio::test]
async fn index_lists_contracts_and_docs() {
    let m = mint("100.00");
    let r = send(&m, get("/actions")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.media, "application/json");
    let v: serde_json::Value = serde_json::from_str(&r.body).unwrap();
    let transfer = &v["actions"][0];
    assert_eq!(transfer["name"], "transfer");
    assert_eq!(transfer["signature"], "transfer(amt: USD, payer: Account, payee: Account): None");
    assert!(transfer["preconditions"][0].as_str().unwrap().contains("0.0<USD> < amt"));
    assert!(transfer["doc"].as_str().unwrap().contains("Transfer a payment"));
    assert_eq!(transfer["access"][0], "account:${payer.routing}/${payer.account}");
    assert_eq!(names(&r.body), vec!["transfer", "splitBill"]);
}

#[tokio::test]
async fn index_negotiates_verbose_and_head_has_no_body() {
    let m = mint("100.00");
    let req = Request::get("/actions").header(header::ACCEPT, VERBOSE).body(Body::empty()).unwrap();
    let r = send(&m, req).await;
    assert_eq!(r.media, VERBOSE);
    assert!(r.body.starts_with("ActionsIndex{"), "{}", r.body);
    let head = send(&m, Request::head("/actions").body(Body::empty()).unwrap()).await;
    assert_eq!(head.status, StatusCode::OK);
    assert!(head.body.is_empty());
}

#[tokio::test]
async fn detail_names_env_requirements() {
    let m = mint("100.00");
    let r = send(&m, get("/actions/transfer")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.body.contains("PAYMENT_AUTHORIZATION"));
    assert!(r.body.contains("PAYMENT_LIMIT"));
    let v: serde_json::Value = serde_json::from_str(&r.body).unwrap();
    assert!(v["usage"][0].as_str().unwrap().starts_with("POST /pay/transfer"));
    assert!(v["links"].as_array().unwrap().iter().any(|l| l == "/actions/splitBill"));
    assert_eq!(send(&m, get("/actions/nope")).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn search_ranks_transfer_first() {
    let m = mint("100.00");
    let r = send(&m, get("/search?q=payment")).await;
    let v: serde_json::Value = serde_json::from_str(&r.body).unwrap();
    assert_eq!(v["hits"][0]["name"], "transfer");
    assert_eq!(v["hits"][0]["link"], "/actions/transfer");
    let r = send(&m, get("/search?q=zzzz")).await;
    let v: serde_json::Value = serde_json::from_str(&r.body).unwrap();
    assert!(v["hits"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn invisible_endpoints_are_not_found() {
    let m = Mint::builder(payments(), config("100.00", true)).agents(stub()).build().unwrap();
    assert!(names(&send(&m, get("/actions")).await.body).is_empty());
    let t = token(&["endpoint:splitBill"]);
    assert_eq!(names(&send(&m, get_as("/actions", &t)).await.body), vec!["splitBill"]);
    assert_eq!(send(&m, get_as("/actions/transfer", &t)).await.status, StatusCode::NOT_FOUND);
    assert_eq!(send(&m, get("/actions/transfer")).await.status, StatusCode::NOT_FOUND);
    let body = transfer_body("22.75", ("111", "222"), ("333", "444"));
    let req = Request::post("/pay/transfer")
        .header(header::CONTENT_TYPE, VERBOSE)
        .header(header::AUTHORIZATION, format!("Bearer {t}"))
        .body(Body::from(body))
        .unwrap();
    assert_eq!(send(&m, req).await.status, StatusCode::NOT_FOUND);
    assert_eq!(send(&m, get_as("/actions", "bogus.00")).await.status, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn empty_config_serves_only_discovery() {
    let m = Mint::builder(payments(), MintConfig::default()).build().unwrap();
    assert!(names(&send(&m, get("/actions")).await.body).is_empty());
    assert_eq!(send(&m, get("/search?q=payment")).await.status, StatusCode::OK);
    let r = send(&m, post("/pay/transfer", VERBOSE, String::new())).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn transfer_within_limit_succeeds() {
    let m = mint("100.00");
    let body = transfer_body("22.75", ("111", "222"), ("333", "444"));
    let r = send(&m, post("/pay/transfer", VERBOSE, body)).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(count(&m, TASK_COMPLETED), 1);
    assert_eq!(m.events().len(), 1);
}

#[tokio::test]
async fn transfer_in_minimal_form_succeeds() {
    let m = mint("100.00");
    let body = format!(
        "TransferArgs{{ 22.75<USD>, Account{{ '111', '222', '{TIN}' }}, Account{{ '333', '444', '987654321' }} }}"
    );
    let r = send(&m, post("/pay/transfer", MINIMAL, body)).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
}

#[tokio::test]
async fn over_limit_transfer_is_refused_with_clause() {
    let m = mint("100.00");
    let body = transfer_body("250.00", ("111", "222"), ("333", "444"));
    let r = send(&m, post("/pay/transfer", VERBOSE, body)).await;
    assert_eq!(r.status, StatusCode::PRECONDITION_FAILED);
    let v: serde_json::Value = serde_json::from_str(&r.body).unwrap();
    assert!(v["clause"].as_str().unwrap().contains("amt <= env.PAYMENT_LIMIT"), "{}", r.body);
    assert_eq!(v["kind"], "precondition");
    assert_eq!(v["request"], "req-1");
    assert_eq!(count(&m, TASK_ABORTED), 1);
    assert_eq!(m.events().len(), 1);
    assert_eq!(m.faults().len(), 1);
    assert!(m.faults()[0].args.contains("'*********'<TIN>"), "{}", m.faults()[0].args);
}

#[tokio::test]
async fn nonpositive_amount_is_refused() {
    let m = mint("100.00");
    let body = transfer_body("0.00", ("111", "222"), ("333", "444"));
    let r = send(&m, post("/pay/transfer", VERBOSE, body)).await;
    assert_eq!(r.status, StatusCode::PRECONDITION_FAILED);
    assert!(r.body.contains("0.0<USD> < amt"));
}

#[tokio::test]
async fn sandbox_denial_is_forbidden() {
    let m = Mint::builder(payments(), config("100.00", false))
        .bind_api("transfer", Arc::new(overreaching))
        .build()
        .unwrap();
    let body = transfer_body("22.75", ("111", "222"), ("999", "888"));
    let r = send(&m, post("/pay/transfer", VERBOSE, body)).await;
    assert_eq!(r.status, StatusCode::FORBIDDEN, "{}", r.body);
    let f = &m.faults()[0];
    assert_eq!(f.kind, "permission-denied");
    assert!(f.message.contains("account:999/888"), "{}", f.message);
    assert!(f.message.contains("account:111/222"), "{}", f.message);
}

#[tokio::test]
async fn split_bill_end_to_end() {
    let m = mint("100.00");
    let r = send(&m, post("/pay/split", VERBOSE, split_body())).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(r.body, "22.75");
    assert_eq!(count(&m, TASK_COMPLETED), 1);

    let low = mint("10.00");
    let r = send(&low, post("/pay/split", VERBOSE, split_body())).await;
    assert_eq!(r.status, StatusCode::PRECONDITION_FAILED, "{}", r.body);
    assert!(r.body.contains("$events.contains(Approve"), "{}", r.body);
    assert_eq!(count(&low, TASK_ABORTED), 1);

    let approved = mint("10.00");
    let tm = approved.wire_module().clone();
    let approve = bapi::decode(
        &tm,
        &format!("Approve{{ payee = {}, amt = 22.75<USD> }}", account("333", "444", "987654321")),
        &Type::Named("Approve".into()),
        WireForm::Verbose,
    )
    .unwrap();
    approved.append_event(approve);
    let r = send(&approved, post("/pay/split", VERBOSE, split_body())).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    assert_eq!(count(&approved, TASK_COMPLETED), 1);
}

#[tokio::test]
async fn bad_requests() {
    let m = mint("100.00");
    let r = send(&m, post("/pay/transfer", "text/plain", "x".into())).await;
    assert_eq!(r.status, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    let bad_tin = transfer_body("22.75", ("111", "222"), ("333", "444")).replace(TIN, "12");
    let r = send(&m, post("/pay/transfer", VERBOSE, bad_tin)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(!r.body.contains("'12'"));
    let r = send(&m, post("/pay/transfer", MINIMAL, "TransferArgs{ 1.00<USD> }".into())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let req = Request::post("/pay/transfer")
        .header(header::CONTENT_TYPE, VERBOSE)
        .header(header::ACCEPT, "text/html")
        .body(Body::from(transfer_body("22.75", ("111", "222"), ("333", "444"))))
        .unwrap();
    assert_eq!(send(&m, req).await.status, StatusCode::NOT_ACCEPTABLE);
    assert_eq!(send(&m, get("/pay/transfer")).await.status, StatusCode::METHOD_NOT_ALLOWED);
    assert!(m.events().is_empty());
}

#[tokio::test]
async fn logs_never_contain_sensitive_payloads() {
    let m = mint("10.00");
    let cases = [
        ("/pay/transfer", transfer_body("22.75", ("111", "222"), ("333", "444"))),
        ("/pay/transfer", transfer_body("250.00", ("111", "222"), ("333", "444"))),
        ("/pay/transfer", transfer_body("0.00", ("111", "222"), ("333", "444"))),
        ("/pay/split", split_body()),
    ];
    for (path, body) in cases {
        send(&m, post(path, VERBOSE, body)).await;
    }
    assert!(m.faults().len() >= 3);
    let logs = all_logs(&m);
    for secret in [TIN, "987654321", TOKEN] {
        assert!(!logs.contains(secret), "`{secret}` leaked into logs:\n{logs}");
    }
}

#[tokio::test]
async fn fault_log_file_is_redacted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("faults.jsonl");
    let cfg = MintConfig {
        fault_log: Some(path.clone()),
        ..config("10.00", false)
    };
    let m = Mint::builder(payments(), cfg).agents(stub()).build().unwrap();
    send(&m, post("/pay/split", VERBOSE, split_body())).await;
    send(&m, post("/pay/transfer", VERBOSE, transfer_body("0.00", ("111", "222"), ("333", "444")))).await;
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("0.0<USD> < amt"));
    assert!(text.contains("*********"));
    assert!(!text.contains(TIN) && !text.contains(TOKEN) && !text.contains("987654321"));
}

#[tokio::test]
async fn negotiation_round_trip() {
    let src = format!("{}\nfunction echo(order: Order): Order {{ return order; }}\n", corpus("order.bsq"));
    let tm = check_source(&src).unwrap();
    let cfg = MintConfig {
        routes: vec![RouteConfig::task("/echo", "echo", Visibility::Private)],
        ..MintConfig::default()
    };
    let m = Mint::builder(tm.clone(), cfg).build().unwrap();
    for (orderid, amount, customer) in [("A53", "45.50", TIN), ("Z1", "0.01", "000000001")] {
        let body = format!("EchoArgs{{ Order{{ '{orderid}', {amount}d, '{customer}' }} }}");
        let req = Request::post("/echo")
            .header(header::CONTENT_TYPE, MINIMAL)
            .header(header::ACCEPT, VERBOSE)
            .body(Body::from(body))
            .unwrap();
        let r = send(&m, req).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.body);
        assert_eq!(r.media, VERBOSE);
        let ty = Type::Named("Order".into());
        let back = bapi::decode(&tm, &r.body, &ty, WireForm::Verbose).unwrap();
        let sent = bapi::decode(&tm, &format!("Order{{ '{orderid}', {amount}d, '{customer}' }}"), &ty, WireForm::Minimal)
            .unwrap();
        assert_eq!(back, sent);
    }
}

#[test]
fn lint_blocks_public_sensitive_routes() {
    let tm = check_source(&corpus("order.bsq")).unwrap();
    let public = MintConfig {
        routes: vec![RouteConfig::task("/orders", "submitOrder", Visibility::Public)],
        ..MintConfig::default()
    };
    match Mint::builder(tm.clone(), public.clone()).build() {
        Err(MintError::LintBlocked(f)) => assert!(f[0].message.contains("TIN") || f[0].message.contains("sensitive")),
        other => panic!("expected lint block, got {:?}", other.err()),
    }
    assert!(!Mint::builder(tm.clone(), public).allow_lint_warnings(true).build().unwrap().lint().is_empty());
    let none = MintConfig {
        routes: vec![RouteConfig::task("/orders", "submitOrder", Visibility::Private).with_ceiling(Ceiling::NoneSensitive)],
        ..MintConfig::default()
    };
    assert!(matches!(Mint::builder(tm, none).build(), Err(MintError::LintBlocked(_))));
    let temps = check_source(&corpus("temps.bsq")).unwrap();
    let forecast = MintConfig {
        routes: vec![RouteConfig::task("/forecast", "forecast", Visibility::Public)],
        ..MintConfig::default()
    };
    assert!(Mint::builder(temps, forecast).build().unwrap().lint().is_empty());
}

#[test]
fn config_errors() {
    let err = |cfg: MintConfig| match Mint::builder(payments(), cfg).build() {
        Err(MintError::Config(m)) => m,
        Err(other) => panic!("unexpected {other}"),
        Ok(_) => panic!("config accepted"),
    };
    let mut c = config("100.00", false);
    c.routes.push(RouteConfig::task("/x", "nope", Visibility::Private));
    assert!(err(c).contains("unknown task"));
    let mut c = config("100.00", false);
    c.routes = vec![
        RouteConfig::task("/pay/*", "transfer", Visibility::Private),
        RouteConfig::task("/pay/**", "splitBill", Visibility::Private),
    ];
    assert!(err(c).contains("overlap"));
    let mut c = config("100.00", false);
    c.env.retain(|(n, _)| n != "PAYMENT_LIMIT");
    assert!(err(c).contains("PAYMENT_LIMIT"));
    let mut c = config("100.00", true);
    c.secret = None;
    assert!(err(c).contains("secret"));
}

#[tokio::test]
async fn longest_literal_prefix_wins() {
    let mut c = config("100.00", false);
    c.routes = vec![
        RouteConfig::task("/pay/**", "splitBill", Visibility::Private),
        RouteConfig::task("/pay/transfer", "transfer", Visibility::Private),
    ];
    let m = Mint::builder(payments(), c).agents(stub()).build().unwrap();
    let r = send(&m, post("/pay/transfer", VERBOSE, transfer_body("22.75", ("111", "222"), ("333", "444")))).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    let r = send(&m, post("/pay/other/split", VERBOSE, split_body())).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
}

#[tokio::test]
async fn file_routes_serve_static_documents() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("guide.md"), "use /actions").unwrap();
    let mut c = config("100.00", false);
    c.routes.push(RouteConfig {
        glob: "/docs/**".into(),
        target: aisette_mint::RouteTarget::File(dir.path().to_path_buf()),
        visibility: Visibility::Public,
        ceiling: Ceiling::Any,
    });
    let m = Mint::builder(payments(), c).build().unwrap();
    let r = send(&m, get("/docs/guide.md")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body, "use /actions");
    assert_eq!(send(&m, get("/docs/../secret")).await.status, StatusCode::NOT_FOUND);
}

fn visible_with(m: &Mint, perms: &[&str]) -> Vec<String> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let t = token(perms);
    names(&rt.block_on(send(m, get_as("/actions", &t))).body)
}

const PERMS: &[&str] = &["endpoint:transfer", "endpoint:splitBill", "endpoint:*", "endpoint:s*", "endpoint:other"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn index_is_monotone_in_permissions(small in proptest::sample::subsequence(PERMS.to_vec(), 0..=PERMS.len()),
                                        extra in proptest::sample::subsequence(PERMS.to_vec(), 0..=PERMS.len())) {
        let m = Mint::builder(payments(), config("100.00", true)).build().unwrap();
        let mut big = small.clone();
        big.extend(extra);
        let a = visible_with(&m, &small);
        let b = visible_with(&m, &big);
        for name in &a {
            prop_assert!(b.contains(name), "{name} visible with {small:?} but not {big:?}");
        }
    }
}
