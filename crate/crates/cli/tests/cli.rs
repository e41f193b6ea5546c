use std::io::Write;
use std::process::{Command, Output, Stdio};

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn aisette(args: &[&str]) -> Output {
    aisette_in(args, None)
}

fn aisette_in(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_aisette"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or_default().as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

fn account(routing: &str, acct: &str, holder: &str) -> String {
    format!("Account{{ routing = '{routing}'<RoutingNumber>, account = '{acct}'<AccountNumber>, holder = '{holder}'<TIN> }}")
}

#[test]
fn check_reports_ok_and_diagnostics() {
    let o = aisette(&["check", &corpus("sign.bsq"), &corpus("temps.bsq")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("sign.bsq: ok"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bsq");
    std::fs::write(&bad, "function f(x: Int): Int { return y; }\n").unwrap();
    let o = aisette(&["check", path(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("bad.bsq:1:"), "{}", stdout(&o));

    let o = aisette(&["check", "/nonexistent.bsq"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn test_reports_valid_and_counterexample() {
    let o = aisette(&["test", &corpus("sign.bsq")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "VALID signRange\n1 test run\n");

    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.bsq");
    let src = std::fs::read_to_string(corpus("sign.bsq")).unwrap().replace("y = -1i;", "y = -2i;");
    std::fs::write(&m, src).unwrap();
    let o = aisette(&["test", path(&m)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("COUNTEREXAMPLE signRange x = -"), "{}", stdout(&o));

    let o = aisette(&["test", &corpus("sign.bsq"), "--filter", "nomatch"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "0 tests run\n");
}

#[test]
fn test_json_and_missing_solver() {
    let o = aisette(&["--format", "json", "test", &corpus("sign.bsq")]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tests"][0]["verdict"], "valid");
    assert_eq!(v["run"], 1);

    let o = aisette(&["--solver", "/nonexistent/z3", "--format", "json", "test", &corpus("sign.bsq")]);
    assert_eq!(code(&o), 2);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exit"], 2);
}

#[test]
fn introspect_reports_missing_then_satisfied() {
    let payments = corpus("payments.bsq");
    let o = aisette(&["introspect", &payments, &corpus("splitbill_prefix.bsq"), "transfer"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("MISSING transfer: requires amt <= env.PAYMENT_LIMIT"), "{out}");
    assert!(out.contains("witness:"));

    let o = aisette(&["introspect", &payments, &corpus("splitbill_guarded.bsq"), "transfer"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "SATISFIED transfer\n");

    let o = aisette(&["--format", "json", "introspect", &payments, &corpus("splitbill_prefix.bsq"), "transfer"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["satisfied"], false);

    let o = aisette(&["introspect", &payments, &corpus("splitbill_prefix.bsq"), "nope"]);
    assert_eq!(code(&o), 2);
}

fn split_bill(limit: &str, events: Option<&std::path::Path>, json: bool) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let stub = dir.path().join("stub.tsv");
    std::fs::write(&stub, ".*\t.*half.*\t22.75\n").unwrap();
    let payee = account("333", "444", "987654321");
    let acct = format!("account={}", account("111", "222", "123456789"));
    let lim = format!("PAYMENT_LIMIT={limit}");
    let module = corpus("payments.bsq");
    let mut args = Vec::new();
    if json {
        args.extend(["--format", "json"]);
    }
    args.extend([
        "run",
        &module,
        "splitBill",
        "lunch was $45.50",
        &payee,
        "--stub",
        path(&stub),
        "--env",
        &acct,
        "--env",
        "PAYMENT_AUTHORIZATION=tok-Zq81x",
        "--env",
        &lim,
        "--no-prompt",
    ]);
    if let Some(e) = events {
        args.extend(["--events", path(e)]);
    }
    aisette(&args)
}

#[test]
fn run_split_bill_outcomes() {
    let o = split_bill("100.00", None, false);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("22.75<USD>\napi transfer("), "{out}");
    assert!(!out.contains("123456789"));
    assert!(!out.contains("tok-Zq81x"));

    let o = split_bill("10.00", None, false);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.starts_with("FAULT precondition in transfer"), "{out}");
    assert!(out.contains("$events.contains(Approve"));

    let o = split_bill("10.00", None, true);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(v["fault"]["kind"], "precondition");

    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("events.bapi");
    std::fs::write(
        &ev,
        format!("Approve{{ payee = {}, amt = 22.75<USD> }}\n", account("333", "444", "987654321")),
    )
    .unwrap();
    let o = split_bill("10.00", Some(&ev), false);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn run_functions_and_holes() {
    let o = aisette(&["run", &corpus("sign.bsq"), "sign", "-5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "-1i\n");

    let dir = tempfile::tempdir().unwrap();
    let holes = &corpus("holes.bsq");
    let ex = path(dir.path());
    let o = aisette(&["run", holes, "abs", "-3", "--no-prompt"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("unfilled-hole"), "{}", stdout(&o));

    let o = aisette_in(&["run", holes, "abs", "-3", "--examples", ex], Some("3\n"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "3i\n");
    let o = aisette(&["run", holes, "abs", "-3", "--examples", ex, "--no-prompt"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "3i\n");
}

#[test]
fn encode_and_decode() {
    let order = &corpus("order.bsq");
    let o = aisette_in(
        &["encode", order, "Order", "--from", "json", "--to", "minimal"],
        Some(r#"{"orderid":"A53","amount":45.50,"customer":"123456789"}"#),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "Order{ 'A53', 45.50d, '123456789' }");

    let o = aisette_in(
        &["encode", order, "Order", "--from", "minimal", "--to", "redacted"],
        Some("Order{ 'A53', 45.50d, '123456789' }"),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("customer = '*********'<TIN>"), "{}", stdout(&o));

    let o = aisette_in(&["decode", order, "Order", "--form", "minimal"], Some("Order{ 'A53', 45.50d }"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("3 field(s) but 2"), "{}", stderr(&o));

    let o = aisette_in(&["decode", order, "Nope"], Some("x"));
    assert_eq!(code(&o), 2);
}

#[test]
fn lint_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let module = corpus("order.bsq");
    let write = |name: &str, vis: &str| {
        let p = dir.path().join(name);
        let cfg = serde_json::json!({
            "listen": "127.0.0.1:0",
            "module": module,
            "routes": [{ "glob": "/orders", "task": "submitOrder", "visibility": vis, "ceiling": "any" }],
            "bindings": [],
            "logging": true,
            "auth": false
        });
        std::fs::write(&p, cfg.to_string()).unwrap();
        p
    };
    let public = write("public.json", "public");
    let private = write("private.json", "private");

    let o = aisette(&["lint", "--config", path(&public)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("route `/orders` (submitOrder)"), "{}", stdout(&o));
    let o = aisette(&["lint", "--config", path(&private)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = aisette(&["serve", "--config", path(&public)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("sensitive"), "{}", stderr(&o));

    let o = aisette(&["lint", "--config", "/nonexistent.json"]);
    assert_eq!(code(&o), 2);
}
