//! `/actions`, `/actions/{endpoint}` and `/search` documents.

use std::path::Path;

use aisette_core::ast::{Body, Clause, EnvDecl, Param, Type};
use aisette_core::bapi::{args_entity_name, MEDIA_JSON, MEDIA_MINIMAL, MEDIA_VERBOSE};
use aisette_core::types::{check_source, TypedModule};
use aisette_core::Value;

use crate::config::Visibility;

/// Entity declarations for the documents the server returns.
pub const INDEX_SCHEMA: &str = r#"
entity ActionEntry {
  field name: CString;
  field route: String;
  field kind: CString;
  field signature: String;
  field preconditions: List<String>;
  field postconditions: List<String>;
  field doc: Option<String>;
  field access: List<String>;
  field visibility: CString;
}

entity ActionsIndex {
  field actions: List<ActionEntry>;
}

entity EnvEntry {
  field name: CString;
  field typeName: String;
}

entity ActionDetail {
  field endpoint: ActionEntry;
  field environment: List<EnvEntry>;
  field usage: List<String>;
  field examples: List<String>;
  field links: List<String>;
}

entity SearchHit {
  field name: CString;
  field score: Int;
  field link: String;
}

entity SearchResults {
  field query: String;
  field hits: List<SearchHit>;
}
"#;

pub fn schema() -> TypedModule {
    check_source(INDEX_SCHEMA).expect("index schema typechecks")
}

/// Everything discovery needs about one routed task.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub name: String,
    pub route: String,
    pub kind: &'static str,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub env: Vec<(String, Type)>,
    pub requires: Vec<String>,
    pub ensures: Vec<String>,
    pub doc: Option<String>,
    pub permissions: Vec<String>,
    pub visibility: Visibility,
    /// Ids of holes that may keep example files.
    pub holes: Vec<String>,
}

fn clauses(cs: &[Clause]) -> Vec<String> {
    cs.iter().map(|c| c.text.clone()).collect()
}

fn pairs(ps: &[Param]) -> Vec<(String, Type)> {
    ps.iter().map(|p| (p.name.clone(), p.ty.clone())).collect()
}

fn env_pairs(es: &[EnvDecl]) -> Vec<(String, Type)> {
    es.iter().map(|e| (e.name.clone(), e.ty.clone())).collect()
}

impl Endpoint {
    pub fn from_task(tm: &TypedModule, task: &str, route: &str, visibility: Visibility) -> Option<Endpoint> {
        let mut e = if let Some(a) = tm.api(task) {
            Endpoint {
                name: a.name.clone(),
                route: route.to_string(),
                kind: "api",
                params: pairs(&a.params),
                ret: a.ret.clone(),
                env: env_pairs(&a.env),
                requires: clauses(&a.requires),
                ensures: clauses(&a.ensures),
                doc: a.doc.clone(),
                permissions: a.permissions.iter().map(|p| p.text.clone()).collect(),
                visibility,
                holes: Vec::new(),
            }
        } else {
            let f = tm.function(task)?;
            let kind = match f.kind {
                aisette_core::ast::FunctionKind::Action => "action",
                aisette_core::ast::FunctionKind::Function => "function",
            };
            let holes = match &f.body {
                Body::Hole(h) => vec![h.id.clone()],
                Body::Block(_) => Vec::new(),
            };
            Endpoint {
                name: f.name.clone(),
                route: route.to_string(),
                kind,
                params: pairs(&f.params),
                ret: f.ret.clone(),
                env: env_pairs(&f.env),
                requires: clauses(&f.requires),
                ensures: clauses(&f.ensures),
                doc: f.doc.clone(),
                permissions: Vec::new(),
                visibility,
                holes,
            }
        };
        e.doc = e.doc.map(|d| tidy_doc(&d));
        Some(e)
    }

    /// Permission URI a caller needs to see a private endpoint.
    pub fn permission_uri(&self) -> String {
        format!("endpoint:{}", self.name)
    }

    pub fn signature(&self) -> String {
        let ps: Vec<String> = self.params.iter().map(|(n, t)| format!("{n}: {t}")).collect();
        format!("{}({}): {}", self.name, ps.join(", "), self.ret)
    }

    pub fn link(&self) -> String {
        format!("/actions/{}", self.name)
    }

    pub fn entry(&self) -> Value {
        let strings = |xs: &[String]| Value::List(xs.iter().map(|s| Value::String(s.clone())).collect());
        Value::Entity {
            name: "ActionEntry".into(),
            fields: vec![
                ("name".into(), Value::CString(self.name.clone())),
                ("route".into(), Value::String(self.route.clone())),
                ("kind".into(), Value::CString(self.kind.into())),
                ("signature".into(), Value::String(self.signature())),
                ("preconditions".into(), strings(&self.requires)),
                ("postconditions".into(), strings(&self.ensures)),
                ("doc".into(), Value::Option(self.doc.clone().map(|d| Box::new(Value::String(d))))),
                ("access".into(), strings(&self.permissions)),
                ("visibility".into(), Value::CString(self.visibility.as_str().into())),
            ],
        }
    }

    fn usage(&self) -> Vec<String> {
        let fields: Vec<String> = self.params.iter().map(|(n, t)| format!("{n} = <{t}>")).collect();
        let json: Vec<String> = self.params.iter().map(|(n, t)| format!("\"{n}\": <{t}>")).collect();
        let args = args_entity_name(&self.name);
        let mut out = vec![
            format!("POST {} with Content-Type {MEDIA_JSON}: {{{}}}", self.route, json.join(", ")),
            format!("POST {} with Content-Type {MEDIA_VERBOSE}: {args}{{ {} }}", self.route, fields.join(", ")),
            format!(
                "POST {} with Content-Type {MEDIA_MINIMAL}: {args}{{ {} }}",
                self.route,
                self.params.iter().map(|(_, t)| format!("<{t}>")).collect::<Vec<_>>().join(", ")
            ),
            format!("Accept {MEDIA_JSON}, {MEDIA_VERBOSE} or {MEDIA_MINIMAL}; the result has type {}", self.ret),
        ];
        if !self.requires.is_empty() {
            out.push("A request whose arguments fail a requires clause is refused with 412 and the clause text.".into());
        }
        if !self.permissions.is_empty() {
            out.push(format!(
                "Resource access is limited to {}; anything else is refused with 403.",
                self.permissions.join(", ")
            ));
        }
        out
    }

    /// Detail document. `related` are other visible endpoints.
    pub fn detail(&self, examples_dir: Option<&Path>, related: &[&Endpoint]) -> Value {
        let env = self
            .env
            .iter()
            .map(|(n, t)| Value::Entity {
                name: "EnvEntry".into(),
                fields: vec![
                    ("name".into(), Value::CString(n.clone())),
                    ("typeName".into(), Value::String(t.to_string())),
                ],
            })
            .collect();
        let mut links = vec!["/actions".to_string(), format!("/search?q={}", self.name)];
        for r in related {
            let shares = r
                .params
                .iter()
                .chain(std::iter::once(&(String::new(), r.ret.clone())))
                .any(|(_, t)| self.type_names().contains(&t.to_string()) && matches!(t, Type::Named(_)));
            if shares {
                links.push(r.link());
            }
        }
        let strings = |xs: Vec<String>| Value::List(xs.into_iter().map(Value::String).collect());
        Value::Entity {
            name: "ActionDetail".into(),
            fields: vec![
                ("endpoint".into(), self.entry()),
                ("environment".into(), Value::List(env)),
                ("usage".into(), strings(self.usage())),
                ("examples".into(), strings(self.examples(examples_dir))),
                ("links".into(), strings(links)),
            ],
        }
    }

    fn examples(&self, dir: Option<&Path>) -> Vec<String> {
        let Some(dir) = dir else {
            return Vec::new();
        };
        let Ok(entries) = std::fs::read_dir(dir) else {
            return Vec::new();
        };
        let anon = format!("{}_", self.name);
        let mut files: Vec<_> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "bapi"))
            .filter(|p| {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                self.holes.iter().any(|h| h == stem) || stem.strip_prefix(&anon).is_some_and(|n| n.chars().all(|c| c.is_ascii_digit()))
            })
            .collect();
        files.sort();
        files
            .iter()
            .filter_map(|p| std::fs::read_to_string(p).ok())
            .flat_map(|t| t.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect::<Vec<_>>())
            .collect()
    }

    fn type_names(&self) -> Vec<String> {
        self.params.iter().map(|(_, t)| t.to_string()).chain([self.ret.to_string()]).collect()
    }

    /// Text the default scorer indexes.
    pub fn search_text(&self) -> Vec<String> {
        let mut out = vec![self.name.clone()];
        out.extend(self.doc.clone());
        for (n, t) in self.params.iter().chain(&self.env) {
            out.push(n.clone());
            out.push(t.to_string());
        }
        out.push(self.ret.to_string());
        out
    }
}

/// Strips comment leaders from a doc block and joins it onto one line.
fn tidy_doc(doc: &str) -> String {
    doc.lines()
        .map(|l| l.trim().trim_start_matches('*').trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn index_value(endpoints: &[&Endpoint]) -> Value {
    Value::Entity {
        name: "ActionsIndex".into(),
        fields: vec![("actions".into(), Value::List(endpoints.iter().map(|e| e.entry()).collect()))],
    }
}

/// Ranks documents for a query.
pub trait Searcher: Send + Sync {
    /// `(id, score)` pairs, best first. Documents scoring zero are omitted.
    fn rank(&self, query: &str, docs: &[(String, Vec<String>)]) -> Vec<(String, i64)>;
}

/// Splits on non-alphanumerics and lower-to-upper case changes, then folds case.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev_lower = false;
    for c in text.chars() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur).to_lowercase());
            }
            prev_lower = false;
            continue;
        }
        if c.is_uppercase() && prev_lower && !cur.is_empty() {
            out.push(std::mem::take(&mut cur).to_lowercase());
        }
        prev_lower = c.is_lowercase() || c.is_ascii_digit();
        cur.push(c);
    }
    if !cur.is_empty() {
        out.push(cur.to_lowercase());
    }
    out
}

/// Exact token matches score 2; a shared prefix of at least four
/// characters scores 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenOverlap;

const MIN_PREFIX: usize = 4;

fn token_score(q: &str, d: &str) -> i64 {
    if q == d {
        2
    } else if (q.len() >= MIN_PREFIX && d.starts_with(q)) || (d.len() >= MIN_PREFIX && q.starts_with(d)) {
        1
    } else {
        0
    }
}

impl Searcher for TokenOverlap {
    fn rank(&self, query: &str, docs: &[(String, Vec<String>)]) -> Vec<(String, i64)> {
        let q = tokens(query);
        let mut out: Vec<(String, i64)> = docs
            .iter()
            .map(|(id, texts)| {
                let score = texts
                    .iter()
                    .flat_map(|t| tokens(t))
                    .map(|d| q.iter().map(|q| token_score(q, &d)).sum::<i64>())
                    .sum();
                (id.clone(), score)
            })
            .filter(|(_, s)| *s > 0)
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

pub fn search_value(query: &str, hits: &[(String, i64)]) -> Value {
    Value::Entity {
        name: "SearchResults".into(),
        fields: vec![
            ("query".into(), Value::String(query.to_string())),
            (
                "hits".into(),
                Value::List(
                    hits.iter()
                        .map(|(n, s)| Value::Entity {
                            name: "SearchHit".into(),
                            fields: vec![
                                ("name".into(), Value::CString(n.clone())),
                                ("score".into(), Value::Int(*s)),
                                ("link".into(), Value::String(format!("/actions/{n}"))),
                            ],
                        })
                        .collect(),
                ),
            ),
        ],
    }
}
