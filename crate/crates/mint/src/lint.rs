//! Sensitive-exposure lint over routed tasks.

use std::fmt;

use aisette_core::ast::Type;
use aisette_core::types::TypedModule;
use aisette_core::Severity;

use crate::config::{Ceiling, MintConfig, RouteTarget, Visibility};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintFinding {
    pub severity: Severity,
    pub route: String,
    pub task: String,
    pub message: String,
}

impl fmt::Display for LintFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            _ => "warning",
        };
        write!(f, "{sev}: route `{}` ({}): {}", self.route, self.task, self.message)
    }
}

/// Parameter and return types of a task, labelled for messages.
pub fn task_types(tm: &TypedModule, task: &str) -> Option<Vec<(String, Type)>> {
    let (params, ret) = if let Some(a) = tm.api(task) {
        (&a.params, &a.ret)
    } else {
        let f = tm.function(task)?;
        (&f.params, &f.ret)
    };
    let mut out: Vec<(String, Type)> = params
        .iter()
        .map(|p| (format!("parameter `{}`", p.name), p.ty.clone()))
        .collect();
    out.push(("result".into(), ret.clone()));
    Some(out)
}

/// Flags public routes that carry any sensitive alias and private routes
/// whose types exceed their ceiling. Unknown tasks are skipped.
pub fn lint_sensitive_exposure(config: &MintConfig, tm: &TypedModule) -> Vec<LintFinding> {
    let mut out = Vec::new();
    for r in &config.routes {
        let RouteTarget::Task(task) = &r.target else {
            continue;
        };
        let Some(types) = task_types(tm, task) else {
            continue;
        };
        for (what, ty) in types {
            let tags = tm.sensitivity_tags(&ty);
            if tags.is_empty() {
                continue;
            }
            let list = tags.iter().cloned().collect::<Vec<_>>().join(", ");
            let message = match r.visibility {
                Visibility::Public => format!("{what} of type `{ty}` carries sensitive data ({list}) on a public route"),
                Visibility::Private => {
                    let over: Vec<&String> = tags.iter().filter(|t| !r.ceiling.allows(t)).collect();
                    if over.is_empty() {
                        continue;
                    }
                    let ceiling = match &r.ceiling {
                        Ceiling::NoneSensitive => "none".to_string(),
                        Ceiling::Level(l) => l.clone(),
                        Ceiling::Any => "any".to_string(),
                    };
                    let over = over.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
                    format!("{what} of type `{ty}` carries sensitive data ({over}) above the route ceiling `{ceiling}`")
                }
            };
            out.push(LintFinding {
                severity: Severity::Error,
                route: r.glob.clone(),
                task: task.clone(),
                message,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RouteConfig;
    use aisette_core::types::check_source;

    const SRC: &str = r#"
type OrderId = CString of /[A-Z][0-9]+/;
sensitive type TIN = CString of /[0-9]{9}/;
sensitive(pii) type Email = CString;
entity Order { field orderid: OrderId; field customer: TIN; }
function show(o: Order): OrderId { return o.orderid; }
function mail(e: Email): Int { return 1i; }
function plain(x: Int): Int { return x; }
"#;

    fn run(routes: Vec<RouteConfig>) -> Vec<LintFinding> {
        let tm = check_source(SRC).unwrap();
        let config = MintConfig {
            routes,
            ..MintConfig::default()
        };
        lint_sensitive_exposure(&config, &tm)
    }

    #[test]
    fn public_sensitive_param_is_an_error() {
        let f = run(vec![RouteConfig::task("/show", "show", Visibility::Public)]);
        assert_eq!(f.len(), 1);
        assert!(f[0].message.contains("parameter `o`"), "{}", f[0]);
        assert!(f[0].message.contains("sensitive"));
    }

    #[test]
    fn ceilings() {
        let none = RouteConfig::task("/show", "show", Visibility::Private).with_ceiling(Ceiling::NoneSensitive);
        assert_eq!(run(vec![none]).len(), 1);
        let pii = RouteConfig::task("/mail", "mail", Visibility::Private).with_ceiling(Ceiling::Level("pii".into()));
        assert!(run(vec![pii]).is_empty());
        let wrong = RouteConfig::task("/show", "show", Visibility::Private).with_ceiling(Ceiling::Level("pii".into()));
        assert_eq!(run(vec![wrong]).len(), 1);
        assert!(run(vec![RouteConfig::task("/show", "show", Visibility::Private)]).is_empty());
    }

    #[test]
    fn plain_public_route_is_clean() {
        assert!(run(vec![RouteConfig::task("/plain", "plain", Visibility::Public)]).is_empty());
    }
}
