//! Hole execution: memo, example files, resolver.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::bapi::{self, synthetic_entity, WireForm};
use crate::syntax::ast::{HoleExpr, Type};
use crate::types::TypedModule;
use crate::value::Value;

use super::{conforms, Fault, FaultKind, Runtime};

pub const HOLE_EXAMPLE_ENTITY: &str = "HoleExample";
pub const HOLE_ARGS_ENTITY: &str = "HoleArgs";

/// What a resolver is asked to fill.
#[derive(Debug)]
pub struct HoleRequest<'a> {
    pub id: &'a str,
    pub doc: Option<&'a str>,
    pub ty: &'a Type,
    pub args: &'a [(String, Value)],
}

pub trait HoleResolver {
    /// `None` leaves the hole unfilled.
    fn resolve(&mut self, req: &HoleRequest<'_>) -> Option<Value>;
}

impl<F> HoleResolver for F
where
    F: FnMut(&HoleRequest<'_>) -> Option<Value>,
{
    fn resolve(&mut self, req: &HoleRequest<'_>) -> Option<Value> {
        self(req)
    }
}

type MemoKey = (String, Vec<(String, Value)>);

/// Memoized hole results, optionally persisted as BAPI example files.
#[derive(Debug, Default)]
pub struct HoleStore {
    memo: BTreeMap<MemoKey, Value>,
    dir: Option<PathBuf>,
    loaded: BTreeSet<String>,
}

impl HoleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store whose `@examples` holes read and append `<dir>/<id>.bapi`.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::default()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    pub fn get(&self, id: &str, args: &[(String, Value)]) -> Option<&Value> {
        self.memo.get(&(id.to_string(), args.to_vec()))
    }

    pub fn insert(&mut self, id: &str, args: Vec<(String, Value)>, v: Value) {
        self.memo.insert((id.to_string(), args), v);
    }

    pub fn example_path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.bapi", file_stem(id))))
    }

    fn load(&mut self, tm: &TypedModule, h: &HoleExpr, ty: &Type) -> Result<(), Fault> {
        if !self.loaded.insert(h.id.clone()) {
            return Ok(());
        }
        let Some(path) = self.example_path(&h.id) else {
            return Ok(());
        };
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(io_fault(&path, e)),
        };
        let wm = example_module(tm, h, ty);
        let rec_ty = Type::Named(HOLE_EXAMPLE_ENTITY.into());
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec = bapi::decode(&wm, line, &rec_ty, WireForm::Verbose).map_err(|e| {
                Fault::new(FaultKind::Io, format!("{}:{}: {e}", path.display(), n + 1))
            })?;
            let (Some(Value::CString(id)), Some(Value::Entity { fields, .. }), Some(result)) =
                (rec.field("hole"), rec.field("args"), rec.field("result"))
            else {
                continue;
            };
            if *id == h.id {
                self.memo.insert((id.clone(), fields.clone()), result.clone());
            }
        }
        Ok(())
    }

    fn append(&self, tm: &TypedModule, h: &HoleExpr, ty: &Type, args: &[(String, Value)], v: &Value) -> Result<(), Fault> {
        let Some(path) = self.example_path(&h.id) else {
            return Ok(());
        };
        let wm = example_module(tm, h, ty);
        let rec = Value::Entity {
            name: HOLE_EXAMPLE_ENTITY.into(),
            fields: vec![
                ("hole".into(), Value::CString(h.id.clone())),
                (
                    "args".into(),
                    Value::Entity {
                        name: HOLE_ARGS_ENTITY.into(),
                        fields: args.to_vec(),
                    },
                ),
                ("result".into(), v.clone()),
            ],
        };
        let line = bapi::encode(&wm, &rec, &Type::Named(HOLE_EXAMPLE_ENTITY.into()), WireForm::Verbose);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_fault(parent, e))?;
        }
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_fault(&path, e))?;
        writeln!(f, "{line}").map_err(|e| io_fault(&path, e))
    }
}

fn io_fault(path: &Path, e: std::io::Error) -> Fault {
    Fault::new(FaultKind::Io, format!("{}: {e}", path.display()))
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

fn example_module(tm: &TypedModule, h: &HoleExpr, ty: &Type) -> TypedModule {
    tm.with_entities(vec![
        synthetic_entity(HOLE_ARGS_ENTITY, &h.scope),
        synthetic_entity(
            HOLE_EXAMPLE_ENTITY,
            &[
                ("hole".into(), Type::CString),
                ("args".into(), Type::Named(HOLE_ARGS_ENTITY.into())),
                ("result".into(), ty.clone()),
            ],
        ),
    ])
}

/// Fills hole `h` for the in-scope `args`: memo first, then the example
/// file, then the resolver.
pub(super) fn execute(rt: &mut Runtime<'_>, h: &HoleExpr, ty: &Type, args: Vec<(String, Value)>) -> Result<Value, Fault> {
    if let Some(v) = rt.holes.get(&h.id, &args) {
        return Ok(v.clone());
    }
    let tm = rt.module;
    if h.examples {
        rt.holes.load(tm, h, ty)?;
        if let Some(v) = rt.holes.get(&h.id, &args) {
            return Ok(v.clone());
        }
    }
    let req = HoleRequest {
        id: &h.id,
        doc: h.doc.as_deref(),
        ty,
        args: &args,
    };
    let Some(v) = rt.resolver().and_then(|r| r.resolve(&req)) else {
        return Err(Fault::new(FaultKind::UnfilledHole, format!("hole `{}` is unfilled", h.id)));
    };
    conforms(tm, &v, ty).map_err(|m| {
        Fault::new(FaultKind::HoleType, format!("hole `{}` produced an ill-typed value: {m}", h.id))
    })?;
    if h.examples {
        rt.holes.append(tm, h, ty, &args, &v)?;
    }
    rt.holes.insert(&h.id, args, v.clone());
    Ok(v)
}
