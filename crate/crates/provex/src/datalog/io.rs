//! Flat-file formats: one `<pred>.csv` per relation and a domain-groups file.
//!
//! A CSV row may start with `?` (undetermined tuple) and may end with an
//! `@annot=<var>` column. An optional first line `# a,b,...` names the
//! attributes.

use std::fs;
use std::path::Path;

use super::instance::{Attr, Instance};
use crate::error::{Error, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Parses the contents of one relation file into `instance`.
pub fn read_relation(instance: &mut Instance, pred: &str, text: &str) -> Result<()> {
    let mut body = text;
    let mut names = None;
    if let Some(rest) = text.trim_start().strip_prefix('#') {
        let (header, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        names = Some(header.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
        body = tail;
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    if let Some(names) = &names {
        instance.declare(pred, names.len())?.attrs = names.clone();
    }
    for (i, record) in reader.records().enumerate() {
        let line = i + 1 + usize::from(names.is_some());
        let record = record.map_err(|e| Error::syntax(line, 1, "", e.to_string()))?;
        let mut fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.len() == 1 && fields[0].is_empty() {
            continue;
        }
        let mut undetermined = false;
        if let Some(first) = fields.first_mut() {
            if let Some(rest) = first.strip_prefix('?') {
                undetermined = true;
                *first = rest.trim().to_string();
            }
        }
        let mut annot = None;
        if let Some(last) = fields.last() {
            if let Some(var) = last.strip_prefix("@annot=") {
                annot = Some(var.trim().to_string());
                fields.pop();
            }
        }
        let result = if undetermined {
            instance.insert_undetermined(pred, &fields)
        } else {
            instance.insert(pred, &fields)
        };
        result.map_err(|e| match e {
            Error::ArityMismatch { .. } => Error::syntax(line, 1, "", e.to_string()),
            other => other,
        })?;
        if let Some(var) = annot {
            instance.annotate(pred, &fields, &var)?;
        }
    }
    Ok(())
}

/// Loads every `*.csv` file of a directory.
pub fn load_instance(dir: &Path) -> Result<Instance> {
    let mut instance = Instance::new();
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    for path in entries {
        let pred = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        read_relation(&mut instance, &pred, &text).map_err(|e| e.in_file(path.display().to_string()))?;
    }
    Ok(instance)
}

/// One group per non-empty line, attributes separated by commas.
pub fn parse_domain_groups(instance: &Instance, text: &str) -> Result<Vec<Vec<Attr>>> {
    text.lines()
        .map(|l| l.split('%').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|a| instance.resolve_attr(a)).collect())
        .collect()
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// A program with its instance and domain assignment.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub program: super::Program,
    pub instance: Instance,
    pub dom: super::DomainAssignment,
}

/// Loads a program file, a data directory and an optional domain-groups file.
pub fn load_inputs(program: &Path, data: &Path, domains: Option<&Path>) -> Result<Inputs> {
    let text = read_file(program)?;
    let program = super::parse_program(&text).map_err(|e| e.in_file(program.display().to_string()))?;
    let instance = load_instance(data)?;
    let groups = match domains {
        Some(path) => parse_domain_groups(&instance, &read_file(path)?)
            .map_err(|e| e.in_file(path.display().to_string()))?,
        None => Vec::new(),
    };
    let dom = super::default_domains(&instance, &groups);
    Ok(Inputs { program, instance, dom })
}
