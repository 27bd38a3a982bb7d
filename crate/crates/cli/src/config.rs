//! Config documents and their validation.
//!
//! A run's config is a single flat JSON object: scenario defaults, overlaid
//! by an optional `--config` file, overlaid by `--set pointer=value` flags.
//! Validation is purely structural and arithmetic — types, ranges, and
//! cross-field inequalities — and never starts a computation, so `hdlab
//! validate` is safe on configs that would take minutes to run. Errors
//! carry the JSON pointer of the offending field.

use hdlab_core::{is_prime_u64, parse_rational, Rational};
use serde_json::Value;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

/// Overlay `over` onto `base`, key by key. Configs are flat objects, so a
/// top-level replace is the whole story.
pub fn merge(mut base: Value, over: &Value) -> Value {
    if let (Value::Object(b), Value::Object(o)) = (&mut base, over) {
        for (k, v) in o {
            b.insert(k.clone(), v.clone());
        }
    }
    base
}

/// Apply one `--set pointer=value` override. The value is parsed as JSON
/// when it parses, and kept as a string otherwise (so `--set nu=2/5` works
/// without quoting). A leading `/` on the pointer is optional.
pub fn apply_set(doc: &mut Value, arg: &str) -> Result<(), String> {
    let (path, raw) = arg
        .split_once('=')
        .ok_or_else(|| format!("--set needs pointer=value, got '{arg}'"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let tokens: Vec<&str> = path.split('/').filter(|t| !t.is_empty()).collect();
    if tokens.is_empty() {
        return Err("--set pointer must name a field".into());
    }
    let mut cur = doc;
    for (n, tok) in tokens.iter().enumerate() {
        let last = n + 1 == tokens.len();
        match cur {
            Value::Object(map) => {
                if last {
                    map.insert(tok.to_string(), value);
                    return Ok(());
                }
                cur = map
                    .get_mut(*tok)
                    .ok_or_else(|| format!("no field '{tok}' on the path '{path}'"))?;
            }
            Value::Array(items) => {
                let idx: usize = tok
                    .parse()
                    .map_err(|_| format!("'{tok}' is not an array index in '{path}'"))?;
                if last {
                    if idx < items.len() {
                        items[idx] = value;
                    } else if idx == items.len() {
                        items.push(value);
                    } else {
                        return Err(format!("index {idx} skips past the end of '{path}'"));
                    }
                    return Ok(());
                }
                cur = items
                    .get_mut(idx)
                    .ok_or_else(|| format!("index {idx} out of range in '{path}'"))?;
            }
            _ => return Err(format!("'{path}' descends into a non-container")),
        }
    }
    unreachable!("loop returns on the last token");
}

/// Field-by-field checker over one config document.
pub struct Checker<'a> {
    doc: &'a Value,
    pub errors: Vec<ValidationError>,
}

impl<'a> Checker<'a> {
    pub fn new(doc: &'a Value) -> Self {
        Checker { doc, errors: Vec::new() }
    }

    pub fn err(&mut self, pointer: &str, message: impl Into<String>) {
        self.errors.push(ValidationError { pointer: pointer.to_string(), message: message.into() });
    }

    fn get(&mut self, name: &str) -> Option<&'a Value> {
        match self.doc.get(name) {
            Some(v) => Some(v),
            None => {
                self.err(&format!("/{name}"), "missing field");
                None
            }
        }
    }

    pub fn u64_field(&mut self, name: &str, lo: u64, hi: u64) -> Option<u64> {
        let v = self.get(name)?;
        match v.as_u64() {
            Some(n) if (lo..=hi).contains(&n) => Some(n),
            Some(n) => {
                self.err(&format!("/{name}"), format!("{n} is outside [{lo}, {hi}]"));
                None
            }
            None => {
                self.err(&format!("/{name}"), "expected a non-negative integer");
                None
            }
        }
    }

    pub fn prime_field(&mut self, name: &str) -> Option<u64> {
        let p = self.u64_field(name, 2, u64::MAX)?;
        if is_prime_u64(p) {
            Some(p)
        } else {
            self.err(&format!("/{name}"), format!("{p} is not prime"));
            None
        }
    }

    pub fn bool_field(&mut self, name: &str) -> Option<bool> {
        let v = self.get(name)?;
        match v.as_bool() {
            Some(b) => Some(b),
            None => {
                self.err(&format!("/{name}"), "expected true or false");
                None
            }
        }
    }

    pub fn str_field(&mut self, name: &str, allowed: &[&str]) -> Option<String> {
        let v = self.get(name)?;
        match v.as_str() {
            Some(s) if allowed.contains(&s) => Some(s.to_string()),
            Some(s) => {
                self.err(
                    &format!("/{name}"),
                    format!("'{s}' is not one of {}", allowed.join(", ")),
                );
                None
            }
            None => {
                self.err(&format!("/{name}"), "expected a string");
                None
            }
        }
    }

    fn rational_of(&mut self, pointer: &str, v: &Value) -> Option<Rational> {
        let s = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) if n.is_u64() || n.is_i64() => n.to_string(),
            _ => {
                self.err(pointer, "expected a rational as 'a/b' or an integer");
                return None;
            }
        };
        match parse_rational(&s) {
            Ok(r) => Some(r),
            Err(_) => {
                self.err(pointer, format!("'{s}' does not parse as a rational"));
                None
            }
        }
    }

    pub fn rational_field(&mut self, name: &str) -> Option<Rational> {
        let v = self.get(name)?;
        self.rational_of(&format!("/{name}"), v)
    }

    /// A rational constrained to `[lo, hi]`.
    pub fn rational_in(
        &mut self,
        name: &str,
        lo: &Rational,
        hi: &Rational,
    ) -> Option<Rational> {
        let r = self.rational_field(name)?;
        if r < *lo || r > *hi {
            self.err(&format!("/{name}"), format!("{r} is outside [{lo}, {hi}]"));
            None
        } else {
            Some(r)
        }
    }

    pub fn rational_list(&mut self, name: &str) -> Option<Vec<Rational>> {
        let v = self.get(name)?;
        let Some(items) = v.as_array() else {
            self.err(&format!("/{name}"), "expected an array of rationals");
            return None;
        };
        if items.is_empty() {
            self.err(&format!("/{name}"), "expected at least one entry");
            return None;
        }
        let mut out = Vec::with_capacity(items.len());
        for (k, item) in items.iter().enumerate() {
            out.push(self.rational_of(&format!("/{name}/{k}"), item)?);
        }
        Some(out)
    }

    /// An array of `[a, b]` index pairs, each coordinate within the given
    /// caps and non-decreasing along the list.
    pub fn pairs_field(
        &mut self,
        name: &str,
        a_cap: u64,
        b_cap: u64,
    ) -> Option<Vec<(u64, u64)>> {
        let v = self.get(name)?;
        let Some(items) = v.as_array() else {
            self.err(&format!("/{name}"), "expected an array of [a, b] pairs");
            return None;
        };
        let mut out: Vec<(u64, u64)> = Vec::with_capacity(items.len());
        for (k, item) in items.iter().enumerate() {
            let ptr = format!("/{name}/{k}");
            let pair = item.as_array().filter(|p| p.len() == 2);
            let Some(pair) = pair else {
                self.err(&ptr, "expected a pair [a, b]");
                return None;
            };
            let (Some(a), Some(b)) = (pair[0].as_u64(), pair[1].as_u64()) else {
                self.err(&ptr, "pair entries must be non-negative integers");
                return None;
            };
            if a > a_cap || b > b_cap {
                self.err(&ptr, format!("pair exceeds the chain depths ({a_cap}, {b_cap})"));
                return None;
            }
            if let Some((pa, pb)) = out.last() {
                if a < *pa || b < *pb {
                    self.err(&ptr, "pair indices must be non-decreasing");
                    return None;
                }
            }
            out.push((a, b));
        }
        Some(out)
    }

    /// Flag any field outside the known set; scenario name included.
    pub fn finish(mut self, known: &[&str]) -> Vec<ValidationError> {
        if let Value::Object(map) = self.doc {
            for key in map.keys() {
                if !known.contains(&key.as_str()) {
                    self.errors.push(ValidationError {
                        pointer: format!("/{key}"),
                        message: "unknown field".into(),
                    });
                }
            }
        } else {
            self.errors.push(ValidationError {
                pointer: String::new(),
                message: "config must be a JSON object".into(),
            });
        }
        self.errors.sort_by(|a, b| a.pointer.cmp(&b.pointer).then(a.message.cmp(&b.message)));
        self.errors
    }
}
