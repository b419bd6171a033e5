//! Channel-spec text format.
//!
//! ```text
//! # one key per line; `#` starts a comment
//! name         = dephased-plus
//! family       = dephasing
//! theta_domain = [0, 1]                # m parameters: [a, b] x m, or [[a, b], [c, d]]
//! input_state  = [0.7071067811865476, 0.7071067811865476]
//! ```
//!
//! Values are atoms or bracketed lists. Complex numbers use `a+bi`
//! syntax without spaces (`1`, `-0.5i`, `i`, `1e-3-2.5e-1i`). Family-specific
//! keys:
//!
//! * `rotation`: `axis = x | y | z`
//! * `example2`: `f = [c0, c1, c2]`, `g = [c0, c1, c2]` (affine in θ¹, θ², clamped to [0, 1])
//! * `custom-spectral`: `dim`, `eigenvalues` (one polynomial coefficient list
//!   per eigenvalue, constant term first), `basis` (rows are the vectors
//!   w_k at θ = 0), `generator` (Hermitian G, rows; w_k(θ) = exp(−iθG) w_k(0))
//!
//! Unknown keys, duplicate keys and keys that do not apply to the family
//! are rejected.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::families::{Affine, Axis, CustomSpectral};
use super::{builtin, FamilyOptions, ParametricChannel, BUILTIN_FAMILIES};
use crate::error::{QfiError, Result};
use crate::linalg::{CMatrix, CVector};
use crate::quantum::{PureState, STATE_TOL};

const COMMON_KEYS: &[&str] = &["name", "family", "theta_domain"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_domain: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_state: Option<Vec<Complex64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<Complex64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<Vec<Complex64>>>,
}

#[derive(Debug, Clone)]
enum Value {
    Atom { text: String, col: usize },
    List { items: Vec<Value>, col: usize },
}

impl Value {
    fn col(&self) -> usize {
        match self {
            Value::Atom { col, .. } | Value::List { col, .. } => *col,
        }
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    offset: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize, offset: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            offset,
            _src: src,
        }
    }

    fn col(&self) -> usize {
        self.offset + self.pos + 1
    }

    fn err(&self, message: impl Into<String>) -> QfiError {
        QfiError::Parse {
            line: self.line,
            column: self.col(),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        let col = self.col();
        match self.peek() {
            Some('[') => {
                self.pos += 1;
                let mut items = Vec::new();
                self.skip_ws();
                if self.peek() == Some(']') {
                    self.pos += 1;
                } else {
                    loop {
                        items.push(self.value()?);
                        self.skip_ws();
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            Some(']') => {
                                self.pos += 1;
                                break;
                            }
                            Some(c) => return Err(self.err(format!("expected `,` or `]`, found `{c}`"))),
                            None => return Err(self.err("unterminated list")),
                        }
                    }
                }
                // optional repetition suffix: `x m`
                let save = self.pos;
                self.skip_ws();
                if self.peek() == Some('x') {
                    self.pos += 1;
                    self.skip_ws();
                    let ncol = self.col();
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let digits: String = self.chars[start..self.pos].iter().collect();
                    let m: usize = digits.parse().map_err(|_| QfiError::Parse {
                        line: self.line,
                        column: ncol,
                        message: "expected a repetition count after `x`".into(),
                    })?;
                    if m == 0 {
                        return Err(QfiError::Parse {
                            line: self.line,
                            column: ncol,
                            message: "repetition count must be positive".into(),
                        });
                    }
                    let one = Value::List { items, col };
                    return Ok(Value::List {
                        items: vec![one; m],
                        col,
                    });
                }
                self.pos = save;
                Ok(Value::List { items, col })
            }
            Some(c) if !matches!(c, ']' | ',') => {
                let start = self.pos;
                while self
                    .peek()
                    .is_some_and(|c| !c.is_whitespace() && !matches!(c, '[' | ']' | ','))
                {
                    self.pos += 1;
                }
                Ok(Value::Atom {
                    text: self.chars[start..self.pos].iter().collect(),
                    col,
                })
            }
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
            None => Err(self.err("missing value")),
        }
    }
}

/// Parses `a+bi`-style complex literals.
pub(crate) fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().filter(|x| x.is_finite()).map(|x| Complex64::new(x, 0.0));
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("", body),
    };
    let re = if re.is_empty() { 0.0 } else { re.parse::<f64>().ok()? };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().ok()?,
    };
    (re.is_finite() && im.is_finite()).then(|| Complex64::new(re, im))
}

pub(crate) fn format_real(x: f64) -> String {
    format!("{x:?}")
}

pub(crate) fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format_real(z.re)
    } else if z.re == 0.0 {
        format!("{}i", format_real(z.im))
    } else {
        let sign = if z.im.is_sign_negative() { '-' } else { '+' };
        format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
    }
}

struct Entry {
    key: String,
    value: Value,
    line: usize,
}

fn semantic(line: usize, col: usize, message: impl Into<String>) -> QfiError {
    QfiError::Parse {
        line,
        column: col,
        message: message.into(),
    }
}

fn atom(e: &Entry) -> Result<(&str, usize)> {
    match &e.value {
        Value::Atom { text, col } => Ok((text, *col)),
        Value::List { col, .. } => Err(semantic(e.line, *col, format!("`{}` expects a single value", e.key))),
    }
}

fn list<'v>(e: &Entry, v: &'v Value) -> Result<&'v [Value]> {
    match v {
        Value::List { items, .. } => Ok(items),
        Value::Atom { col, .. } => Err(semantic(e.line, *col, format!("`{}` expects a list", e.key))),
    }
}

fn real(e: &Entry, v: &Value) -> Result<f64> {
    match v {
        Value::Atom { text, col } => text
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| semantic(e.line, *col, format!("`{text}` is not a real number"))),
        Value::List { col, .. } => Err(semantic(e.line, *col, "expected a number, found a list")),
    }
}

fn complex(e: &Entry, v: &Value) -> Result<Complex64> {
    match v {
        Value::Atom { text, col } => parse_complex(text)
            .ok_or_else(|| semantic(e.line, *col, format!("`{text}` is not a complex number"))),
        Value::List { col, .. } => Err(semantic(e.line, *col, "expected a number, found a list")),
    }
}

fn reals(e: &Entry, v: &Value) -> Result<Vec<f64>> {
    list(e, v)?.iter().map(|x| real(e, x)).collect()
}

fn complexes(e: &Entry, v: &Value) -> Result<Vec<Complex64>> {
    list(e, v)?.iter().map(|x| complex(e, x)).collect()
}

fn interval(e: &Entry, v: &Value) -> Result<(f64, f64)> {
    let xs = reals(e, v)?;
    if xs.len() != 2 {
        return Err(semantic(e.line, v.col(), "an interval needs exactly two bounds"));
    }
    Ok((xs[0], xs[1]))
}

fn allowed_keys(family: &str) -> Vec<&'static str> {
    let mut keys = COMMON_KEYS.to_vec();
    match family {
        "example1" | "example2" | "custom-spectral" => {}
        _ => keys.push("input_state"),
    }
    match family {
        "rotation" => keys.push("axis"),
        "example2" => keys.extend(["f", "g"]),
        "custom-spectral" => keys.extend(["dim", "eigenvalues", "basis", "generator"]),
        _ => {}
    }
    keys
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.len() - content.trim_start().len() + 1;
                return Err(semantic(line, col, "expected `key = value`"));
            };
            let key = content[..eq].trim();
            let key_col = content.len() - content.trim_start().len() + 1;
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(semantic(line, key_col, format!("invalid key `{key}`")));
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(semantic(line, key_col, format!("duplicate key `{key}`")));
            }
            let rest = &content[eq + 1..];
            let offset = content[..eq + 1].chars().count();
            let mut cur = Cursor::new(rest, line, offset);
            let value = cur.value()?;
            cur.skip_ws();
            if cur.peek().is_some() {
                return Err(cur.err("trailing characters after value"));
            }
            entries.push(Entry {
                key: key.to_string(),
                value,
                line,
            });
        }

        let fam_entry = entries
            .iter()
            .find(|e| e.key == "family")
            .ok_or_else(|| semantic(1, 1, "missing required key `family`"))?;
        let family = atom(fam_entry)?.0.to_string();
        if family != "custom-spectral" && !BUILTIN_FAMILIES.contains(&family.as_str()) {
            let col = fam_entry.value.col();
            return Err(semantic(fam_entry.line, col, format!("unknown family `{family}`")));
        }
        let allowed = allowed_keys(&family);

        let mut spec = ChannelSpec {
            family,
            ..Default::default()
        };
        for e in &entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(semantic(
                    e.line,
                    1,
                    format!("key `{}` is not valid for family `{}`", e.key, spec.family),
                ));
            }
            match e.key.as_str() {
                "family" => {}
                "name" => spec.name = Some(atom(e)?.0.to_string()),
                "theta_domain" => {
                    let items = list(e, &e.value)?;
                    let nested = items.iter().all(|v| matches!(v, Value::List { .. }));
                    spec.theta_domain = Some(if nested && !items.is_empty() {
                        items.iter().map(|v| interval(e, v)).collect::<Result<_>>()?
                    } else {
                        vec![interval(e, &e.value)?]
                    });
                }
                "input_state" => spec.input_state = Some(complexes(e, &e.value)?),
                "axis" => {
                    let (text, col) = atom(e)?;
                    spec.axis = Some(text.parse().map_err(|_| semantic(e.line, col, format!("unknown axis `{text}`")))?);
                }
                "f" | "g" => {
                    let xs = reals(e, &e.value)?;
                    let arr: [f64; 3] = xs.as_slice().try_into().map_err(|_| {
                        semantic(e.line, e.value.col(), format!("`{}` takes three affine coefficients", e.key))
                    })?;
                    if e.key == "f" {
                        spec.f = Some(arr);
                    } else {
                        spec.g = Some(arr);
                    }
                }
                "dim" => {
                    let (text, col) = atom(e)?;
                    spec.dim = Some(
                        text.parse::<usize>()
                            .ok()
                            .filter(|&d| d > 0)
                            .ok_or_else(|| semantic(e.line, col, "`dim` must be a positive integer"))?,
                    );
                }
                "eigenvalues" => {
                    spec.eigenvalues = Some(list(e, &e.value)?.iter().map(|v| reals(e, v)).collect::<Result<_>>()?)
                }
                "basis" => {
                    spec.basis = Some(list(e, &e.value)?.iter().map(|v| complexes(e, v)).collect::<Result<_>>()?)
                }
                "generator" => {
                    spec.generator =
                        Some(list(e, &e.value)?.iter().map(|v| complexes(e, v)).collect::<Result<_>>()?)
                }
                _ => unreachable!("key filtered above"),
            }
        }
        Ok(spec)
    }

    /// Builds and validates the channel.
    pub fn build(&self) -> Result<ParametricChannel> {
        let input_state = match &self.input_state {
            None => None,
            Some(amps) => {
                let v = CVector::from_column_slice(amps);
                let defect = (v.norm_squared() - 1.0).abs();
                if defect > STATE_TOL {
                    return Err(QfiError::Invalid {
                        what: "input_state",
                        detail: format!("norm defect {defect}"),
                    });
                }
                Some(PureState::new(v)?)
            }
        };
        let mut ch = if self.family == "custom-spectral" {
            let missing = |k: &str| QfiError::Invalid {
                what: "custom-spectral family",
                detail: format!("missing key `{k}`"),
            };
            let d = self.dim.ok_or_else(|| missing("dim"))?;
            let gen_rows = self.generator.as_ref().ok_or_else(|| missing("generator"))?;
            let basis = self.basis.as_ref().ok_or_else(|| missing("basis"))?;
            let eig = self.eigenvalues.as_ref().ok_or_else(|| missing("eigenvalues"))?;
            if gen_rows.len() != d || gen_rows.iter().any(|r| r.len() != d) {
                return Err(QfiError::DimensionMismatch {
                    expected: d,
                    actual: gen_rows.len(),
                });
            }
            let flat: Vec<Complex64> = gen_rows.iter().flatten().copied().collect();
            let g = CMatrix::from_row_slice(d, d, &flat);
            let basis: Vec<CVector> = basis.iter().map(|r| CVector::from_column_slice(r)).collect();
            let fam = CustomSpectral::new(eig.clone(), basis, g)?;
            let domain = self.theta_domain.clone().unwrap_or(vec![(0.0, 1.0)]);
            ParametricChannel::from_spectral("custom-spectral", Arc::new(fam), domain)?
        } else {
            let opts = FamilyOptions {
                axis: self.axis,
                f: self.f.map(Affine),
                g: self.g.map(Affine),
                input_state,
                domain: self.theta_domain.clone(),
            };
            builtin(&self.family, &opts)?
        };
        ch.validate()?;
        if let Some(name) = &self.name {
            ch.name = name.clone();
        }
        Ok(ch)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let list = |xs: &[String]| format!("[{}]", xs.join(", "));
        if let Some(n) = &self.name {
            out += &format!("name = {n}\n");
        }
        out += &format!("family = {}\n", self.family);
        if let Some(dom) = &self.theta_domain {
            let parts: Vec<String> = dom
                .iter()
                .map(|&(a, b)| list(&[format_real(a), format_real(b)]))
                .collect();
            if parts.len() == 1 {
                out += &format!("theta_domain = {}\n", parts[0]);
            } else {
                out += &format!("theta_domain = {}\n", list(&parts));
            }
        }
        if let Some(s) = &self.input_state {
            let xs: Vec<String> = s.iter().map(|&z| format_complex(z)).collect();
            out += &format!("input_state = {}\n", list(&xs));
        }
        if let Some(a) = self.axis {
            out += &format!("axis = {}\n", a.name());
        }
        for (k, v) in [("f", &self.f), ("g", &self.g)] {
            if let Some(c) = v {
                let xs: Vec<String> = c.iter().map(|&x| format_real(x)).collect();
                out += &format!("{k} = {}\n", list(&xs));
            }
        }
        if let Some(d) = self.dim {
            out += &format!("dim = {d}\n");
        }
        if let Some(e) = &self.eigenvalues {
            let rows: Vec<String> = e
                .iter()
                .map(|r| list(&r.iter().map(|&x| format_real(x)).collect::<Vec<_>>()))
                .collect();
            out += &format!("eigenvalues = {}\n", list(&rows));
        }
        for (k, v) in [("basis", &self.basis), ("generator", &self.generator)] {
            if let Some(m) = v {
                let rows: Vec<String> = m
                    .iter()
                    .map(|r| list(&r.iter().map(|&z| format_complex(z)).collect::<Vec<_>>()))
                    .collect();
                out += &format!("{k} = {}\n", list(&rows));
            }
        }
        out
    }
}

/// Parses and validates a channel-spec document.
pub fn parse_channel_spec(text: &str) -> Result<ParametricChannel> {
    ChannelSpec::parse(text)?.build()
}
