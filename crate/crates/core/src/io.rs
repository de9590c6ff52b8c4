//! Text and JSON formats for ring elements, matrices and polygons.

use crate::error::{HaloError, Result};
use crate::group::FiniteGroup;
use crate::halo::UpAssembly;
use crate::mahler::{CharacterSpec, MonoidElement, SingleCharacter, WildPart};
use crate::matrix::Matrix;
use crate::polygon::Polygon;
use crate::ring::{FpCtx, FpSeries, RingDescriptor, TruncatedRingElement};
use crate::word::Word;
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use std::sync::Arc;

/// Prints `sum_t (group sum) * T^t` in descending degree, e.g. `(1*e + 2*g)*T^2 + 3*e`.
pub fn format_element<W: Word>(x: &TruncatedRingElement<W>) -> String {
    let d = x.descriptor();
    let mut terms = Vec::new();
    for t in (0..d.t_prec()).rev() {
        let layer = x.layer(t);
        let parts: Vec<String> = match d.group() {
            None => {
                if layer[0].is_zero() {
                    vec![]
                } else {
                    vec![layer[0].to_big().to_string()]
                }
            }
            Some(g) => layer
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| format!("{}*{}", c.to_big(), g.name(i)))
                .collect(),
        };
        if parts.is_empty() {
            continue;
        }
        let body = if parts.len() > 1 {
            format!("({})", parts.join(" + "))
        } else {
            parts[0].clone()
        };
        terms.push(match t {
            0 => body,
            1 => format!("{body}*T"),
            _ => format!("{body}*T^{t}"),
        });
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub fn format_fp(x: &FpSeries) -> String {
    let mut terms = Vec::new();
    for t in (0..x.t_prec()).rev() {
        let c = x.coeffs()[t];
        if c == 0 {
            continue;
        }
        terms.push(match t {
            0 => c.to_string(),
            1 => format!("{c}*T"),
            _ => format!("{c}*T^{t}"),
        });
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigUint),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => {
                i += 1;
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            d if d.is_ascii_digit() => {
                let st = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let lit: String = chars[st..i].iter().collect();
                out.push(Tok::Int(lit.parse().map_err(|_| HaloError::Parse(lit.clone()))?));
            }
            a if a.is_ascii_alphabetic() => {
                let st = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[st..i].iter().collect()));
            }
            other => return Err(HaloError::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser<'a, W: Word> {
    toks: Vec<Tok>,
    pos: usize,
    desc: &'a Arc<RingDescriptor<W>>,
}

impl<W: Word> Parser<'_, W> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }
    fn expr(&mut self) -> Result<TruncatedRingElement<W>> {
        let mut neg = false;
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            neg = true;
        }
        let mut acc = self.term()?;
        if neg {
            acc = acc.neg();
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }
    fn term(&mut self) -> Result<TruncatedRingElement<W>> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }
    fn factor(&mut self) -> Result<TruncatedRingElement<W>> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Int(k)) => {
                    let k = k.to_u64().ok_or_else(|| HaloError::Parse("exponent too large".into()))?;
                    return Ok(base.pow(k));
                }
                other => return Err(HaloError::Parse(format!("expected exponent, found {other:?}"))),
            }
        }
        Ok(base)
    }
    fn atom(&mut self) -> Result<TruncatedRingElement<W>> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(TruncatedRingElement::from_big_int(self.desc, &v)),
            Some(Tok::Ident(s)) if s == "T" => Ok(TruncatedRingElement::t_power(self.desc, 1)),
            Some(Tok::Ident(s)) => {
                let g = self
                    .desc
                    .group()
                    .and_then(|g| g.symbol(&s))
                    .or_else(|| (s == "e").then(|| self.desc.group().map_or(0, |g| g.identity())))
                    .ok_or_else(|| HaloError::Parse(format!("unknown symbol {s}")))?;
                Ok(TruncatedRingElement::group_element(self.desc, g))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    other => Err(HaloError::Parse(format!("expected ')', found {other:?}"))),
                }
            }
            other => Err(HaloError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

pub fn parse_element<W: Word>(s: &str, desc: &Arc<RingDescriptor<W>>) -> Result<TruncatedRingElement<W>> {
    let toks = tokenize(s)?;
    if toks.is_empty() {
        return Err(HaloError::Parse("empty element".into()));
    }
    let mut p = Parser { toks, pos: 0, desc };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(HaloError::Parse(format!("trailing input in {s:?}")));
    }
    Ok(e)
}

pub fn parse_fp(s: &str, ctx: FpCtx) -> Result<FpSeries> {
    let desc = RingDescriptor::<u64>::new(ctx.p, 1, ctx.t_prec, None)?;
    Ok(parse_element(s, &desc)?.reduce_to_fp())
}

pub fn group_to_json(g: &FiniteGroup) -> Value {
    json!({"elements": g.names(), "table": g.table()})
}

pub fn group_from_json(v: &Value) -> Result<Option<FiniteGroup>> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) => {
            let s = s.trim();
            if let Some(n) = s.strip_prefix("cyclic:").or_else(|| s.strip_prefix('C')) {
                let n: usize = n.parse().map_err(|_| HaloError::Parse(format!("group {s}")))?;
                Ok(Some(FiniteGroup::cyclic(n)))
            } else if let Some(p) = s.strip_prefix("heisenberg:") {
                let p: usize = p.parse().map_err(|_| HaloError::Parse(format!("group {s}")))?;
                Ok(Some(FiniteGroup::heisenberg(p)))
            } else {
                Err(HaloError::Parse(format!("unknown group {s}")))
            }
        }
        Value::Object(o) => {
            let names: Vec<String> = serde_json::from_value(o.get("elements").cloned().unwrap_or(Value::Null))
                .map_err(|e| HaloError::Parse(format!("group elements: {e}")))?;
            let table: Vec<Vec<usize>> = serde_json::from_value(o.get("table").cloned().unwrap_or(Value::Null))
                .map_err(|e| HaloError::Parse(format!("group table: {e}")))?;
            Ok(Some(FiniteGroup::from_table(names, table)?))
        }
        _ => Err(HaloError::Parse("group must be null, a name or an object".into())),
    }
}

pub fn descriptor_to_json<W: Word>(d: &RingDescriptor<W>) -> Value {
    json!({
        "p": d.p(),
        "p_prec": d.p_prec(),
        "t_prec": d.t_prec(),
        "group": d.group().map_or(Value::Null, |g| group_to_json(g)),
    })
}

fn get_u64(v: &Value, key: &str) -> Result<u64> {
    v.get(key)
        .and_then(|x| x.as_u64())
        .ok_or_else(|| HaloError::Parse(format!("missing integer field {key}")))
}

pub fn descriptor_from_json<W: Word>(v: &Value) -> Result<Arc<RingDescriptor<W>>> {
    let p = get_u64(v, "p")?;
    let m = v.get("p_prec").and_then(|x| x.as_u64()).unwrap_or(1) as u32;
    let n = get_u64(v, "t_prec")? as usize;
    let g = group_from_json(v.get("group").unwrap_or(&Value::Null))?;
    RingDescriptor::new(p, m, n, g)
}

pub fn matrix_to_json<W: Word>(m: &Matrix<TruncatedRingElement<W>>) -> Value {
    let rows: Vec<Vec<String>> = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| format_element(m.get(i, j))).collect())
        .collect();
    json!({
        "ring": descriptor_to_json(m.ctx()),
        "rows": m.rows(),
        "cols": m.cols(),
        "entries": rows,
    })
}

pub fn matrix_from_json<W: Word>(v: &Value) -> Result<Matrix<TruncatedRingElement<W>>> {
    let desc = descriptor_from_json::<W>(v.get("ring").ok_or_else(|| HaloError::Parse("missing ring".into()))?)?;
    let entries: Vec<Vec<String>> = serde_json::from_value(v.get("entries").cloned().unwrap_or(Value::Null))
        .map_err(|e| HaloError::Parse(format!("entries: {e}")))?;
    let rows = entries.len();
    let cols = entries.first().map_or(0, |r| r.len());
    if let Some(r) = v.get("rows").and_then(|x| x.as_u64()) {
        if r as usize != rows {
            return Err(HaloError::Parse("row count mismatch".into()));
        }
    }
    if let Some(c) = v.get("cols").and_then(|x| x.as_u64()) {
        if c as usize != cols {
            return Err(HaloError::Parse("column count mismatch".into()));
        }
    }
    if entries.iter().any(|r| r.len() != cols) || rows == 0 || cols == 0 {
        return Err(HaloError::Parse("ragged or empty entry grid".into()));
    }
    let data = entries
        .iter()
        .flatten()
        .map(|s| parse_element(s, &desc))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_vec(&desc, rows, cols, data)
}

pub fn fp_matrix_to_json(m: &Matrix<FpSeries>) -> Value {
    let rows: Vec<Vec<String>> = (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| format_fp(m.get(i, j))).collect())
        .collect();
    json!({
        "ring": {"p": m.ctx().p, "p_prec": 1, "t_prec": m.ctx().t_prec, "group": Value::Null},
        "rows": m.rows(),
        "cols": m.cols(),
        "entries": rows,
    })
}

/// Reads a matrix whose ring has `p_prec = 1` and no group as a matrix over `F_p[[T]]`.
pub fn fp_matrix_from_json(v: &Value) -> Result<Matrix<FpSeries>> {
    let m = matrix_from_json::<u64>(v)?;
    let d = m.ctx();
    if d.p_prec() != 1 || d.group().is_some() {
        return Err(HaloError::Invalid("expected a matrix over F_p[[T]] (p_prec 1, no group)".into()));
    }
    Ok(m.reduce())
}

pub fn polygon_to_json(poly: &Polygon) -> Value {
    let v: Vec<[i64; 3]> = poly
        .vertices
        .iter()
        .map(|(x, y)| [*x as i64, *y.numer(), *y.denom()])
        .collect();
    let slopes: Vec<[i64; 3]> = poly
        .slopes()
        .iter()
        .map(|(s, m)| [*s.numer(), *s.denom(), *m as i64])
        .collect();
    json!({"vertices": v, "slopes": slopes, "partial": poly.partial})
}

/// Deterministic pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn big_from_json(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| HaloError::Parse(format!("integer expected, got {n}"))),
        Value::String(t) => t.trim().parse().map_err(|_| HaloError::Parse(format!("integer expected, got {t}"))),
        _ => Err(HaloError::Parse(format!("integer expected, got {v}"))),
    }
}

pub fn single_character_to_json(c: &SingleCharacter) -> Value {
    let wild = match &c.wild {
        WildPart::Universal => json!("universal"),
        WildPart::Specialized(t) => json!(t.to_string()),
    };
    json!({"torsion": c.torsion_exponent, "wild": wild})
}

/// `{"torsion": k, "wild": "universal" | t}` or `{"torsion_values": [...], "wild": ...}`, where
/// the values are the torsion part at `1..p-1`, read modulo the least `p^m` exceeding them all.
pub fn single_character_from_json(v: &Value, p: u64) -> Result<SingleCharacter> {
    let wild = match v.get("wild") {
        None => WildPart::Specialized(BigInt::zero()),
        Some(Value::String(w)) if w.trim() == "universal" => WildPart::Universal,
        Some(w) => WildPart::Specialized(big_from_json(w)?),
    };
    let torsion_exponent = if let Some(vals) = v.get("torsion_values") {
        let vals: Vec<BigInt> = vals
            .as_array()
            .ok_or_else(|| HaloError::Parse("torsion_values must be a list".into()))?
            .iter()
            .map(big_from_json)
            .collect::<Result<_>>()?;
        let top = vals.iter().map(|x| x.abs()).max().unwrap_or_default();
        let mut m = 1u32;
        while BigInt::from(p).pow(m) <= top {
            m += 1;
        }
        let q = BigInt::from(p).pow(m);
        let vals: Vec<BigUint> = vals
            .iter()
            .map(|x| ((x % &q + &q) % &q).to_biguint().expect("reduced"))
            .collect();
        CharacterSpec::torsion_exponent_from_values(&vals, p, m)?
    } else {
        v.get("torsion").map_or(Ok(0), |t| {
            t.as_u64().ok_or_else(|| HaloError::Parse("torsion must be a nonnegative integer".into()))
        })?
    };
    Ok(SingleCharacter { torsion_exponent, wild })
}

pub fn character_to_json(c: &CharacterSpec) -> Value {
    json!({"n": single_character_to_json(&c.n), "nu": single_character_to_json(&c.nu)})
}

/// Accepts `"universal"`, `"trivial"`, or `{"n": ..., "nu": ...}` with `nu` defaulting to trivial.
pub fn character_from_json(v: &Value, p: u64) -> Result<CharacterSpec> {
    match v {
        Value::String(s) if s.trim() == "universal" => Ok(CharacterSpec::universal()),
        Value::String(s) if s.trim() == "trivial" => Ok(CharacterSpec::trivial()),
        Value::Object(o) => Ok(CharacterSpec {
            n: match o.get("n") {
                Some(x) => single_character_from_json(x, p)?,
                None => single_character_from_json(v, p)?,
            },
            nu: match o.get("nu") {
                Some(x) => single_character_from_json(x, p)?,
                None => SingleCharacter::trivial(),
            },
        }),
        _ => Err(HaloError::Parse(format!("unrecognized character {v}"))),
    }
}

pub fn monoid_to_json(d: &MonoidElement) -> Value {
    json!([d.a.to_string(), d.b.to_string(), d.c.to_string(), d.d.to_string()])
}

pub fn monoid_from_json(v: &Value, p: u64) -> Result<MonoidElement> {
    let e = v
        .as_array()
        .filter(|a| a.len() == 4)
        .ok_or_else(|| HaloError::Parse(format!("monoid element must be [a, b, c, d], got {v}")))?;
    let [a, b, c, d] = [&e[0], &e[1], &e[2], &e[3]].map(big_from_json);
    MonoidElement::from_big([a?, b?, c?, d?], p)
}

pub fn assembly_to_json(asm: &UpAssembly) -> Value {
    let blocks: Vec<Vec<Vec<Value>>> = asm
        .blocks
        .iter()
        .map(|r| r.iter().map(|c| c.iter().map(monoid_to_json).collect()).collect())
        .collect();
    json!({"p": asm.p, "s": asm.s, "character": character_to_json(&asm.character), "blocks": blocks})
}

/// Cells whose entries fail monoid membership are structure violations of the assembly.
pub fn assembly_from_json(v: &Value) -> Result<UpAssembly> {
    let p = get_u64(v, "p")?;
    let character = character_from_json(v.get("character").unwrap_or(&json!("universal")), p)?;
    let rows = v
        .get("blocks")
        .and_then(|b| b.as_array())
        .ok_or_else(|| HaloError::Parse("missing blocks".into()))?;
    let mut blocks = Vec::with_capacity(rows.len());
    for row in rows {
        let row = row.as_array().ok_or_else(|| HaloError::Parse("block row must be a list".into()))?;
        let mut cells = Vec::with_capacity(row.len());
        for cell in row {
            let cell = cell.as_array().ok_or_else(|| HaloError::Parse("cell must be a list".into()))?;
            let deltas = cell
                .iter()
                .map(|d| match monoid_from_json(d, p) {
                    Err(HaloError::Invalid(m)) => Err(HaloError::StructureViolation(m)),
                    r => r,
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(deltas);
        }
        blocks.push(cells);
    }
    if let Some(s) = v.get("s").and_then(|x| x.as_u64()) {
        if s as usize != blocks.len() {
            return Err(HaloError::Parse(format!("s = {s} but {} block rows", blocks.len())));
        }
    }
    UpAssembly::new(p, character, blocks)
}
