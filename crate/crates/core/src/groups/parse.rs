//! Text forms of elements and the JSON model description.
//!
//! Elements: free words "a^2*b^-1", abelian tuples "(1,0)", semidirect pairs
//! "((1,0),3)", direct-product tuples "[b; (1)]" and free-product syllables
//! "{0:x}{1:y}". The identity of any free kind prints as "e".

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::{abelian_marked, free_marked, parse_err, word, Element, GroupError, GroupModel, IntMatrix, Kind, Marked};

pub fn format_element(g: &Element) -> String {
    match g {
        Element::Word(w) => word::format_word(w),
        Element::FreeProd(s) if s.is_empty() => "e".to_string(),
        Element::FreeProd(s) => s.iter().map(|(i, e)| format!("{{{i}:{}}}", format_element(e))).collect(),
        Element::Tuple(t) => format!("[{}]", t.iter().map(format_element).collect::<Vec<_>>().join("; ")),
        Element::Abelian(v) => format!("({})", join(v.iter())),
        Element::Semidirect(v, m) => format!("(({}),{m})", join(v.iter())),
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Splits at `sep` where the bracket depth is zero; returns (offset, piece) pairs.
pub(crate) fn split_top(s: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push((start, &s[start..]));
    out
}

fn strip<'a>(s: &'a str, open: char, close: char, offset: usize) -> Result<(usize, &'a str), GroupError> {
    let lead = s.len() - s.trim_start().len();
    let t = s.trim();
    if t.starts_with(open) && t.ends_with(close) && t.len() >= 2 {
        Ok((offset + lead + 1, &t[1..t.len() - 1]))
    } else {
        Err(parse_err(offset + lead, format!("expected {open}…{close}, found {t:?}")))
    }
}

fn parse_int<T: std::str::FromStr>(s: &str, offset: usize) -> Result<T, GroupError> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(offset, format!("expected an integer, found {:?}", s.trim())))
}

/// Parses an element of `model`; the result is in normal form.
pub fn parse_element(model: &GroupModel, s: &str) -> Result<Element, GroupError> {
    parse_at(model, s, 0)
}

fn parse_at(model: &GroupModel, s: &str, offset: usize) -> Result<Element, GroupError> {
    let t = s.trim();
    match model.kind() {
        Kind::Free { rank } => word::parse_word(t, *rank)
            .map(Element::Word)
            .map_err(|m| parse_err(offset, m)),
        Kind::Abelian { invariants } => {
            let inner = if t.starts_with('(') { strip(s, '(', ')', offset)? } else { (offset, t) };
            let parts = split_top(inner.1, ',');
            if parts.len() != invariants.len() {
                return Err(parse_err(
                    inner.0,
                    format!("expected {} coordinates, found {}", invariants.len(), parts.len()),
                ));
            }
            let v = parts
                .iter()
                .zip(invariants)
                .map(|((o, p), &d)| {
                    let x: i64 = parse_int(p, inner.0 + o)?;
                    Ok(if d == 0 { x } else { x.rem_euclid(d as i64) })
                })
                .collect::<Result<_, GroupError>>()?;
            Ok(Element::Abelian(v))
        }
        Kind::Semidirect { matrix, .. } => {
            let (o, inner) = strip(s, '(', ')', offset)?;
            let parts = split_top(inner, ',');
            let [(vo, v), (mo, m)] = parts.as_slice() else {
                return Err(parse_err(o, "expected ((v1,…,vd),m)"));
            };
            let (io, vin) = strip(v, '(', ')', o + vo)?;
            let coords = split_top(vin, ',')
                .iter()
                .map(|(po, p)| parse_int::<BigInt>(p, io + po))
                .collect::<Result<Vec<_>, _>>()?;
            if coords.len() != matrix.dim() {
                return Err(parse_err(io, format!("expected {} vector coordinates", matrix.dim())));
            }
            Ok(Element::Semidirect(coords, parse_int(m, o + mo)?))
        }
        Kind::DirectProduct(factors) => {
            let (o, inner) = strip(s, '[', ']', offset)?;
            let parts = split_top(inner, ';');
            if parts.len() != factors.len() {
                return Err(parse_err(o, format!("expected {} components", factors.len())));
            }
            let t = parts
                .iter()
                .zip(factors)
                .map(|((po, p), m)| parse_at(m, p, o + po))
                .collect::<Result<_, _>>()?;
            Ok(Element::Tuple(t))
        }
        Kind::FreeProduct(factors) => {
            if t == "e" || t.is_empty() {
                return Ok(Element::FreeProd(vec![]));
            }
            let bytes: Vec<char> = s.chars().collect();
            let mut acc = model.identity();
            let mut i = 0;
            while i < bytes.len() {
                if bytes[i].is_whitespace() || bytes[i] == '*' {
                    i += 1;
                    continue;
                }
                if bytes[i] != '{' {
                    return Err(parse_err(offset + i, "expected '{'"));
                }
                let start = i;
                let mut depth = 0;
                let mut end = None;
                for (j, &c) in bytes.iter().enumerate().skip(i) {
                    match c {
                        '(' | '[' | '{' => depth += 1,
                        ')' | ']' | '}' => {
                            depth -= 1;
                            if depth == 0 {
                                end = Some(j);
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                let end = end.ok_or_else(|| parse_err(offset + start, "unbalanced '{'"))?;
                let body: String = bytes[start + 1..end].iter().collect();
                let (idx, elem) = body
                    .split_once(':')
                    .ok_or_else(|| parse_err(offset + start, "expected {factor:element}"))?;
                let k: usize = parse_int(idx, offset + start + 1)?;
                let m = factors
                    .get(k)
                    .ok_or_else(|| parse_err(offset + start + 1, format!("no factor {k}")))?;
                let e = parse_at(m, elem, offset + start + 2 + idx.len())?;
                let syl = if m.is_identity(&e)? { vec![] } else { vec![(k, e)] };
                acc = model.multiply(&acc, &Element::FreeProd(syl))?;
                i = end + 1;
            }
            Ok(acc)
        }
    }
}

/// Marked subgroup in JSON: a name, a list of words, or a list of vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarkedDoc {
    Name(String),
    Words(Vec<String>),
    Vectors(Vec<Vec<i64>>),
}

/// JSON model description, e.g. `{"kind":"semidirect","matrix":[[2,1],[1,1]],"marked":"acting_Z"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDoc {
    Free {
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marked: Option<MarkedDoc>,
    },
    FreeProduct {
        factors: Vec<ModelDoc>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marked_factor: Option<usize>,
    },
    DirectProduct {
        factors: Vec<ModelDoc>,
    },
    #[serde(alias = "abelian")]
    FinitelyGeneratedAbelian {
        invariants: Vec<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marked: Option<MarkedDoc>,
    },
    FiniteCyclic {
        n: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marked: Option<MarkedDoc>,
    },
    #[serde(alias = "semidirect_Zd_by_Z")]
    Semidirect {
        matrix: Vec<Vec<i64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        marked: Option<MarkedDoc>,
    },
}

fn bad(msg: impl Into<String>) -> GroupError {
    GroupError::InvalidModel(msg.into())
}

fn abelian_from_doc(invariants: Vec<u64>, marked: &Option<MarkedDoc>) -> Result<GroupModel, GroupError> {
    let m = match marked {
        None => Marked::Trivial,
        Some(MarkedDoc::Name(n)) if n == "trivial" => Marked::Trivial,
        Some(MarkedDoc::Name(n)) if n == "whole" => Marked::Whole,
        Some(MarkedDoc::Words(w)) if w.is_empty() => Marked::Trivial,
        Some(MarkedDoc::Vectors(v)) => abelian_marked(&invariants, v)?,
        Some(other) => return Err(bad(format!("unsupported abelian marked subgroup {other:?}"))),
    };
    GroupModel::new(Kind::Abelian { invariants }, m)
}

impl ModelDoc {
    pub fn build(&self) -> Result<GroupModel, GroupError> {
        match self {
            ModelDoc::Free { rank, marked } => {
                let words: Vec<String> = match marked {
                    None => vec![],
                    Some(MarkedDoc::Name(n)) if n == "trivial" => vec![],
                    Some(MarkedDoc::Name(n)) if n == "whole" => {
                        return GroupModel::new(Kind::Free { rank: *rank }, Marked::Whole);
                    }
                    Some(MarkedDoc::Name(n)) => vec![n.clone()],
                    Some(MarkedDoc::Words(w)) => w.clone(),
                    Some(MarkedDoc::Vectors(_)) => return Err(bad("free marked subgroup must be given by words")),
                };
                let parsed = words
                    .iter()
                    .map(|w| word::parse_word(w, *rank).map_err(|m| parse_err(0, m)))
                    .collect::<Result<Vec<_>, _>>()?;
                GroupModel::new(Kind::Free { rank: *rank }, free_marked(&parsed)?)
            }
            ModelDoc::FreeProduct { factors, marked_factor } => {
                let f = factors.iter().map(ModelDoc::build).collect::<Result<_, _>>()?;
                GroupModel::free_product(f, *marked_factor)
            }
            ModelDoc::DirectProduct { factors } => {
                GroupModel::direct_product(factors.iter().map(ModelDoc::build).collect::<Result<_, _>>()?)
            }
            ModelDoc::FinitelyGeneratedAbelian { invariants, marked } => abelian_from_doc(invariants.clone(), marked),
            ModelDoc::FiniteCyclic { n, marked } => {
                if *n == 0 {
                    return Err(bad("finite cyclic order must be positive"));
                }
                abelian_from_doc(vec![*n], marked)
            }
            ModelDoc::Semidirect { matrix, marked } => {
                let a = IntMatrix::from_i64(matrix).ok_or_else(|| bad("matrix must be square and nonempty"))?;
                let m = match marked {
                    None => Marked::Trivial,
                    Some(MarkedDoc::Name(n)) => match n.as_str() {
                        "acting_Z" | "acting_z" => Marked::ActingZ,
                        "normal" | "normal_Zd" => Marked::Normal,
                        "trivial" => Marked::Trivial,
                        _ => return Err(bad(format!("unknown semidirect marked subgroup {n:?}"))),
                    },
                    Some(other) => return Err(bad(format!("unsupported semidirect marked subgroup {other:?}"))),
                };
                GroupModel::semidirect(a, m)
            }
        }
    }
}

impl std::str::FromStr for GroupModel {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let doc: ModelDoc = serde_json::from_str(s).map_err(|e| GroupError::Parse {
            pos: e.column(),
            msg: e.to_string(),
        })?;
        doc.build()
    }
}
