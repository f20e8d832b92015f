//! Finitely supported elements of the group algebra ℂΓ.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::groups::parse::split_top;
use crate::groups::{format_element, parse_element, parse_err, Element, GroupError, GroupModel};
use crate::Scalar;

/// Σ x_g u_g with finitely many nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAlgebraElement<S: Scalar = Complex64> {
    terms: BTreeMap<Element, S>,
}

impl<S: Scalar> Default for GroupAlgebraElement<S> {
    fn default() -> Self {
        GroupAlgebraElement { terms: BTreeMap::new() }
    }
}

impl<S: Scalar> GroupAlgebraElement<S> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// u_g.
    pub fn unitary(g: Element) -> Self {
        Self::from_terms([(g, S::one())])
    }

    /// Sums coefficients of repeated elements and prunes zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (Element, S)>) -> Self {
        let mut x = Self::zero();
        for (g, c) in terms {
            x.add_term(g, c);
        }
        x
    }

    pub fn add_term(&mut self, g: Element, c: S) {
        let entry = self.terms.entry(g).or_insert_with(S::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.prune();
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn terms(&self) -> &BTreeMap<Element, S> {
        &self.terms
    }

    pub fn coefficient(&self, g: &Element) -> S {
        self.terms.get(g).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// τ(x): the coefficient at the identity.
    pub fn trace(&self, model: &GroupModel) -> S {
        self.coefficient(&model.identity())
    }

    /// ‖x‖₂².
    pub fn norm2_sq(&self) -> S {
        self.terms.values().fold(S::zero(), |acc, c| acc + c.abs_sq())
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sq().to_c64().re.max(0.0).sqrt()
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::from_terms(self.terms.iter().map(|(g, c)| (g.clone(), c.clone() * s.clone())))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (g, c) in &other.terms {
            out.add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    pub fn mul(&self, model: &GroupModel, other: &Self) -> Result<Self, GroupError> {
        let mut out = Self::zero();
        for (g, a) in &self.terms {
            for (h, b) in &other.terms {
                out.add_term(model.multiply(g, h)?, a.clone() * b.clone());
            }
        }
        Ok(out)
    }

    /// x*: coefficient at g is the conjugate of the coefficient at g⁻¹.
    pub fn adjoint(&self, model: &GroupModel) -> Result<Self, GroupError> {
        let mut out = Self::zero();
        for (g, c) in &self.terms {
            out.add_term(model.invert(g)?, c.conj());
        }
        Ok(out)
    }

    /// ⟨x, y⟩ = Σ x_g conj(y_g).
    pub fn inner(&self, other: &Self) -> S {
        self.terms
            .iter()
            .filter_map(|(g, a)| other.terms.get(g).map(|b| a.clone() * b.conj()))
            .fold(S::zero(), |acc, t| acc + t)
    }

    /// Conditional expectation onto L(Γ₀): keeps the coefficients on Γ₀.
    pub fn conditional_expectation(&self, model: &GroupModel) -> Result<Self, GroupError> {
        let mut out = Self::zero();
        for (g, c) in &self.terms {
            if model.in_marked(g)? {
                out.terms.insert(g.clone(), c.clone());
            }
        }
        Ok(out)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> GroupAlgebraElement<T> {
        GroupAlgebraElement::from_terms(self.terms.iter().map(|(g, c)| (g.clone(), f(c))))
    }

    pub fn to_c64(&self) -> GroupAlgebraElement<Complex64> {
        self.map_scalars(Scalar::to_c64)
    }

    pub fn check(&self, model: &GroupModel) -> Result<(), GroupError> {
        self.terms.keys().try_for_each(|g| model.check(g))
    }
}

impl GroupAlgebraElement<Complex64> {
    pub fn format(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(g, c)| {
                let coef = if c.im == 0.0 {
                    format!("{}", crate::format::round_sig(c.re))
                } else {
                    format!("({},{})", crate::format::round_sig(c.re), crate::format::round_sig(c.im))
                };
                format!("{coef}*{}", format_element(g))
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Parses sums like "1.0*b + (0,1)*a*b^-1 - 2*e".
    ///
    /// Terms are separated by `+` or `-` at bracket depth zero that follow
    /// whitespace. A term may start with a real or "(re,im)" coefficient
    /// followed by `*`; a bare number is a multiple of the identity, except
    /// that a bare tuple naming an element of the model is that element.
    pub fn parse(model: &GroupModel, s: &str) -> Result<Self, GroupError> {
        let mut out = Self::zero();
        let t = s.trim();
        if t.is_empty() || t == "0" {
            return Ok(out);
        }
        for (offset, sign, term) in split_terms(s) {
            let (coef, elem_str, elem_off) = split_coefficient(term, offset)?;
            let (g, coef) = match elem_str {
                Some(e) => (parse_element(model, e).map_err(|err| shift(err, elem_off))?, coef),
                // "(1,0)" is an element in abelian models and a coefficient elsewhere
                None => match parse_element(model, term.trim()) {
                    Ok(g) if term.trim_start().starts_with('(') => (g, Complex64::new(1.0, 0.0)),
                    _ => (model.identity(), coef),
                },
            };
            out.add_term(g, coef * sign);
        }
        Ok(out)
    }
}

fn shift(err: GroupError, by: usize) -> GroupError {
    match err {
        GroupError::Parse { pos, msg } => GroupError::Parse { pos: pos + by, msg },
        e => e,
    }
}

fn split_terms(s: &str) -> Vec<(usize, f64, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let mut sign = 1.0;
    let mut prev: Option<char> = None;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            '+' | '-' if depth == 0 && prev.map_or(true, char::is_whitespace) => {
                let piece = &s[start..i];
                if !piece.trim().is_empty() {
                    out.push((start, sign, piece));
                    sign = 1.0;
                }
                if c == '-' {
                    sign = -sign;
                }
                start = i + 1;
            }
            _ => {}
        }
        prev = Some(c);
    }
    out.push((start, sign, &s[start..]));
    out.retain(|(_, _, p)| !p.trim().is_empty());
    out
}

fn parse_number(s: &str) -> Option<Complex64> {
    let t = s.trim();
    if let Ok(x) = t.parse::<f64>() {
        return Some(Complex64::new(x, 0.0));
    }
    let inner = t.strip_prefix('(')?.strip_suffix(')')?;
    let (re, im) = inner.split_once(',')?;
    Some(Complex64::new(re.trim().parse().ok()?, im.trim().parse().ok()?))
}

fn split_coefficient(term: &str, offset: usize) -> Result<(Complex64, Option<&str>, usize), GroupError> {
    let lead = term.len() - term.trim_start().len();
    let t = term.trim();
    if let Some(c) = parse_number(t) {
        return Ok((c, None, offset));
    }
    let pieces = split_top(t, '*');
    if pieces.len() > 1 {
        if let Some(c) = parse_number(pieces[0].1) {
            let rest_off = pieces[1].0;
            return Ok((c, Some(&t[rest_off..]), offset + lead + rest_off));
        }
    }
    if t.is_empty() {
        return Err(parse_err(offset, "empty term"));
    }
    Ok((Complex64::new(1.0, 0.0), Some(t), offset + lead))
}
