//! Reduced words in a free group. Letter `±(i+1)` is generator `i` or its inverse.

pub type Word = Vec<i32>;

/// Free reduction of an arbitrary letter sequence.
pub fn reduce(letters: impl IntoIterator<Item = i32>) -> Word {
    let mut out: Word = Vec::new();
    for l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn multiply(a: &[i32], b: &[i32]) -> Word {
    reduce(a.iter().chain(b).copied())
}

pub fn invert(a: &[i32]) -> Word {
    a.iter().rev().map(|&l| -l).collect()
}

pub fn power(a: &[i32], k: i64) -> Word {
    let base = if k < 0 { invert(a) } else { a.to_vec() };
    let mut out = Word::new();
    for _ in 0..k.unsigned_abs() {
        out = multiply(&out, &base);
    }
    out
}

/// Writes a reduced word as u·c·u⁻¹ with c cyclically reduced.
pub fn conjugate_form(w: &[i32]) -> (Word, Word) {
    let mut i = 0;
    while i < w.len() / 2 && w[i] == -w[w.len() - 1 - i] {
        i += 1;
    }
    (w[..i].to_vec(), w[i..w.len() - i].to_vec())
}

/// Primitive root r and exponent e with c = r^e, for c cyclically reduced and nonempty.
pub fn primitive_root(c: &[i32]) -> (Word, i64) {
    let n = c.len();
    for p in 1..=n {
        if n % p == 0 && (p..n).all(|i| c[i] == c[i - p]) {
            return (c[..p].to_vec(), (n / p) as i64);
        }
    }
    (c.to_vec(), 1)
}

/// k with w = r^k, for a primitive cyclically reduced r.
pub fn exponent_in(w: &[i32], r: &[i32]) -> Option<i64> {
    if w.is_empty() {
        return Some(0);
    }
    if r.is_empty() || w.len() % r.len() != 0 {
        return None;
    }
    let k = (w.len() / r.len()) as i64;
    if w.chunks(r.len()).all(|ch| ch == r) {
        return Some(k);
    }
    let ri = invert(r);
    w.chunks(r.len()).all(|ch| ch == ri.as_slice()).then_some(-k)
}

/// Generator name for index i: a, b, c, … then x27, x28, ….
pub fn letter_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("x{}", i + 1)
    }
}

pub fn format_word(w: &[i32]) -> String {
    if w.is_empty() {
        return "e".to_string();
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < w.len() {
        let g = w[i].unsigned_abs() as usize - 1;
        let mut exp: i64 = 0;
        while i < w.len() && w[i].unsigned_abs() as usize - 1 == g {
            exp += w[i].signum() as i64;
            i += 1;
        }
        let name = letter_name(g);
        parts.push(if exp == 1 { name } else { format!("{name}^{exp}") });
    }
    parts.join("*")
}

/// Parses "e", "a^2*b^-1", "ab", "a b^-1" for a free group of the given rank.
pub fn parse_word(s: &str, rank: usize) -> Result<Word, String> {
    let t = s.trim();
    if t == "e" || t == "1" || t.is_empty() {
        return Ok(Word::new());
    }
    let chars: Vec<char> = t.chars().collect();
    let mut letters = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '*' || c.is_whitespace() {
            i += 1;
            continue;
        }
        let gen = if c == 'x' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let n: usize = chars[start..i].iter().collect::<String>().parse().map_err(|_| format!("bad generator at {start}"))?;
            n.checked_sub(1).ok_or_else(|| format!("bad generator x0 at {start}"))?
        } else if c.is_ascii_lowercase() {
            i += 1;
            (c as u8 - b'a') as usize
        } else if c == 'e' {
            i += 1;
            continue;
        } else {
            return Err(format!("unexpected character {c:?} at position {i}"));
        };
        if gen >= rank {
            return Err(format!("generator {} not in free group of rank {rank}", letter_name(gen)));
        }
        let mut exp: i64 = 1;
        if i < chars.len() && chars[i] == '^' {
            let start = i + 1;
            i += 1;
            if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            exp = chars[start..i]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| format!("bad exponent at position {start}"))?;
        }
        let l = (gen + 1) as i32 * exp.signum() as i32;
        letters.extend(std::iter::repeat(l).take(exp.unsigned_abs() as usize));
    }
    Ok(reduce(letters))
}
