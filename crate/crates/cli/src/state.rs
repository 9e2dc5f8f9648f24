//! State mini-language:
//!
//! ```text
//! vac
//! num:n1,n2
//! coh:re,im;re,im
//! file:<path>
//! mix:[(w,spec),(w,spec),...]
//! ```

use std::sync::Arc;

use angcov::fock::{basis_build, coherent_state, number_state, vacuum, FockBasis, MixedState, StateVector};
use angcov::C64;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Vacuum,
    Number(Vec<usize>),
    Coherent(Vec<C64>),
    File(String),
    Mix(Vec<(f64, StateSpec)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    /// 1-based character column within the specification.
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "state spec column {}: {}", self.column, self.message)
    }
}

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError {
        column,
        message: message.into(),
    })
}

fn chars_before(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Parse `text`, reporting columns relative to `offset` characters.
pub fn parse(text: &str) -> Result<StateSpec, SpecError> {
    parse_at(text, 0)
}

fn parse_at(text: &str, offset: usize) -> Result<StateSpec, SpecError> {
    let trimmed_start = text.len() - text.trim_start().len();
    let offset = offset + chars_before(text, trimmed_start);
    let text = text.trim();
    if text == "vac" {
        return Ok(StateSpec::Vacuum);
    }
    let Some((tag, body)) = text.split_once(':') else {
        return err(offset + 1, format!("expected `vac` or `<kind>:...`, found `{text}`"));
    };
    let body_col = offset + chars_before(text, tag.len() + 1);
    match tag {
        "num" => parse_list(body, body_col, ',')?
            .into_iter()
            .map(|(col, s)| s.parse::<usize>().or_else(|_| err(col + 1, format!("`{s}` is not an occupation number"))))
            .collect::<Result<_, _>>()
            .map(StateSpec::Number),
        "coh" => {
            let mut alphas = Vec::new();
            for (col, pair) in parse_list(body, body_col, ';')? {
                let parts = parse_list(pair, col, ',')?;
                let nums = parts
                    .iter()
                    .map(|(c, s)| s.parse::<f64>().or_else(|_| err(c + 1, format!("`{s}` is not a number"))))
                    .collect::<Result<Vec<_>, _>>()?;
                match nums[..] {
                    [re] => alphas.push(C64::new(re, 0.0)),
                    [re, im] => alphas.push(C64::new(re, im)),
                    _ => return err(col + 1, "coherent amplitude must be `re` or `re,im`"),
                }
            }
            Ok(StateSpec::Coherent(alphas))
        }
        "file" => {
            if body.is_empty() {
                return err(body_col + 1, "missing path");
            }
            Ok(StateSpec::File(body.to_string()))
        }
        "mix" => parse_mix(body, body_col),
        _ => err(offset + 1, format!("unknown state kind `{tag}`")),
    }
}

fn parse_list(body: &str, col: usize, sep: char) -> Result<Vec<(usize, &str)>, SpecError> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in body.split(sep) {
        let c = col + chars_before(body, start);
        let t = piece.trim();
        if t.is_empty() {
            return err(c + 1, "empty field");
        }
        let lead = chars_before(piece, piece.len() - piece.trim_start().len());
        out.push((c + lead, t));
        start += piece.len() + sep.len_utf8();
    }
    Ok(out)
}

fn parse_mix(body: &str, col: usize) -> Result<StateSpec, SpecError> {
    let b = body.trim_end();
    if !b.starts_with('[') {
        return err(col + 1, "mixture must start with `[`");
    }
    if !b.ends_with(']') {
        return err(col + chars_before(body, b.len()) + 1, "mixture must end with `]`");
    }
    let inner = &b[1..b.len() - 1];
    let inner_col = col + 1;
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut item_start = None;
    for (i, ch) in inner.char_indices() {
        let here = inner_col + chars_before(inner, i);
        match ch {
            '(' | '[' => {
                if depth == 0 && ch == '(' {
                    item_start = Some(i);
                }
                depth += 1;
            }
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return err(here + 1, format!("unbalanced `{ch}`"));
                }
                if depth == 0 && ch == ')' {
                    let s = item_start.take().expect("opened");
                    items.push(parse_item(&inner[s + 1..i], inner_col + chars_before(inner, s + 1))?);
                }
            }
            ',' | ' ' if depth == 0 => {}
            _ if depth == 0 => return err(here + 1, format!("unexpected `{ch}` between mixture items")),
            _ => {}
        }
    }
    if depth != 0 {
        return err(col + chars_before(body, b.len()), "unclosed `(`");
    }
    if items.is_empty() {
        return err(col + 1, "empty mixture");
    }
    Ok(StateSpec::Mix(items))
}

fn parse_item(item: &str, col: usize) -> Result<(f64, StateSpec), SpecError> {
    let Some(comma) = item.find(',') else {
        return err(col + 1, "mixture item must be `(weight,spec)`");
    };
    let w = item[..comma].trim();
    let weight = w
        .parse::<f64>()
        .ok()
        .filter(|x| *x >= 0.0 && x.is_finite())
        .ok_or_else(|| SpecError {
            column: col + 1,
            message: format!("`{w}` is not a non-negative weight"),
        })?;
    let spec = parse_at(&item[comma + 1..], col + chars_before(item, comma + 1))?;
    Ok((weight, spec))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    entries: Vec<StateEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateEntry {
    occupations: Vec<u32>,
    re: f64,
    #[serde(default)]
    im: f64,
}

/// Build the ensemble on a `mode_count`-mode basis with cutoff `n_max`.
pub fn build(spec: &StateSpec, mode_count: usize, n_max: usize) -> Result<MixedState, String> {
    let basis = basis_build(mode_count, n_max).map_err(|e| e.to_string())?;
    let mut components = Vec::new();
    collect(spec, &basis, 1.0, &mut components)?;
    MixedState::new(components).map_err(|e| e.to_string())
}

fn collect(
    spec: &StateSpec,
    basis: &Arc<FockBasis>,
    weight: f64,
    out: &mut Vec<(f64, StateVector)>,
) -> Result<(), String> {
    let pure = match spec {
        StateSpec::Vacuum => vacuum(basis),
        StateSpec::Number(n) => number_state(basis, n).map_err(|e| e.to_string())?,
        StateSpec::Coherent(a) => coherent_state(basis, a).map_err(|e| e.to_string())?,
        StateSpec::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            let file: StateFile = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
            let triples: Vec<(Vec<u32>, C64)> = file
                .entries
                .into_iter()
                .map(|e| (e.occupations, C64::new(e.re, e.im)))
                .collect();
            StateVector::from_triples(basis.clone(), &triples).map_err(|e| format!("{path}: {e}"))?
        }
        StateSpec::Mix(items) => {
            let total: f64 = items.iter().map(|(w, _)| w).sum();
            if total <= 0.0 {
                return Err("mixture weights sum to zero".into());
            }
            for (w, s) in items {
                collect(s, basis, weight * w / total, out)?;
            }
            return Ok(());
        }
    };
    out.push((weight, pure));
    Ok(())
}
