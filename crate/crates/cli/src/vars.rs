//! Variable names inferred from polynomial text.
//!
//! Indexed names sharing one prefix are filled into a contiguous range so
//! that an absent middle variable still gets its slot: `x` names count from
//! 0, any other prefix from 1. A single bare name is taken as is.

fn identifiers(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, ch)) = chars.next() {
        if ch.is_ascii_alphabetic() || ch == '_' {
            let mut end = start + ch.len_utf8();
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = i + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let id = &text[start..end];
            if id != "i" && !out.iter().any(|s| s == id) {
                out.push(id.to_string());
            }
        } else if ch.is_ascii_digit() {
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_digit() || c == '.' {
                    chars.next();
                } else {
                    break;
                }
            }
        }
    }
    out
}

fn split_index(id: &str) -> Option<(&str, u32)> {
    let cut = id.find(|c: char| c.is_ascii_digit())?;
    let (prefix, digits) = id.split_at(cut);
    if prefix.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|n| (prefix, n))
}

pub fn infer(text: &str) -> Result<Vec<String>, String> {
    let ids = identifiers(text);
    if ids.is_empty() {
        return Ok(vec!["t".to_string()]);
    }
    if ids.len() == 1 && split_index(&ids[0]).is_none() {
        return Ok(ids);
    }
    let mut prefix: Option<&str> = None;
    let mut hi = 0;
    let mut lo = u32::MAX;
    for id in &ids {
        let (p, n) = split_index(id).ok_or_else(|| format!("cannot infer variables from `{id}`; pass --vars"))?;
        if prefix.is_some_and(|q| q != p) {
            return Err(format!("mixed variable prefixes `{}` and `{p}`; pass --vars", prefix.unwrap()));
        }
        prefix = Some(p);
        hi = hi.max(n);
        lo = lo.min(n);
    }
    let prefix = prefix.expect("at least one identifier");
    let start = if prefix == "x" { 0 } else { lo.min(1) };
    Ok((start..=hi).map(|n| format!("{prefix}{n}")).collect())
}
