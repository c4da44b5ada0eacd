use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTask {
    /// 1-based position in the decomposition.
    pub index: usize,
    pub text: String,
}

/// Returns the item text if `line` opens a numbered item: `3.`, `3)` or a
/// `Sub-task 3:` label.
fn item_start(line: &str) -> Option<&str> {
    let t = line.trim_start();
    numbered(t).or_else(|| labelled(t))
}

fn numbered(t: &str) -> Option<&str> {
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &t[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    // "1.5 GHz" is not an item marker
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest.trim())
    } else {
        None
    }
}

fn labelled(t: &str) -> Option<&str> {
    let lower = t.get(..8).map(str::to_ascii_lowercase);
    let after = match lower.as_deref() {
        Some("sub-task") => &t[8..],
        _ if t.get(..7).map(str::to_ascii_lowercase).as_deref() == Some("subtask") => &t[7..],
        _ => return None,
    };
    let after = after.trim_start();
    let digits = after.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = after[digits..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .or_else(|| rest.strip_prefix('.'))
        .or_else(|| rest.strip_prefix(')'))?;
    Some(rest.trim())
}

/// Extracts a numbered list of steps from free text.
///
/// Continuation lines join the preceding item; text before the first item is
/// dropped. Items are renumbered 1..k whatever numbering the source used. If
/// no item marker is found, non-blank text becomes a single sub-task.
pub fn parse_subtasks(text: &str) -> Vec<SubTask> {
    let mut items: Vec<String> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = item_start(line) {
            items.push(rest.to_string());
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(last) = items.last_mut() {
            if !last.is_empty() {
                last.push(' ');
            }
            last.push_str(trimmed);
        }
    }

    if items.is_empty() {
        let whole = text.trim();
        if whole.is_empty() {
            return Vec::new();
        }
        return vec![SubTask {
            index: 1,
            text: whole.to_string(),
        }];
    }

    items
        .into_iter()
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, text)| SubTask { index: i + 1, text })
        .collect()
}
