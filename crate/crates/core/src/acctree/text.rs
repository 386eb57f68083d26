//! Canonical text grammar for accessibility trees.
//!
//! ```text
//! url: http://shop.example/
//! root [1] ''
//!   heading [2] 'MegaShop'
//!   textbox [3] 'Search products' focused: True
//! ```
//!
//! One node per line, two-space indentation per depth level, node line format
//! `{role} [{id}] '{name}'` with focused nodes suffixed ` focused: True`.
//! Names are single-quoted with `\\`, `\'`, `\n`, `\r` escapes so that
//! `parse(serialize(t)) == t` for every valid tree.

use thiserror::Error;

use super::{AccNode, AccessibilityTree, NodeId, Role};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> Self {
        ParseError {
            line,
            reason: reason.into(),
        }
    }
}

/// Renders a tree in canonical text form. Deterministic; no trailing newline.
pub fn serialize(tree: &AccessibilityTree) -> String {
    let mut out = format!("url: {}", tree.url());
    let mut stack: Vec<(usize, &AccNode)> = vec![(0, tree.root())];
    while let Some((depth, node)) = stack.pop() {
        out.push('\n');
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(node.role.as_str());
        out.push_str(" [");
        out.push_str(&node.id.to_string());
        out.push_str("] '");
        out.push_str(&escape_name(&node.name));
        out.push('\'');
        if node.focused {
            out.push_str(" focused: True");
        }
        for child in node.children.iter().rev() {
            stack.push((depth + 1, child));
        }
    }
    out
}

/// Parses canonical (or canonicalizable) text into a tree.
pub fn parse(text: &str) -> Result<AccessibilityTree, ParseError> {
    if text.is_empty() {
        return Err(ParseError::new(1, "missing url header"));
    }
    let mut lines = text.split('\n').enumerate();
    let (_, header) = lines.next().expect("split yields at least one line");
    let url = if header == "url:" {
        String::new()
    } else {
        header
            .strip_prefix("url: ")
            .ok_or_else(|| ParseError::new(1, "malformed header line, expected 'url: ...'"))?
            .to_string()
    };

    // Stack of (depth, path-into-tree) while building; nodes[0] is the root.
    let mut root: Option<AccNode> = None;
    let mut path: Vec<usize> = Vec::new(); // child indices from root to the open node
    let mut prev_depth: Option<usize> = None;
    let mut seen_ids = std::collections::BTreeSet::new();
    let mut seen_focus = false;
    let mut trailing_blank = false;

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            trailing_blank = true;
            continue;
        }
        if trailing_blank {
            return Err(ParseError::new(line_no, "blank line inside tree body"));
        }

        let indent_len = line.len() - line.trim_start_matches(' ').len();
        if line.as_bytes().get(indent_len) == Some(&b'\t') {
            return Err(ParseError::new(line_no, "tab in indentation"));
        }
        if indent_len % 2 != 0 {
            return Err(ParseError::new(line_no, "odd indentation width"));
        }
        let depth = indent_len / 2;
        match prev_depth {
            None => {
                if depth != 0 {
                    return Err(ParseError::new(line_no, "first node must be unindented"));
                }
            }
            Some(prev) => {
                if depth == 0 {
                    return Err(ParseError::new(line_no, "multiple root nodes"));
                }
                if depth > prev + 1 {
                    return Err(ParseError::new(
                        line_no,
                        format!("indentation jumps from level {prev} to {depth}"),
                    ));
                }
            }
        }

        let node = parse_node_line(&line[indent_len..], line_no)?;
        if !seen_ids.insert(node.id) {
            return Err(ParseError::new(line_no, format!("duplicate id {}", node.id)));
        }
        if node.focused {
            if seen_focus {
                return Err(ParseError::new(line_no, "multiple focused nodes"));
            }
            seen_focus = true;
        }

        if depth == 0 {
            if node.role != Role::Root {
                return Err(ParseError::new(line_no, "root node must have role 'root'"));
            }
            root = Some(node);
            path.clear();
        } else {
            let root_node = root.as_mut().expect("depth > 0 implies a root was seen");
            path.truncate(depth - 1);
            let mut parent = &mut *root_node;
            for &i in &path {
                parent = &mut parent.children[i];
            }
            parent.children.push(node);
            path.push(parent.children.len() - 1);
        }
        prev_depth = Some(depth);
    }

    let root = root.ok_or_else(|| ParseError::new(2, "tree has no nodes"))?;
    Ok(AccessibilityTree::from_parts_unchecked(url, root))
}

fn parse_node_line(body: &str, line_no: usize) -> Result<AccNode, ParseError> {
    if body.contains('\t') {
        return Err(ParseError::new(line_no, "tab in node line"));
    }
    let err = |reason: &str| ParseError::new(line_no, reason.to_string());

    let sp = body.find(' ').ok_or_else(|| err("missing ' [' after role"))?;
    let role_str = &body[..sp];
    let role = Role::from_str(role_str)
        .ok_or_else(|| ParseError::new(line_no, format!("unknown role '{role_str}'")))?;

    let rest = &body[sp + 1..];
    let rest = rest.strip_prefix('[').ok_or_else(|| err("expected '[id]'"))?;
    let close = rest.find(']').ok_or_else(|| err("unclosed id bracket"))?;
    let id_str = &rest[..close];
    let raw: u32 = id_str
        .parse()
        .map_err(|_| ParseError::new(line_no, format!("invalid id '{id_str}'")))?;
    let id = NodeId::new(raw).ok_or_else(|| err("id must be positive"))?;
    let mut rest = &rest[close + 1..];

    let mut name = String::new();
    if let Some(after) = rest.strip_prefix(" '") {
        let (parsed, remaining) = parse_quoted(after, line_no)?;
        name = parsed;
        rest = remaining;
    }

    let focused = if rest.is_empty() {
        false
    } else if rest == " focused: True" {
        true
    } else {
        return Err(ParseError::new(
            line_no,
            format!("trailing characters '{rest}'"),
        ));
    };

    let mut node = AccNode::new(id, role, name);
    node.focused = focused;
    Ok(node)
}

/// Parses a quoted name body (after the opening quote), returning the unescaped
/// name and the remainder after the closing quote.
fn parse_quoted<'a>(s: &'a str, line_no: usize) -> Result<(String, &'a str), ParseError> {
    let mut name = String::new();
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\'' => return Ok((name, &s[i + 1..])),
            '\\' => match chars.next() {
                Some((_, '\\')) => name.push('\\'),
                Some((_, '\'')) => name.push('\''),
                Some((_, 'n')) => name.push('\n'),
                Some((_, 'r')) => name.push('\r'),
                Some((_, other)) => {
                    return Err(ParseError::new(
                        line_no,
                        format!("invalid escape '\\{other}'"),
                    ))
                }
                None => return Err(ParseError::new(line_no, "dangling escape")),
            },
            other => name.push(other),
        }
    }
    Err(ParseError::new(line_no, "unterminated name quote"))
}

fn escape_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::id;
    use super::*;

    #[test]
    fn parse_minimal_two_node_tree() {
        let t = parse("url: http://a\nroot [1]\n  link [2] 'Home'").unwrap();
        assert_eq!(t.url(), "http://a");
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.root().id, id(1));
        let child = &t.root().children[0];
        assert_eq!(child.id, id(2));
        assert_eq!(child.role, Role::Link);
        assert_eq!(child.name, "Home");
    }

    #[test]
    fn parse_empty_input_is_missing_header() {
        let err = parse("").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.reason, "missing url header");
    }

    #[test]
    fn serialize_minimal_tree() {
        let t = AccessibilityTree::new("u", AccNode::new(id(1), Role::Root, "")).unwrap();
        assert_eq!(serialize(&t), "url: u\nroot [1] ''");
    }

    #[test]
    fn serialize_renders_focus_flag() {
        let root = AccNode::new(id(1), Role::Root, "")
            .with_children(vec![AccNode::new(id(2), Role::Textbox, "query").focused()]);
        let t = AccessibilityTree::new("u", root).unwrap();
        let text = serialize(&t);
        assert!(text.ends_with("textbox [2] 'query' focused: True"));
    }

    #[test]
    fn parse_rejects_duplicate_ids() {
        let err = parse("url: u\nroot [1]\n  text [1] 'x'").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.reason.contains("duplicate id"));
    }

    #[test]
    fn parse_rejects_unknown_role() {
        let err = parse("url: u\nroot [1]\n  widget [2] 'x'").unwrap_err();
        assert!(err.reason.contains("unknown role"));
    }

    #[test]
    fn parse_rejects_indentation_jump() {
        let err = parse("url: u\nroot [1]\n    text [2] 'x'").unwrap_err();
        assert!(err.reason.contains("jumps"));
    }

    #[test]
    fn parse_rejects_tabs() {
        let err = parse("url: u\nroot [1]\n\ttext [2] 'x'").unwrap_err();
        assert!(err.reason.contains("tab"));
    }

    #[test]
    fn parse_rejects_zero_id() {
        let err = parse("url: u\nroot [0]").unwrap_err();
        assert!(err.reason.contains("positive"));
    }

    #[test]
    fn name_escapes_round_trip() {
        let tricky = "it's a \\ test\nwith 'quotes'";
        let root = AccNode::new(id(1), Role::Root, "")
            .with_children(vec![AccNode::new(id(2), Role::Text, tricky)]);
        let t = AccessibilityTree::new("u", root).unwrap();
        let parsed = parse(&serialize(&t)).unwrap();
        assert_eq!(parsed, t);
    }

    #[test]
    fn trailing_newline_is_tolerated() {
        let t = parse("url: u\nroot [1] ''\n").unwrap();
        assert_eq!(t.node_count(), 1);
        let err = parse("url: u\nroot [1] ''\n\n  text [2] 'x'").unwrap_err();
        assert!(err.reason.contains("blank line"));
    }

    #[test]
    fn nested_parse_matches_structure() {
        let text = "url: u\nroot [1] ''\n  heading [2] 'Top'\n  link [3] 'A'\n    text [4] 'deep'\n  link [5] 'B'";
        let t = parse(text).unwrap();
        assert_eq!(t.root().children.len(), 3);
        assert_eq!(t.root().children[1].children[0].id, id(4));
        assert_eq!(serialize(&t), text);
    }
}
