//! Accessibility trees, their canonical text form, and the edit-script calculus.
//!
//! An observation is a rooted tree of labeled web elements plus the page URL.
//! Transitions between observations are expressed as ordered edit scripts over
//! a closed seven-op algebra (insert, remove, rename, focus, url, full replace,
//! terminal marker). `diff` produces the canonical script between two trees and
//! `apply` replays a script; together they satisfy
//! `apply(old, diff(old, new)) == new` bit-exactly.

mod diff;
pub mod sample;
mod text;

pub use diff::diff;
pub use text::{parse, serialize, ParseError};

use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a node, unique within a tree. Always positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(NonZeroU32);

impl NodeId {
    pub fn new(raw: u32) -> Option<Self> {
        NonZeroU32::new(raw).map(NodeId)
    }

    pub fn get(self) -> u32 {
        self.0.get()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The fixed registry of element roles. Unknown roles are a parse error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Root,
    Heading,
    Link,
    Button,
    Textbox,
    Text,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Root,
        Role::Heading,
        Role::Link,
        Role::Button,
        Role::Textbox,
        Role::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Root => "root",
            Role::Heading => "heading",
            Role::Link => "link",
            Role::Button => "button",
            Role::Textbox => "textbox",
            Role::Text => "text",
        }
    }

    pub fn from_str(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// Roles the agent can target with click or type actions.
    pub fn is_interactable(self) -> bool {
        matches!(self, Role::Link | Role::Button | Role::Textbox)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single element of an accessibility tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccNode {
    pub id: NodeId,
    pub role: Role,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub focused: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AccNode>,
}

impl AccNode {
    pub fn new(id: NodeId, role: Role, name: impl Into<String>) -> Self {
        AccNode {
            id,
            role,
            name: name.into(),
            focused: false,
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<AccNode>) -> Self {
        self.children = children;
        self
    }

    pub fn focused(mut self) -> Self {
        self.focused = true;
        self
    }

    /// Preorder traversal of this subtree.
    pub fn walk(&self) -> impl Iterator<Item = &AccNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            // Children pushed in reverse so they pop in document order.
            for child in node.children.iter().rev() {
                stack.push(child);
            }
            Some(node)
        })
    }

    fn count(&self) -> usize {
        self.walk().count()
    }

    fn find(&self, id: NodeId) -> Option<&AccNode> {
        self.walk().find(|n| n.id == id)
    }
}

/// Why a tree (or a subtree embedded in an edit op) is structurally invalid.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("more than one focused node")]
    MultipleFocus,
    #[error("root node has role '{0}', expected 'root'")]
    RootRole(Role),
}

/// An observation: a rooted tree plus the current page URL.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessibilityTree {
    url: String,
    root: AccNode,
}

impl AccessibilityTree {
    /// Builds a tree, checking id uniqueness, focus uniqueness, and the root role.
    pub fn new(url: impl Into<String>, root: AccNode) -> Result<Self, ValidateError> {
        validate_subtree(&root, true)?;
        Ok(AccessibilityTree {
            url: url.into(),
            root,
        })
    }

    pub(crate) fn from_parts_unchecked(url: String, root: AccNode) -> Self {
        AccessibilityTree { url, root }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn root(&self) -> &AccNode {
        &self.root
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn node(&self, id: NodeId) -> Option<&AccNode> {
        self.root.find(id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    pub fn focused_id(&self) -> Option<NodeId> {
        self.root.walk().find(|n| n.focused).map(|n| n.id)
    }

    /// Elements the agent can target, in document order.
    pub fn interactables(&self) -> Vec<&AccNode> {
        self.root
            .walk()
            .filter(|n| n.role.is_interactable())
            .collect()
    }

    /// Canonical text form; inverse of [`parse`].
    pub fn to_text(&self) -> String {
        serialize(self)
    }
}

fn validate_subtree(root: &AccNode, require_root_role: bool) -> Result<(), ValidateError> {
    if require_root_role && root.role != Role::Root {
        return Err(ValidateError::RootRole(root.role));
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut focused = 0usize;
    for node in root.walk() {
        if !seen.insert(node.id) {
            return Err(ValidateError::DuplicateId(node.id));
        }
        if node.focused {
            focused += 1;
            if focused > 1 {
                return Err(ValidateError::MultipleFocus);
            }
        }
    }
    Ok(())
}

/// One tree-edit operation. Scripts are ordered lists of these.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum EditOp {
    /// Insert `subtree` as child number `index` of `parent_id`.
    InsertNode {
        parent_id: NodeId,
        index: usize,
        subtree: AccNode,
    },
    /// Remove the node and its whole subtree.
    RemoveNode { id: NodeId },
    /// Replace the node's name.
    SetName { id: NodeId, name: String },
    /// Move focus to `id`, or clear focus when `id` is null.
    SetFocus { id: Option<NodeId> },
    /// Change the page URL.
    SetUrl { url: String },
    /// Replace the entire tree below the URL.
    ReplaceTree { root: AccNode },
    /// Marks the transition as episode-terminating. Only valid as the last op.
    MarkTerminal,
}

/// An ordered list of edit ops; serializes as a JSON array of tagged objects.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn new(ops: Vec<EditOp>) -> Self {
        EditScript { ops }
    }

    pub fn empty() -> Self {
        EditScript { ops: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn ends_terminal(&self) -> bool {
        matches!(self.ops.last(), Some(EditOp::MarkTerminal))
    }

    /// Canonical JSON form, used as a dictionary key by the world model.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("edit script serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("op {op_index}: id {id} not present in tree")]
    DanglingId { op_index: usize, id: NodeId },
    #[error("op {op_index}: inserted id {id} already present")]
    DuplicateId { op_index: usize, id: NodeId },
    #[error("op {op_index}: subtree carries more than one focused node")]
    MultipleFocus { op_index: usize },
    #[error("op {op_index}: child index {index} out of range")]
    BadIndex { op_index: usize, index: usize },
    #[error("op {op_index}: cannot remove the root node")]
    RemovedRoot { op_index: usize },
    #[error("op {op_index}: replacement root must have role 'root'")]
    BadReplacement { op_index: usize },
    #[error("op {op_index}: MarkTerminal must be the final op")]
    TerminalNotLast { op_index: usize },
}

/// Applies `script` to `tree`, returning the new tree. The input is unchanged.
///
/// Each op is validated against the tree state it sees, so a script that
/// removes a node and then re-inserts its id is legal. An inserted subtree that
/// carries focus steals it from the rest of the tree.
pub fn apply(tree: &AccessibilityTree, script: &EditScript) -> Result<AccessibilityTree, ApplyError> {
    let mut url = tree.url.clone();
    let mut root = tree.root.clone();
    let last = script.ops.len().saturating_sub(1);
    for (op_index, op) in script.ops.iter().enumerate() {
        match op {
            EditOp::InsertNode {
                parent_id,
                index,
                subtree,
            } => {
                validate_subtree(subtree, false)
                    .map_err(|e| lift_validate(e, op_index))?;
                for node in subtree.walk() {
                    if root.find(node.id).is_some() {
                        return Err(ApplyError::DuplicateId {
                            op_index,
                            id: node.id,
                        });
                    }
                }
                if subtree.walk().any(|n| n.focused) {
                    clear_focus(&mut root);
                }
                let parent = find_mut(&mut root, *parent_id).ok_or(ApplyError::DanglingId {
                    op_index,
                    id: *parent_id,
                })?;
                if *index > parent.children.len() {
                    return Err(ApplyError::BadIndex {
                        op_index,
                        index: *index,
                    });
                }
                parent.children.insert(*index, subtree.clone());
            }
            EditOp::RemoveNode { id } => {
                if root.id == *id {
                    return Err(ApplyError::RemovedRoot { op_index });
                }
                if !remove_child(&mut root, *id) {
                    return Err(ApplyError::DanglingId { op_index, id: *id });
                }
            }
            EditOp::SetName { id, name } => {
                let node = find_mut(&mut root, *id)
                    .ok_or(ApplyError::DanglingId { op_index, id: *id })?;
                node.name = name.clone();
            }
            EditOp::SetFocus { id } => {
                if let Some(id) = id {
                    if root.find(*id).is_none() {
                        return Err(ApplyError::DanglingId { op_index, id: *id });
                    }
                }
                clear_focus(&mut root);
                if let Some(id) = id {
                    find_mut(&mut root, *id).expect("checked above").focused = true;
                }
            }
            EditOp::SetUrl { url: new_url } => {
                url = new_url.clone();
            }
            EditOp::ReplaceTree { root: new_root } => {
                if new_root.role != Role::Root {
                    return Err(ApplyError::BadReplacement { op_index });
                }
                validate_subtree(new_root, true).map_err(|e| lift_validate(e, op_index))?;
                root = new_root.clone();
            }
            EditOp::MarkTerminal => {
                if op_index != last {
                    return Err(ApplyError::TerminalNotLast { op_index });
                }
            }
        }
    }
    Ok(AccessibilityTree { url, root })
}

/// Reduces a script to the canonical form producing the same result:
/// `diff(tree, apply(tree, script))`, preserving a trailing terminal marker.
/// Idempotent.
pub fn canonicalize(
    script: &EditScript,
    tree: &AccessibilityTree,
) -> Result<EditScript, ApplyError> {
    let target = apply(tree, script)?;
    let mut out = diff(tree, &target);
    if script.ends_terminal() {
        out.ops.push(EditOp::MarkTerminal);
    }
    Ok(out)
}

fn lift_validate(e: ValidateError, op_index: usize) -> ApplyError {
    match e {
        ValidateError::DuplicateId(id) => ApplyError::DuplicateId { op_index, id },
        ValidateError::MultipleFocus => ApplyError::MultipleFocus { op_index },
        ValidateError::RootRole(_) => ApplyError::BadReplacement { op_index },
    }
}

fn find_mut(node: &mut AccNode, id: NodeId) -> Option<&mut AccNode> {
    if node.id == id {
        return Some(node);
    }
    for child in &mut node.children {
        if let Some(found) = find_mut(child, id) {
            return Some(found);
        }
    }
    None
}

fn remove_child(node: &mut AccNode, id: NodeId) -> bool {
    if let Some(pos) = node.children.iter().position(|c| c.id == id) {
        node.children.remove(pos);
        return true;
    }
    node.children.iter_mut().any(|c| remove_child(c, id))
}

fn clear_focus(node: &mut AccNode) {
    node.focused = false;
    for child in &mut node.children {
        clear_focus(child);
    }
}

pub(crate) fn id(raw: u32) -> NodeId {
    NodeId::new(raw).expect("id must be positive")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_tree() -> AccessibilityTree {
        let root = AccNode::new(id(1), Role::Root, "")
            .with_children(vec![AccNode::new(id(2), Role::Link, "Home")]);
        AccessibilityTree::new("http://a", root).unwrap()
    }

    #[test]
    fn apply_empty_script_is_identity() {
        let t = two_node_tree();
        assert_eq!(apply(&t, &EditScript::empty()).unwrap(), t);
    }

    #[test]
    fn apply_set_focus_clears_previous() {
        let root = AccNode::new(id(1), Role::Root, "").with_children(vec![
            AccNode::new(id(2), Role::Textbox, "a").focused(),
            AccNode::new(id(3), Role::Textbox, "b"),
        ]);
        let t = AccessibilityTree::new("u", root).unwrap();
        let out = apply(
            &t,
            &EditScript::new(vec![EditOp::SetFocus {
                id: Some(super::id(3)),
            }]),
        )
        .unwrap();
        assert_eq!(out.focused_id(), Some(super::id(3)));
        assert!(!out.node(super::id(2)).unwrap().focused);
    }

    #[test]
    fn apply_remove_unknown_id_is_dangling() {
        let t = two_node_tree();
        let err = apply(
            &t,
            &EditScript::new(vec![EditOp::RemoveNode { id: super::id(99) }]),
        )
        .unwrap_err();
        assert_eq!(
            err,
            ApplyError::DanglingId {
                op_index: 0,
                id: super::id(99)
            }
        );
    }

    #[test]
    fn apply_insert_collision_is_duplicate() {
        let t = two_node_tree();
        let err = apply(
            &t,
            &EditScript::new(vec![EditOp::InsertNode {
                parent_id: super::id(1),
                index: 0,
                subtree: AccNode::new(super::id(2), Role::Text, "x"),
            }]),
        )
        .unwrap_err();
        assert_eq!(
            err,
            ApplyError::DuplicateId {
                op_index: 0,
                id: super::id(2)
            }
        );
    }

    #[test]
    fn apply_is_pure() {
        let t = two_node_tree();
        let script = EditScript::new(vec![EditOp::SetName {
            id: super::id(2),
            name: "Start".into(),
        }]);
        let a = apply(&t, &script).unwrap();
        let b = apply(&t, &script).unwrap();
        assert_eq!(a, b);
        assert_eq!(t.node(super::id(2)).unwrap().name, "Home");
    }

    #[test]
    fn mark_terminal_must_be_last() {
        let t = two_node_tree();
        let script = EditScript::new(vec![
            EditOp::MarkTerminal,
            EditOp::SetUrl { url: "x".into() },
        ]);
        assert_eq!(
            apply(&t, &script).unwrap_err(),
            ApplyError::TerminalNotLast { op_index: 0 }
        );
        let ok = EditScript::new(vec![EditOp::SetUrl { url: "x".into() }, EditOp::MarkTerminal]);
        assert_eq!(apply(&t, &ok).unwrap().url(), "x");
    }

    #[test]
    fn inserted_focus_steals_existing() {
        let root = AccNode::new(id(1), Role::Root, "")
            .with_children(vec![AccNode::new(id(2), Role::Textbox, "a").focused()]);
        let t = AccessibilityTree::new("u", root).unwrap();
        let out = apply(
            &t,
            &EditScript::new(vec![EditOp::InsertNode {
                parent_id: super::id(1),
                index: 1,
                subtree: AccNode::new(super::id(3), Role::Textbox, "b").focused(),
            }]),
        )
        .unwrap();
        assert_eq!(out.focused_id(), Some(super::id(3)));
    }

    #[test]
    fn edit_script_json_shape() {
        let script = EditScript::new(vec![EditOp::SetName {
            id: super::id(2),
            name: "Start".into(),
        }]);
        assert_eq!(script.to_json(), r#"[{"op":"SetName","id":2,"name":"Start"}]"#);
    }

    #[test]
    fn tree_validation_rejects_duplicates_and_double_focus() {
        let dup = AccNode::new(id(1), Role::Root, "")
            .with_children(vec![AccNode::new(id(1), Role::Text, "")]);
        assert_eq!(
            AccessibilityTree::new("u", dup).unwrap_err(),
            ValidateError::DuplicateId(id(1))
        );
        let twofocus = AccNode::new(id(1), Role::Root, "").with_children(vec![
            AccNode::new(id(2), Role::Textbox, "").focused(),
            AccNode::new(id(3), Role::Textbox, "").focused(),
        ]);
        assert_eq!(
            AccessibilityTree::new("u", twofocus).unwrap_err(),
            ValidateError::MultipleFocus
        );
    }
}
