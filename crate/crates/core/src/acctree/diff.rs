//! Canonical diff between two accessibility trees.
//!
//! Nodes are matched by id (and role) under matched parents; there is no move
//! detection, so a node that changed parent or slid out of sibling order is
//! emitted as a remove plus an insert. The whole tree is replaced in one op
//! when the URL changed, the root's identity changed, or more than half of the
//! node ids turned over. Op order is removals, insertions, renames, focus, so
//! every op references a live id when applied left to right.

use std::collections::{BTreeMap, BTreeSet};

use super::{AccNode, AccessibilityTree, EditOp, EditScript, NodeId};

/// Computes the canonical script `s` with `apply(old, s) == new`, bit-exactly.
/// `diff(t, t)` is empty.
pub fn diff(old: &AccessibilityTree, new: &AccessibilityTree) -> EditScript {
    if old == new {
        return EditScript::empty();
    }

    let url_changed = old.url() != new.url();
    let root_changed =
        old.root().id != new.root().id || old.root().role != new.root().role;
    if url_changed || root_changed || id_turnover_exceeds_half(old, new) {
        let mut ops = Vec::new();
        if url_changed {
            ops.push(EditOp::SetUrl {
                url: new.url().to_string(),
            });
        }
        ops.push(EditOp::ReplaceTree {
            root: new.root().clone(),
        });
        return EditScript::new(ops);
    }

    let mut plan = Plan::default();
    reconcile(old.root(), new.root(), &mut plan);

    let mut ops = Vec::new();
    ops.extend(
        plan.removals
            .into_iter()
            .map(|id| EditOp::RemoveNode { id }),
    );
    ops.extend(plan.inserts.into_iter().map(|(parent_id, index, subtree)| {
        EditOp::InsertNode {
            parent_id,
            index,
            subtree,
        }
    }));
    ops.extend(
        plan.renames
            .into_iter()
            .map(|(id, name)| EditOp::SetName { id, name }),
    );

    // Focus after structural ops: the old focus survives only if its node was
    // kept; an inserted subtree carries (and steals) focus by itself.
    let new_focus = new.focused_id();
    let post_focus = match new_focus {
        Some(nf) if plan.inserted_ids.contains(&nf) => new_focus,
        _ => old.focused_id().filter(|of| plan.kept.contains(of)),
    };
    if post_focus != new_focus {
        ops.push(EditOp::SetFocus { id: new_focus });
    }

    EditScript::new(ops)
}

fn id_turnover_exceeds_half(old: &AccessibilityTree, new: &AccessibilityTree) -> bool {
    let old_ids: BTreeSet<NodeId> = old.root().walk().map(|n| n.id).collect();
    let new_ids: BTreeSet<NodeId> = new.root().walk().map(|n| n.id).collect();
    let shared = old_ids.intersection(&new_ids).count();
    let union = old_ids.len() + new_ids.len() - shared;
    // Turnover = 1 - |shared| / |union|; strictly more than half triggers replace.
    2 * shared < union
}

#[derive(Default)]
struct Plan {
    removals: Vec<NodeId>,
    inserts: Vec<(NodeId, usize, AccNode)>,
    renames: Vec<(NodeId, String)>,
    kept: BTreeSet<NodeId>,
    inserted_ids: BTreeSet<NodeId>,
}

/// Reconciles the children of a matched `(old, new)` pair and recurses into
/// pairs that stay matched.
fn reconcile(old: &AccNode, new: &AccNode, plan: &mut Plan) {
    plan.kept.insert(old.id);
    if old.name != new.name {
        plan.renames.push((old.id, new.name.clone()));
    }

    let old_pos: BTreeMap<NodeId, usize> = old
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id, i))
        .collect();

    // Candidate matches: same id, same role, in new-child order.
    let mut candidates: Vec<(usize, usize)> = Vec::new(); // (new_idx, old_idx)
    for (new_idx, nc) in new.children.iter().enumerate() {
        if let Some(&old_idx) = old_pos.get(&nc.id) {
            if old.children[old_idx].role == nc.role {
                candidates.push((new_idx, old_idx));
            }
        }
    }
    // Keep the candidates whose old positions form an increasing sequence, so
    // kept children appear in the same relative order on both sides. The rest
    // are demoted to remove + insert.
    let keep_flags = longest_increasing(&candidates.iter().map(|&(_, o)| o).collect::<Vec<_>>());
    let matched_new: BTreeSet<usize> = candidates
        .iter()
        .zip(&keep_flags)
        .filter(|(_, &k)| k)
        .map(|(&(n, _), _)| n)
        .collect();
    let matched_old: BTreeSet<usize> = candidates
        .iter()
        .zip(&keep_flags)
        .filter(|(_, &k)| k)
        .map(|(&(_, o), _)| o)
        .collect();

    for (old_idx, oc) in old.children.iter().enumerate() {
        if !matched_old.contains(&old_idx) {
            plan.removals.push(oc.id);
        }
    }
    for (new_idx, nc) in new.children.iter().enumerate() {
        if !matched_new.contains(&new_idx) {
            plan.inserts.push((new.id, new_idx, nc.clone()));
            for n in nc.walk() {
                plan.inserted_ids.insert(n.id);
            }
        }
    }
    for (&(new_idx, old_idx), &k) in candidates.iter().zip(&keep_flags) {
        if k {
            reconcile(&old.children[old_idx], &new.children[new_idx], plan);
        }
    }
}

/// Marks one longest strictly-increasing subsequence of `xs` (deterministic:
/// prefers the lexicographically earliest when tied).
fn longest_increasing(xs: &[usize]) -> Vec<bool> {
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    // tails[k] = index into xs of the smallest tail of an increasing
    // subsequence of length k+1; prev links reconstruct the chosen chain.
    let mut tails: Vec<usize> = Vec::new();
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut tail_of_len: Vec<usize> = Vec::new();
    for i in 0..n {
        let pos = tails.partition_point(|&t| xs[t] < xs[i]);
        if pos > 0 {
            prev[i] = Some(tail_of_len[pos - 1]);
        }
        if pos == tails.len() {
            tails.push(i);
            tail_of_len.push(i);
        } else {
            tails[pos] = i;
            tail_of_len[pos] = i;
        }
    }
    let mut keep = vec![false; n];
    let mut cur = Some(*tail_of_len.last().expect("nonempty"));
    while let Some(i) = cur {
        keep[i] = true;
        cur = prev[i];
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::super::{apply, id, AccessibilityTree, Role};
    use super::*;

    fn tree(text: &str) -> AccessibilityTree {
        super::super::parse(text).unwrap()
    }

    #[test]
    fn diff_identical_trees_is_empty() {
        let t = tree("url: u\nroot [1] ''\n  link [2] 'Home'");
        assert!(diff(&t, &t).is_empty());
    }

    #[test]
    fn rename_produces_single_set_name() {
        let old = tree("url: u\nroot [1] ''\n  link [2] 'Home'");
        let new = tree("url: u\nroot [1] ''\n  link [2] 'Start'");
        let script = diff(&old, &new);
        assert_eq!(
            script.ops,
            vec![EditOp::SetName {
                id: id(2),
                name: "Start".into()
            }]
        );
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn url_change_falls_back_to_replace() {
        let old = tree("url: a\nroot [1] ''\n  link [2] 'Home'");
        let new = tree("url: b\nroot [1] ''\n  link [2] 'Home'");
        let script = diff(&old, &new);
        assert!(matches!(script.ops[0], EditOp::SetUrl { .. }));
        assert!(matches!(script.ops[1], EditOp::ReplaceTree { .. }));
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn large_turnover_falls_back_to_replace() {
        let old = tree("url: u\nroot [1] ''\n  text [2] 'a'\n  text [3] 'b'\n  text [4] 'c'");
        let new = tree("url: u\nroot [1] ''\n  text [5] 'a'\n  text [6] 'b'\n  text [7] 'c'");
        let script = diff(&old, &new);
        assert_eq!(script.ops.len(), 1);
        assert!(matches!(script.ops[0], EditOp::ReplaceTree { .. }));
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn small_insert_and_remove_stay_fine_grained() {
        let old = tree("url: u\nroot [1] ''\n  text [2] 'a'\n  text [3] 'b'\n  text [4] 'c'");
        let new = tree("url: u\nroot [1] ''\n  text [2] 'a'\n  text [5] 'x'\n  text [4] 'c'");
        let script = diff(&old, &new);
        assert!(script
            .ops
            .iter()
            .all(|op| !matches!(op, EditOp::ReplaceTree { .. })));
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn reordered_siblings_round_trip() {
        let old = tree("url: u\nroot [1] ''\n  text [2] 'a'\n  text [3] 'b'\n  text [4] 'c'");
        let new = tree("url: u\nroot [1] ''\n  text [4] 'c'\n  text [2] 'a'\n  text [3] 'b'");
        let script = diff(&old, &new);
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn moved_node_round_trips_as_remove_insert() {
        let old = tree("url: u\nroot [1] ''\n  link [2] 'A'\n    text [3] 'deep'\n  link [4] 'B'");
        let new = tree("url: u\nroot [1] ''\n  link [2] 'A'\n  link [4] 'B'\n    text [3] 'deep'");
        let script = diff(&old, &new);
        assert_eq!(apply(&old, &script).unwrap(), new);
        assert!(script.ops.iter().any(|op| matches!(op, EditOp::RemoveNode { id: i } if *i == id(3))));
    }

    #[test]
    fn focus_changes_emit_set_focus() {
        let old = tree("url: u\nroot [1] ''\n  textbox [2] 'q'\n  textbox [3] 'p' focused: True");
        let new = tree("url: u\nroot [1] ''\n  textbox [2] 'q' focused: True\n  textbox [3] 'p'");
        let script = diff(&old, &new);
        assert_eq!(script.ops, vec![EditOp::SetFocus { id: Some(id(2)) }]);
        assert_eq!(apply(&old, &script).unwrap(), new);

        let cleared = tree("url: u\nroot [1] ''\n  textbox [2] 'q'\n  textbox [3] 'p'");
        let script = diff(&old, &cleared);
        assert_eq!(script.ops, vec![EditOp::SetFocus { id: None }]);
    }

    #[test]
    fn focus_arriving_inside_insert_needs_no_extra_op() {
        let old = tree("url: u\nroot [1] ''\n  textbox [2] 'q' focused: True");
        let new = tree("url: u\nroot [1] ''\n  textbox [2] 'q'\n  textbox [3] 'p' focused: True");
        let script = diff(&old, &new);
        assert!(!script
            .ops
            .iter()
            .any(|op| matches!(op, EditOp::SetFocus { .. })));
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn role_change_on_same_id_round_trips() {
        let old = tree("url: u\nroot [1] ''\n  link [2] 'x'\n  text [3] 'y'");
        let new = tree("url: u\nroot [1] ''\n  button [2] 'x'\n  text [3] 'y'");
        let script = diff(&old, &new);
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn root_identity_change_forces_replace() {
        let old = tree("url: u\nroot [1] ''\n  text [2] 'a'\n  text [3] 'b'\n  text [4] 'c'");
        let new = tree("url: u\nroot [9] ''\n  text [2] 'a'\n  text [3] 'b'\n  text [4] 'c'");
        let script = diff(&old, &new);
        assert!(matches!(script.ops[0], EditOp::ReplaceTree { .. }));
        assert_eq!(apply(&old, &script).unwrap(), new);
    }

    #[test]
    fn longest_increasing_basic() {
        assert_eq!(longest_increasing(&[0, 2, 1]), vec![true, false, true]);
        assert_eq!(longest_increasing(&[2, 0, 1]), vec![false, true, true]);
        assert_eq!(longest_increasing(&[]), Vec::<bool>::new());
    }

    #[test]
    fn deep_rename_is_fine_grained() {
        let old = tree(
            "url: u\nroot [1] ''\n  link [2] 'A'\n    text [3] 'old'\n    text [4] 'keep'\n  link [5] 'B'",
        );
        let new = tree(
            "url: u\nroot [1] ''\n  link [2] 'A'\n    text [3] 'new'\n    text [4] 'keep'\n  link [5] 'B'",
        );
        let script = diff(&old, &new);
        assert_eq!(
            script.ops,
            vec![EditOp::SetName {
                id: id(3),
                name: "new".into()
            }]
        );
    }

    #[test]
    fn replace_preserves_focus_inside_replacement() {
        let old = tree("url: a\nroot [1] ''\n  textbox [2] 'q' focused: True");
        let new = tree("url: b\nroot [1] ''\n  textbox [9] 'r' focused: True");
        let script = diff(&old, &new);
        let out = apply(&old, &script).unwrap();
        assert_eq!(out, new);
        assert_eq!(out.focused_id(), Some(id(9)));
        // Roles still validated through the replacement path.
        assert_eq!(out.root().role, Role::Root);
    }
}
