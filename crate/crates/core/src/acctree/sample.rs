//! Seeded random generators for trees and edit scripts.
//!
//! These back the randomized round-trip oracles (diff/apply, parse/serialize)
//! and corpus corruption tests. Everything is a pure function of the supplied
//! rng, so a fixed seed reproduces the same trees and scripts.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{apply, id, AccNode, AccessibilityTree, EditOp, EditScript, NodeId, Role};

const NAME_WORDS: &[&str] = &[
    "Home", "Search", "Price", "Cart", "About", "Login", "News", "Willow", "Quartz", "Maple",
    "it's", "a\\b", "two\nlines", "", "Order 66", "café",
];

const URLS: &[&str] = &[
    "http://shop.example/",
    "http://shop.example/item/3",
    "http://wiki.example/page",
    "",
    "http://forum.example/thread/9?page=2",
];

fn random_name(rng: &mut impl Rng) -> String {
    NAME_WORDS.choose(rng).unwrap().to_string()
}

fn child_role(rng: &mut impl Rng) -> Role {
    *[
        Role::Heading,
        Role::Link,
        Role::Button,
        Role::Textbox,
        Role::Text,
    ]
    .choose(rng)
    .unwrap()
}

/// A random valid tree with at most `max_nodes` nodes. Ids are drawn sparsely
/// so inserted ids in later edits rarely collide by accident.
pub fn random_tree(rng: &mut impl Rng, max_nodes: usize) -> AccessibilityTree {
    let n = rng.random_range(1..=max_nodes.max(1));
    let mut next_id = rng.random_range(1..50u32);
    let mut alloc = |rng: &mut dyn rand::RngCore| {
        let step = (rng.next_u32() % 3) + 1;
        let out = next_id;
        next_id += step;
        id(out)
    };

    let mut root = AccNode::new(alloc(rng), Role::Root, random_name(rng));
    // Attach remaining nodes one at a time under a random existing node.
    for _ in 1..n {
        let node = AccNode::new(alloc(rng), child_role(rng), random_name(rng));
        let count = root.count();
        let target = rng.random_range(0..count);
        attach_at(&mut root, target, node);
    }
    // Focus one interactable node sometimes.
    if rng.random_bool(0.3) {
        let focusable: Vec<NodeId> = root
            .walk()
            .filter(|x| x.role.is_interactable())
            .map(|x| x.id)
            .collect();
        if let Some(&pick) = focusable.choose(rng) {
            set_focus(&mut root, pick);
        }
    }
    let url = URLS.choose(rng).unwrap().to_string();
    AccessibilityTree::new(url, root).expect("generated tree is valid")
}

fn attach_at(root: &mut AccNode, preorder_index: usize, node: AccNode) {
    let mut counter = 0usize;
    attach_walk(root, preorder_index, &mut counter, node);
}

fn attach_walk(
    node: &mut AccNode,
    target: usize,
    counter: &mut usize,
    new: AccNode,
) -> Option<AccNode> {
    if *counter == target {
        node.children.push(new);
        *counter += 1;
        return None;
    }
    *counter += 1;
    let mut carried = new;
    for child in &mut node.children {
        match attach_walk(child, target, counter, carried) {
            None => return None,
            Some(back) => carried = back,
        }
    }
    Some(carried)
}

fn set_focus(root: &mut AccNode, target: NodeId) {
    if root.id == target {
        root.focused = true;
        return;
    }
    for child in &mut root.children {
        set_focus(child, target);
    }
}

fn max_id(tree: &AccessibilityTree) -> u32 {
    tree.root().walk().map(|n| n.id.get()).max().unwrap_or(1)
}

/// A random script of `k` edits that applies cleanly to `tree`, together with
/// the tree it produces. Each op is drawn against the intermediate result so
/// ids stay live throughout.
pub fn random_edits(
    rng: &mut impl Rng,
    tree: &AccessibilityTree,
    k: usize,
) -> (EditScript, AccessibilityTree) {
    let mut current = tree.clone();
    let mut fresh = max_id(&current) + 1;
    let mut ops = Vec::with_capacity(k);
    for _ in 0..k {
        let op = loop {
            match rng.random_range(0..6u8) {
                0 => {
                    let ids: Vec<NodeId> = current.root().walk().map(|n| n.id).collect();
                    let target = *ids.choose(rng).unwrap();
                    break EditOp::SetName {
                        id: target,
                        name: random_name(rng),
                    };
                }
                1 => {
                    let mut ids: Vec<Option<NodeId>> =
                        current.root().walk().map(|n| Some(n.id)).collect();
                    ids.push(None);
                    break EditOp::SetFocus {
                        id: *ids.choose(rng).unwrap(),
                    };
                }
                2 => {
                    let parents: Vec<(NodeId, usize)> = current
                        .root()
                        .walk()
                        .map(|n| (n.id, n.children.len()))
                        .collect();
                    let &(parent_id, len) = parents.choose(rng).unwrap();
                    let size = rng.random_range(1..=3usize);
                    let mut subtree = AccNode::new(id(fresh), child_role(rng), random_name(rng));
                    fresh += 1;
                    for _ in 1..size {
                        subtree
                            .children
                            .push(AccNode::new(id(fresh), child_role(rng), random_name(rng)));
                        fresh += 1;
                    }
                    break EditOp::InsertNode {
                        parent_id,
                        index: rng.random_range(0..=len),
                        subtree,
                    };
                }
                3 => {
                    let removable: Vec<NodeId> = current
                        .root()
                        .walk()
                        .skip(1)
                        .map(|n| n.id)
                        .collect();
                    match removable.choose(rng) {
                        Some(&target) => break EditOp::RemoveNode { id: target },
                        None => continue,
                    }
                }
                4 => {
                    break EditOp::SetUrl {
                        url: URLS.choose(rng).unwrap().to_string(),
                    }
                }
                _ => {
                    let replacement = random_tree(rng, 4);
                    // Shift ids clear of anything that ever existed here.
                    let mut root = replacement.root().clone();
                    shift_ids(&mut root, fresh);
                    fresh += root.count() as u32 * 4;
                    break EditOp::ReplaceTree { root };
                }
            }
        };
        current = apply(&current, &EditScript::new(vec![op.clone()]))
            .expect("generated op applies to intermediate tree");
        fresh = fresh.max(max_id(&current) + 1);
        ops.push(op);
    }
    (EditScript::new(ops), current)
}

fn shift_ids(node: &mut AccNode, base: u32) {
    node.id = id(node.id.get() + base);
    for child in &mut node.children {
        shift_ids(child, base);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::substream;

    #[test]
    fn generators_are_deterministic() {
        let t1 = random_tree(&mut substream(3, "tree", 0), 12);
        let t2 = random_tree(&mut substream(3, "tree", 0), 12);
        assert_eq!(t1, t2);
        let (s1, f1) = random_edits(&mut substream(3, "edit", 1), &t1, 5);
        let (s2, f2) = random_edits(&mut substream(3, "edit", 1), &t1, 5);
        assert_eq!(s1, s2);
        assert_eq!(f1, f2);
    }

    #[test]
    fn random_edits_apply_cleanly() {
        let mut rng = substream(11, "sample", 0);
        for _ in 0..50 {
            let tree = random_tree(&mut rng, 10);
            let (script, end) = random_edits(&mut rng, &tree, 4);
            assert_eq!(apply(&tree, &script).unwrap(), end);
        }
    }
}
