//! The ground-truth environment: deterministic state machine over procedurally
//! generated synthetic websites.
//!
//! A site is a closed graph of pages; each page is a flat, ordered list of
//! elements. The agent sees a scrolling window of at most [`VIEWPORT`] elements
//! rendered as an accessibility tree. Transitions are a pure function of
//! `(state, action)`; the only hidden parts of the state relative to the
//! observation are the history stack and off-window elements and pages.

mod gen;

pub use gen::{content_vocab, find_witness, generate_site, generate_tasks};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acctree::{AccNode, AccessibilityTree, NodeId, Role};
use crate::judge::GoalPredicate;

/// Elements visible per scroll position.
pub const VIEWPORT: usize = 20;
/// Elements the window advances per scroll step. Smaller than [`VIEWPORT`] so
/// consecutive windows overlap and scrolling diffs stay fine-grained.
pub const SCROLL_STRIDE: usize = 5;

/// Default site size used whenever a task references a site by seed alone.
pub const DEFAULT_SITE_PAGES: usize = 10;
pub const DEFAULT_SITE_BRANCHING: usize = 3;

/// System instructions shared by every task.
pub const INSTRUCTIONS: &str = "Complete the task on the website. Available actions: \
click [id], type [id] [content] [press_enter_after=0|1], scroll [up|down], go_back, \
and stop [answer]. Finish with stop, putting your answer in the brackets.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Shop,
    Wiki,
    Forum,
}

impl SiteKind {
    pub const ALL: [SiteKind; 3] = [SiteKind::Shop, SiteKind::Wiki, SiteKind::Forum];

    pub fn as_str(self) -> &'static str {
        match self {
            SiteKind::Shop => "shop",
            SiteKind::Wiki => "wiki",
            SiteKind::Forum => "forum",
        }
    }

    pub fn from_str(s: &str) -> Option<SiteKind> {
        SiteKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for SiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifier of a page within a site.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PageId(pub String);

impl fmt::Display for PageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One element of a page template. `target` is the navigation destination for
/// links and buttons, or the submit destination for textboxes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub id: NodeId,
    pub role: Role,
    pub name: String,
    pub target: Option<PageId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageTemplate {
    pub id: PageId,
    pub path: String,
    pub root_id: NodeId,
    pub elements: Vec<Element>,
}

impl PageTemplate {
    pub fn element(&self, id: NodeId) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    fn max_scroll(&self) -> usize {
        if self.elements.len() <= VIEWPORT {
            0
        } else {
            (self.elements.len() - VIEWPORT).div_ceil(SCROLL_STRIDE)
        }
    }
}

/// What a leaf page is about; drives task generation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafInfo {
    pub page: PageId,
    pub title: String,
    /// The retrievable fact shown on the page: a price (shop), an author
    /// (forum), or empty (wiki).
    pub fact: String,
}

/// A procedurally generated website. Pure function of its generation inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WebSite {
    pub seed: u64,
    pub kind: SiteKind,
    pub name: String,
    pub base_url: String,
    pub home: PageId,
    pub index: PageId,
    pub pages: BTreeMap<PageId, PageTemplate>,
    pub leaves: Vec<LeafInfo>,
}

impl WebSite {
    pub fn page(&self, id: &PageId) -> &PageTemplate {
        &self.pages[id]
    }

    pub fn url_of(&self, page: &PageId) -> String {
        format!("{}{}", self.base_url, self.pages[page].path)
    }
}

/// A navigation task: a query over a given site with a decidable goal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub query: String,
    pub site_seed: u64,
    pub site_kind: SiteKind,
    pub start_page: PageId,
    pub goal: GoalPredicate,
    pub instructions: String,
}

impl Task {
    /// Regenerates the task's site (tasks always use the default site size).
    pub fn site(&self) -> WebSite {
        generate_site(
            self.site_seed,
            self.site_kind,
            DEFAULT_SITE_PAGES,
            DEFAULT_SITE_BRANCHING,
        )
        .expect("default site size is valid")
    }
}

/// An atomic browser action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action")]
pub enum Action {
    Click { id: NodeId },
    Type { id: NodeId, content: String, press_enter: bool },
    ScrollUp,
    ScrollDown,
    GoBack,
    Stop { answer: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActionKind {
    Click,
    Type,
    ScrollUp,
    ScrollDown,
    GoBack,
    Stop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 6] = [
        ActionKind::Click,
        ActionKind::Type,
        ActionKind::ScrollUp,
        ActionKind::ScrollDown,
        ActionKind::GoBack,
        ActionKind::Stop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::Type => "type",
            ActionKind::ScrollUp => "scroll_up",
            ActionKind::ScrollDown => "scroll_down",
            ActionKind::GoBack => "go_back",
            ActionKind::Stop => "stop",
        }
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Click { .. } => ActionKind::Click,
            Action::Type { .. } => ActionKind::Type,
            Action::ScrollUp => ActionKind::ScrollUp,
            Action::ScrollDown => ActionKind::ScrollDown,
            Action::GoBack => ActionKind::GoBack,
            Action::Stop { .. } => ActionKind::Stop,
        }
    }

    /// The element the action targets, if any.
    pub fn target(&self) -> Option<NodeId> {
        match self {
            Action::Click { id } | Action::Type { id, .. } => Some(*id),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Click { id } => write!(f, "click [{id}]"),
            Action::Type {
                id,
                content,
                press_enter,
            } => write!(f, "type [{id}] [{content}] [{}]", u8::from(*press_enter)),
            Action::ScrollUp => write!(f, "scroll [up]"),
            Action::ScrollDown => write!(f, "scroll [down]"),
            Action::GoBack => write!(f, "go_back"),
            Action::Stop { answer } => write!(f, "stop [{answer}]"),
        }
    }
}

/// Full environment state. Partially observable: the agent sees only
/// [`observe`] of it.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub site: Arc<WebSite>,
    pub page_id: PageId,
    /// Stack of (page, scroll offset) pairs restored by `go_back`.
    pub history: Vec<(PageId, usize)>,
    pub form_values: BTreeMap<NodeId, String>,
    pub scroll_offset: usize,
    pub done: bool,
    pub answer: Option<String>,
}

/// A consumed-but-ineffective step, surfaced so callers can count or log it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    UnknownElement(NodeId),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("{what} must be at least {min}, got {value}")]
    InvalidSize {
        what: &'static str,
        value: usize,
        min: usize,
    },
    #[error("episode is done; no further steps accepted")]
    EpisodeDone,
}

/// Result of one environment step.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: EnvState,
    pub observation: AccessibilityTree,
    pub fault: Option<Fault>,
}

/// The observation function: renders the visible window of the current page.
/// Pure in `state`.
pub fn observe(state: &EnvState) -> AccessibilityTree {
    let page = state.site.page(&state.page_id);
    let start = state.scroll_offset * SCROLL_STRIDE;
    let end = (start + VIEWPORT).min(page.elements.len());
    let children = page.elements[start.min(end)..end]
        .iter()
        .map(|el| {
            let name = match state.form_values.get(&el.id) {
                Some(v) if el.role == Role::Textbox => v.clone(),
                _ => el.name.clone(),
            };
            AccNode::new(el.id, el.role, name)
        })
        .collect();
    let root = AccNode::new(page.root_id, Role::Root, "").with_children(children);
    AccessibilityTree::from_parts_unchecked(state.site.url_of(&state.page_id), root)
}

/// The transition function. Deterministic; faults (stale element ids) consume
/// the step and leave the state unchanged.
pub fn transition(state: &EnvState, action: &Action) -> Result<Step, EnvError> {
    if state.done {
        return Err(EnvError::EpisodeDone);
    }
    let mut next = state.clone();
    let mut fault = None;
    let page = state.site.page(&state.page_id);
    match action {
        Action::Click { id } => match page.element(*id) {
            None => fault = Some(Fault::UnknownElement(*id)),
            Some(el) => {
                if matches!(el.role, Role::Link | Role::Button) {
                    if let Some(target) = &el.target {
                        navigate(&mut next, target.clone());
                    }
                }
                // Clicking text or a textbox activates nothing.
            }
        },
        Action::Type {
            id,
            content,
            press_enter,
        } => match page.element(*id) {
            None => fault = Some(Fault::UnknownElement(*id)),
            Some(el) => {
                if el.role == Role::Textbox {
                    next.form_values.insert(*id, content.clone());
                    if *press_enter {
                        if let Some(target) = &el.target {
                            navigate(&mut next, target.clone());
                        }
                    }
                }
            }
        },
        Action::ScrollUp => {
            next.scroll_offset = next.scroll_offset.saturating_sub(1);
        }
        Action::ScrollDown => {
            next.scroll_offset = (next.scroll_offset + 1).min(page.max_scroll());
        }
        Action::GoBack => {
            if let Some((page, offset)) = next.history.pop() {
                next.page_id = page;
                next.scroll_offset = offset;
            }
        }
        Action::Stop { answer } => {
            next.done = true;
            next.answer = Some(answer.clone());
        }
    }
    let observation = observe(&next);
    Ok(Step {
        state: next,
        observation,
        fault,
    })
}

fn navigate(state: &mut EnvState, target: PageId) {
    state
        .history
        .push((state.page_id.clone(), state.scroll_offset));
    state.page_id = target;
    state.scroll_offset = 0;
}

/// A site plus an instrumented step counter. The counter exists so training
/// runs can prove they never touched the real environment.
#[derive(Clone)]
pub struct WebEnv {
    site: Arc<WebSite>,
    steps: Arc<AtomicU64>,
}

impl WebEnv {
    pub fn new(site: WebSite) -> Self {
        WebEnv {
            site: Arc::new(site),
            steps: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Shares `counter` so several envs can report into one tally.
    pub fn with_counter(site: WebSite, counter: Arc<AtomicU64>) -> Self {
        WebEnv {
            site: Arc::new(site),
            steps: counter,
        }
    }

    pub fn site(&self) -> &WebSite {
        &self.site
    }

    /// Initial state and observation for a task.
    pub fn reset(&self, task: &Task) -> (EnvState, AccessibilityTree) {
        let state = EnvState {
            site: Arc::clone(&self.site),
            page_id: task.start_page.clone(),
            history: Vec::new(),
            form_values: BTreeMap::new(),
            scroll_offset: 0,
            done: false,
            answer: None,
        };
        let obs = observe(&state);
        (state, obs)
    }

    pub fn step(&self, state: &EnvState, action: &Action) -> Result<Step, EnvError> {
        self.steps.fetch_add(1, Ordering::Relaxed);
        transition(state, action)
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }
}

/// Checks a goal directly against the underlying state, bypassing the
/// observation. Used by consistency tests, not by training.
pub fn goal_satisfied_by_state(goal: &GoalPredicate, state: &EnvState) -> bool {
    if !state.done {
        return false;
    }
    let answer = state.answer.as_deref().unwrap_or("");
    if !goal.answer_matches(answer) {
        return false;
    }
    if let Some(sub) = &goal.terminal_page {
        if !state.site.url_of(&state.page_id).contains(sub.as_str()) {
            return false;
        }
    }
    for cond in &goal.form_conditions {
        let page = state.site.page(&state.page_id);
        let hit = page.elements.iter().any(|el| {
            el.role == Role::Textbox
                && state.form_values.get(&el.id).map(String::as_str) == Some(cond.value.as_str())
        });
        if !hit {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests;
