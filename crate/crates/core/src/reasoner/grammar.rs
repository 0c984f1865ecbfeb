//! Response grammar: one fenced block per response, tagged `allocation`,
//! `proposal` or `summary`. Text outside the block is ignored.
//!
//! Allocation lines read `agent <id>: <macro task>`; proposal lines are
//! `candidate:`, repeated `alternative:` and `rationale:`; a summary block is
//! free text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::agent::MacroTask;
use crate::coordination::{JointAction, Proposal};
use crate::ids::AgentId;
use crate::summary::SUMMARY_BUDGET;

use super::{Parsed, Payload, ReasonerRequest};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("no ```{0} block found")]
    MissingBlock(&'static str),
    #[error("```{tag} block opened on line {line} is never closed")]
    Unterminated { tag: &'static str, line: usize },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("```{0} block is empty")]
    Empty(&'static str),
    #[error("missing '{0}' line")]
    MissingField(&'static str),
    #[error("no task for agent {0}")]
    MissingAgent(AgentId),
}

fn line_err(line: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Line { line, message: message.into() }
}

/// Lines of the first block tagged `tag`, each with its 1-based line number.
fn fenced<'a>(text: &'a str, tag: &'static str) -> Result<Vec<(usize, &'a str)>, GrammarError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let open = lines
        .by_ref()
        .find(|(_, l)| {
            l.trim()
                .strip_prefix("```")
                .is_some_and(|t| t.trim().eq_ignore_ascii_case(tag))
        })
        .ok_or(GrammarError::MissingBlock(tag))?;
    let mut body = Vec::new();
    for (n, l) in lines {
        if l.trim() == "```" {
            return Ok(body);
        }
        body.push((n, l));
    }
    Err(GrammarError::Unterminated { tag, line: open.0 })
}

fn parse_task(line: usize, s: &str) -> Result<MacroTask, GrammarError> {
    s.trim().parse::<MacroTask>().map_err(|e| line_err(line, e.to_string()))
}

/// Parses an allocation; every agent in `agents` must appear exactly once and
/// no other agent may appear.
pub fn parse_allocation(text: &str, agents: &[AgentId]) -> Result<JointAction, GrammarError> {
    let expected: BTreeSet<AgentId> = agents.iter().copied().collect();
    let mut out = BTreeMap::new();
    for (n, l) in fenced(text, "allocation")? {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        let (head, task) = l
            .split_once(':')
            .ok_or_else(|| line_err(n, "expected 'agent <id>: <macro task>'"))?;
        let id = head
            .trim()
            .strip_prefix("agent")
            .map(str::trim)
            .and_then(|d| d.parse::<u32>().ok())
            .map(AgentId)
            .ok_or_else(|| line_err(n, format!("expected 'agent <id>', got '{}'", head.trim())))?;
        if !expected.contains(&id) {
            return Err(line_err(n, format!("agent {id} is not part of this round")));
        }
        let task = parse_task(n, task)?;
        if out.insert(id, task).is_some() {
            return Err(line_err(n, format!("agent {id} assigned twice")));
        }
    }
    if let Some(a) = expected.iter().find(|a| !out.contains_key(a)) {
        return Err(GrammarError::MissingAgent(*a));
    }
    Ok(JointAction(out))
}

/// Parses a proposal for `agent`, keeping at most `k` alternatives.
pub fn parse_proposal(text: &str, agent: AgentId, k: usize) -> Result<Proposal, GrammarError> {
    let mut candidate = None;
    let mut alternatives = Vec::new();
    let mut rationale = String::new();
    for (n, l) in fenced(text, "proposal")? {
        let l = l.trim();
        if l.is_empty() {
            continue;
        }
        let (key, value) = l
            .split_once(':')
            .ok_or_else(|| line_err(n, "expected '<key>: <value>'"))?;
        match key.trim().to_ascii_lowercase().as_str() {
            "candidate" if candidate.is_some() => return Err(line_err(n, "second candidate line")),
            "candidate" => candidate = Some(parse_task(n, value)?),
            "alternative" => alternatives.push(parse_task(n, value)?),
            "rationale" => rationale = value.trim().to_string(),
            other => return Err(line_err(n, format!("unknown key '{other}'"))),
        }
    }
    let candidate = candidate.ok_or(GrammarError::MissingField("candidate"))?;
    alternatives.truncate(k);
    Ok(Proposal { agent, candidate, rationale, alternatives, degraded: false })
}

/// Parses a summary block, trimmed and cut to the summary budget.
pub fn parse_summary(text: &str) -> Result<String, GrammarError> {
    let body: Vec<&str> = fenced(text, "summary")?.into_iter().map(|(_, l)| l.trim()).collect();
    let mut s = body.join(" ").trim().to_string();
    if s.is_empty() {
        return Err(GrammarError::Empty("summary"));
    }
    if let Some((idx, _)) = s.char_indices().nth(SUMMARY_BUDGET) {
        s.truncate(idx);
    }
    Ok(s)
}

/// Parses `text` according to the kind of `request`.
pub fn parse_response(request: &ReasonerRequest, text: &str) -> Result<Parsed, GrammarError> {
    match &request.payload {
        Payload::Propose(v) => parse_proposal(text, v.agent, v.k).map(Parsed::Proposal),
        Payload::Allocate(a) => {
            let agents: Vec<AgentId> = a.context.agents().collect();
            parse_allocation(text, &agents).map(Parsed::Joint)
        }
        Payload::Summarize(_) => parse_summary(text).map(Parsed::Summary),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn render_allocation_response(joint: &JointAction) -> String {
    let mut out = String::from("```allocation\n");
    for (a, t) in joint.iter() {
        let _ = writeln!(out, "agent {a}: {t}");
    }
    out.push_str("```\n");
    out
}

pub fn render_proposal_response(p: &Proposal) -> String {
    let mut out = format!("```proposal\ncandidate: {}\n", p.candidate);
    for a in &p.alternatives {
        let _ = writeln!(out, "alternative: {a}");
    }
    let _ = writeln!(out, "rationale: {}", one_line(&p.rationale));
    out.push_str("```\n");
    out
}

pub fn render_summary_response(text: &str) -> String {
    format!("```summary\n{}\n```\n", one_line(text))
}
