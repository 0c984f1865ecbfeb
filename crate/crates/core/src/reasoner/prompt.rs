//! Prompt rendering. Sections are fixed per request kind so that identical
//! inputs always produce byte-identical prompts.

use std::fmt::Write;

use crate::agent::RenderText;
use crate::coordination::{agent_options, AgentView};
use crate::world::{GoalSpec, TaskProgress};

use super::{AllocatePayload, Payload, ReasonerRequest, RequestKind, SummarizePayload};

/// Recent own-history records shown in a proposal prompt.
const PROPOSE_HISTORY_WINDOW: usize = 12;

fn section(out: &mut String, title: &str, body: &str) {
    let _ = writeln!(out, "## {title}");
    out.push_str(body.trim_end());
    out.push_str("\n\n");
}

fn task_text(goal: &GoalSpec) -> String {
    let mut s = format!("{}\n", goal.task);
    for p in &goal.predicates {
        let _ = writeln!(s, "- {p}");
    }
    s
}

fn progress_text(goal: &GoalSpec, progress: &TaskProgress) -> String {
    let mut s = format!("{progress} goal units satisfied\n");
    for (p, n) in goal.predicates.iter().zip(&progress.per_predicate) {
        let _ = writeln!(s, "- {p}: {n}/{}", p.required);
    }
    s
}

const MACRO_HELP: &str = "Macro tasks: FetchAndPlace(<object id or class>, ON|IN, <fixture>), \
ExploreRoom(<room>), Idle().";

fn propose(out: &mut String, v: &AgentView) {
    section(
        out,
        "Role",
        &format!(
            "You are agent {} in a household robot team. Suggest your own next macro task; \
             the manager will make the final assignment.",
            v.agent
        ),
    );
    section(out, "Total task", &task_text(&v.goal));
    section(out, "Task progress", &progress_text(&v.goal, &v.progress));
    section(out, "Observation", &v.observation.render_text());
    section(out, "Belief", &v.belief.render_text());
    let start = v.history.len().saturating_sub(PROPOSE_HISTORY_WINDOW);
    section(out, "Recent history", &v.history[start..].render_text());
    section(
        out,
        "Response format",
        &format!(
            "{MACRO_HELP}\nReply with exactly one fenced block, at most {} alternative lines:\n\
             ```proposal\ncandidate: <macro task>\nalternative: <macro task>\nrationale: <one line>\n```",
            v.k
        ),
    );
}

fn allocate(out: &mut String, a: &AllocatePayload) {
    section(
        out,
        "Role",
        "You are the manager of a household robot team. Assign exactly one macro task to every \
         agent so that the team finishes the task quickly. Two agents may not target the same \
         object, and no goal may receive more agents than it has missing units.",
    );
    section(out, "Total task", &task_text(&a.goal));
    section(out, "Task progress", &progress_text(&a.goal, &a.progress));
    section(out, "Collaborative summary", &a.summary.render());
    let mut ctx = String::new();
    for e in a.context.entries() {
        let _ = writeln!(ctx, "### Agent {}", e.agent);
        let _ = writeln!(ctx, "proposal: {}", e.proposal.candidate);
        for alt in &e.proposal.alternatives {
            let _ = writeln!(ctx, "alternative: {alt}");
        }
        let _ = writeln!(ctx, "rationale: {}", e.proposal.rationale);
        let opts: Vec<String> = agent_options(&a.context, e.agent, a.k).iter().map(ToString::to_string).collect();
        let _ = writeln!(ctx, "options: {}", opts.join(" | "));
        ctx.push_str(&e.observation_digest);
        ctx.push_str(&e.belief_digest);
        ctx.push('\n');
    }
    section(out, "Cross-agent context", &ctx);
    let lines: Vec<String> = a.context.agents().map(|id| format!("agent {id}: <macro task>")).collect();
    section(
        out,
        "Response format",
        &format!("{MACRO_HELP}\nReply with exactly one fenced block:\n```allocation\n{}\n```", lines.join("\n")),
    );
}

fn summarize(out: &mut String, s: &SummarizePayload) {
    section(
        out,
        "Role",
        "You keep the team's shared memory. Summarize what happened in the interval below: which \
         goal units changed, who did what, and any conflicts or failures.",
    );
    section(out, "Total task", &task_text(&s.goal));
    section(
        out,
        "Interval",
        &format!("ticks ({}, {}], progress change {:+}", s.lower, s.upper, s.delta),
    );
    section(out, "History", &s.records.render_text());
    section(
        out,
        "Response format",
        &format!(
            "Reply with one fenced block of at most {} characters:\n```summary\n<text>\n```",
            crate::summary::SUMMARY_BUDGET
        ),
    );
}

/// Renders the prompt for `request`, versioned by its template set.
pub fn render_prompt(request: &ReasonerRequest) -> String {
    let mut out = format!(
        "# {} tick={} agent={} templates={}\n\n",
        request.kind(),
        request.tick,
        request.agent,
        request.templates.version
    );
    match &request.payload {
        Payload::Propose(v) => propose(&mut out, v),
        Payload::Allocate(a) => allocate(&mut out, a),
        Payload::Summarize(s) => summarize(&mut out, s),
    }
    let kind: RequestKind = request.kind();
    let shots: Vec<&str> = request
        .templates
        .few_shot
        .iter()
        .filter(|(k, _)| *k == kind)
        .map(|(_, s)| s.as_str())
        .collect();
    if !shots.is_empty() {
        section(&mut out, "Examples", &shots.join("\n\n"));
    }
    out
}
