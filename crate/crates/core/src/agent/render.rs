//! Deterministic line-oriented text renderings used inside prompts.

use std::fmt::Write;

use crate::world::Observation;

use super::{Belief, HistoryRecord};

pub trait RenderText {
    fn render_text(&self) -> String;
}

impl RenderText for Belief {
    fn render_text(&self) -> String {
        let n_facts = self.raw_facts().count();
        let mut out = format!(
            "belief facts={n_facts} containers={} visited={} agents={}\n",
            self.containers().len(),
            self.visited().len(),
            self.agent_sightings().len()
        );
        for (f, stale) in self.raw_facts() {
            let _ = writeln!(
                out,
                "fact {} class={} at={} room={} t={} src={}{}",
                f.object,
                f.class,
                f.location,
                f.room,
                f.observed_at,
                f.source,
                if stale { " stale" } else { "" }
            );
        }
        for (id, c) in self.containers() {
            let flag = if c.open { "open" } else { "closed" };
            let _ = writeln!(out, "container {id} {flag} t={} src={}", c.observed_at, c.source);
        }
        for (room, t) in self.visited() {
            let _ = writeln!(out, "visited {room} t={t}");
        }
        for (id, a) in self.agent_sightings() {
            let held = a.held.as_ref().map_or("-", |h| h.as_str());
            let _ = writeln!(out, "agent {id} room={} held={held} t={} src={}", a.room, a.observed_at, a.source);
        }
        out
    }
}

impl RenderText for Observation {
    fn render_text(&self) -> String {
        let mut out = format!("observation agent={} tick={} room={}\n", self.agent, self.tick, self.room);
        if let Some(h) = &self.held {
            let _ = writeln!(out, "held {} class={}", h.id, h.class);
        }
        for s in &self.agents_here {
            let held = s.held.as_ref().map_or("-", |h| h.as_str());
            let _ = writeln!(out, "agent {} held={held}", s.agent);
        }
        for (c, open) in &self.containers {
            let _ = writeln!(out, "container {c} {}", if *open { "open" } else { "closed" });
        }
        for o in &self.objects {
            let _ = writeln!(out, "object {} class={} at={}", o.id, o.class, o.location);
        }
        out
    }
}

impl RenderText for [HistoryRecord] {
    fn render_text(&self) -> String {
        let mut out = format!("history records={}\n", self.len());
        for r in self {
            let events: Vec<String> = r.events.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "t={} agent={} action={} events=[{}] belief=[{}]",
                r.tick,
                r.agent,
                r.action,
                events.join("; "),
                r.belief_digest
            );
        }
        out
    }
}
