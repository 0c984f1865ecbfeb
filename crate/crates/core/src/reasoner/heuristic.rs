use crate::coordination::{heuristic_allocate, heuristic_proposal};
use crate::summary::templated_digest;

use super::grammar::{render_allocation_response, render_proposal_response, render_summary_response};
use super::{Parsed, Payload, Reasoner, ReasonerError, ReasonerRequest, ReasonerResponse};

/// Deterministic rule-based backend. Never fails and never records transcripts.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicReasoner;

impl Reasoner for HeuristicReasoner {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn invoke(&self, request: &ReasonerRequest) -> Result<ReasonerResponse, ReasonerError> {
        let (raw_text, parsed) = match &request.payload {
            Payload::Propose(view) => {
                let p = heuristic_proposal(view);
                (render_proposal_response(&p), Parsed::Proposal(p))
            }
            Payload::Allocate(a) => {
                let (joint, _) = heuristic_allocate(&a.context, &a.goal, &a.progress, a.k)
                    .map_err(|e| ReasonerError::Transport(e.to_string()))?;
                (render_allocation_response(&joint), Parsed::Joint(joint))
            }
            Payload::Summarize(s) => {
                let text = templated_digest(&s.records, s.delta, s.lower, s.upper, &s.goal);
                (render_summary_response(&text), Parsed::Summary(text))
            }
        };
        Ok(ReasonerResponse {
            raw_text,
            parsed: Some(parsed),
            parse_error: None,
            degraded: false,
            latency: None,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }

    fn records_transcripts(&self) -> bool {
        false
    }
}
