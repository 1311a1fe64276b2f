//! JSON-over-HTTP reasoner client.
//!
//! Wire contract: `POST <url>/decide` with body
//! `{"version": 1, "variant": "...", "payload": {...}, "goal": {...}}`;
//! reply `{"decision": ..., "rationale": "..."?}`. Any transport, timeout or
//! schema failure falls back to a safe local decision so an episode never
//! aborts because the gateway misbehaved.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geom::Cell;
use crate::priors::RelationVerdict;
use crate::reason::{
    fallback_decision, CtxObservation, Decision, Reasoner, ReasonerContext,
};

pub const WIRE_VERSION: u32 = 1;

/// Raw observation payloads are capped: grids larger than 64x64 cells are
/// summarized instead of shipped cell-by-cell.
const MAX_WIRE_CELLS: usize = 64 * 64;

/// Environment variable overriding the configured endpoint.
pub const REMOTE_URL_ENV: &str = "ROOMNAV_REMOTE_URL";

pub struct RemoteReasoner {
    url: String,
    agent: ureq::Agent,
    queries: std::sync::atomic::AtomicU64,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    version: u32,
    variant: &'a str,
    payload: Value,
    goal: Option<&'a crate::world::Goal>,
}

#[derive(Deserialize)]
struct WireReply {
    decision: Value,
    #[serde(default)]
    #[allow(dead_code)]
    rationale: Option<String>,
}

impl RemoteReasoner {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        RemoteReasoner {
            url: url.into(),
            agent: ureq::AgentBuilder::new()
                .timeout_connect(timeout)
                .timeout(timeout)
                .build(),
            queries: std::sync::atomic::AtomicU64::new(0),
        }
    }

    /// Endpoint from the environment, falling back to `configured`.
    pub fn endpoint_from_env(configured: Option<&str>) -> Option<String> {
        std::env::var(REMOTE_URL_ENV)
            .ok()
            .or_else(|| configured.map(|s| s.to_string()))
    }

    fn call(&self, ctx: &ReasonerContext) -> Result<Decision, String> {
        let goal = match ctx {
            ReasonerContext::EarlyStop { goal, .. } | ReasonerContext::RoomQuery { goal, .. } => {
                Some(goal)
            }
            _ => None,
        };
        let req = WireRequest {
            version: WIRE_VERSION,
            variant: ctx.variant_name(),
            payload: wire_payload(ctx),
            goal,
        };
        let body = serde_json::to_string(&req).map_err(|e| e.to_string())?;
        let url = format!("{}/decide", self.url.trim_end_matches('/'));
        let reply = self
            .agent
            .post(&url)
            .set("content-type", "application/json")
            .send_string(&body)
            .map_err(|e| format!("transport: {e}"))?;
        let reply: WireReply = serde_json::from_reader(reply.into_reader())
            .map_err(|e| format!("schema: {e}"))?;
        parse_decision(ctx, &reply.decision)
    }
}

impl Reasoner for RemoteReasoner {
    fn decide(&self, ctx: &ReasonerContext) -> Decision {
        self.queries
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        match self.call(ctx) {
            Ok(d) => d,
            Err(e) => {
                log::warn!(
                    "remote reasoner failed on {} ({e}); using fallback",
                    ctx.variant_name()
                );
                fallback_decision(ctx)
            }
        }
    }

    fn query_count(&self) -> u64 {
        self.queries.load(std::sync::atomic::Ordering::Relaxed)
    }
}

/// Context payload with oversized cell lists summarized.
fn wire_payload(ctx: &ReasonerContext) -> Value {
    let mut v = serde_json::to_value(ctx).expect("context serializes");
    if let Some(obj) = v.as_object_mut() {
        obj.remove("variant");
        if let Some(obs) = obj.get_mut("observation") {
            *obs = slim_observation(obs.take());
        }
    }
    v
}

fn slim_observation(v: Value) -> Value {
    let Ok(obs) = serde_json::from_value::<CtxObservation>(v.clone()) else {
        return v;
    };
    if obs.visible_cells.len() <= MAX_WIRE_CELLS {
        return v;
    }
    let bbox_min = Cell::new(
        obs.visible_cells.iter().map(|c| c.x).min().unwrap_or(0),
        obs.visible_cells.iter().map(|c| c.y).min().unwrap_or(0),
    );
    let bbox_max = Cell::new(
        obs.visible_cells.iter().map(|c| c.x).max().unwrap_or(0),
        obs.visible_cells.iter().map(|c| c.y).max().unwrap_or(0),
    );
    serde_json::json!({
        "origin": obs.origin,
        "visible_count": obs.visible_cells.len(),
        "visible_bbox": [bbox_min, bbox_max],
        "detections": obs.detections,
    })
}

fn parse_decision(ctx: &ReasonerContext, v: &Value) -> Result<Decision, String> {
    match ctx {
        ReasonerContext::EarlyStop { .. } => match v.as_str() {
            Some("switch") => Ok(Decision::EarlyStop(true)),
            Some("stay") => Ok(Decision::EarlyStop(false)),
            _ => Err(format!("bad early_stop decision {v}")),
        },
        ReasonerContext::RoomQuery { uncovered, .. } => {
            if v.as_str() == Some("exhausted") {
                return Ok(Decision::RoomChoice(None));
            }
            let id = v
                .as_u64()
                .ok_or_else(|| format!("bad room_query decision {v}"))? as u32;
            if uncovered.iter().any(|r| r.id == id) {
                Ok(Decision::RoomChoice(Some(id)))
            } else {
                Err(format!("room {id} is not an uncovered candidate"))
            }
        }
        ReasonerContext::RoomLabel { .. } => match v {
            Value::Null => Ok(Decision::RoomLabel(None)),
            Value::String(s) => Ok(Decision::RoomLabel(Some(s.clone()))),
            _ => Err(format!("bad room_label decision {v}")),
        },
        ReasonerContext::AttributeQuery { .. } => match v {
            Value::Null => Ok(Decision::Attribute(None)),
            Value::String(s) => Ok(Decision::Attribute(Some(s.clone()))),
            _ => Err(format!("bad attribute decision {v}")),
        },
        ReasonerContext::RelationQuery { .. } => match v.as_str() {
            Some("holds") => Ok(Decision::Relation(RelationVerdict::Holds)),
            Some("does_not_hold") => Ok(Decision::Relation(RelationVerdict::DoesNotHold)),
            Some("unsupported") => Ok(Decision::Relation(RelationVerdict::Unsupported)),
            _ => Err(format!("bad relation decision {v}")),
        },
    }
}
