//! Event records shared by every engine and by the exporters.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    Ball,
    P1,
    P2,
}

impl Body {
    pub fn as_str(self) -> &'static str {
        match self {
            Body::Ball => "ball",
            Body::P1 => "p1",
            Body::P2 => "p2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Impact with the lower (or only) plate.
    PlateHit,
    /// Impact with the upper plate of a two-plate system.
    UpperPlateHit,
    BallBall,
    /// Plate and both balls meet; no post state exists.
    Triple,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PlateHit => "plate_hit",
            EventKind::UpperPlateHit => "upper_plate_hit",
            EventKind::BallBall => "ball_ball",
            EventKind::Triple => "triple",
        }
    }
}

/// Pre/post velocity of one body taking part in an event. Triple events
/// carry `v_post = None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyImpact {
    pub body: Body,
    pub v_pre: f64,
    pub v_post: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionEvent {
    pub kind: EventKind,
    pub time: f64,
    /// Height at which the event happens.
    pub z: f64,
    pub plate_velocity: Option<f64>,
    pub impacts: Vec<BodyImpact>,
}

impl CollisionEvent {
    pub fn single(kind: EventKind, time: f64, z: f64, plate_velocity: f64, body: Body, v_pre: f64, v_post: f64) -> Self {
        Self {
            kind,
            time,
            z,
            plate_velocity: Some(plate_velocity),
            impacts: vec![BodyImpact { body, v_pre, v_post: Some(v_post) }],
        }
    }

    pub fn impact(&self, body: Body) -> Option<&BodyImpact> {
        self.impacts.iter().find(|i| i.body == body)
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// Plate and two massive balls met at `t`; the run stops there.
    TripleCollision { t: f64 },
    /// The massless lower ball was squeezed between plate and P2 at `t`;
    /// P2 continued alone.
    ZeroMassSingularity { t: f64 },
    /// Singular runs stop when time resolution at the contact is exhausted.
    ContactReached { t: f64 },
}

impl Outcome {
    pub fn is_singular(&self) -> bool {
        matches!(self, Outcome::TripleCollision { .. } | Outcome::ZeroMassSingularity { .. })
    }
}

/// Scenario identity, used to refuse mixing records from different setups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordMeta {
    pub model: String,
    pub period: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub meta: RecordMeta,
    pub events: Vec<CollisionEvent>,
    pub outcome: Outcome,
}

impl TrajectoryRecord {
    pub fn new(meta: RecordMeta) -> Self {
        Self { meta, events: Vec::new(), outcome: Outcome::Completed }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Post-collision speeds of every body in event order.
    pub fn speeds(&self) -> Vec<f64> {
        self.events
            .iter()
            .flat_map(|e| e.impacts.iter().filter_map(|i| i.v_post.map(f64::abs)))
            .collect()
    }

    /// Post-collision speeds at plate hits, the section used by the section
    /// maps.
    pub fn section_speeds(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::PlateHit)
            .flat_map(|e| e.impacts.iter().filter_map(|i| i.v_post.map(f64::abs)))
            .collect()
    }

    /// Events involving `body`, in order.
    pub fn events_of(&self, body: Body) -> impl Iterator<Item = &CollisionEvent> {
        self.events.iter().filter(move |e| e.impact(body).is_some())
    }

    pub fn last_time(&self) -> Option<f64> {
        self.events.last().map(|e| e.time)
    }
}

/// When a run stops: whichever limit is reached first.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StopRule {
    pub n_events: Option<usize>,
    /// Stop once event time reaches this value.
    pub horizon_time: Option<f64>,
    /// Stop once a post-collision speed exceeds this value.
    pub v_threshold: Option<f64>,
}

impl StopRule {
    pub fn events(n: usize) -> Self {
        Self { n_events: Some(n), ..Self::default() }
    }

    pub fn time(t: f64) -> Self {
        Self { horizon_time: Some(t), ..Self::default() }
    }

    pub fn speed(v: f64) -> Self {
        Self { v_threshold: Some(v), ..Self::default() }
    }

    pub fn is_set(&self) -> bool {
        self.n_events.is_some() || self.horizon_time.is_some() || self.v_threshold.is_some()
    }

    /// Which limit, if any, the state after `events` events has hit.
    pub fn reached(&self, events: usize, time: f64, speed: f64) -> Option<StopReason> {
        if self.n_events.is_some_and(|n| events >= n) {
            Some(StopReason::EventLimit)
        } else if self.horizon_time.is_some_and(|h| time >= h) {
            Some(StopReason::TimeReached)
        } else if self.v_threshold.is_some_and(|v| speed > v) {
            Some(StopReason::SpeedReached)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EventLimit,
    TimeReached,
    SpeedReached,
    /// The run ended on its own (contact or singularity).
    Terminated,
}
