//! Spatial plan tables: ordered atomic subgoals (action type, sign direction
//! vector, distance) with a canonical text form, produced from the EE/object
//! offset by a deterministic rule-based oracle or an optional remote planner.

use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envsim::TaskId;
use crate::util::{finite3, sub3, Vec3};

/// Maximum subgoals per plan; the conditioning pads to this length.
pub const N_MAX: usize = 8;
/// Axis components below this magnitude are not worth a move subgoal.
pub const EPS_AXIS: f64 = 0.005;
/// Remote planner transport attempts before giving up.
pub const R_VLM: u32 = 3;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("non-finite spatial input")]
    NonFinite,
    #[error("line {line}: malformed plan line: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: direction component {value} outside {{-1, 0, 1}}")]
    DirectionRange { line: usize, value: i64 },
    #[error("line {line}: negative distance {value}")]
    NegativeDistance { line: usize, value: f64 },
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error("remote planner failed after {attempts} attempts: {last}")]
    Remote { attempts: u32, last: String },
    #[error("unparseable planner reply: {source}; raw reply: {raw:?}")]
    BadReply {
        #[source]
        source: Box<PlanError>,
        raw: String,
    },
}

/// End-effector position, object position, and their offset Δp = p_obj − p_ee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialState {
    pub p_ee: Vec3,
    pub p_obj: Vec3,
    pub delta_p: Vec3,
}

impl SpatialState {
    pub fn new(p_ee: Vec3, p_obj: Vec3) -> SpatialState {
        SpatialState { p_ee, p_obj, delta_p: sub3(p_obj, p_ee) }
    }
}

/// Relative offset p_obj − p_ee.
pub fn compute_offset(p_ee: Vec3, p_obj: Vec3) -> Result<Vec3, PlanError> {
    if !finite3(p_ee) || !finite3(p_obj) {
        return Err(PlanError::NonFinite);
    }
    Ok(sub3(p_obj, p_ee))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Move,
    Push,
    Grasp,
    Release,
    Press,
    Turn,
    Place,
}

impl ActionType {
    pub const ALL: [ActionType; 7] = [
        ActionType::Move,
        ActionType::Push,
        ActionType::Grasp,
        ActionType::Release,
        ActionType::Press,
        ActionType::Turn,
        ActionType::Place,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ActionType::Move => "move",
            ActionType::Push => "push",
            ActionType::Grasp => "grasp",
            ActionType::Release => "release",
            ActionType::Press => "press",
            ActionType::Turn => "turn",
            ActionType::Place => "place",
        }
    }

    pub fn parse(s: &str) -> Option<ActionType> {
        ActionType::ALL.iter().copied().find(|a| a.as_str() == s)
    }

    /// Stable index into the action-type embedding table.
    pub fn index(&self) -> usize {
        ActionType::ALL.iter().position(|a| a == self).unwrap()
    }

    /// Terminal subgoals end a plan and carry zero direction and distance.
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            ActionType::Push
                | ActionType::Grasp
                | ActionType::Release
                | ActionType::Press
                | ActionType::Place
        )
    }
}

/// One atomic plan step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subgoal {
    pub action_type: ActionType,
    /// Sign vector; components in {-1, 0, 1}.
    pub direction: [i8; 3],
    /// Non-negative distance in world units.
    pub distance: f64,
}

impl Subgoal {
    pub fn mov(direction: [i8; 3], distance: f64) -> Subgoal {
        Subgoal { action_type: ActionType::Move, direction, distance }
    }

    pub fn terminal(action_type: ActionType) -> Subgoal {
        Subgoal { action_type, direction: [0, 0, 0], distance: 0.0 }
    }

    fn validate(&self, line: usize) -> Result<(), PlanError> {
        for &c in &self.direction {
            if !(-1..=1).contains(&c) {
                return Err(PlanError::DirectionRange { line, value: i64::from(c) });
            }
        }
        if self.distance < 0.0 || !self.distance.is_finite() {
            return Err(PlanError::NegativeDistance { line, value: self.distance });
        }
        if self.action_type.is_terminal()
            && (self.direction != [0, 0, 0] || self.distance != 0.0)
        {
            return Err(PlanError::Invalid(format!(
                "terminal subgoal `{}` must carry zero direction and distance",
                self.action_type.as_str()
            )));
        }
        if self.action_type == ActionType::Move && self.direction == [0, 0, 0] {
            return Err(PlanError::Invalid("move requires a nonzero direction".into()));
        }
        Ok(())
    }
}

/// Ordered, validated list of subgoals: nonempty, at most N_MAX entries, at
/// most one terminal subgoal, and that one last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTable {
    subgoals: Vec<Subgoal>,
}

impl PlanTable {
    pub fn new(subgoals: Vec<Subgoal>) -> Result<PlanTable, PlanError> {
        if subgoals.is_empty() {
            return Err(PlanError::Invalid("plan must contain at least one subgoal".into()));
        }
        if subgoals.len() > N_MAX {
            return Err(PlanError::Invalid(format!(
                "plan has {} subgoals, max is {N_MAX}",
                subgoals.len()
            )));
        }
        for (i, g) in subgoals.iter().enumerate() {
            g.validate(i + 1)?;
            if g.action_type.is_terminal() && i + 1 != subgoals.len() {
                return Err(PlanError::Invalid(format!(
                    "terminal subgoal `{}` must be last",
                    g.action_type.as_str()
                )));
            }
        }
        Ok(PlanTable { subgoals })
    }

    pub fn subgoals(&self) -> &[Subgoal] {
        &self.subgoals
    }

    pub fn len(&self) -> usize {
        self.subgoals.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Net displacement if every move subgoal were executed exactly.
    pub fn net_displacement(&self) -> Vec3 {
        let mut d = [0.0; 3];
        for g in &self.subgoals {
            if g.action_type == ActionType::Move {
                for i in 0..3 {
                    d[i] += f64::from(g.direction[i]) * g.distance;
                }
            }
        }
        d
    }
}

impl fmt::Display for PlanTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_plan(self))
    }
}

/// The terminal subgoal each task ends with.
fn terminal_for_task(task_id: TaskId) -> Subgoal {
    match task_id {
        TaskId::Reach => Subgoal::terminal(ActionType::Press),
        TaskId::Push => Subgoal::terminal(ActionType::Push),
        TaskId::PickPlace => Subgoal::terminal(ActionType::Grasp),
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Rule-based planner: decompose Δp axis by axis in fixed x, y, z order,
/// emitting one move per axis whose magnitude exceeds EPS_AXIS, distances
/// rounded to two decimals, then append the task's terminal subgoal.
pub fn generate_plan(delta_p: Vec3, task_id: TaskId) -> Result<PlanTable, PlanError> {
    if !finite3(delta_p) {
        return Err(PlanError::NonFinite);
    }
    let mut subgoals = Vec::new();
    for axis in 0..3 {
        let d = delta_p[axis];
        if d.abs() > EPS_AXIS {
            let mut dir = [0i8; 3];
            dir[axis] = if d > 0.0 { 1 } else { -1 };
            subgoals.push(Subgoal::mov(dir, round2(d.abs())));
        }
    }
    subgoals.push(terminal_for_task(task_id));
    PlanTable::new(subgoals)
}

/// First stage of the two-stage replanning: rebuild the plan from the current
/// offset; the stale plan does not influence the result.
pub fn refine_plan(
    _old: &PlanTable,
    current: &SpatialState,
    task_id: TaskId,
) -> Result<PlanTable, PlanError> {
    generate_plan(current.delta_p, task_id)
}

/// Canonical text form: "Plan:" header, 1-indexed lines, two-decimal
/// distances, single spaces after commas. No trailing newline.
pub fn serialize_plan(plan: &PlanTable) -> String {
    let mut out = String::from("Plan:");
    for (i, g) in plan.subgoals().iter().enumerate() {
        out.push_str(&format!(
            "\n{}. {} [{}, {}, {}] [{:.2}]",
            i + 1,
            g.action_type.as_str(),
            g.direction[0],
            g.direction[1],
            g.direction[2],
            g.distance
        ));
    }
    out
}

/// Parses the line grammar `<index>. <action> [dx, dy, dz] [<distance>]`,
/// tolerating arbitrary whitespace, blank lines, and an optional "Plan:"
/// header. Indices must run 1..n.
pub fn parse_plan(text: &str) -> Result<PlanTable, PlanError> {
    // Lazily compiling per call would also do at this scale, but the parser
    // sits inside the replanning loop, so keep the regex static.
    use std::sync::OnceLock;
    static LINE_RE: OnceLock<Regex> = OnceLock::new();
    let re = LINE_RE.get_or_init(|| {
        Regex::new(
            r"^\s*(\d+)\s*\.\s*([A-Za-z_]+)\s*\[\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*\]\s*\[\s*([^\]\s]+)\s*\]\s*$",
        )
        .expect("plan line regex")
    });

    let mut subgoals = Vec::new();
    let mut expected_index = 1usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if subgoals.is_empty() && expected_index == 1 && trimmed.eq_ignore_ascii_case("plan:") {
            continue;
        }
        let caps = re.captures(trimmed).ok_or_else(|| PlanError::Parse {
            line,
            msg: format!("expected `<index>. <action> [dx, dy, dz] [<distance>]`, got {trimmed:?}"),
        })?;

        let index: usize = caps[1].parse().map_err(|_| PlanError::Parse {
            line,
            msg: format!("bad index {:?}", &caps[1]),
        })?;
        if index != expected_index {
            return Err(PlanError::Parse {
                line,
                msg: format!("expected index {expected_index}, got {index}"),
            });
        }
        expected_index += 1;

        let action = ActionType::parse(&caps[2].to_ascii_lowercase()).ok_or_else(|| {
            PlanError::Parse { line, msg: format!("unknown action {:?}", &caps[2]) }
        })?;

        let mut direction = [0i8; 3];
        for (slot, cap) in direction.iter_mut().zip(3..6) {
            let v: i64 = caps[cap].parse().map_err(|_| PlanError::Parse {
                line,
                msg: format!("bad direction component {:?}", &caps[cap]),
            })?;
            if !(-1..=1).contains(&v) {
                return Err(PlanError::DirectionRange { line, value: v });
            }
            *slot = v as i8;
        }

        let distance: f64 = caps[6].parse().map_err(|_| PlanError::Parse {
            line,
            msg: format!("bad distance {:?}", &caps[6]),
        })?;
        if distance < 0.0 {
            return Err(PlanError::NegativeDistance { line, value: distance });
        }

        let g = Subgoal { action_type: action, direction, distance };
        g.validate(line)?;
        subgoals.push(g);
    }
    PlanTable::new(subgoals)
}

// ---------------------------------------------------------------------------
// Remote planner
// ---------------------------------------------------------------------------

/// Direction sign semantics advertised to the remote planner.
pub const DIRECTION_SEMANTICS: &str = "x: right-/left+, y: up+/down-, z: forward-/back+";

/// Structured prompt for plan generation: fixed grammar, explicit direction
/// semantics, no free-form scene description.
pub fn build_plan_prompt(delta_p: Vec3, task_id: TaskId) -> String {
    format!(
        "You control a robot end-effector. Task: {task}.\n\
         The offset from the end-effector to the target object is \
         dp = [{dx:.4}, {dy:.4}, {dz:.4}] (meters).\n\
         Direction semantics: {sem}.\n\
         Respond with a numbered multi-step plan and nothing else, one line per \
         subgoal, in exactly this format:\n\
         Plan:\n\
         1. move [-1, 0, 0] [0.19]\n\
         2. move [0, 0, -1] [0.21]\n\
         3. push [0, 0, 0] [0.00]\n\
         Allowed actions: move, push, grasp, release, press, turn, place. \
         Direction components must be -1, 0, or 1; distances are positive floats \
         in meters with two decimals.",
        task = task_id.as_str(),
        dx = delta_p[0],
        dy = delta_p[1],
        dz = delta_p[2],
        sem = DIRECTION_SEMANTICS,
    )
}

/// Transport behind the remote planner; lets tests substitute canned replies.
pub trait PlanTransport {
    fn complete(&mut self, prompt: &str, model: &str) -> Result<String, String>;
}

/// Remote plan oracle: builds the structured prompt, retries the transport,
/// and parses the reply through the strict grammar.
pub struct PlanOracleClient<T: PlanTransport> {
    pub transport: T,
    pub model: String,
    pub retries: u32,
}

impl<T: PlanTransport> PlanOracleClient<T> {
    pub fn new(transport: T, model: impl Into<String>) -> Self {
        PlanOracleClient { transport, model: model.into(), retries: R_VLM }
    }

    pub fn generate_plan(
        &mut self,
        delta_p: Vec3,
        task_id: TaskId,
    ) -> Result<PlanTable, PlanError> {
        let prompt = build_plan_prompt(delta_p, task_id);
        let mut last_err = String::new();
        for _ in 0..self.retries.max(1) {
            match self.transport.complete(&prompt, &self.model) {
                Ok(reply) => {
                    return parse_plan(&reply).map_err(|e| PlanError::BadReply {
                        source: Box::new(e),
                        raw: reply,
                    });
                }
                Err(e) => last_err = e,
            }
        }
        Err(PlanError::Remote { attempts: self.retries.max(1), last: last_err })
    }
}

/// Blocking HTTP transport speaking `POST <endpoint>` with a JSON body
/// `{"prompt": ..., "model": ...}`; the response body is the plain-text plan.
pub struct HttpTransport {
    pub endpoint: String,
    pub timeout: std::time::Duration,
}

impl HttpTransport {
    pub fn from_env() -> Option<HttpTransport> {
        let endpoint = std::env::var("PLANVID_VLM_ENDPOINT").ok()?;
        let timeout = std::env::var("PLANVID_VLM_TIMEOUT_S")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(30u64);
        Some(HttpTransport { endpoint, timeout: std::time::Duration::from_secs(timeout) })
    }
}

impl PlanTransport for HttpTransport {
    fn complete(&mut self, prompt: &str, model: &str) -> Result<String, String> {
        let body = serde_json::json!({ "prompt": prompt, "model": model }).to_string();
        http_post_text(&self.endpoint, &body, self.timeout)
    }
}

/// Minimal HTTP/1.1 POST for plain-text replies on http:// endpoints. The
/// remote planner is optional tooling, so this avoids pulling an async stack
/// into the build.
fn http_post_text(
    endpoint: &str,
    json_body: &str,
    timeout: std::time::Duration,
) -> Result<String, String> {
    use std::io::{Read, Write};
    use std::net::TcpStream;

    let rest = endpoint
        .strip_prefix("http://")
        .ok_or_else(|| format!("unsupported endpoint {endpoint:?}; expected http://"))?;
    let (host_port, path) = match rest.find('/') {
        Some(i) => (&rest[..i], &rest[i..]),
        None => (rest, "/"),
    };
    let addr = if host_port.contains(':') {
        host_port.to_string()
    } else {
        format!("{host_port}:80")
    };

    let mut stream = TcpStream::connect(&addr).map_err(|e| format!("connect {addr}: {e}"))?;
    stream.set_read_timeout(Some(timeout)).map_err(|e| e.to_string())?;
    stream.set_write_timeout(Some(timeout)).map_err(|e| e.to_string())?;

    let request = format!(
        "POST {path} HTTP/1.1\r\nHost: {host_port}\r\nContent-Type: application/json\r\n\
         Content-Length: {}\r\nConnection: close\r\n\r\n{json_body}",
        json_body.len()
    );
    stream.write_all(request.as_bytes()).map_err(|e| format!("write: {e}"))?;

    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).map_err(|e| format!("read: {e}"))?;
    let text = String::from_utf8_lossy(&raw);
    let (head, body) = text
        .split_once("\r\n\r\n")
        .ok_or_else(|| "malformed HTTP response".to_string())?;
    let status = head.lines().next().unwrap_or_default();
    if !status.contains(" 200") {
        return Err(format!("HTTP error: {status}"));
    }
    Ok(body.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The canonical three-subgoal plan text used throughout the tests.
    pub const PLAN_TEXT: &str =
        "Plan:\n1. move [-1, 0, 0] [0.19]\n2. move [0, 0, -1] [0.21]\n3. push [0, 0, 0] [0.00]";

    fn plan3() -> PlanTable {
        PlanTable::new(vec![
            Subgoal::mov([-1, 0, 0], 0.19),
            Subgoal::mov([0, 0, -1], 0.21),
            Subgoal::terminal(ActionType::Push),
        ])
        .unwrap()
    }

    #[test]
    fn compute_offset_cases() {
        assert_eq!(compute_offset([0.0; 3], [1.0, 2.0, 3.0]).unwrap(), [1.0, 2.0, 3.0]);
        assert_eq!(compute_offset([0.4, 0.2, 0.1], [0.4, 0.2, 0.1]).unwrap(), [0.0; 3]);
        let d = compute_offset([0.5, 0.1, 0.9], [0.2, 0.1, 0.3]).unwrap();
        assert!((d[0] + 0.3).abs() < 1e-12);
        assert_eq!(d[1], 0.0);
        assert!((d[2] + 0.6).abs() < 1e-12);
        assert!(compute_offset([f64::NAN, 0.0, 0.0], [0.0; 3]).is_err());
    }

    #[test]
    fn generate_matches_canonical_listing() {
        let p = generate_plan([-0.19, 0.0, -0.21], TaskId::Push).unwrap();
        assert_eq!(p, plan3());
        assert_eq!(serialize_plan(&p), PLAN_TEXT);
    }

    #[test]
    fn generate_zero_offset_is_terminal_only() {
        let p = generate_plan([0.0; 3], TaskId::Push).unwrap();
        assert_eq!(p.subgoals(), &[Subgoal::terminal(ActionType::Push)]);
    }

    #[test]
    fn generate_below_axis_threshold() {
        let p = generate_plan([0.004, 0.0, 0.0], TaskId::Reach).unwrap();
        assert_eq!(p.subgoals(), &[Subgoal::terminal(ActionType::Press)]);
    }

    #[test]
    fn parse_canonical_listing() {
        let p = parse_plan(PLAN_TEXT).unwrap();
        assert_eq!(p, plan3());
    }

    #[test]
    fn parse_rejects_out_of_range_direction() {
        let err = parse_plan("1. move [2, 0, 0] [0.10]").unwrap_err();
        assert!(matches!(err, PlanError::DirectionRange { line: 1, value: 2 }));
    }

    #[test]
    fn parse_rejects_negative_distance() {
        let err = parse_plan("1. move [1, 0, 0] [-0.10]").unwrap_err();
        assert!(matches!(err, PlanError::NegativeDistance { line: 1, .. }));
    }

    #[test]
    fn parse_rejects_nonconsecutive_indices() {
        assert!(parse_plan("1. move [1, 0, 0] [0.10]\n3. push [0, 0, 0] [0.00]").is_err());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_plan("Plan:\n1. move [1, 0, 0] [0.10]\n2. wiggle [0, 0, 0] [0.00]")
            .unwrap_err();
        match err {
            PlanError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_is_whitespace_tolerant() {
        let text = "  Plan: \n\n 1 .  move  [ -1 ,0, 0 ]   [0.19] \n2. move [0,0,-1] [0.21]\n 3. push [0, 0, 0] [0.00]";
        assert_eq!(parse_plan(text).unwrap(), plan3());
    }

    #[test]
    fn terminal_must_be_last() {
        assert!(parse_plan("1. push [0, 0, 0] [0.00]\n2. move [1, 0, 0] [0.10]").is_err());
    }

    #[test]
    fn serialize_minimal_plan() {
        let p = PlanTable::new(vec![Subgoal::terminal(ActionType::Push)]).unwrap();
        assert_eq!(serialize_plan(&p), "Plan:\n1. push [0, 0, 0] [0.00]");
    }

    #[test]
    fn refine_delegates_to_generate() {
        let stale = plan3();
        let st = SpatialState::new([0.2, 0.5, 0.5], [0.3, 0.5, 0.5]);
        let refined = refine_plan(&stale, &st, TaskId::Push).unwrap();
        assert_eq!(refined, generate_plan(st.delta_p, TaskId::Push).unwrap());
        assert_eq!(
            refined.subgoals(),
            &[Subgoal::mov([1, 0, 0], 0.10), Subgoal::terminal(ActionType::Push)]
        );
    }

    #[test]
    fn oracle_soundness_bound() {
        let mut rng = crate::util::rng_from_seed(42);
        use rand::Rng;
        for _ in 0..500 {
            let ee: Vec3 = [rng.gen(), rng.gen(), rng.gen()];
            let obj: Vec3 = [rng.gen(), rng.gen(), rng.gen()];
            let plan = generate_plan(sub3(obj, ee), TaskId::Push).unwrap();
            let landed = crate::util::add3(ee, plan.net_displacement());
            let err = crate::util::dist3(landed, obj);
            assert!(err <= 3f64.sqrt() * (EPS_AXIS + 0.005) + 1e-12, "err {err}");
            assert!(plan.len() <= N_MAX);
        }
    }

    struct MockTransport {
        replies: Vec<Result<String, String>>,
        calls: usize,
    }

    impl PlanTransport for MockTransport {
        fn complete(&mut self, _prompt: &str, _model: &str) -> Result<String, String> {
            let r = self.replies[self.calls.min(self.replies.len() - 1)].clone();
            self.calls += 1;
            r
        }
    }

    #[test]
    fn remote_parses_canonical_reply() {
        let mut client = PlanOracleClient::new(
            MockTransport { replies: vec![Ok(PLAN_TEXT.to_string())], calls: 0 },
            "test-model",
        );
        let p = client.generate_plan([-0.19, 0.0, -0.21], TaskId::Push).unwrap();
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn remote_rejects_freeform_reply() {
        let mut client = PlanOracleClient::new(
            MockTransport { replies: vec![Ok("I think you should move left".into())], calls: 0 },
            "test-model",
        );
        let err = client.generate_plan([0.1, 0.0, 0.0], TaskId::Push).unwrap_err();
        assert!(matches!(err, PlanError::BadReply { .. }));
    }

    #[test]
    fn remote_retries_then_succeeds() {
        let mut client = PlanOracleClient::new(
            MockTransport {
                replies: vec![
                    Err("timeout".into()),
                    Err("connection reset".into()),
                    Ok(PLAN_TEXT.to_string()),
                ],
                calls: 0,
            },
            "test-model",
        );
        let p = client.generate_plan([-0.19, 0.0, -0.21], TaskId::Push).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(client.transport.calls, 3);
    }

    #[test]
    fn remote_exhausts_retries() {
        let mut client = PlanOracleClient::new(
            MockTransport { replies: vec![Err("boom".into())], calls: 0 },
            "test-model",
        );
        let err = client.generate_plan([0.1, 0.0, 0.0], TaskId::Push).unwrap_err();
        match err {
            PlanError::Remote { attempts, .. } => assert_eq!(attempts, R_VLM),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(client.transport.calls, 3);
    }

    #[test]
    fn prompt_carries_semantics_and_grammar() {
        let prompt = build_plan_prompt([0.1, -0.2, 0.0], TaskId::Push);
        assert!(prompt.contains(DIRECTION_SEMANTICS));
        assert!(prompt.contains("move [-1, 0, 0] [0.19]"));
    }
}
