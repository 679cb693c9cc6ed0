//! Deterministic synthetic manipulation environment: a point-mass
//! end-effector, one object, and a goal region inside the unit workspace
//! [0,1]^3. Three tasks (reach, push, pick_place) with a scripted expert
//! for data generation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatialplan::SpatialState;
use crate::util::{add3, clamp3, dist3, finite3, rng_from_seed, sub3, Vec3};

/// Per-step end-effector displacement limit (world units).
pub const DELTA_MAX: f64 = 0.05;
/// Attachment engages when the gripper closes within this distance.
pub const GRASP_RADIUS: f64 = 0.03;
/// Push contact: the object translates with the EE inside this distance.
pub const CONTACT_RADIUS: f64 = 0.04;
/// Object start jitter bound (Euclidean norm) applied at reset.
pub const JITTER_NORM: f64 = 0.05;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown task id `{0}`")]
    UnknownTask(String),
    #[error("invalid task spec: {0}")]
    InvalidTask(String),
    #[error("episode exhausted: step_count {0} reached max_steps {1}")]
    EpisodeExhausted(u32, u32),
    #[error("non-finite action component")]
    NonFiniteAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    Reach,
    Push,
    PickPlace,
}

impl TaskId {
    pub const ALL: [TaskId; 3] = [TaskId::Reach, TaskId::Push, TaskId::PickPlace];

    pub fn as_str(&self) -> &'static str {
        match self {
            TaskId::Reach => "reach",
            TaskId::Push => "push",
            TaskId::PickPlace => "pick_place",
        }
    }

    pub fn parse(s: &str) -> Result<TaskId, EnvError> {
        match s {
            "reach" => Ok(TaskId::Reach),
            "push" => Ok(TaskId::Push),
            "pick_place" => Ok(TaskId::PickPlace),
            other => Err(EnvError::UnknownTask(other.to_string())),
        }
    }

    /// Stable index into per-task embedding tables.
    pub fn index(&self) -> usize {
        match self {
            TaskId::Reach => 0,
            TaskId::Push => 1,
            TaskId::PickPlace => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: TaskId,
    pub object_start: Vec3,
    pub goal_region: GoalRegion,
    pub max_steps: u32,
    /// Square render resolution (pixels per side).
    pub resolution: u32,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        let in_unit = |v: Vec3| v.iter().all(|x| (0.0..=1.0).contains(x));
        if !in_unit(self.object_start) {
            return Err(EnvError::InvalidTask("object_start outside [0,1]^3".into()));
        }
        if !in_unit(self.goal_region.center) {
            return Err(EnvError::InvalidTask("goal center outside [0,1]^3".into()));
        }
        if self.goal_region.radius <= 0.0 {
            return Err(EnvError::InvalidTask("goal radius must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(EnvError::InvalidTask("max_steps must be positive".into()));
        }
        if self.resolution < 8 {
            return Err(EnvError::InvalidTask("resolution must be at least 8".into()));
        }
        Ok(())
    }
}

/// Built-in task table. For reach the object doubles as the goal marker, so
/// plans aimed at the object also solve the task.
pub fn builtin_task(id: TaskId, resolution: u32, max_steps: u32) -> TaskSpec {
    match id {
        TaskId::Reach => TaskSpec {
            task_id: id,
            object_start: [0.75, 0.55, 0.55],
            goal_region: GoalRegion { center: [0.75, 0.55, 0.55], radius: 0.05 },
            max_steps,
            resolution,
        },
        TaskId::Push => TaskSpec {
            task_id: id,
            object_start: [0.5, 0.5, 0.25],
            goal_region: GoalRegion { center: [0.8, 0.5, 0.25], radius: 0.05 },
            max_steps,
            resolution,
        },
        TaskId::PickPlace => TaskSpec {
            task_id: id,
            object_start: [0.5, 0.45, 0.3],
            goal_region: GoalRegion { center: [0.75, 0.6, 0.45], radius: 0.05 },
            max_steps,
            resolution,
        },
    }
}

/// Fixed EE start per task.
fn ee_start(id: TaskId) -> Vec3 {
    match id {
        TaskId::Reach => [0.15, 0.5, 0.5],
        TaskId::Push => [0.2, 0.5, 0.25],
        TaskId::PickPlace => [0.2, 0.5, 0.5],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub delta: Vec3,
    /// Gripper command in [-1, 1]; >= 0 means close.
    pub gripper: f64,
}

impl Action {
    pub const ZERO: Action = Action { delta: [0.0, 0.0, 0.0], gripper: -1.0 };

    pub fn new(delta: Vec3, gripper: f64) -> Action {
        Action { delta, gripper }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub ee_pos: Vec3,
    pub obj_pos: Vec3,
    pub gripper_closed: bool,
    pub attached: bool,
    pub step_count: u32,
    pub task: TaskSpec,
    pub rng_seed: u64,
}

/// Places the EE at the task start and the object at its jittered start.
/// Identical (task, seed) pairs produce bitwise-identical states.
pub fn reset(task: &TaskSpec, seed: u64) -> Result<EnvState, EnvError> {
    task.validate()?;
    let mut rng = rng_from_seed(seed);
    // Per-component uniform jitter bounded so the Euclidean norm stays <= JITTER_NORM.
    let c = JITTER_NORM / 3f64.sqrt();
    let jitter = [
        rng.gen_range(-c..=c),
        rng.gen_range(-c..=c),
        rng.gen_range(-c..=c),
    ];
    let obj_pos = clamp3(add3(task.object_start, jitter), 0.0, 1.0);
    Ok(EnvState {
        ee_pos: ee_start(task.task_id),
        obj_pos,
        gripper_closed: false,
        attached: false,
        step_count: 0,
        task: task.clone(),
        rng_seed: seed,
    })
}

/// One dynamics step. The EE integrates the clipped delta and is clamped to
/// the workspace; attached objects track the EE displacement exactly; in the
/// push task the object translates with the EE while inside CONTACT_RADIUS
/// (contact is evaluated before the EE moves, so an approach step does not
/// drag the object).
pub fn step(state: &EnvState, action: &Action) -> Result<EnvState, EnvError> {
    if state.step_count >= state.task.max_steps {
        return Err(EnvError::EpisodeExhausted(state.step_count, state.task.max_steps));
    }
    if !finite3(action.delta) || !action.gripper.is_finite() {
        return Err(EnvError::NonFiniteAction);
    }
    let mut next = state.clone();

    let delta = clamp3(action.delta, -DELTA_MAX, DELTA_MAX);
    let in_contact_before = dist3(state.obj_pos, state.ee_pos) <= CONTACT_RADIUS;

    let ee_new = clamp3(add3(state.ee_pos, delta), 0.0, 1.0);
    let disp = sub3(ee_new, state.ee_pos);
    next.ee_pos = ee_new;
    next.gripper_closed = action.gripper >= 0.0;

    if next.attached && action.gripper < 0.0 {
        next.attached = false;
    }
    if next.attached {
        next.obj_pos = clamp3(add3(state.obj_pos, disp), 0.0, 1.0);
    } else if state.task.task_id == TaskId::Push && in_contact_before {
        next.obj_pos = clamp3(add3(state.obj_pos, disp), 0.0, 1.0);
    }
    if !next.attached
        && action.gripper >= 0.0
        && dist3(next.obj_pos, next.ee_pos) <= GRASP_RADIUS
    {
        next.attached = true;
    }
    next.step_count += 1;
    Ok(next)
}

pub fn get_spatial_state(state: &EnvState) -> SpatialState {
    SpatialState::new(state.ee_pos, state.obj_pos)
}

pub fn check_success(state: &EnvState) -> bool {
    let goal = &state.task.goal_region;
    match state.task.task_id {
        TaskId::Reach => dist3(state.ee_pos, goal.center) <= goal.radius,
        TaskId::Push => dist3(state.obj_pos, goal.center) <= goal.radius,
        TaskId::PickPlace => {
            dist3(state.obj_pos, goal.center) <= goal.radius && !state.attached
        }
    }
}

/// Proportional controller with saturation: approach the object, then carry
/// or push it to the goal. Closes the gripper only for pick_place.
pub fn expert_action(state: &EnvState) -> Action {
    let toward = |target: Vec3, from: Vec3| -> Vec3 {
        clamp3(sub3(target, from), -DELTA_MAX, DELTA_MAX)
    };
    let goal = state.task.goal_region.center;
    match state.task.task_id {
        TaskId::Reach => Action::new(toward(state.obj_pos, state.ee_pos), -1.0),
        TaskId::Push => {
            let in_contact = dist3(state.obj_pos, state.ee_pos) <= CONTACT_RADIUS;
            let target = if in_contact { goal } else { state.obj_pos };
            Action::new(toward(target, state.ee_pos), -1.0)
        }
        TaskId::PickPlace => {
            if state.attached {
                if dist3(state.obj_pos, goal) <= state.task.goal_region.radius {
                    // Release in place; success requires an open gripper.
                    Action::new([0.0, 0.0, 0.0], -1.0)
                } else {
                    Action::new(toward(goal, state.ee_pos), 1.0)
                }
            } else {
                let d = dist3(state.obj_pos, state.ee_pos);
                let gripper = if d <= DELTA_MAX + GRASP_RADIUS { 1.0 } else { -1.0 };
                Action::new(toward(state.obj_pos, state.ee_pos), gripper)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// RGB raster with intensities in [0,1], stored row-major interleaved
/// (y, x, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub height: u32,
    pub width: u32,
    pub data: Vec<f32>,
}

impl Frame {
    pub fn filled(height: u32, width: u32, value: f32) -> Frame {
        Frame { height, width, data: vec![value; (height * width * 3) as usize] }
    }

    #[inline]
    pub fn get(&self, y: u32, x: u32, c: usize) -> f32 {
        self.data[((y * self.width + x) * 3) as usize + c]
    }

    #[inline]
    pub fn set(&mut self, y: u32, x: u32, c: usize, v: f32) {
        self.data[((y * self.width + x) * 3) as usize + c] = v;
    }

    pub fn set_rgb(&mut self, y: u32, x: u32, rgb: [f32; 3]) {
        for (c, v) in rgb.iter().enumerate() {
            self.set(y, x, c, *v);
        }
    }

    /// Per-pixel channel mean.
    pub fn grayscale(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|px| (f64::from(px[0]) + f64::from(px[1]) + f64::from(px[2])) / 3.0)
            .collect()
    }
}

const BACKGROUND: f32 = 0.05;

/// Marker brightness encodes the z coordinate so all three axes stay
/// observable in the 2D raster.
fn z_brightness(z: f64) -> f32 {
    (0.5 + 0.5 * z.clamp(0.0, 1.0)) as f32
}

fn to_px(v: f64, size: u32) -> i64 {
    (v.clamp(0.0, 1.0) * f64::from(size - 1)).round() as i64
}

/// World (x, y) to pixel (column, row); y points up on screen.
pub fn world_to_pixel(x: f64, y: f64, width: u32, height: u32) -> (i64, i64) {
    (to_px(x, width), to_px(1.0 - y, height))
}

/// Deterministic raster: goal as a blue ring, object as a filled red square,
/// EE as a green cross, drawn in that order.
pub fn render(state: &EnvState) -> Frame {
    let res = state.task.resolution;
    let (w, h) = (res, res);
    let mut frame = Frame::filled(h, w, BACKGROUND);

    // Goal ring.
    let goal = &state.task.goal_region;
    let (gx, gy) = world_to_pixel(goal.center[0], goal.center[1], w, h);
    let ring_r = (goal.radius * f64::from(w)).max(2.0);
    let gb = z_brightness(goal.center[2]);
    for y in 0..h {
        for x in 0..w {
            let d = (((i64::from(x) - gx).pow(2) + (i64::from(y) - gy).pow(2)) as f64).sqrt();
            if (d - ring_r).abs() <= 0.6 {
                frame.set_rgb(y, x, [BACKGROUND, BACKGROUND, gb]);
            }
        }
    }

    // Object: filled square.
    let half = (f64::from(w) * 0.05).round().max(1.0) as i64;
    let (ox, oy) = world_to_pixel(state.obj_pos[0], state.obj_pos[1], w, h);
    let ob = z_brightness(state.obj_pos[2]);
    for dy in -half..=half {
        for dx in -half..=half {
            let (x, y) = (ox + dx, oy + dy);
            if x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h) {
                frame.set_rgb(y as u32, x as u32, [ob, BACKGROUND, BACKGROUND]);
            }
        }
    }

    // EE: cross.
    let arm = half + 1;
    let (ex, ey) = world_to_pixel(state.ee_pos[0], state.ee_pos[1], w, h);
    let eb = z_brightness(state.ee_pos[2]);
    for d in -arm..=arm {
        for (x, y) in [(ex + d, ey), (ex, ey + d)] {
            if x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h) {
                frame.set_rgb(y as u32, x as u32, [BACKGROUND, eb, BACKGROUND]);
            }
        }
    }
    frame
}

/// Pixels whose red channel dominates: the object signature used by the
/// rule-based video validator.
pub fn object_pixel_count(frame: &Frame) -> usize {
    let mut n = 0;
    for px in frame.data.chunks_exact(3) {
        if px[0] > 0.25 && px[0] > px[1] + 0.05 && px[0] > px[2] + 0.05 {
            n += 1;
        }
    }
    n
}

/// Centroid of green-dominant pixels (the EE cross), if any.
pub fn ee_centroid(frame: &Frame) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for y in 0..frame.height {
        for x in 0..frame.width {
            let (r, g, b) = (frame.get(y, x, 0), frame.get(y, x, 1), frame.get(y, x, 2));
            if g > 0.25 && g > r + 0.05 && g > b + 0.05 {
                let wt = f64::from(g);
                sx += f64::from(x) * wt;
                sy += f64::from(y) * wt;
                sw += wt;
            }
        }
    }
    (sw > 0.0).then(|| (sx / sw, sy / sw))
}

// ---------------------------------------------------------------------------
// Environment interface for the control loop
// ---------------------------------------------------------------------------

/// What the closed-loop pipeline needs from an environment. Implemented by
/// [`SimEnv`] and by test harnesses that inject faults.
pub trait Environment {
    fn state(&self) -> &EnvState;
    fn step(&mut self, action: &Action) -> Result<(), EnvError>;

    fn render(&self) -> Frame {
        render(self.state())
    }
    fn spatial_state(&self) -> SpatialState {
        get_spatial_state(self.state())
    }
    fn succeeded(&self) -> bool {
        check_success(self.state())
    }
    fn steps_taken(&self) -> u32 {
        self.state().step_count
    }
    fn max_steps(&self) -> u32 {
        self.state().task.max_steps
    }
}

pub struct SimEnv {
    state: EnvState,
}

impl SimEnv {
    pub fn new(task: &TaskSpec, seed: u64) -> Result<SimEnv, EnvError> {
        Ok(SimEnv { state: reset(task, seed)? })
    }
}

impl Environment for SimEnv {
    fn state(&self) -> &EnvState {
        &self.state
    }

    fn step(&mut self, action: &Action) -> Result<(), EnvError> {
        self.state = step(&self.state, action)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::dist3;

    fn task(id: TaskId) -> TaskSpec {
        builtin_task(id, 32, 200)
    }

    #[test]
    fn reset_is_seed_deterministic() {
        let t = task(TaskId::Reach);
        let a = reset(&t, 0).unwrap();
        let b = reset(&t, 0).unwrap();
        assert_eq!(a, b);
        let c = reset(&t, 1).unwrap();
        assert_ne!(a.obj_pos, c.obj_pos);
    }

    #[test]
    fn reset_jitter_is_bounded() {
        let t = task(TaskId::Push);
        for seed in 0..50 {
            let s = reset(&t, seed).unwrap();
            assert!(dist3(s.obj_pos, t.object_start) <= JITTER_NORM + 1e-12);
        }
    }

    #[test]
    fn reset_initial_flags() {
        let s = reset(&task(TaskId::PickPlace), 7).unwrap();
        assert!(!s.attached);
        assert!(!s.gripper_closed);
        assert_eq!(s.step_count, 0);
    }

    #[test]
    fn zero_action_leaves_ee_unchanged() {
        let s = reset(&task(TaskId::Reach), 3).unwrap();
        let s2 = step(&s, &Action::new([0.0, 0.0, 0.0], -1.0)).unwrap();
        assert_eq!(s2.ee_pos, s.ee_pos);
        assert_eq!(s2.step_count, 1);
    }

    #[test]
    fn ee_clips_at_workspace_boundary() {
        let mut s = reset(&task(TaskId::Reach), 0).unwrap();
        s.ee_pos = [0.99, 0.5, 0.5];
        let s2 = step(&s, &Action::new([0.05, 0.0, 0.0], -1.0)).unwrap();
        assert_eq!(s2.ee_pos[0], 1.0);
    }

    #[test]
    fn delta_is_clipped_to_bounds() {
        let mut s = reset(&task(TaskId::Reach), 0).unwrap();
        s.ee_pos = [0.5, 0.5, 0.5];
        let s2 = step(&s, &Action::new([10.0, -10.0, 0.0], -1.0)).unwrap();
        assert!((s2.ee_pos[0] - 0.55).abs() < 1e-12);
        assert!((s2.ee_pos[1] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn attached_object_tracks_ee_exactly() {
        let mut s = reset(&task(TaskId::PickPlace), 0).unwrap();
        s.ee_pos = [0.5, 0.5, 0.5];
        s.obj_pos = [0.52, 0.5, 0.5];
        s.attached = true;
        s.gripper_closed = true;
        let s2 = step(&s, &Action::new([0.02, 0.0, 0.0], 1.0)).unwrap();
        assert!((s2.obj_pos[0] - 0.54).abs() < 1e-12);
        assert_eq!(s2.obj_pos[1], 0.5);
        assert!(s2.attached);
    }

    #[test]
    fn attachment_engages_within_grasp_radius() {
        let mut s = reset(&task(TaskId::PickPlace), 0).unwrap();
        s.ee_pos = [0.5, 0.5, 0.5];
        s.obj_pos = [0.52, 0.5, 0.5];
        let s2 = step(&s, &Action::new([0.0, 0.0, 0.0], 1.0)).unwrap();
        assert!(s2.attached);
        let s3 = step(&s2, &Action::new([0.0, 0.0, 0.0], -1.0)).unwrap();
        assert!(!s3.attached);
    }

    #[test]
    fn step_after_max_steps_errors() {
        let t = TaskSpec { max_steps: 1, ..task(TaskId::Reach) };
        let s = reset(&t, 0).unwrap();
        let s = step(&s, &Action::ZERO).unwrap();
        assert!(matches!(step(&s, &Action::ZERO), Err(EnvError::EpisodeExhausted(1, 1))));
    }

    #[test]
    fn success_rules() {
        let mut s = reset(&task(TaskId::Reach), 0).unwrap();
        s.ee_pos = s.task.goal_region.center;
        assert!(check_success(&s));

        let mut s = reset(&task(TaskId::Push), 0).unwrap();
        let r = s.task.goal_region.radius;
        s.obj_pos = add3(s.task.goal_region.center, [r + 0.01, 0.0, 0.0]);
        assert!(!check_success(&s));

        let mut s = reset(&task(TaskId::PickPlace), 0).unwrap();
        s.obj_pos = s.task.goal_region.center;
        s.attached = true;
        assert!(!check_success(&s));
        s.attached = false;
        assert!(check_success(&s));
    }

    #[test]
    fn expert_moves_toward_object() {
        let mut s = reset(&task(TaskId::Reach), 0).unwrap();
        s.ee_pos = [0.1, 0.5, 0.5];
        s.obj_pos = [0.9, 0.5, 0.5];
        let a = expert_action(&s);
        assert!(a.delta[0] > 0.0);
        assert!(a.delta.iter().all(|d| d.abs() <= DELTA_MAX + 1e-12));
    }

    fn rollout_expert(id: TaskId, seed: u64) -> (bool, u32) {
        let t = task(id);
        let mut s = reset(&t, seed).unwrap();
        while s.step_count < t.max_steps {
            if check_success(&s) {
                return (true, s.step_count);
            }
            let a = expert_action(&s);
            s = step(&s, &a).unwrap();
        }
        (check_success(&s), s.step_count)
    }

    #[test]
    fn expert_succeeds_on_reach_seed0() {
        let (ok, steps) = rollout_expert(TaskId::Reach, 0);
        assert!(ok);
        assert!(steps < 200);
    }

    #[test]
    fn expert_completeness_all_tasks() {
        for id in TaskId::ALL {
            let ok = (0..100).filter(|&s| rollout_expert(id, s).0).count();
            assert!(ok >= 95, "{}: {}/100 expert successes", id.as_str(), ok);
        }
    }

    #[test]
    fn workspace_closure_and_attachment_consistency() {
        let t = task(TaskId::PickPlace);
        let mut s = reset(&t, 11).unwrap();
        let mut rng = crate::util::rng_from_seed(5);
        for _ in 0..t.max_steps {
            let a = Action::new(
                [
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                    rng.gen_range(-0.1..0.1),
                ],
                rng.gen_range(-1.0..1.0),
            );
            s = step(&s, &a).unwrap();
            for v in s.ee_pos.iter().chain(s.obj_pos.iter()) {
                assert!((0.0..=1.0).contains(v));
            }
            if s.attached {
                assert!(dist3(s.obj_pos, s.ee_pos) <= GRASP_RADIUS + 1e-12);
            }
        }
    }

    #[test]
    fn render_is_deterministic_and_object_visible() {
        let s = reset(&task(TaskId::Push), 2).unwrap();
        let f1 = render(&s);
        let f2 = render(&s);
        assert_eq!(f1, f2);
        assert!(object_pixel_count(&f1) > 0);
        assert!(f1.data.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn z_changes_only_marker_brightness() {
        let mut a = reset(&task(TaskId::Reach), 0).unwrap();
        a.ee_pos = [0.3, 0.3, 0.2];
        let mut b = a.clone();
        b.ee_pos[2] = 0.9;
        let fa = render(&a);
        let fb = render(&b);
        let mut differing = 0;
        for y in 0..fa.height {
            for x in 0..fa.width {
                let pa = [fa.get(y, x, 0), fa.get(y, x, 1), fa.get(y, x, 2)];
                let pb = [fb.get(y, x, 0), fb.get(y, x, 1), fb.get(y, x, 2)];
                if pa != pb {
                    differing += 1;
                    // Only the green (EE) channel may change, and only upward
                    // since z increased.
                    assert_eq!(pa[0], pb[0]);
                    assert_eq!(pa[2], pb[2]);
                    assert!(pb[1] > pa[1]);
                }
            }
        }
        assert!(differing > 0);
    }

    #[test]
    fn ee_centroid_tracks_position() {
        let mut s = reset(&task(TaskId::Reach), 0).unwrap();
        s.ee_pos = [0.25, 0.5, 0.5];
        let (cx, _) = ee_centroid(&render(&s)).unwrap();
        s.ee_pos = [0.75, 0.5, 0.5];
        let (cx2, _) = ee_centroid(&render(&s)).unwrap();
        assert!(cx2 > cx + 5.0);
    }
}
