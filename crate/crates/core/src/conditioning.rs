//! Composite global condition: a task token followed by encoded subgoal
//! tokens, padded to a fixed length with a learned null embedding. Each
//! subgoal embeds as MLP([e_act; e_dir; e_dis]) from two lookup tables and a
//! distance MLP; the flattened, mask-applied token block is what the video
//! denoiser's feature-wise modulation heads consume.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::envsim::TaskId;
use crate::nn::layers::{linear_backward, linear_forward, silu_backward, silu_forward};
use crate::nn::store::{Handle, Init, ParamStore};
use crate::spatialplan::{ActionType, PlanTable, Subgoal};

pub const N_ACTION_TYPES: usize = 7;
pub const N_DIRECTION_BINS: usize = 27;

#[derive(Debug, Error)]
pub enum CondError {
    #[error("direction component {0} outside {{-1, 0, 1}}")]
    DirectionRange(i64),
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("plan has {0} subgoals but capacity is {1}")]
    Capacity(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionConfig {
    /// Embedding width d.
    pub embed_dim: usize,
    pub n_tasks: usize,
    /// Maximum subgoal tokens; plans are padded to this length.
    pub n_max: usize,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        ConditionConfig { embed_dim: 16, n_tasks: 3, n_max: crate::spatialplan::N_MAX }
    }
}

impl ConditionConfig {
    /// Length of the flattened condition: task token plus n_max subgoal slots.
    pub fn flat_len(&self) -> usize {
        (1 + self.n_max) * self.embed_dim
    }
}

/// Task token plus padded subgoal embeddings with a validity mask. Token 0 is
/// always real.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalCondition {
    pub tokens: Vec<f64>,
    pub mask: Vec<bool>,
    pub embed_dim: usize,
}

/// Maps a sign vector to its bin: (vx+1)*9 + (vy+1)*3 + (vz+1).
pub fn discretize_direction(v: [i8; 3]) -> Result<usize, CondError> {
    for &c in &v {
        if !(-1..=1).contains(&c) {
            return Err(CondError::DirectionRange(i64::from(c)));
        }
    }
    Ok(((v[0] + 1) as usize) * 9 + ((v[1] + 1) as usize) * 3 + (v[2] + 1) as usize)
}

/// Parameter layout of the condition encoder inside a shared store.
#[derive(Debug, Clone)]
pub struct ConditionEncoder {
    pub cfg: ConditionConfig,
    action_table: Handle,
    dir_table: Handle,
    dist_w1: Handle,
    dist_b1: Handle,
    dist_w2: Handle,
    dist_b2: Handle,
    sub_w1: Handle,
    sub_b1: Handle,
    sub_w2: Handle,
    sub_b2: Handle,
    task_table: Handle,
    pad_embed: Handle,
}

/// Cache for one encoded subgoal, enough to run the backward pass.
#[derive(Debug, Clone)]
struct SubgoalCache {
    act_idx: usize,
    dir_idx: usize,
    distance: f64,
    dist_pre1: Vec<f64>,
    dist_h: Vec<f64>,
    concat: Vec<f64>,
    sub_pre1: Vec<f64>,
    sub_h: Vec<f64>,
}

/// Cache for a full condition encoding.
#[derive(Debug, Clone)]
pub struct CondCache {
    task_idx: usize,
    subs: Vec<SubgoalCache>,
    mask: Vec<bool>,
}

impl ConditionEncoder {
    pub fn register(
        store: &mut ParamStore,
        cfg: ConditionConfig,
        rng: &mut ChaCha8Rng,
    ) -> ConditionEncoder {
        let d = cfg.embed_dim;
        assert!(d >= 4, "embed_dim must be at least 4");
        assert!(cfg.n_max >= 1);
        ConditionEncoder {
            cfg,
            action_table: store.add("cond.action_table", &[N_ACTION_TYPES, d], Init::Normal(0.5), rng),
            dir_table: store.add("cond.dir_table", &[N_DIRECTION_BINS, d], Init::Normal(0.5), rng),
            dist_w1: store.add("cond.dist.w1", &[d, 1], Init::FanIn(1), rng),
            dist_b1: store.add("cond.dist.b1", &[d], Init::Zero, rng),
            dist_w2: store.add("cond.dist.w2", &[d, d], Init::FanIn(d), rng),
            dist_b2: store.add("cond.dist.b2", &[d], Init::Zero, rng),
            sub_w1: store.add("cond.sub.w1", &[d, 3 * d], Init::FanIn(3 * d), rng),
            sub_b1: store.add("cond.sub.b1", &[d], Init::Zero, rng),
            sub_w2: store.add("cond.sub.w2", &[d, d], Init::FanIn(d), rng),
            sub_b2: store.add("cond.sub.b2", &[d], Init::Zero, rng),
            task_table: store.add("cond.task_table", &[cfg.n_tasks, d], Init::Normal(0.5), rng),
            pad_embed: store.add("cond.pad_embed", &[d], Init::Normal(0.5), rng),
        }
    }

    /// Row lookup in the action-type table.
    pub fn embed_action_type(&self, params: &[f64], t: ActionType) -> Vec<f64> {
        let d = self.cfg.embed_dim;
        let table = self.action_table.of(params);
        table[t.index() * d..(t.index() + 1) * d].to_vec()
    }

    /// Row lookup in the direction-bin table.
    pub fn embed_direction(&self, params: &[f64], v: [i8; 3]) -> Result<Vec<f64>, CondError> {
        let d = self.cfg.embed_dim;
        let idx = discretize_direction(v)?;
        let table = self.dir_table.of(params);
        Ok(table[idx * d..(idx + 1) * d].to_vec())
    }

    /// Two-layer MLP (1 -> d -> d) over the distance scalar.
    pub fn embed_distance(&self, params: &[f64], s: f64) -> Result<Vec<f64>, CondError> {
        if s < 0.0 || !s.is_finite() {
            return Err(CondError::NegativeDistance(s));
        }
        let (e, _, _) = self.distance_forward(params, s);
        Ok(e)
    }

    fn distance_forward(&self, params: &[f64], s: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.cfg.embed_dim;
        let pre1 = linear_forward(&[s], self.dist_w1.of(params), self.dist_b1.of(params), d);
        let h = silu_forward(&pre1);
        let e = linear_forward(&h, self.dist_w2.of(params), self.dist_b2.of(params), d);
        (e, pre1, h)
    }

    /// Combined subgoal embedding: MLP over [e_act; e_dir; e_dis].
    pub fn embed_subgoal(&self, params: &[f64], g: &Subgoal) -> Result<Vec<f64>, CondError> {
        let (e, _) = self.subgoal_forward(params, g)?;
        Ok(e)
    }

    fn subgoal_forward(
        &self,
        params: &[f64],
        g: &Subgoal,
    ) -> Result<(Vec<f64>, SubgoalCache), CondError> {
        let d = self.cfg.embed_dim;
        let act_idx = g.action_type.index();
        let dir_idx = discretize_direction(g.direction)?;
        if g.distance < 0.0 || !g.distance.is_finite() {
            return Err(CondError::NegativeDistance(g.distance));
        }
        let e_act = &self.action_table.of(params)[act_idx * d..(act_idx + 1) * d];
        let e_dir = &self.dir_table.of(params)[dir_idx * d..(dir_idx + 1) * d];
        let (e_dis, dist_pre1, dist_h) = self.distance_forward(params, g.distance);

        let mut concat = Vec::with_capacity(3 * d);
        concat.extend_from_slice(e_act);
        concat.extend_from_slice(e_dir);
        concat.extend_from_slice(&e_dis);

        let sub_pre1 = linear_forward(&concat, self.sub_w1.of(params), self.sub_b1.of(params), d);
        let sub_h = silu_forward(&sub_pre1);
        let e = linear_forward(&sub_h, self.sub_w2.of(params), self.sub_b2.of(params), d);
        let cache = SubgoalCache {
            act_idx,
            dir_idx,
            distance: g.distance,
            dist_pre1,
            dist_h,
            concat,
            sub_pre1,
            sub_h,
        };
        Ok((e, cache))
    }

    /// Row lookup in the per-task table standing in for a text encoder.
    pub fn embed_task(&self, params: &[f64], task_id: TaskId) -> Vec<f64> {
        let d = self.cfg.embed_dim;
        let row = task_id.index();
        assert!(row < self.cfg.n_tasks, "task index out of range");
        self.task_table.of(params)[row * d..(row + 1) * d].to_vec()
    }

    /// Assembles [z_task; e_1; ..; e_n; pad; ..] with the validity mask.
    pub fn build_global_condition(
        &self,
        params: &[f64],
        z_task: &[f64],
        subgoal_embeds: &[Vec<f64>],
    ) -> Result<GlobalCondition, CondError> {
        let d = self.cfg.embed_dim;
        assert_eq!(z_task.len(), d);
        if subgoal_embeds.len() > self.cfg.n_max {
            return Err(CondError::Capacity(subgoal_embeds.len(), self.cfg.n_max));
        }
        let pad = self.pad_embed.of(params);
        let mut tokens = Vec::with_capacity(self.cfg.flat_len());
        let mut mask = Vec::with_capacity(1 + self.cfg.n_max);
        tokens.extend_from_slice(z_task);
        mask.push(true);
        for e in subgoal_embeds {
            assert_eq!(e.len(), d);
            tokens.extend_from_slice(e);
            mask.push(true);
        }
        for _ in subgoal_embeds.len()..self.cfg.n_max {
            tokens.extend_from_slice(pad);
            mask.push(false);
        }
        Ok(GlobalCondition { tokens, mask, embed_dim: d })
    }

    /// Encode a whole plan for a task; the cache supports the backward pass.
    pub fn encode(
        &self,
        params: &[f64],
        task_id: TaskId,
        plan: &PlanTable,
    ) -> Result<(GlobalCondition, CondCache), CondError> {
        let z_task = self.embed_task(params, task_id);
        let mut embeds = Vec::new();
        let mut subs = Vec::new();
        for g in plan.subgoals() {
            let (e, cache) = self.subgoal_forward(params, g)?;
            embeds.push(e);
            subs.push(cache);
        }
        let cond = self.build_global_condition(params, &z_task, &embeds)?;
        let cache = CondCache { task_idx: task_id.index(), subs, mask: cond.mask.clone() };
        Ok((cond, cache))
    }

    /// Flatten with the mask applied: padded slots always read the learned
    /// pad embedding, so stale contents in padded token slots cannot leak.
    pub fn flatten_masked(&self, params: &[f64], cond: &GlobalCondition) -> Vec<f64> {
        let d = self.cfg.embed_dim;
        let pad = self.pad_embed.of(params);
        let mut out = Vec::with_capacity(self.cfg.flat_len());
        for (i, &real) in cond.mask.iter().enumerate() {
            if real {
                out.extend_from_slice(&cond.tokens[i * d..(i + 1) * d]);
            } else {
                out.extend_from_slice(pad);
            }
        }
        out
    }

    /// Backpropagate a gradient on the flattened masked condition into every
    /// table row and MLP weight that produced it.
    pub fn encode_backward(
        &self,
        params: &[f64],
        cache: &CondCache,
        d_flat: &[f64],
        grads: &mut [f64],
    ) {
        let d = self.cfg.embed_dim;
        assert_eq!(d_flat.len(), self.cfg.flat_len());

        // Task token.
        let g_task = &d_flat[..d];
        let task_row =
            &mut self.task_table.of_mut(grads)[cache.task_idx * d..(cache.task_idx + 1) * d];
        for (gr, gv) in task_row.iter_mut().zip(g_task) {
            *gr += gv;
        }

        // Subgoal tokens and pad slots.
        for (slot, &real) in cache.mask.iter().enumerate().skip(1) {
            let g_tok = &d_flat[slot * d..(slot + 1) * d];
            if real {
                self.subgoal_backward(params, &cache.subs[slot - 1], g_tok, grads);
            } else {
                let pad_g = self.pad_embed.of_mut(grads);
                for (gr, gv) in pad_g.iter_mut().zip(g_tok) {
                    *gr += gv;
                }
            }
        }
    }

    fn subgoal_backward(
        &self,
        params: &[f64],
        cache: &SubgoalCache,
        d_out: &[f64],
        grads: &mut [f64],
    ) {
        let d = self.cfg.embed_dim;

        // Output linear of the subgoal MLP.
        let mut d_sub_h = vec![0.0; d];
        {
            let mut dw_buf = vec![0.0; self.sub_w2.len];
            let mut db_buf = vec![0.0; self.sub_b2.len];
            linear_backward(
                &cache.sub_h,
                self.sub_w2.of(params),
                d_out,
                &mut dw_buf,
                &mut db_buf,
                &mut d_sub_h,
            );
            accumulate(self.sub_w2.of_mut(grads), &dw_buf);
            accumulate(self.sub_b2.of_mut(grads), &db_buf);
        }
        let d_sub_pre1 = silu_backward(&cache.sub_pre1, &d_sub_h);

        // Input linear of the subgoal MLP -> gradient on the concat vector.
        let mut d_concat = vec![0.0; 3 * d];
        {
            let mut dw_buf = vec![0.0; self.sub_w1.len];
            let mut db_buf = vec![0.0; self.sub_b1.len];
            linear_backward(
                &cache.concat,
                self.sub_w1.of(params),
                &d_sub_pre1,
                &mut dw_buf,
                &mut db_buf,
                &mut d_concat,
            );
            accumulate(self.sub_w1.of_mut(grads), &dw_buf);
            accumulate(self.sub_b1.of_mut(grads), &db_buf);
        }

        // Action and direction table rows.
        let act_row =
            &mut self.action_table.of_mut(grads)[cache.act_idx * d..(cache.act_idx + 1) * d];
        for (gr, gv) in act_row.iter_mut().zip(&d_concat[..d]) {
            *gr += gv;
        }
        let dir_row = &mut self.dir_table.of_mut(grads)[cache.dir_idx * d..(cache.dir_idx + 1) * d];
        for (gr, gv) in dir_row.iter_mut().zip(&d_concat[d..2 * d]) {
            *gr += gv;
        }

        // Distance MLP.
        let d_e_dis = &d_concat[2 * d..];
        let mut d_dist_h = vec![0.0; d];
        {
            let mut dw_buf = vec![0.0; self.dist_w2.len];
            let mut db_buf = vec![0.0; self.dist_b2.len];
            linear_backward(
                &cache.dist_h,
                self.dist_w2.of(params),
                d_e_dis,
                &mut dw_buf,
                &mut db_buf,
                &mut d_dist_h,
            );
            accumulate(self.dist_w2.of_mut(grads), &dw_buf);
            accumulate(self.dist_b2.of_mut(grads), &db_buf);
        }
        let d_dist_pre1 = silu_backward(&cache.dist_pre1, &d_dist_h);
        {
            let mut dw_buf = vec![0.0; self.dist_w1.len];
            let mut db_buf = vec![0.0; self.dist_b1.len];
            let mut d_s = vec![0.0; 1];
            linear_backward(
                &[cache.distance],
                self.dist_w1.of(params),
                &d_dist_pre1,
                &mut dw_buf,
                &mut db_buf,
                &mut d_s,
            );
            accumulate(self.dist_w1.of_mut(grads), &dw_buf);
            accumulate(self.dist_b1.of_mut(grads), &db_buf);
        }
    }
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
