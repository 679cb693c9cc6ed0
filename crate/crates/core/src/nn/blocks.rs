//! Layer bindings: a ConvSpec or linear shape tied to its parameter handles,
//! so model code reads as a sequence of named blocks.

use rand_chacha::ChaCha8Rng;

use super::layers::{conv_backward, conv_forward, linear_backward, linear_forward, ConvSpec, Planes};
use super::store::{Handle, Init, ParamStore};

#[derive(Debug, Clone, Copy)]
pub struct Conv {
    pub spec: ConvSpec,
    pub w: Handle,
    pub b: Handle,
}

impl Conv {
    pub fn register(
        store: &mut ParamStore,
        name: &str,
        spec: ConvSpec,
        rng: &mut ChaCha8Rng,
    ) -> Conv {
        let fan_in = spec.c_in * spec.kh * spec.kw;
        let w = store.add(
            format!("{name}.w"),
            &[spec.c_out, spec.c_in, spec.kh, spec.kw],
            Init::FanIn(fan_in),
            rng,
        );
        let b = store.add(format!("{name}.b"), &[spec.c_out], Init::Zero, rng);
        Conv { spec, w, b }
    }

    pub fn fwd(&self, params: &[f64], x: &Planes) -> Planes {
        conv_forward(x, self.w.of(params), self.b.of(params), &self.spec)
    }

    pub fn bwd(&self, params: &[f64], x: &Planes, dy: &Planes, grads: &mut [f64]) -> Planes {
        // Accumulate into scratch then fold in, keeping the borrow local.
        let mut dw = vec![0.0; self.w.len];
        let mut db = vec![0.0; self.b.len];
        let dx = conv_backward(x, self.w.of(params), dy, &self.spec, &mut dw, &mut db);
        add_into(self.w.of_mut(grads), &dw);
        add_into(self.b.of_mut(grads), &db);
        dx
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Lin {
    pub w: Handle,
    pub b: Handle,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Lin {
    pub fn register(
        store: &mut ParamStore,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Lin {
        let w = store.add(format!("{name}.w"), &[out_dim, in_dim], Init::FanIn(in_dim), rng);
        let b = store.add(format!("{name}.b"), &[out_dim], Init::Zero, rng);
        Lin { w, b, in_dim, out_dim }
    }

    pub fn fwd(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        linear_forward(x, self.w.of(params), self.b.of(params), self.out_dim)
    }

    /// Accumulates parameter gradients and adds the input gradient into `dx`.
    pub fn bwd(&self, params: &[f64], x: &[f64], dy: &[f64], grads: &mut [f64], dx: &mut [f64]) {
        let mut dw = vec![0.0; self.w.len];
        let mut db = vec![0.0; self.b.len];
        linear_backward(x, self.w.of(params), dy, &mut dw, &mut db, dx);
        add_into(self.w.of_mut(grads), &dw);
        add_into(self.b.of_mut(grads), &db);
    }
}

pub fn add_into(dst: &mut [f64], src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
