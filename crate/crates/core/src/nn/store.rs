//! Flat parameter storage. Every trainable tensor lives in one contiguous
//! f64 vector, addressed through copyable handles; gradients, optimizer
//! moments, and the EMA shadow reuse the same layout, which keeps updates,
//! serialization, and finite-difference sweeps trivial.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handle {
    pub offset: usize,
    pub len: usize,
}

impl Handle {
    #[inline]
    pub fn of<'a>(&self, data: &'a [f64]) -> &'a [f64] {
        &data[self.offset..self.offset + self.len]
    }

    #[inline]
    pub fn of_mut<'a>(&self, data: &'a mut [f64]) -> &'a mut [f64] {
        &mut data[self.offset..self.offset + self.len]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub shape: Vec<usize>,
    pub handle: Handle,
}

#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zero,
    /// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)); the default for weights.
    FanIn(usize),
    /// Gaussian with the given standard deviation; used for embedding tables.
    Normal(f64),
}

#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    regions: Vec<Region>,
    pub data: Vec<f64>,
}

impl ParamStore {
    pub fn new() -> ParamStore {
        ParamStore::default()
    }

    pub fn add(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        init: Init,
        rng: &mut ChaCha8Rng,
    ) -> Handle {
        let len: usize = shape.iter().product();
        let offset = self.data.len();
        match init {
            Init::Zero => self.data.extend(std::iter::repeat(0.0).take(len)),
            Init::FanIn(fan_in) => {
                let k = (1.0 / fan_in.max(1) as f64).sqrt();
                self.data.extend((0..len).map(|_| rng.gen_range(-k..k)));
            }
            Init::Normal(sd) => {
                // Box-Muller; two uniforms per normal keeps the stream simple.
                self.data.extend((0..len).map(|_| {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                }));
            }
        }
        let handle = Handle { offset, len };
        self.regions.push(Region { name: name.into(), shape: shape.to_vec(), handle });
        handle
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region_by_name(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn zeros_like(&self) -> Vec<f64> {
        vec![0.0; self.data.len()]
    }
}
