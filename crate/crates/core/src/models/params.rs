use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::PAD_ID;
use crate::error::{Error, Result};
use crate::numkernel::{seeded_uniform, Matrix, Rng};
use crate::scalar::Real;

/// Which recurrent classifier a parameter set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arch {
    /// Elman recurrence emitting one prediction at the end of every slice.
    ModifiedRnn,
    /// Same recurrence, prediction after every token.
    PerstepRnn,
    /// Gated recurrent unit, prediction after every token.
    Gru,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::ModifiedRnn, Arch::PerstepRnn, Arch::Gru];

    pub fn name(self) -> &'static str {
        match self {
            Arch::ModifiedRnn => "modified_rnn",
            Arch::PerstepRnn => "perstep_rnn",
            Arch::Gru => "gru",
        }
    }

    /// True when a prediction is emitted after every token rather than per slice.
    pub fn emits_every_step(self) -> bool {
        !matches!(self, Arch::ModifiedRnn)
    }

    pub fn is_gru(self) -> bool {
        matches!(self, Arch::Gru)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown arch {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    /// Tokens per slice.
    pub steps: usize,
}

impl Dims {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size <= PAD_ID as usize + 2
            || self.embed_dim == 0
            || self.hidden_dim == 0
            || self.steps == 0
        {
            return Err(Error::Config(format!("invalid dimensions {self:?}")));
        }
        if !(4..=5).contains(&self.num_classes) {
            return Err(Error::Config(format!(
                "num_classes must be 4 or 5, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }
}

/// Recurrent-cell weights. Matrices act on row vectors: `h · W_hhᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell<S> {
    Rnn {
        w_hh: Matrix<S>,
        w_hx: Matrix<S>,
        b1: Matrix<S>,
    },
    /// No bias terms.
    Gru {
        w_z: Matrix<S>,
        w_r: Matrix<S>,
        w: Matrix<S>,
        u_z: Matrix<S>,
        u_r: Matrix<S>,
        u: Matrix<S>,
    },
}

/// A named tensor and whether it carries the L2 penalty.
pub struct Tensor<'a, S> {
    pub name: &'static str,
    pub value: &'a Matrix<S>,
    pub regularized: bool,
}

pub struct TensorMut<'a, S> {
    pub name: &'static str,
    pub value: &'a mut Matrix<S>,
    pub regularized: bool,
}

/// Everything except the embedding table, in checkpoint order.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights<S> {
    pub cell: Cell<S>,
    pub w_s: Matrix<S>,
    pub b2: Matrix<S>,
}

macro_rules! tensor_list {
    ($weights:expr, $wrap:ident, $($amp:tt)+) => {{
        let w = $weights;
        let mut out = match $($amp)+ w.cell {
            Cell::Rnn { w_hh, w_hx, b1 } => vec![
                $wrap { name: "W_hh", value: w_hh, regularized: true },
                $wrap { name: "W_hx", value: w_hx, regularized: true },
                $wrap { name: "b1", value: b1, regularized: false },
            ],
            Cell::Gru { w_z, w_r, w, u_z, u_r, u } => vec![
                $wrap { name: "W_z", value: w_z, regularized: true },
                $wrap { name: "W_r", value: w_r, regularized: true },
                $wrap { name: "W", value: w, regularized: true },
                $wrap { name: "U_z", value: u_z, regularized: true },
                $wrap { name: "U_r", value: u_r, regularized: true },
                $wrap { name: "U", value: u, regularized: true },
            ],
        };
        out.push($wrap { name: "W_s", value: $($amp)+ w.w_s, regularized: true });
        out.push($wrap { name: "b2", value: $($amp)+ w.b2, regularized: false });
        out
    }};
}

impl<S: Real> Weights<S> {
    pub fn tensors(&self) -> Vec<Tensor<'_, S>> {
        tensor_list!(self, Tensor, &)
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_, S>> {
        tensor_list!(self, TensorMut, &mut)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.value.fill(S::zero());
        }
        z
    }

    /// Σ‖W‖² over regularized tensors.
    pub fn l2_sq(&self) -> S {
        self.tensors()
            .iter()
            .filter(|t| t.regularized)
            .map(|t| t.value.sq_norm())
            .sum()
    }

    fn shapes(arch: Arch, d: &Dims) -> Vec<(usize, usize)> {
        let (h, e, c) = (d.hidden_dim, d.embed_dim, d.num_classes);
        let mut s = if arch.is_gru() {
            vec![(h, e), (h, e), (h, e), (h, h), (h, h), (h, h)]
        } else {
            vec![(h, h), (h, e), (1, h)]
        };
        s.push((c, h));
        s.push((1, c));
        s
    }

    fn from_tensors(arch: Arch, mut m: Vec<Matrix<S>>) -> Self {
        let b2 = m.pop().expect("b2");
        let w_s = m.pop().expect("W_s");
        let mut it = m.into_iter();
        let mut next = || it.next().expect("cell tensor");
        let cell = if arch.is_gru() {
            Cell::Gru {
                w_z: next(),
                w_r: next(),
                w: next(),
                u_z: next(),
                u_r: next(),
                u: next(),
            }
        } else {
            Cell::Rnn {
                w_hh: next(),
                w_hx: next(),
                b1: next(),
            }
        };
        Weights { cell, w_s, b2 }
    }

    pub(crate) fn zeros(arch: Arch, dims: &Dims) -> Self {
        let m = Self::shapes(arch, dims)
            .into_iter()
            .map(|(r, c)| Matrix::zeros(r, c))
            .collect();
        Self::from_tensors(arch, m)
    }
}

/// Trainable state of one classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<S> {
    pub arch: Arch,
    pub dims: Dims,
    /// `V × d` word vectors; the PAD row stays zero.
    pub embed: Matrix<S>,
    pub weights: Weights<S>,
}

impl<S: Real> Params<S> {
    /// All tensors, embedding first, in checkpoint order.
    pub fn tensors(&self) -> Vec<Tensor<'_, S>> {
        let mut v = vec![Tensor {
            name: "L",
            value: &self.embed,
            regularized: false,
        }];
        v.extend(self.weights.tensors());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_, S>> {
        let mut v = vec![TensorMut {
            name: "L",
            value: &mut self.embed,
            regularized: false,
        }];
        v.extend(self.weights.tensors_mut());
        v
    }

    /// Rebuilds parameters from tensors in [`Params::tensors`] order, checking shapes.
    pub fn from_tensors(arch: Arch, dims: Dims, tensors: Vec<Matrix<S>>) -> Result<Self> {
        dims.validate()?;
        let mut expected = vec![(dims.vocab_size, dims.embed_dim)];
        expected.extend(Weights::<S>::shapes(arch, &dims));
        if tensors.len() != expected.len() {
            return Err(Error::Format(format!(
                "{arch} expects {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (t, &shape) in tensors.iter().zip(&expected) {
            if t.shape() != shape {
                return Err(Error::Shape {
                    op: "from_tensors",
                    left: t.shape(),
                    right: shape,
                });
            }
        }
        let mut it = tensors.into_iter();
        let embed = it.next().expect("embedding");
        Ok(Params {
            arch,
            dims,
            embed,
            weights: Weights::from_tensors(arch, it.collect()),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.value.is_finite())
    }

    pub(crate) fn zero_pad_row(&mut self) {
        self.embed.row_mut(PAD_ID as usize).fill(S::zero());
    }
}

/// Word vectors ~ U[−1, 1) with the PAD row zeroed; weight matrices ~
/// U[−r, r) with r = √(6 / (fan_in + fan_out)); biases zero.
pub fn init_params<S: Real>(arch: Arch, dims: Dims, rng: &mut Rng) -> Result<Params<S>> {
    dims.validate()?;
    let mut embed = seeded_uniform(dims.vocab_size, dims.embed_dim, -1.0, 1.0, rng)?;
    embed.row_mut(PAD_ID as usize).fill(S::zero());
    let mut tensors = vec![embed];
    let names: Vec<bool> = Weights::<S>::zeros(arch, &dims)
        .tensors()
        .iter()
        .map(|t| t.regularized)
        .collect();
    for ((rows, cols), is_weight) in Weights::<S>::shapes(arch, &dims).into_iter().zip(names) {
        if is_weight {
            let r = (6.0 / (rows + cols) as f64).sqrt();
            tensors.push(seeded_uniform(rows, cols, -r, r, rng)?);
        } else {
            tensors.push(Matrix::zeros(rows, cols));
        }
    }
    Params::from_tensors(arch, dims, tensors)
}

/// Parameter gradients. Embedding gradients are kept only for touched rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<S> {
    pub embed: BTreeMap<u32, Vec<S>>,
    pub weights: Weights<S>,
}

impl<S: Real> Gradients<S> {
    pub fn zeros_for(params: &Params<S>) -> Self {
        Gradients {
            embed: BTreeMap::new(),
            weights: params.weights.zeros_like(),
        }
    }

    /// Dense `V × d` view of the embedding gradient.
    pub fn embed_dense(&self, dims: &Dims) -> Matrix<S> {
        let mut m = Matrix::zeros(dims.vocab_size, dims.embed_dim);
        for (&id, row) in &self.embed {
            m.row_mut(id as usize).copy_from_slice(row);
        }
        m
    }

    /// Dense gradients in [`Params::tensors`] order.
    pub fn dense(&self, dims: &Dims) -> Vec<(&'static str, Matrix<S>)> {
        let mut v = vec![("L", self.embed_dense(dims))];
        v.extend(
            self.weights
                .tensors()
                .into_iter()
                .map(|t| (t.name, t.value.clone())),
        );
        v
    }

    pub fn is_finite(&self) -> bool {
        self.weights.tensors().iter().all(|t| t.value.is_finite())
            && self.embed.values().flatten().all(|x| x.is_finite())
    }
}

/// θ ← θ − lr·∇θ. The PAD embedding row is re-zeroed afterwards.
pub fn sgd_step<S: Real>(params: &mut Params<S>, grads: &Gradients<S>, lr: S) -> Result<()> {
    for (p, g) in params
        .weights
        .tensors_mut()
        .into_iter()
        .zip(grads.weights.tensors())
    {
        p.value.axpy(-lr, g.value)?;
    }
    let d = params.dims.embed_dim;
    for (&id, g) in &grads.embed {
        if id == PAD_ID {
            continue;
        }
        if g.len() != d || id as usize >= params.dims.vocab_size {
            return Err(Error::Shape {
                op: "sgd_step",
                left: (id as usize, g.len()),
                right: params.embed.shape(),
            });
        }
        for (p, &gv) in params.embed.row_mut(id as usize).iter_mut().zip(g) {
            *p -= lr * gv;
        }
    }
    params.zero_pad_row();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims {
            vocab_size: 20,
            embed_dim: 6,
            hidden_dim: 8,
            num_classes: 4,
            steps: 4,
        }
    }

    #[test]
    fn init_contract() {
        for arch in Arch::ALL {
            let p: Params<f64> = init_params(arch, dims(), &mut Rng::new(5)).unwrap();
            assert!(p.embed.row(0).iter().all(|&x| x == 0.0));
            assert!(p.embed.as_slice().iter().all(|x| x.abs() < 1.0));
            let q: Params<f64> = init_params(arch, dims(), &mut Rng::new(5)).unwrap();
            assert_eq!(p, q);
            let names: Vec<_> = p.tensors().iter().map(|t| t.name).collect();
            if arch.is_gru() {
                assert_eq!(
                    names,
                    ["L", "W_z", "W_r", "W", "U_z", "U_r", "U", "W_s", "b2"]
                );
            } else {
                assert_eq!(names, ["L", "W_hh", "W_hx", "b1", "W_s", "b2"]);
            }
        }
    }

    #[test]
    fn rejects_bad_dims() {
        let mut d = dims();
        d.num_classes = 3;
        assert!(init_params::<f64>(Arch::Gru, d, &mut Rng::new(0)).is_err());
        d.num_classes = 5;
        d.hidden_dim = 0;
        assert!(init_params::<f64>(Arch::Gru, d, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn sgd_arithmetic() {
        let mut p: Params<f64> = init_params(Arch::ModifiedRnn, dims(), &mut Rng::new(1)).unwrap();
        let before = p.clone();
        let zero = Gradients::zeros_for(&p);
        sgd_step(&mut p, &zero, 0.5).unwrap();
        assert_eq!(p, before);

        let mut g = Gradients::zeros_for(&p);
        g.weights.b2[(0, 1)] = 2.0;
        g.embed.insert(3, vec![1.0; 6]);
        g.embed.insert(PAD_ID, vec![1.0; 6]);
        sgd_step(&mut p, &g, 0.0).unwrap();
        assert_eq!(p, before);

        p.weights.b2[(0, 1)] = 1.0;
        sgd_step(&mut p, &g, 0.1).unwrap();
        assert!((p.weights.b2[(0, 1)] - 0.8).abs() < 1e-15);
        assert!((p.embed[(3, 0)] - (before.embed[(3, 0)] - 0.1)).abs() < 1e-15);
        assert!(p.embed.row(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn arch_names_round_trip() {
        for a in Arch::ALL {
            assert_eq!(a.name().parse::<Arch>().unwrap(), a);
        }
        assert!("lstm".parse::<Arch>().is_err());
    }
}
