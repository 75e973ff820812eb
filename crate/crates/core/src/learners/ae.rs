//! Single-hidden-layer autoencoder trained with mini-batch Adam.
//!
//! Encoder: `T → H` (ReLU) `→ K` (linear). Decoder: `K → H` (ReLU) `→ T`
//! (linear or sigmoid). Weights are stored input-major so a layer is
//! `A_out = act(A_in · W + b)` for a batch `A_in` with one sample per row.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::clre::{Reader, Writer};
use crate::data::{DataMatrix, Grid};
use crate::error::{ClareError, Result};
use crate::rng::{RngSpec, Stream};

use super::codec::{read_tensor, Codec, Method, Model};
use super::{check_k, Learner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputActivation {
    Linear,
    #[default]
    Sigmoid,
}

impl OutputActivation {
    pub fn name(self) -> &'static str {
        match self {
            OutputActivation::Linear => "linear",
            OutputActivation::Sigmoid => "sigmoid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossFn {
    #[default]
    Mse,
    Bce,
}

impl LossFn {
    pub fn name(self) -> &'static str {
        match self {
            LossFn::Mse => "mse",
            LossFn::Bce => "bce",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub output_activation: OutputActivation,
    pub loss: LossFn,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            hidden: 600,
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            output_activation: OutputActivation::Sigmoid,
            loss: LossFn::Mse,
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const BCE_CLAMP: f64 = 1e-12;

/// Parameter order: W1, b1, W2, b2, W3, b3, W4, b4.
#[derive(Debug, Clone, PartialEq)]
pub struct AeNetwork {
    pub params: Vec<DMatrix<f64>>,
    pub output_activation: OutputActivation,
    pub loss: LossFn,
}

struct Activations {
    a1: DMatrix<f64>,
    z: DMatrix<f64>,
    a3: DMatrix<f64>,
    y: DMatrix<f64>,
}

fn affine(input: &DMatrix<f64>, w: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = input * w;
    for mut row in out.row_iter_mut() {
        row += b;
    }
    out
}

fn relu(m: &mut DMatrix<f64>) {
    m.apply(|v| *v = v.max(0.0));
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl AeNetwork {
    pub fn new(t: usize, hidden: usize, k: usize, config: &AeConfig, seed: u64) -> Self {
        let mut rng = RngSpec::new(seed, Stream::AeInit).rng();
        let mut uniform = |rows: usize, cols: usize, limit: f64| {
            DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-limit..limit))
        };
        let he = |fan_in: usize| (6.0 / fan_in as f64).sqrt();
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let params = vec![
            uniform(t, hidden, he(t)),
            DMatrix::zeros(1, hidden),
            uniform(hidden, k, glorot(hidden, k)),
            DMatrix::zeros(1, k),
            uniform(k, hidden, he(k)),
            DMatrix::zeros(1, hidden),
            uniform(hidden, t, glorot(hidden, t)),
            DMatrix::zeros(1, t),
        ];
        AeNetwork {
            params,
            output_activation: config.output_activation,
            loss: config.loss,
        }
    }

    pub fn t(&self) -> usize {
        self.params[0].nrows()
    }

    pub fn hidden(&self) -> usize {
        self.params[0].ncols()
    }

    pub fn k(&self) -> usize {
        self.params[2].ncols()
    }

    pub fn encode_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let p = &self.params;
        let mut a1 = affine(x, &p[0], &p[1]);
        relu(&mut a1);
        affine(&a1, &p[2], &p[3])
    }

    pub fn decode_batch(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let p = &self.params;
        let mut a3 = affine(z, &p[4], &p[5]);
        relu(&mut a3);
        let mut y = affine(&a3, &p[6], &p[7]);
        if self.output_activation == OutputActivation::Sigmoid {
            y.apply(|v| *v = sigmoid(*v));
        }
        y
    }

    fn forward(&self, x: &DMatrix<f64>) -> Activations {
        let p = &self.params;
        let mut a1 = affine(x, &p[0], &p[1]);
        relu(&mut a1);
        let z = affine(&a1, &p[2], &p[3]);
        let mut a3 = affine(&z, &p[4], &p[5]);
        relu(&mut a3);
        let mut y = affine(&a3, &p[6], &p[7]);
        if self.output_activation == OutputActivation::Sigmoid {
            y.apply(|v| *v = sigmoid(*v));
        }
        Activations { a1, z, a3, y }
    }

    fn loss_of(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let count = x.len() as f64;
        match self.loss {
            LossFn::Mse => x.iter().zip(y.iter()).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() / count,
            LossFn::Bce => {
                -x.iter()
                    .zip(y.iter())
                    .map(|(a, b)| {
                        let b = b.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                        a * b.ln() + (1.0 - a) * (1.0 - b).ln()
                    })
                    .sum::<f64>()
                    / count
            }
        }
    }

    /// Mean reconstruction loss of a batch (one sample per row).
    pub fn loss(&self, x: &DMatrix<f64>) -> f64 {
        let y = self.decode_batch(&self.encode_batch(x));
        self.loss_of(x, &y)
    }

    /// Loss and its gradient with respect to every parameter, in
    /// parameter order.
    pub fn gradient(&self, x: &DMatrix<f64>) -> (f64, Vec<DMatrix<f64>>) {
        let p = &self.params;
        let act = self.forward(x);
        let loss = self.loss_of(x, &act.y);
        let count = x.len() as f64;

        // d loss / d (pre-activation output)
        let mut d4 = &act.y - x;
        match (self.loss, self.output_activation) {
            (LossFn::Mse, OutputActivation::Linear) => d4 *= 2.0 / count,
            (LossFn::Mse, OutputActivation::Sigmoid) => {
                d4.zip_apply(&act.y, |d, y| *d *= 2.0 / count * y * (1.0 - y));
            }
            (LossFn::Bce, OutputActivation::Sigmoid) => d4 /= count,
            (LossFn::Bce, OutputActivation::Linear) => {
                d4.zip_zip_apply(x, &act.y, |d, xv, yv| {
                    let yc = yv.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                    *d = (yc - xv) / (yc * (1.0 - yc)) / count;
                });
            }
        }
        let col_sums = |m: &DMatrix<f64>| DMatrix::from_row_slice(1, m.ncols(), m.row_sum().as_slice());

        let g_w4 = act.a3.transpose() * &d4;
        let g_b4 = col_sums(&d4);
        let mut d3 = &d4 * p[6].transpose();
        d3.zip_apply(&act.a3, |d, a| {
            if a <= 0.0 {
                *d = 0.0
            }
        });
        let g_w3 = act.z.transpose() * &d3;
        let g_b3 = col_sums(&d3);
        let d2 = &d3 * p[4].transpose();
        let g_w2 = act.a1.transpose() * &d2;
        let g_b2 = col_sums(&d2);
        let mut d1 = &d2 * p[2].transpose();
        d1.zip_apply(&act.a1, |d, a| {
            if a <= 0.0 {
                *d = 0.0
            }
        });
        let g_w1 = x.transpose() * &d1;
        let g_b1 = col_sums(&d1);
        (loss, vec![g_w1, g_b1, g_w2, g_b2, g_w3, g_b3, g_w4, g_b4])
    }
}

/// A trained autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub network: AeNetwork,
    pub config: AeConfig,
    pub seed: u64,
    /// Mean training loss of each epoch.
    pub loss_history: Vec<f64>,
    /// Training loss of the final weights over all training rows.
    pub final_loss: f64,
}

fn row_matrix(x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(1, x.len(), x)
}

impl AeModel {
    pub(crate) fn encode(&self, x: &[f64]) -> Vec<f64> {
        self.network.encode_batch(&row_matrix(x)).iter().copied().collect()
    }

    pub(crate) fn decode(&self, z: &[f64]) -> Vec<f64> {
        self.network.decode_batch(&row_matrix(z)).iter().copied().collect()
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.u64(self.config.hidden as u64);
        w.u8(match self.config.output_activation {
            OutputActivation::Linear => 0,
            OutputActivation::Sigmoid => 1,
        });
        w.u8(match self.config.loss {
            LossFn::Mse => 0,
            LossFn::Bce => 1,
        });
        w.u64(self.config.epochs as u64);
        w.u64(self.config.batch_size as u64);
        w.f64(self.config.learning_rate);
        w.u64(self.seed);
        w.f64(self.final_loss);
        w.tensor(&[self.loss_history.len()], &self.loss_history);
        for p in &self.network.params {
            let row_major: Vec<f64> = p.transpose().iter().copied().collect();
            w.tensor(&[p.nrows(), p.ncols()], &row_major);
        }
    }

    pub(crate) fn read(r: &mut Reader<'_>, t: usize, k: usize) -> Result<Self> {
        let hidden = r.usize()?;
        let output_activation = match r.u8()? {
            0 => OutputActivation::Linear,
            1 => OutputActivation::Sigmoid,
            v => return Err(ClareError::Format(format!("unknown output activation {v}"))),
        };
        let loss = match r.u8()? {
            0 => LossFn::Mse,
            1 => LossFn::Bce,
            v => return Err(ClareError::Format(format!("unknown loss {v}"))),
        };
        let config = AeConfig {
            hidden,
            epochs: r.usize()?,
            batch_size: r.usize()?,
            learning_rate: r.f64()?,
            output_activation,
            loss,
        };
        let seed = r.u64()?;
        let final_loss = r.f64()?;
        let (dims, loss_history) = r.tensor()?;
        if dims.len() != 1 {
            return Err(ClareError::Format("loss history must be rank 1".into()));
        }
        let shapes = [
            (t, hidden),
            (1, hidden),
            (hidden, k),
            (1, k),
            (k, hidden),
            (1, hidden),
            (hidden, t),
            (1, t),
        ];
        let params = shapes
            .iter()
            .map(|&(rows, cols)| {
                let v = read_tensor(r, &[rows, cols], "ae weights")?;
                Ok(DMatrix::from_row_slice(rows, cols, &v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AeModel {
            network: AeNetwork {
                params,
                output_activation,
                loss,
            },
            config,
            seed,
            loss_history,
            final_loss,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct AeLearner {
    pub config: AeConfig,
}

impl AeLearner {
    pub fn new(config: AeConfig) -> Self {
        AeLearner { config }
    }

    /// Train on `train` at latent dimension `k`. `seed` feeds the
    /// initialization and batch-order streams.
    pub fn train(&self, train: &DataMatrix, k: usize, seed: u64) -> Result<AeModel> {
        let cfg = &self.config;
        let t = train.t();
        check_k(k, self.max_latent_dim(train.n(), train.grid()), "ae")?;
        if cfg.batch_size == 0 || cfg.epochs == 0 || cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 {
            return Err(ClareError::InvalidArgument(
                "ae batch size, epochs and learning rate must be positive".into(),
            ));
        }
        let in_unit = train.values().iter().all(|v| (0.0..=1.0).contains(v));
        if cfg.loss == LossFn::Bce {
            if cfg.output_activation != OutputActivation::Sigmoid {
                return Err(ClareError::InvalidArgument(
                    "binary cross-entropy needs a sigmoid output".into(),
                ));
            }
            if !in_unit {
                return Err(ClareError::InvalidArgument(
                    "binary cross-entropy needs data in [0, 1]".into(),
                ));
            }
        } else if cfg.output_activation == OutputActivation::Sigmoid && !in_unit {
            log::warn!("sigmoid output cannot reach training values outside [0, 1]");
        }

        let mut net = AeNetwork::new(t, cfg.hidden, k, cfg, seed);
        let mut m: Vec<DMatrix<f64>> = net.params.iter().map(|p| p.map(|_| 0.0)).collect();
        let mut v = m.clone();
        let mut order_rng = RngSpec::new(seed, Stream::AeBatchOrder).rng();
        let mut order: Vec<usize> = (0..train.n()).collect();
        let mut step = 0i32;
        let mut history = Vec::with_capacity(cfg.epochs);

        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut order_rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let batch = DMatrix::from_fn(chunk.len(), t, |i, j| train.row(chunk[i])[j]);
                let (loss, grads) = net.gradient(&batch);
                epoch_loss += loss * chunk.len() as f64;
                step += 1;
                let bc1 = 1.0 - BETA1.powi(step);
                let bc2 = 1.0 - BETA2.powi(step);
                for ((p, g), (mi, vi)) in net
                    .params
                    .iter_mut()
                    .zip(&grads)
                    .zip(m.iter_mut().zip(v.iter_mut()))
                {
                    for idx in 0..p.len() {
                        let gi = g[idx];
                        mi[idx] = BETA1 * mi[idx] + (1.0 - BETA1) * gi;
                        vi[idx] = BETA2 * vi[idx] + (1.0 - BETA2) * gi * gi;
                        let mhat = mi[idx] / bc1;
                        let vhat = vi[idx] / bc2;
                        p[idx] -= cfg.learning_rate * mhat / (vhat.sqrt() + ADAM_EPS);
                    }
                }
            }
            let epoch_loss = epoch_loss / train.n() as f64;
            if !epoch_loss.is_finite() {
                return Err(ClareError::Diverged {
                    epoch,
                    loss: epoch_loss,
                });
            }
            history.push(epoch_loss);
        }
        let all = DMatrix::from_row_slice(train.n(), t, train.values());
        let final_loss = net.loss(&all);
        if !final_loss.is_finite() || net.params.iter().any(|p| p.iter().any(|w| !w.is_finite())) {
            return Err(ClareError::Diverged {
                epoch: cfg.epochs,
                loss: final_loss,
            });
        }
        Ok(AeModel {
            network: net,
            config: cfg.clone(),
            seed,
            loss_history: history,
            final_loss,
        })
    }
}

impl Learner for AeLearner {
    fn method(&self) -> Method {
        Method::Ae
    }

    fn name(&self) -> String {
        "ae".into()
    }

    fn max_latent_dim(&self, _n_train: usize, grid: Grid) -> usize {
        (grid.len() - 1).min(self.config.hidden)
    }

    fn fit(&self, train: &DataMatrix, k: usize, seed: u64) -> Result<Codec> {
        let task_seed = RngSpec::new(seed, Stream::AeInit).derive(&[k as u64]).seed;
        let model = self.train(train, k, task_seed)?;
        Ok(Codec::new(k, train.grid(), Model::Ae(model)))
    }

    fn config(&self) -> Vec<(String, String)> {
        let c = &self.config;
        vec![
            ("ae.hidden".into(), c.hidden.to_string()),
            ("ae.epochs".into(), c.epochs.to_string()),
            ("ae.batch".into(), c.batch_size.to_string()),
            ("ae.lr".into(), c.learning_rate.to_string()),
            ("ae.output_activation".into(), c.output_activation.name().into()),
            ("ae.loss".into(), c.loss.name().into()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(output: OutputActivation, loss: LossFn) -> AeConfig {
        AeConfig {
            hidden: 5,
            epochs: 3,
            batch_size: 2,
            learning_rate: 1e-2,
            output_activation: output,
            loss,
        }
    }

    fn max_rel_grad_error(net: &AeNetwork, x: &DMatrix<f64>) -> f64 {
        let (_, grads) = net.gradient(x);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (pi, g) in grads.iter().enumerate() {
            for idx in 0..g.len() {
                let mut plus = net.clone();
                plus.params[pi][idx] += h;
                let mut minus = net.clone();
                minus.params[pi][idx] -= h;
                let fd = (plus.loss(x) - minus.loss(x)) / (2.0 * h);
                let err = (fd - g[idx]).abs() / fd.abs().max(g[idx].abs()).max(1e-6);
                worst = worst.max(err);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(4, 6, |_, _| rng.gen_range(0.05..0.95));
        for (out, loss) in [
            (OutputActivation::Linear, LossFn::Mse),
            (OutputActivation::Sigmoid, LossFn::Mse),
            (OutputActivation::Sigmoid, LossFn::Bce),
        ] {
            let net = AeNetwork::new(6, 5, 2, &small_config(out, loss), 17);
            let err = max_rel_grad_error(&net, &x);
            assert!(err < 1e-5, "{out:?}/{loss:?}: {err}");
        }
    }

    #[test]
    fn defaults() {
        let c = AeConfig::default();
        assert_eq!((c.hidden, c.epochs, c.batch_size), (600, 100, 16));
        assert_eq!(c.output_activation, OutputActivation::Sigmoid);
        assert_eq!(c.loss, LossFn::Mse);
    }

    #[test]
    fn bce_rejects_out_of_range_data() {
        let data = DataMatrix::from_rows(vec![0.0, 2.0, 0.5, 0.5], 2, Grid::one_d(2).unwrap()).unwrap();
        let learner = AeLearner::new(small_config(OutputActivation::Sigmoid, LossFn::Bce));
        assert!(learner.fit(&data, 1, 0).is_err());
    }

    #[test]
    fn divergence_reports_epoch() {
        let data =
            DataMatrix::from_rows(vec![1e300, -1e300, 1e300, 1e300], 2, Grid::one_d(2).unwrap())
                .unwrap();
        let learner = AeLearner::new(small_config(OutputActivation::Linear, LossFn::Mse));
        match learner.fit(&data, 1, 0) {
            Err(ClareError::Diverged { epoch, .. }) => assert_eq!(epoch, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn sigmoid_output_in_unit_interval_and_serializes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let values = (0..10 * 6).map(|_| rng.gen_range(0.0..1.0)).collect();
        let data = DataMatrix::from_rows(values, 10, Grid::one_d(6).unwrap()).unwrap();
        let learner = AeLearner::new(small_config(OutputActivation::Sigmoid, LossFn::Mse));
        let codec = learner.fit(&data, 2, 3).unwrap();
        let y = codec.reconstruct(&[50.0, -50.0, 3.0, 0.0, 1.0, 9.0]).unwrap();
        assert!(y.iter().all(|v| *v > 0.0 && *v < 1.0));
        let back = Codec::from_bytes(&codec.to_bytes().unwrap()).unwrap();
        assert_eq!(back.to_bytes().unwrap(), codec.to_bytes().unwrap());
        assert_eq!(back.reconstruct(data.row(0)).unwrap(), codec.reconstruct(data.row(0)).unwrap());
    }
}
