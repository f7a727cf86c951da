use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::harness::LogRow;
use crate::error::{Error, Result};
use crate::eval::roc_auc;

/// Learnable tensors: input transform `K_f`, `B_f`; three convolution
/// kernels; readout `K_c`, `B_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub kf: Array2<f64>,
    pub bf: Array1<f64>,
    pub kg: Vec<Array2<f64>>,
    pub kc: Array1<f64>,
    pub bc: f64,
}

/// JSON form of [`GcnParams`]: a format tag, the layer widths
/// `[d, d′, h1, h2, h3]` and row-major tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnCheckpoint {
    pub format: String,
    pub version: u32,
    pub dims: Vec<usize>,
    pub kf: Vec<Vec<f64>>,
    pub bf: Vec<f64>,
    pub kg: Vec<Vec<Vec<f64>>>,
    pub kc: Vec<f64>,
    pub bc: f64,
}

pub const CHECKPOINT_FORMAT: &str = "conflictforge-gcn";
pub const CHECKPOINT_VERSION: u32 = 1;

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>], shape: (usize, usize), name: &str) -> Result<Array2<f64>> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::DimensionMismatch {
            context: "GCN checkpoint",
            detail: format!("{name} does not have shape {}x{}", shape.0, shape.1),
        });
    }
    Ok(Array2::from_shape_vec(shape, flat).expect("checked shape"))
}

impl GcnParams {
    pub fn to_checkpoint(&self) -> GcnCheckpoint {
        GcnCheckpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dims: self.dims(),
            kf: rows_of(&self.kf),
            bf: self.bf.to_vec(),
            kg: self.kg.iter().map(rows_of).collect(),
            kc: self.kc.to_vec(),
            bc: self.bc,
        }
    }

    /// Rebuild parameters, checking every tensor against the header.
    pub fn from_checkpoint(c: &GcnCheckpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::Malformed {
                what: "GCN checkpoint",
                detail: format!("unsupported format {} v{}", c.format, c.version),
            });
        }
        let [d, dp, h1, h2, h3]: [usize; 5] = c.dims.as_slice().try_into().map_err(|_| Error::Malformed {
            what: "GCN checkpoint",
            detail: format!("expected 5 dims, got {}", c.dims.len()),
        })?;
        if c.kg.len() != 3 {
            return Err(Error::Malformed {
                what: "GCN checkpoint",
                detail: format!("{} convolution kernels", c.kg.len()),
            });
        }
        let p = GcnParams {
            kf: matrix(&c.kf, (d, dp), "K_f")?,
            bf: Array1::from(c.bf.clone()),
            kg: vec![
                matrix(&c.kg[0], (dp, h1), "K_g0")?,
                matrix(&c.kg[1], (h1, h2), "K_g1")?,
                matrix(&c.kg[2], (h2, h3), "K_g2")?,
            ],
            kc: Array1::from(c.kc.clone()),
            bc: c.bc,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Gradients share the parameter layout.
pub type GcnGradients = GcnParams;

fn glorot(rows: usize, cols: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

impl GcnParams {
    /// Glorot-uniform kernels and zero biases for input width `d` and
    /// widths `[d′, h1, h2, h3]`.
    pub fn init(d: usize, widths: [usize; 4], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [dp, h1, h2, h3] = widths;
        let kf = glorot(d, dp, dp, &mut rng);
        let kg = vec![
            glorot(dp, h1, h1, &mut rng),
            glorot(h1, h2, h2, &mut rng),
            glorot(h2, h3, h3, &mut rng),
        ];
        let kc = glorot(2 * h3, 1, 1, &mut rng).column(0).to_owned();
        GcnParams {
            kf,
            bf: Array1::zeros(dp),
            kg,
            kc,
            bc: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        GcnParams {
            kf: Array2::zeros(self.kf.raw_dim()),
            bf: Array1::zeros(self.bf.len()),
            kg: self.kg.iter().map(|k| Array2::zeros(k.raw_dim())).collect(),
            kc: Array1::zeros(self.kc.len()),
            bc: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.kf.nrows()
    }

    /// `[d, d′, h1, h2, h3]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.kf.nrows(), self.kf.ncols()];
        d.extend(self.kg.iter().map(|k| k.ncols()));
        d
    }

    /// Check that every shape chains and every entry is finite.
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Error::DimensionMismatch {
            context: "GCN parameters",
            detail,
        };
        if self.kg.len() != 3 {
            return Err(bad(format!("{} convolution kernels, expected 3", self.kg.len())));
        }
        if self.bf.len() != self.kf.ncols() {
            return Err(bad("B_f length differs from K_f width".into()));
        }
        let mut width = self.kf.ncols();
        for (m, k) in self.kg.iter().enumerate() {
            if k.nrows() != width {
                return Err(bad(format!("kernel {m} expects {} inputs, got {width}", k.nrows())));
            }
            width = k.ncols();
        }
        if self.kc.len() != 2 * width {
            return Err(bad(format!("K_c has length {}, expected {}", self.kc.len(), 2 * width)));
        }
        if self.flatten().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GCN parameters"));
        }
        Ok(())
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kf.iter().copied().collect();
        v.extend(self.bf.iter());
        for k in &self.kg {
            v.extend(k.iter());
        }
        v.extend(self.kc.iter());
        v.push(self.bc);
        v
    }

    /// Inverse of [`GcnParams::flatten`] with `self` as the shape template.
    pub fn unflatten(&self, flat: &[f64]) -> Result<Self> {
        if flat.len() != self.flatten().len() {
            return Err(Error::LengthMismatch {
                expected: self.flatten().len(),
                actual: flat.len(),
            });
        }
        let mut pos = 0;
        let mut take = |n: usize| {
            let out = flat[pos..pos + n].to_vec();
            pos += n;
            out
        };
        let shape2 = |a: &Array2<f64>, v: Vec<f64>| Array2::from_shape_vec(a.raw_dim(), v).expect("sized");
        let kf = shape2(&self.kf, take(self.kf.len()));
        let bf = Array1::from(take(self.bf.len()));
        let kg = self.kg.iter().map(|k| shape2(k, take(k.len()))).collect();
        let kc = Array1::from(take(self.kc.len()));
        let bc = take(1)[0];
        Ok(GcnParams { kf, bf, kg, kc, bc })
    }
}

/// Input of one prediction: normalized adjacency, node features and the
/// anchor rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnSample {
    pub a_hat: Array2<f64>,
    pub x: Array2<f64>,
    pub i: usize,
    pub j: usize,
    pub label: u8,
}

/// Intermediate values of a forward pass.
#[derive(Debug, Clone)]
pub struct GcnTrace {
    /// `X K_f + B_f` before the ReLU.
    pub input_pre: Array2<f64>,
    /// `H_0 .. H_3`.
    pub h: Vec<Array2<f64>>,
    /// `Â H_m` for m = 0..2.
    pub ah: Vec<Array2<f64>>,
    /// `Â H_m K_g^m` before the ReLU.
    pub pre: Vec<Array2<f64>>,
    pub e: Array1<f64>,
    pub logit: f64,
    pub y: f64,
}

impl GcnTrace {
    /// Smallest pre-activation magnitude on rows that can still change,
    /// i.e. ignoring convolution rows of nodes without neighbours.
    pub fn min_abs_preactivation(&self, a_hat: &Array2<f64>) -> f64 {
        let mut m = self.input_pre.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        for p in &self.pre {
            for (r, row) in p.rows().into_iter().enumerate() {
                if a_hat.row(r).iter().any(|v| *v != 0.0) {
                    m = row.iter().map(|v| v.abs()).fold(m, f64::min);
                }
            }
        }
        m
    }
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| v.max(0.0))
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_sample(a_hat: &Array2<f64>, x: &Array2<f64>, i: usize, j: usize, p: &GcnParams) -> Result<()> {
    let n = x.nrows();
    if a_hat.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "GCN input",
            detail: format!("adjacency {:?} for {n} nodes", a_hat.dim()),
        });
    }
    if x.ncols() != p.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "GCN input",
            detail: format!("{} features, parameters expect {}", x.ncols(), p.input_dim()),
        });
    }
    if i >= n || j >= n {
        return Err(Error::invalid(format!("anchor ({i}, {j}) outside {n} nodes")));
    }
    Ok(())
}

pub fn forward_trace(
    a_hat: &Array2<f64>,
    x: &Array2<f64>,
    i: usize,
    j: usize,
    p: &GcnParams,
) -> Result<GcnTrace> {
    p.validate()?;
    check_sample(a_hat, x, i, j, p)?;
    let input_pre = x.dot(&p.kf) + &p.bf;
    let mut h = vec![relu(&input_pre)];
    let mut ah = Vec::with_capacity(3);
    let mut pre = Vec::with_capacity(3);
    for k in &p.kg {
        let a = a_hat.dot(h.last().expect("H_0 present"));
        let z = a.dot(k);
        h.push(relu(&z));
        ah.push(a);
        pre.push(z);
    }
    let h3 = h.last().expect("H_3 present");
    let e = ndarray::concatenate![Axis(0), h3.row(i), h3.row(j)];
    let logit = p.kc.dot(&e) + p.bc;
    Ok(GcnTrace {
        input_pre,
        h,
        ah,
        pre,
        e,
        logit,
        y: sigmoid(logit),
    })
}

/// Conflict probability of the anchor pair `(i, j)`.
pub fn gcn_forward(
    a_hat: &Array2<f64>,
    x: &Array2<f64>,
    i: usize,
    j: usize,
    params: &GcnParams,
) -> Result<f64> {
    Ok(forward_trace(a_hat, x, i, j, params)?.y)
}

/// Binary cross-entropy from the logit, stable for large magnitudes.
fn bce(logit: f64, label: u8) -> f64 {
    let z = if label == 1 { logit } else { -logit };
    // -ln σ(z)
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Loss and analytic gradients of one sample.
pub fn loss_and_gradients(sample: &GcnSample, p: &GcnParams) -> Result<(f64, GcnGradients)> {
    let t = forward_trace(&sample.a_hat, &sample.x, sample.i, sample.j, p)?;
    let loss = bce(t.logit, sample.label);
    let dz = t.y - f64::from(sample.label);
    let mut g = p.zeros_like();
    g.bc = dz;
    g.kc = &t.e * dz;
    let h3w = p.kc.len() / 2;
    let de = &p.kc * dz;
    let mut dh = Array2::<f64>::zeros(t.h[3].raw_dim());
    {
        let mut ri = dh.row_mut(sample.i);
        ri += &de.slice(s![..h3w]);
    }
    {
        let mut rj = dh.row_mut(sample.j);
        rj += &de.slice(s![h3w..]);
    }
    for m in (0..3).rev() {
        let mask = t.pre[m].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let dp = dh * mask;
        g.kg[m] = t.ah[m].t().dot(&dp);
        dh = sample.a_hat.t().dot(&dp.dot(&p.kg[m].t()));
    }
    let mask = t.input_pre.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let dq = dh * mask;
    g.kf = sample.x.t().dot(&dq);
    g.bf = dq.sum_axis(Axis(0));
    Ok((loss, g))
}

/// Loss of one sample.
pub fn sample_loss(sample: &GcnSample, p: &GcnParams) -> Result<f64> {
    let t = forward_trace(&sample.a_hat, &sample.x, sample.i, sample.j, p)?;
    Ok(bce(t.logit, sample.label))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GcnConfig {
    /// `[d′, h1, h2, h3]`.
    pub widths: [usize; 4],
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a development improvement before stopping.
    pub patience: usize,
    /// Epochs always run before early stopping may trigger; the loss
    /// often sits on a plateau at first.
    pub min_epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig {
            widths: [64, 64, 32, 16],
            lr: 1e-3,
            batch_size: 256,
            max_epochs: 200,
            patience: 5,
            min_epochs: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            seed: 0,
        }
    }
}

/// Adam with Nesterov momentum.
struct Nadam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
}

impl Nadam {
    fn new(n: usize, c: &GcnConfig) -> Self {
        Nadam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
            lr: c.lr,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c1_next = 1.0 - b1.powi(self.t + 1);
        let c2 = 1.0 - b2.powi(self.t);
        for k in 0..theta.len() {
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * grad[k];
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * grad[k] * grad[k];
            let m_hat = b1 * self.m[k] / c1_next + (1.0 - b1) * grad[k] / c1;
            let v_hat = self.v[k] / c2;
            theta[k] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGcn {
    pub params: GcnParams,
    pub log: Vec<LogRow>,
    pub best_epoch: usize,
    pub best_dev_auc: Option<f64>,
    pub steps: usize,
}

/// Mean loss and AUC (when both classes occur) over a sample set.
pub fn evaluate(samples: &[GcnSample], p: &GcnParams) -> Result<(f64, Option<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("evaluation samples"));
    }
    let mut loss = 0.0;
    let mut scores = Vec::with_capacity(samples.len());
    for s in samples {
        let t = forward_trace(&s.a_hat, &s.x, s.i, s.j, p)?;
        loss += bce(t.logit, s.label);
        scores.push(t.y);
    }
    let labels: Vec<bool> = samples.iter().map(|s| s.label == 1).collect();
    let auc = match roc_auc(&labels, &scores) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok((loss / samples.len() as f64, auc))
}

/// Mini-batch Nadam on mean cross-entropy. After every epoch the model is
/// scored on `dev`; the best parameters by development AUC (loss when AUC
/// is undefined) are kept and, once `min_epochs` have run, training stops
/// after `patience` epochs without improvement.
pub fn gcn_train(train: &[GcnSample], dev: &[GcnSample], config: &GcnConfig) -> Result<TrainedGcn> {
    let first = train.first().ok_or(Error::EmptyInput("GCN training samples"))?;
    if config.batch_size == 0 || !(config.lr > 0.0) {
        return Err(Error::invalid("batch_size must be positive and lr > 0"));
    }
    let mut params = GcnParams::init(first.x.ncols(), config.widths, config.seed);
    let mut theta = params.flatten();
    let mut opt = Nadam::new(theta.len(), config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, GcnParams, usize, Option<f64>)> = None;
    let mut since_best = 0;
    let mut steps = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grad = vec![0.0; theta.len()];
            for &k in batch {
                let (loss, g) = loss_and_gradients(&train[k], &params)?;
                epoch_loss += loss;
                for (acc, v) in grad.iter_mut().zip(g.flatten()) {
                    *acc += v;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|v| *v *= scale);
            opt.step(&mut theta, &grad);
            params = params.unflatten(&theta)?;
            steps += 1;
        }
        let (_, train_auc) = evaluate(train, &params)?;
        log.push(LogRow {
            step: steps,
            split: "train".into(),
            loss: epoch_loss / train.len() as f64,
            auc: train_auc,
        });
        let (score, dev_auc) = if dev.is_empty() {
            (-epoch_loss / train.len() as f64, None)
        } else {
            let (dev_loss, dev_auc) = evaluate(dev, &params)?;
            log.push(LogRow {
                step: steps,
                split: "dev".into(),
                loss: dev_loss,
                auc: dev_auc,
            });
            (dev_auc.unwrap_or(-dev_loss), dev_auc)
        };
        if best.as_ref().map_or(true, |b| score > b.0 + 1e-12) {
            best = Some((score, params.clone(), epoch, dev_auc));
            since_best = 0;
        } else {
            since_best += 1;
            if epoch >= config.min_epochs && since_best >= config.patience {
                break;
            }
        }
    }
    let (_, params, best_epoch, best_dev_auc) = best.expect("at least one epoch");
    Ok(TrainedGcn {
        params,
        log,
        best_epoch,
        best_dev_auc,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2};

    fn small_params(d: usize, w: usize, seed: u64) -> GcnParams {
        let mut p = GcnParams::init(d, [w; 4], seed);
        p.bf.fill(0.1);
        p.bc = 0.3;
        p
    }

    #[test]
    fn zero_adjacency_gives_bias_only() {
        let p = small_params(3, 4, 1);
        let x = Array2::from_elem((4, 3), 0.7);
        let y = gcn_forward(&Array2::zeros((4, 4)), &x, 0, 1, &p).unwrap();
        assert_abs_diff_eq!(y, sigmoid(0.3), epsilon = 1e-15);
    }

    #[test]
    fn shapes_chain() {
        let p = GcnParams::init(5, [16; 4], 0);
        let a = Array2::from_elem((6, 6), 0.1);
        let x = Array2::from_elem((6, 5), 1.0);
        let t = forward_trace(&a, &x, 0, 1, &p).unwrap();
        assert_eq!(t.e.len(), 32);
        assert!(t.y > 0.0 && t.y < 1.0);
        assert!(gcn_forward(&a, &Array2::zeros((6, 4)), 0, 1, &p).is_err());
        assert!(gcn_forward(&Array2::zeros((5, 5)), &x, 0, 1, &p).is_err());
    }

    #[test]
    fn hand_evaluated_three_nodes() {
        // identity kernels, width 2, path 0-1-2 normalized by hand
        let eye = Array2::<f64>::eye(2);
        let p = GcnParams {
            kf: eye.clone(),
            bf: arr1(&[0.0, 0.0]),
            kg: vec![eye.clone(), eye.clone(), eye],
            kc: arr1(&[1.0, 0.0, 0.0, 1.0]),
            bc: -1.0,
        };
        let r = 1.0 / 2f64.sqrt();
        let a = arr2(&[[0.0, r, 0.0], [r, 0.0, r], [0.0, r, 0.0]]);
        let x = arr2(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        // H1 = A X = [[0, r], [2r, r], [0, r]]
        // H2 = A H1 = [[1, .5], [0, 1], [1, .5]]
        // H3 = A H2 = [[0, r], [2r, r], [0, r]]
        let y = gcn_forward(&a, &x, 0, 2, &p).unwrap();
        assert_abs_diff_eq!(y, sigmoid(0.0 + r - 1.0), epsilon = 1e-12);
    }

    #[test]
    fn flatten_round_trip() {
        let p = GcnParams::init(3, [4, 5, 6, 2], 9);
        assert_eq!(p.unflatten(&p.flatten()).unwrap(), p);
        let json = serde_json::to_string(&p.to_checkpoint()).unwrap();
        let back: GcnCheckpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(GcnParams::from_checkpoint(&back).unwrap(), p);
        let mut bad = back;
        bad.dims[1] = 7;
        assert!(GcnParams::from_checkpoint(&bad).is_err());
        assert_eq!(p.dims(), vec![3, 4, 5, 6, 2]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let a = normalized_ring(5);
        let x = Array2::from_shape_fn((5, 3), |(r, c)| ((r * 3 + c) as f64 * 0.37).sin());
        let sample = GcnSample { a_hat: a, x, i: 0, j: 2, label: 1 };
        let p = small_params(3, 4, 5);
        let (_, g) = loss_and_gradients(&sample, &p).unwrap();
        let theta = p.flatten();
        let ga = g.flatten();
        let h = 1e-6;
        let mut num = vec![0.0; theta.len()];
        for k in 0..theta.len() {
            let mut plus = theta.clone();
            plus[k] += h;
            let mut minus = theta.clone();
            minus[k] -= h;
            num[k] = (sample_loss(&sample, &p.unflatten(&plus).unwrap()).unwrap()
                - sample_loss(&sample, &p.unflatten(&minus).unwrap()).unwrap())
                / (2.0 * h);
        }
        let diff: f64 = ga.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = ga.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-6, "relative error {}", diff / norm);
    }

    fn normalized_ring(n: usize) -> Array2<f64> {
        let mut a = Array2::zeros((n, n));
        for k in 0..n {
            a[[k, (k + 1) % n]] = 1.0;
            a[[(k + 1) % n, k]] = 1.0;
        }
        crate::graph::normalized_adjacency(&a).unwrap()
    }

    #[test]
    fn constant_label_loss_decreases() {
        let a = normalized_ring(4);
        let x = Array2::from_shape_fn((4, 2), |(r, c)| 0.5 + (r + c) as f64 * 0.1);
        let samples = vec![GcnSample { a_hat: a, x, i: 0, j: 1, label: 1 }; 4];
        let cfg = GcnConfig { widths: [4; 4], max_epochs: 30, patience: 100, lr: 1e-2, ..Default::default() };
        let trained = gcn_train(&samples, &[], &cfg).unwrap();
        let losses: Vec<f64> = trained.log.iter().filter(|r| r.split == "train").map(|r| r.loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn training_is_seed_deterministic() {
        let a = normalized_ring(4);
        let mk = |label: u8, v: f64| GcnSample {
            a_hat: a.clone(),
            x: Array2::from_elem((4, 2), v),
            i: 0,
            j: 1,
            label,
        };
        let samples = vec![mk(1, 1.0), mk(0, -1.0), mk(1, 0.8), mk(0, -0.6)];
        let cfg = GcnConfig { widths: [4; 4], max_epochs: 5, seed: 3, ..Default::default() };
        let a1 = gcn_train(&samples, &samples, &cfg).unwrap();
        let a2 = gcn_train(&samples, &samples, &cfg).unwrap();
        assert_eq!(a1.params, a2.params);
        assert!(gcn_train(&[], &[], &cfg).is_err());
    }
}
