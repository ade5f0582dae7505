//! Encoder-only Transformer forecaster with a direct multi-horizon head.
//!
//! Per window: linear input embedding, plus linearly embedded calendar
//! encodings of each token's timestamp; `n_layers` pre-norm blocks of
//! multi-head self-attention and a position-wise feed-forward network, each
//! wrapped in a residual connection; mean pooling over tokens; a linear head
//! emitting all `horizon` steps at once.
//!
//! With `patch_len > 1`, consecutive steps are grouped into one token of
//! `patch_len * channels` values, shrinking the attention cost by
//! `patch_len^2`. `patch_len = 1` gives one token per time step.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calendar::{calendar_encoding, CalendarFeature};
use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::preprocess::WindowSample;
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_channels: usize,
    pub window: usize,
    pub horizon: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub calendar: Vec<CalendarFeature>,
    pub patch_len: usize,
    pub dropout: f64,
    pub layer_norm_eps: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_channels: 1,
            window: crate::preprocess::DEFAULT_WINDOW,
            horizon: crate::preprocess::DEFAULT_HORIZON,
            d_model: 64,
            n_heads: 4,
            n_layers: 2,
            d_ff: 128,
            calendar: vec![CalendarFeature::Hour, CalendarFeature::DayOfWeek],
            patch_len: 1,
            dropout: 0.0,
            layer_norm_eps: 1e-5,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.input_channels == 0 || self.window == 0 || self.horizon == 0 {
            return fail("input_channels, window and horizon must be positive".into());
        }
        if self.d_model == 0 || self.n_heads == 0 || self.d_ff == 0 {
            return fail("d_model, n_heads and d_ff must be positive".into());
        }
        if self.d_model % self.n_heads != 0 {
            return fail(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.patch_len == 0 || self.window % self.patch_len != 0 {
            return fail(format!(
                "window {} is not a multiple of patch_len {}",
                self.window, self.patch_len
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.layer_norm_eps > 0.0) {
            return fail("layer_norm_eps must be positive".into());
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn tokens(&self) -> usize {
        self.window / self.patch_len
    }

    pub fn token_width(&self) -> usize {
        self.patch_len * self.input_channels
    }

    /// Every parameter tensor with its shape, in initialization order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let d = self.d_model;
        let mut v = vec![
            ("embed.w".to_string(), vec![self.token_width(), d]),
            ("embed.b".to_string(), vec![1, d]),
        ];
        if !self.calendar.is_empty() {
            v.push(("calendar.w".into(), vec![2 * self.calendar.len(), d]));
        }
        v.push(("calendar.b".into(), vec![1, d]));
        for l in 0..self.n_layers {
            let p = |s: &str| format!("layer{l}.{s}");
            v.push((p("ln1.gamma"), vec![1, d]));
            v.push((p("ln1.beta"), vec![1, d]));
            for w in ["wq", "wk", "wv", "wo"] {
                v.push((p(&format!("attn.{w}")), vec![d, d]));
                v.push((p(&format!("attn.b{}", &w[1..])), vec![1, d]));
            }
            v.push((p("ln2.gamma"), vec![1, d]));
            v.push((p("ln2.beta"), vec![1, d]));
            v.push((p("ffn.w1"), vec![d, self.d_ff]));
            v.push((p("ffn.b1"), vec![1, self.d_ff]));
            v.push((p("ffn.w2"), vec![self.d_ff, d]));
            v.push((p("ffn.b2"), vec![1, d]));
        }
        v.push(("head.w".into(), vec![d, self.horizon]));
        v.push(("head.b".into(), vec![1, self.horizon]));
        v
    }
}

/// Fan-in used to bound the uniform initializer of a parameter.
fn fan_in(name: &str, cfg: &ModelConfig) -> usize {
    let leaf = name.rsplit('.').next().unwrap_or(name);
    let head = name.split('.').next().unwrap_or(name);
    match (head, leaf) {
        ("embed", _) => cfg.token_width(),
        ("calendar", _) => (2 * cfg.calendar.len()).max(1),
        ("head", _) => cfg.d_model,
        (_, "w1") | (_, "b1") => cfg.d_model,
        (_, "w2") | (_, "b2") => cfg.d_ff,
        _ => cfg.d_model,
    }
}

/// Named parameter set in deterministic (sorted) order.
pub type ParamStore = BTreeMap<String, Tensor>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub parameters: ParamStore,
    pub train_loss_curve: Vec<f64>,
}

/// Graph handles for one attention block.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub wq: Var,
    pub bq: Var,
    pub wk: Var,
    pub bk: Var,
    pub wv: Var,
    pub bv: Var,
    pub wo: Var,
    pub bo: Var,
}

/// `softmax(Q K^T / sqrt(d_k)) V`; also returns the attention weights node.
pub fn attend(g: &mut Graph, q: Var, k: Var, v: Var) -> Result<(Var, Var)> {
    let d_k = g.value(q).cols();
    let scores = g.matmul_bt(q, k)?;
    let scaled = g.scale(scores, 1.0 / (d_k as f64).sqrt());
    let weights = g.softmax_rows(scaled);
    let out = g.matmul(weights, v)?;
    Ok((out, weights))
}

/// Multi-head self-attention over the rows of `x`.
pub fn multi_head(g: &mut Graph, x: Var, p: &AttentionVars, n_heads: usize) -> Result<Var> {
    let d = g.value(x).cols();
    if n_heads == 0 || d % n_heads != 0 {
        return Err(Error::Config(format!("width {d} not divisible into {n_heads} heads")));
    }
    let d_k = d / n_heads;
    let q = g.linear(x, p.wq, p.bq)?;
    let k = g.linear(x, p.wk, p.bk)?;
    let v = g.linear(x, p.wv, p.bv)?;
    let mut heads = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = g.slice_cols(q, h * d_k, d_k)?;
        let kh = g.slice_cols(k, h * d_k, d_k)?;
        let vh = g.slice_cols(v, h * d_k, d_k)?;
        heads.push(attend(g, qh, kh, vh)?.0);
    }
    let cat = if n_heads == 1 { heads[0] } else { g.concat_cols(&heads)? };
    g.linear(cat, p.wo, p.bo)
}

/// `ReLU(x W1 + b1) W2 + b2`, row by row.
pub fn ffn(g: &mut Graph, x: Var, w1: Var, b1: Var, w2: Var, b2: Var) -> Result<Var> {
    let h = g.linear(x, w1, b1)?;
    let h = g.relu(h);
    g.linear(h, w2, b2)
}

fn run_const<F>(inputs: &[&Tensor], f: F) -> Result<Tensor>
where
    F: FnOnce(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant((*t).clone())).collect();
    let out = f(&mut g, &vars)?;
    Ok(g.value(out).clone())
}

/// Scaled dot-product attention on plain tensors.
pub fn scaled_dot_attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    check_cols(q, k, "attention query/key")?;
    if k.rows() != v.rows() {
        return Err(Error::Config("keys and values need the same row count".into()));
    }
    run_const(&[q, k, v], |g, x| Ok(attend(g, x[0], x[1], x[2])?.0))
}

/// Attention weight matrix `softmax(Q K^T / sqrt(d_k))`.
pub fn attention_weights(q: &Tensor, k: &Tensor) -> Result<Tensor> {
    check_cols(q, k, "attention query/key")?;
    let v = Tensor::zeros(&[k.rows(), 1]);
    run_const(&[q, k, &v], |g, x| Ok(attend(g, x[0], x[1], x[2])?.1))
}

fn check_cols(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::Config(format!("{what}: inner dimensions differ")));
    }
    Ok(())
}

/// Plain-tensor attention projections.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams {
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
}

pub fn multi_head_attention(x: &Tensor, p: &AttentionParams, n_heads: usize) -> Result<Tensor> {
    let inputs = [x, &p.wq, &p.bq, &p.wk, &p.bk, &p.wv, &p.bv, &p.wo, &p.bo];
    run_const(&inputs, |g, v| {
        let vars = AttentionVars {
            wq: v[1],
            bq: v[2],
            wk: v[3],
            bk: v[4],
            wv: v[5],
            bv: v[6],
            wo: v[7],
            bo: v[8],
        };
        multi_head(g, v[0], &vars, n_heads)
    })
}

pub fn feed_forward(h: &Tensor, w1: &Tensor, b1: &Tensor, w2: &Tensor, b2: &Tensor) -> Result<Tensor> {
    run_const(&[h, w1, b1, w2, b2], |g, v| ffn(g, v[0], v[1], v[2], v[3], v[4]))
}

pub fn layer_norm(x: &Tensor, scale: &Tensor, shift: &Tensor, eps: f64) -> Result<Tensor> {
    if !(eps > 0.0) {
        return Err(Error::Parameter("layer norm epsilon must be positive".into()));
    }
    run_const(&[x, scale, shift], |g, v| g.layer_norm(v[0], v[1], v[2], eps))
}

/// A recorded forward pass.
pub struct ForwardPass {
    pub graph: Graph,
    pub output: Var,
    pub params: Vec<(String, Var)>,
}

/// Dropout masks for one training sample.
pub struct DropoutRng(ChaCha8Rng);

impl DropoutRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn mask(&mut self, len: usize, p: f64) -> Vec<f64> {
        let keep = 1.0 / (1.0 - p);
        (0..len)
            .map(|_| if self.0.random::<f64>() < p { 0.0 } else { keep })
            .collect()
    }
}

impl TrainedModel {
    /// Fresh parameters: weights and biases uniform in `+-1/sqrt(fan_in)`,
    /// layer-norm scales 1 and shifts 0.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut parameters = ParamStore::new();
        for (name, shape) in config.param_shapes() {
            let n: usize = shape.iter().product();
            let data = if name.ends_with(".gamma") {
                vec![1.0; n]
            } else if name.ends_with(".beta") {
                vec![0.0; n]
            } else {
                let bound = 1.0 / (fan_in(&name, &config) as f64).sqrt();
                (0..n).map(|_| rng.random_range(-bound..bound)).collect()
            };
            parameters.insert(name, Tensor::new(shape, data)?);
        }
        Ok(Self {
            config,
            parameters,
            train_loss_curve: Vec::new(),
        })
    }

    /// Check parameter names and shapes against the config.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let expected = self.config.param_shapes();
        if expected.len() != self.parameters.len() {
            return Err(Error::Config(format!(
                "expected {} parameter tensors, found {}",
                expected.len(),
                self.parameters.len()
            )));
        }
        for (name, shape) in expected {
            match self.parameters.get(&name) {
                Some(t) if t.shape == shape && t.data.len() == shape.iter().product::<usize>() => {}
                Some(t) => {
                    return Err(Error::Config(format!(
                        "parameter {name} has shape {:?}, config implies {shape:?}",
                        t.shape
                    )))
                }
                None => return Err(Error::Config(format!("parameter {name} missing"))),
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.parameters.values().map(Tensor::len).sum()
    }

    fn check_sample(&self, input: &[f64], timestamps: &[Timestamp]) -> Result<()> {
        let c = &self.config;
        if input.len() != c.window * c.input_channels {
            return Err(Error::Config(format!(
                "model expects {} steps x {} channels, got {} values",
                c.window,
                c.input_channels,
                input.len()
            )));
        }
        if timestamps.len() != c.window {
            return Err(Error::Config(format!(
                "model expects {} timestamps, got {}",
                c.window,
                timestamps.len()
            )));
        }
        Ok(())
    }

    /// Record a forward pass over one window (`[window x channels]`, row-major).
    pub fn forward_graph(
        &self,
        input: &[f64],
        timestamps: &[Timestamp],
        mut dropout: Option<&mut DropoutRng>,
    ) -> Result<ForwardPass> {
        self.check_sample(input, timestamps)?;
        let c = &self.config;
        let mut g = Graph::new();
        let mut params = Vec::with_capacity(self.parameters.len());
        let mut vars: BTreeMap<&str, Var> = BTreeMap::new();
        for (name, t) in &self.parameters {
            let v = g.param(t.clone());
            vars.insert(name.as_str(), v);
            params.push((name.clone(), v));
        }
        let p = |name: &str| -> Result<Var> {
            vars.get(name)
                .copied()
                .ok_or_else(|| Error::Config(format!("parameter {name} missing")))
        };

        let n_tok = c.tokens();
        let x = g.constant(Tensor::matrix(n_tok, c.token_width(), input.to_vec())?);
        let mut h = g.linear(x, p("embed.w")?, p("embed.b")?)?;
        let cal_rows: Vec<f64> = (0..n_tok)
            .flat_map(|i| calendar_encoding(timestamps[i * c.patch_len], &c.calendar))
            .collect();
        let cal = if c.calendar.is_empty() {
            g.constant(Tensor::zeros(&[n_tok, c.d_model]))
        } else {
            let cal_in = g.constant(Tensor::matrix(n_tok, 2 * c.calendar.len(), cal_rows)?);
            g.matmul(cal_in, p("calendar.w")?)?
        };
        let cal = g.add_row(cal, p("calendar.b")?)?;
        h = g.add(h, cal)?;

        let drop = c.dropout;
        for l in 0..c.n_layers {
            let name = |s: &str| format!("layer{l}.{s}");
            let n1 = g.layer_norm(h, p(&name("ln1.gamma"))?, p(&name("ln1.beta"))?, c.layer_norm_eps)?;
            let av = AttentionVars {
                wq: p(&name("attn.wq"))?,
                bq: p(&name("attn.bq"))?,
                wk: p(&name("attn.wk"))?,
                bk: p(&name("attn.bk"))?,
                wv: p(&name("attn.wv"))?,
                bv: p(&name("attn.bv"))?,
                wo: p(&name("attn.wo"))?,
                bo: p(&name("attn.bo"))?,
            };
            let mut a = multi_head(&mut g, n1, &av, c.n_heads)?;
            if let Some(rng) = dropout.as_deref_mut().filter(|_| drop > 0.0) {
                a = g.mask(a, rng.mask(n_tok * c.d_model, drop))?;
            }
            h = g.add(h, a)?;
            let n2 = g.layer_norm(h, p(&name("ln2.gamma"))?, p(&name("ln2.beta"))?, c.layer_norm_eps)?;
            let mut f = ffn(
                &mut g,
                n2,
                p(&name("ffn.w1"))?,
                p(&name("ffn.b1"))?,
                p(&name("ffn.w2"))?,
                p(&name("ffn.b2"))?,
            )?;
            if let Some(rng) = dropout.as_deref_mut().filter(|_| drop > 0.0) {
                f = g.mask(f, rng.mask(n_tok * c.d_model, drop))?;
            }
            h = g.add(h, f)?;
        }
        let pooled = g.mean_rows(h);
        let output = g.linear(pooled, p("head.w")?, p("head.b")?)?;
        Ok(ForwardPass { graph: g, output, params })
    }

    fn check_window(&self, sample: &WindowSample) -> Result<()> {
        if sample.channels != self.config.input_channels {
            return Err(Error::Config(format!(
                "model was built for {} channels, sample has {} (feature setting {})",
                self.config.input_channels, sample.channels, sample.setting
            )));
        }
        Ok(())
    }

    /// Forecast `horizon` steps for one window.
    pub fn forward(&self, sample: &WindowSample) -> Result<Vec<f64>> {
        self.check_window(sample)?;
        let pass = self.forward_graph(&sample.input, &sample.input_timestamps(), None)?;
        Ok(pass.graph.value(pass.output).data.clone())
    }

    pub fn predict_batch(&self, samples: &[WindowSample]) -> Result<Vec<Vec<f64>>> {
        samples.iter().map(|s| self.forward(s)).collect()
    }

    /// MSE loss on one sample and its gradient for every parameter.
    pub fn loss_and_grads(
        &self,
        sample: &WindowSample,
        dropout: Option<&mut DropoutRng>,
    ) -> Result<(f64, BTreeMap<String, Vec<f64>>)> {
        self.check_window(sample)?;
        if sample.target.len() != self.config.horizon {
            return Err(Error::Config(format!(
                "target has {} steps, model horizon is {}",
                sample.target.len(),
                self.config.horizon
            )));
        }
        let mut pass = self.forward_graph(&sample.input, &sample.input_timestamps(), dropout)?;
        let loss = pass.graph.mse(pass.output, &sample.target)?;
        let value = pass.graph.value(loss).data[0];
        let grads = pass.graph.backward(loss)?;
        let map = pass
            .params
            .iter()
            .map(|(name, v)| (name.clone(), grads.wrt(*v)))
            .collect();
        Ok((value, map))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny_config() -> ModelConfig {
        ModelConfig {
            input_channels: 2,
            window: 8,
            horizon: 2,
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            calendar: vec![CalendarFeature::Hour],
            seed: 3,
            ..ModelConfig::default()
        }
    }

    fn sample(cfg: &ModelConfig, seed: u64) -> WindowSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        WindowSample {
            input: (0..cfg.window * cfg.input_channels).map(|_| rng.random_range(0.0..1.0)).collect(),
            window: cfg.window,
            channels: cfg.input_channels,
            input_start: Timestamp::from_ymd_hms(2021, 9, 1, 5, 0, 0),
            step: 600,
            target: (0..cfg.horizon).map(|_| rng.random_range(0.0..1.0)).collect(),
            target_lot: "L".into(),
            zone_id: "Z".into(),
            setting: crate::preprocess::FeatureSetting::AllLots,
            offset: 0,
        }
    }

    #[test]
    fn rejects_indivisible_heads() {
        let cfg = ModelConfig { d_model: 10, n_heads: 4, ..tiny_config() };
        assert!(matches!(TrainedModel::init(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn output_has_horizon_length() {
        let cfg = tiny_config();
        let m = TrainedModel::init(cfg.clone()).unwrap();
        assert_eq!(m.forward(&sample(&cfg, 1)).unwrap().len(), 2);
    }

    #[test]
    fn channel_mismatch_fails_loudly() {
        let cfg = tiny_config();
        let m = TrainedModel::init(cfg.clone()).unwrap();
        let mut s = sample(&cfg, 1);
        s.channels = 1;
        s.input.truncate(8);
        assert!(matches!(m.forward(&s), Err(Error::Config(_))));
    }

    #[test]
    fn zero_parameters_predict_head_bias() {
        let cfg = tiny_config();
        let mut m = TrainedModel::init(cfg.clone()).unwrap();
        for (name, t) in m.parameters.iter_mut() {
            let keep = name == "head.b";
            for v in t.data.iter_mut() {
                *v = if keep { 0.25 } else { 0.0 };
            }
        }
        assert_eq!(m.forward(&sample(&cfg, 4)).unwrap(), vec![0.25, 0.25]);
    }

    #[test]
    fn samples_do_not_interact() {
        let cfg = tiny_config();
        let m = TrainedModel::init(cfg.clone()).unwrap();
        let a = sample(&cfg, 1);
        let b = sample(&cfg, 2);
        let single = m.forward(&a).unwrap();
        let batch = m.predict_batch(&[a.clone(), b, a]).unwrap();
        assert_eq!(batch[0], single);
        assert_eq!(batch[2], single);
    }

    #[test]
    fn init_is_deterministic_and_shapes_validate() {
        let cfg = tiny_config();
        let a = TrainedModel::init(cfg.clone()).unwrap();
        let b = TrainedModel::init(cfg).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let mut broken = a.clone();
        broken.parameters.get_mut("head.w").unwrap().shape = vec![2, 8];
        assert!(broken.validate().is_err());
    }

    #[test]
    fn patched_tokens() {
        let cfg = ModelConfig { patch_len: 4, ..tiny_config() };
        assert_eq!(cfg.tokens(), 2);
        let m = TrainedModel::init(cfg.clone()).unwrap();
        assert_eq!(m.parameters["embed.w"].shape, vec![8, 8]);
        assert_eq!(m.forward(&sample(&cfg, 1)).unwrap().len(), 2);
        assert!(TrainedModel::init(ModelConfig { patch_len: 3, ..tiny_config() }).is_err());
    }
}
