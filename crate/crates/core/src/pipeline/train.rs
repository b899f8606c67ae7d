use std::fmt::Write as _;
use std::ops::Range;
use std::time::Instant;

use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{window_starts, FeatureDataset};
use crate::neural::{init_model, train_step, LstmModel, OptimizerState};

use super::generate::{teacher_forced_overlay, Predictor};
use super::{Channel, PipelineConfig, PipelineError};

/// One trained network per modeled channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub real: LstmModel,
    /// Absent in ablation mode.
    pub imag: Option<LstmModel>,
}

impl TrainedModels {
    pub fn get(&self, channel: Channel) -> Option<&LstmModel> {
        match channel {
            Channel::Real => Some(&self.real),
            Channel::Imag => self.imag.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetReport {
    pub channel: Channel,
    /// Mean training loss of each epoch.
    pub epoch_loss: Vec<f64>,
    /// One-step-ahead MSE over the test windows after the last epoch.
    pub test_mse: f64,
    pub train_windows: usize,
    pub test_windows: usize,
    pub steps: usize,
    /// Steps whose gradient norm exceeded the clip threshold.
    pub clipped_steps: usize,
    pub max_grad_norm: f64,
    /// Wall-clock seconds per epoch. Not serialized, so reports stay byte-stable.
    #[serde(skip)]
    pub epoch_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: PipelineConfig,
    pub nets: Vec<NetReport>,
}

impl TrainReport {
    pub fn net(&self, channel: Channel) -> Option<&NetReport> {
        self.nets.iter().find(|n| n.channel == channel)
    }

    /// `{"real": [...], "imag": [...]}` epoch wall-times.
    pub fn timings_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for net in &self.nets {
            let key = match net.channel {
                Channel::Real => "real",
                Channel::Imag => "imag",
            };
            map.insert(key.into(), serde_json::json!(net.epoch_secs));
        }
        serde_json::Value::Object(map)
    }
}

/// `epoch,loss_real,loss_imag` rows, the imaginary column blank when absent.
pub fn loss_csv(report: &TrainReport) -> String {
    let real = report.net(Channel::Real).map(|n| n.epoch_loss.as_slice()).unwrap_or(&[]);
    let imag = report.net(Channel::Imag).map(|n| n.epoch_loss.as_slice()).unwrap_or(&[]);
    let mut out = String::from("epoch,loss_real,loss_imag\n");
    for e in 0..real.len().max(imag.len()) {
        let cell = |v: &[f64]| v.get(e).map(|x| x.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", e + 1, cell(real), cell(imag)).expect("write to string");
    }
    out
}

pub(crate) fn channel_data(dataset: &FeatureDataset, channel: Channel) -> &[f64] {
    match channel {
        Channel::Real => &dataset.real_channel,
        Channel::Imag => &dataset.imag_channel,
    }
}

pub(crate) fn batch_arrays(channel: &[f64], starts: &[usize], window_len: usize, horizon: usize) -> (Array3<f64>, Array2<f64>) {
    let inputs = Array3::from_shape_fn((starts.len(), window_len, 1), |(b, t, _)| channel[starts[b] + t]);
    let targets = Array2::from_shape_fn((starts.len(), horizon), |(b, k)| channel[starts[b] + window_len + k]);
    (inputs, targets)
}

fn seeds(base: u64, channel: Channel) -> (u64, u64) {
    let lane = match channel {
        Channel::Real => 0,
        Channel::Imag => 1,
    };
    let init = base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(2 * lane);
    (init, init.wrapping_add(1))
}

fn intervals(dataset: &FeatureDataset, config: &PipelineConfig) -> Result<(Range<usize>, Range<usize>), PipelineError> {
    if dataset.window_len != config.window_len || dataset.horizon != config.horizon {
        return Err(PipelineError::ModelMismatch {
            expected: format!("window {} horizon {}", config.window_len, config.horizon),
            found: format!("window {} horizon {}", dataset.window_len, dataset.horizon),
        });
    }
    Ok((dataset.train_interval(), dataset.test_interval()))
}

fn train_channel(
    dataset: &FeatureDataset,
    config: &PipelineConfig,
    channel: Channel,
) -> Result<(LstmModel, NetReport), PipelineError> {
    let (train_range, test_range) = intervals(dataset, config)?;
    let data = channel_data(dataset, channel);
    let (w, h) = (config.window_len, config.horizon);
    let mut order = window_starts(train_range, w, h, config.window_stride)?;
    let (init_seed, shuffle_seed) = seeds(config.train.seed, channel);
    let mut model = init_model(config.model_shape(), init_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut state = OptimizerState::new();

    let mut epoch_loss = Vec::with_capacity(config.train.epochs);
    let mut epoch_secs = Vec::with_capacity(config.train.epochs);
    let (mut clipped_steps, mut max_grad_norm) = (0usize, 0.0f64);
    for epoch in 0..config.train.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.train.batch_size) {
            let (x, y) = batch_arrays(data, batch, w, h);
            let stats = train_step(&mut model, &mut state, &config.train, x.view(), y.view()).map_err(|source| {
                PipelineError::Diverged {
                    channel,
                    epoch: epoch + 1,
                    source,
                }
            })?;
            total += stats.loss * batch.len() as f64;
            clipped_steps += usize::from(stats.clipped);
            max_grad_norm = max_grad_norm.max(stats.grad_norm);
        }
        let mean = total / order.len() as f64;
        epoch_loss.push(mean);
        epoch_secs.push(started.elapsed().as_secs_f64());
        log::info!(
            "{channel:?} net epoch {}/{}: loss {mean:.6} ({:.1}s)",
            epoch + 1,
            config.train.epochs,
            epoch_secs[epoch]
        );
    }

    let overlay = teacher_forced_overlay(channel, &model, data, test_range, w, h, config.eval_stride)?;
    let report = NetReport {
        channel,
        epoch_loss,
        test_mse: overlay.mse(),
        train_windows: order.len(),
        test_windows: overlay.positions.len(),
        steps: state.steps() as usize,
        clipped_steps,
        max_grad_norm,
        epoch_secs,
    };
    Ok((model, report))
}

/// Trains one network per channel on shuffled training windows and scores
/// each on the test interval.
pub fn train(
    dataset: &FeatureDataset,
    config: &PipelineConfig,
) -> Result<(TrainedModels, TrainReport), PipelineError> {
    config.validate()?;
    intervals(dataset, config)?;
    let (real, imag) = if config.ablation {
        (train_channel(dataset, config, Channel::Real)?, None)
    } else if config.single_thread {
        let real = train_channel(dataset, config, Channel::Real)?;
        (real, Some(train_channel(dataset, config, Channel::Imag)?))
    } else {
        std::thread::scope(|s| {
            let imag = s.spawn(|| train_channel(dataset, config, Channel::Imag));
            let real = train_channel(dataset, config, Channel::Real);
            let imag = imag.join().expect("imaginary-channel training thread panicked");
            Ok::<_, PipelineError>((real?, Some(imag?)))
        })?
    };
    let mut nets = vec![real.1];
    let imag_model = imag.map(|(m, r)| {
        nets.push(r);
        m
    });
    Ok((
        TrainedModels {
            real: real.0,
            imag: imag_model,
        },
        TrainReport {
            config: config.clone(),
            nets,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub channel: Channel,
    pub train_mse: f64,
    pub test_mse: f64,
}

/// Teacher-forced one-step MSE on both intervals for every modeled channel.
pub fn evaluate(
    models: &[(Channel, &dyn Predictor)],
    dataset: &FeatureDataset,
    config: &PipelineConfig,
) -> Result<Vec<EvalReport>, PipelineError> {
    let (train_range, test_range) = intervals(dataset, config)?;
    let (w, h, s) = (config.window_len, config.horizon, config.eval_stride);
    models
        .iter()
        .map(|&(channel, model)| {
            let data = channel_data(dataset, channel);
            Ok(EvalReport {
                channel,
                train_mse: teacher_forced_overlay(channel, model, data, train_range.clone(), w, h, s)?.mse(),
                test_mse: teacher_forced_overlay(channel, model, data, test_range.clone(), w, h, s)?.mse(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::ModelShape;
    use crate::pipeline::{prepare, synth_tone_mix, Partial};

    fn tiny() -> (FeatureDataset, PipelineConfig) {
        let mut config = PipelineConfig {
            window_len: 16,
            window_stride: 4,
            eval_stride: 2,
            hidden_size: 6,
            num_layers: 1,
            single_thread: true,
            ..Default::default()
        };
        config.train.epochs = 1;
        config.train.batch_size = 8;
        let clip = synth_tone_mix(0.2, 5000, &[Partial::new(300.0, 0.7)], 0.05, 1).unwrap();
        (prepare(&clip, &config).unwrap(), config)
    }

    #[test]
    fn one_epoch_report_shape() {
        let (ds, config) = tiny();
        let (models, report) = train(&ds, &config).unwrap();
        assert!(models.imag.is_some());
        assert_eq!(report.nets.len(), 2);
        for net in &report.nets {
            assert_eq!(net.epoch_loss.len(), 1);
            assert_eq!(net.epoch_secs.len(), 1);
            assert!(net.test_mse.is_finite());
        }
        let csv = loss_csv(&report);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("epoch,loss_real,loss_imag\n1,"));
    }

    #[test]
    fn seeded_runs_match_and_threads_do_not_matter() {
        let (ds, config) = tiny();
        let (m1, r1) = train(&ds, &config).unwrap();
        let (m2, r2) = train(&ds, &config).unwrap();
        let threaded = PipelineConfig {
            single_thread: false,
            ..config.clone()
        };
        let (m3, r3) = train(&ds, &threaded).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1, m3);
        let json = |r: &TrainReport| serde_json::to_string(&r.nets).unwrap();
        assert_eq!(json(&r1), json(&r2));
        assert_eq!(json(&r1), json(&r3));
    }

    #[test]
    fn ablation_trains_one_network() {
        let (_, mut config) = tiny();
        config.ablation = true;
        let clip = synth_tone_mix(0.2, 5000, &[Partial::new(300.0, 0.7)], 0.05, 1).unwrap();
        let ds = prepare(&clip, &config).unwrap();
        let (models, report) = train(&ds, &config).unwrap();
        assert!(models.imag.is_none());
        assert_eq!(report.nets.len(), 1);
        assert!(loss_csv(&report).lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn zero_model_scores_target_second_moment() {
        let (ds, config) = tiny();
        let zero = LstmModel::zeros(ModelShape {
            input_size: 1,
            hidden_size: 3,
            output_size: 1,
            num_layers: 1,
        });
        let reports = evaluate(&[(Channel::Real, &zero), (Channel::Imag, &zero)], &ds, &config).unwrap();
        for r in &reports {
            let data = channel_data(&ds, r.channel);
            for (range, got) in [(ds.train_interval(), r.train_mse), (ds.test_interval(), r.test_mse)] {
                let starts = window_starts(range, config.window_len, 1, config.eval_stride).unwrap();
                let expected =
                    starts.iter().map(|s| data[s + config.window_len].powi(2)).sum::<f64>() / starts.len() as f64;
                assert!((got - expected).abs() < 1e-14);
            }
        }
        let again = evaluate(&[(Channel::Real, &zero)], &ds, &config).unwrap();
        assert_eq!(again[0], reports[0]);
    }

    #[test]
    fn mismatched_window_is_rejected() {
        let (ds, config) = tiny();
        let other = PipelineConfig {
            window_len: 20,
            ..config
        };
        assert!(matches!(train(&ds, &other), Err(PipelineError::ModelMismatch { .. })));
    }
}
