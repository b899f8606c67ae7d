use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;

use super::{prepare, train, PipelineConfig, PipelineError, TrainReport};

/// Published test losses this comparison mirrors: raw-waveform baseline and
/// fractional-domain model. The data differ, so only the ordering carries over.
pub const REFERENCE_BASELINE_MSE: f64 = 0.0351;
pub const REFERENCE_FRFT_MSE: f64 = 0.0155;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    /// Mean of the per-network test MSEs.
    pub test_mse: f64,
    pub report: TrainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub fractional: ArmReport,
    pub raw: ArmReport,
    pub reference_baseline_mse: f64,
    pub reference_frft_mse: f64,
}

impl AblationReport {
    pub fn fractional_wins(&self) -> bool {
        self.fractional.test_mse <= self.raw.test_mse
    }
}

/// Prepares and trains one arm under `config` as given.
pub fn run_arm(clip: &AudioClip, config: &PipelineConfig) -> Result<ArmReport, PipelineError> {
    let dataset = prepare(clip, config)?;
    let (_, report) = train(&dataset, config)?;
    let test_mse = report.nets.iter().map(|n| n.test_mse).sum::<f64>() / report.nets.len() as f64;
    Ok(ArmReport { test_mse, report })
}

/// Trains the fractional-domain pipeline and the identity-transform baseline
/// with the same budget, seeds and architecture.
pub fn run_ablation(clip: &AudioClip, config: &PipelineConfig) -> Result<AblationReport, PipelineError> {
    let fractional = run_arm(
        clip,
        &PipelineConfig {
            ablation: false,
            ..config.clone()
        },
    )?;
    let raw = run_arm(
        clip,
        &PipelineConfig {
            ablation: true,
            ..config.clone()
        },
    )?;
    Ok(compare_arms(fractional, raw))
}

pub fn compare_arms(fractional: ArmReport, raw: ArmReport) -> AblationReport {
    log::info!(
        "ablation: fractional {:.6} vs raw {:.6}",
        fractional.test_mse,
        raw.test_mse
    );
    AblationReport {
        fractional,
        raw,
        reference_baseline_mse: REFERENCE_BASELINE_MSE,
        reference_frft_mse: REFERENCE_FRFT_MSE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{synth_tone_mix, Channel, Partial};

    #[test]
    fn both_arms_report() {
        let mut config = PipelineConfig {
            window_len: 12,
            window_stride: 3,
            hidden_size: 5,
            num_layers: 1,
            single_thread: true,
            ..Default::default()
        };
        config.train.epochs = 2;
        let clip = synth_tone_mix(0.1, 5000, &[Partial::new(250.0, 0.5), Partial::new(410.0, 0.3)], 0.05, 2).unwrap();
        let r = run_ablation(&clip, &config).unwrap();
        assert_eq!(r.fractional.report.nets.len(), 2);
        assert_eq!(r.raw.report.nets.len(), 1);
        assert_eq!(r.raw.report.nets[0].channel, Channel::Real);
        assert!(r.fractional.test_mse.is_finite() && r.raw.test_mse.is_finite());
        assert!(r.raw.report.config.ablation && !r.fractional.report.config.ablation);
        assert_eq!(r.reference_frft_mse, 0.0155);
        assert_eq!(r.reference_baseline_mse, 0.0351);
    }
}
