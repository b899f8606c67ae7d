use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use frlstm_core::pipeline::{self, loss_csv, teacher_forced_overlay, ChannelOverlay, Predictor};
use frlstm_core::transforms::stft;
use frlstm_core::{
    frft, load_dataset, read_wav, resample, save_dataset, write_wav, Channel, Checkpoint, ComplexSignal,
    FeatureDataset, PipelineConfig, PipelineError,
};
use serde_json::json;

use crate::args::{AblateArgs, AnalyzeArgs, CommonArgs, GenerateArgs, OverlayRange, PrepareArgs, TrainArgs};
use crate::error::CliError;
use crate::svg;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_file(path, text)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let config = args.common.effective_config()?;
    let clip = resample(&read_wav(&args.input)?, config.sample_rate_hz)?;
    let dir = &args.out_dir;
    let rate = f64::from(clip.sample_rate_hz());

    let mut time = String::from("index,time_s,amplitude\n");
    for (i, s) in clip.samples().iter().enumerate() {
        writeln!(time, "{i},{},{s}", i as f64 / rate).unwrap();
    }
    write_file(&dir.join("time.csv"), &time)?;

    let spec = stft(&clip, args.stft_window, args.stft_hop)?;
    let mut stft_csv = String::from("frame,time_s,bin,freq_hz,magnitude\n");
    for (f, row) in spec.magnitudes.iter().enumerate() {
        let t = spec.frame_time_secs(f);
        for (b, m) in row.iter().enumerate() {
            writeln!(stft_csv, "{f},{t},{b},{},{m}", spec.bin_frequency_hz(b)).unwrap();
        }
    }
    write_file(&dir.join("stft.csv"), &stft_csv)?;

    let features = frft(&ComplexSignal::from_real(clip.samples())?, config.frft_order, config.kernel)?;
    let (re, im) = (features.re(), features.im());
    for (name, values) in [("frft_real.csv", &re), ("frft_imag.csv", &im)] {
        let mut csv = String::from("index,value\n");
        for (i, v) in values.iter().enumerate() {
            writeln!(csv, "{i},{v}").unwrap();
        }
        write_file(&dir.join(name), &csv)?;
    }
    write_json(
        &dir.join("analyze.json"),
        &json!({"config": config, "input": args.input, "samples": clip.len()}),
    )?;

    if args.svg {
        write_file(&dir.join("time.svg"), svg::line_chart("waveform", &[("amplitude", clip.samples())]))?;
        write_file(&dir.join("stft.svg"), svg::heatmap("STFT magnitude (log)", &spec.magnitudes))?;
        let title = format!("fractional domain, order {}", config.frft_order);
        write_file(&dir.join("frft.svg"), svg::line_chart(&title, &[("real", &re), ("imag", &im)]))?;
    }
    log::info!("wrote feature maps for {} samples to {}", clip.len(), dir.display());
    Ok(())
}

pub fn prepare(args: &PrepareArgs) -> Result<(), CliError> {
    let config = args.common.effective_config()?;
    let clip = read_wav(&args.input)?;
    let dataset = pipeline::prepare(&clip, &config)?;
    save_dataset(&dataset, &args.output)?;
    write_json(
        &sidecar(&args.output),
        &json!({
            "config": config,
            "input": args.input,
            "length": dataset.len(),
            "split_index": dataset.split_index,
            "real_norm": dataset.real_norm,
            "imag_norm": dataset.imag_norm,
        }),
    )?;
    log::info!(
        "dataset of {} samples (split at {}) written to {}",
        dataset.len(),
        dataset.split_index,
        args.output.display()
    );
    Ok(())
}

/// Effective config with window geometry taken from the dataset.
fn config_for_dataset(
    common: &CommonArgs,
    mut config: PipelineConfig,
    dataset: &FeatureDataset,
) -> Result<PipelineConfig, CliError> {
    for (flag, given, actual) in [
        ("--window", common.window, dataset.window_len),
        ("--horizon", common.horizon, dataset.horizon),
    ] {
        if given.is_some_and(|g| g != actual) {
            return Err(CliError::Format(format!(
                "{flag} {} does not match the dataset's {actual}",
                given.unwrap()
            )));
        }
    }
    config.window_len = dataset.window_len;
    config.horizon = dataset.horizon;
    let imag_is_empty = dataset.imag_channel.iter().all(|v| *v == 0.0);
    if imag_is_empty && !config.ablation {
        return Err(CliError::Config(
            "dataset has no imaginary channel (prepared with --ablation); pass --ablation".into(),
        ));
    }
    config.validate()?;
    Ok(config)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let config = args.common.effective_config()?;
    let dataset = load_dataset(&args.dataset)?;
    let config = config_for_dataset(&args.common, config, &dataset)?;
    let (models, report) = pipeline::train(&dataset, &config)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let checkpoint = |model| Checkpoint {
        model,
        window_len: config.window_len,
        horizon: config.horizon,
    };
    let real = dir.join("real.fwm1");
    checkpoint(models.real).save(&real)?;
    if let Some(imag) = models.imag {
        checkpoint(imag).save(dir.join("imag.fwm1"))?;
    }
    write_json(&dir.join("report.json"), &report)?;
    write_file(&dir.join("loss.csv"), loss_csv(&report))?;
    if let Some(path) = &args.timings {
        write_json(path, &report.timings_json())?;
    }
    if args.svg {
        let series: Vec<(&str, &[f64])> = report
            .nets
            .iter()
            .map(|n| {
                let name = match n.channel {
                    Channel::Real => "real",
                    Channel::Imag => "imag",
                };
                (name, n.epoch_loss.as_slice())
            })
            .collect();
        write_file(&dir.join("loss.svg"), svg::line_chart("training loss per epoch", &series))?;
    }
    for net in &report.nets {
        log::info!("{:?} network test MSE {:.6}", net.channel, net.test_mse);
    }
    Ok(())
}

fn load_checkpoint(path: &Path, dataset: &FeatureDataset) -> Result<Checkpoint, CliError> {
    let ckpt = Checkpoint::load(path)?;
    if ckpt.window_len != dataset.window_len || ckpt.horizon != dataset.horizon {
        return Err(PipelineError::ModelMismatch {
            expected: format!("window {} horizon {}", dataset.window_len, dataset.horizon),
            found: format!(
                "{} trained on window {} horizon {}",
                path.display(),
                ckpt.window_len,
                ckpt.horizon
            ),
        }
        .into());
    }
    Ok(ckpt)
}

fn overlay_csv(overlays: &[ChannelOverlay]) -> String {
    let mut out = String::from("channel,position,offset,predicted,truth\n");
    for o in overlays {
        let name = match o.channel {
            Channel::Real => "real",
            Channel::Imag => "imag",
        };
        let horizon = o.predicted.len() / o.positions.len().max(1);
        for (i, pos) in o.positions.iter().enumerate() {
            for k in 0..horizon {
                let j = i * horizon + k;
                writeln!(out, "{name},{pos},{k},{},{}", o.predicted[j], o.truth[j]).unwrap();
            }
        }
    }
    out
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let config = args.common.effective_config()?;
    let dataset = load_dataset(&args.dataset)?;
    let config = config_for_dataset(&args.common, config, &dataset)?;
    let real = load_checkpoint(&args.real, &dataset)?;
    let imag = match (&args.imag, config.ablation) {
        (_, true) => None,
        (Some(p), false) => Some(load_checkpoint(p, &dataset)?),
        (None, false) => return Err(CliError::Config("--imag is required without --ablation".into())),
    };
    let seed_start = args.seed_start.unwrap_or(dataset.split_index);
    let result = pipeline::generate(
        &real.model,
        imag.as_ref().map(|c| &c.model as &dyn Predictor),
        &dataset,
        &config,
        seed_start,
        args.samples,
    )?;
    let clipped = write_wav(&result.audio, &args.output)?;

    let overlays = match args.overlay_range {
        OverlayRange::Span => result.overlay.clone(),
        range => {
            let interval = if range == OverlayRange::Train {
                dataset.train_interval()
            } else {
                dataset.test_interval()
            };
            let mut models: Vec<(Channel, &dyn Predictor)> = vec![(Channel::Real, &real.model)];
            if let Some(c) = &imag {
                models.push((Channel::Imag, &c.model));
            }
            models
                .into_iter()
                .map(|(channel, model)| {
                    let data = match channel {
                        Channel::Real => &dataset.real_channel,
                        Channel::Imag => &dataset.imag_channel,
                    };
                    teacher_forced_overlay(
                        channel,
                        model,
                        data,
                        interval.clone(),
                        dataset.window_len,
                        dataset.horizon,
                        1,
                    )
                })
                .collect::<Result<_, _>>()?
        }
    };
    if let Some(path) = &args.overlay {
        write_file(path, overlay_csv(&overlays))?;
    }
    let overlay_mse: Vec<_> = overlays
        .iter()
        .map(|o| json!({"channel": o.channel, "windows": o.positions.len(), "mse": o.mse()}))
        .collect();
    write_json(
        &sidecar(&args.output),
        &json!({
            "config": config,
            "seed_start": seed_start,
            "generated_samples": args.samples,
            "output_samples": result.audio.len(),
            "clipped_samples": clipped,
            "overlay": overlay_mse,
        }),
    )?;
    log::info!(
        "wrote {} samples ({} clipped) to {}",
        result.audio.len(),
        clipped,
        args.output.display()
    );
    Ok(())
}

pub fn ablate(args: &AblateArgs) -> Result<(), CliError> {
    let config = args.common.effective_config()?;
    let clip = read_wav(&args.input)?;
    let report = pipeline::run_ablation(&clip, &config)?;
    write_json(&args.output, &report)?;
    log::info!(
        "fractional arm test MSE {:.6}, raw arm {:.6}",
        report.fractional.test_mse,
        report.raw.test_mse
    );
    Ok(())
}
