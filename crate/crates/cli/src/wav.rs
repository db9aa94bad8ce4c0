//! 16-bit PCM mono WAV input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use wavespoof_core::Waveform;

use crate::error::{CliError, CliResult};

pub fn read_wav(path: &Path) -> CliResult<Waveform> {
    let reader = WavReader::open(path).map_err(|e| CliError::file(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(CliError::file(path, format!("expected mono audio, found {} channels", spec.channels)));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(CliError::file(
            path,
            format!("expected 16-bit integer PCM, found {}-bit {:?}", spec.bits_per_sample, spec.sample_format),
        ));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::file(path, e))?;
    Waveform::new(samples, spec.sample_rate).map_err(|e| CliError::file(path, e))
}

/// Samples are clipped to `[−1, 1)` and quantized to 16 bits.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> CliResult<()> {
    let spec = WavSpec { channels: 1, sample_rate, bits_per_sample: 16, sample_format: SampleFormat::Int };
    let mut writer = WavWriter::create(path, spec).map_err(|e| CliError::file(path, e))?;
    for &s in samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| CliError::file(path, e))?;
    }
    writer.finalize().map_err(|e| CliError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_on_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x: Vec<f64> = [-32768i32, -1, 0, 1, 12345, 32767].iter().map(|&v| v as f64 / 32768.0).collect();
        write_wav(&p, &x, 16_000).unwrap();
        let w = read_wav(&p).unwrap();
        assert_eq!(w.samples, x);
        assert_eq!(w.sample_rate, 16_000);
    }

    #[test]
    fn stereo_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = WavSpec { channels: 2, sample_rate: 8000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        let err = read_wav(&p).unwrap_err().to_string();
        assert!(err.contains("mono"), "{err}");
    }
}
