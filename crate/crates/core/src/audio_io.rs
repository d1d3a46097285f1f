//! WAV reading and writing.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

#[derive(Debug, thiserror::Error)]
pub enum AudioIoError {
    #[error("{path}: {source}")]
    Wav {
        path: String,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported format ({detail})")]
    Unsupported { path: String, detail: String },
}

impl AudioIoError {
    fn wav(path: &Path, source: hound::Error) -> Self {
        AudioIoError::Wav {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Decoded audio, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAudio {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<f32>,
}

impl DecodedAudio {
    /// Averages all channels into one.
    pub fn to_mono(&self) -> Vec<f32> {
        let ch = usize::from(self.channels.max(1));
        if ch == 1 {
            return self.samples.clone();
        }
        self.samples
            .chunks_exact(ch)
            .map(|frame| frame.iter().sum::<f32>() / ch as f32)
            .collect()
    }
}

pub fn read_wav(path: &Path) -> Result<DecodedAudio, AudioIoError> {
    let reader = WavReader::open(path).map_err(|e| AudioIoError::wav(path, e))?;
    let spec = reader.spec();
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| AudioIoError::wav(path, e))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f32;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()
                .map_err(|e| AudioIoError::wav(path, e))?
        }
        (fmt, bits) => {
            return Err(AudioIoError::Unsupported {
                path: path.display().to_string(),
                detail: format!("{fmt:?} {bits}-bit"),
            })
        }
    };
    Ok(DecodedAudio {
        sample_rate: spec.sample_rate,
        channels: spec.channels,
        samples,
    })
}

/// Reads a file as mono at `target_rate`, resampling linearly if needed.
pub fn read_wav_mono(path: &Path, target_rate: u32) -> Result<Vec<f32>, AudioIoError> {
    let decoded = read_wav(path)?;
    let mono = decoded.to_mono();
    Ok(resample_linear(&mono, decoded.sample_rate, target_rate))
}

pub fn resample_linear(input: &[f32], from: u32, to: u32) -> Vec<f32> {
    if from == to || input.is_empty() {
        return input.to_vec();
    }
    let ratio = f64::from(from) / f64::from(to);
    let out_len = ((input.len() as f64) / ratio).round() as usize;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let idx = pos.floor() as usize;
            let frac = (pos - idx as f64) as f32;
            let a = input[idx.min(input.len() - 1)];
            let b = input[(idx + 1).min(input.len() - 1)];
            a + (b - a) * frac
        })
        .collect()
}

pub fn float_spec(channels: u16, sample_rate: u32) -> WavSpec {
    WavSpec {
        channels,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    }
}

pub fn write_wav_mono(path: &Path, samples: &[f32], sample_rate: u32) -> Result<(), AudioIoError> {
    write_wav_interleaved(path, samples, 1, sample_rate)
}

/// Writes 32-bit float WAV; hound emits WAVE_FORMAT_EXTENSIBLE above two channels.
pub fn write_wav_interleaved(
    path: &Path,
    samples: &[f32],
    channels: u16,
    sample_rate: u32,
) -> Result<(), AudioIoError> {
    let mut w = WavWriter::create(path, float_spec(channels, sample_rate))
        .map_err(|e| AudioIoError::wav(path, e))?;
    for &s in samples {
        w.write_sample(s).map_err(|e| AudioIoError::wav(path, e))?;
    }
    w.finalize().map_err(|e| AudioIoError::wav(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_and_multichannel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let x: Vec<f32> = (0..64).map(|i| (i as f32 / 64.0) - 0.5).collect();
        write_wav_interleaved(&p, &x, 16, 48_000).unwrap();
        let d = read_wav(&p).unwrap();
        assert_eq!(d.channels, 16);
        assert_eq!(d.samples, x);
        let bytes = std::fs::read(&p).unwrap();
        // fmt chunk format tag: WAVE_FORMAT_EXTENSIBLE
        assert_eq!(&bytes[20..22], &0xFFFEu16.to_le_bytes());
    }

    #[test]
    fn int16_is_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 44_100,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(16384i16).unwrap();
        w.write_sample(-32768i16).unwrap();
        w.finalize().unwrap();
        let d = read_wav(&p).unwrap();
        assert_eq!(d.samples, vec![0.5, -1.0]);
    }

    #[test]
    fn resample_preserves_duration() {
        let x = vec![0.0f32; 44_100];
        assert_eq!(resample_linear(&x, 44_100, 48_000).len(), 48_000);
    }
}
