//! Parametric test signals and synthetic corpora.
//!
//! These generators know the ground truth of what they produce (frequency,
//! duration, label), which makes them the reference for the analysis and
//! selection tests. They share no code with the analysis path.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{CalibrationClip, ClipLabel};
use crate::rng::rng_from_seed;
use crate::scalar::Sample;

pub fn sine<T: Sample>(freq_hz: f64, amplitude: f64, sample_rate: u32, len: usize) -> Vec<T> {
    let sr = f64::from(sample_rate);
    (0..len)
        .map(|i| T::lit(amplitude * (TAU * freq_hz * i as f64 / sr).sin()))
        .collect()
}

/// Uniform white noise in `[-amplitude, amplitude]`.
pub fn white_noise<T: Sample>(amplitude: f64, len: usize, seed: u64) -> Vec<T> {
    let mut rng = rng_from_seed(seed);
    (0..len)
        .map(|_| T::lit(rng.random_range(-amplitude..=amplitude)))
        .collect()
}

fn scale_to_rms(buf: &mut [f64], target_rms: f64, max_peak: f64) {
    let ms = buf.iter().map(|x| x * x).sum::<f64>() / buf.len().max(1) as f64;
    if ms <= 0.0 {
        return;
    }
    let mut g = target_rms / ms.sqrt();
    let peak = buf.iter().fold(0.0f64, |p, x| p.max(x.abs())) * g;
    if peak > max_peak {
        g *= max_peak / peak;
    }
    buf.iter_mut().for_each(|x| *x *= g);
}

fn apply_fades(buf: &mut [f64], fade: usize) {
    let n = buf.len();
    let fade = fade.min(n / 2);
    for i in 0..fade {
        let g = i as f64 / fade as f64;
        buf[i] *= g;
        buf[n - 1 - i] *= g;
    }
}

fn convert<T: Sample>(buf: Vec<f64>) -> Vec<T> {
    buf.into_iter().map(T::lit).collect()
}

/// Sum of harmonics with a power-law rolloff and sinusoidal vibrato,
/// normalized to a target RMS level.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTone {
    pub f0_hz: f64,
    pub rms: f64,
    pub harmonics: usize,
    /// Harmonic k has amplitude `k^-rolloff`.
    pub rolloff: f64,
    pub vibrato_hz: f64,
    /// Peak frequency deviation as a fraction of `f0_hz`.
    pub vibrato_depth: f64,
    pub fade_s: f64,
    pub phase: f64,
}

impl HarmonicTone {
    pub fn new(f0_hz: f64, rms: f64) -> Self {
        Self {
            f0_hz,
            rms,
            harmonics: 8,
            rolloff: 2.0,
            vibrato_hz: 5.5,
            vibrato_depth: 0.01,
            fade_s: 0.01,
            phase: 0.0,
        }
    }

    pub fn render<T: Sample>(&self, sample_rate: u32, len: usize) -> Vec<T> {
        convert(self.render_f64(sample_rate, len))
    }

    fn render_f64(&self, sample_rate: u32, len: usize) -> Vec<f64> {
        let sr = f64::from(sample_rate);
        let nyquist = sr / 2.0;
        let mut phase = self.phase;
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let t = i as f64 / sr;
            let f = self.f0_hz * (1.0 + self.vibrato_depth * (TAU * self.vibrato_hz * t).sin());
            let mut v = 0.0;
            for k in 1..=self.harmonics {
                if f * k as f64 >= nyquist {
                    break;
                }
                v += (k as f64).powf(-self.rolloff) * (k as f64 * phase).sin();
            }
            out.push(v);
            phase = (phase + TAU * f / sr) % (TAU * 1e6);
        }
        apply_fades(&mut out, (self.fade_s * sr) as usize);
        scale_to_rms(&mut out, self.rms, 0.95);
        out
    }
}

/// Impulse train with additive noise; a crude stand-in for spoken voice.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub f0_hz: f64,
    pub rms: f64,
    /// Noise RMS relative to the pulse RMS.
    pub noise_ratio: f64,
    pub seed: u64,
}

impl PulseTrain {
    pub fn render<T: Sample>(&self, sample_rate: u32, len: usize) -> Vec<T> {
        let sr = f64::from(sample_rate);
        let period = sr / self.f0_hz;
        let mut out = vec![0.0f64; len];
        let mut next = 0.0f64;
        while (next as usize) < len {
            out[next as usize] = 1.0;
            next += period;
        }
        let pulse_rms = (out.iter().map(|x| x * x).sum::<f64>() / len.max(1) as f64).sqrt();
        let mut rng = rng_from_seed(self.seed);
        // uniform noise has rms amplitude / sqrt(3)
        let amp = self.noise_ratio * pulse_rms * 3f64.sqrt();
        for x in out.iter_mut() {
            *x += rng.random_range(-amp..=amp);
        }
        scale_to_rms(&mut out, self.rms, 0.95);
        convert(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub singing_clips: usize,
    pub speaking_clips: usize,
    pub silence_clips: usize,
    pub clip_s: f64,
    pub sample_rate: u32,
}

impl CorpusSpec {
    pub fn small() -> Self {
        Self {
            singing_clips: 4,
            speaking_clips: 4,
            silence_clips: 2,
            clip_s: 2.0,
            sample_rate: 48_000,
        }
    }

    /// 100 clips: 40 singing, 40 speaking, 20 silence.
    pub fn hundred() -> Self {
        Self {
            singing_clips: 40,
            speaking_clips: 40,
            silence_clips: 20,
            ..Self::small()
        }
    }
}

/// One labeled clip with the parameters it was synthesized from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub name: String,
    pub label: ClipLabel,
    /// Nominal fundamental, when the clip has one.
    pub f0_hz: Option<f64>,
    pub samples: Vec<f64>,
}

/// Labeled singing / speaking / silence clips for gate calibration and
/// evaluation. Labels are known by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub sample_rate: u32,
    pub clips: Vec<LabeledClip>,
}

impl SyntheticCorpus {
    pub fn generate(spec: &CorpusSpec, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let len = (spec.clip_s * f64::from(spec.sample_rate)) as usize;
        let mut clips = Vec::new();
        for i in 0..spec.singing_clips {
            let tone = HarmonicTone {
                f0_hz: rng.random_range(150.0..700.0),
                rms: db(rng.random_range(-30.0..-10.0)),
                harmonics: rng.random_range(4..=10),
                rolloff: rng.random_range(1.8..2.6),
                vibrato_hz: rng.random_range(4.5..6.5),
                vibrato_depth: rng.random_range(0.005..0.02),
                fade_s: 0.0,
                phase: rng.random_range(0.0..TAU),
            };
            clips.push(LabeledClip {
                name: format!("singing_{i:03}"),
                label: ClipLabel::Singing,
                f0_hz: Some(tone.f0_hz),
                samples: tone.render_f64(spec.sample_rate, len),
            });
        }
        for i in 0..spec.speaking_clips {
            let pulses = PulseTrain {
                f0_hz: rng.random_range(85.0..160.0),
                rms: db(rng.random_range(-30.0..-10.0)),
                noise_ratio: rng.random_range(0.2..0.6),
                seed: rng.random(),
            };
            clips.push(LabeledClip {
                name: format!("speaking_{i:03}"),
                label: ClipLabel::Speaking,
                f0_hz: Some(pulses.f0_hz),
                samples: pulses.render(spec.sample_rate, len),
            });
        }
        for i in 0..spec.silence_clips {
            clips.push(LabeledClip {
                name: format!("silence_{i:03}"),
                label: ClipLabel::Silence,
                f0_hz: None,
                samples: vec![0.0; len],
            });
        }
        Self {
            sample_rate: spec.sample_rate,
            clips,
        }
    }

    pub fn clips<T: Sample>(&self) -> Vec<CalibrationClip<T>> {
        self.clips
            .iter()
            .map(|c| CalibrationClip {
                name: c.name.clone(),
                label: c.label,
                samples: c.samples.iter().map(|&x| T::lit(x)).collect(),
                sample_rate_hz: self.sample_rate,
            })
            .collect()
    }
}

fn db(level: f64) -> f64 {
    10f64.powf(level / 20.0)
}

/// A sung phrase inside a [`FixtureSong`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SongPhrase {
    pub f0_hz: f64,
    pub duration_s: f64,
}

/// Sequence of sustained sung phrases separated by silence.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSong {
    pub phrases: Vec<SongPhrase>,
    pub lead_in_s: f64,
    pub gap_s: f64,
    pub tail_s: f64,
    pub level_dbfs: f64,
    pub sample_rate: u32,
}

impl Default for FixtureSong {
    fn default() -> Self {
        let phrases = [
            (440.0, 1.2),
            (330.0, 0.8),
            (262.0, 2.0),
            (196.0, 1.5),
            (587.0, 0.6),
            (220.0, 3.5),
            (392.0, 1.4),
            (147.0, 2.4),
        ]
        .into_iter()
        .map(|(f0_hz, duration_s)| SongPhrase { f0_hz, duration_s })
        .collect();
        Self {
            phrases,
            lead_in_s: 0.5,
            gap_s: 1.2,
            tail_s: 3.0,
            level_dbfs: -18.0,
            sample_rate: 48_000,
        }
    }
}

impl FixtureSong {
    /// Start and end sample of each phrase.
    pub fn phrase_spans(&self) -> Vec<(usize, usize)> {
        let sr = f64::from(self.sample_rate);
        let mut t = self.lead_in_s;
        self.phrases
            .iter()
            .map(|p| {
                let span = ((t * sr) as usize, ((t + p.duration_s) * sr) as usize);
                t += p.duration_s + self.gap_s;
                span
            })
            .collect()
    }

    pub fn duration_samples(&self) -> usize {
        let sr = f64::from(self.sample_rate);
        let phrases: f64 = self.phrases.iter().map(|p| p.duration_s + self.gap_s).sum();
        ((self.lead_in_s + phrases + self.tail_s) * sr) as usize
    }

    pub fn render<T: Sample>(&self) -> Vec<T> {
        let mut out = vec![0.0f64; self.duration_samples()];
        for (phrase, (start, end)) in self.phrases.iter().zip(self.phrase_spans()) {
            let tone = HarmonicTone {
                fade_s: 0.02,
                ..HarmonicTone::new(phrase.f0_hz, db(self.level_dbfs))
            };
            let rendered = tone.render_f64(self.sample_rate, end - start);
            out[start..end].copy_from_slice(&rendered);
        }
        convert(out)
    }
}

/// Vocal-technique flavour of a synthesized library sample.
pub fn technique_tone(technique: crate::library::Technique, f0_hz: f64, rms: f64) -> HarmonicTone {
    use crate::library::Technique;
    let base = HarmonicTone::new(f0_hz, rms);
    match technique {
        Technique::Falsetto => HarmonicTone {
            harmonics: 4,
            rolloff: 3.0,
            vibrato_depth: 0.006,
            ..base
        },
        Technique::Belting => HarmonicTone {
            harmonics: 12,
            rolloff: 1.4,
            vibrato_depth: 0.012,
            ..base
        },
        Technique::MusicalPhrasing => HarmonicTone {
            harmonics: 8,
            rolloff: 2.0,
            vibrato_hz: 3.0,
            vibrato_depth: 0.02,
            ..base
        },
    }
}

/// Sound for one installation-vocabulary category.
pub fn vocabulary_sound(
    category: crate::library::VocabularyCategory,
    rms: f64,
    sample_rate: u32,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    use crate::library::VocabularyCategory as V;
    let sr = f64::from(sample_rate);
    let mut out: Vec<f64> = match category {
        V::Breathing | V::Whisper => {
            // one-pole filtered noise under a slow or syllabic envelope
            let rate = if category == V::Breathing { 0.7 } else { 4.0 };
            let coeff = if category == V::Breathing { 0.9 } else { 0.3 };
            let mut state = 0.0;
            (0..len)
                .map(|i| {
                    let n: f64 = rng.random_range(-1.0..1.0);
                    state = coeff * state + (1.0 - coeff) * n;
                    let env = 0.5 - 0.5 * (TAU * rate * i as f64 / sr).cos();
                    (if category == V::Whisper { n - state } else { state }) * env
                })
                .collect()
        }
        V::WarmUp => {
            // siren glide over an octave
            let lo = rng.random_range(180.0..300.0);
            let mut phase = 0.0;
            (0..len)
                .map(|i| {
                    let t = i as f64 / len as f64;
                    let f = lo * 2f64.powf((std::f64::consts::PI * t).sin());
                    phase += TAU * f / sr;
                    phase.sin() + 0.3 * (2.0 * phase).sin()
                })
                .collect()
        }
        V::Chatter => {
            let pulses = PulseTrain {
                f0_hz: rng.random_range(100.0..180.0),
                rms: 0.1,
                noise_ratio: 0.5,
                seed: rng.random(),
            };
            let raw: Vec<f64> = pulses.render(sample_rate, len);
            raw.iter()
                .enumerate()
                .map(|(i, x)| x * (0.5 - 0.5 * (TAU * 3.0 * i as f64 / sr).cos()))
                .collect()
        }
        V::Laughter => {
            let f0 = rng.random_range(250.0..450.0);
            let tone: Vec<f64> = HarmonicTone::new(f0, 0.1).render(sample_rate, len);
            tone.iter()
                .enumerate()
                .map(|(i, x)| {
                    let burst = (TAU * 5.0 * i as f64 / sr).sin().max(0.0);
                    x * burst
                })
                .collect()
        }
    };
    apply_fades(&mut out, (0.01 * sr) as usize);
    scale_to_rms(&mut out, rms, 0.5);
    out
}

/// Shape of the synthetic sample library used by fixtures and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureLibrarySpec {
    pub first_f0_hz: Vec<f64>,
    pub second_f0_hz: Vec<f64>,
    pub durations_s: Vec<f64>,
    pub vocabulary_per_category: usize,
    pub vocabulary_s: f64,
    pub level_dbfs: f64,
    pub sample_rate: u32,
}

impl Default for FixtureLibrarySpec {
    fn default() -> Self {
        Self {
            first_f0_hz: vec![185.0, 330.0, 587.0, 932.0],
            second_f0_hz: vec![98.0, 147.0, 262.0, 494.0],
            durations_s: vec![0.6, 1.5, 3.2],
            vocabulary_per_category: 3,
            vocabulary_s: 1.2,
            level_dbfs: -18.0,
            sample_rate: 48_000,
        }
    }
}

/// Audio and labels of one generated library sample.
#[derive(Debug, Clone)]
pub struct FixtureSample {
    pub id: String,
    pub technique: Option<crate::library::Technique>,
    pub voice_part: Option<crate::library::VoicePart>,
    pub category: Option<crate::library::VocabularyCategory>,
    pub audio: Vec<f32>,
}

/// Generates every part x technique x pitch x length sample plus the
/// installation vocabulary. Ids are stable for a given spec.
pub fn fixture_samples(spec: &FixtureLibrarySpec, seed: u64) -> Vec<FixtureSample> {
    use crate::library::{Technique, VocabularyCategory, VoicePart};
    let sr = spec.sample_rate;
    let rms = db(spec.level_dbfs);
    let mut out = Vec::new();
    for part in VoicePart::ALL {
        let pitches = match part {
            VoicePart::First => &spec.first_f0_hz,
            VoicePart::Second => &spec.second_f0_hz,
        };
        for &technique in Technique::ALL {
            for &f0 in pitches {
                for &dur in &spec.durations_s {
                    let tone = HarmonicTone {
                        fade_s: 0.02,
                        ..technique_tone(technique, f0, rms)
                    };
                    let audio = tone.render::<f32>(sr, (dur * f64::from(sr)) as usize);
                    out.push(FixtureSample {
                        id: format!("{part}-{technique}-{f0:.0}-{dur:.1}").to_lowercase(),
                        technique: Some(technique),
                        voice_part: Some(*part),
                        category: None,
                        audio,
                    });
                }
            }
        }
    }
    let mut rng = rng_from_seed(seed);
    let len = (spec.vocabulary_s * f64::from(sr)) as usize;
    for &category in VocabularyCategory::ALL {
        for k in 0..spec.vocabulary_per_category {
            let audio = vocabulary_sound(category, rms * 0.5, sr, len, &mut rng);
            out.push(FixtureSample {
                id: format!("{category}-{k}").to_lowercase(),
                technique: None,
                voice_part: None,
                category: Some(category),
                audio: convert(audio),
            });
        }
    }
    out
}

/// The fixture samples measured and loaded into a library.
pub fn fixture_library(
    spec: &FixtureLibrarySpec,
    seed: u64,
) -> Result<crate::library::SampleLibrary, crate::library::LibraryError> {
    use crate::library::{ingest_audio, IngestConfig, SampleLibrary};
    let cfg = IngestConfig { sample_rate_hz: spec.sample_rate, ..Default::default() };
    let mut lib = SampleLibrary::new(spec.sample_rate);
    for s in fixture_samples(spec, seed) {
        let path = std::path::PathBuf::from(format!("samples/{}.wav", s.id));
        let sample = ingest_audio(s.id.as_str().into(), &path, &s.audio, s.technique, s.voice_part, s.category, &cfg)?;
        lib.insert(sample, s.audio);
    }
    Ok(lib)
}
