use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LibraryError, Result, SampleId, Technique, VocalSample, VoicePart};
use crate::rng::rng_from_seed;

/// Bucket boundaries for the vocal matrix.
///
/// Values below the first edge fall into bucket 0 and values at or above the
/// last edge fall into bucket `edges.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BucketConfig {
    pub pitch_edges_hz: Vec<f64>,
    pub length_edges_s: Vec<f64>,
}

impl Default for BucketConfig {
    fn default() -> Self {
        Self {
            pitch_edges_hz: vec![110.0, 220.0, 440.0, 880.0],
            length_edges_s: vec![1.0, 3.0],
        }
    }
}

impl BucketConfig {
    /// Validates the edges and snaps pitch edges to the nearest equal-tempered semitone.
    pub fn normalized(&self) -> Result<Self> {
        check_edges("pitch_edges_hz", &self.pitch_edges_hz)?;
        check_edges("length_edges_s", &self.length_edges_s)?;
        let pitch: Vec<f64> = self.pitch_edges_hz.iter().map(|&f| snap_semitone(f)).collect();
        check_edges("pitch_edges_hz (semitone-snapped)", &pitch)?;
        Ok(Self {
            pitch_edges_hz: pitch,
            length_edges_s: self.length_edges_s.clone(),
        })
    }
}

fn check_edges(name: &str, edges: &[f64]) -> Result<()> {
    if edges.is_empty() {
        return Err(LibraryError::InvalidConfig(format!("{name} is empty")));
    }
    if edges.iter().any(|e| !e.is_finite() || *e <= 0.0) {
        return Err(LibraryError::InvalidConfig(format!("{name} must be positive")));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LibraryError::InvalidConfig(format!(
            "{name} must be strictly increasing"
        )));
    }
    Ok(())
}

fn snap_semitone(hz: f64) -> f64 {
    let n = (12.0 * (hz / 440.0).log2()).round();
    440.0 * (n / 12.0).exp2()
}

pub(crate) fn bucket_of(value: f64, edges: &[f64]) -> usize {
    edges.partition_point(|&e| e <= value)
}

fn pitch_centre(bucket: usize, edges: &[f64]) -> f64 {
    match bucket {
        0 => edges[0],
        b if b >= edges.len() => edges[edges.len() - 1],
        b => (edges[b - 1] * edges[b]).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub voice_part: VoicePart,
    pub technique: Technique,
    pub pitch_bucket: usize,
    pub length_bucket: usize,
}

/// Performance samples indexed by voice part, technique, pitch and length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocalMatrix {
    buckets: BucketConfig,
    cells: BTreeMap<CellKey, Vec<SampleId>>,
}

impl VocalMatrix {
    pub fn buckets(&self) -> &BucketConfig {
        &self.buckets
    }

    pub fn cells(&self) -> &BTreeMap<CellKey, Vec<SampleId>> {
        &self.cells
    }

    pub fn pitch_bucket(&self, hz: f64) -> usize {
        bucket_of(hz, &self.buckets.pitch_edges_hz)
    }

    pub fn length_bucket(&self, seconds: f64) -> usize {
        bucket_of(seconds, &self.buckets.length_edges_s)
    }

    pub fn sample_count(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    /// All samples of a part, in cell order.
    pub fn part_samples(&self, part: VoicePart) -> Vec<SampleId> {
        self.cells
            .iter()
            .filter(|(k, _)| k.voice_part == part)
            .flat_map(|(_, v)| v.iter().cloned())
            .collect()
    }

    pub fn cell_of(&self, id: &SampleId) -> Option<CellKey> {
        self.cells
            .iter()
            .find(|(_, v)| v.contains(id))
            .map(|(k, _)| *k)
    }
}

pub fn build_matrix(samples: &[VocalSample], buckets: &BucketConfig) -> Result<VocalMatrix> {
    let buckets = buckets.normalized()?;
    let mut cells: BTreeMap<CellKey, Vec<(f64, SampleId)>> = BTreeMap::new();
    for s in samples {
        let (Some(technique), Some(voice_part), Some(f0)) =
            (s.technique, s.voice_part, s.fundamental_hz)
        else {
            continue;
        };
        let key = CellKey {
            voice_part,
            technique,
            pitch_bucket: bucket_of(f0, &buckets.pitch_edges_hz),
            length_bucket: bucket_of(s.duration_s, &buckets.length_edges_s),
        };
        let centre = pitch_centre(key.pitch_bucket, &buckets.pitch_edges_hz);
        cells
            .entry(key)
            .or_default()
            .push(((f0 - centre).abs(), s.id.clone()));
    }
    if cells.is_empty() {
        return Err(LibraryError::EmptyPerformanceSet);
    }
    let cells = cells
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            (k, v.into_iter().map(|(_, id)| id).collect())
        })
        .collect();
    Ok(VocalMatrix { buckets, cells })
}

/// Picks a sample for a sung phrase.
///
/// The nearest occupied cells are those minimizing (pitch-bucket distance,
/// length-bucket distance). Among them, cells with the preferred technique
/// win if any exist; the sample is then drawn uniformly from the pooled cells
/// with an RNG seeded by `tie_seed`.
pub fn query_matrix(
    matrix: &VocalMatrix,
    part: VoicePart,
    pitch_hz: f64,
    length_s: f64,
    technique: Option<Technique>,
    tie_seed: u64,
) -> Result<SampleId> {
    let tp = matrix.pitch_bucket(pitch_hz);
    let tl = matrix.length_bucket(length_s);
    let mut best: Option<(usize, usize)> = None;
    let mut candidates: Vec<(&CellKey, &Vec<SampleId>)> = Vec::new();
    for (key, ids) in matrix.cells.iter().filter(|(k, v)| k.voice_part == part && !v.is_empty()) {
        let dist = (key.pitch_bucket.abs_diff(tp), key.length_bucket.abs_diff(tl));
        match best {
            Some(b) if dist > b => continue,
            Some(b) if dist == b => {}
            _ => {
                best = Some(dist);
                candidates.clear();
            }
        }
        candidates.push((key, ids));
    }
    if candidates.is_empty() {
        return Err(LibraryError::EmptyVoicePart(part));
    }
    if let Some(t) = technique {
        if candidates.iter().any(|(k, _)| k.technique == t) {
            candidates.retain(|(k, _)| k.technique == t);
        }
    }
    let total: usize = candidates.iter().map(|(_, v)| v.len()).sum();
    let mut pick = if total == 1 {
        0
    } else {
        rng_from_seed(tie_seed).random_range(0..total)
    };
    for (_, ids) in candidates {
        if pick < ids.len() {
            return Ok(ids[pick].clone());
        }
        pick -= ids.len();
    }
    unreachable!("pick is below the pooled total")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::path::PathBuf;

    pub(crate) fn perf(id: &str, part: VoicePart, t: Technique, f0: f64, dur: f64) -> VocalSample {
        VocalSample {
            id: id.into(),
            path: PathBuf::from(format!("{id}.wav")),
            technique: Some(t),
            voice_part: Some(part),
            category: None,
            fundamental_hz: Some(f0),
            duration_s: dur,
            loudness_dbfs: -18.0,
            unpitched: false,
        }
    }

    /// One sample per (part, pitch band, length band) over four octave bands.
    pub(crate) fn grid_corpus() -> Vec<VocalSample> {
        let mut v = Vec::new();
        for part in VoicePart::ALL {
            for (pi, f0) in [150.0, 300.0, 600.0, 1000.0].into_iter().enumerate() {
                for (li, dur) in [2.0, 4.0].into_iter().enumerate() {
                    v.push(perf(
                        &format!("{part}-{pi}-{li}"),
                        *part,
                        Technique::MusicalPhrasing,
                        f0,
                        dur,
                    ));
                }
            }
        }
        v
    }

    #[test]
    fn grid_fills_sixteen_cells() {
        let m = build_matrix(&grid_corpus(), &BucketConfig::default()).unwrap();
        assert_eq!(m.cells().len(), 16);
        assert!(m.cells().values().all(|c| c.len() == 1));
    }

    #[test]
    fn identical_samples_share_a_cell() {
        let v: Vec<_> = (0..5)
            .map(|i| perf(&format!("s{i}"), VoicePart::First, Technique::Belting, 300.0, 2.0))
            .collect();
        let m = build_matrix(&v, &BucketConfig::default()).unwrap();
        assert_eq!(m.cells().len(), 1);
        assert_eq!(m.sample_count(), 5);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(
            build_matrix(&[], &BucketConfig::default()),
            Err(LibraryError::EmptyPerformanceSet)
        ));
    }

    #[test]
    fn bad_edges_rejected() {
        let b = BucketConfig {
            pitch_edges_hz: vec![440.0, 220.0],
            ..Default::default()
        };
        assert!(build_matrix(&grid_corpus(), &b).is_err());
    }

    #[test]
    fn cells_sorted_by_distance_to_centre() {
        let v = vec![
            perf("far", VoicePart::First, Technique::Belting, 430.0, 2.0),
            perf("near", VoicePart::First, Technique::Belting, 311.0, 2.0),
        ];
        let m = build_matrix(&v, &BucketConfig::default()).unwrap();
        let cell = m.cells().values().next().unwrap();
        assert_eq!(cell[0].as_str(), "near");
    }

    #[test]
    fn exact_cell_query() {
        let m = build_matrix(&grid_corpus(), &BucketConfig::default()).unwrap();
        let id = query_matrix(&m, VoicePart::First, 440.0, 1.0, None, 9).unwrap();
        assert_eq!(id.as_str(), "First-2-0");
    }

    #[test]
    fn hole_falls_back_to_adjacent_pitch() {
        // pitch band 3 empty for First, band 4 removed too: only band 2 is adjacent
        let corpus: Vec<_> = grid_corpus()
            .into_iter()
            .filter(|s| !s.id.as_str().starts_with("First-2-") && !s.id.as_str().starts_with("First-3-"))
            .collect();
        let m = build_matrix(&corpus, &BucketConfig::default()).unwrap();
        let id = query_matrix(&m, VoicePart::First, 440.0, 1.0, None, 3).unwrap();
        assert_eq!(id.as_str(), "First-1-0");
        assert_eq!(id, query_matrix(&m, VoicePart::First, 440.0, 1.0, None, 3).unwrap());
    }

    #[test]
    fn technique_preference() {
        let v = vec![
            perf("a", VoicePart::First, Technique::Belting, 300.0, 2.0),
            perf("b", VoicePart::First, Technique::Falsetto, 300.0, 2.0),
        ];
        let m = build_matrix(&v, &BucketConfig::default()).unwrap();
        for seed in 0..20 {
            let id = query_matrix(&m, VoicePart::First, 300.0, 2.0, Some(Technique::Falsetto), seed)
                .unwrap();
            assert_eq!(id.as_str(), "b");
        }
    }

    #[test]
    fn empty_part_errors() {
        let v = vec![perf("a", VoicePart::First, Technique::Belting, 300.0, 2.0)];
        let m = build_matrix(&v, &BucketConfig::default()).unwrap();
        assert!(matches!(
            query_matrix(&m, VoicePart::Second, 300.0, 2.0, None, 0),
            Err(LibraryError::EmptyVoicePart(VoicePart::Second))
        ));
    }

    fn arb_sample(i: usize) -> impl Strategy<Value = VocalSample> {
        (0usize..2, 0usize..3, 60.0f64..1500.0, 0.1f64..6.0).prop_map(move |(p, t, f, d)| {
            perf(
                &format!("s{i}"),
                VoicePart::ALL[p],
                Technique::ALL[t],
                f,
                d,
            )
        })
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<VocalSample>> {
        (1usize..40).prop_flat_map(|n| (0..n).map(arb_sample).collect::<Vec<_>>())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn partition(corpus in arb_corpus()) {
            let m = build_matrix(&corpus, &BucketConfig::default()).unwrap();
            prop_assert_eq!(m.sample_count(), corpus.len());
            for s in &corpus {
                let n = m.cells().values().filter(|c| c.contains(&s.id)).count();
                prop_assert_eq!(n, 1);
            }
        }

        #[test]
        fn query_is_minimal(
            corpus in arb_corpus(),
            pitch in 50.0f64..2000.0,
            len in 0.05f64..8.0,
            pref in proptest::option::of(0usize..3),
            seed in any::<u64>(),
        ) {
            let m = build_matrix(&corpus, &BucketConfig::default()).unwrap();
            let technique = pref.map(|t| Technique::ALL[t]);
            for part in VoicePart::ALL {
                let got = query_matrix(&m, *part, pitch, len, technique, seed);
                // brute-force reference over every cell
                let tp = m.pitch_bucket(pitch);
                let tl = m.length_bucket(len);
                let best = m.cells().iter()
                    .filter(|(k, v)| k.voice_part == *part && !v.is_empty())
                    .map(|(k, _)| (k.pitch_bucket.abs_diff(tp), k.length_bucket.abs_diff(tl)))
                    .min();
                let Some(best) = best else {
                    prop_assert!(got.is_err());
                    continue;
                };
                let id = got.unwrap();
                let key = m.cell_of(&id).unwrap();
                prop_assert_eq!(key.voice_part, *part);
                prop_assert_eq!((key.pitch_bucket.abs_diff(tp), key.length_bucket.abs_diff(tl)), best);
                if let Some(t) = technique {
                    let any_pref = m.cells().iter().any(|(k, v)| {
                        k.voice_part == *part && k.technique == t && !v.is_empty()
                            && (k.pitch_bucket.abs_diff(tp), k.length_bucket.abs_diff(tl)) == best
                    });
                    if any_pref {
                        prop_assert_eq!(key.technique, t);
                    }
                }
                prop_assert_eq!(&id, &query_matrix(&m, *part, pitch, len, technique, seed).unwrap());
            }
        }
    }
}
