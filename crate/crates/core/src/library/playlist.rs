use serde::{Deserialize, Serialize};

use super::{LibraryError, Result, SampleId, VocalMatrix, VoicePart};

pub const SINGER_COUNT: usize = 16;

/// Voice part of each singer, indexed by singer id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupingConfig {
    pub parts: Vec<VoicePart>,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            parts: (0..SINGER_COUNT)
                .map(|i| if i < 8 { VoicePart::First } else { VoicePart::Second })
                .collect(),
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.parts.len() != SINGER_COUNT {
            return Err(LibraryError::InvalidConfig(format!(
                "grouping lists {} singers, expected {SINGER_COUNT}",
                self.parts.len()
            )));
        }
        let first = self.parts.iter().filter(|p| **p == VoicePart::First).count();
        if first != SINGER_COUNT / 2 {
            return Err(LibraryError::InvalidConfig(format!(
                "grouping must split 8/8, got {first}/{}",
                SINGER_COUNT - first
            )));
        }
        Ok(())
    }

    pub fn part_of(&self, singer: usize) -> VoicePart {
        self.parts[singer]
    }

    /// Singers sharing a voice part, in id order.
    pub fn group(&self, part: VoicePart) -> Vec<usize> {
        (0..self.parts.len()).filter(|&i| self.parts[i] == part).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playlist {
    pub singer: usize,
    pub voice_part: VoicePart,
    pub performance: Vec<SampleId>,
    /// Installation-vocabulary samples, shared by every singer.
    pub vocabulary: Vec<SampleId>,
}

impl Playlist {
    pub fn contains(&self, id: &SampleId) -> bool {
        self.performance.contains(id) || self.vocabulary.contains(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaylistAssignment {
    pub playlists: Vec<Playlist>,
}

impl PlaylistAssignment {
    pub fn get(&self, singer: usize) -> Option<&Playlist> {
        self.playlists.get(singer)
    }

    /// Adds the shared vocabulary list to every playlist.
    pub fn with_vocabulary(mut self, ids: &[SampleId]) -> Self {
        for p in &mut self.playlists {
            p.vocabulary = ids.to_vec();
        }
        self
    }
}

/// Every singer of a group receives the group's full performance list.
pub fn assign_playlists(
    matrix: &VocalMatrix,
    grouping: &GroupingConfig,
) -> Result<PlaylistAssignment> {
    grouping.validate()?;
    let mut lists = Vec::with_capacity(VoicePart::ALL.len());
    for part in VoicePart::ALL {
        let ids = matrix.part_samples(*part);
        if ids.is_empty() {
            return Err(LibraryError::EmptyVoicePart(*part));
        }
        lists.push(ids);
    }
    let playlists = grouping
        .parts
        .iter()
        .enumerate()
        .map(|(singer, &part)| Playlist {
            singer,
            voice_part: part,
            performance: lists[part as usize].clone(),
            vocabulary: Vec::new(),
        })
        .collect();
    Ok(PlaylistAssignment { playlists })
}
