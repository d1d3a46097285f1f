use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(Arc<str>);

impl SampleId {
    pub fn new(id: &str) -> Self {
        Self(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SampleId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

macro_rules! label_enum {
    ($name:ident { $($variant:ident),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => stringify!($variant)),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| format!("unknown {} `{s}`", stringify!($name)))
            }
        }
    };
}

label_enum!(Technique { Falsetto, Belting, MusicalPhrasing });
label_enum!(VoicePart { First, Second });
label_enum!(VocabularyCategory { Breathing, WarmUp, Chatter, Laughter, Whisper });

/// One recorded sample with its declared labels and measured properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocalSample {
    pub id: SampleId,
    pub path: PathBuf,
    pub technique: Option<Technique>,
    pub voice_part: Option<VoicePart>,
    pub category: Option<VocabularyCategory>,
    pub fundamental_hz: Option<f64>,
    pub duration_s: f64,
    pub loudness_dbfs: f64,
    pub unpitched: bool,
}

impl VocalSample {
    /// Performance samples carry both a technique and a voice part.
    pub fn is_performance(&self) -> bool {
        self.technique.is_some() && self.voice_part.is_some()
    }
}
