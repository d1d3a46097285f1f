use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::singer::validate_singers;
use super::{
    default_singers, pick_group, CommandKind, EnsembleCommand, EnsembleConfig, EnsembleError,
    IdleSchedule, Mode, PhraseSummary, PhraseTracker, ProximityTier, Result, ScenarioAction,
    ScenarioRule, SingerConfig, SingerType,
};
use crate::analysis::VocalFeatures;
use crate::led::{state_to_pattern, LedConfig, LedPattern};
use crate::library::{
    query_matrix, GroupingConfig, PlaylistAssignment, SampleId, SampleLibrary, Technique,
    VocabularyCategory, VocalMatrix,
};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::sensors::{SensorFrame, SENSOR_COUNT};

/// Seed for the tie-break of one singer's selection for one phrase.
pub fn tie_seed(singer_seed: u64, phrase_seq: u64) -> u64 {
    derive_seed(derive_seed(singer_seed, stream::TIE_BREAK), phrase_seq)
}

/// One provocation roll.
pub fn provoke(interaction_likelihood: f64, rng: &mut ChaCha8Rng) -> bool {
    rng.random::<f64>() < interaction_likelihood
}

/// Read-only data the ensemble selects from.
#[derive(Debug, Clone)]
pub struct EnsembleContext {
    pub matrix: Arc<VocalMatrix>,
    pub playlists: Arc<PlaylistAssignment>,
    pub vocabulary: BTreeMap<VocabularyCategory, Vec<SampleId>>,
    /// Sample lengths at the engine rate.
    pub lengths: HashMap<SampleId, u64>,
}

impl EnsembleContext {
    pub fn from_library(
        library: &SampleLibrary,
        matrix: Arc<VocalMatrix>,
        playlists: Arc<PlaylistAssignment>,
    ) -> Self {
        let vocabulary = VocabularyCategory::ALL
            .iter()
            .map(|&c| (c, library.vocabulary(c)))
            .collect();
        let lengths = library
            .samples()
            .filter_map(|s| library.audio(&s.id).map(|a| (s.id.clone(), a.len() as u64)))
            .collect();
        Self {
            matrix,
            playlists,
            vocabulary,
            lengths,
        }
    }

    fn vocab(&self, c: VocabularyCategory) -> &[SampleId] {
        self.vocabulary.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playing {
    pub sample: SampleId,
    pub started: u64,
    pub end: u64,
    pub gain: f64,
    pub tier: ProximityTier,
}

#[derive(Debug, Clone)]
pub struct SingerState {
    pub config: SingerConfig,
    pub kind: SingerType,
    current: Option<Playing>,
    bucket: u8,
    led: LedPattern,
    decision_rng: ChaCha8Rng,
    vocab_rng: ChaCha8Rng,
    schedule: IdleSchedule,
}

impl SingerState {
    /// The state indicator: on exactly while a sample plays.
    pub fn active(&self) -> bool {
        self.current.is_some()
    }

    pub fn current(&self) -> Option<&Playing> {
        self.current.as_ref()
    }

    pub fn bucket(&self) -> u8 {
        self.bucket
    }

    pub fn led(&self) -> LedPattern {
        self.led
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupEvent {
    pub clock: u64,
    pub singers: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstallationStats {
    pub opportunities: [u64; SENSOR_COUNT],
    pub idle_events: [u64; SENSOR_COUNT],
    pub provoked: [u64; SENSOR_COUNT],
    pub responded: [u64; SENSOR_COUNT],
    pub groups: Vec<GroupEvent>,
}

#[derive(Debug, Clone)]
struct Pending {
    due: u64,
    singer: u8,
    sample: SampleId,
}

/// Deterministic state machine for the sixteen singers, ticked at the
/// control rate.
pub struct Ensemble {
    config: EnsembleConfig,
    ctx: EnsembleContext,
    led: LedConfig,
    sample_rate: u32,
    singers: Vec<SingerState>,
    tracker: PhraseTracker,
    mode: Mode,
    scratch: Vec<EnsembleCommand>,
    pending: Vec<Pending>,
    stats: InstallationStats,
    suppress_starts: bool,
    dropped_starts: u64,
    last_rule: Option<String>,
}

impl Ensemble {
    /// `singers` empty means the defaults for `grouping` and `master_seed`.
    pub fn new(
        config: EnsembleConfig,
        grouping: &GroupingConfig,
        master_seed: u64,
        ctx: EnsembleContext,
        led: LedConfig,
        sample_rate: u32,
        hop: usize,
    ) -> Result<Self> {
        config.validate()?;
        grouping
            .validate()
            .map_err(|e| EnsembleError::at("grouping", e.to_string()))?;
        let singer_configs = if config.singers.is_empty() {
            default_singers(grouping, master_seed)
        } else {
            config.singers.clone()
        };
        validate_singers(&singer_configs, &config.singer_types)?;
        for s in &singer_configs {
            if s.voice_part != grouping.part_of(usize::from(s.singer_id)) {
                return Err(EnsembleError::at(
                    format!("ensemble.singers[{}].voice_part", s.singer_id),
                    "disagrees with the grouping",
                ));
            }
        }
        let singers = singer_configs
            .into_iter()
            .map(|c| {
                let seed = c.rng_seed;
                SingerState {
                    kind: config.singer_types[&c.singer_type].clone(),
                    config: c,
                    current: None,
                    bucket: 10,
                    led: LedPattern::Off,
                    decision_rng: rng_from_seed(derive_seed(seed, stream::DECISION)),
                    vocab_rng: rng_from_seed(derive_seed(seed, stream::VOCABULARY_PICK)),
                    schedule: IdleSchedule::new(
                        rng_from_seed(derive_seed(seed, stream::SCHEDULE)),
                        config.idle.mean_interval_s,
                        sample_rate,
                        0,
                    ),
                }
            })
            .collect();
        Ok(Self {
            tracker: PhraseTracker::new(config.phrase, hop, sample_rate),
            mode: config.mode,
            config,
            ctx,
            led,
            sample_rate,
            singers,
            scratch: Vec::with_capacity(64),
            pending: Vec::new(),
            stats: InstallationStats::default(),
            suppress_starts: false,
            dropped_starts: 0,
            last_rule: None,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn singers(&self) -> &[SingerState] {
        &self.singers
    }

    pub fn stats(&self) -> &InstallationStats {
        &self.stats
    }

    pub fn config(&self) -> &EnsembleConfig {
        &self.config
    }

    pub fn context(&self) -> &EnsembleContext {
        &self.ctx
    }

    pub fn active_scenario_set(&self) -> &str {
        &self.config.active_scenario_set
    }

    pub fn last_rule(&self) -> Option<&str> {
        self.last_rule.as_deref()
    }

    pub fn dropped_starts(&self) -> u64 {
        self.dropped_starts
    }

    /// While set, new Play commands are dropped instead of issued.
    pub fn set_suppress_starts(&mut self, suppress: bool) {
        self.suppress_starts = suppress;
    }

    pub fn select_scenario_set(&mut self, id: &str) -> Result<()> {
        if !self.config.scenario_sets.contains_key(id) {
            return Err(EnsembleError::at("scenario_set", format!("no scenario set `{id}`")));
        }
        self.config.active_scenario_set = id.to_owned();
        Ok(())
    }

    pub fn set_idle_mean(&mut self, mean_s: f64) -> Result<()> {
        if !(mean_s > 0.0 && mean_s.is_finite()) {
            return Err(EnsembleError::at("ensemble.idle.mean_interval_s", "must be positive"));
        }
        self.config.idle.mean_interval_s = mean_s;
        for s in &mut self.singers {
            s.schedule.set_mean(mean_s, self.sample_rate);
        }
        Ok(())
    }

    /// Switches mode, silencing every singer and restarting idle schedules.
    pub fn set_mode(&mut self, mode: Mode, clock: u64, out: &mut Vec<EnsembleCommand>) {
        if mode == self.mode {
            return;
        }
        self.mode = mode;
        self.tracker.reset();
        self.pending.clear();
        let mean = self.config.idle.mean_interval_s;
        for s in &mut self.singers {
            if s.current.take().is_some() {
                out.push(EnsembleCommand { singer: s.config.singer_id, kind: CommandKind::Stop });
            }
            let seed = derive_seed(s.config.rng_seed, stream::SCHEDULE);
            s.schedule = IdleSchedule::new(rng_from_seed(derive_seed(seed, clock)), mean, self.sample_rate, clock);
        }
        self.refresh_leds(clock, out);
    }

    /// Advances one control tick.
    ///
    /// `features` are the analysis records produced since the previous tick.
    /// Commands are appended to `out`; completed phrases are returned.
    pub fn tick(
        &mut self,
        clock: u64,
        features: &[VocalFeatures],
        frame: &SensorFrame,
        out: &mut Vec<EnsembleCommand>,
    ) -> Vec<PhraseSummary> {
        for s in &mut self.singers {
            if s.current.as_ref().is_some_and(|p| p.end <= clock) {
                s.current = None;
            }
        }
        let prov = self.config.idle.provocation_bucket;
        let mut provoked = [false; SENSOR_COUNT];
        for (i, s) in self.singers.iter_mut().enumerate() {
            let b = frame.reading(i).bucket();
            provoked[i] = b <= prov && s.bucket > prov;
            s.bucket = b;
        }

        let mut phrases = Vec::new();
        for f in features {
            if let Some(p) = self.tracker.push(f) {
                phrases.push(p);
            }
        }

        let mut cmds = std::mem::take(&mut self.scratch);
        cmds.clear();
        let rules = self.config.scenario_sets[&self.config.active_scenario_set].clone();
        let mut acted = false;
        for p in &phrases {
            if let Some(rule) = rules.iter().find(|r| r.matches(Some(p), frame, self.mode)) {
                self.respond(rule, p, frame, &mut cmds);
                self.last_rule = Some(rule.id.clone());
                acted = true;
            }
        }
        let idle_rule = rules.iter().find(|r| r.matches(None, frame, self.mode));
        let autonomy = !acted
            && match self.mode {
                Mode::Installation => true,
                Mode::Live => idle_rule.is_some() && !self.tracker.in_phrase(),
            };
        if autonomy && !acted {
            if let Some(r) = idle_rule {
                if self.last_rule.as_deref() != Some(&r.id) {
                    self.last_rule = Some(r.id.clone());
                }
            }
        }
        self.autonomy(clock, autonomy, &provoked, &mut cmds);

        self.apply(clock, &mut cmds, out);
        self.scratch = cmds;
        phrases
    }

    fn respond(
        &mut self,
        rule: &ScenarioRule,
        phrase: &PhraseSummary,
        frame: &SensorFrame,
        out: &mut Vec<EnsembleCommand>,
    ) {
        let targets: Vec<usize> = match rule.action {
            ScenarioAction::RespondAll => (0..SENSOR_COUNT).collect(),
            ScenarioAction::RespondGroup { part } => (0..SENSOR_COUNT)
                .filter(|&i| self.singers[i].config.voice_part == part)
                .collect(),
            ScenarioAction::RespondPair => {
                let ranges = frame.ranges_mm();
                let nearest = (0..SENSOR_COUNT).min_by_key(|&i| (ranges[i], i)).unwrap_or(0);
                vec![nearest]
            }
            ScenarioAction::IdleVocabulary => Vec::new(),
        };
        for s in targets {
            if let Some(cmd) = self.select(s, phrase, rule.proximity_modulate, None, None) {
                out.push(cmd);
            }
        }
        if rule.pair_sync || rule.action == ScenarioAction::RespondPair {
            self.pair_sync(out, phrase, rule.proximity_modulate);
        }
    }

    /// One singer's answer to a phrase.
    fn select(
        &self,
        singer: usize,
        phrase: &PhraseSummary,
        modulate: bool,
        partner_of: Option<u8>,
        technique_hint: Option<Technique>,
    ) -> Option<EnsembleCommand> {
        let s = &self.singers[singer];
        let seed = tie_seed(s.config.rng_seed, phrase.seq);
        let tiers = &self.config.proximity;
        let tier = if modulate { tiers.tier(s.bucket) } else { ProximityTier::Full };
        let part = s.config.voice_part;
        let query = |t: Option<Technique>| {
            query_matrix(&self.ctx.matrix, part, phrase.pitch_hz, phrase.length_s, t, seed).ok()
        };
        let (sample, technique_override) = match tier {
            ProximityTier::Full => (query(technique_hint)?, None),
            ProximityTier::Falsetto => (query(Some(Technique::Falsetto))?, Some(Technique::Falsetto)),
            ProximityTier::Whisper => {
                let whispers = self.ctx.vocab(VocabularyCategory::Whisper);
                if whispers.is_empty() {
                    (query(Some(Technique::Falsetto))?, Some(Technique::Falsetto))
                } else {
                    let i = rng_from_seed(seed).random_range(0..whispers.len());
                    (whispers[i].clone(), None)
                }
            }
        };
        Some(EnsembleCommand {
            singer: singer as u8,
            kind: CommandKind::Play {
                sample,
                gain: tiers.gain(tier),
                technique_override,
                tier,
                partner_of,
            },
        })
    }

    /// Gives the stereo partner of every playing singer a complementary
    /// Play from the same cell, unless it already has one.
    pub fn pair_sync(&self, cmds: &mut Vec<EnsembleCommand>, phrase: &PhraseSummary, modulate: bool) {
        let mut has_play = [false; SENSOR_COUNT];
        for c in cmds.iter().filter(|c| c.is_play()) {
            has_play[usize::from(c.singer)] = true;
        }
        let originals: Vec<(u8, SampleId)> = cmds
            .iter()
            .filter_map(|c| c.sample().map(|s| (c.singer, s.clone())))
            .collect();
        for (singer, sample) in originals {
            let partner = usize::from(self.singers[usize::from(singer)].config.pair_id);
            if has_play[partner] {
                continue;
            }
            let hint = self.ctx.matrix.cell_of(&sample).map(|k| k.technique);
            if let Some(cmd) = self.select(partner, phrase, modulate, Some(singer), hint) {
                has_play[partner] = true;
                cmds.push(cmd);
            }
        }
    }

    fn autonomy(
        &mut self,
        clock: u64,
        enabled: bool,
        provoked: &[bool; SENSOR_COUNT],
        out: &mut Vec<EnsembleCommand>,
    ) {
        let stagger = (self.config.idle.stagger_s * f64::from(self.sample_rate)).round() as u64;
        for i in 0..SENSOR_COUNT {
            let due = self.singers[i].schedule.due(clock);
            if !enabled {
                continue;
            }
            for _ in 0..due {
                self.opportunity(i, clock, stagger, out);
            }
            if provoked[i] && self.mode == Mode::Installation {
                self.stats.provoked[i] += 1;
                let likelihood = self.singers[i].kind.interaction_likelihood;
                if provoke(likelihood, &mut self.singers[i].decision_rng) {
                    if let Some(sample) = self.pick_vocab(i, VocabularyCategory::Whisper) {
                        self.stats.responded[i] += 1;
                        out.push(self.play_vocab(i, sample, ProximityTier::Whisper));
                    }
                }
            }
        }
        let mut k = 0;
        while k < self.pending.len() {
            if self.pending[k].due <= clock {
                let p = self.pending.remove(k);
                if enabled {
                    let tier = self.config.proximity.tier(self.singers[usize::from(p.singer)].bucket);
                    out.push(self.play_vocab(usize::from(p.singer), p.sample, tier));
                }
            } else {
                k += 1;
            }
        }
    }

    fn play_vocab(&self, singer: usize, sample: SampleId, tier: ProximityTier) -> EnsembleCommand {
        EnsembleCommand {
            singer: singer as u8,
            kind: CommandKind::Play {
                sample,
                gain: self.config.proximity.gain(tier),
                technique_override: None,
                tier,
                partner_of: None,
            },
        }
    }

    fn pick_vocab(&mut self, singer: usize, category: VocabularyCategory) -> Option<SampleId> {
        let ids = self.ctx.vocab(category);
        if ids.is_empty() {
            return None;
        }
        let i = self.singers[singer].vocab_rng.random_range(0..ids.len());
        Some(ids[i].clone())
    }

    fn opportunity(&mut self, i: usize, clock: u64, stagger: u64, out: &mut Vec<EnsembleCommand>) {
        self.stats.opportunities[i] += 1;
        let activity = self.singers[i].kind.activity_level;
        if self.singers[i].decision_rng.random::<f64>() >= activity {
            return;
        }
        let choices: Vec<(VocabularyCategory, f64)> = self
            .config
            .idle
            .weights
            .iter()
            .filter(|(c, w)| **w > 0.0 && !self.ctx.vocab(**c).is_empty())
            .map(|(c, w)| (*c, *w))
            .collect();
        let total: f64 = choices.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return;
        }
        let mut x = self.singers[i].vocab_rng.random::<f64>() * total;
        let mut category = choices[choices.len() - 1].0;
        for (c, w) in &choices {
            if x < *w {
                category = *c;
                break;
            }
            x -= w;
        }
        let Some(sample) = self.pick_vocab(i, category) else {
            return;
        };
        self.stats.idle_events[i] += 1;
        let tier = self.config.proximity.tier(self.singers[i].bucket);
        out.push(self.play_vocab(i, sample, tier));

        let idle = &self.config.idle;
        if category == VocabularyCategory::WarmUp {
            let (gp, tp) = (idle.group_probability, idle.triplet_probability);
            let rng = &mut self.singers[i].decision_rng;
            if rng.random::<f64>() < gp {
                let size = if rng.random::<f64>() < tp { 3 } else { 2 };
                let bias = self.singers[i].kind.relation_bias.clone();
                let members = pick_group(i, size, &bias, &mut self.singers[i].decision_rng);
                for (k, &m) in members.iter().enumerate().skip(1) {
                    if let Some(sample) = self.pick_vocab(usize::from(m), VocabularyCategory::WarmUp) {
                        self.pending.push(Pending {
                            due: clock + k as u64 * stagger,
                            singer: m,
                            sample,
                        });
                    }
                }
                self.stats.groups.push(GroupEvent { clock, singers: members });
            }
        }
    }

    fn apply(&mut self, clock: u64, cmds: &mut Vec<EnsembleCommand>, out: &mut Vec<EnsembleCommand>) {
        for cmd in cmds.drain(..) {
            let i = usize::from(cmd.singer);
            match &cmd.kind {
                CommandKind::Play { sample, gain, tier, .. } => {
                    if self.suppress_starts {
                        self.dropped_starts += 1;
                        continue;
                    }
                    let allowed = self
                        .ctx
                        .playlists
                        .get(i)
                        .is_some_and(|p| p.contains(sample));
                    let Some(&len) = self.ctx.lengths.get(sample).filter(|_| allowed) else {
                        log::error!("singer {i}: sample `{sample}` is not playable, dropped");
                        continue;
                    };
                    self.singers[i].current = Some(Playing {
                        sample: sample.clone(),
                        started: clock,
                        end: clock + len,
                        gain: *gain,
                        tier: *tier,
                    });
                }
                CommandKind::Stop => self.singers[i].current = None,
                CommandKind::SetLed { .. } => {}
            }
            out.push(cmd);
        }
        self.refresh_leds(clock, out);
    }

    fn refresh_leds(&mut self, clock: u64, out: &mut Vec<EnsembleCommand>) {
        let t = clock as f64 / f64::from(self.sample_rate);
        for s in &mut self.singers {
            let pattern = state_to_pattern(s.config.singer_id, s.active(), s.bucket, t, &self.led).pattern;
            if pattern != s.led {
                s.led = pattern;
                out.push(EnsembleCommand {
                    singer: s.config.singer_id,
                    kind: CommandKind::SetLed { pattern },
                });
            }
        }
    }
}
