use serde::{Deserialize, Serialize};

/// When the entry server fires its pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MixPolicy {
    /// Fire once the clock reaches `fire_after` seconds.
    Timed { fire_after: u64 },
    /// Fire as soon as `min_messages` submissions are counted.
    Threshold {
        min_messages: usize,
        #[serde(default)]
        count_only_roster_signed: bool,
    },
    /// Fire once both conditions hold.
    ThresholdAndTimed {
        fire_after: u64,
        min_messages: usize,
        #[serde(default)]
        count_only_roster_signed: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PoolStats {
    pub total: usize,
    /// Submissions carrying a valid roster signature.
    pub signed: usize,
}

impl MixPolicy {
    pub fn counts_only_signed(&self) -> bool {
        match *self {
            MixPolicy::Timed { .. } => false,
            MixPolicy::Threshold {
                count_only_roster_signed,
                ..
            }
            | MixPolicy::ThresholdAndTimed {
                count_only_roster_signed,
                ..
            } => count_only_roster_signed,
        }
    }

    pub fn is_threshold_family(&self) -> bool {
        !matches!(self, MixPolicy::Timed { .. })
    }

    pub fn fire_after(&self) -> Option<u64> {
        match *self {
            MixPolicy::Timed { fire_after } | MixPolicy::ThresholdAndTimed { fire_after, .. } => {
                Some(fire_after)
            }
            MixPolicy::Threshold { .. } => None,
        }
    }
}

pub fn should_fire(policy: &MixPolicy, stats: PoolStats, clock: u64) -> bool {
    let counted = if policy.counts_only_signed() {
        stats.signed
    } else {
        stats.total
    };
    match *policy {
        MixPolicy::Timed { fire_after } => clock >= fire_after,
        MixPolicy::Threshold { min_messages, .. } => counted >= min_messages,
        MixPolicy::ThresholdAndTimed {
            fire_after,
            min_messages,
            ..
        } => clock >= fire_after && counted >= min_messages,
    }
}
