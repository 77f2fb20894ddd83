use serde::{Deserialize, Serialize};

use super::MasterId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArbiterPolicy {
    /// Lowest master id wins.
    #[default]
    FixedPriority,
    /// Rotates starting after the last granted master; ties resolve by
    /// ascending id.
    RoundRobin,
}

#[derive(Debug, Clone)]
pub struct Arbiter {
    policy: ArbiterPolicy,
    last_granted: Option<MasterId>,
}

impl Arbiter {
    pub fn new(policy: ArbiterPolicy) -> Self {
        Arbiter {
            policy,
            last_granted: None,
        }
    }

    pub fn policy(&self) -> ArbiterPolicy {
        self.policy
    }

    /// Picks one of `candidates`, which must be in ascending id order, and
    /// records the grant.
    pub fn pick(&mut self, candidates: impl IntoIterator<Item = MasterId>) -> Option<MasterId> {
        let mut candidates = candidates.into_iter();
        let winner = match (self.policy, self.last_granted) {
            (ArbiterPolicy::RoundRobin, Some(last)) => {
                let mut first = None;
                let mut after = None;
                for id in candidates {
                    if first.is_none() {
                        first = Some(id);
                    }
                    if id > last {
                        after = Some(id);
                        break;
                    }
                }
                after.or(first)
            }
            _ => candidates.next(),
        }?;
        self.last_granted = Some(winner);
        Some(winner)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_priority_prefers_lowest() {
        let mut a = Arbiter::new(ArbiterPolicy::FixedPriority);
        assert_eq!(a.pick([1, 2]), Some(1));
        assert_eq!(a.pick([1, 2]), Some(1));
        assert_eq!(a.pick([]), None);
    }

    #[test]
    fn round_robin_rotates() {
        let mut a = Arbiter::new(ArbiterPolicy::RoundRobin);
        let picks: Vec<_> = (0..6).map(|_| a.pick([0, 1, 2]).unwrap()).collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
        assert_eq!(a.pick([0, 2]), Some(0));
        assert_eq!(a.pick([0, 2]), Some(2));
    }

    #[test]
    fn round_robin_skips_idle_masters() {
        let mut a = Arbiter::new(ArbiterPolicy::RoundRobin);
        assert_eq!(a.pick([3]), Some(3));
        assert_eq!(a.pick([1, 3]), Some(1));
        assert_eq!(a.pick([1, 3]), Some(3));
    }
}
