use std::collections::HashMap;

use super::{argmax, ArmChoice, ExitReason, Policy, PolicyKind, Turn};
use crate::error::Result;

/// Context-agnostic UCB: each distinct context (by exact bit pattern) is an
/// independent arm with index `mean + √(2 ln k / n)`. Unpulled arms go first.
#[derive(Debug, Clone, Default)]
pub struct MabUcb {
    ids: HashMap<Vec<u64>, usize>,
    counts: Vec<u64>,
    sums: Vec<f64>,
    pending_id: Option<usize>,
    turn: Turn,
}

impl MabUcb {
    pub fn new() -> Self {
        Self::default()
    }

    fn arm_id(&mut self, x: &[f64]) -> usize {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        let next = self.counts.len();
        let id = *self.ids.entry(key).or_insert(next);
        if id == next {
            self.counts.push(0);
            self.sums.push(0.0);
        }
        id
    }

    /// Pull count per distinct arm, in order of first appearance.
    pub fn pull_counts(&self) -> &[u64] {
        &self.counts
    }
}

impl Policy for MabUcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::MabUcb
    }

    fn select(&mut self, contexts: &[&[f64]]) -> Result<ArmChoice> {
        let round = self.turn.begin(contexts.len())?;
        let ids: Vec<usize> = contexts.iter().map(|x| self.arm_id(x)).collect();
        let log_k = (round as f64).ln();
        let bonuses: Vec<f64> = ids
            .iter()
            .map(|&a| match self.counts[a] {
                0 => f64::INFINITY,
                n => (2.0 * log_k / n as f64).sqrt(),
            })
            .collect();
        let scores: Vec<f64> = ids
            .iter()
            .zip(&bonuses)
            .map(|(&a, b)| match self.counts[a] {
                0 => f64::INFINITY,
                n => self.sums[a] / n as f64 + b,
            })
            .collect();
        let index = argmax(scores.iter().copied()).expect("non-empty decision set");
        self.pending_id = Some(ids[index]);
        let choice = ArmChoice {
            round,
            index,
            score: scores[index],
            bonus_at_choice: bonuses[index],
            selected_for_regression: false,
            level: 0,
            exit_reason: ExitReason::UcbArgmax,
            level_sets: None,
        };
        self.turn.commit(&choice);
        Ok(choice)
    }

    fn observe(&mut self, choice: &ArmChoice, _x: &[f64], reward: f64) -> Result<()> {
        self.turn.finish(choice)?;
        let id = self.pending_id.take().expect("turn guard ensures a pending arm");
        self.counts[id] += 1;
        self.sums[id] += reward;
        Ok(())
    }

    fn selection_counts(&self) -> Vec<usize> {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulls_every_arm_once_then_exploits() {
        let set = [vec![1.0], vec![2.0], vec![3.0]];
        let views: Vec<&[f64]> = set.iter().map(Vec::as_slice).collect();
        let mut p = MabUcb::new();
        let mut first = Vec::new();
        for _ in 0..3 {
            let c = p.select(&views).unwrap();
            first.push(c.index);
            p.observe(&c, views[c.index], [0.0, 1.0, 0.2][c.index]).unwrap();
        }
        assert_eq!(first, vec![0, 1, 2]);
        for _ in 0..500 {
            let c = p.select(&views).unwrap();
            p.observe(&c, views[c.index], [0.0, 1.0, 0.2][c.index]).unwrap();
        }
        assert!(p.pull_counts()[1] > 450);
    }

    #[test]
    fn arms_follow_context_identity_not_position() {
        let a = [vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = [vec![0.0, 1.0], vec![1.0, 0.0]];
        let mut p = MabUcb::new();
        let c = p.select(&a.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
        p.observe(&c, &a[0], 1.0).unwrap();
        // (1, 0) was pulled; the unpulled (0, 1) now sits at position 0.
        let c = p.select(&b.iter().map(Vec::as_slice).collect::<Vec<_>>()).unwrap();
        assert_eq!(c.index, 0);
    }
}
