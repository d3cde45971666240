//! Stopping rules for walks: `T_M`, `T̃_M`, `H_x`, `T⊥_N` and a step cap.

use serde::Serialize;

use crate::graph::VertexId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingRule {
    /// `T_M = inf{n ≥ 0 : X_n·e1 ≥ M}`.
    pub right: Option<i64>,
    /// `T̃_M = inf{n ≥ 0 : X_n·e1 ≤ M}`; `D = T̃_{-1}`.
    pub left: Option<i64>,
    /// `H_x = inf{n ≥ 1 : X_n = x}`.
    pub target: Option<VertexId>,
    /// `T⊥_N = inf{n ≥ 0 : |X_n - (X_n·e1)e1| > N}`.
    pub transverse_radius: Option<i64>,
    pub max_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Right,
    Left,
    Target,
    Transverse,
    StepCap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StoppingReport {
    pub reason: StopReason,
    pub step: u64,
}

impl StoppingReport {
    pub fn truncated(&self) -> bool {
        self.reason == StopReason::StepCap
    }
}

/// What a rule can observe about the walker at a given time.
#[derive(Clone, Copy, Debug)]
pub struct Observation {
    pub vertex: Option<VertexId>,
    pub abscissa: Option<i64>,
    pub transverse_norm_sq: Option<i64>,
}

impl StoppingRule {
    pub fn steps(max_steps: u64) -> Self {
        StoppingRule { right: None, left: None, target: None, transverse_radius: None, max_steps }
    }

    pub fn right_at(mut self, m: i64) -> Self {
        self.right = Some(m);
        self
    }

    pub fn left_at(mut self, m: i64) -> Self {
        self.left = Some(m);
        self
    }

    /// Stops at `D = T̃_{-1}`.
    pub fn until_backtrack(self) -> Self {
        self.left_at(-1)
    }

    pub fn until_hit(mut self, v: VertexId) -> Self {
        self.target = Some(v);
        self
    }

    pub fn transverse(mut self, radius: i64) -> Self {
        self.transverse_radius = Some(radius);
        self
    }

    pub fn needs_geometry(&self) -> bool {
        self.right.is_some() || self.left.is_some() || self.transverse_radius.is_some()
    }

    /// Condition firing at time `step`, if any. Ties resolve in the order
    /// right, left, target, transverse, step cap.
    pub fn check(&self, step: u64, at: Observation) -> Option<StopReason> {
        if let (Some(m), Some(x)) = (self.right, at.abscissa) {
            if x >= m {
                return Some(StopReason::Right);
            }
        }
        if let (Some(m), Some(x)) = (self.left, at.abscissa) {
            if x <= m {
                return Some(StopReason::Left);
            }
        }
        if let (Some(t), Some(v)) = (self.target, at.vertex) {
            if step >= 1 && v == t {
                return Some(StopReason::Target);
            }
        }
        if let (Some(r), Some(n2)) = (self.transverse_radius, at.transverse_norm_sq) {
            if n2 > r * r {
                return Some(StopReason::Transverse);
            }
        }
        (step >= self.max_steps).then_some(StopReason::StepCap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: i64) -> Observation {
        Observation { vertex: Some(VertexId(0)), abscissa: Some(x), transverse_norm_sq: Some(0) }
    }

    #[test]
    fn thresholds_are_inclusive() {
        let rule = StoppingRule::steps(10).right_at(3).until_backtrack();
        assert_eq!(rule.check(0, at(0)), None);
        assert_eq!(rule.check(1, at(3)), Some(StopReason::Right));
        assert_eq!(rule.check(1, at(-1)), Some(StopReason::Left));
        assert_eq!(rule.check(10, at(0)), Some(StopReason::StepCap));
    }

    #[test]
    fn target_needs_a_step() {
        let rule = StoppingRule::steps(5).until_hit(VertexId(0));
        assert_eq!(rule.check(0, at(0)), None);
        assert_eq!(rule.check(2, at(0)), Some(StopReason::Target));
    }

    #[test]
    fn transverse_radius_is_strict() {
        let rule = StoppingRule::steps(5).transverse(2);
        let obs = |n2| Observation { vertex: None, abscissa: None, transverse_norm_sq: Some(n2) };
        assert_eq!(rule.check(1, obs(4)), None);
        assert_eq!(rule.check(1, obs(5)), Some(StopReason::Transverse));
        assert!(rule.needs_geometry());
        assert!(!StoppingRule::steps(1).needs_geometry());
    }
}
