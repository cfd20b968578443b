//! Precision, recall and per-stage timing.

use std::time::{Duration, Instant};

/// A percentage that may be undefined because its denominator was zero.
/// Undefined values read as 0 and carry `empty = true`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Percent {
    pub value: f64,
    pub empty: bool,
}

impl Percent {
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Percent { value: 0.0, empty: true }
        } else {
            Percent { value: 100.0 * num as f64 / den as f64, empty: false }
        }
    }
}

/// `100 · correct / (correct + false)` over the retained matches' labels.
pub fn precision(labels: &[bool]) -> Percent {
    let correct = labels.iter().filter(|&&b| b).count();
    Percent::ratio(correct, labels.len())
}

/// `100 · retained_correct / (retained_correct + missed_true)`.
pub fn recall(retained_correct: usize, missed_true: usize) -> Percent {
    Percent::ratio(retained_correct, retained_correct + missed_true)
}

/// Pipeline stages that count towards runtime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Extract,
    Describe,
    Match,
    Gms,
    Ransac,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Extract, Stage::Describe, Stage::Match, Stage::Gms, Stage::Ransac];

    fn index(self) -> usize {
        self as usize
    }
}

/// Milliseconds per stage; `total` is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StageTimes {
    pub extract: f64,
    pub describe: f64,
    pub match_: f64,
    pub gms: f64,
    pub ransac: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.extract + self.describe + self.match_ + self.gms + self.ransac
    }

    pub fn get(&self, s: Stage) -> f64 {
        match s {
            Stage::Extract => self.extract,
            Stage::Describe => self.describe,
            Stage::Match => self.match_,
            Stage::Gms => self.gms,
            Stage::Ransac => self.ransac,
        }
    }
}

/// Accumulates wall time per stage. Anything run outside [`Stopwatch::time`]
/// (image loading, metric computation) is not counted.
#[derive(Debug, Default)]
pub struct Stopwatch {
    elapsed: [Duration; 5],
}

impl Stopwatch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.elapsed[stage.index()] += start.elapsed();
        out
    }

    pub fn times(&self) -> StageTimes {
        let ms = |s: Stage| self.elapsed[s.index()].as_secs_f64() * 1e3;
        StageTimes {
            extract: ms(Stage::Extract),
            describe: ms(Stage::Describe),
            match_: ms(Stage::Match),
            gms: ms(Stage::Gms),
            ransac: ms(Stage::Ransac),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalResult {
    pub precision: Percent,
    pub recall: Percent,
    pub num_correct: usize,
    pub num_false: usize,
    pub num_missed: usize,
    pub elapsed: StageTimes,
}

/// Scores a final match set.
///
/// `final_labels` are the ground-truth labels of the retained matches and
/// `total_true` the number of ground-truth-correct matches among all
/// candidates, so the missed count is `total_true − retained correct`.
pub fn evaluate(final_labels: &[bool], total_true: usize, elapsed: StageTimes) -> EvalResult {
    let num_correct = final_labels.iter().filter(|&&b| b).count();
    let num_false = final_labels.len() - num_correct;
    let num_missed = total_true.saturating_sub(num_correct);
    EvalResult {
        precision: precision(final_labels),
        recall: recall(num_correct, num_missed),
        num_correct,
        num_false,
        num_missed,
        elapsed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precision_examples() {
        let mut labels = vec![true; 8];
        labels.extend([false; 2]);
        assert_eq!(precision(&labels).value, 80.0);
        assert_eq!(precision(&[true; 5]).value, 100.0);
        assert_eq!(precision(&[]), Percent { value: 0.0, empty: true });
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall(8, 8).value, 50.0);
        assert_eq!(recall(8, 0).value, 100.0);
        assert_eq!(recall(0, 0), Percent { value: 0.0, empty: true });
    }

    #[test]
    fn noop_stages_are_near_zero() {
        let mut sw = Stopwatch::new();
        for s in Stage::ALL {
            sw.time(s, || ());
        }
        assert!(sw.times().total() < 1.0);
    }

    #[test]
    fn total_is_sum_of_parts() {
        let mut sw = Stopwatch::new();
        sw.time(Stage::Extract, || std::thread::sleep(Duration::from_millis(3)));
        sw.time(Stage::Ransac, || std::thread::sleep(Duration::from_millis(2)));
        let t = sw.times();
        let parts: f64 = Stage::ALL.iter().map(|&s| t.get(s)).sum();
        assert!((t.total() - parts).abs() < 1e-9);
        assert!(t.extract >= 3.0 && t.ransac >= 2.0);
    }

    proptest! {
        #[test]
        fn complement_and_bounds(labels in prop::collection::vec(any::<bool>(), 1..200), missed in 0usize..100) {
            let p = precision(&labels);
            let falses = labels.iter().filter(|&&b| !b).count();
            let false_rate = 100.0 * falses as f64 / labels.len() as f64;
            prop_assert!((p.value + false_rate - 100.0).abs() < 1e-9);

            let correct = labels.len() - falses;
            let r = recall(correct, missed);
            prop_assert!(r.value <= 100.0);
            if correct > 0 {
                prop_assert_eq!(r.value == 100.0, missed == 0);
            }
        }
    }
}
