use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::hybrid::ModelKind;
use crate::manufactured::CaseLabel;

use super::experiment_mode;

/// `‖u − ǔ‖₂ / ‖ǔ‖₂`.
pub fn rrmse(u: &[f64], exact: &[f64]) -> Result<f64> {
    check_len("rrmse", exact.len(), u.len())?;
    let reference = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reference == 0.0 {
        return Err(Error::InvalidArgument("rrmse against a zero reference".into()));
    }
    let diff = u.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(diff / reference)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrmseRecord {
    pub experiment: u8,
    pub solution: CaseLabel,
    pub alpha: f64,
    pub model: ModelKind,
    /// `None` for the PBM, which has no random initialization.
    pub seed: Option<u64>,
    pub step: usize,
    pub time: f64,
    /// `inf` once a trajectory has diverged.
    pub rrmse: f64,
}

/// Scenario identity: `(experiment, solution, α)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ScenarioKey {
    pub experiment: u8,
    pub solution: CaseLabel,
    pub alpha: f64,
}

fn key_of(r: &RrmseRecord) -> ScenarioKey {
    ScenarioKey {
        experiment: r.experiment,
        solution: r.solution,
        alpha: r.alpha,
    }
}

fn key_cmp(a: &ScenarioKey, b: &ScenarioKey) -> std::cmp::Ordering {
    (a.experiment, a.solution)
        .cmp(&(b.experiment, b.solution))
        .then(a.alpha.total_cmp(&b.alpha))
}

/// Sample mean and `N − 1` standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 || !mean.is_finite() {
        return (mean, if n == 1 { 0.0 } else { f64::NAN });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Per-step statistics of one model on one scenario, over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub key: ScenarioKey,
    pub model: ModelKind,
    pub seeds: usize,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl SeriesStats {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_std(&self) -> f64 {
        self.std.last().copied().unwrap_or(f64::NAN)
    }

    /// Mean plus one deviation, the ranking score that penalizes spread.
    pub fn final_penalized(&self) -> f64 {
        self.final_mean() + self.final_std()
    }
}

/// Groups records by scenario and model and reduces over seeds per step.
/// Output is ordered by scenario, then model.
pub fn series_stats(records: &[RrmseRecord]) -> Vec<SeriesStats> {
    // (scenario, model) -> step -> (time, values)
    let mut groups: Vec<(ScenarioKey, ModelKind, BTreeMap<usize, (f64, Vec<f64>)>)> = Vec::new();
    for r in records {
        let key = key_of(r);
        // records usually arrive grouped, so look from the back
        let slot = match groups.iter().rposition(|(k, m, _)| key_cmp(k, &key).is_eq() && *m == r.model) {
            Some(p) => p,
            None => {
                groups.push((key, r.model, BTreeMap::new()));
                groups.len() - 1
            }
        };
        groups[slot].2.entry(r.step).or_insert_with(|| (r.time, Vec::new())).1.push(r.rrmse);
    }
    groups.sort_by(|a, b| key_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)));
    groups
        .into_iter()
        .map(|(key, model, steps)| {
            let seeds = steps.values().map(|(_, v)| v.len()).max().unwrap_or(0);
            let mut s = SeriesStats {
                key,
                model,
                seeds,
                steps: Vec::with_capacity(steps.len()),
                times: Vec::with_capacity(steps.len()),
                mean: Vec::with_capacity(steps.len()),
                std: Vec::with_capacity(steps.len()),
            };
            for (step, (time, values)) in steps {
                let (m, sd) = mean_std(&values);
                s.steps.push(step);
                s.times.push(time);
                s.mean.push(m);
                s.std.push(sd);
            }
            s
        })
        .collect()
}

/// Final-step scores of all models on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub key: ScenarioKey,
    pub scores: Vec<(ModelKind, f64)>,
    pub winner: ModelKind,
    pub loser: ModelKind,
    /// Another model matched the winner's score exactly.
    pub tied: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Winners and losers per scenario, ranking by `score` (lower is better);
/// ties go to the earlier model in [`ModelKind::ALL`].
pub fn outcomes(stats: &[SeriesStats], score: impl Fn(&SeriesStats) -> f64) -> Vec<ScenarioOutcome> {
    let mut out: Vec<ScenarioOutcome> = Vec::new();
    for s in stats {
        let v = sanitize(score(s));
        match out.last_mut() {
            Some(o) if key_cmp(&o.key, &s.key).is_eq() => o.scores.push((s.model, v)),
            _ => out.push(ScenarioOutcome {
                key: s.key,
                scores: vec![(s.model, v)],
                winner: s.model,
                loser: s.model,
                tied: false,
            }),
        }
    }
    for o in &mut out {
        o.scores.sort_by_key(|(m, _)| *m);
        let best = o.scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let worst = o.scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        o.winner = o.scores.iter().find(|s| s.1 == best).map_or(o.scores[0].0, |s| s.0);
        o.loser = o.scores.iter().find(|s| s.1 == worst).map_or(o.scores[0].0, |s| s.0);
        o.tied = o.scores.iter().filter(|s| s.1 == best).count() > 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Alpha,
    Error,
    Solution,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(GroupBy::Alpha),
            "error" => Ok(GroupBy::Error),
            "solution" => Ok(GroupBy::Solution),
            other => Err(Error::InvalidArgument(format!("unknown grouping `{other}`"))),
        }
    }
}

impl GroupBy {
    fn label(self, key: &ScenarioKey) -> String {
        match self {
            GroupBy::Alpha => format!("{}", key.alpha),
            GroupBy::Error => experiment_mode(key.experiment).map_or_else(|_| format!("experiment {}", key.experiment), |m| m.to_string()),
            GroupBy::Solution => key.solution.family().to_string(),
        }
    }
}

/// Win counts per model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub pbm: usize,
    pub ddm: usize,
    pub costa: usize,
}

impl ModelCounts {
    pub fn get(&self, m: ModelKind) -> usize {
        match m {
            ModelKind::Pbm => self.pbm,
            ModelKind::Ddm => self.ddm,
            ModelKind::Costa => self.costa,
        }
    }

    fn bump(&mut self, m: ModelKind) {
        match m {
            ModelKind::Pbm => self.pbm += 1,
            ModelKind::Ddm => self.ddm += 1,
            ModelKind::Costa => self.costa += 1,
        }
    }

    pub fn sum(&self) -> usize {
        self.pbm + self.ddm + self.costa
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub group: String,
    pub wins: ModelCounts,
    pub total: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub group_by: GroupBy,
    /// Ranked by final mean RRMSE.
    pub rows: Vec<AggregateRow>,
    pub total: AggregateRow,
    /// Ranked by final mean + one standard deviation.
    pub penalized_rows: Vec<AggregateRow>,
    pub penalized_total: AggregateRow,
    pub outcomes: Vec<ScenarioOutcome>,
}

fn tabulate(outcomes: &[ScenarioOutcome], group_by: GroupBy) -> (Vec<AggregateRow>, AggregateRow) {
    let mut rows: Vec<AggregateRow> = Vec::new();
    let mut total = AggregateRow {
        group: "total".into(),
        wins: ModelCounts::default(),
        total: 0,
        ties: 0,
    };
    for o in outcomes {
        let g = group_by.label(&o.key);
        let row = match rows.iter_mut().position(|r| r.group == g) {
            Some(i) => &mut rows[i],
            None => {
                rows.push(AggregateRow {
                    group: g,
                    wins: ModelCounts::default(),
                    total: 0,
                    ties: 0,
                });
                rows.last_mut().expect("just pushed")
            }
        };
        for r in [&mut *row, &mut total] {
            r.wins.bump(o.winner);
            r.total += 1;
            r.ties += usize::from(o.tied);
        }
    }
    if group_by == GroupBy::Alpha {
        rows.sort_by(|a, b| {
            let pa: f64 = a.group.parse().unwrap_or(f64::NAN);
            let pb: f64 = b.group.parse().unwrap_or(f64::NAN);
            pa.total_cmp(&pb)
        });
    }
    (rows, total)
}

/// Winner counts at the final step, grouped as requested.
pub fn aggregate_stats(records: &[RrmseRecord], group_by: GroupBy) -> Aggregates {
    aggregate_series(&series_stats(records), group_by)
}

pub fn aggregate_series(stats: &[SeriesStats], group_by: GroupBy) -> Aggregates {
    let plain = outcomes(stats, SeriesStats::final_mean);
    let penalized = outcomes(stats, SeriesStats::final_penalized);
    let (rows, total) = tabulate(&plain, group_by);
    let (penalized_rows, penalized_total) = tabulate(&penalized, group_by);
    Aggregates {
        group_by,
        rows,
        total,
        penalized_rows,
        penalized_total,
        outcomes: plain,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub penalized: bool,
    /// Scenarios where the model beat both others by at least `threshold`.
    pub wins: ModelCounts,
    /// Scenarios where the model was worse than both others by at least `threshold`.
    pub losses: ModelCounts,
}

/// Win/loss counts by margin. A win for `m` at `δ` means `m` is the
/// (tie-broken) winner and every other score is at least `δ` times `m`'s.
pub fn significance_curve(records: &[RrmseRecord], thresholds: &[f64]) -> Result<Vec<CurvePoint>> {
    significance_series(&series_stats(records), thresholds)
}

pub fn significance_series(stats: &[SeriesStats], thresholds: &[f64]) -> Result<Vec<CurvePoint>> {
    if let Some(d) = thresholds.iter().find(|d| !(**d >= 1.0)) {
        return Err(Error::InvalidArgument(format!("threshold {d} is below 1")));
    }
    let mut points = Vec::new();
    for penalized in [false, true] {
        let outs = if penalized {
            outcomes(stats, SeriesStats::final_penalized)
        } else {
            outcomes(stats, SeriesStats::final_mean)
        };
        for &delta in thresholds {
            let mut p = CurvePoint {
                threshold: delta,
                penalized,
                wins: ModelCounts::default(),
                losses: ModelCounts::default(),
            };
            for o in &outs {
                let score = |m: ModelKind| o.scores.iter().find(|s| s.0 == m).map_or(f64::NAN, |s| s.1);
                let others = |m: ModelKind| o.scores.iter().filter(move |s| s.0 != m).map(|s| s.1);
                let w = score(o.winner);
                if others(o.winner).all(|v| v >= delta * w) {
                    p.wins.bump(o.winner);
                }
                let l = score(o.loser);
                if o.scores.len() > 1 && others(o.loser).all(|v| l >= delta * v) {
                    p.losses.bump(o.loser);
                }
            }
            points.push(p);
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rrmse_examples() {
        assert_eq!(rrmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rrmse(&[1.1, 2.2], &[1.0, 2.0]).unwrap() - 0.1).abs() < 1e-15);
        assert!((rrmse(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(rrmse(&[1.0], &[0.0]).is_err());
        assert!(rrmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sample_deviation() {
        let (m, s) = mean_std(&[0.0, 2.0]);
        assert_eq!(m, 1.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        assert!(mean_std(&[1.0, f64::INFINITY]).0.is_infinite());
    }
}
