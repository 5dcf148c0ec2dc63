use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{run_scenario, HarnessError, ScenarioId, ScenarioMetrics, ScenarioRun, ScenarioSpec};
use crate::corpus::CorpusRecord;
use crate::netsim::{CostModel, Micros, World};
use crate::pipeline::FilterContext;

/// Runs of several scenarios over one corpus and cost model.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub cost: CostModel,
    pub runs: BTreeMap<ScenarioId, ScenarioRun>,
    /// Set when the totals break `3 <= 4 <= min(1, 2)`.
    pub ordering: Option<String>,
}

impl Comparison {
    pub fn run(&self, id: ScenarioId) -> Option<&ScenarioRun> {
        self.runs.get(&id)
    }

    pub fn metrics(&self, id: ScenarioId) -> Option<&ScenarioMetrics> {
        self.runs.get(&id).map(|r| &r.metrics)
    }

    pub fn check_ordering(&self) -> Result<(), HarnessError> {
        match &self.ordering {
            Some(v) => Err(HarnessError::OrderingViolation(v.clone())),
            None => Ok(()),
        }
    }

    /// Extra connection cost of the multi-server layout over the single one
    /// on the receiver side: one setup and one QUIT per additional session.
    pub fn session_delta(&self) -> Option<Micros> {
        let (m1, m2) = (self.metrics(ScenarioId::S1)?, self.metrics(ScenarioId::S2)?);
        let extra = m2.sessions_opened.saturating_sub(m1.sessions_opened);
        Some((self.cost.session_setup + self.cost.per_command) * extra)
    }

    /// Filter-time ratio of scenario 1 over scenario 3.
    pub fn speedup(&self) -> Option<Result<f64, HarnessError>> {
        Some(speedup(self.metrics(ScenarioId::S1)?, self.metrics(ScenarioId::S3)?))
    }
}

fn ordering_violation(runs: &BTreeMap<ScenarioId, ScenarioRun>) -> Option<String> {
    let total = |id| runs.get(&id).map(|r: &ScenarioRun| r.metrics.total);
    let (t1, t2, t3, t4) = (
        total(ScenarioId::S1)?,
        total(ScenarioId::S2)?,
        total(ScenarioId::S3)?,
        total(ScenarioId::S4)?,
    );
    if t3 <= t4 && t4 <= t1.min(t2) {
        None
    } else {
        Some(format!(
            "expected total(3) <= total(4) <= min(total(1), total(2)), got {t3} / {t4} / {t1} / {t2}"
        ))
    }
}

/// Runs every spec on its own copy of the world. With `parallel` the runs
/// execute on separate threads; results are keyed by id either way.
pub fn compare_scenarios(
    specs: &[ScenarioSpec],
    world: &World,
    template: &FilterContext,
    corpus: &[CorpusRecord],
    parallel: bool,
) -> Result<Comparison, HarnessError> {
    let Some(first) = specs.first() else {
        return Err(HarnessError::MismatchedSpecs("no scenarios".into()));
    };
    if let Some(odd) = specs.iter().find(|s| s.cost != first.cost || s.n_messages != first.n_messages) {
        return Err(HarnessError::MismatchedSpecs(format!(
            "scenario {} uses different costs or message count",
            odd.id
        )));
    }
    let results: Vec<Result<ScenarioRun, HarnessError>> = if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs
                .iter()
                .map(|spec| scope.spawn(move || run_scenario(spec, world, template, corpus)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scenario thread panicked"))
                .collect()
        })
    } else {
        specs
            .iter()
            .map(|spec| run_scenario(spec, world, template, corpus))
            .collect()
    };
    let mut runs = BTreeMap::new();
    for run in results {
        let run = run?;
        runs.insert(run.spec.id, run);
    }
    let ordering = ordering_violation(&runs);
    Ok(Comparison {
        cost: first.cost.clone(),
        runs,
        ordering,
    })
}

/// `receiver.filter / sender.filter`.
pub fn speedup(receiver: &ScenarioMetrics, sender: &ScenarioMetrics) -> Result<f64, HarnessError> {
    if sender.filter == Micros::ZERO {
        return Err(HarnessError::DivisionByZero);
    }
    Ok(receiver.filter.as_micros() as f64 / sender.filter.as_micros() as f64)
}

pub fn csv_header() -> &'static str {
    "scenario,profile,n,total_s,filter_s,network_s,invocations,sessions,bytes,delivered,blocked,temp_rejected,failures"
}

pub fn csv_row(run: &ScenarioRun) -> String {
    let m = &run.metrics;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        run.spec.id,
        run.spec.cost.profile.name(),
        run.n_messages,
        m.total,
        m.filter,
        m.network,
        m.filter_invocations,
        m.sessions_opened,
        m.bytes_transferred,
        m.delivered,
        m.blocked,
        m.temp_rejected,
        m.failure_notices,
    )
}

/// Header plus one row per run, comparisons in the given order and runs
/// in id order.
pub fn render_csv(comparisons: &[Comparison]) -> String {
    let mut out = String::from(csv_header());
    out.push('\n');
    for c in comparisons {
        for run in c.runs.values() {
            out.push_str(&csv_row(run));
            out.push('\n');
        }
    }
    out
}

/// Whitespace-separated table for a grouped bar chart: one row per profile,
/// one column of total seconds per scenario.
pub fn render_plot(comparisons: &[Comparison]) -> String {
    let mut out = String::from("# profile s1_total s2_total s3_total s4_total\n");
    for c in comparisons {
        out.push_str(c.cost.profile.name());
        for id in ScenarioId::ALL {
            match c.metrics(id) {
                Some(m) => {
                    let _ = write!(out, " {}", m.total);
                }
                None => out.push_str(" NaN"),
            }
        }
        out.push('\n');
    }
    out
}
