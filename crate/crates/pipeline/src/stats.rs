use std::fmt;

use persona_core::labeling::LabelSet;
use persona_core::learn::MeanStd;
use persona_core::trace::Playtrace;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub labels: LabelSet,
    pub count: usize,
    pub steps: MeanStd,
    pub treasures: MeanStd,
    pub kills: MeanStd,
}

/// One row per label combination, in table order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    /// `None` for a table over all maps.
    pub map: Option<String>,
    pub rows: Vec<StatsRow>,
}

impl StatsTable {
    pub fn row(&self, labels: LabelSet) -> &StatsRow {
        &self.rows[labels.combination_index()]
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }
}

pub fn stats_report(traces: &[Playtrace], labels: &[LabelSet]) -> StatsTable {
    assert_eq!(traces.len(), labels.len(), "one label set per trace");
    let rows = LabelSet::ALL_COMBINATIONS
        .iter()
        .map(|combo| {
            let members: Vec<&Playtrace> = traces.iter().zip(labels).filter(|(_, l)| *l == combo).map(|(t, _)| t).collect();
            let col = |f: fn(&Playtrace) -> usize| MeanStd::of(&members.iter().map(|t| f(t) as f64).collect::<Vec<_>>());
            StatsRow {
                labels: *combo,
                count: members.len(),
                steps: col(Playtrace::len),
                treasures: col(Playtrace::treasures_collected),
                kills: col(Playtrace::monsters_killed),
            }
        })
        .collect();
    StatsTable { map: None, rows }
}

/// One table per map, in order of first appearance.
pub fn stats_by_map(traces: &[Playtrace], labels: &[LabelSet]) -> Vec<StatsTable> {
    let mut maps: Vec<&str> = Vec::new();
    for t in traces {
        if !maps.contains(&t.map_name.as_str()) {
            maps.push(&t.map_name);
        }
    }
    maps.into_iter()
        .map(|m| {
            let (ts, ls): (Vec<Playtrace>, Vec<LabelSet>) =
                traces.iter().zip(labels).filter(|(t, _)| t.map_name == m).map(|(t, l)| (t.clone(), *l)).unzip();
            StatsTable { map: Some(m.to_string()), ..stats_report(&ts, &ls) }
        })
        .collect()
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = &self.map {
            writeln!(f, "map: {m}")?;
        }
        writeln!(f, "{:<12} {:>6} {:>18} {:>18} {:>18}", "labels", "count", "steps", "treasures", "kills")?;
        for r in &self.rows {
            let cell = |m: MeanStd| if r.count == 0 { "-".to_string() } else { format!("{:.2} ± {:.2}", m.mean, m.std) };
            writeln!(
                f,
                "{:<12} {:>6} {:>18} {:>18} {:>18}",
                r.labels.row_name(),
                r.count,
                cell(r.steps),
                cell(r.treasures),
                cell(r.kills)
            )?;
        }
        Ok(())
    }
}
