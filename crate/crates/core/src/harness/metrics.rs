//! Per-slot metrics, regret series and CSV output.

use std::io::Write;

use crate::error::{Error, Result};
use crate::harness::config::RegretMode;

/// Per-slot outcomes of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySeries {
    pub name: String,
    pub utility: Vec<f64>,
    pub hit: Vec<f64>,
}

impl PolicySeries {
    pub fn new(name: impl Into<String>, capacity: usize) -> Self {
        Self {
            name: name.into(),
            utility: Vec::with_capacity(capacity),
            hit: Vec::with_capacity(capacity),
        }
    }

    pub fn cumulative_utility(&self) -> Vec<f64> {
        prefix_sums(&self.utility)
    }

    /// Sum of utilities over slots `1..=t`.
    pub fn total_at(&self, t: usize) -> f64 {
        self.utility[..t].iter().sum()
    }

    pub fn final_hit_ratio(&self) -> f64 {
        if self.hit.is_empty() {
            0.0
        } else {
            self.hit.iter().sum::<f64>() / self.hit.len() as f64
        }
    }

    pub fn final_average_utility(&self) -> f64 {
        if self.utility.is_empty() {
            0.0
        } else {
            self.utility.iter().sum::<f64>() / self.utility.len() as f64
        }
    }
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Benchmark and bound values at one checkpoint slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    /// Total utility of the static benchmark over slots `1..=t`.
    pub hindsight: f64,
    pub upper_bound: f64,
    pub lower_bound: Option<f64>,
}

/// Everything a run measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub mode: RegretMode,
    pub horizon: u64,
    pub policies: Vec<PolicySeries>,
    /// In at-T mode: utility of the whole-horizon hindsight configuration per slot.
    pub hindsight_per_slot: Option<Vec<f64>>,
    pub checkpoints: Vec<Checkpoint>,
}

impl MetricsSeries {
    pub fn policy(&self, name: &str) -> Option<&PolicySeries> {
        self.policies.iter().find(|p| p.name == name)
    }

    /// Regret of `name` at every checkpoint.
    pub fn checkpoint_regret(&self, name: &str) -> Option<Vec<RegretPoint>> {
        let p = self.policy(name)?;
        let points: Vec<(u64, f64)> = self.checkpoints.iter().map(|c| (c.t, c.hindsight)).collect();
        regret_series(&p.utility, &points).ok()
    }

    /// Regret of `name` at the horizon.
    pub fn final_regret(&self, name: &str) -> Option<f64> {
        self.checkpoint_regret(name)?.last().map(|r| r.regret)
    }

    /// Writes the wide CSV: one `slot` row per slot, then one `checkpoint`
    /// row per checkpoint.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["kind".to_string(), "t".to_string()];
        for p in &self.policies {
            for col in [
                "utility",
                "cumulative",
                "hit",
                "hit_ratio",
                "avg_utility",
                "regret",
                "regret_per_t",
            ] {
                header.push(format!("{}_{col}", p.name));
            }
        }
        header.extend(["benchmark", "upper_bound", "lower_bound"].map(String::from));
        w.write_record(&header).map_err(csv_error)?;

        let cumulative: Vec<Vec<f64>> = self.policies.iter().map(|p| p.cumulative_utility()).collect();
        let hits: Vec<Vec<f64>> = self.policies.iter().map(|p| prefix_sums(&p.hit)).collect();
        let hindsight_cum = self.hindsight_per_slot.as_deref().map(prefix_sums);

        let fmt = |x: f64| format!("{x}");
        let t_max = self.horizon as usize;
        for t in 1..=t_max {
            let mut row = vec!["slot".to_string(), t.to_string()];
            let h = hindsight_cum.as_ref().map(|h| h[t - 1]);
            for (k, p) in self.policies.iter().enumerate() {
                let cum = cumulative[k][t - 1];
                row.push(fmt(p.utility[t - 1]));
                row.push(fmt(cum));
                row.push(fmt(p.hit[t - 1]));
                row.push(fmt(hits[k][t - 1] / t as f64));
                row.push(fmt(cum / t as f64));
                match h {
                    Some(h) => {
                        row.push(fmt(h - cum));
                        row.push(fmt((h - cum) / t as f64));
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            row.push(h.map(fmt).unwrap_or_default());
            row.push(String::new());
            row.push(String::new());
            w.write_record(&row).map_err(csv_error)?;
        }
        for c in &self.checkpoints {
            let t = c.t as usize;
            let mut row = vec!["checkpoint".to_string(), t.to_string()];
            for (k, p) in self.policies.iter().enumerate() {
                let cum = cumulative[k][t - 1];
                row.push(fmt(p.utility[t - 1]));
                row.push(fmt(cum));
                row.push(fmt(p.hit[t - 1]));
                row.push(fmt(hits[k][t - 1] / t as f64));
                row.push(fmt(cum / t as f64));
                row.push(fmt(c.hindsight - cum));
                row.push(fmt((c.hindsight - cum) / t as f64));
            }
            row.push(fmt(c.hindsight));
            row.push(fmt(c.upper_bound));
            row.push(c.lower_bound.map(fmt).unwrap_or_default());
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Realized regret at one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretPoint {
    pub t: u64,
    pub regret: f64,
    pub regret_per_t: f64,
}

/// `R_t = hindsight_t - sum_{s <= t} utility_s` at every `(t, hindsight_t)`.
pub fn regret_series(utilities: &[f64], hindsight: &[(u64, f64)]) -> Result<Vec<RegretPoint>> {
    let cumulative = prefix_sums(utilities);
    hindsight
        .iter()
        .map(|&(t, h)| {
            if t == 0 || t as usize > cumulative.len() {
                return Err(Error::LengthMismatch {
                    left: t as usize,
                    right: cumulative.len(),
                });
            }
            let regret = h - cumulative[t as usize - 1];
            Ok(RegretPoint {
                t,
                regret,
                regret_per_t: regret / t as f64,
            })
        })
        .collect()
}

/// Powers of two up to `horizon`, plus `horizon` itself.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut t = 1u64;
    while t < horizon {
        v.push(t);
        t = t.saturating_mul(2);
    }
    if horizon > 0 {
        v.push(horizon);
    }
    v
}
