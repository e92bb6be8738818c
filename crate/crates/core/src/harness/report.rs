//! Figures assembled from sweep records.

use std::fmt;
use std::str::FromStr;

use super::svg::{Axes, Series};
use crate::error::{Error, Result};
use crate::metrics::{mixture_velocity, Estimate, Observer, SweepRecord};
use crate::Group;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Agent-only errors per group against number ratio.
    NmVsNr,
    /// Agent-only errors per group against intrinsic speed.
    NmVsS0,
    /// Drift speed against number ratio, with the mixture velocity.
    Drift,
    /// Total errors of every observer against number ratio.
    Compare,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::NmVsNr, Figure::NmVsS0, Figure::Drift, Figure::Compare];

    pub fn name(self) -> &'static str {
        match self {
            Figure::NmVsNr => "nm-vs-nr",
            Figure::NmVsS0 => "nm-vs-s0",
            Figure::Drift => "drift",
            Figure::Compare => "compare",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::parse("figure", format!("unknown figure {s:?}")))
    }
}

/// Records grouped by two parameters, in first-seen order.
fn group_by<'a>(
    records: &'a [SweepRecord],
    key: impl Fn(&SweepRecord) -> (f64, f64),
) -> Vec<((f64, f64), Vec<&'a SweepRecord>)> {
    let mut groups: Vec<((f64, f64), Vec<&SweepRecord>)> = Vec::new();
    for r in records {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| g.0.to_bits() == k.0.to_bits() && g.1.to_bits() == k.1.to_bits()) {
            Some((_, members)) => members.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
}

fn series_of(
    label: String,
    members: &[&SweepRecord],
    x: impl Fn(&SweepRecord) -> f64,
    y: impl Fn(&SweepRecord) -> Estimate,
) -> Option<Series> {
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for r in members {
        let e = y(r);
        if e.mean.is_finite() {
            points.push((x(r), e.mean));
            errors.push(if e.se.is_finite() { e.se } else { 0.0 });
        }
    }
    (!points.is_empty()).then(|| Series::new(label, points).with_errors(errors))
}

fn short(x: f64) -> String {
    let s = format!("{x:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn figure_series(records: &[SweepRecord], figure: Figure) -> Result<(Vec<Series>, Axes)> {
    if records.is_empty() {
        return Err(Error::Empty("no records".into()));
    }
    let nr = |r: &SweepRecord| r.params.number_ratio;
    let s0 = |r: &SweepRecord| r.params.intrinsic_speed;
    let mut series = Vec::new();
    let axes = match figure {
        Figure::NmVsNr | Figure::NmVsS0 => {
            let by_nr = figure == Figure::NmVsNr;
            let groups = if by_nr {
                group_by(records, |r| (r.params.density, s0(r)))
            } else {
                group_by(records, |r| (r.params.density, nr(r)))
            };
            for ((rho, other), members) in groups {
                for g in Group::BOTH {
                    let label = if by_nr {
                        format!("rho={} s0={} group {g}", short(rho), short(other))
                    } else {
                        format!("rho={} Nr={} group {g}", short(rho), short(other))
                    };
                    let x = if by_nr { nr } else { s0 };
                    series.extend(series_of(label, &members, x, |r| r.n_m(Observer::AgentOnly, g)));
                }
            }
            Axes {
                title: "Agent-only misclassifications".into(),
                x_label: if by_nr { "number ratio Nr" } else { "intrinsic speed s0" }.into(),
                y_label: "misclassified agents per window".into(),
            }
        }
        Figure::Drift => {
            for ((rho, speed), members) in group_by(records, |r| (r.params.density, s0(r))) {
                let label = format!("rho={} s0={}", short(rho), short(speed));
                series.extend(series_of(label, &members, nr, |r| r.drift_speed()));
                let theory: Vec<(f64, f64)> = members.iter().map(|r| (nr(r), mixture_velocity(speed, nr(r)))).collect();
                series.push(Series::new(format!("s0(1-2Nr), s0={}", short(speed)), theory).dashed());
            }
            Axes {
                title: "Drift speed".into(),
                x_label: "number ratio Nr".into(),
                y_label: "mean x-velocity".into(),
            }
        }
        Figure::Compare => {
            for ((rho, speed), members) in group_by(records, |r| (r.params.density, s0(r))) {
                for obs in Observer::ALL {
                    let label = format!("{obs}, rho={} s0={}", short(rho), short(speed));
                    series.extend(series_of(label, &members, nr, |r| r.n_m_total(obs)));
                }
            }
            Axes {
                title: "Observer comparison".into(),
                x_label: "number ratio Nr".into(),
                y_label: "total misclassified agents per window".into(),
            }
        }
    };
    if series.is_empty() {
        return Err(Error::Empty(format!("no data for figure {figure}")));
    }
    Ok((series, axes))
}
