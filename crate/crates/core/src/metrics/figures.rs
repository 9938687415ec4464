use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::{MetricsError, RankPoint};
use crate::attacks::KeyRanking;
use crate::grid::FrequencyGrid;
use crate::trace::Channel;

/// Figure data sets that can be emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureTag {
    /// `frequency_hz, dm_phase_deg, dm_mag_db`: fan-out class-mean distance.
    FanoutDm,
    /// `feature, frequency_hz, k00 … kff`: DIMA difference of means.
    DomMatrix,
    /// `feature, frequency_hz, k00 … kff`: CIMA correlation.
    CorrelationMatrix,
    /// `rank, key, score, best_frequency_hz`: best-scoring hypotheses.
    TopKeys,
    /// `feature, frequency_hz, <bit> …`: per-bit difference of means.
    BitDm,
    /// `feature, frequency_hz, snr`.
    Snr,
    /// `traces, rank`.
    RankTrajectory,
}

impl FigureTag {
    pub const ALL: [FigureTag; 7] = [
        FigureTag::FanoutDm,
        FigureTag::DomMatrix,
        FigureTag::CorrelationMatrix,
        FigureTag::TopKeys,
        FigureTag::BitDm,
        FigureTag::Snr,
        FigureTag::RankTrajectory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureTag::FanoutDm => "fanout-dm",
            FigureTag::DomMatrix => "dom-matrix",
            FigureTag::CorrelationMatrix => "correlation-matrix",
            FigureTag::TopKeys => "top-keys",
            FigureTag::BitDm => "bit-dm",
            FigureTag::Snr => "snr",
            FigureTag::RankTrajectory => "rank-trajectory",
        }
    }
}

impl fmt::Display for FigureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureTag {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| MetricsError::UnknownFigure(s.to_string()))
    }
}

/// Inputs for figure emission; each tag uses the fields it needs.
#[derive(Debug, Clone, Default)]
pub struct FigureData {
    pub grid: Option<FrequencyGrid>,
    pub channel: Channel,
    pub dm_phase: Option<Vec<f64>>,
    pub dm_mag: Option<Vec<f64>>,
    pub dom: Option<(Array2<f64>, Range<u16>)>,
    pub correlation: Option<(Array2<f64>, Range<u16>)>,
    pub ranking: Option<KeyRanking>,
    pub top_n: usize,
    pub bit_curves: Vec<(String, Vec<f64>)>,
    pub snr: Option<Vec<f64>>,
    pub trajectory: Vec<RankPoint>,
}

/// A CSV table with a fixed column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| MetricsError::Table(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| MetricsError::Table(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), MetricsError> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricsError> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { columns, rows })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, MetricsError> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| MetricsError::Table(format!("no column {name}")))?;
        self.rows
            .iter()
            .map(|r| {
                r[j].parse::<f64>()
                    .map_err(|_| MetricsError::Table(format!("{name}: {:?} is not a number", r[j])))
            })
            .collect()
    }
}

/// `Display` for f64 prints the shortest string that parses back to the
/// same value.
fn num(x: f64) -> String {
    format!("{x}")
}

/// Build the table for one figure tag.
pub fn emit_figure_data(data: &FigureData, tag: &str) -> Result<Table, MetricsError> {
    let tag: FigureTag = tag.parse()?;
    let need_grid = || {
        data.grid.ok_or(MetricsError::MissingData {
            tag: tag.name(),
            what: "a frequency grid",
        })
    };
    let freq = |g: &FrequencyGrid, feature: usize| {
        g.stamp(data.channel.stamp_of_feature(feature, g.points()))
    };
    match tag {
        FigureTag::FanoutDm => {
            let g = need_grid()?;
            let (Some(ph), Some(mag)) = (&data.dm_phase, &data.dm_mag) else {
                return Err(MetricsError::MissingData {
                    tag: tag.name(),
                    what: "phase and magnitude DM curves",
                });
            };
            check_len(ph.len(), g.points())?;
            check_len(mag.len(), g.points())?;
            let mut t = Table::new(cols(&["frequency_hz", "dm_phase_deg", "dm_mag_db"]));
            for i in 0..g.points() {
                t.push(vec![num(g.stamp(i)), num(ph[i]), num(mag[i])]);
            }
            Ok(t)
        }
        FigureTag::DomMatrix | FigureTag::CorrelationMatrix => {
            let g = need_grid()?;
            let m = if tag == FigureTag::DomMatrix {
                &data.dom
            } else {
                &data.correlation
            };
            let Some((m, keys)) = m else {
                return Err(MetricsError::MissingData {
                    tag: tag.name(),
                    what: "a per-key matrix",
                });
            };
            check_len(m.nrows(), keys.len())?;
            let mut columns = cols(&["feature", "frequency_hz"]);
            columns.extend(keys.clone().map(|k| format!("k{k:02x}")));
            let mut t = Table::new(columns);
            for j in 0..m.ncols() {
                let mut row = vec![j.to_string(), num(freq(&g, j))];
                row.extend(m.column(j).iter().map(|v| num(*v)));
                t.push(row);
            }
            Ok(t)
        }
        FigureTag::TopKeys => {
            let Some(r) = &data.ranking else {
                return Err(MetricsError::MissingData {
                    tag: tag.name(),
                    what: "a key ranking",
                });
            };
            let n = if data.top_n == 0 { r.len() } else { data.top_n };
            let mut t = Table::new(cols(&["rank", "key", "score", "best_frequency_hz"]));
            for (i, e) in r.entries().iter().take(n).enumerate() {
                t.push(vec![
                    (i + 1).to_string(),
                    format!("0x{:02x}", e.hypothesis),
                    num(e.score),
                    e.best_frequency_hz.map(num).unwrap_or_default(),
                ]);
            }
            Ok(t)
        }
        FigureTag::BitDm => {
            let g = need_grid()?;
            if data.bit_curves.is_empty() {
                return Err(MetricsError::MissingData {
                    tag: tag.name(),
                    what: "per-bit DM curves",
                });
            }
            let f = data.bit_curves[0].1.len();
            for (_, c) in &data.bit_curves {
                check_len(c.len(), f)?;
            }
            let mut columns = cols(&["feature", "frequency_hz"]);
            columns.extend(data.bit_curves.iter().map(|(n, _)| n.clone()));
            let mut t = Table::new(columns);
            for j in 0..f {
                let mut row = vec![j.to_string(), num(freq(&g, j))];
                row.extend(data.bit_curves.iter().map(|(_, c)| num(c[j])));
                t.push(row);
            }
            Ok(t)
        }
        FigureTag::Snr => {
            let g = need_grid()?;
            let Some(s) = &data.snr else {
                return Err(MetricsError::MissingData {
                    tag: tag.name(),
                    what: "an SNR curve",
                });
            };
            let mut t = Table::new(cols(&["feature", "frequency_hz", "snr"]));
            for (j, v) in s.iter().enumerate() {
                t.push(vec![j.to_string(), num(freq(&g, j)), num(*v)]);
            }
            Ok(t)
        }
        FigureTag::RankTrajectory => {
            let mut t = Table::new(cols(&["traces", "rank"]));
            for p in &data.trajectory {
                t.push(vec![p.traces.to_string(), p.rank.to_string()]);
            }
            Ok(t)
        }
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn check_len(got: usize, expected: usize) -> Result<(), MetricsError> {
    if got == expected {
        Ok(())
    } else {
        Err(MetricsError::Table(format!(
            "expected {expected} values, got {got}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fanout_round_trip() {
        let g = FrequencyGrid::new(1e9, 2e9, 5).unwrap();
        let data = FigureData {
            grid: Some(g),
            dm_phase: Some(vec![0.1, 1.0 / 3.0, 2e-17, 0.0, f64::INFINITY]),
            dm_mag: Some(vec![0.0; 5]),
            ..Default::default()
        };
        let t = emit_figure_data(&data, "fanout-dm").unwrap();
        assert_eq!(t.rows.len(), 5);
        let back = Table::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("dm_phase_deg").unwrap(), data.dm_phase.unwrap());
        assert_eq!(back.column("frequency_hz").unwrap(), g.stamps().collect::<Vec<_>>());
    }

    #[test]
    fn unknown_and_missing() {
        let d = FigureData::default();
        assert!(matches!(emit_figure_data(&d, "fig99"), Err(MetricsError::UnknownFigure(_))));
        assert!(matches!(
            emit_figure_data(&d, "fanout-dm"),
            Err(MetricsError::MissingData { .. })
        ));
        assert_eq!(emit_figure_data(&d, "rank-trajectory").unwrap().rows.len(), 0);
    }

    #[test]
    fn matrix_layout() {
        let g = FrequencyGrid::new(1e9, 2e9, 3).unwrap();
        let m = Array2::from_shape_fn((2, 3), |(k, j)| (k * 10 + j) as f64);
        let d = FigureData {
            grid: Some(g),
            dom: Some((m, 4..6)),
            ..Default::default()
        };
        let t = emit_figure_data(&d, "dom-matrix").unwrap();
        assert_eq!(t.columns, ["feature", "frequency_hz", "k04", "k05"]);
        assert_eq!(t.column("k05").unwrap(), [10.0, 11.0, 12.0]);
    }
}
