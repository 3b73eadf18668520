//! End-to-end run: cluster county profiles, audit reported counts, pick a
//! SARIMA order per cluster, fit, evaluate on a holdout, forecast and write
//! reports.

mod config;
mod holdout;
mod run;
pub mod synthetic;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sarima::SarimaSpec;

pub use config::{RunConfig, CONFIG_KEYS};
pub use holdout::{holdout_evaluate, HoldoutMetrics};
pub use run::{cluster_profiles, run_pipeline, ClusterRun, ClusterSettings, DataQuality, PipelineSummary};

type Order = (usize, usize, usize);

/// Rows of the default table: cluster, `(p,d,q)`, `(P,D,Q)`.
const DEFAULT_ROWS: [(usize, Order, Order); 9] = [
    (0, (1, 1, 1), (1, 1, 1)),
    (1, (1, 1, 1), (0, 1, 1)),
    (2, (0, 1, 1), (0, 1, 1)),
    (3, (1, 1, 1), (1, 1, 1)),
    (4, (0, 1, 1), (0, 1, 1)),
    (5, (0, 1, 1), (0, 1, 1)),
    (6, (1, 1, 1), (0, 0, 0)),
    (7, (1, 1, 1), (1, 1, 1)),
    (8, (0, 1, 1), (0, 1, 1)),
];

pub const DEFAULT_PERIOD: usize = 7;

/// Order used for the county named by `capital_override`.
pub fn capital_spec(period: usize) -> Result<SarimaSpec> {
    SarimaSpec::new((1, 1, 1), (0, 1, 1), period)
}

/// SARIMA orders per cluster id, all sharing one seasonal period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterParamTable {
    entries: BTreeMap<usize, SarimaSpec>,
    period: usize,
}

/// The nine cluster orders the toolkit ships with, at period 7.
pub fn default_param_table() -> ClusterParamTable {
    ClusterParamTable::from_rows(&DEFAULT_ROWS, DEFAULT_PERIOD).expect("default table is valid")
}

impl ClusterParamTable {
    fn from_rows(rows: &[(usize, Order, Order)], period: usize) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for &(cluster, order, seasonal) in rows {
            if entries
                .insert(cluster, SarimaSpec::new(order, seasonal, period)?)
                .is_some()
            {
                return Err(Error::Config(format!("cluster {cluster} listed twice")));
            }
        }
        Ok(Self { entries, period })
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, cluster: usize) -> Result<SarimaSpec> {
        self.entries
            .get(&cluster)
            .copied()
            .ok_or(Error::MissingCluster(cluster))
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, SarimaSpec)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Same orders with a different seasonal period.
    pub fn with_period(&self, period: usize) -> Result<Self> {
        let rows: Vec<_> = self
            .entries()
            .map(|(c, s)| (c, (s.p, s.d, s.q), (s.seasonal_p, s.seasonal_d, s.seasonal_q)))
            .collect();
        Self::from_rows(&rows, period)
    }

    /// Parses the table file format: one `cluster (p,d,q) (P,D,Q)` row per
    /// line, `#` starts a comment.
    pub fn parse(text: &str, period: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("param table line {}: {what}", i + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [cluster, order, seasonal] = fields[..] else {
                return Err(bad("expected `cluster (p,d,q) (P,D,Q)`"));
            };
            let cluster: usize = cluster.parse().map_err(|_| bad("cluster id is not an integer"))?;
            let spec: SarimaSpec = format!("{order}{seasonal}[{period}]")
                .parse()
                .map_err(|e: Error| bad(&e.to_string()))?;
            rows.push((
                cluster,
                (spec.p, spec.d, spec.q),
                (spec.seasonal_p, spec.seasonal_d, spec.seasonal_q),
            ));
        }
        if rows.is_empty() {
            return Err(Error::Config("param table has no rows".into()));
        }
        Self::from_rows(&rows, period)
    }

    pub fn load(path: impl AsRef<Path>, period: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, period)
    }

    /// Renders the table in the format [`ClusterParamTable::parse`] reads.
    pub fn render(&self) -> String {
        let mut out = String::from("# cluster (p,d,q) (P,D,Q)\n");
        for (c, s) in self.entries() {
            out.push_str(&format!("{c} {} {}\n", s.order_string(), s.seasonal_string()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lookups() {
        let t = default_param_table();
        assert_eq!(t.len(), 9);
        assert_eq!(t.get(2).unwrap().to_string(), "(0,1,1)(0,1,1)[7]");
        assert_eq!(t.get(6).unwrap().to_string(), "(1,1,1)(0,0,0)[7]");
        assert!(matches!(t.get(9), Err(Error::MissingCluster(9))));
        assert_eq!(capital_spec(7).unwrap().to_string(), "(1,1,1)(0,1,1)[7]");
    }

    #[test]
    fn render_parse_round_trip() {
        let t = default_param_table();
        assert_eq!(ClusterParamTable::parse(&t.render(), 7).unwrap(), t);
        let custom =
            ClusterParamTable::parse("0 (2,1,0) (0,1,1)  # weekly\n\n1 (0,1,1) (0,0,0)\n", 5).unwrap();
        assert_eq!(custom.get(0).unwrap().to_string(), "(2,1,0)(0,1,1)[5]");
        assert_eq!(t.with_period(14).unwrap().get(1).unwrap().period, 14);
        assert!(ClusterParamTable::parse("0 (1,1,1)\n", 7).is_err());
        assert!(ClusterParamTable::parse("0 (1,1,1) (0,1,1)\n0 (1,1,1) (0,1,1)\n", 7).is_err());
        assert!(ClusterParamTable::parse("# nothing\n", 7).is_err());
    }
}
