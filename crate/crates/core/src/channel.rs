//! NOST channel model: channel law `Q(y|x,s')`, output-driven state evolution
//! `Q(s|y)`, the output-averaged channel, Shannon strategies and connectivity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for every probability table.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Upper limit on `|X|^|S|` for strategy enumeration.
pub const MAX_STRATEGIES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub x_size: usize,
    pub y_size: usize,
    pub s_size: usize,
}

impl Alphabets {
    pub fn new(x_size: usize, y_size: usize, s_size: usize) -> Result<Self> {
        for (name, size) in [("X", x_size), ("Y", y_size), ("S", s_size)] {
            if size == 0 {
                return Err(Error::EmptyAlphabet { name });
            }
        }
        Ok(Self {
            x_size,
            y_size,
            s_size,
        })
    }

    /// `|X|^|S|`, or [`Error::StrategyOverflow`] past [`MAX_STRATEGIES`].
    pub fn strategy_count(&self) -> Result<usize> {
        let overflow = Error::StrategyOverflow {
            x_size: self.x_size,
            s_size: self.s_size,
        };
        let exp = u32::try_from(self.s_size).map_err(|_| overflow)?;
        match self.x_size.checked_pow(exp) {
            Some(n) if n <= MAX_STRATEGIES => Ok(n),
            _ => Err(Error::StrategyOverflow {
                x_size: self.x_size,
                s_size: self.s_size,
            }),
        }
    }
}

/// Raw channel tables as read from or written to a channel file.
///
/// Nothing is checked at construction; [`validate_channel`] reports every
/// problem and [`NostChannel::try_from`] only accepts valid tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTables {
    pub x_size: usize,
    pub y_size: usize,
    pub s_size: usize,
    /// Indexed `[s'][x][y]`.
    pub q_y_given_x_sprime: Vec<Vec<Vec<f64>>>,
    /// Indexed `[y][s]`.
    pub q_s_given_y: Vec<Vec<f64>>,
}

impl ChannelTables {
    /// Rescales every row to sum to one. Rows with a nonpositive sum are left
    /// untouched so that validation still flags them.
    pub fn normalize(&mut self) {
        let rows = self
            .q_y_given_x_sprime
            .iter_mut()
            .flatten()
            .chain(self.q_s_given_y.iter_mut());
        for row in rows {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 && sum.is_finite() {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension {
        table: &'static str,
        index: Vec<usize>,
        expected: usize,
        found: usize,
    },
    NonFinite {
        table: &'static str,
        index: Vec<usize>,
    },
    Negative {
        table: &'static str,
        index: Vec<usize>,
        value: f64,
    },
    RowSum {
        table: &'static str,
        row: Vec<usize>,
        sum: f64,
    },
    EmptyAlphabet {
        name: &'static str,
    },
}

fn fmt_index(index: &[usize]) -> String {
    index.iter().map(|i| format!("[{i}]")).collect()
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension {
                table,
                index,
                expected,
                found,
            } => write!(
                f,
                "{table}{}: expected {expected} entries, found {found}",
                fmt_index(index)
            ),
            Violation::NonFinite { table, index } => {
                write!(f, "{table}{}: entry is not finite", fmt_index(index))
            }
            Violation::Negative {
                table,
                index,
                value,
            } => write!(f, "{table}{}: negative entry {value}", fmt_index(index)),
            Violation::RowSum { table, row, sum } => write!(
                f,
                "{table}{}: row sums to {sum:.15} (tolerance {ROW_SUM_TOL:e})",
                fmt_index(row)
            ),
            Violation::EmptyAlphabet { name } => write!(f, "{name}: alphabet size is 0"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn check_row(table: &'static str, row_index: Vec<usize>, row: &[f64], out: &mut Vec<Violation>) {
    let mut bad = false;
    for (k, &p) in row.iter().enumerate() {
        let mut index = row_index.clone();
        index.push(k);
        if !p.is_finite() {
            out.push(Violation::NonFinite { table, index });
            bad = true;
        } else if p < 0.0 {
            out.push(Violation::Negative {
                table,
                index,
                value: p,
            });
            bad = true;
        }
    }
    if !bad {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            out.push(Violation::RowSum {
                table,
                row: row_index,
                sum,
            });
        }
    }
}

/// Lists every dimension, finiteness, sign and row-sum problem in `tables`.
pub fn validate_channel(tables: &ChannelTables) -> ValidationReport {
    const QY: &str = "q_y_given_x_sprime";
    const QS: &str = "q_s_given_y";
    let mut out = Vec::new();
    for (name, size) in [
        ("X", tables.x_size),
        ("Y", tables.y_size),
        ("S", tables.s_size),
    ] {
        if size == 0 {
            out.push(Violation::EmptyAlphabet { name });
        }
    }

    let dim = |table, index: Vec<usize>, expected, found| Violation::Dimension {
        table,
        index,
        expected,
        found,
    };

    if tables.q_y_given_x_sprime.len() != tables.s_size {
        out.push(dim(QY, vec![], tables.s_size, tables.q_y_given_x_sprime.len()));
    }
    for (s, per_x) in tables.q_y_given_x_sprime.iter().enumerate() {
        if per_x.len() != tables.x_size {
            out.push(dim(QY, vec![s], tables.x_size, per_x.len()));
        }
        for (x, row) in per_x.iter().enumerate() {
            if row.len() != tables.y_size {
                out.push(dim(QY, vec![s, x], tables.y_size, row.len()));
            } else {
                check_row(QY, vec![s, x], row, &mut out);
            }
        }
    }

    if tables.q_s_given_y.len() != tables.y_size {
        out.push(dim(QS, vec![], tables.y_size, tables.q_s_given_y.len()));
    }
    for (y, row) in tables.q_s_given_y.iter().enumerate() {
        if row.len() != tables.s_size {
            out.push(dim(QS, vec![y], tables.s_size, row.len()));
        } else {
            check_row(QS, vec![y], row, &mut out);
        }
    }
    ValidationReport { violations: out }
}

/// A validated NOST channel `Q(y|x,s') Q(s|y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NostChannel {
    alphabets: Alphabets,
    /// Flattened `[s'][x][y]`.
    q_y: Vec<f64>,
    /// Flattened `[y][s]`.
    q_s: Vec<f64>,
}

impl TryFrom<ChannelTables> for NostChannel {
    type Error = Error;

    fn try_from(tables: ChannelTables) -> Result<Self> {
        let report = validate_channel(&tables);
        if !report.is_valid() {
            return Err(Error::InvalidChannel(report));
        }
        Ok(Self {
            alphabets: Alphabets::new(tables.x_size, tables.y_size, tables.s_size)?,
            q_y: tables
                .q_y_given_x_sprime
                .into_iter()
                .flatten()
                .flatten()
                .collect(),
            q_s: tables.q_s_given_y.into_iter().flatten().collect(),
        })
    }
}

impl NostChannel {
    pub fn new(
        q_y_given_x_sprime: Vec<Vec<Vec<f64>>>,
        q_s_given_y: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let s_size = q_y_given_x_sprime.len();
        let x_size = q_y_given_x_sprime.first().map_or(0, Vec::len);
        let y_size = q_s_given_y.len();
        Self::try_from(ChannelTables {
            x_size,
            y_size,
            s_size,
            q_y_given_x_sprime,
            q_s_given_y,
        })
    }

    pub fn alphabets(&self) -> Alphabets {
        self.alphabets
    }

    /// `Q(·|x, s')` as a slice over `y`.
    pub fn output_row(&self, s_prev: usize, x: usize) -> &[f64] {
        let a = self.alphabets;
        let start = (s_prev * a.x_size + x) * a.y_size;
        &self.q_y[start..start + a.y_size]
    }

    /// `Q(·|y)` as a slice over `s`.
    pub fn state_row(&self, y: usize) -> &[f64] {
        let s = self.alphabets.s_size;
        &self.q_s[y * s..(y + 1) * s]
    }

    pub fn to_tables(&self) -> ChannelTables {
        let a = self.alphabets;
        ChannelTables {
            x_size: a.x_size,
            y_size: a.y_size,
            s_size: a.s_size,
            q_y_given_x_sprime: (0..a.s_size)
                .map(|s| (0..a.x_size).map(|x| self.output_row(s, x).to_vec()).collect())
                .collect(),
            q_s_given_y: (0..a.y_size).map(|y| self.state_row(y).to_vec()).collect(),
        }
    }
}

/// An output-conditioned channel `kernel[y'][a][y]`, where `a` is either an
/// input letter or a strategy index.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedChannel {
    in_size: usize,
    y_size: usize,
    kernel: Vec<f64>,
}

impl AveragedChannel {
    /// Builds from a nested `[y'][a][y]` table, checking shape and rows.
    pub fn new(kernel: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let y_size = kernel.len();
        let in_size = kernel.first().map_or(0, Vec::len);
        if y_size == 0 || in_size == 0 {
            return Err(Error::DimensionMismatch("empty averaged kernel".into()));
        }
        let mut flat = Vec::with_capacity(y_size * in_size * y_size);
        for (yp, per_a) in kernel.iter().enumerate() {
            if per_a.len() != in_size {
                return Err(Error::DimensionMismatch(format!(
                    "kernel[{yp}] has {} input letters, expected {in_size}",
                    per_a.len()
                )));
            }
            for (a, row) in per_a.iter().enumerate() {
                if row.len() != y_size {
                    return Err(Error::DimensionMismatch(format!(
                        "kernel[{yp}][{a}] has {} outputs, expected {y_size}",
                        row.len()
                    )));
                }
                check_distribution(row, &format!("kernel[{yp}][{a}]"))?;
                flat.extend_from_slice(row);
            }
        }
        Ok(Self {
            in_size,
            y_size,
            kernel: flat,
        })
    }

    pub fn in_size(&self) -> usize {
        self.in_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// `Q(·|a, y')` as a slice over `y`.
    #[inline]
    pub fn row(&self, y_prev: usize, a: usize) -> &[f64] {
        let start = (y_prev * self.in_size + a) * self.y_size;
        &self.kernel[start..start + self.y_size]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.y_size)
            .map(|yp| (0..self.in_size).map(|a| self.row(yp, a).to_vec()).collect())
            .collect()
    }
}

pub(crate) fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {sum:.15}"
        )));
    }
    Ok(())
}

/// `Q(y|x,y') = Σ_{s'} Q(s'|y') Q(y|x,s')`.
pub fn average_channel(c: &NostChannel) -> AveragedChannel {
    let a = c.alphabets;
    let mut kernel = vec![0.0; a.y_size * a.x_size * a.y_size];
    for yp in 0..a.y_size {
        let state = c.state_row(yp);
        for x in 0..a.x_size {
            let out = &mut kernel[(yp * a.x_size + x) * a.y_size..][..a.y_size];
            for (s, &ps) in state.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                for (o, &q) in out.iter_mut().zip(c.output_row(s, x)) {
                    *o += ps * q;
                }
            }
        }
    }
    AveragedChannel {
        in_size: a.x_size,
        y_size: a.y_size,
        kernel,
    }
}

/// A Shannon strategy: the input letter used for each previous state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub map: Vec<usize>,
}

impl Strategy {
    #[inline]
    pub fn input(&self, s_prev: usize) -> usize {
        self.map[s_prev]
    }

    /// The input letter if the map ignores the state.
    pub fn constant_input(&self) -> Option<usize> {
        let first = *self.map.first()?;
        self.map.iter().all(|&x| x == first).then_some(first)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySet {
    x_size: usize,
    s_size: usize,
    strategies: Vec<Strategy>,
}

impl StrategySet {
    /// Builds a set from explicit maps, checking every entry.
    pub fn from_strategies(
        alphabets: Alphabets,
        strategies: Vec<Strategy>,
    ) -> Result<Self> {
        for (u, f) in strategies.iter().enumerate() {
            if f.map.len() != alphabets.s_size || f.map.iter().any(|&x| x >= alphabets.x_size) {
                return Err(Error::DimensionMismatch(format!(
                    "strategy {u} is not a map from {} states to {} inputs",
                    alphabets.s_size, alphabets.x_size
                )));
            }
        }
        Ok(Self {
            x_size: alphabets.x_size,
            s_size: alphabets.s_size,
            strategies,
        })
    }

    /// The `|X|` constant maps `s' ↦ x`, in input order.
    pub fn constant_maps(alphabets: Alphabets) -> Self {
        Self {
            x_size: alphabets.x_size,
            s_size: alphabets.s_size,
            strategies: (0..alphabets.x_size)
                .map(|x| Strategy {
                    map: vec![x; alphabets.s_size],
                })
                .collect(),
        }
    }

    /// Keeps the strategies at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x_size: self.x_size,
            s_size: self.s_size,
            strategies: indices.iter().map(|&u| self.strategies[u].clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn get(&self, u: usize) -> &Strategy {
        &self.strategies[u]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Strategy> {
        self.strategies.iter()
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }
}

/// All `|X|^|S|` strategies in lexicographic order of `(map[0], map[1], …)`.
pub fn enumerate_strategies(a: &Alphabets) -> Result<StrategySet> {
    let count = a.strategy_count()?;
    let strategies = (0..count)
        .map(|mut u| {
            let mut map = vec![0; a.s_size];
            for slot in map.iter_mut().rev() {
                *slot = u % a.x_size;
                u /= a.x_size;
            }
            Strategy { map }
        })
        .collect();
    Ok(StrategySet {
        x_size: a.x_size,
        s_size: a.s_size,
        strategies,
    })
}

/// `Q_f(y|u,y') = Σ_{s'} Q(s'|y') Q(y | f(u,s'), s')`.
pub fn build_strategy_channel(c: &NostChannel, strategies: &StrategySet) -> Result<AveragedChannel> {
    let a = c.alphabets;
    if strategies.x_size != a.x_size || strategies.s_size != a.s_size {
        return Err(Error::DimensionMismatch(format!(
            "strategies map {} states to {} inputs but the channel has |S|={}, |X|={}",
            strategies.s_size, strategies.x_size, a.s_size, a.x_size
        )));
    }
    if strategies.is_empty() {
        return Err(Error::DimensionMismatch("empty strategy set".into()));
    }
    let n_u = strategies.len();
    let mut kernel = vec![0.0; a.y_size * n_u * a.y_size];
    for yp in 0..a.y_size {
        let state = c.state_row(yp);
        for (u, f) in strategies.iter().enumerate() {
            let out = &mut kernel[(yp * n_u + u) * a.y_size..][..a.y_size];
            for (s, &ps) in state.iter().enumerate() {
                if ps == 0.0 {
                    continue;
                }
                for (o, &q) in out.iter_mut().zip(c.output_row(s, f.input(s))) {
                    *o += ps * q;
                }
            }
        }
    }
    Ok(AveragedChannel {
        in_size: n_u,
        y_size: a.y_size,
        kernel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Connectivity {
    pub connected: bool,
    pub witness_output: Option<usize>,
}

/// Reachability closure of a directed graph given as an adjacency matrix.
pub(crate) fn reachability(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut reach: Vec<Vec<bool>> = adj.to_vec();
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

/// Looks for an output reachable from every initial output, using the edge
/// `y' → y` whenever some input gives it positive probability.
pub fn check_connectivity(av: &AveragedChannel) -> Connectivity {
    let n = av.y_size;
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|yp| {
            (0..n)
                .map(|y| (0..av.in_size).any(|a| av.row(yp, a)[y] > 0.0))
                .collect()
        })
        .collect();
    let reach = reachability(&adj);
    let witness = (0..n).find(|&y| (0..n).all(|y0| reach[y0][y]));
    Connectivity {
        connected: witness.is_some(),
        witness_output: witness,
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { name, value })
    }
}

/// The noisy-POST(α, η) channel on binary alphabets.
///
/// Output law (ZS model): when `x = s'` the output equals the input. Otherwise
/// with `s' = 0, x = 1` the output is 0 with probability α, and with
/// `s' = 1, x = 0` the output is 1 with probability α. State evolution
/// (Z model): `y = 0` forces `s = 0`; `y = 1` gives `s = 1` with probability
/// `1 − η` and `s = 0` with probability η.
pub fn make_noisy_post(alpha: f64, eta: f64) -> Result<NostChannel> {
    check_unit("alpha", alpha)?;
    check_unit("eta", eta)?;
    let q_y = vec![
        // s' = 0: Z topology
        vec![vec![1.0, 0.0], vec![alpha, 1.0 - alpha]],
        // s' = 1: S topology
        vec![vec![1.0 - alpha, alpha], vec![0.0, 1.0]],
    ];
    let q_s = vec![vec![1.0, 0.0], vec![eta, 1.0 - eta]];
    NostChannel::new(q_y, q_s)
}

/// A channel whose state is drawn from `q_s` regardless of the output.
pub fn make_iid_state_channel(q_s: &[f64], q_y: Vec<Vec<Vec<f64>>>) -> Result<NostChannel> {
    check_distribution(q_s, "q_s")?;
    if q_y.len() != q_s.len() {
        return Err(Error::DimensionMismatch(format!(
            "q_y has {} states but q_s has {}",
            q_y.len(),
            q_s.len()
        )));
    }
    let y_size = q_y
        .first()
        .and_then(|t| t.first())
        .map_or(0, Vec::len);
    NostChannel::new(q_y, vec![q_s.to_vec(); y_size])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy_post_tables() -> ChannelTables {
        ChannelTables {
            x_size: 2,
            y_size: 2,
            s_size: 2,
            q_y_given_x_sprime: vec![
                vec![vec![1.0, 0.0], vec![0.5, 0.5]],
                vec![vec![0.5, 0.5], vec![0.0, 1.0]],
            ],
            q_s_given_y: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
        }
    }

    #[test]
    fn hand_built_noisy_post_is_valid_and_matches_generator() {
        let tables = noisy_post_tables();
        assert!(validate_channel(&tables).is_valid());
        let c = NostChannel::try_from(tables).unwrap();
        assert_eq!(c, make_noisy_post(0.5, 0.5).unwrap());
    }

    #[test]
    fn short_row_sum_is_one_violation() {
        let mut tables = noisy_post_tables();
        tables.q_s_given_y[1] = vec![0.5, 0.499];
        let report = validate_channel(&tables);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(
            report.violations[0],
            Violation::RowSum { table: "q_s_given_y", .. }
        ));
    }

    #[test]
    fn negative_entry_is_one_violation() {
        let mut tables = noisy_post_tables();
        tables.q_y_given_x_sprime[0][1] = vec![1.1, -0.1];
        let report = validate_channel(&tables);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::Negative { .. }));
    }

    #[test]
    fn wrong_dimensions_are_reported() {
        let mut tables = noisy_post_tables();
        tables.q_y_given_x_sprime[1].pop();
        tables.q_s_given_y.push(vec![1.0, 0.0]);
        let report = validate_channel(&tables);
        assert_eq!(report.violations.len(), 2);
        assert!(report
            .violations
            .iter()
            .all(|v| matches!(v, Violation::Dimension { .. })));
    }

    #[test]
    fn normalize_only_touches_positive_rows() {
        let mut tables = noisy_post_tables();
        tables.q_s_given_y[1] = vec![2.0, 2.0];
        tables.normalize();
        assert_eq!(tables.q_s_given_y[1], vec![0.5, 0.5]);
        assert!(validate_channel(&tables).is_valid());
    }

    #[test]
    fn state_equals_output_gives_state_channel_rows() {
        let c = make_noisy_post(0.3, 0.0).unwrap();
        let av = average_channel(&c);
        for yp in 0..2 {
            for x in 0..2 {
                assert_eq!(av.row(yp, x), c.output_row(yp, x));
            }
        }
    }

    #[test]
    fn iid_state_kernel_is_output_independent() {
        let q_y = vec![
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.6, 0.4], vec![0.3, 0.7]],
        ];
        let c = make_iid_state_channel(&[0.25, 0.75], q_y.clone()).unwrap();
        let av = average_channel(&c);
        for x in 0..2 {
            assert_eq!(av.row(0, x), av.row(1, x));
        }
        let degenerate = make_iid_state_channel(&[0.0, 1.0], q_y.clone()).unwrap();
        let av = average_channel(&degenerate);
        assert_eq!(av.row(0, 1), q_y[1][1].as_slice());
    }

    #[test]
    fn state_independent_law_averages_to_itself() {
        let bsc = vec![vec![0.89, 0.11], vec![0.11, 0.89]];
        let c = make_iid_state_channel(&[0.4, 0.6], vec![bsc.clone(), bsc.clone()]).unwrap();
        let av = average_channel(&c);
        for yp in 0..2 {
            for x in 0..2 {
                for (a, b) in av.row(yp, x).iter().zip(&bsc[x]) {
                    assert!((a - b).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn noisy_post_averaged_entry() {
        let av = average_channel(&make_noisy_post(0.5, 0.5).unwrap());
        // η·Q(0|0,0) + (1−η)·Q(0|0,1) = 0.5 + 0.25
        assert!((av.row(1, 0)[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn binary_strategies_match_table_order() {
        let set = enumerate_strategies(&Alphabets::new(2, 2, 2).unwrap()).unwrap();
        let maps: Vec<_> = set.iter().map(|f| f.map.clone()).collect();
        assert_eq!(maps, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn single_state_strategies_are_constant_maps() {
        let set = enumerate_strategies(&Alphabets::new(3, 2, 1).unwrap()).unwrap();
        assert_eq!(set.len(), 3);
        for (x, f) in set.iter().enumerate() {
            assert_eq!(f.constant_input(), Some(x));
        }
    }

    #[test]
    fn ternary_input_binary_state_enumeration() {
        let set = enumerate_strategies(&Alphabets::new(3, 2, 2).unwrap()).unwrap();
        assert_eq!(set.len(), 9);
        assert_eq!(set.get(0).map, vec![0, 0]);
        assert_eq!(set.get(8).map, vec![2, 2]);
    }

    #[test]
    fn strategy_overflow_is_rejected() {
        let a = Alphabets::new(2, 2, 21).unwrap();
        assert!(matches!(
            enumerate_strategies(&a),
            Err(Error::StrategyOverflow { .. })
        ));
        assert_eq!(Alphabets::new(2, 2, 20).unwrap().strategy_count().unwrap(), 1 << 20);
        assert!(Alphabets::new(usize::MAX, 1, 2).unwrap().strategy_count().is_err());
    }

    #[test]
    fn constant_strategies_reproduce_averaged_channel() {
        let c = make_noisy_post(0.3, 0.4).unwrap();
        let av = average_channel(&c);
        let sv = build_strategy_channel(&c, &StrategySet::constant_maps(c.alphabets())).unwrap();
        assert_eq!(av, sv);
    }

    #[test]
    fn strategy_channel_row_for_u1() {
        let c = make_noisy_post(0.5, 0.5).unwrap();
        let set = enumerate_strategies(&c.alphabets()).unwrap();
        let sv = build_strategy_channel(&c, &set).unwrap();
        // y'=1: s'=0 w.p. η=0.5 → x=f(u1,0)=0 → y=0; s'=1 w.p. 0.5 → x=1=s' → y=1.
        let row = sv.row(1, 1);
        assert!((row[0] - 0.5).abs() < 1e-15);
        assert!((row[1] - 0.5).abs() < 1e-15);
        // u2 at y'=1: s'=0 → x=1 → y=(0.5,0.5); s'=1 → x=0 → y=(0.5,0.5).
        assert_eq!(sv.row(1, 2), &[0.5, 0.5]);
    }

    #[test]
    fn strategy_alphabet_mismatch() {
        let c = make_noisy_post(0.5, 0.5).unwrap();
        let other = enumerate_strategies(&Alphabets::new(3, 2, 2).unwrap()).unwrap();
        assert!(matches!(
            build_strategy_channel(&c, &other),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn post_is_connected() {
        for alpha in [0.1, 0.5, 0.9] {
            let av = average_channel(&make_noisy_post(alpha, 0.0).unwrap());
            assert!(check_connectivity(&av).connected);
        }
    }

    #[test]
    fn block_diagonal_kernel_is_not_connected() {
        let av = AveragedChannel::new(vec![
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        ])
        .unwrap();
        let c = check_connectivity(&av);
        assert!(!c.connected);
        assert_eq!(c.witness_output, None);
    }

    #[test]
    fn single_output_is_connected() {
        let av = AveragedChannel::new(vec![vec![vec![1.0], vec![1.0]]]).unwrap();
        assert_eq!(
            check_connectivity(&av),
            Connectivity {
                connected: true,
                witness_output: Some(0)
            }
        );
    }

    #[test]
    fn noisy_post_parameter_checks() {
        assert!(make_noisy_post(1.2, 0.0).is_err());
        assert!(make_noisy_post(0.5, -0.1).is_err());
        let degenerate = make_noisy_post(0.5, 1.0).unwrap();
        assert_eq!(degenerate.state_row(1), &[1.0, 0.0]);
    }
}
