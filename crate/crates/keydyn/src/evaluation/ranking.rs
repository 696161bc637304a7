//! Rank-based comparison of update methods.
//!
//! Each method is ranked per criterion (lower value = better = rank 1, ties
//! share the average of their positions), the five criterion ranks are
//! summed, and methods are ordered by that sum. A second ordering drops the
//! EER column, whose threshold can be incompatible with the operational
//! double threshold.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::METRIC_NAMES;

/// One method's row in the rank table.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub method: String,
    /// Per-criterion average ranks, in [`METRIC_NAMES`] order.
    pub criterion_ranks: [f64; 5],
    pub rank_sum: f64,
    pub rank_sum_without_eer: f64,
    /// 1-based position when ordering by (rank_sum, rank_sum_without_eer, name).
    pub final_rank: usize,
    /// 1-based position when ordering by (rank_sum_without_eer, rank_sum, name).
    pub final_rank_without_eer: usize,
}

/// Rank table sorted by `final_rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
}

// Ascending ranks with tie-averaging: tied values share the mean of the
// positions they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average rank.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Build the rank table from session-averaged criterion values
/// (fmr, fnmr, eer, iusr, gumr) per method. Lower is better on every
/// criterion; all five must be present for every method.
pub fn rank_methods(criteria: &BTreeMap<String, [Option<f64>; 5]>) -> Result<RankTable> {
    if criteria.len() < 2 {
        return Err(Error::Contract(format!(
            "ranking needs at least two methods, got {}",
            criteria.len()
        )));
    }
    let methods: Vec<&String> = criteria.keys().collect();
    let mut columns = [const { Vec::new() }; 5];
    for (name, values) in criteria {
        for (m, value) in values.iter().enumerate() {
            let value = value.ok_or_else(|| {
                Error::Contract(format!(
                    "method '{name}' is missing criterion '{}'",
                    METRIC_NAMES[m]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Contract(format!(
                    "method '{name}' has a non-finite '{}'",
                    METRIC_NAMES[m]
                )));
            }
            columns[m].push(value);
        }
    }

    let column_ranks: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();
    let mut rows: Vec<RankRow> = methods
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let criterion_ranks = [
                column_ranks[0][i],
                column_ranks[1][i],
                column_ranks[2][i],
                column_ranks[3][i],
                column_ranks[4][i],
            ];
            let rank_sum: f64 = criterion_ranks.iter().sum();
            let rank_sum_without_eer = rank_sum - criterion_ranks[2];
            RankRow {
                method: (*name).clone(),
                criterion_ranks,
                rank_sum,
                rank_sum_without_eer,
                final_rank: 0,
                final_rank_without_eer: 0,
            }
        })
        .collect();

    let mut by_sum: Vec<usize> = (0..rows.len()).collect();
    by_sum.sort_by(|&a, &b| {
        rows[a]
            .rank_sum
            .total_cmp(&rows[b].rank_sum)
            .then(rows[a].rank_sum_without_eer.total_cmp(&rows[b].rank_sum_without_eer))
            .then(rows[a].method.cmp(&rows[b].method))
    });
    for (position, &idx) in by_sum.iter().enumerate() {
        rows[idx].final_rank = position + 1;
    }

    let mut by_sum_no_eer: Vec<usize> = (0..rows.len()).collect();
    by_sum_no_eer.sort_by(|&a, &b| {
        rows[a]
            .rank_sum_without_eer
            .total_cmp(&rows[b].rank_sum_without_eer)
            .then(rows[a].rank_sum.total_cmp(&rows[b].rank_sum))
            .then(rows[a].method.cmp(&rows[b].method))
    });
    for (position, &idx) in by_sum_no_eer.iter().enumerate() {
        rows[idx].final_rank_without_eer = position + 1;
    }

    rows.sort_by_key(|row| row.final_rank);
    Ok(RankTable { rows })
}

impl RankTable {
    pub fn row(&self, method: &str) -> Option<&RankRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}
