//! Spearman rank correlation between accelerators' per-architecture latency
//! and energy columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{Metric, PerfTable};
use crate::exec::{self, Execution};

/// Average ranks (1 = smallest, ties share the mean of their positions).
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector(pub Vec<f64>);

pub fn ranks(values: &[f64]) -> Result<RankVector> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot rank an empty list".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value at position {i}")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = shared;
        }
        start = end;
    }
    Ok(RankVector(out))
}

/// Mean-centered ranks of one list, reusable across many correlations.
#[derive(Debug, Clone)]
pub struct CenteredRanks {
    centered: Vec<f64>,
    sum_sq: f64,
}

impl CenteredRanks {
    pub fn new(values: &[f64]) -> Result<Self> {
        let RankVector(r) = ranks(values)?;
        let mean = (r.len() + 1) as f64 / 2.0;
        let centered: Vec<f64> = r.iter().map(|x| x - mean).collect();
        let sum_sq = centered.iter().map(|x| x * x).sum();
        Ok(CenteredRanks { centered, sum_sq })
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.sum_sq == 0.0
    }

    /// Pearson correlation of the two rank vectors.
    pub fn correlation(&self, other: &CenteredRanks) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DegenerateInput(format!("length mismatch: {} vs {}", self.len(), other.len())));
        }
        if self.len() < 3 {
            return Err(Error::DegenerateInput(format!("need at least 3 values, got {}", self.len())));
        }
        if self.is_constant() || other.is_constant() {
            return Err(Error::DegenerateInput("constant input has no rank variance".into()));
        }
        if self.centered == other.centered {
            return Ok(1.0);
        }
        let dot: f64 = self.centered.iter().zip(&other.centered).map(|(a, b)| a * b).sum();
        Ok((dot / (self.sum_sq * other.sum_sq).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Spearman's rank correlation with average-rank tie handling.
pub fn srcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DegenerateInput(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    CenteredRanks::new(x)?.correlation(&CenteredRanks::new(y)?)
}

/// Pairwise SRCC between accelerator columns. Entries involving a constant
/// column are holes (`None`) and the column is listed in `holes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrccMatrix {
    pub metric: Metric,
    pub accel_ids: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub holes: Vec<usize>,
}

impl SrccMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }
}

/// Builds the matrix from per-accelerator metric columns, one row per task.
pub fn srcc_matrix_from_columns(
    columns: &[Vec<f64>],
    accel_ids: Vec<String>,
    metric: Metric,
    mode: Execution,
) -> Result<SrccMatrix> {
    if accel_ids.len() != columns.len() {
        return Err(Error::InvalidInput("one id per column is required".into()));
    }
    let n_archs = columns.first().map_or(0, Vec::len);
    if n_archs < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 architectures, got {n_archs}")));
    }
    if columns.iter().any(|c| c.len() != n_archs) {
        return Err(Error::InvalidInput("columns differ in length".into()));
    }
    let ranked = exec::map_slice(mode, columns, |c| CenteredRanks::new(c));
    let ranked = ranked.into_iter().collect::<Result<Vec<_>>>()?;
    let holes: Vec<usize> = (0..ranked.len()).filter(|&i| ranked[i].is_constant()).collect();
    if !holes.is_empty() {
        log::warn!("{metric:?} SRCC: {} constant column(s) left as holes", holes.len());
    }

    let n = ranked.len();
    let upper = exec::map_range(mode, n, |i| {
        (i..n)
            .map(
                |j| if i == j && !ranked[i].is_constant() { Some(1.0) } else { ranked[i].correlation(&ranked[j]).ok() },
            )
            .collect::<Vec<_>>()
    });
    let mut values = vec![vec![None; n]; n];
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            values[i][i + offset] = v;
            values[i + offset][i] = v;
        }
    }
    Ok(SrccMatrix { metric, accel_ids, values, holes })
}

/// SRCC matrix over the accelerators of a performance table.
pub fn srcc_matrix(table: &PerfTable, accel_ids: Vec<String>, metric: Metric, mode: Execution) -> Result<SrccMatrix> {
    use crate::evaluation::CostOracle;
    let columns: Vec<Vec<f64>> = (0..table.num_accels()).map(|h| table.metric_column(h, metric)).collect();
    srcc_matrix_from_columns(&columns, accel_ids, metric, mode)
}

/// Mean off-diagonal SRCC per accelerator; `None` when a row has no valid entry.
pub fn average_srcc(matrix: &SrccMatrix) -> Vec<Option<f64>> {
    (0..matrix.len())
        .map(|i| {
            let vals: Vec<f64> = (0..matrix.len()).filter(|&j| j != i).filter_map(|j| matrix.get(i, j)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

/// Mean SRCC of each column against every other column, without keeping
/// the matrix. Constant columns and rows with no valid entry give `None`.
pub fn average_srcc_from_columns(columns: &[Vec<f64>], mode: Execution) -> Result<Vec<Option<f64>>> {
    let n_archs = columns.first().map_or(0, Vec::len);
    if n_archs < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 architectures, got {n_archs}")));
    }
    if columns.iter().any(|c| c.len() != n_archs) {
        return Err(Error::InvalidInput("columns differ in length".into()));
    }
    let ranked = exec::map_slice(mode, columns, |c| CenteredRanks::new(c));
    let ranked = ranked.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(exec::map_range(mode, ranked.len(), |i| {
        let vals: Vec<f64> =
            (0..ranked.len()).filter(|&j| j != i).filter_map(|j| ranked[i].correlation(&ranked[j]).ok()).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }))
}

/// Empirical CDF of the per-accelerator average SRCC: distinct values in
/// ascending order with the fraction of accelerators at or below each.
pub fn avg_srcc_cdf(matrix: &SrccMatrix) -> Result<Vec<(f64, f64)>> {
    if matrix.len() < 2 {
        return Err(Error::InvalidInput("CDF needs at least 2 accelerators".into()));
    }
    Ok(cdf_of(&average_srcc(matrix)))
}

/// CDF over the defined averages; holes are left out.
pub fn cdf_of(averages: &[Option<f64>]) -> Vec<(f64, f64)> {
    let mut avgs: Vec<f64> = averages.iter().flatten().copied().collect();
    avgs.sort_by(f64::total_cmp);
    let total = avgs.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (i, v) in avgs.iter().enumerate() {
        let frac = (i + 1) as f64 / total;
        match cdf.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => cdf.push((*v, frac)),
        }
    }
    cdf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(ranks(&[10.0, 20.0, 30.0]).unwrap().0, vec![1.0, 2.0, 3.0]);
        assert_eq!(ranks(&[5.0, 5.0, 9.0]).unwrap().0, vec![1.5, 1.5, 3.0]);
        assert_eq!(ranks(&[3.0, 1.0, 2.0]).unwrap().0, vec![3.0, 1.0, 2.0]);
        assert_eq!(ranks(&[7.0, 7.0, 7.0, 7.0]).unwrap().0, vec![2.5; 4]);
        assert!(ranks(&[]).is_err());
        assert!(ranks(&[1.0, f64::NAN]).is_err());
        assert!(ranks(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn srcc_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(srcc(&x, &x).unwrap(), 1.0);
        assert_eq!(srcc(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(srcc(&x, &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap(), 0.8);
    }

    #[test]
    fn srcc_errors() {
        assert!(matches!(srcc(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(srcc(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(srcc(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(Error::DegenerateInput(_))));
        assert!(matches!(srcc(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn matrix_of_monotone_and_reversed_columns() {
        let a = vec![1.0, 5.0, 2.0, 8.0];
        let b: Vec<f64> = a.iter().map(|v| v * v + 3.0).collect();
        let c: Vec<f64> = a.iter().map(|v| -v).collect();
        let m = srcc_matrix_from_columns(&[a, b, c], ids(3), Metric::Latency, Execution::Parallel).unwrap();
        assert_eq!(m.get(0, 1), Some(1.0));
        assert_eq!(m.get(0, 2), Some(-1.0));
        assert_eq!(m.get(2, 0), Some(-1.0));
        assert!((0..3).all(|i| m.get(i, i) == Some(1.0)));
        assert!(m.holes.is_empty());
    }

    #[test]
    fn matrix_matches_pairwise_calls() {
        let cols = vec![vec![3.0, 1.0, 2.0, 9.0, 4.0], vec![1.0, 1.0, 2.0, 7.0, 3.0], vec![5.0, 4.0, 3.0, 2.0, 6.0]];
        let m = srcc_matrix_from_columns(&cols, ids(3), Metric::Energy, Execution::Sequential).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(m.get(i, j), Some(srcc(&cols[i], &cols[j]).unwrap()), "({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn constant_columns_become_holes() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 4.0], vec![3.0, 1.0, 2.0]];
        let m = srcc_matrix_from_columns(&cols, ids(3), Metric::Latency, Execution::Parallel).unwrap();
        assert_eq!(m.holes, vec![1]);
        assert_eq!(m.get(1, 0), None);
        assert_eq!(m.get(1, 1), None);
        assert_eq!(m.get(0, 2), Some(-0.5));
        let avg = average_srcc(&m);
        assert_eq!(avg, vec![Some(-0.5), None, Some(-0.5)]);
        assert_eq!(avg_srcc_cdf(&m).unwrap(), vec![(-0.5, 1.0)]);
    }

    fn matrix(values: Vec<Vec<Option<f64>>>) -> SrccMatrix {
        SrccMatrix { metric: Metric::Latency, accel_ids: ids(values.len()), values, holes: vec![] }
    }

    #[test]
    fn cdf_examples() {
        let ones = matrix(vec![vec![Some(1.0); 4]; 4]);
        assert_eq!(avg_srcc_cdf(&ones).unwrap(), vec![(1.0, 1.0)]);

        let half = matrix(vec![vec![Some(1.0), Some(0.5)], vec![Some(0.5), Some(1.0)]]);
        assert_eq!(avg_srcc_cdf(&half).unwrap(), vec![(0.5, 1.0)]);

        let mixed = matrix(vec![
            vec![Some(1.0), Some(0.2), Some(0.8)],
            vec![Some(0.2), Some(1.0), Some(0.4)],
            vec![Some(0.8), Some(0.4), Some(1.0)],
        ]);
        let cdf = avg_srcc_cdf(&mixed).unwrap();
        assert_eq!(cdf.len(), 3);
        assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert!((cdf[0].0 - 0.3).abs() < 1e-12);

        assert!(avg_srcc_cdf(&matrix(vec![vec![Some(1.0)]])).is_err());
    }

    #[test]
    fn streamed_averages_match_the_matrix() {
        let columns = vec![
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![1.0, 3.0, 2.0, 5.0, 4.0],
            vec![5.0, 4.0, 3.0, 2.0, 1.0],
            vec![2.0, 2.0, 2.0, 2.0, 2.0],
        ];
        let m = srcc_matrix_from_columns(&columns, ids(4), Metric::Latency, Execution::Sequential).unwrap();
        let streamed = average_srcc_from_columns(&columns, Execution::Parallel).unwrap();
        assert_eq!(streamed, average_srcc(&m));
        assert_eq!(streamed[3], None);
        assert_eq!(cdf_of(&streamed), avg_srcc_cdf(&m).unwrap());
    }
}
