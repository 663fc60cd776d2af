//! Ranking and comparison machinery for sweep outputs: rank tables with
//! deterministic tie-breaks, Spearman rank correlation, top-k overlap, and
//! empirical CCDF extraction.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {required} values, got {got}")]
    TooFewValues { required: usize, got: usize },
    #[error("score vectors differ in length: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("rank correlation is undefined for constant scores")]
    ZeroVariance,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("rank tables cover different corridor sets")]
    MismatchedUniverse,
}

/// Scores keyed by corridor id, strictly sorted by (score desc, id asc).
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub measure: String,
    pub entries: Vec<RankEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub corridor_id: String,
    pub score: f64,
}

impl RankTable {
    pub fn from_scores(
        measure: impl Into<String>,
        scores: impl IntoIterator<Item = (String, f64)>,
    ) -> Self {
        let mut entries: Vec<RankEntry> = scores
            .into_iter()
            .map(|(corridor_id, score)| RankEntry { corridor_id, score })
            .collect();
        entries.sort_by(|l, r| {
            r.score
                .total_cmp(&l.score)
                .then_with(|| l.corridor_id.cmp(&r.corridor_id))
        });
        RankTable {
            measure: measure.into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank per corridor id, in table order.
    pub fn ranks(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.corridor_id.as_str(), i + 1))
    }

    pub fn top_k_ids(&self, k: usize) -> Vec<&str> {
        self.entries
            .iter()
            .take(k)
            .map(|e| e.corridor_id.as_str())
            .collect()
    }
}

/// Spearman rank correlation: Pearson correlation of average-ranked values.
/// The two slices are paired by position.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewValues {
            required: 2,
            got: x.len(),
        });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

/// Average ranks (1-based); tied values all receive the mean of the ranks
/// they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0f64; values.len()];
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j are a tie group
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Fraction of corridors shared by the two tables' top-k sets. `k` is
/// clamped to the universe size; `effective_k` records what was used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopkOverlap {
    pub requested_k: usize,
    pub effective_k: usize,
    pub fraction: f64,
}

pub fn topk_overlap(a: &RankTable, b: &RankTable, k: usize) -> Result<TopkOverlap, StatsError> {
    if k == 0 {
        return Err(StatsError::InvalidK);
    }
    if a.len() != b.len() {
        return Err(StatsError::MismatchedUniverse);
    }
    let mut ids_a: Vec<&str> = a.entries.iter().map(|e| e.corridor_id.as_str()).collect();
    let mut ids_b: Vec<&str> = b.entries.iter().map(|e| e.corridor_id.as_str()).collect();
    ids_a.sort_unstable();
    ids_b.sort_unstable();
    if ids_a != ids_b {
        return Err(StatsError::MismatchedUniverse);
    }

    let effective_k = k.min(a.len());
    let mut top_a = a.top_k_ids(effective_k);
    let mut top_b = b.top_k_ids(effective_k);
    top_a.sort_unstable();
    top_b.sort_unstable();
    let mut shared = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < top_a.len() && j < top_b.len() {
        match top_a[i].cmp(top_b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(TopkOverlap {
        requested_k: k,
        effective_k,
        fraction: shared as f64 / effective_k as f64,
    })
}

/// One point of the complementary cumulative distribution: the fraction of
/// scores greater than or equal to `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Sorted distinct values with their empirical `P(X >= value)`. The first
/// point always has fraction 1.
pub fn ccdf_points(scores: &[f64]) -> Result<Vec<CcdfPoint>, StatsError> {
    if scores.is_empty() {
        return Err(StatsError::TooFewValues {
            required: 1,
            got: 0,
        });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let mut points = Vec::new();
    let mut i = 0usize;
    while i < n {
        let value = sorted[i];
        // everything from i onward is >= value
        points.push(CcdfPoint {
            value,
            fraction: (n - i) as f64 / n as f64,
        });
        while i < n && sorted[i] == value {
            i += 1;
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_identical_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y_rev = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(spearman_rho(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman_rho(&x, &y_rev).unwrap(), -1.0);
    }

    #[test]
    fn spearman_hand_case() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        let rho = spearman_rho(&x, &y).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_rejects_degenerate_input() {
        assert!(spearman_rho(&[1.0], &[1.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0], &[1.0]).is_err());
        assert!(matches!(
            spearman_rho(&[1.0, 1.0], &[1.0, 2.0]),
            Err(StatsError::ZeroVariance)
        ));
    }

    #[test]
    fn spearman_ties_use_average_ranks() {
        // x has a tie; ranks (1.5, 1.5, 3); y ranks (1, 2, 3)
        let x = [5.0, 5.0, 9.0];
        let y = [1.0, 2.0, 3.0];
        let rho = spearman_rho(&x, &y).unwrap();
        let expect = 0.5 * 3.0f64.sqrt(); // hand Pearson over the rank vectors
        assert!((rho - expect).abs() < 1e-12);
    }

    #[test]
    fn rank_table_orders_by_score_then_id() {
        let table = RankTable::from_scores(
            "acis",
            vec![
                ("b".to_string(), 10.0),
                ("a".to_string(), 10.0),
                ("c".to_string(), 25.0),
            ],
        );
        let ids: Vec<&str> = table.entries.iter().map(|e| e.corridor_id.as_str()).collect();
        assert_eq!(ids, vec!["c", "a", "b"]);
    }

    #[test]
    fn topk_overlap_cases() {
        let scores = |v: &[(&str, f64)]| {
            RankTable::from_scores("m", v.iter().map(|(s, x)| (s.to_string(), *x)))
        };
        let a = scores(&[("a", 6.0), ("b", 5.0), ("c", 4.0), ("d", 3.0), ("e", 2.0), ("f", 1.0)]);
        assert_eq!(topk_overlap(&a, &a, 3).unwrap().fraction, 1.0);

        let b = scores(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0), ("e", 5.0), ("f", 6.0)]);
        assert_eq!(topk_overlap(&a, &b, 3).unwrap().fraction, 0.0);

        // shares exactly one of the top 3 (c)
        let c = scores(&[("a", 1.0), ("b", 2.0), ("c", 6.0), ("d", 5.0), ("e", 4.0), ("f", 3.0)]);
        let got = topk_overlap(&a, &c, 3).unwrap();
        assert!((got.fraction - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn topk_clamps_to_universe() {
        let a = RankTable::from_scores("m", vec![("a".to_string(), 2.0), ("b".to_string(), 1.0)]);
        let got = topk_overlap(&a, &a, 100).unwrap();
        assert_eq!(got.requested_k, 100);
        assert_eq!(got.effective_k, 2);
        assert_eq!(got.fraction, 1.0);
        assert!(matches!(topk_overlap(&a, &a, 0), Err(StatsError::InvalidK)));
    }

    #[test]
    fn ccdf_single_and_counting_cases() {
        let single = ccdf_points(&[5.0]).unwrap();
        assert_eq!(single, vec![CcdfPoint { value: 5.0, fraction: 1.0 }]);

        let got = ccdf_points(&[1.0, 1.0, 2.0, 4.0]).unwrap();
        let want = vec![
            CcdfPoint { value: 1.0, fraction: 1.0 },
            CcdfPoint { value: 2.0, fraction: 0.5 },
            CcdfPoint { value: 4.0, fraction: 0.25 },
        ];
        assert_eq!(got, want);

        assert!(ccdf_points(&[]).is_err());
    }
}
