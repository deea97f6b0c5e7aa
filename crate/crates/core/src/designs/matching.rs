use crate::designs::ImbalanceMetric;
use crate::model::{CovariateMatrix, PairSet};

/// Pairs subjects by covariate similarity.
///
/// With one covariate the subjects are sorted (ties by index) and consecutive
/// subjects are paired. With several, the closest unmatched pair under the
/// Mahalanobis distance is matched repeatedly (greedy, not optimal, matching).
pub fn match_pairs(x: &CovariateMatrix) -> PairSet {
    let n = x.n();
    let pairs = if x.p() == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x.get(a, 0).total_cmp(&x.get(b, 0)).then(a.cmp(&b)));
        order.chunks(2).map(|c| (c[0], c[1])).collect()
    } else {
        greedy_nearest_pairs(x)
    };
    PairSet::new(pairs).expect("a perfect matching over an even count is a partition")
}

fn greedy_nearest_pairs(x: &CovariateMatrix) -> Vec<(usize, usize)> {
    let n = x.n();
    let metric = ImbalanceMetric::new(x);
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    let mut diff = vec![0.0; x.p()];
    for i in 0..n {
        for j in (i + 1)..n {
            for (k, d) in diff.iter_mut().enumerate() {
                *d = metric.row(i)[k] - metric.row(j)[k];
            }
            candidates.push((metric.score_of_sum(&diff), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for (_, i, j) in candidates {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorts_then_pairs_neighbours() {
        let x = CovariateMatrix::from_column(&[3.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(match_pairs(&x).pairs(), &[(1, 2), (0, 3)]);
    }

    #[test]
    fn ties_fall_back_to_index_order() {
        let x = CovariateMatrix::from_column(&[5.0; 6]).unwrap();
        assert_eq!(match_pairs(&x).pairs(), &[(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn multivariate_greedy_pairs_nearest_points() {
        let rows = vec![
            vec![0.0, 0.0],
            vec![10.0, 1.0],
            vec![0.1, 0.2],
            vec![10.2, 0.9],
            vec![5.0, -3.0],
            vec![5.1, -2.9],
        ];
        let x = CovariateMatrix::from_rows(rows).unwrap();
        let mut got = match_pairs(&x).pairs().to_vec();
        got.sort();
        assert_eq!(got, vec![(0, 2), (1, 3), (4, 5)]);
    }
}
