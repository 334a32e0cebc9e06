use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis, Zip};

use crate::weights::WeightGraph;

/// Directed difference operator `D ∈ R^{|E|×n}`: row `l` has `+1` at `i` and
/// `-1` at `j` for edge `l = (i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMatrix {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl DifferenceMatrix {
    pub fn from_graph(graph: &WeightGraph) -> Self {
        DifferenceMatrix {
            n: graph.n,
            pairs: graph.edges.iter().map(|e| (e.i, e.j)).collect(),
        }
    }

    pub fn from_pairs(n: usize, pairs: Vec<(usize, usize)>) -> Self {
        DifferenceMatrix { n, pairs }
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// `D A` for an `n × c` matrix `A`.
    pub fn apply(&self, a: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.pairs.len(), a.ncols()));
        self.apply_into(a, out.view_mut());
        out
    }

    pub fn apply_into(&self, a: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        for (mut row, &(i, j)) in out.axis_iter_mut(Axis(0)).zip(&self.pairs) {
            Zip::from(&mut row)
                .and(a.row(i))
                .and(a.row(j))
                .for_each(|o, &x, &y| *o = x - y);
        }
    }

    /// `Dᵀ B` for an `|E| × c` matrix `B`.
    pub fn apply_transpose(&self, b: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.n, b.ncols()));
        self.apply_transpose_into(b, out.view_mut());
        out
    }

    pub fn apply_transpose_into(&self, b: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        out.fill(0.0);
        for (row, &(i, j)) in b.axis_iter(Axis(0)).zip(&self.pairs) {
            Zip::from(out.row_mut(i)).and(&row).for_each(|o, &v| *o += v);
            Zip::from(out.row_mut(j)).and(&row).for_each(|o, &v| *o -= v);
        }
    }

    /// Dense `|E| × n` form.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.pairs.len(), self.n));
        for (l, &(i, j)) in self.pairs.iter().enumerate() {
            d[[l, i]] = 1.0;
            d[[l, j]] = -1.0;
        }
        d
    }

    /// Unweighted graph Laplacian `DᵀD`.
    pub fn laplacian(&self) -> Array2<f64> {
        let mut l = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.pairs {
            l[[i, i]] += 1.0;
            l[[j, j]] += 1.0;
            l[[i, j]] -= 1.0;
            l[[j, i]] -= 1.0;
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Edge;
    use ndarray::array;

    #[test]
    fn single_edge() {
        let g = WeightGraph::new(2, vec![Edge { i: 0, j: 1, w: 1.0 }]).unwrap();
        let d = DifferenceMatrix::from_graph(&g);
        assert_eq!(d.to_dense(), array![[1.0, -1.0]]);
        let same = array![[2.0, 3.0], [2.0, 3.0]];
        assert_eq!(d.apply(same.view()), array![[0.0, 0.0]]);
    }

    #[test]
    fn path_laplacian_by_hand() {
        let d = DifferenceMatrix::from_pairs(4, vec![(0, 1), (1, 2), (2, 3)]);
        let dense = d.to_dense();
        let expected = array![
            [1.0, -1.0, 0.0, 0.0],
            [-1.0, 2.0, -1.0, 0.0],
            [0.0, -1.0, 2.0, -1.0],
            [0.0, 0.0, -1.0, 1.0]
        ];
        assert_eq!(dense.t().dot(&dense), expected);
        assert_eq!(d.laplacian(), expected);
    }

    #[test]
    fn transpose_matches_dense() {
        let d = DifferenceMatrix::from_pairs(3, vec![(0, 2), (1, 2)]);
        let b = array![[1.0, -2.0], [0.5, 4.0]];
        assert_eq!(d.apply_transpose(b.view()), d.to_dense().t().dot(&b));
        let a = array![[1.0, 2.0], [3.0, 5.0], [-1.0, 0.0]];
        assert_eq!(d.apply(a.view()), d.to_dense().dot(&a));
    }
}
