//! Cubical complexes on vertex grids and relative Z2 homology of sublevel pairs.
//!
//! A cube belongs to `{f ≤ a}` when every one of its vertices does. The pair
//! `({f ≤ hi}, {f ≤ lo})` has relative chains spanned by the cubes whose largest
//! vertex value lies in `(lo, hi]`.

/// Vertex samples on a rectangular grid, axis 0 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), values.len(), "grid shape and payload differ");
        Grid { shape, values }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.dim());
        let mut acc = 1;
        for &n in &self.shape {
            s.push(acc);
            acc *= n;
        }
        s
    }

    pub fn index_of(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&n| {
                let i = flat % n;
                flat /= n;
                i
            })
            .collect()
    }

    /// Every `step`-th vertex along each axis.
    pub fn subsample(&self, step: usize) -> Grid {
        let shape: Vec<usize> = self.shape.iter().map(|&n| (n - 1) / step + 1).collect();
        let sub = Grid { shape: shape.clone(), values: vec![0.0; shape.iter().product()] };
        let values = (0..sub.values.len())
            .map(|flat| {
                let idx: Vec<usize> = sub.multi_index(flat).iter().map(|i| i * step).collect();
                self.values[self.index_of(&idx)]
            })
            .collect();
        Grid { shape, values }
    }

    /// Whether `idx` lies on the boundary of the grid box.
    pub fn on_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.shape).any(|(&i, &n)| i == 0 || i + 1 == n)
    }
}

/// Z2 Betti numbers of `({f ≤ hi}, {f ≤ lo})`, indexed by degree `0..=dim`.
pub fn relative_betti(grid: &Grid, hi: f64, lo: f64) -> Vec<usize> {
    let m = grid.dim();
    let strides = grid.strides();
    let masks = 1usize << m;
    let nv = grid.values.len();
    // cell id = vertex * 2^m + mask
    let mut cell_value = vec![f64::NAN; nv * masks];
    let mut valid = vec![false; nv * masks];
    for v in 0..nv {
        let idx = grid.multi_index(v);
        for mask in 0..masks {
            let fits = (0..m).all(|a| mask >> a & 1 == 0 || idx[a] + 1 < grid.shape[a]);
            if !fits {
                continue;
            }
            let id = v * masks + mask;
            valid[id] = true;
            if mask == 0 {
                cell_value[id] = grid.values[v];
            }
        }
    }
    // lower masks first, so both faces along one axis are known
    for mask in 1..masks {
        for v in 0..nv {
            let id = v * masks + mask;
            if valid[id] {
                let a = mask.trailing_zeros() as usize;
                let lower = mask & !(1 << a);
                cell_value[id] = cell_value[v * masks + lower].max(cell_value[(v + strides[a]) * masks + lower]);
            }
        }
    }
    let mut by_dim: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for id in 0..nv * masks {
        if valid[id] && cell_value[id] <= hi && cell_value[id] > lo {
            by_dim[(id % masks).count_ones() as usize].push(id);
        }
    }
    for cells in by_dim.iter_mut() {
        cells.sort_by(|a, b| cell_value[*a].partial_cmp(&cell_value[*b]).unwrap().then(a.cmp(b)));
    }
    let mut position = vec![u32::MAX; nv * masks];
    for cells in &by_dim {
        for (i, &id) in cells.iter().enumerate() {
            position[id] = i as u32;
        }
    }
    // ranks of ∂_k for k = m..1, clearing columns that are known to vanish
    let mut rank = vec![0usize; m + 2];
    let mut cleared: Vec<bool> = Vec::new();
    for k in (1..=m).rev() {
        let cols = &by_dim[k];
        let mut pivots: Vec<u32> = vec![u32::MAX; by_dim[k - 1].len()];
        let mut reduced: Vec<Vec<u32>> = Vec::with_capacity(cols.len());
        let mut r = 0;
        for (ci, &id) in cols.iter().enumerate() {
            if k < m && cleared.get(ci).copied().unwrap_or(false) {
                reduced.push(Vec::new());
                continue;
            }
            let v = id / masks;
            let mask = id % masks;
            let mut col: Vec<u32> = Vec::with_capacity(2 * k);
            for a in 0..m {
                if mask >> a & 1 == 1 {
                    let lower = mask & !(1 << a);
                    for face in [v * masks + lower, (v + strides[a]) * masks + lower] {
                        let p = position[face];
                        if p != u32::MAX && cell_value[face] > lo {
                            col.push(p);
                        }
                    }
                }
            }
            col.sort_unstable();
            while let Some(&low) = col.last() {
                let other = pivots[low as usize];
                if other == u32::MAX {
                    pivots[low as usize] = ci as u32;
                    r += 1;
                    break;
                }
                col = sym_diff(&col, &reduced[other as usize]);
            }
            reduced.push(col);
        }
        rank[k] = r;
        cleared = pivots.iter().map(|&p| p != u32::MAX).collect();
    }
    (0..=m).map(|k| by_dim[k].len() - rank[k] - rank[k + 1]).collect()
}

fn sym_diff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(shape: &[usize], f: impl Fn(&[f64]) -> f64) -> Grid {
        let g = Grid::new(shape.to_vec(), vec![0.0; shape.iter().product()]);
        let values = (0..g.values.len())
            .map(|flat| {
                let x: Vec<f64> = g.multi_index(flat).iter().zip(shape).map(|(&i, &n)| 2.0 * i as f64 / (n - 1) as f64 - 1.0).collect();
                f(&x)
            })
            .collect();
        Grid::new(shape.to_vec(), values)
    }

    #[test]
    fn absolute_homology_of_box_and_annulus() {
        let g = sampled(&[21, 21], |_| 0.0);
        assert_eq!(relative_betti(&g, 1.0, f64::NEG_INFINITY), vec![1, 0, 0]);
        let ring = sampled(&[41, 41], |x| if x[0].hypot(x[1]) < 0.4 { 1.0 } else { 0.0 });
        assert_eq!(relative_betti(&ring, 0.5, f64::NEG_INFINITY), vec![1, 1, 0]);
        let shell = sampled(&[17, 17, 17], |x| if x.iter().map(|v| v * v).sum::<f64>() < 0.3 { 1.0 } else { 0.0 });
        assert_eq!(relative_betti(&shell, 0.5, f64::NEG_INFINITY), vec![1, 0, 1, 0]);
    }

    #[test]
    fn relative_pair_of_a_maximum() {
        let g = sampled(&[33, 33], |x| -(x[0] * x[0] + x[1] * x[1]));
        assert_eq!(relative_betti(&g, 0.0, -0.25), vec![0, 0, 1]);
    }

    #[test]
    fn subsample_keeps_corners() {
        let g = sampled(&[9, 5], |x| x[0] + 10.0 * x[1]);
        let s = g.subsample(2);
        assert_eq!(s.shape, vec![5, 3]);
        assert_eq!(s.values[0], g.values[0]);
        assert_eq!(*s.values.last().unwrap(), *g.values.last().unwrap());
    }
}
