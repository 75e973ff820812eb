use nalgebra::DMatrix;

use crate::clre::{Reader, Writer};
use crate::data::{DataMatrix, Grid};
use crate::error::{ClareError, Result};

use super::codec::{read_tensor, Codec, Method, Model};
use super::{check_k, Learner};

/// Column means plus a `T × K` row-major basis with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub column_means: Vec<f64>,
    pub basis: Vec<f64>,
    pub k: usize,
}

impl PcaModel {
    pub fn t(&self) -> usize {
        self.column_means.len()
    }

    /// Column `a` of the basis.
    pub fn component(&self, a: usize) -> Vec<f64> {
        (0..self.t()).map(|i| self.basis[i * self.k + a]).collect()
    }

    pub(crate) fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.k];
        for (i, (xi, mi)) in x.iter().zip(&self.column_means).enumerate() {
            let c = xi - mi;
            let row = &self.basis[i * self.k..(i + 1) * self.k];
            for (za, b) in z.iter_mut().zip(row) {
                *za += b * c;
            }
        }
        z
    }

    pub(crate) fn decode(&self, z: &[f64]) -> Vec<f64> {
        self.column_means
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let row = &self.basis[i * self.k..(i + 1) * self.k];
                m + row.iter().zip(z).map(|(b, za)| b * za).sum::<f64>()
            })
            .collect()
    }

    fn truncate(&self, k: usize) -> PcaModel {
        let basis = self
            .basis
            .chunks_exact(self.k)
            .flat_map(|row| row[..k].iter().copied())
            .collect();
        PcaModel {
            column_means: self.column_means.clone(),
            basis,
            k,
        }
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.tensor(&[self.t()], &self.column_means);
        w.tensor(&[self.t(), self.k], &self.basis);
    }

    pub(crate) fn read(r: &mut Reader<'_>, t: usize, k: usize) -> Result<Self> {
        Ok(PcaModel {
            column_means: read_tensor(r, &[t], "pca means")?,
            basis: read_tensor(r, &[t, k], "pca basis")?,
            k,
        })
    }
}

/// Principal components via the SVD of the column-centered training data.
#[derive(Debug, Clone, Copy, Default)]
pub struct PcaLearner;

impl PcaLearner {
    /// Fit the leading `k` components. Components are ordered by decreasing
    /// singular value and signed so their largest-magnitude entry is
    /// positive.
    pub fn fit_model(&self, train: &DataMatrix, k: usize) -> Result<PcaModel> {
        let (n, t) = (train.n(), train.t());
        check_k(k, self.max_latent_dim(n, train.grid()), "pca")?;

        let mut means = vec![0.0; t];
        for row in train.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let centered = DMatrix::from_fn(n, t, |i, j| train.row(i)[j] - means[j]);
        let directions = principal_directions(&centered, k)?;

        let mut basis = vec![0.0; t * k];
        for (a, dir) in directions.iter().enumerate() {
            let mut pivot = 0;
            for j in 1..t {
                if dir[j].abs() > dir[pivot].abs() {
                    pivot = j;
                }
            }
            let sign = if dir[pivot] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..t {
                basis[j * k + a] = sign * dir[j];
            }
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(ClareError::Numerical("SVD produced non-finite components".into()));
        }
        Ok(PcaModel {
            column_means: means,
            basis,
            k,
        })
    }
}

/// Leading `k` right singular vectors of `centered`, by decreasing
/// singular value, from a symmetric eigendecomposition of the smaller of
/// the Gram and covariance matrices.
fn principal_directions(centered: &DMatrix<f64>, k: usize) -> Result<Vec<Vec<f64>>> {
    let (n, t) = centered.shape();
    let wide = n <= t;
    let gram = if wide {
        centered * centered.transpose()
    } else {
        centered.transpose() * centered
    };
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut candidates = order.iter().map(|&src| {
        let u = eig.eigenvectors.column(src);
        if wide {
            let lambda = eig.eigenvalues[src];
            if lambda <= top * 1e-24 || lambda <= 0.0 {
                None
            } else {
                Some((centered.transpose() * u).iter().map(|v| v / lambda.sqrt()).collect())
            }
        } else {
            Some(u.iter().copied().collect::<Vec<f64>>())
        }
    });
    let mut unit = 0;
    while out.len() < k {
        // Null directions are completed from the standard basis.
        let mut v = match candidates.next().flatten() {
            Some(v) => v,
            None => {
                if unit == t {
                    return Err(ClareError::Numerical("could not complete the PCA basis".into()));
                }
                let mut e = vec![0.0; t];
                e[unit] = 1.0;
                unit += 1;
                e
            }
        };
        for _ in 0..2 {
            for prev in &out {
                let d: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(v.iter().map(|x| x / norm).collect());
        }
    }
    Ok(out)
}

impl Learner for PcaLearner {
    fn method(&self) -> Method {
        Method::Pca
    }

    fn name(&self) -> String {
        "pca".into()
    }

    fn max_latent_dim(&self, n_train: usize, grid: Grid) -> usize {
        n_train.saturating_sub(1).min(grid.len())
    }

    fn fit(&self, train: &DataMatrix, k: usize, _seed: u64) -> Result<Codec> {
        Ok(Codec::new(k, train.grid(), Model::Pca(self.fit_model(train, k)?)))
    }

    fn nested(&self) -> bool {
        true
    }

    fn fit_grid(&self, train: &DataMatrix, ks: &[usize], _seed: u64) -> Result<Vec<Codec>> {
        let Some(&kmax) = ks.iter().max() else {
            return Ok(Vec::new());
        };
        for &k in ks {
            check_k(k, self.max_latent_dim(train.n(), train.grid()), "pca")?;
        }
        let full = self.fit_model(train, kmax)?;
        Ok(ks
            .iter()
            .map(|&k| Codec::new(k, train.grid(), Model::Pca(full.truncate(k))))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn wide_rank_deficient_components_are_eigenvectors() {
        let values = [
            -0.9111915443121976, -0.9968381262676616, 0.5258079792155286, -0.9312884252919562,
            -0.7713101289345841, 0.21986034306517288, -0.6544765775606862, 0.7982214513119841,
            0.22850417822453473, -0.7551433412006983, 0.8267397514438599, 0.9299171048422417,
        ];
        let data = DataMatrix::from_rows(values.to_vec(), 3, Grid::one_d(4).unwrap()).unwrap();
        let model = PcaLearner.fit_model(&data, 2).unwrap();
        let x = DMatrix::from_row_slice(3, 4, &values);
        let mean = x.row_mean();
        let mut c = x.clone();
        for mut r in c.row_iter_mut() {
            r -= &mean;
        }
        let cov = c.transpose() * &c;
        for a in 0..2 {
            let v = DVector::from_vec(model.component(a));
            let cv = &cov * &v;
            let lambda = v.dot(&cv);
            assert!((cv - v * lambda).amax() < 1e-12);
        }
    }
    use crate::loss::press;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn low_rank(n: usize, t: usize, rank: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..n * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..t * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let values = (0..n * t)
            .map(|idx| {
                let (i, j) = (idx / t, idx % t);
                (0..rank).map(|r| s[i * rank + r] * b[j * rank + r]).sum()
            })
            .collect();
        DataMatrix::from_rows(values, n, Grid::one_d(t).unwrap()).unwrap()
    }

    fn max_row_error(codec: &Codec, data: &DataMatrix) -> f64 {
        data.rows()
            .map(|x| press(x, &codec.reconstruct(x).unwrap()).unwrap().sqrt())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rank_two_reconstructs_exactly() {
        let data = low_rank(50, 10, 2, 1);
        let codec = PcaLearner.fit(&data, 2, 0).unwrap();
        assert!(max_row_error(&codec, &data) <= 1e-8);
    }

    #[test]
    fn full_rank_reconstructs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let values = (0..8 * 5).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let data = DataMatrix::from_rows(values, 8, Grid::one_d(5).unwrap()).unwrap();
        let codec = PcaLearner.fit(&data, 5, 0).unwrap();
        for x in data.rows() {
            assert!(press(x, &codec.reconstruct(x).unwrap()).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_nested() {
        let data = low_rank(30, 12, 6, 3);
        let codecs = PcaLearner.fit_grid(&data, &[2, 5], 0).unwrap();
        let single = PcaLearner.fit_model(&data, 2).unwrap();
        let Model::Pca(m5) = codecs[1].model() else { panic!() };
        let Model::Pca(m2) = codecs[0].model() else { panic!() };
        assert_eq!(m2, &single);
        for a in 0..5 {
            for b in 0..5 {
                let dot: f64 = m5.component(a).iter().zip(m5.component(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        for a in 0..2 {
            assert_eq!(m2.component(a), m5.component(a));
        }
    }

    #[test]
    fn k_out_of_range() {
        let data = low_rank(4, 10, 2, 4);
        assert!(PcaLearner.fit(&data, 0, 0).is_err());
        assert!(PcaLearner.fit(&data, 4, 0).is_err());
        assert!(PcaLearner.fit(&data, 3, 0).is_ok());
    }

    #[test]
    fn serialization_round_trip() {
        let data = low_rank(20, 6, 3, 5);
        let codec = PcaLearner.fit(&data, 3, 0).unwrap();
        let back = Codec::from_bytes(&codec.to_bytes().unwrap()).unwrap();
        assert_eq!(back.to_bytes().unwrap(), codec.to_bytes().unwrap());
        assert_eq!(back.reconstruct(data.row(0)).unwrap(), codec.reconstruct(data.row(0)).unwrap());
    }
}
