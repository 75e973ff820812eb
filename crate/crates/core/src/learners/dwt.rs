use crate::clre::{Reader, Writer};
use crate::data::{DataMatrix, Grid};
use crate::error::{ClareError, Result};
use crate::wavelet::{la8_filter, SignalTransform, WaveletFilter};

use super::codec::{read_tensor, Codec, Method, Model};
use super::{check_k, Learner};

/// Relative-energy scree of an `n × len` row-major coefficient matrix.
///
/// For row i and coefficient k, the relative energy is the share of the
/// row's total energy carried by every coefficient at least as large in
/// magnitude as coefficient k (k itself and its ties included). The scree
/// is the column mean of that matrix, so small values mark coefficients
/// that matter. Fails on a row with zero total energy.
pub fn relative_energy_scree(coeffs: &[f64], n: usize, len: usize) -> Result<Vec<f64>> {
    scree_and_share(coeffs, n, len).map(|(scree, _)| scree)
}

/// The scree together with each coefficient's mean share of row energy.
fn scree_and_share(coeffs: &[f64], n: usize, len: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    debug_assert_eq!(coeffs.len(), n * len);
    let mut scree = vec![0.0; len];
    let mut share = vec![0.0; len];
    let mut order: Vec<usize> = (0..len).collect();
    let mut rel = vec![0.0; len];
    for (i, row) in coeffs.chunks_exact(len).enumerate() {
        let total: f64 = row.iter().map(|c| c * c).sum();
        if total == 0.0 {
            return Err(ClareError::InvalidData(format!(
                "row {i} has zero total wavelet energy"
            )));
        }
        order.sort_unstable_by(|&a, &b| row[b].abs().total_cmp(&row[a].abs()).then(a.cmp(&b)));
        let mut start = 0;
        let mut cumulative = 0.0;
        while start < len {
            let level = row[order[start]].abs();
            let mut end = start;
            while end < len && row[order[end]].abs() == level {
                cumulative += row[order[end]] * row[order[end]];
                end += 1;
            }
            let share = cumulative / total;
            for &idx in &order[start..end] {
                rel[idx] = share;
            }
            start = end;
        }
        for (s, r) in scree.iter_mut().zip(&rel) {
            *s += r;
        }
        for (e, c) in share.iter_mut().zip(row) {
            *e += c * c / total;
        }
    }
    for (s, e) in scree.iter_mut().zip(&mut share) {
        *s /= n as f64;
        *e /= n as f64;
    }
    Ok((scree, share))
}

/// Coefficient indices sorted by increasing scree. Equal scree values are
/// ordered by decreasing mean energy share, then by index. A coefficient
/// carrying all of a row's energy has relative energy 1, the same as a
/// zero coefficient, so the share is needed to tell them apart.
fn rank_by_scree(scree: &[f64], share: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scree.len()).collect();
    order.sort_by(|&a, &b| {
        scree[a]
            .total_cmp(&scree[b])
            .then(share[b].total_cmp(&share[a]))
            .then(a.cmp(&b))
    });
    order
}

/// A thresholded wavelet codec: keep `keep_set` coefficients, zero the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtModel {
    pub transform: SignalTransform,
    /// Retained coefficient indices, most important first.
    pub keep_set: Vec<usize>,
    pub scree: Vec<f64>,
}

impl DwtModel {
    pub(crate) fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.transform.analyze(x)?;
        Ok(self.keep_set.iter().map(|&i| c[i]).collect())
    }

    pub(crate) fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.transform.coeff_len()];
        for (&i, &v) in self.keep_set.iter().zip(z) {
            c[i] = v;
        }
        self.transform.synthesize(&c)
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        let f = &self.transform.filter;
        w.str(&f.name);
        w.tensor(&[f.len()], &f.lowpass);
        w.u64(self.transform.levels as u64);
        w.u8(u8::from(self.transform.grid.is_two_d()));
        w.tensor(&[self.scree.len()], &self.scree);
        for &i in &self.keep_set {
            w.u64(i as u64);
        }
    }

    pub(crate) fn read(r: &mut Reader<'_>, grid: Grid, k: usize) -> Result<Self> {
        let name = r.str()?;
        let (dims, lowpass) = r.tensor()?;
        if dims.len() != 1 {
            return Err(ClareError::Format("wavelet filter must be rank 1".into()));
        }
        let filter = WaveletFilter::from_lowpass(&name, &lowpass)?;
        let levels = r.usize()?;
        let transform_grid = if r.u8()? == 1 { grid } else { Grid::one_d(grid.len())? };
        let transform = SignalTransform::new(transform_grid, filter, Some(levels))?;
        let scree = read_tensor(r, &[transform.coeff_len()], "dwt scree")?;
        let keep_set = (0..k)
            .map(|_| {
                let i = r.usize()?;
                if i >= scree.len() {
                    return Err(ClareError::Format(format!("keep index {i} out of range")));
                }
                Ok(i)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DwtModel {
            transform,
            keep_set,
            scree,
        })
    }
}

/// Thresholded DWT with the LA8 filter.
///
/// `two_d` selects the separable 2D transform and requires 2D data; the
/// 1D variant treats every observation as a flat signal of length T.
#[derive(Debug, Clone, Default)]
pub struct DwtLearner {
    pub levels: Option<usize>,
    pub two_d: bool,
}

impl DwtLearner {
    fn transform(&self, grid: Grid) -> Result<SignalTransform> {
        let g = if self.two_d {
            if !grid.is_two_d() {
                return Err(ClareError::InvalidArgument(
                    "dwt.2d requires data on a 2D grid".into(),
                ));
            }
            grid
        } else {
            Grid::one_d(grid.len())?
        };
        SignalTransform::new(g, la8_filter(), self.levels)
    }

    /// Transforms every training row; returns the transform, the scree and
    /// the mean energy share of every coefficient.
    pub fn scree(&self, train: &DataMatrix) -> Result<(SignalTransform, Vec<f64>, Vec<f64>)> {
        let transform = self.transform(train.grid())?;
        let len = transform.coeff_len();
        let mut coeffs = Vec::with_capacity(train.n() * len);
        for row in train.rows() {
            coeffs.extend(transform.analyze(row)?);
        }
        let (scree, share) = scree_and_share(&coeffs, train.n(), len).map_err(|e| match e {
            ClareError::InvalidData(_) => {
                let row = coeffs
                    .chunks_exact(len)
                    .position(|r| r.iter().all(|c| *c == 0.0))
                    .unwrap_or(0);
                ClareError::InvalidData(format!(
                    "training row {:?} is identically zero; relative energy is undefined",
                    train.row_ids()[row]
                ))
            }
            other => other,
        })?;
        Ok((transform, scree, share))
    }
}

impl Learner for DwtLearner {
    fn method(&self) -> Method {
        Method::Dwt
    }

    fn name(&self) -> String {
        if self.two_d { "dwt.2d" } else { "dwt" }.into()
    }

    fn max_latent_dim(&self, _n_train: usize, grid: Grid) -> usize {
        self.transform(grid).map(|t| t.coeff_len()).unwrap_or(0)
    }

    fn fit(&self, train: &DataMatrix, k: usize, seed: u64) -> Result<Codec> {
        Ok(self.fit_grid(train, &[k], seed)?.remove(0))
    }

    fn nested(&self) -> bool {
        true
    }

    fn fit_grid(&self, train: &DataMatrix, ks: &[usize], _seed: u64) -> Result<Vec<Codec>> {
        let (transform, scree, share) = self.scree(train)?;
        for &k in ks {
            check_k(k, transform.coeff_len(), "dwt")?;
        }
        let ranked = rank_by_scree(&scree, &share);
        Ok(ks
            .iter()
            .map(|&k| {
                let model = DwtModel {
                    transform: transform.clone(),
                    keep_set: ranked[..k].to_vec(),
                    scree: scree.clone(),
                };
                Codec::new(k, train.grid(), Model::Dwt(model))
            })
            .collect())
    }

    fn config(&self) -> Vec<(String, String)> {
        let levels = self.levels.map_or("auto".to_string(), |l| l.to_string());
        vec![
            ("dwt.filter".into(), "la8".into()),
            ("dwt.levels".into(), levels),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_scree(c: &[f64], n: usize, len: usize) -> Vec<f64> {
        let mut scree = vec![0.0; len];
        for i in 0..n {
            let row = &c[i * len..(i + 1) * len];
            let total: f64 = row.iter().map(|v| v * v).sum();
            for k in 0..len {
                let s: f64 = (0..len)
                    .filter(|&kp| row[kp].abs() >= row[k].abs())
                    .map(|kp| row[kp] * row[kp])
                    .sum();
                scree[k] += s / total;
            }
        }
        scree.iter().map(|s| s / n as f64).collect()
    }

    #[test]
    fn toy_scree_with_ties() {
        let c = [
            3.0, -1.0, 0.0, 2.0, 0.5, -0.5, 0.0, 1.0, //
            0.0, 4.0, -4.0, 1.0, 0.0, 0.0, 2.0, -1.0, //
            1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, 2.0,
        ];
        let fast = relative_energy_scree(&c, 3, 8).unwrap();
        let brute = brute_scree(&c, 3, 8);
        for (a, b) in fast.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        assert!(fast.iter().all(|&s| s > 0.0 && s <= 1.0));
    }

    #[test]
    fn zero_row_is_an_error() {
        let c = [1.0, 2.0, 0.0, 0.0];
        assert!(relative_energy_scree(&c, 2, 2).is_err());
        let data = DataMatrix::from_rows(vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0], 2, Grid::one_d(3).unwrap())
            .unwrap();
        let err = DwtLearner::default().fit(&data, 1, 0).unwrap_err().to_string();
        assert!(err.contains("\"1\""), "{err}");
    }

    #[test]
    fn keep_everything_is_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values = (0..6 * 20).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let data = DataMatrix::from_rows(values, 6, Grid::one_d(20).unwrap()).unwrap();
        let codec = DwtLearner::default().fit(&data, 32, 0).unwrap();
        for x in data.rows() {
            let back = codec.reconstruct(x).unwrap();
            assert!(x.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-9));
        }
    }

    #[test]
    fn single_atom_is_kept() {
        let transform = SignalTransform::new(Grid::one_d(32).unwrap(), la8_filter(), None).unwrap();
        let mut c = vec![0.0; 32];
        c[21] = 2.5;
        let atom = transform.synthesize(&c).unwrap();
        let scaled: Vec<f64> = atom.iter().map(|v| -0.5 * v).collect();
        let values = [atom.clone(), scaled].concat();
        let data = DataMatrix::from_rows(values, 2, Grid::one_d(32).unwrap()).unwrap();
        let codec = DwtLearner::default().fit(&data, 1, 0).unwrap();
        let Model::Dwt(m) = codec.model() else { panic!() };
        assert_eq!(m.keep_set, vec![21]);
        let back = codec.reconstruct(&atom).unwrap();
        assert!(atom.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn keep_set_invariant_to_row_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let values: Vec<f64> = (0..5 * 16).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let data = DataMatrix::from_rows(values.clone(), 5, Grid::one_d(16).unwrap()).unwrap();
        let mut scaled = values;
        for v in &mut scaled[16..32] {
            *v *= 7.5;
        }
        let data2 = DataMatrix::from_rows(scaled, 5, Grid::one_d(16).unwrap()).unwrap();
        let keep = |d: &DataMatrix| {
            let c = DwtLearner::default().fit(d, 6, 0).unwrap();
            let Model::Dwt(m) = c.model() else { panic!() };
            m.keep_set.clone()
        };
        assert_eq!(keep(&data), keep(&data2));
    }

    #[test]
    fn two_d_requires_grid_and_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..3 * 30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let flat = DataMatrix::from_rows(values.clone(), 3, Grid::one_d(30).unwrap()).unwrap();
        let learner = DwtLearner { levels: None, two_d: true };
        assert!(learner.fit(&flat, 3, 0).is_err());
        let img = DataMatrix::from_rows(values, 3, Grid::two_d(5, 6).unwrap()).unwrap();
        let codec = learner.fit(&img, 10, 0).unwrap();
        let back = Codec::from_bytes(&codec.to_bytes().unwrap()).unwrap();
        assert_eq!(back.to_bytes().unwrap(), codec.to_bytes().unwrap());
        assert_eq!(back.reconstruct(img.row(1)).unwrap(), codec.reconstruct(img.row(1)).unwrap());
        assert_eq!(learner.max_latent_dim(3, img.grid()), 64);
    }
}
