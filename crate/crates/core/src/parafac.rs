//! Rank-K PARAFAC (CP) tensors.
//!
//! A model over dimensions `n_1 × … × n_M` stores one factor matrix per mode,
//! factor `d` of shape `n_d × K`. Entry `[i_1, …, i_M]` is
//! `Σ_k Π_d F_d[i_d, k]`.
//!
//! Row convention for Khatri-Rao products and unfoldings: the first-listed
//! matrix varies slowest. Consequently row `r` of `matricize(d)` addresses the
//! tensor index whose coordinates other than `d` are the mixed-radix
//! expansion of `r` over the remaining dimensions in ascending order, and
//! column `c` is coordinate `d`. Modes are 0-based.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayD, ArrayView2, Axis, IxDyn};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{checked_product, flatten, unflatten};
use crate::rng::Rng;

/// Largest dense tensor [`ParafacModel::reconstruct`] will build.
pub const DEFAULT_DENSE_LIMIT: usize = 10_000_000;

/// `(Σ_d n_d)·K`: for a value tensor over `D` state/action modes and time,
/// this is `(T + Σ_{d≤D} |D_d|)·K`.
pub fn count_params(dims: &[usize], rank: usize) -> usize {
    dims.iter().sum::<usize>() * rank
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParafacModel {
    dims: Vec<usize>,
    rank: usize,
    factors: Vec<Array2<f64>>,
}

impl ParafacModel {
    pub fn zeros(dims: &[usize], rank: usize) -> Result<Self> {
        validate_dims(dims)?;
        let factors = dims.iter().map(|&n| Array2::zeros((n, rank))).collect();
        Ok(ParafacModel {
            dims: dims.to_vec(),
            rank,
            factors,
        })
    }

    /// I.i.d. `N(0, scale²)` entries.
    pub fn random(dims: &[usize], rank: usize, scale: f64, rng: &mut Rng) -> Result<Self> {
        Self::random_normal(dims, rank, 0.0, scale, rng)
    }

    /// I.i.d. `N(mean, scale²)` entries.
    pub fn random_normal(
        dims: &[usize],
        rank: usize,
        mean: f64,
        scale: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::invalid("init scale", format!("{scale}")));
        }
        if !mean.is_finite() {
            return Err(Error::invalid("init mean", format!("{mean}")));
        }
        let mut model = Self::zeros(dims, rank)?;
        if scale > 0.0 {
            let normal = Normal::new(mean, scale).expect("finite positive scale");
            for f in &mut model.factors {
                f.mapv_inplace(|_| normal.sample(rng));
            }
        } else if mean != 0.0 {
            for f in &mut model.factors {
                f.fill(mean);
            }
        }
        Ok(model)
    }

    /// Uniform entries in `[-1, 1)`, for tests.
    pub fn random_uniform(dims: &[usize], rank: usize, rng: &mut Rng) -> Result<Self> {
        let mut model = Self::zeros(dims, rank)?;
        for f in &mut model.factors {
            f.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        }
        Ok(model)
    }

    pub fn from_factors(factors: Vec<Array2<f64>>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::Shape("a model needs at least one factor".into()));
        };
        let rank = first.ncols();
        if let Some((d, f)) = factors.iter().enumerate().find(|(_, f)| f.ncols() != rank) {
            return Err(Error::Shape(format!(
                "factor {d} has {} columns, factor 0 has {rank}",
                f.ncols()
            )));
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
        validate_dims(&dims)?;
        let model = ParafacModel {
            dims,
            rank,
            factors,
        };
        if !model.is_finite() {
            return Err(Error::invalid("factors", "non-finite entry"));
        }
        Ok(model)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn factor(&self, mode: usize) -> &Array2<f64> {
        &self.factors[mode]
    }

    pub fn factor_mut(&mut self, mode: usize) -> &mut Array2<f64> {
        &mut self.factors[mode]
    }

    pub fn factors(&self) -> &[Array2<f64>] {
        &self.factors
    }

    pub fn count_params(&self) -> usize {
        count_params(&self.dims, self.rank)
    }

    /// Reals actually held by the factor matrices.
    pub fn stored_reals(&self) -> usize {
        self.factors.iter().map(|f| f.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.factors.iter().all(|f| f.iter().all(|x| x.is_finite()))
    }

    fn check_index(&self, idx: &[usize]) -> Result<()> {
        flatten(&self.dims, idx).map(|_| ())
    }

    pub fn eval_entry(&self, idx: &[usize]) -> Result<f64> {
        self.check_index(idx)?;
        Ok(self.eval_unchecked(idx))
    }

    /// Caller guarantees `idx` is in range.
    pub(crate) fn eval_unchecked(&self, idx: &[usize]) -> f64 {
        (0..self.rank)
            .map(|k| {
                self.factors
                    .iter()
                    .zip(idx)
                    .map(|(f, &i)| f[[i, k]])
                    .product::<f64>()
            })
            .sum()
    }

    /// Mode-`mode` unfolding `(⊙_{j≠mode} F_j) F_modeᵀ`, shape
    /// `(Π_{j≠mode} n_j) × n_mode`.
    pub fn matricize(&self, mode: usize) -> Result<Array2<f64>> {
        if mode >= self.n_modes() {
            return Err(Error::Index {
                dim: 0,
                index: mode,
                size: self.n_modes(),
            });
        }
        let others: Vec<ArrayView2<f64>> = self
            .factors
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != mode)
            .map(|(_, f)| f.view())
            .collect();
        let kr = if others.is_empty() {
            Array2::ones((1, self.rank))
        } else {
            khatri_rao(&others)?
        };
        Ok(kr.dot(&self.factors[mode].t()))
    }

    pub fn reconstruct(&self) -> Result<ArrayD<f64>> {
        self.reconstruct_with_limit(DEFAULT_DENSE_LIMIT)
    }

    /// Dense tensor of every entry; refuses (rather than truncating) when the
    /// tensor would exceed `limit` entries.
    pub fn reconstruct_with_limit(&self, limit: usize) -> Result<ArrayD<f64>> {
        let needed = self.dims.iter().map(|&d| d as u128).product::<u128>();
        if needed > limit as u128 {
            return Err(Error::Capacity {
                what: "dense reconstruction",
                needed,
                limit,
            });
        }
        // Unfolding along the last mode lists entries in row-major order of
        // the leading modes, so the full tensor is one reshape away.
        let last = self.n_modes() - 1;
        let mat = self.matricize(last)?;
        let data: Vec<f64> = mat.iter().copied().collect();
        let out = ArrayD::from_shape_vec(IxDyn(&self.dims), data)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Ok(out)
    }

    pub fn save_checkpoint(&self, dir: &Path, seed: u64) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (d, f) in self.factors.iter().enumerate() {
            let mut w = csv::Writer::from_path(dir.join(format!("factor_{d}.csv")))?;
            w.write_record((0..self.rank).map(|k| format!("k{k}")))?;
            for row in f.rows() {
                w.write_record(row.iter().map(|x| crate::experiment::fmt_f64(*x)))?;
            }
            w.flush()?;
        }
        let manifest = CheckpointManifest {
            schema_version: CHECKPOINT_SCHEMA,
            dims: self.dims.clone(),
            rank: self.rank,
            seed,
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
        fs::write(dir.join("manifest.toml"), text)?;
        Ok(())
    }

    /// Returns the model and the seed recorded with it.
    pub fn load_checkpoint(dir: &Path) -> Result<(Self, u64)> {
        let text = fs::read_to_string(dir.join("manifest.toml"))?;
        let manifest: CheckpointManifest =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        if manifest.schema_version != CHECKPOINT_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported checkpoint schema {}",
                manifest.schema_version
            )));
        }
        let mut factors = Vec::with_capacity(manifest.dims.len());
        for (d, &n) in manifest.dims.iter().enumerate() {
            let mut r = csv::Reader::from_path(dir.join(format!("factor_{d}.csv")))?;
            let header = r.headers()?.clone();
            let expected: Vec<String> = (0..manifest.rank).map(|k| format!("k{k}")).collect();
            if header.iter().ne(expected.iter().map(String::as_str)) {
                return Err(Error::Config(format!("factor_{d}.csv: bad header")));
            }
            let mut data = Vec::with_capacity(n * manifest.rank);
            for rec in r.records() {
                for field in rec?.iter() {
                    data.push(
                        field
                            .parse::<f64>()
                            .map_err(|e| Error::Config(format!("factor_{d}.csv: {e}")))?,
                    );
                }
            }
            let f = Array2::from_shape_vec((n, manifest.rank), data)
                .map_err(|e| Error::Shape(format!("factor_{d}.csv: {e}")))?;
            factors.push(f);
        }
        let model = Self::from_factors(factors)?;
        if model.dims != manifest.dims {
            return Err(Error::Shape("factor rows disagree with manifest".into()));
        }
        Ok((model, manifest.seed))
    }
}

const CHECKPOINT_SCHEMA: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointManifest {
    schema_version: u32,
    dims: Vec<usize>,
    rank: usize,
    seed: u64,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Shape("a model needs at least one mode".into()));
    }
    if dims.contains(&0) {
        return Err(Error::Shape("mode sizes must be >= 1".into()));
    }
    checked_product(dims).ok_or_else(|| Error::Shape("tensor size overflows".into()))?;
    Ok(())
}

/// Column-wise Kronecker product in the given order, first matrix varying
/// slowest in the row index.
pub fn khatri_rao(mats: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
    let Some(first) = mats.first() else {
        return Err(Error::Shape("Khatri-Rao product of zero matrices".into()));
    };
    let k = first.ncols();
    if let Some((i, m)) = mats.iter().enumerate().find(|(_, m)| m.ncols() != k) {
        return Err(Error::Shape(format!(
            "matrix {i} has {} columns, expected {k}",
            m.ncols()
        )));
    }
    let mut acc = first.to_owned();
    for m in &mats[1..] {
        let rows = acc.nrows() * m.nrows();
        let mut next = Array2::zeros((rows, k));
        for (i, a_row) in acc.axis_iter(Axis(0)).enumerate() {
            for (j, b_row) in m.axis_iter(Axis(0)).enumerate() {
                let mut out = next.row_mut(i * m.nrows() + j);
                for c in 0..k {
                    out[c] = a_row[c] * b_row[c];
                }
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Inverse of [`ParafacModel::matricize`] for a tensor of shape `dims`.
pub fn unmatricize(mat: &Array2<f64>, mode: usize, dims: &[usize]) -> Result<ArrayD<f64>> {
    if mode >= dims.len() {
        return Err(Error::Index {
            dim: 0,
            index: mode,
            size: dims.len(),
        });
    }
    let others: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != mode)
        .map(|(_, &n)| n)
        .collect();
    let rows = checked_product(&others).ok_or_else(|| Error::Shape("overflow".into()))?;
    if mat.dim() != (rows, dims[mode]) {
        return Err(Error::Shape(format!(
            "unfolding is {:?}, expected ({rows}, {})",
            mat.dim(),
            dims[mode]
        )));
    }
    let mut out = ArrayD::zeros(IxDyn(dims));
    let mut idx = vec![0; dims.len()];
    for r in 0..rows {
        let rest = unflatten(&others, r)?;
        let mut it = rest.iter();
        for (j, slot) in idx.iter_mut().enumerate() {
            if j != mode {
                *slot = *it.next().expect("arity");
            }
        }
        for c in 0..dims[mode] {
            idx[mode] = c;
            out[IxDyn(&idx)] = mat[[r, c]];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use ndarray::array;

    fn ones(dims: &[usize], rank: usize) -> ParafacModel {
        let mut m = ParafacModel::zeros(dims, rank).unwrap();
        for d in 0..m.n_modes() {
            m.factor_mut(d).fill(1.0);
        }
        m
    }

    #[test]
    fn normal_init_mean_and_scale() {
        let mut r = rng::stream(1, 0);
        let flat = ParafacModel::random_normal(&[2, 3], 2, 2.0, 0.0, &mut r).unwrap();
        assert!(flat.factors().iter().all(|f| f.iter().all(|&x| x == 2.0)));
        let m = ParafacModel::random_normal(&[2000], 1, 1.0, 0.1, &mut r).unwrap();
        let mean = m.factor(0).mean().unwrap();
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        assert!(ParafacModel::random_normal(&[2], 1, f64::NAN, 0.1, &mut r).is_err());
    }

    #[test]
    fn all_ones_entries() {
        assert_eq!(ones(&[2, 2, 2], 1).eval_entry(&[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(ones(&[2, 2, 2], 2).eval_entry(&[0, 1, 1]).unwrap(), 2.0);
        assert!(ones(&[2, 2, 2], 2).eval_entry(&[0, 2, 1]).is_err());
    }

    #[test]
    fn khatri_rao_hand_example() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[0.0, 1.0], [1.0, 0.0]];
        let kr = khatri_rao(&[a.view(), b.view()]).unwrap();
        assert_eq!(kr, array![[0.0, 2.0], [1.0, 0.0], [0.0, 4.0], [3.0, 0.0]]);
    }

    #[test]
    fn khatri_rao_single_and_shape() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(khatri_rao(&[a.view()]).unwrap(), a);
        let b = Array2::<f64>::ones((4, 2));
        let c = Array2::<f64>::ones((2, 2));
        assert_eq!(
            khatri_rao(&[a.view(), b.view(), c.view()]).unwrap().nrows(),
            24
        );
        let bad = Array2::<f64>::ones((2, 3));
        assert!(matches!(
            khatri_rao(&[a.view(), bad.view()]),
            Err(Error::Shape(_))
        ));
        assert!(khatri_rao(&[]).is_err());
    }

    #[test]
    fn matricize_hand_example() {
        let m = ParafacModel::from_factors(vec![
            array![[1.0], [2.0]],
            array![[1.0], [1.0]],
            array![[3.0]],
        ])
        .unwrap();
        assert_eq!(m.matricize(2).unwrap(), array![[3.0], [3.0], [6.0], [6.0]]);
    }

    #[test]
    fn matricize_all_ones() {
        let m = ones(&[2, 2, 2], 1);
        for d in 0..3 {
            assert_eq!(m.matricize(d).unwrap(), Array2::<f64>::ones((4, 2)));
        }
        assert!(m.matricize(3).is_err());
    }

    #[test]
    fn reconstruct_scalar() {
        let m =
            ParafacModel::from_factors(vec![array![[2.0]], array![[3.0]], array![[4.0]]]).unwrap();
        let t = m.reconstruct().unwrap();
        assert_eq!(t.shape(), &[1, 1, 1]);
        assert_eq!(t[[0, 0, 0]], 24.0);
    }

    #[test]
    fn negating_a_factor_negates_the_tensor() {
        let mut r = rng::stream(3, 0);
        let m = ParafacModel::random_uniform(&[2, 3, 2], 1, &mut r).unwrap();
        let mut neg = m.clone();
        neg.factor_mut(0).mapv_inplace(|x| -x);
        let a = m.reconstruct().unwrap();
        let b = neg.reconstruct().unwrap();
        assert_eq!(a.mapv(|x| -x), b);
    }

    #[test]
    fn reconstruct_capacity_error() {
        let m = ParafacModel::zeros(&[100, 100, 100], 1).unwrap();
        match m.reconstruct_with_limit(999_999) {
            Err(Error::Capacity { needed, limit, .. }) => {
                assert_eq!(needed, 1_000_000);
                assert_eq!(limit, 999_999);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(m.reconstruct_with_limit(1_000_000).is_ok());
    }

    #[test]
    fn param_count_formula() {
        assert_eq!(count_params(&[5, 5, 4, 5], 8), 152);
        assert_eq!(count_params(&[5, 5, 4, 5], 0), 0);
        assert_eq!(count_params(&[2, 2, 2], 3), 18);
        let m = ParafacModel::zeros(&[5, 5, 4, 5], 8).unwrap();
        assert_eq!(m.count_params(), m.stored_reals());
    }

    #[test]
    fn from_factors_rejects_mismatch() {
        assert!(ParafacModel::from_factors(vec![array![[1.0, 2.0]], array![[1.0]]]).is_err());
        assert!(ParafacModel::from_factors(vec![array![[f64::NAN]]]).is_err());
        assert!(ParafacModel::from_factors(vec![]).is_err());
    }

    #[test]
    fn unmatricize_rejects_wrong_shape() {
        let mat = Array2::<f64>::zeros((3, 2));
        assert!(unmatricize(&mat, 0, &[2, 2, 2]).is_err());
        assert!(unmatricize(&mat, 5, &[2, 2, 2]).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng::stream(11, 0);
        let m = ParafacModel::random(&[3, 2, 4], 3, 0.1, &mut r).unwrap();
        m.save_checkpoint(dir.path(), 11).unwrap();
        let header = std::fs::read_to_string(dir.path().join("factor_1.csv")).unwrap();
        assert!(header.starts_with("k0,k1,k2\n"));
        let (back, seed) = ParafacModel::load_checkpoint(dir.path()).unwrap();
        assert_eq!(seed, 11);
        assert_eq!(back, m);
    }
}
