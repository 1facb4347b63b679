use std::io::{Read, Write};

use rand::Rng;

use super::adam::AdamState;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{derive_rng, Stream};
use crate::transition::{read_f64s, read_u64};

/// Public POI latent factors plus the server's optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    pub(crate) v: DenseMatrix,
    pub(crate) adam: AdamState,
}

fn uniform_factors(len: usize, d: usize, rng: &mut impl Rng) -> Vec<f64> {
    let hi = 1.0 / (d as f64).sqrt();
    (0..len).map(|_| rng.gen::<f64>() * hi).collect()
}

/// POI matrix with entries i.i.d. uniform on `[0, 1/√d]`.
pub fn init_model(n: usize, d: usize, seed: u64) -> Result<LatentModel> {
    if n == 0 || d == 0 {
        return Err(Error::param("n, d", "both must be at least 1"));
    }
    let mut rng = derive_rng(seed, Stream::ModelInit, 0);
    let v = DenseMatrix::from_vec(n, d, uniform_factors(n * d, d, &mut rng))?;
    Ok(LatentModel { adam: AdamState::new(n * d), v })
}

/// A client's initial user vector, same distribution as [`init_model`].
pub fn init_profile(d: usize, seed: u64, user: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, Stream::ProfileInit, user);
    uniform_factors(d, d, &mut rng)
}

impl LatentModel {
    pub fn from_factors(v: DenseMatrix) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::Numerical("latent factors contain non-finite values".into()));
        }
        Ok(Self { adam: AdamState::new(v.rows() * v.cols()), v })
    }

    pub fn n(&self) -> usize {
        self.v.rows()
    }

    pub fn d(&self) -> usize {
        self.v.cols()
    }

    pub fn factors(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn poi(&self, j: usize) -> &[f64] {
        self.v.row(j)
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite()
    }

    /// Little-endian checkpoint: `n`, `d` as u64, the `n*d` factors
    /// row-major as f64, the Adam step count as u64, then the first and
    /// second moments (`n*d` f64 each).
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.d() as u64).to_le_bytes())?;
        for x in self.v.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&self.adam.step.to_le_bytes())?;
        for x in self.adam.first.iter().chain(&self.adam.second) {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let n = read_u64(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        let len = n
            .checked_mul(d)
            .filter(|&l| l > 0 && l <= 1 << 28)
            .ok_or_else(|| Error::Format(format!("implausible shape {n}x{d}")))?;
        let v = DenseMatrix::from_vec(n, d, read_f64s(&mut r, len)?)?;
        let step = read_u64(&mut r)?;
        let first = read_f64s(&mut r, len)?;
        let second = read_f64s(&mut r, len)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
            return Err(Error::Format("trailing bytes after checkpoint".into()));
        }
        Ok(Self { v, adam: AdamState { first, second, step } })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(bytes.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::adam::AdamParams;

    #[test]
    fn init_range_and_determinism() {
        let m = init_model(30, 4, 1).unwrap();
        assert!(m.factors().as_slice().iter().all(|&x| (0.0..=0.5).contains(&x)));
        assert_eq!(m, init_model(30, 4, 1).unwrap());
        assert_ne!(m, init_model(30, 4, 2).unwrap());
        let g = init_model(585, 10, 0).unwrap();
        assert_eq!((g.n(), g.d()), (585, 10));
        assert_eq!(init_profile(4, 1, 3), init_profile(4, 1, 3));
        assert!(init_profile(4, 1, 3).iter().all(|&x| (0.0..=0.5).contains(&x)));
        assert!(init_model(0, 3, 0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut m = init_model(5, 3, 7).unwrap();
        let grad = vec![0.3; 15];
        let mut v = m.v.as_slice().to_vec();
        m.adam.update(&mut v, &grad, &AdamParams::default());
        m.v = DenseMatrix::from_vec(5, 3, v).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (3 + 3 * 15));
        assert_eq!(LatentModel::read_from(buf.as_slice()).unwrap(), m);
        buf.push(0);
        assert!(LatentModel::read_from(buf.as_slice()).is_err());
        assert!(LatentModel::read_from(&buf[..30]).is_err());
    }
}
