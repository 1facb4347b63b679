//! Private collection of transition patterns.
//!
//! Each client encodes one sampled transition as a one-hot string of `n²`
//! bits (all zeros when it has no transition) and perturbs every bit with
//! optimized randomized response at its full transition budget. The server
//! sums the reports per bit and debiases the counts into the raw POI–POI
//! matrix, which is then squashed into `(1, 2)` with a shifted sigmoid.

use std::io::{Read, Write};

use rand::RngCore;

use crate::dataset::{PoiId, Transition};
use crate::error::{Error, Result};
use crate::ldp::RrParams;
use crate::matrix::DenseMatrix;

/// Dense reports above this many bits are refused.
pub const MAX_REPORT_BITS: usize = 10_000_000;

/// Bit position of `src -> dst` in a report: `src * n + dst`.
pub fn encode_transition(t: Transition, n: usize) -> Result<usize> {
    for poi in [t.src, t.dst] {
        if poi >= n {
            return Err(Error::Domain { poi, n });
        }
    }
    Ok(t.src * n + t.dst)
}

fn check_report_size(n: usize) -> Result<usize> {
    n.checked_mul(n)
        .filter(|&bits| bits <= MAX_REPORT_BITS)
        .ok_or_else(|| Error::param("n", format!("n² exceeds {MAX_REPORT_BITS} bits per report")))
}

/// A client's perturbed `n²`-bit report, packed 64 bits per word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedBitString {
    len: usize,
    words: Vec<u64>,
}

impl PerturbedBitString {
    fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            s.words[i / 64] |= 1 << (i % 64);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    wi * 64 + b
                })
            })
        })
    }
}

/// Client side: one-hot encode `transition` (or nothing) and perturb every
/// bit independently with the full `epsilon`.
pub fn client_report<R: RngCore + ?Sized>(
    transition: Option<Transition>,
    n: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<PerturbedBitString> {
    let rr = RrParams::new(epsilon)?;
    client_report_with(transition, n, &rr, rng)
}

pub(crate) fn client_report_with<R: RngCore + ?Sized>(
    transition: Option<Transition>,
    n: usize,
    rr: &RrParams,
    rng: &mut R,
) -> Result<PerturbedBitString> {
    let bits = check_report_size(n)?;
    let hot = transition.map(|t| encode_transition(t, n)).transpose()?;
    let mut out = PerturbedBitString::zeros(bits);
    for i in 0..bits {
        if rr.perturb_bit(hot == Some(i), rng) {
            out.words[i / 64] |= 1 << (i % 64);
        }
    }
    Ok(out)
}

/// Running per-bit tally of reports.
#[derive(Debug, Clone)]
pub struct TransitionAggregator {
    n: usize,
    ones: Vec<u64>,
    reports: u64,
}

impl TransitionAggregator {
    pub fn new(n: usize) -> Result<Self> {
        let bits = check_report_size(n)?;
        Ok(Self { n, ones: vec![0; bits], reports: 0 })
    }

    pub fn add(&mut self, report: &PerturbedBitString) -> Result<()> {
        if report.len() != self.ones.len() {
            return Err(Error::Protocol(format!(
                "report has {} bits, expected {}",
                report.len(),
                self.ones.len()
            )));
        }
        for i in report.iter_ones() {
            self.ones[i] += 1;
        }
        self.reports += 1;
        Ok(())
    }

    /// Adds an unperturbed transition. Only the non-private diagnostic path
    /// uses this; the resulting tallies must be finished with
    /// [`finish_exact`](Self::finish_exact).
    pub(crate) fn add_exact(&mut self, transition: Option<Transition>) -> Result<()> {
        if let Some(t) = transition {
            self.ones[encode_transition(t, self.n)?] += 1;
        }
        self.reports += 1;
        Ok(())
    }

    /// Folds another partial tally over the same domain into this one.
    pub fn merge(&mut self, other: &TransitionAggregator) -> Result<()> {
        if other.n != self.n {
            return Err(Error::Protocol(format!("cannot merge tallies over {} and {} POIs", self.n, other.n)));
        }
        for (a, b) in self.ones.iter_mut().zip(&other.ones) {
            *a += b;
        }
        self.reports += other.reports;
        Ok(())
    }

    pub fn reports(&self) -> u64 {
        self.reports
    }

    /// Debiased frequency estimate of every transition.
    pub fn finish(&self, epsilon: f64) -> Result<TransitionMatrix> {
        let rr = RrParams::new(epsilon)?;
        if self.reports == 0 {
            return Err(Error::Protocol("no reports to aggregate".into()));
        }
        let raw = self
            .ones
            .iter()
            .map(|&c| rr.estimate_count(c, self.reports))
            .collect::<Result<Vec<_>>>()?;
        Ok(TransitionMatrix { raw: DenseMatrix::from_vec(self.n, self.n, raw)? })
    }

    pub(crate) fn finish_exact(&self) -> TransitionMatrix {
        let raw = self.ones.iter().map(|&c| c as f64).collect();
        TransitionMatrix { raw: DenseMatrix::from_vec(self.n, self.n, raw).expect("square tally") }
    }
}

/// Server side: aggregate a batch of reports into the raw estimate.
pub fn aggregate(reports: &[PerturbedBitString], epsilon: f64) -> Result<TransitionMatrix> {
    let first = reports.first().ok_or_else(|| Error::Protocol("no reports to aggregate".into()))?;
    let n = (first.len() as f64).sqrt().round() as usize;
    if n * n != first.len() {
        return Err(Error::Protocol(format!("report length {} is not a square", first.len())));
    }
    let mut agg = TransitionAggregator::new(n)?;
    for r in reports {
        agg.add(r)?;
    }
    agg.finish(epsilon)
}

/// `1 + sigmoid(x)`, strictly inside `(1, 2)` for finite `x` of moderate size.
pub fn shifted_sigmoid(x: f64) -> f64 {
    1.0 + 1.0 / (1.0 + (-x).exp())
}

/// Estimated POI–POI transition frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    raw: DenseMatrix,
}

impl TransitionMatrix {
    pub fn from_raw(raw: DenseMatrix) -> Result<Self> {
        if raw.rows() != raw.cols() {
            return Err(Error::InvalidInput("transition matrix must be square".into()));
        }
        Ok(Self { raw })
    }

    pub fn n(&self) -> usize {
        self.raw.rows()
    }

    pub fn raw(&self) -> &DenseMatrix {
        &self.raw
    }

    pub fn get(&self, src: PoiId, dst: PoiId) -> f64 {
        self.raw.get(src, dst)
    }

    /// Elementwise `1 + sigmoid(raw / scale)`.
    pub fn normalized(&self, scale: f64) -> DenseMatrix {
        self.raw.map(|x| shifted_sigmoid(x / scale))
    }

    /// Little-endian dump: `n` as u64, then `n²` f64 values row-major.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        for x in self.raw.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let n = read_u64(&mut r)? as usize;
        check_report_size(n).map_err(|_| Error::Format(format!("implausible n = {n}")))?;
        let data = read_f64s(&mut r, n * n)?;
        Ok(Self { raw: DenseMatrix::from_vec(n, n, data)? })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut r = bytes.as_slice();
        let t = Self::read_from(&mut r)?;
        if !r.is_empty() {
            return Err(Error::Format("trailing bytes after transition matrix".into()));
        }
        Ok(t)
    }
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, Stream};

    #[test]
    fn encoding_indices() {
        let t = |src, dst| Transition { src, dst };
        assert_eq!(encode_transition(t(0, 0), 10).unwrap(), 0);
        assert_eq!(encode_transition(t(1, 3), 10).unwrap(), 13);
        assert_eq!(encode_transition(t(9, 9), 10).unwrap(), 99);
        assert!(matches!(encode_transition(t(10, 0), 10), Err(Error::Domain { poi: 10, n: 10 })));
    }

    #[test]
    fn near_noiseless_report() {
        let mut rng = derive_rng(0, Stream::Transition, 0);
        let r = client_report(Some(Transition { src: 0, dst: 1 }), 2, 20.0, &mut rng).unwrap();
        // p = 1/2 even at large ε, so only the zero bits are near-certain.
        assert!(!r.get(0) && !r.get(2) && !r.get(3));
        let none = client_report(None, 2, 20.0, &mut rng).unwrap();
        assert_eq!(none.count_ones(), 0);
    }

    #[test]
    fn bit_frequencies_match_p_and_q() {
        let reps = 100_000;
        let mut ones = [0usize; 4];
        let mut rng = derive_rng(4, Stream::Transition, 0);
        for _ in 0..reps {
            let r = client_report(Some(Transition { src: 0, dst: 1 }), 2, 1.0, &mut rng).unwrap();
            for (i, o) in ones.iter_mut().enumerate() {
                *o += r.get(i) as usize;
            }
        }
        let f: Vec<f64> = ones.iter().map(|&o| o as f64 / reps as f64).collect();
        assert!((f[1] - 0.5).abs() < 0.01);
        for i in [0, 2, 3] {
            assert!((f[i] - 0.268_941).abs() < 0.01, "{f:?}");
        }
    }

    #[test]
    fn length_mismatch_is_protocol_error() {
        let a = PerturbedBitString::from_bits(&[false; 4]);
        let b = PerturbedBitString::from_bits(&[false; 9]);
        assert!(matches!(aggregate(&[a, b], 1.0), Err(Error::Protocol(_))));
        assert!(matches!(aggregate(&[], 1.0), Err(Error::Protocol(_))));
    }

    #[test]
    fn memory_guard() {
        assert!(TransitionAggregator::new(3163).is_err());
        assert_eq!(check_report_size(3162).unwrap(), 3162 * 3162);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(shifted_sigmoid(0.0), 1.5);
        assert!((shifted_sigmoid(800.0) - 2.0).abs() < 1e-15);
        assert!((shifted_sigmoid(-800.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn iter_ones_matches_get() {
        let bits: Vec<bool> = (0..150).map(|i| i % 7 == 0 || i == 149).collect();
        let s = PerturbedBitString::from_bits(&bits);
        let ones: Vec<usize> = s.iter_ones().collect();
        let expected: Vec<usize> = (0..150).filter(|&i| bits[i]).collect();
        assert_eq!(ones, expected);
    }

    #[test]
    fn dump_round_trip() {
        let raw = DenseMatrix::from_rows(&[vec![1.5, -2.0], vec![0.0, 1e9]]).unwrap();
        let m = TransitionMatrix::from_raw(raw).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 8);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        assert_eq!(TransitionMatrix::read_from(buf.as_slice()).unwrap(), m);
        assert!(TransitionMatrix::read_from(&buf[..20]).is_err());
    }
}
