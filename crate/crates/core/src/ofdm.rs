//! Gray-mapped square QAM, the per-subcarrier link `y = Hx + z`, and a full
//! IDFT / cyclic-prefix / DFT path for checking the per-subcarrier model.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::add_awgn;
use crate::error::{dim_err, Error, Result};
use crate::linalg::ComplexMatrix;
use crate::rng::RngStream;
use crate::scalar::Real;

/// Square `M`-QAM with per-axis Gray coding and unit average energy.
///
/// A label's high half selects the in-phase level and its low half the
/// quadrature level; bit value 0 in the leading position means positive. For
/// 4-QAM: `00 → (+1+j)/√2`, `01 → (+1−j)/√2`, `10 → (−1+j)/√2`, `11 → (−1−j)/√2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation<R> {
    order: usize,
    bits_per_axis: usize,
    /// Normalized PAM coordinates, indexed by Gray label of one axis.
    axis_levels: Vec<R>,
    /// Sorted ascending, for slicing.
    sorted_levels: Vec<(R, u32)>,
    points: Vec<Complex<R>>,
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut b = 0;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

impl<R: Real> Constellation<R> {
    pub fn qam(order: usize) -> Result<Self> {
        let bits = order.trailing_zeros() as usize;
        if order < 4 || !order.is_power_of_two() || !bits.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("only square QAM orders are supported, got {order}")));
        }
        let bits_per_axis = bits / 2;
        let levels = 1usize << bits_per_axis;
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let axis_levels: Vec<R> = (0..levels as u32)
            .map(|label| {
                let idx = gray_to_binary(label) as f64;
                R::lit(((levels as f64 - 1.0) - 2.0 * idx) / norm)
            })
            .collect();
        let mut sorted_levels: Vec<(R, u32)> = axis_levels.iter().enumerate().map(|(l, &v)| (v, l as u32)).collect();
        sorted_levels.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite levels"));
        let points = (0..order as u32)
            .map(|label| {
                Complex::new(
                    axis_levels[(label >> bits_per_axis) as usize],
                    axis_levels[(label & ((1 << bits_per_axis) - 1)) as usize],
                )
            })
            .collect();
        Ok(Self { order, bits_per_axis, axis_levels, sorted_levels, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    /// Points indexed by their bit label.
    pub fn points(&self) -> &[Complex<R>] {
        &self.points
    }

    /// Real coordinates available on either axis, ascending.
    pub fn axis_alphabet(&self) -> Vec<R> {
        self.sorted_levels.iter().map(|&(v, _)| v).collect()
    }

    pub fn average_energy(&self) -> R {
        self.points.iter().map(|p| p.norm_sqr()).sum::<R>() / R::lit(self.order as f64)
    }

    fn slice_axis(&self, v: R) -> (R, u32) {
        // Decision boundaries sit at midpoints between adjacent levels.
        let mut best = self.sorted_levels[0];
        for w in self.sorted_levels.windows(2) {
            if v > (w[0].0 + w[1].0) * R::lit(0.5) {
                best = w[1];
            } else {
                break;
            }
        }
        best
    }

    /// Nearest coordinate on one real axis.
    pub fn slice_coordinate(&self, v: R) -> R {
        self.slice_axis(v).0
    }

    /// Nearest constellation point and its label.
    pub fn slice(&self, s: Complex<R>) -> (Complex<R>, u32) {
        let (re, lre) = self.slice_axis(s.re);
        let (im, lim) = self.slice_axis(s.im);
        (Complex::new(re, im), (lre << self.bits_per_axis) | lim)
    }

    pub fn label_bits(&self, label: u32, out: &mut Vec<u8>) {
        for b in (0..self.bits_per_symbol()).rev() {
            out.push(((label >> b) & 1) as u8);
        }
    }

    pub fn map_label(&self, bits: &[u8]) -> Result<Complex<R>> {
        if bits.len() != self.bits_per_symbol() || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter(format!("malformed symbol bits {bits:?}")));
        }
        let label = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
        Ok(self.points[label as usize])
    }
}

/// Frequency-domain transmit grid for one OFDM symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct TxFrame<R> {
    pub bits: Vec<u8>,
    /// `N_t×N`: column `n` is the vector sent on subcarrier `n`.
    pub symbols: ComplexMatrix<R>,
    /// Per-antenna amplitude scale; equal under EPA.
    pub power_allocation: Vec<R>,
}

impl<R: Real> TxFrame<R> {
    pub fn n_subcarriers(&self) -> usize {
        self.symbols.cols()
    }

    pub fn subcarrier(&self, n: usize) -> Vec<Complex<R>> {
        self.symbols.column(n)
    }
}

/// Maps bits onto an `N_t×N` grid with equal power per antenna.
///
/// Bits are consumed subcarrier-major, then antenna, then most significant
/// label bit first.
pub fn map_bits<R: Real>(constellation: &Constellation<R>, bits: &[u8], n_t: usize) -> Result<TxFrame<R>> {
    let k = constellation.bits_per_symbol();
    if n_t == 0 || bits.is_empty() || !bits.len().is_multiple_of(n_t * k) {
        return Err(Error::InvalidParameter(format!(
            "{} bits do not fill whole subcarriers of {n_t} antennas × {k} bits",
            bits.len()
        )));
    }
    let n = bits.len() / (n_t * k);
    let mut symbols = ComplexMatrix::zeros(n_t, n);
    for (idx, chunk) in bits.chunks(k).enumerate() {
        symbols[(idx % n_t, idx / n_t)] = constellation.map_label(chunk)?;
    }
    Ok(TxFrame { bits: bits.to_vec(), symbols, power_allocation: vec![R::one(); n_t] })
}

/// Hard-decision demapping by nearest-point slicing.
pub fn demap_symbols<R: Real>(symbols: &[Complex<R>], constellation: &Constellation<R>) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * constellation.bits_per_symbol());
    for &s in symbols {
        let (_, label) = constellation.slice(s);
        constellation.label_bits(label, &mut out);
    }
    out
}

/// Operating point: `σ² = 1 / (log₂M · 10^(Eb/N0 / 10))` per complex noise entry.
///
/// `N₀/E_S` handed to the MMSE equalizer equals `σ²` under unit-energy symbols.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub eb_n0_db: f64,
    pub sigma2: f64,
}

impl NoiseSpec {
    /// `eb_n0_db = +∞` gives a noiseless link.
    pub fn from_eb_n0(eb_n0_db: f64, bits_per_symbol: usize) -> Self {
        let sigma2 = 1.0 / (bits_per_symbol as f64 * 10f64.powf(eb_n0_db / 10.0));
        Self { eb_n0_db, sigma2 }
    }

    pub fn n0_over_es(&self) -> f64 {
        self.sigma2
    }
}

/// `y = H x + z` on one subcarrier.
pub fn transmit_subcarrier<R: Real>(
    h: &ComplexMatrix<R>,
    x: &[Complex<R>],
    sigma2: f64,
    rng: &mut RngStream,
) -> Result<Vec<Complex<R>>> {
    let clean = h.matvec(x)?;
    Ok(add_awgn(rng, &clean, sigma2))
}

/// Received per-subcarrier grid after IDFT, CP insertion, multipath convolution,
/// CP removal and DFT. Noiseless.
///
/// `taps[l]` is the `N_r×N_t` channel at delay `l` samples. The transform pair
/// is unitary, so with an adequate prefix the output equals `H[n]·x[n]` with
/// `H[n] = Σ_l taps[l]·e^{−j2πln/N}`.
pub fn time_domain_roundtrip<R: Real>(
    taps: &[ComplexMatrix<R>],
    symbols: &ComplexMatrix<R>,
    cp_len: usize,
) -> Result<ComplexMatrix<R>> {
    if taps.is_empty() {
        return Err(Error::InvalidParameter("empty tap list".into()));
    }
    if cp_len + 1 < taps.len() {
        return Err(Error::CyclicPrefixTooShort { cp_len, n_taps: taps.len() });
    }
    time_domain_roundtrip_unchecked(taps, symbols, cp_len)
}

/// [`time_domain_roundtrip`] without the prefix-length guard, for studying
/// what happens when the prefix is too short.
pub fn time_domain_roundtrip_unchecked<R: Real>(
    taps: &[ComplexMatrix<R>],
    symbols: &ComplexMatrix<R>,
    cp_len: usize,
) -> Result<ComplexMatrix<R>> {
    let (n_r, n_t) =
        taps.first().map(ComplexMatrix::shape).ok_or_else(|| Error::InvalidParameter("empty tap list".into()))?;
    if taps.iter().any(|t| t.shape() != (n_r, n_t)) || symbols.rows() != n_t {
        return dim_err("tap matrices and symbol grid disagree on antenna counts");
    }
    let n = symbols.cols();
    let mut planner = FftPlanner::<R>::new();
    let ifft = planner.plan_fft_inverse(n);
    let fft = planner.plan_fft_forward(n);
    let unit = R::one() / R::lit(n as f64).sqrt();
    let zero = Complex::new(R::zero(), R::zero());

    // Transmit: per antenna, unitary IDFT then cyclic prefix.
    let tx: Vec<Vec<Complex<R>>> = (0..n_t)
        .map(|t| {
            let mut buf = symbols.row(t).to_vec();
            ifft.process(&mut buf);
            buf.iter_mut().for_each(|s| *s *= unit);
            let mut with_cp = buf[n - cp_len..].to_vec();
            with_cp.extend_from_slice(&buf);
            with_cp
        })
        .collect();

    let len = n + cp_len;
    let mut out = ComplexMatrix::zeros(n_r, n);
    for r in 0..n_r {
        // Linear convolution over the block, truncated to the block length.
        let mut rx = vec![zero; len];
        for (t, signal) in tx.iter().enumerate() {
            for (l, tap) in taps.iter().enumerate() {
                let h = tap[(r, t)];
                for k in l..len {
                    rx[k] += h * signal[k - l];
                }
            }
        }
        let mut body = rx[cp_len..].to_vec();
        fft.process(&mut body);
        for (k, v) in body.into_iter().enumerate() {
            out[(r, k)] = v * unit;
        }
    }
    Ok(out)
}
