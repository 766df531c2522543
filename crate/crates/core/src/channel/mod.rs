//! Antenna arrays, codebook pilot training and gain estimation, plus the
//! synthetic ground-truth environment that stands in for measured corpora.

mod dataset;
pub(crate) mod env;

pub use dataset::{collect_dataset, ChannelSample, CollectionWindow, Dataset};
pub use env::{distance, Aabb, BeamPattern, EnvironmentModel, LinkState, PathDraw, RegionProfile};

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaConfig {
    pub tx_elements: usize,
    pub rx_elements: usize,
    pub wavelength_m: f64,
    /// Phase advance per element per unit sin(angle); pi is half-wavelength spacing.
    pub element_phase_unit: f64,
}

impl AntennaConfig {
    pub fn new(tx_elements: usize, rx_elements: usize, carrier_hz: f64) -> Self {
        Self {
            tx_elements,
            rx_elements,
            wavelength_m: SPEED_OF_LIGHT / carrier_hz,
            element_phase_unit: PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_elements == 0 || self.rx_elements == 0 {
            return Err(Error::Config("antenna arrays need at least one element".into()));
        }
        if !(self.wavelength_m > 0.0) || !self.element_phase_unit.is_finite() {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        Ok(())
    }
}

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wraps an angle into [0, 2pi).
pub fn wrap_angle(a: f64) -> f64 {
    let r = a % (2.0 * PI);
    if r < 0.0 { r + 2.0 * PI } else { r }
}

pub fn steering_vector(angle: f64, elements: usize, phase_unit: f64) -> Vec<Complex64> {
    let step = phase_unit * angle.sin();
    (0..elements)
        .map(|m| Complex64::from_polar(1.0, m as f64 * step))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aod: f64,
    pub aoa: f64,
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: alloc::vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Column-stacked vectorization.
    pub fn vec(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.push(self.get(r, c));
            }
        }
        out
    }

    /// Accumulates alpha * u v^H.
    pub fn add_outer(&mut self, alpha: Complex64, u: &[Complex64], v: &[Complex64]) {
        for (r, ur) in u.iter().enumerate() {
            let s = alpha * ur;
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (h, vc) in row.iter_mut().zip(v) {
                *h += s * vc.conj();
            }
        }
    }
}

pub fn mimo_channel(paths: &[PathComponent], cfg: &AntennaConfig) -> Result<CMatrix> {
    if paths.is_empty() {
        return Err(contract("mimo_channel needs at least one path"));
    }
    let mut h = CMatrix::zeros(cfg.rx_elements, cfg.tx_elements);
    for p in paths {
        let ar = steering_vector(p.aoa, cfg.rx_elements, cfg.element_phase_unit);
        let at = steering_vector(p.aod, cfg.tx_elements, cfg.element_phase_unit);
        h.add_outer(p.gain, &ar, &at);
    }
    Ok(h)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// q^H H w.
pub fn bilinear(h: &CMatrix, w: &[Complex64], q: &[Complex64]) -> Result<Complex64> {
    check_len(h.cols, w.len())?;
    check_len(h.rows, q.len())?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, qr) in q.iter().enumerate() {
        let row = &h.data[r * h.cols..(r + 1) * h.cols];
        let hw: Complex64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
        acc += qr.conj() * hw;
    }
    Ok(acc)
}

pub fn inner_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn received_pilot(
    h: &CMatrix,
    w: &[Complex64],
    q: &[Complex64],
    power_w: f64,
    noise: &[Complex64],
) -> Result<Complex64> {
    check_len(q.len(), noise.len())?;
    Ok(power_w.sqrt() * bilinear(h, w, q)? + inner_conj(q, noise))
}

/// Factored form sqrt(P) (w^T a_t^*)(q^H a_r).
pub fn beta_coefficient(
    w: &[Complex64],
    q: &[Complex64],
    a_t: &[Complex64],
    a_r: &[Complex64],
    power_w: f64,
) -> Result<Complex64> {
    check_len(w.len(), a_t.len())?;
    check_len(q.len(), a_r.len())?;
    let tx: Complex64 = w.iter().zip(a_t).map(|(x, y)| x * y.conj()).sum();
    Ok(power_w.sqrt() * tx * inner_conj(q, a_r))
}

pub fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Kronecker form sqrt(P) (w^T kron q^H)(a_t^* kron a_r), kept as the reference
/// the factored form is checked against.
pub fn beta_coefficient_kronecker(
    w: &[Complex64],
    q: &[Complex64],
    a_t: &[Complex64],
    a_r: &[Complex64],
    power_w: f64,
) -> Result<Complex64> {
    check_len(w.len(), a_t.len())?;
    check_len(q.len(), a_r.len())?;
    let qh: Vec<Complex64> = q.iter().map(|z| z.conj()).collect();
    let at_conj: Vec<Complex64> = a_t.iter().map(|z| z.conj()).collect();
    let left = kron(w, &qh);
    let right = kron(&at_conj, a_r);
    Ok(power_w.sqrt() * left.iter().zip(&right).map(|(x, y)| x * y).sum::<Complex64>())
}

pub fn estimate_gain(r: Complex64, beta: Complex64) -> Result<Complex64> {
    if beta.norm_sqr() == 0.0 {
        return Err(Error::SingularBeam);
    }
    Ok(r / beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamPair {
    pub aod: f64,
    pub aoa: f64,
    pub w: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

/// Ordered beam pairs; condition index k is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub entries: Vec<BeamPair>,
}

impl Codebook {
    /// Grid of `n_aod x n_aoa` pairs uniform in direction cosine over
    /// [-max_sin, max_sin]. Index runs AoD-major.
    pub fn grid(cfg: &AntennaConfig, n_aod: usize, n_aoa: usize, max_sin: f64) -> Result<Self> {
        cfg.validate()?;
        if n_aod == 0 || n_aoa == 0 || !(0.0..=1.0).contains(&max_sin) {
            return Err(Error::Config("codebook grid needs positive sizes and max_sin in [0, 1]".into()));
        }
        let axis = |n: usize| -> Vec<f64> {
            if n == 1 {
                return alloc::vec![0.0];
            }
            (0..n).map(|i| -max_sin + 2.0 * max_sin * i as f64 / (n - 1) as f64).collect()
        };
        let mut entries = Vec::with_capacity(n_aod * n_aoa);
        for &st in &axis(n_aod) {
            for &sr in &axis(n_aoa) {
                let aod = wrap_angle(st.asin());
                let aoa = wrap_angle(sr.asin());
                entries.push(BeamPair {
                    aod,
                    aoa,
                    w: steering_vector(aod, cfg.tx_elements, cfg.element_phase_unit),
                    q: steering_vector(aoa, cfg.rx_elements, cfg.element_phase_unit),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pair(&self, k: usize) -> Result<&BeamPair> {
        if k == 0 || k > self.entries.len() {
            return Err(contract(alloc::format!("condition index {k} outside [1, {}]", self.entries.len())));
        }
        Ok(&self.entries[k - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, rng_for};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn steering_examples() {
        assert!(steering_vector(0.0, 4, PI).iter().all(|z| *z == c(1.0, 0.0)));
        let v = steering_vector(PI / 2.0, 2, PI);
        assert!(close(v[0], c(1.0, 0.0), 1e-15));
        assert!(close(v[1], c(-1.0, 0.0), 1e-15));
        let a = steering_vector(0.3, 8, PI);
        let b = steering_vector(-0.3, 8, PI);
        for (x, y) in a.iter().zip(&b) {
            assert!(close(*x, y.conj(), 1e-14));
        }
    }

    fn cfg(m: usize, n: usize) -> AntennaConfig {
        AntennaConfig { tx_elements: m, rx_elements: n, wavelength_m: 0.01, element_phase_unit: PI }
    }

    #[test]
    fn mimo_examples() {
        let one = mimo_channel(&[PathComponent { gain: c(1.0, 0.0), aod: 0.4, aoa: 1.1 }], &cfg(1, 1)).unwrap();
        assert_eq!(one.data, vec![c(1.0, 0.0)]);

        let alpha = c(0.3, -0.7);
        let p = PathComponent { gain: alpha, aod: 0.4, aoa: 5.9 };
        let h = mimo_channel(&[p], &cfg(4, 2)).unwrap();
        assert!((h.frobenius_norm() - alpha.norm() * 8f64.sqrt()).abs() < 1e-12);
        // direct outer product
        let ar = steering_vector(5.9, 2, PI);
        let at = steering_vector(0.4, 4, PI);
        for r in 0..2 {
            for col in 0..4 {
                assert!(close(h.get(r, col), alpha * ar[r] * at[col].conj(), 1e-14));
            }
        }

        let q = PathComponent { gain: -alpha, ..p };
        let z = mimo_channel(&[p, q], &cfg(4, 2)).unwrap();
        assert!(z.frobenius_norm() < 1e-15);
        assert!(mimo_channel(&[], &cfg(4, 2)).is_err());
    }

    #[test]
    fn pilot_examples() {
        let h = CMatrix { rows: 1, cols: 1, data: vec![c(0.2, 0.1)] };
        let one = [c(1.0, 0.0)];
        let r = received_pilot(&h, &one, &one, 4.0, &[c(0.0, 0.0)]).unwrap();
        assert!(close(r, c(0.4, 0.2), 1e-15));

        let zero = CMatrix::zeros(2, 3);
        let n = [c(0.5, 0.5), c(-1.0, 2.0)];
        let q = steering_vector(0.7, 2, PI);
        let w = steering_vector(0.2, 3, PI);
        let r = received_pilot(&zero, &w, &q, 2.0, &n).unwrap();
        assert!(close(r, inner_conj(&q, &n), 1e-15));

        assert!(matches!(
            received_pilot(&zero, &w[..2], &q, 1.0, &n),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn beta_examples() {
        let one = [c(1.0, 0.0)];
        assert!(close(beta_coefficient(&one, &one, &one, &one, 4.0).unwrap(), c(2.0, 0.0), 1e-15));
        let at = steering_vector(0.9, 16, PI);
        let ar = steering_vector(2.2, 8, PI);
        let b = beta_coefficient(&at, &ar, &at, &ar, 9.0).unwrap();
        assert!(close(b, c(3.0 * 16.0 * 8.0, 0.0), 1e-12));
    }

    #[test]
    fn noiseless_pilot_equals_beta_alpha() {
        let mut rng = rng_for(11, 0, 0);
        for _ in 0..50 {
            let alpha = complex_gaussian(&mut rng, 1.0);
            let p = PathComponent { gain: alpha, aod: 0.3, aoa: 4.0 };
            let conf = cfg(8, 4);
            let h = mimo_channel(&[p], &conf).unwrap();
            let w: Vec<_> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let q: Vec<_> = (0..4).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let r = received_pilot(&h, &w, &q, 2.5, &[c(0.0, 0.0); 4]).unwrap();
            let at = steering_vector(0.3, 8, PI);
            let ar = steering_vector(4.0, 4, PI);
            let beta = beta_coefficient(&w, &q, &at, &ar, 2.5).unwrap();
            assert!(close(r, beta * alpha, 1e-12));
            assert!(close(estimate_gain(r, beta).unwrap(), alpha, 1e-12));
        }
    }

    #[test]
    fn singular_beta() {
        assert_eq!(estimate_gain(c(1.0, 0.0), c(0.0, 0.0)), Err(Error::SingularBeam));
    }

    #[test]
    fn estimator_unbiased_with_predicted_variance() {
        let conf = cfg(8, 4);
        let alpha = c(0.8, -0.3);
        let (aod, aoa) = (0.5, 5.5);
        let h = mimo_channel(&[PathComponent { gain: alpha, aod, aoa }], &conf).unwrap();
        let w = steering_vector(aod, 8, PI);
        let q = steering_vector(aoa, 4, PI);
        let power = 0.01;
        let sigma2 = 0.5;
        let beta = beta_coefficient(&w, &q, &w, &q, power).unwrap();
        let predicted = sigma2 * 4.0 / beta.norm_sqr();
        let mut rng = rng_for(5, 0, 0);
        let n = 10_000;
        let mut sum = c(0.0, 0.0);
        let mut sq = 0.0;
        for _ in 0..n {
            let noise: Vec<_> = (0..4).map(|_| complex_gaussian(&mut rng, sigma2)).collect();
            let est = estimate_gain(received_pilot(&h, &w, &q, power, &noise).unwrap(), beta).unwrap();
            sum += est;
            sq += (est - alpha).norm_sqr();
        }
        let mean = sum / n as f64;
        let stderr = (predicted / 2.0 / n as f64).sqrt();
        assert!((mean.re - alpha.re).abs() < 3.0 * stderr);
        assert!((mean.im - alpha.im).abs() < 3.0 * stderr);
        let var = sq / n as f64;
        assert!((var / predicted - 1.0).abs() < 0.05, "{var} vs {predicted}");
    }

    #[test]
    fn rank_one_single_path() {
        let conf = cfg(64, 16);
        let h = mimo_channel(&[PathComponent { gain: c(1e-5, 3e-6), aod: 0.2, aoa: 6.0 }], &conf).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(h.rows, h.cols, &h.data);
        let sv = m.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(s[1] < 1e-10 * s[0]);
    }

    #[test]
    fn codebook_grid_full_size() {
        let conf = AntennaConfig::new(256, 64, 30e9);
        let cb = Codebook::grid(&conf, 9, 9, 0.8).unwrap();
        assert_eq!(cb.len(), 81);
        assert!(cb.pair(0).is_err() && cb.pair(82).is_err());
        let p = cb.pair(1).unwrap();
        assert_eq!(p.w.len(), 256);
        assert!(p.w.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!((p.aod.sin() + 0.8).abs() < 1e-12);
        // every pair index gives a distinct angle pair
        for i in 0..81 {
            for j in 0..i {
                let (a, b) = (&cb.entries[i], &cb.entries[j]);
                assert!((a.aod - b.aod).abs() + (a.aoa - b.aoa).abs() > 1e-9);
            }
        }
    }

    fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), n)
    }

    proptest! {
        #[test]
        fn kronecker_identity(w in cvec(6), q in cvec(3), hd in cvec(18), at in cvec(6), ar in cvec(3), p in 0.01f64..10.0) {
            let h = CMatrix { rows: 3, cols: 6, data: hd };
            let direct = bilinear(&h, &w, &q).unwrap();
            let qh: Vec<_> = q.iter().map(|z| z.conj()).collect();
            let via_kron: Complex64 = kron(&w, &qh).iter().zip(h.vec()).map(|(a, b)| a * b).sum();
            prop_assert!(close(via_kron, direct, 1e-10));
            let f = beta_coefficient(&w, &q, &at, &ar, p).unwrap();
            let k = beta_coefficient_kronecker(&w, &q, &at, &ar, p).unwrap();
            prop_assert!(close(f, k, 1e-10));
        }
    }
}
