//! Exact fractional Gaussian noise by circulant embedding.
//!
//! The covariance matrix of `len` consecutive fGn samples is Toeplitz with
//! first row `gamma_H(0..len)`. It embeds into a circulant matrix of size
//! `m = next_pow2(2 (len - 1))` whose eigenvalues are the DFT of the first
//! row; for fGn the embedding is nonnegative definite across the whole
//! Hurst range, so drawing complex normals in the spectral domain and
//! transforming back yields samples with exactly the target covariance.
//! Rounding the power-of-two padding up only enlarges the embedding and
//! keeps it valid.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::process::fgn_autocov;

/// Eigenvalues of the embedding in `[-EMBEDDING_EIGENVALUE_TOL, 0)` are
/// rounding noise and are clamped to zero; anything more negative aborts.
pub const EMBEDDING_EIGENVALUE_TOL: f64 = 1e-8;

/// Grid step for the Hurst exponent at which spectra are computed. Snapping
/// to a grid makes the cache key exact instead of comparing floats.
pub const HURST_GRID: f64 = 1e-6;

/// Spectra kept per sampler before least-recently-used eviction.
pub const DEFAULT_SPECTRUM_CACHE_CAPACITY: usize = 1024;

/// Snaps `h` onto the grid spectra are computed at. Idempotent, and values
/// already representable on the grid (0.3, 0.7, ...) round-trip unchanged.
pub fn quantize_hurst(h: f64) -> f64 {
    (h * 1e6).round() / 1e6
}

struct CacheEntry {
    spectrum: Arc<Vec<f64>>,
    tick: u64,
}

struct SpectrumCache {
    capacity: usize,
    tick: u64,
    hits: u64,
    misses: u64,
    // key: (embedding size, bits of the quantized Hurst exponent)
    map: HashMap<(usize, u64), CacheEntry>,
}

impl SpectrumCache {
    fn get(&mut self, key: (usize, u64)) -> Option<Arc<Vec<f64>>> {
        self.tick += 1;
        let tick = self.tick;
        match self.map.get_mut(&key) {
            Some(e) => {
                e.tick = tick;
                self.hits += 1;
                Some(Arc::clone(&e.spectrum))
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    fn insert(&mut self, key: (usize, u64), spectrum: Arc<Vec<f64>>) {
        if self.capacity == 0 {
            return;
        }
        if self.map.len() >= self.capacity && !self.map.contains_key(&key) {
            if let Some(oldest) = self
                .map
                .iter()
                .min_by_key(|(_, e)| e.tick)
                .map(|(k, _)| *k)
            {
                self.map.remove(&oldest);
            }
        }
        self.tick += 1;
        let tick = self.tick;
        self.map.insert(key, CacheEntry { spectrum, tick });
    }
}

/// Draws exact fGn samples. Cheap to share across threads: the FFT planner
/// and the spectrum cache sit behind mutexes and are touched only briefly
/// per call.
pub struct FgnSampler {
    planner: Mutex<FftPlanner<f64>>,
    cache: Mutex<SpectrumCache>,
}

impl Default for FgnSampler {
    fn default() -> Self {
        Self::new()
    }
}

impl FgnSampler {
    pub fn new() -> Self {
        Self::with_cache_capacity(DEFAULT_SPECTRUM_CACHE_CAPACITY)
    }

    /// `capacity = 0` disables caching; outputs are bit-identical either
    /// way because spectra are always computed at the quantized exponent.
    pub fn with_cache_capacity(capacity: usize) -> Self {
        FgnSampler {
            planner: Mutex::new(FftPlanner::new()),
            cache: Mutex::new(SpectrumCache {
                capacity,
                tick: 0,
                hits: 0,
                misses: 0,
                map: HashMap::new(),
            }),
        }
    }

    /// (hits, misses) counters of the spectrum cache.
    pub fn cache_stats(&self) -> (u64, u64) {
        let c = self.cache.lock().unwrap();
        (c.hits, c.misses)
    }

    fn plan(&self, m: usize) -> Arc<dyn Fft<f64>> {
        self.planner.lock().unwrap().plan_fft_forward(m)
    }

    /// Eigenvalue vector of the circulant embedding for `len` fGn samples
    /// at Hurst exponent `h` (snapped to the cache grid). All entries are
    /// nonnegative after tolerance clamping.
    pub fn spectrum(&self, len: usize, h: f64) -> Result<Arc<Vec<f64>>> {
        let hq = quantize_hurst(h);
        if !(hq > 0.0 && hq < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hurst out of (0,1) after grid snapping: {h}"
            )));
        }
        if len < 2 {
            return Err(Error::InvalidParameter(format!(
                "spectrum needs len >= 2, got {len}"
            )));
        }
        let m = (2 * (len - 1)).next_power_of_two();
        let key = (m, hq.to_bits());
        if let Some(s) = self.cache.lock().unwrap().get(key) {
            return Ok(s);
        }

        let mut buf = Vec::with_capacity(m);
        for j in 0..m {
            let lag = j.min(m - j) as u64;
            buf.push(Complex64::new(fgn_autocov(hq, lag)?, 0.0));
        }
        self.plan(m).process(&mut buf);

        let mut eig = Vec::with_capacity(m);
        let mut min_eig = f64::INFINITY;
        for c in &buf {
            min_eig = min_eig.min(c.re);
            eig.push(c.re.max(0.0));
        }
        if min_eig < -EMBEDDING_EIGENVALUE_TOL {
            return Err(Error::EmbeddingFailure {
                min_eigenvalue: min_eig,
            });
        }

        let spectrum = Arc::new(eig);
        self.cache.lock().unwrap().insert(key, Arc::clone(&spectrum));
        Ok(spectrum)
    }

    /// `len` fGn samples at exponent `h`, unit spacing, unit variance.
    ///
    /// Consumes a fixed number of draws from `rng` for a given `(h, len)`,
    /// so identically seeded streams reproduce samples exactly.
    pub fn sample(&self, h: f64, len: usize, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        if len == 1 {
            // A single sample is standard normal for every H.
            let hq = quantize_hurst(h);
            if !(hq > 0.0 && hq < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "hurst out of (0,1) after grid snapping: {h}"
                )));
            }
            return Ok(vec![rng.sample(StandardNormal)]);
        }

        let spectrum = self.spectrum(len, h)?;
        let m = spectrum.len();
        let half = m / 2;
        let mf = m as f64;

        // Spectral-domain normals with conjugate symmetry. Real entries at
        // frequencies 0 and m/2 carry variance lambda/m, paired entries
        // lambda/(2m) per real and imaginary part.
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        let z0: f64 = rng.sample(StandardNormal);
        w[0] = Complex64::new((spectrum[0] / mf).sqrt() * z0, 0.0);
        let zh: f64 = rng.sample(StandardNormal);
        w[half] = Complex64::new((spectrum[half] / mf).sqrt() * zh, 0.0);
        for k in 1..half {
            let s = (spectrum[k] / (2.0 * mf)).sqrt();
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            w[k] = Complex64::new(s * a, s * b);
            w[m - k] = Complex64::new(s * a, -s * b);
        }

        self.plan(m).process(&mut w);
        Ok(w[..len].iter().map(|c| c.re).collect())
    }
}
