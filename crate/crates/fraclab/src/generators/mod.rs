//! Trajectory generators.
//!
//! All generators draw from ChaCha12 streams addressed by
//! `(master seed, trajectory index)`, so a batch is reproducible
//! element-by-element no matter how it is scheduled across threads, and
//! trajectory `i` of a batch equals the single-trajectory call at stream
//! index `i`.

pub mod fgn;
pub mod lfsm;
pub mod stable;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::process::{FbmParams, FouParams, LfsmParams, ProcessParams};
use crate::seed::SeedScheme;
use crate::trajectory::{Trajectory, TrajectoryMeta};

pub use fgn::FgnSampler;
pub use lfsm::LfsmMesh;

/// Integration scheme for the fractional Ornstein-Uhlenbeck process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FouScheme {
    /// Explicit Euler-Maruyama on the Langevin form. Requires
    /// `kappa * dt < 2`.
    #[default]
    EulerMaruyama,
    /// Exponential integrator: exact drift decay per step, noise summed
    /// with the same decay. Unconditionally stable.
    ExponentialEuler,
}

/// How a batch assigns Hurst exponents to its trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HurstSampling {
    /// Every trajectory uses the exponent carried by the parameters.
    #[default]
    Fixed,
    /// Each trajectory draws its own exponent uniformly from (0, 1),
    /// recorded in the trajectory metadata as the regression label.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct BatchRequest {
    pub params: ProcessParams,
    pub n: usize,
    pub dt: f64,
    pub count: u64,
    /// Stream index of the first trajectory; the batch covers
    /// `first_index .. first_index + count`. Lets a consumer stream
    /// disjoint batches off one seed scheme.
    pub first_index: u64,
    pub seeds: SeedScheme,
    pub hurst_sampling: HurstSampling,
    pub fou_scheme: FouScheme,
    pub lfsm_mesh: LfsmMesh,
}

impl BatchRequest {
    pub fn new(params: ProcessParams, n: usize, dt: f64, count: u64, seeds: SeedScheme) -> Self {
        BatchRequest {
            params,
            n,
            dt,
            count,
            first_index: 0,
            seeds,
            hurst_sampling: HurstSampling::Fixed,
            fou_scheme: FouScheme::default(),
            lfsm_mesh: LfsmMesh::default(),
        }
    }
}

fn check_grid(n: usize, dt: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n out of [2,inf): {n}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt out of (0,inf): {dt}")));
    }
    Ok(())
}

/// Process generator with shared FFT plans and fGn spectrum cache.
pub struct Generator {
    fgn: FgnSampler,
    conv_planner: Mutex<FftPlanner<f64>>,
}

impl Default for Generator {
    fn default() -> Self {
        Self::new()
    }
}

impl Generator {
    pub fn new() -> Self {
        Self::with_cache_capacity(fgn::DEFAULT_SPECTRUM_CACHE_CAPACITY)
    }

    pub fn with_cache_capacity(capacity: usize) -> Self {
        Generator {
            fgn: FgnSampler::with_cache_capacity(capacity),
            conv_planner: Mutex::new(FftPlanner::new()),
        }
    }

    pub fn fgn_sampler(&self) -> &FgnSampler {
        &self.fgn
    }

    /// Fractional Brownian motion on `n` points spaced `dt`, started at 0.
    pub fn fbm(
        &self,
        params: &FbmParams,
        n: usize,
        dt: f64,
        seeds: SeedScheme,
        index: u64,
    ) -> Result<Trajectory> {
        let mut rng = seeds.stream(index);
        let values = self.fbm_values(params, n, dt, &mut rng)?;
        Ok(Trajectory {
            values,
            dt,
            meta: meta(ProcessParams::Fbm(*params), &seeds, index),
        })
    }

    fn fbm_values(
        &self,
        params: &FbmParams,
        n: usize,
        dt: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Vec<f64>> {
        params.validate()?;
        check_grid(n, dt)?;
        let noise = self.fgn.sample(params.hurst, n - 1, rng)?;
        // Self-similarity: increments over a step dt scale as dt^H.
        let step = dt.powf(params.hurst);
        let mut values = Vec::with_capacity(n);
        values.push(0.0);
        let mut acc = 0.0;
        for g in noise {
            acc += step * g;
            values.push(acc);
        }
        Ok(values)
    }

    /// Fractional Ornstein-Uhlenbeck path driven by exact fGn increments.
    ///
    /// `kappa = 0` bypasses the integrator and returns
    /// `x0 + sigma * B_H(t)` from the fBm generator on the same stream, so
    /// the reduction is exact to the bit with either scheme.
    pub fn fou(
        &self,
        params: &FouParams,
        scheme: FouScheme,
        n: usize,
        dt: f64,
        seeds: SeedScheme,
        index: u64,
    ) -> Result<Trajectory> {
        let mut rng = seeds.stream(index);
        let values = self.fou_values(params, scheme, n, dt, &mut rng)?;
        Ok(Trajectory {
            values,
            dt,
            meta: meta(ProcessParams::Fou(*params), &seeds, index),
        })
    }

    fn fou_values(
        &self,
        params: &FouParams,
        scheme: FouScheme,
        n: usize,
        dt: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Vec<f64>> {
        params.validate()?;
        check_grid(n, dt)?;

        if params.kappa == 0.0 {
            let fbm = FbmParams {
                hurst: params.hurst,
            };
            let bh = self.fbm_values(&fbm, n, dt, rng)?;
            return Ok(bh.iter().map(|v| params.x0 + params.sigma * v).collect());
        }

        if scheme == FouScheme::EulerMaruyama && params.kappa * dt >= 2.0 {
            return Err(Error::Unstable(format!(
                "kappa * dt = {} >= 2: explicit Euler-Maruyama oscillates; shrink dt or switch scheme",
                params.kappa * dt
            )));
        }

        let noise = self.fgn.sample(params.hurst, n - 1, rng)?;
        let step = dt.powf(params.hurst);
        let mut values = Vec::with_capacity(n);
        values.push(params.x0);
        match scheme {
            FouScheme::EulerMaruyama => {
                let mut x = params.x0;
                for g in noise {
                    x += params.kappa * (params.theta - x) * dt + params.sigma * step * g;
                    values.push(x);
                }
            }
            FouScheme::ExponentialEuler => {
                let decay = (-params.kappa * dt).exp();
                let mut s = 0.0;
                for (k, g) in noise.iter().enumerate() {
                    s = decay * s + step * g;
                    let t = dt * (k + 1) as f64;
                    let mean =
                        params.theta + (params.x0 - params.theta) * (-params.kappa * t).exp();
                    values.push(mean + params.sigma * s);
                }
            }
        }
        Ok(values)
    }

    /// Linear fractional stable motion by an FFT-convolved Riemann sum of
    /// the moving-average representation.
    ///
    /// With kernel exponent `d = H - 1/alpha`, mesh resolution `m` and
    /// truncation `M`, the k-th unit-lag increment is
    ///
    /// ```text
    /// X(k) - X(k-1) ~= dt^H m^(-1/alpha) sum_{u=1}^{mM} a_u Z_{km-u}
    /// ```
    ///
    /// over iid standard symmetric alpha-stable innovations `Z`. All
    /// increments come out of one linear convolution evaluated by FFT.
    pub fn lfsm(
        &self,
        params: &LfsmParams,
        mesh: LfsmMesh,
        n: usize,
        dt: f64,
        seeds: SeedScheme,
        index: u64,
    ) -> Result<Trajectory> {
        let mut rng = seeds.stream(index);
        let values = self.lfsm_values(params, mesh, n, dt, &mut rng)?;
        Ok(Trajectory {
            values,
            dt,
            meta: meta(ProcessParams::Lfsm(*params), &seeds, index),
        })
    }

    fn lfsm_values(
        &self,
        params: &LfsmParams,
        mesh: LfsmMesh,
        n: usize,
        dt: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Vec<f64>> {
        params.validate()?;
        mesh.validate()?;
        check_grid(n, dt)?;

        let m = mesh.resolution;
        let d = params.hurst - 1.0 / params.alpha;
        let kernel = lfsm::moving_average_kernel(d, mesh);
        let klen = kernel.len() - 1;
        let zlen = m * (mesh.truncation + (n - 1));

        let fsize = (klen + zlen).next_power_of_two();
        let mut fa = vec![Complex64::new(0.0, 0.0); fsize];
        for (slot, &a) in fa.iter_mut().zip(kernel.iter()) {
            slot.re = a;
        }
        let mut fz = vec![Complex64::new(0.0, 0.0); fsize];
        for slot in fz.iter_mut().take(zlen) {
            slot.re = stable::sample_standard_sas(params.alpha, rng);
        }

        let (forward, inverse) = {
            let mut planner = self.conv_planner.lock().unwrap();
            (
                planner.plan_fft_forward(fsize),
                planner.plan_fft_inverse(fsize),
            )
        };
        forward.process(&mut fa);
        forward.process(&mut fz);
        for (x, y) in fa.iter_mut().zip(fz.iter()) {
            *x *= *y;
        }
        inverse.process(&mut fa);

        let norm = 1.0 / fsize as f64;
        let scale = params.scale * dt.powf(params.hurst) * (m as f64).powf(-1.0 / params.alpha);
        let mut values = Vec::with_capacity(n);
        values.push(0.0);
        let mut acc = 0.0;
        for k in 1..n {
            // Innovation index km - u maps to buffer slot km - u + klen, so
            // the k-th increment sits at convolution output km + klen.
            let inc = scale * fa[k * m + klen].re * norm;
            acc += inc;
            values.push(acc);
        }
        Ok(values)
    }

    /// One trajectory at explicit stream coordinates, dispatched on kind.
    pub fn single(
        &self,
        req: &BatchRequest,
        params: &ProcessParams,
        index: u64,
    ) -> Result<Trajectory> {
        match params {
            ProcessParams::Fbm(p) => self.fbm(p, req.n, req.dt, req.seeds, index),
            ProcessParams::Fou(p) => self.fou(p, req.fou_scheme, req.n, req.dt, req.seeds, index),
            ProcessParams::Lfsm(p) => self.lfsm(p, req.lfsm_mesh, req.n, req.dt, req.seeds, index),
        }
    }

    /// Generates `count` trajectories in parallel, ordered by stream index.
    ///
    /// Under [`HurstSampling::Uniform`], each trajectory first draws its
    /// exponent from its own stream, clamped to the representable grid away
    /// from 0 and 1, then generates the path from the remainder of that
    /// stream. Failures are collected per index rather than aborting the
    /// whole batch mid-flight.
    pub fn batch(&self, req: &BatchRequest) -> Result<Vec<Trajectory>> {
        req.params.validate()?;
        check_grid(req.n, req.dt)?;
        req.lfsm_mesh.validate()?;

        let results: Vec<std::result::Result<Trajectory, (u64, String)>> = (req.first_index
            ..req.first_index + req.count)
            .into_par_iter()
            .map(|index| self.batch_one(req, index).map_err(|e| (index, e.to_string())))
            .collect();

        let mut out = Vec::with_capacity(req.count as usize);
        let mut failures = Vec::new();
        for r in results {
            match r {
                Ok(t) => out.push(t),
                Err(f) => failures.push(f),
            }
        }
        if !failures.is_empty() {
            return Err(Error::BatchFailure(failures));
        }
        Ok(out)
    }

    fn batch_one(&self, req: &BatchRequest, index: u64) -> Result<Trajectory> {
        let mut rng = req.seeds.stream(index);
        let params = match req.hurst_sampling {
            HurstSampling::Fixed => req.params,
            HurstSampling::Uniform => {
                let h: f64 = rng
                    .gen::<f64>()
                    .clamp(fgn::HURST_GRID, 1.0 - fgn::HURST_GRID);
                req.params.with_hurst(h)
            }
        };
        let values = match &params {
            ProcessParams::Fbm(p) => self.fbm_values(p, req.n, req.dt, &mut rng)?,
            ProcessParams::Fou(p) => {
                self.fou_values(p, req.fou_scheme, req.n, req.dt, &mut rng)?
            }
            ProcessParams::Lfsm(p) => {
                self.lfsm_values(p, req.lfsm_mesh, req.n, req.dt, &mut rng)?
            }
        };
        Ok(Trajectory {
            values,
            dt: req.dt,
            meta: meta(params, &req.seeds, index),
        })
    }
}

fn meta(params: ProcessParams, seeds: &SeedScheme, index: u64) -> TrajectoryMeta {
    TrajectoryMeta {
        kind: params.kind(),
        true_params: Some(params),
        master_seed: seeds.master_seed,
        stream_index: index,
    }
}
