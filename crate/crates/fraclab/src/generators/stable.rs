//! Symmetric alpha-stable variates via the Chambers-Mallows-Stuck
//! transform.
//!
//! For `U ~ Uniform(-pi/2, pi/2)` and `E ~ Exp(1)`,
//!
//! ```text
//! Z = sin(alpha U) / cos(U)^(1/alpha) * (cos((1 - alpha) U) / E)^((1-alpha)/alpha)
//! ```
//!
//! has characteristic function `exp(-|t|^alpha)`. In the symmetric case the
//! formula is continuous in alpha: at `alpha = 1` it collapses to `tan(U)`
//! (standard Cauchy) and at `alpha = 2` to `2 sin(U) sqrt(E)`, a normal
//! with variance 2.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// One draw with `scale = 1`. Consumes exactly two uniforms from `rng`.
pub fn sample_standard_sas(alpha: f64, rng: &mut ChaCha12Rng) -> f64 {
    debug_assert!(alpha > 0.0 && alpha <= 2.0, "alpha out of (0,2]: {alpha}");
    let u = std::f64::consts::PI * (rng.gen::<f64>() - 0.5);
    let mut v: f64 = rng.gen();
    if v == 0.0 {
        v = f64::MIN_POSITIVE;
    }
    let e = -v.ln();
    if alpha == 1.0 {
        return u.tan();
    }
    let su = (alpha * u).sin();
    let cu = u.cos();
    let t = ((1.0 - alpha) * u).cos() / e;
    su / cu.powf(1.0 / alpha) * t.powf((1.0 - alpha) / alpha)
}
