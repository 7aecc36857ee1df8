//! Counter-based deterministic random number generation.
//!
//! Every stream is keyed by `(seed, replication, tag)` and produces the same
//! sequence regardless of worker count or platform, so simulation campaigns
//! are reproducible under any parallel schedule. Output quality comes from
//! the SplitMix64 finalizer applied to a Weyl sequence; this is not a
//! cryptographic generator.

use crate::normal::standard_normal_quantile;

const WEYL: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// One independent random stream, addressed by `(seed, replication, tag)`.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, replication: u64, tag: u64) -> Self {
        let key = mix(mix(mix(seed ^ WEYL) ^ replication) ^ tag.wrapping_mul(WEYL));
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix(self.key.wrapping_add(self.counter.wrapping_mul(WEYL)));
        self.counter += 1;
        out
    }

    /// Uniform draw on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw on the open interval (0, `upper`).
    #[inline]
    pub fn uniform_to(&mut self, upper: f64) -> f64 {
        self.uniform() * upper
    }

    #[inline]
    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.uniform() < prob
    }

    /// Exponential draw with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }

    /// Standard normal draw by inverse-CDF transform (one uniform per draw).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        standard_normal_quantile(self.uniform())
    }

    /// Gamma draw with integer shape, as a sum of exponentials.
    pub fn gamma_int_shape(&mut self, shape: u32, scale: f64) -> f64 {
        let mut sum = 0.0;
        for _ in 0..shape {
            sum -= self.uniform().ln();
        }
        sum * scale
    }

    /// Weibull draw under the survival parametrization
    /// `S(t) = exp(-(rate * t)^shape)`.
    #[inline]
    pub fn weibull(&mut self, shape: f64, rate: f64) -> f64 {
        (-self.uniform().ln()).powf(1.0 / shape) / rate
    }
}
