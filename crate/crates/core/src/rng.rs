//! Counter-based, splittable 64-bit generator.
//!
//! A stream is identified by a 64-bit key. Draw `i` of the stream is
//! `mix(key + (i + 1) * GAMMA)`, where `mix` is the SplitMix64 finalizer
//! (Stafford variant 13) and `GAMMA` is the 64-bit golden-ratio constant.
//! Child streams are keyed by `mix(key ^ mix(index + GAMMA))`, so a child
//! depends only on its parent's key and its index, never on how many draws
//! the parent has made. All arithmetic is wrapping `u64`, which makes every
//! sample bit-identical across platforms.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0x6A09_E667_F3BC_C909;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    key: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { key: mix(seed ^ SEED_SALT), counter: 0 }
    }

    /// Independent child stream number `index`.
    pub fn split(&self, index: u64) -> Rng {
        Rng { key: mix(self.key ^ mix(index.wrapping_add(GAMMA))), counter: 0 }
    }

    /// Draw number `index` of this stream, without advancing it.
    #[inline]
    pub fn at(&self, index: u64) -> u64 {
        mix(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via the cosine branch of the Box-Muller transform.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * libm::log(u1)).sqrt() * libm::cos(std::f64::consts::TAU * u2)
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        -libm::log(self.uniform()) / rate
    }

    /// Gamma(shape, 1) by Marsaglia and Tsang, with the `shape < 1` boost.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let boost = libm::pow(self.uniform(), 1.0 / shape);
            return self.gamma(shape + 1.0) * boost;
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform();
            if u < 1.0 - 0.0331 * x.powi(4) || libm::log(u) < 0.5 * x * x + d * (1.0 - v + libm::log(v)) {
                return d * v;
            }
        }
    }

    /// Poisson variate: inversion for small means, PTRS otherwise.
    pub fn poisson(&mut self, lambda: f64) -> i64 {
        if lambda <= 0.0 {
            return 0;
        }
        if lambda <= 30.0 {
            let u = self.uniform();
            let mut k = 0i64;
            let mut p = libm::exp(-lambda);
            let mut cdf = p;
            while u > cdf {
                k += 1;
                p *= lambda / k as f64;
                if p == 0.0 {
                    break;
                }
                cdf += p;
            }
            return k;
        }
        // Transformed rejection with squeeze (Hormann 1993).
        let slam = lambda.sqrt();
        let loglam = libm::log(lambda);
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let vr = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= vr {
                return k as i64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let lhs = libm::log(v) + libm::log(inv_alpha) - libm::log(a / (us * us) + b);
            let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
            if lhs <= rhs {
                return k as i64;
            }
        }
    }
}
