//! Counter-based deterministic random stream.
//!
//! Every draw is a pure function of (seed, stream, counter), so sampling loops
//! can be split across threads and still reproduce bit-identical sequences.

/// Splittable counter-based generator (SplitMix64 over a keyed counter).
#[derive(Debug, Clone)]
pub struct DeterministicRng {
    seed: u64,
    stream: u64,
    counter: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl DeterministicRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        DeterministicRng {
            seed,
            stream,
            counter: 0,
        }
    }

    /// Generator positioned at a fixed counter; used to parallelise loops by index.
    pub fn at(seed: u64, stream: u64, counter: u64) -> Self {
        DeterministicRng {
            seed,
            stream,
            counter,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let key = splitmix64(self.seed ^ splitmix64(self.stream));
        let v = splitmix64(key ^ self.counter.wrapping_mul(0xD1B54A32D192ED03));
        self.counter += 1;
        v
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        let v = self.next_u64() >> 11; // 53 bits
        (v as f64 + 0.5) / 9007199254740992.0
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Vector of standard normals.
    pub fn normal_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    /// Uniform integer in [0, bound).
    pub fn below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}
