//! Traffic sources: per-node Poisson burst arrivals, exponentially
//! distributed burst sizes, uniform destination choice, and the jittered
//! idle delay before retransmissions. Every stream is seeded independently
//! so runs replay exactly and adding nodes never perturbs other nodes'
//! draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::NodeId;

/// Exponential variate with the given mean, by inverse-CDF. The u == 0
/// corner (measure zero but representable) is resampled so draws are
/// strictly positive.
pub fn exponential_draw(rng: &mut impl Rng, mean: f64) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return -mean * u.ln();
        }
    }
}

/// One node's burst source.
#[derive(Debug)]
pub struct Generator {
    node: NodeId,
    node_count: usize,
    mean_interarrival_s: f64,
    mean_burst_bytes: f64,
    rng: ChaCha8Rng,
}

impl Generator {
    /// `rate_hz` is this node's burst arrival rate. Stream `node + 1` of the
    /// seed keeps generators independent of each other and of the
    /// retransmission jitter stream.
    pub fn new(
        seed: u64,
        node: NodeId,
        node_count: usize,
        rate_hz: f64,
        mean_burst_bytes: f64,
    ) -> Self {
        assert!(rate_hz > 0.0 && mean_burst_bytes > 0.0 && node_count >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(node as u64 + 1);
        Generator {
            node,
            node_count,
            mean_interarrival_s: 1.0 / rate_hz,
            mean_burst_bytes,
            rng,
        }
    }

    /// Gap until this node's next burst.
    pub fn next_interarrival_s(&mut self) -> f64 {
        exponential_draw(&mut self.rng, self.mean_interarrival_s)
    }

    /// Payload size of a fresh burst, in bytes.
    pub fn draw_size_bytes(&mut self) -> f64 {
        exponential_draw(&mut self.rng, self.mean_burst_bytes)
    }

    /// Uniformly chosen destination, never the node itself.
    pub fn draw_destination(&mut self) -> NodeId {
        let idx = self.rng.gen_range(0..self.node_count - 1);
        if idx >= self.node {
            idx + 1
        } else {
            idx
        }
    }
}

/// The idle-delay source shared by all retransmissions (stream 0).
#[derive(Debug)]
pub struct RetransmitJitter {
    rng: ChaCha8Rng,
    max_idle_s: f64,
}

impl RetransmitJitter {
    pub fn new(seed: u64, max_idle_s: f64) -> Self {
        assert!(max_idle_s > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        RetransmitJitter { rng, max_idle_s }
    }

    /// Uniform idle delay in `[0, max_idle_s)`.
    pub fn draw_idle_s(&mut self) -> f64 {
        self.rng.gen::<f64>() * self.max_idle_s
    }
}
