//! Seeded random streams.
//!
//! Each trial owns one [`RngStream`] keyed by `(seed, stream_id)`. The
//! stream is ChaCha8 with the stream id selecting one of its 2^64 streams,
//! so results do not depend on platform or on how trials are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniform integer in `[0, bound)`.
///
/// Raw 64-bit draws at or above the largest multiple of `bound` are
/// rejected; accepted draws map to `draw % bound`. A scripted draw below
/// `bound` therefore comes back unchanged.
pub fn draw_below<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "draw_below with zero bound");
    let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return x % bound;
        }
    }
}

/// Uniform real in `[0, 1)` from the top 53 bits of one draw.
pub fn draw_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Replays a fixed list of 64-bit draws. Panics once exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedDraws {
    values: Vec<u64>,
    pos: usize,
}

impl ScriptedDraws {
    pub fn new(values: impl Into<Vec<u64>>) -> Self {
        Self {
            values: values.into(),
            pos: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl RngCore for ScriptedDraws {
    fn next_u32(&mut self) -> u32 {
        self.next_u64() as u32
    }

    fn next_u64(&mut self) -> u64 {
        let v = *self
            .values
            .get(self.pos)
            .unwrap_or_else(|| panic!("scripted draws exhausted after {} values", self.pos));
        self.pos += 1;
        v
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
