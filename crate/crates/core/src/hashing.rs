//! Small portable hashes and generators shared by the mocks and the
//! retrieval fallback. Both are trivially reimplementable in other
//! languages, which keeps cross-language fixtures byte-compatible.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |hash, &b| (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// 64-bit linear congruential generator with Knuth's MMIX constants.
#[derive(Debug, Clone)]
pub struct MmixLcg {
    state: u64,
}

impl MmixLcg {
    pub const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
    pub const INCREMENT: u64 = 1_442_695_040_888_963_407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Index in `0..n` taken from the high 32 bits of the next state.
    /// The low bits of a power-of-two LCG have short periods.
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_index over an empty range");
        ((self.next_u64() >> 32) % n as u64) as usize
    }
}
