//! Deterministic seed derivation so parallel work items get independent
//! streams that do not depend on scheduling order.

/// splitmix64 step; good avalanche, cheap, stable across platforms.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Seed for the idx-th work item derived from a base seed.
pub fn child_seed(base: u64, idx: u64) -> u64 {
    splitmix64(base ^ splitmix64(idx.wrapping_add(0x51ed2701)))
}
