//! Fixtures shared by the benchmarks in `benches/`.

use ergokit::random::random_kernel;
use ergokit::simulate::stream_rng;
use ergokit::StochasticKernel;

/// A reproducible random kernel on `n` states.
pub fn fixture(n: usize, density: f64) -> StochasticKernel {
    random_kernel(&mut stream_rng(0xbe9c, n as u64), n, density).expect("valid fixture")
}

/// `blocks` disjoint copies of a random kernel, so several closed classes exist.
pub fn decomposable_fixture(block: usize, blocks: usize) -> StochasticKernel {
    let parts: Vec<StochasticKernel> = (0..blocks).map(|_| fixture(block, 0.5)).collect();
    ergokit::examples::build_block_kernel(&parts, None).expect("valid blocks")
}
