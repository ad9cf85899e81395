//! Deterministic randomness plumbing.
//!
//! Every replication draws from ChaCha8 substreams keyed by (master seed,
//! replication index, substream index): stream k of replication r reads the
//! ChaCha stream `r << 16 | k`, so streams are independent by construction and
//! results depend only on the seed, never on thread count or evaluation order.
//! Normal variates come from Wichura's AS241 inverse CDF applied to a 53-bit
//! uniform; together with `libm` transcendentals this keeps the whole sampling
//! path specified in this crate rather than in the platform libm.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Substream indices live in the low 16 bits of the ChaCha stream id.
pub const MAX_SUBSTREAMS: u32 = 1 << 16;

/// Replication indices live in the remaining 48 bits.
pub const MAX_REPLICATIONS: u64 = 1 << 48;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Expands a master seed into ChaCha keys and hands out per-replication,
/// per-substream generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSchedule {
    key: [u8; 32],
}

impl SeedSchedule {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        SeedSchedule { key }
    }

    /// Derives an independent schedule for a separate estimation task, so
    /// that e.g. threshold calibration and the final ESS run never share
    /// replication streams. Deterministic in (self, label).
    pub fn derive(&self, label: u64) -> Self {
        let mut state = label ^ 0xd1b5_4a32_d192_ed03;
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let old = u64::from_le_bytes(self.key[i * 8..(i + 1) * 8].try_into().unwrap());
            let mixed = splitmix64(&mut state) ^ old;
            state ^= old;
            chunk.copy_from_slice(&mixed.to_le_bytes());
        }
        SeedSchedule { key }
    }

    /// Generator for one substream of one replication.
    pub fn stream_rng(&self, replication: u64, substream: u32) -> ChaCha8Rng {
        assert!(substream < MAX_SUBSTREAMS, "substream index too large");
        assert!(
            replication < MAX_REPLICATIONS,
            "replication index too large"
        );
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream((replication << 16) | u64::from(substream));
        rng
    }
}

const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Uniform on the open interval (0, 1) with 53-bit resolution; never returns
/// exactly 0 or 1, so it is safe to feed into the inverse normal CDF.
#[inline]
pub fn uniform_open01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * INV_2_53
}

/// Standard normal draw via the inverse CDF.
#[inline]
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    inverse_normal_cdf(uniform_open01(rng))
}

/// Inverse standard normal CDF, Wichura's algorithm AS241 (PPND16), good to
/// about one ulp over the full double range. `p` must lie strictly in (0, 1).
// Coefficients kept at their published precision rather than truncated to
// shortest-round-trip form.
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "inverse_normal_cdf domain: p in (0,1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_870_1e4)
            * r
            + 4.592_195_393_154_987_1e4)
            * r
            + 1.373_169_376_550_946_1e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_608;
        let den = ((((((5.226_495_278_852_545_6e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = libm::sqrt(-libm::log(r));
    let z = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_9)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}
