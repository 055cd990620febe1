//! Standard-normal tail probabilities and the pooled two-proportion z-test.
//!
//! The normal tail follows W. J. Cody's rational Chebyshev approximations
//! (ACM TOMS 715, as used by R's `pnorm`), which keep close to full double
//! precision for both tails over the whole finite range.

#![allow(clippy::excessive_precision)] // coefficients are kept as published

use serde::{Deserialize, Serialize};

use crate::{Result, SafeError};

/// Per-arm incidence counts for a single AE variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    events: u64,
    subjects: u64,
}

impl ArmCounts {
    pub fn new(events: u64, subjects: u64) -> Result<Self> {
        if subjects == 0 {
            return Err(SafeError::invalid("arm must have at least one subject"));
        }
        if events > subjects {
            return Err(SafeError::invalid(format!("events ({events}) exceed subjects ({subjects})")));
        }
        Ok(ArmCounts { events, subjects })
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn subjects(&self) -> u64 {
        self.subjects
    }

    pub fn rate(&self) -> f64 {
        self.events as f64 / self.subjects as f64
    }
}

/// Alternative hypothesis direction for the two-proportion test.
///
/// `Greater` tests whether arm 1 has the higher incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    Greater,
    Less,
}

const SQRT_32: f64 = 5.656_854_249_492_380_195_206_754_896_838;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934;

const A: [f64; 5] = [
    2.235_252_035_460_683_928_7,
    161.028_231_068_555_878_81,
    1_067.689_485_460_370_958_2,
    18_154.981_253_343_561_249,
    0.065_682_337_918_207_449_113,
];
const B: [f64; 4] =
    [47.202_581_904_688_241_87, 976.098_551_737_776_693_22, 10_260.932_208_618_978_205, 45_507.789_335_026_729_956];
const C: [f64; 9] = [
    0.398_941_512_088_134_667_64,
    8.883_149_794_388_375_941_2,
    93.506_656_132_177_855_979,
    597.270_276_394_802_262_26,
    2_494.537_585_290_372_671_1,
    6_848.190_450_536_282_332_6,
    11_602.651_437_647_350_124,
    9_842.714_838_383_978_021_8,
    1.076_557_677_372_019_231_7e-8,
];
const D: [f64; 8] = [
    22.266_688_044_328_115_691,
    235.387_901_782_624_998_61,
    1_519.377_599_407_554_805,
    6_485.558_298_266_760_755,
    18_615.571_640_885_098_091,
    34_900.952_721_145_977_266,
    38_912.003_286_093_271_411,
    19_685.429_676_859_990_727,
];
const P: [f64; 6] = [
    0.215_898_534_057_956_99,
    0.127_401_161_160_247_363_9,
    0.022_235_277_870_649_807,
    0.001_421_619_193_227_893_466,
    2.911_287_495_116_879_2e-5,
    0.023_073_441_764_940_173_03,
];
const Q: [f64; 5] = [
    1.284_260_096_144_911_21,
    0.468_238_212_480_865_118,
    0.065_988_137_868_928_551_5,
    0.003_782_396_332_027_582_44,
    7.297_515_550_839_662_05e-5,
];

/// Returns `(Φ(x), 1 − Φ(x))`, each computed without cancellation.
fn normal_cdf_both(x: f64) -> (f64, f64) {
    let y = x.abs();
    if y <= 0.674_489_75 {
        let (mut num, mut den) = (0.0, 0.0);
        if y > f64::EPSILON * 0.5 {
            let xsq = x * x;
            num = A[4] * xsq;
            den = xsq;
            for i in 0..3 {
                num = (num + A[i]) * xsq;
                den = (den + B[i]) * xsq;
            }
        }
        let t = x * (num + A[3]) / (den + B[3]);
        return (0.5 + t, 0.5 - t);
    }

    let small_tail = if y <= SQRT_32 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        let t = (num + C[7]) / (den + D[7]);
        gauss_factor(y) * t
    } else if y < 38.5 {
        let xsq = 1.0 / (x * x);
        let mut num = P[5] * xsq;
        let mut den = xsq;
        for i in 0..4 {
            num = (num + P[i]) * xsq;
            den = (den + Q[i]) * xsq;
        }
        let t = xsq * (num + P[4]) / (den + Q[4]);
        gauss_factor(y) * (FRAC_1_SQRT_2PI - t) / y
    } else {
        0.0
    };

    if x > 0.0 {
        (1.0 - small_tail, small_tail)
    } else {
        (small_tail, 1.0 - small_tail)
    }
}

/// exp(−y²/2) evaluated in two pieces to limit rounding error for large y.
fn gauss_factor(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq * 0.5).exp() * (-del * 0.5).exp()
}

/// Upper tail `1 − Φ(z)` of the standard normal distribution.
pub fn normal_upper_tail(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(SafeError::invalid(format!("test statistic must be finite, got {z}")));
    }
    Ok(upper_tail_unchecked(z))
}

pub(crate) fn upper_tail_unchecked(z: f64) -> f64 {
    normal_cdf_both(z).1.clamp(0.0, 1.0)
}

/// Raw p-value of the pooled two-proportion z-test without continuity correction.
///
/// When the pooled variance is zero (no events in either arm, or every
/// subject in both arms has the event) there is no evidence of a difference
/// and the p-value is 1.
pub fn two_proportion_pvalue(arm1: ArmCounts, arm2: ArmCounts, sidedness: Sidedness) -> f64 {
    let events = arm1.events + arm2.events;
    let subjects = arm1.subjects + arm2.subjects;
    if events == 0 || events == subjects {
        return 1.0;
    }
    let pooled = events as f64 / subjects as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / arm1.subjects as f64 + 1.0 / arm2.subjects as f64)).sqrt();
    let z = (arm1.rate() - arm2.rate()) / se;
    let (lower, upper) = normal_cdf_both(z);
    let p = match sidedness {
        Sidedness::Greater => upper,
        Sidedness::Less => lower,
        Sidedness::TwoSided => 2.0 * lower.min(upper),
    };
    p.clamp(0.0, 1.0)
}
