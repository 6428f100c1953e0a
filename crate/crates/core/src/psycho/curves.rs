//! Closed-form hearing curves and frequency scales.

use super::PsychoError;

/// Human hearing range covered by the threshold model, in Hz.
pub const HEARING_MIN_HZ: f64 = 20.0;
pub const HEARING_MAX_HZ: f64 = 20_000.0;

pub fn in_hearing_range(f: f64) -> bool {
    (HEARING_MIN_HZ..=HEARING_MAX_HZ).contains(&f)
}

/// Absolute threshold of hearing in quiet, in dB, for
/// `20 Hz <= f <= 20 kHz`.
pub fn ath(f: f64) -> Result<f64, PsychoError> {
    if !in_hearing_range(f) {
        return Err(PsychoError::FrequencyOutOfRange(f));
    }
    let khz = f / 1000.0;
    Ok(3.64 * khz.powf(-0.8) - 6.5 * (-0.6 * (khz - 3.3).powi(2)).exp() + 1e-3 * khz.powi(4))
}

/// Critical-band rate in Bark.
pub fn bark(f: f64) -> f64 {
    13.0 * (0.76 * f / 1000.0).atan() + 3.5 * (f / 7500.0).atan().powi(2)
}

/// Center frequency of DFT bin `k` for window size `n` at rate `fs`.
pub fn bin_to_freq(k: usize, n: usize, fs: u32) -> Result<f64, PsychoError> {
    if k > n / 2 {
        return Err(PsychoError::BinOutOfRange { bin: k, max: n / 2 });
    }
    Ok(k as f64 / n as f64 * fs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ath_reference_points() {
        assert_abs_diff_eq!(ath(1000.0).unwrap(), 3.369, epsilon = 0.005);
        // Near-global minimum: the exp term hits its full -6.5 depth.
        assert_abs_diff_eq!(ath(3300.0).unwrap(), -4.98, epsilon = 0.01);
    }

    #[test]
    fn ath_domain() {
        assert!(ath(10.0).is_err());
        assert!(ath(20_001.0).is_err());
        assert!(ath(20.0).is_ok());
        assert!(ath(20_000.0).is_ok());
    }

    #[test]
    fn bark_reference_points() {
        assert_eq!(bark(0.0), 0.0);
        assert_abs_diff_eq!(bark(1000.0), 8.51, epsilon = 0.01);
        // Consistent with 24 critical bands over the main hearing range.
        assert_abs_diff_eq!(bark(16000.0), 23.84, epsilon = 0.05);
    }

    #[test]
    fn bark_is_monotone() {
        let mut prev = -1.0;
        for i in 0..200 {
            let b = bark(i as f64 * 100.0);
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn bin_freq_scaling() {
        assert_eq!(bin_to_freq(0, 2048, 16000).unwrap(), 0.0);
        assert_eq!(bin_to_freq(64, 2048, 16000).unwrap(), 500.0);
        assert_eq!(bin_to_freq(1024, 2048, 16000).unwrap(), 8000.0);
        assert!(bin_to_freq(1025, 2048, 16000).is_err());
    }

    #[test]
    fn curves_match_independent_evaluation() {
        // Re-derive both closed forms through a different arithmetic route
        // and compare at high precision.
        let ath_ref = |f: f64| {
            let k = f * 1e-3;
            3.64 * (-0.8 * k.ln()).exp() - 6.5 * (-0.6 * (k - 3.3) * (k - 3.3)).exp()
                + 1e-3 * k * k * k * k
        };
        let bark_ref = |f: f64| {
            13.0 * f64::atan2(0.76 * f, 1000.0) + 3.5 * f64::atan2(f, 7500.0).powi(2)
        };
        let mut f = 20.0f64;
        let mut checked = 0;
        while f <= 20_000.0 {
            let a = ath(f).unwrap();
            let rel_a = (a - ath_ref(f)).abs() / a.abs().max(1.0);
            assert!(rel_a < 1e-9, "ath({f}): {rel_a}");
            let b = bark(f);
            let rel_b = (b - bark_ref(f)).abs() / b.abs().max(1.0);
            assert!(rel_b < 1e-9, "bark({f}): {rel_b}");
            f *= 1.00693; // ~1000 log-spaced points
            checked += 1;
        }
        assert!(checked >= 1000);
    }
}
