/// Local maxima of `series` with at least `hysteresis` excursion on both
/// flanks.
///
/// A candidate maximum is tracked while the signal rises. It is confirmed
/// once the signal has dropped at least `hysteresis` below it, and only if
/// the signal had risen at least `hysteresis` above the preceding minimum.
/// Flat tops report their first index. Endpoint samples are never peaks.
pub fn detect_peaks(series: &[f64], hysteresis: f64) -> Vec<(usize, f64)> {
    assert!(hysteresis >= 0.0, "hysteresis must be non-negative");
    let n = series.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }

    let mut valley = series[0];
    let mut candidate: Option<(usize, f64)> = None;
    let mut prev = series[0];

    for (i, &v) in series.iter().enumerate().skip(1) {
        match candidate {
            Some((ci, cv)) => {
                if v > cv {
                    candidate = Some((i, v));
                } else if cv - v >= hysteresis && v < cv {
                    let rose = cv - valley >= hysteresis && cv > valley;
                    if rose && ci > 0 && ci < n - 1 {
                        peaks.push((ci, cv));
                    }
                    candidate = None;
                    valley = v;
                }
            }
            None => {
                if v < valley {
                    valley = v;
                } else if v > prev && v > valley {
                    candidate = Some((i, v));
                }
            }
        }
        prev = v;
    }
    peaks
}

pub(crate) fn range(window: &[f64]) -> f64 {
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Hysteresis for attractor peak detection: `fraction` of the window's
/// range, never below `floor`. The floor keeps decaying ripple below the
/// convergence tolerance from registering as oscillation.
pub(crate) fn attractor_hysteresis(window: &[f64], fraction: f64, floor: f64) -> f64 {
    (fraction * range(window)).max(floor)
}
