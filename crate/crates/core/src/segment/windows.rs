use super::{LabeledInterval, TimingPolicy};

/// Start times of the moving windows inside an interval.
///
/// The first window starts at the first sample at or after `interval.start`;
/// consecutive windows are `window_len - overlap` seconds apart and every window
/// ends at or before `interval.end`.
pub fn slide_windows(interval: &LabeledInterval, policy: &TimingPolicy, fs: f64) -> Vec<f64> {
    const EPS: f64 = 1e-9;
    let first = (interval.start * fs - EPS).ceil() / fs;
    let room = interval.end - first - policy.window_len;
    if room < -EPS {
        return Vec::new();
    }
    let stride = policy.stride();
    let count = (room / stride + EPS).floor() as usize + 1;
    (0..count).map(|k| first + k as f64 * stride).collect()
}
