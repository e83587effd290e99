//! Small statistical utilities shared by the harness and the test suites:
//! empirical quantiles, a two-sample Kolmogorov-Smirnov statistic, and
//! deterministic seed derivation.

/// Two-sided Kolmogorov-Smirnov coefficient for `alpha = 0.01`:
/// `sqrt(-ln(alpha/2) / 2)`. The critical value for samples of sizes n and m
/// is `KS_ALPHA_001 * sqrt((n + m) / (n * m))`.
pub const KS_ALPHA_001: f64 = 1.6276236115189503;

/// Empirical quantile with linear interpolation between order statistics
/// (the common "type 7" convention). `q` must lie in `[0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Convenience: sorts a copy and returns (q05, median, q95).
pub fn quantile_triple(values: &[f64]) -> (f64, f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    (
        quantile(&v, 0.05),
        quantile(&v, 0.5),
        quantile(&v, 0.95),
    )
}

/// Two-sample KS statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Advance both CDFs past the next support point (ties move together).
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d.max((i as f64 / n - j as f64 / m).abs())
}

/// True when the two samples pass a level-0.01 KS test (fail to reject).
pub fn ks_test_01(a: &[f64], b: &[f64]) -> bool {
    let (n, m) = (a.len() as f64, b.len() as f64);
    ks_two_sample(a, b) < KS_ALPHA_001 * ((n + m) / (n * m)).sqrt()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a sequence of stream labels.
/// Stable across platforms and releases; adding a new label never perturbs
/// seeds derived under other labels.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0xA076_1D64_78BD_642F);
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// FNV-1a hash of a byte string, used to fold policy names into seed labels.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
