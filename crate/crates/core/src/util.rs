//! Small shared helpers: deterministic pseudo-random vectors and line fits.

/// Linear congruential generator (Knuth's MMIX constants).  Used wherever a
/// reproducible "random" start vector is needed; avoids any global RNG state
/// so identical seeds give identical runs bit for bit.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.state
    }

    /// Uniform in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        // take the top 53 bits for a uniform mantissa
        let bits = self.next_u64() >> 11;
        (bits as f64) / ((1u64 << 52) as f64) - 1.0
    }

    pub fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_f64()).collect()
    }
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fitted log-log slope of `y` against `x`; pairs with non-positive entries
/// are skipped.  Returns `None` if fewer than two usable pairs remain.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&a, &b) in x.iter().zip(y) {
        if a > 0.0 && b > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
        }
    }
    if lx.len() < 2 {
        return None;
    }
    Some(linear_fit(&lx, &ly).0)
}
