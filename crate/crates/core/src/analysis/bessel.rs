//! Bessel functions of the first kind for the disc eigenfield, by power
//! series (accurate to machine precision for the arguments used here), plus
//! the first zero of J1'.

/// J0 by power series.
pub fn j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..60 {
        term *= -q / ((j * j) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// J1 by power series.
pub fn j1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for j in 1..60 {
        term *= -q / ((j * (j + 1)) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// J1'(x) = J0(x) - J1(x)/x.
pub fn j1_prime(x: f64) -> f64 {
    j0(x) - j1(x) / x
}

/// J1''(x) from the Bessel equation.
pub fn j1_second(x: f64) -> f64 {
    -j1_prime(x) / x - (1.0 - 1.0 / (x * x)) * j1(x)
}

/// First positive zero of J1', bracketed and polished by Newton iteration.
pub fn j1_prime_first_zero() -> f64 {
    let (mut lo, mut hi) = (1.5, 2.2);
    assert!(j1_prime(lo) > 0.0 && j1_prime(hi) < 0.0);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if j1_prime(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let step = j1_prime(x) / j1_second(x);
        x -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_match_reference_values() {
        assert!((j0(1.0) - 0.7651976865579666).abs() < 1e-14);
        assert!((j1(1.0) - 0.4400505857449335).abs() < 1e-14);
        assert!((j1(2.5) - 0.4970941024642741).abs() < 1e-13);
    }

    #[test]
    fn first_zero_of_j1_prime() {
        let z = j1_prime_first_zero();
        assert!((z - 1.8411837813406593).abs() < 1e-11);
        assert!(j1_prime(z).abs() < 1e-13);
    }
}
