//! In-place radix-2 FFT (unnormalized).

use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Kernel exp(-j2π nk/N).
    Forward,
    /// Kernel exp(+j2π nk/N), no 1/N scaling.
    Inverse,
}

pub fn transform(data: &mut [Complex64], direction: Direction) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                data.swap(i, j);
            }
        }
    }
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let angle = sign * TAU * k as f64 / len as f64;
                let tw = Complex64::new(libm::cos(angle), libm::sin(angle));
                let a = data[start + k];
                let b = data[start + k + half] * tw;
                data[start + k] = a + b;
                data[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| {
                        let a = sign * TAU * (k * t) as f64 / n as f64;
                        v * Complex64::new(libm::cos(a), libm::sin(a))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        for n in [1usize, 2, 4, 8, 32] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(libm::sin(i as f64 * 0.7), libm::cos(i as f64 * 1.3) - 0.2))
                .collect();
            for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Inverse, 1.0)] {
                let mut y = x.clone();
                transform(&mut y, dir).unwrap();
                for (a, b) in y.iter().zip(dft(&x, sign)) {
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut x = [Complex64::new(0.0, 0.0); 6];
        assert_eq!(transform(&mut x, Direction::Forward), Err(Error::NotPowerOfTwo(6)));
    }
}
