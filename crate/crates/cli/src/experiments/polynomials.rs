//! Test families of entire functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Holo = Box<dyn Fn(Complex64) -> Complex64 + Sync>;

fn chebyshev(k: usize) -> impl Fn(Complex64) -> Complex64 + Sync {
    move |z| {
        let x = z * 2.0 - 1.0;
        let (mut a, mut b) = (Complex64::new(1.0, 0.0), x);
        if k == 0 {
            return a;
        }
        for _ in 1..k {
            let next = x * b * 2.0 - a;
            a = b;
            b = next;
        }
        b
    }
}

/// Monomials and shifted Chebyshev polynomials up to `degree`, plus
/// `random` polynomials with seeded uniform coefficients in `[-1, 1]`.
pub fn polynomial_family(degree: usize, random: usize, seed: u64) -> Vec<(String, Holo)> {
    let mut fam: Vec<(String, Holo)> = Vec::new();
    for k in 0..=degree {
        fam.push((format!("z^{k}"), Box::new(move |z: Complex64| z.powi(k as i32))));
        fam.push((format!("T_{k}(2z-1)"), Box::new(chebyshev(k))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random {
        let coef: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
        fam.push((
            format!("random {i}"),
            Box::new(move |z: Complex64| coef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)),
        ));
    }
    fam
}
