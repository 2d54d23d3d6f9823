//! Derivative-free local refinement of sampled extrema.

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximize `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        }
    }
    let (fa, fb) = (f(a), f(b));
    [(x1, f1), (x2, f2), (a, fa), (b, fb)]
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

/// Largest of `n` samples of `f` on `[a, b]`, refined by [`golden_max`]
/// between the neighbours of the best sample. A periodic interval is
/// sampled without its right end.
pub(crate) fn curve_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, periodic: bool, n: usize) -> (f64, f64) {
    let n = n.max(3);
    let h = if periodic {
        (b - a) / n as f64
    } else {
        (b - a) / (n - 1) as f64
    };
    let (i, _) = (0..n)
        .map(|i| (i, f(a + h * i as f64)))
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    let t = a + h * i as f64;
    if periodic {
        golden_max(f, t - h, t + h, 1e-12 * (b - a))
    } else {
        golden_max(f, (t - h).max(a), (t + h).min(b), 1e-12 * (b - a))
    }
}

/// Box for [`compass_max`]; periodic coordinates wrap instead of clamping.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchBox {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub periodic: [bool; 2],
}

impl SearchBox {
    fn project(&self, mut x: [f64; 2]) -> [f64; 2] {
        for k in 0..2 {
            let span = self.hi[k] - self.lo[k];
            x[k] = if self.periodic[k] {
                self.lo[k] + (x[k] - self.lo[k]).rem_euclid(span)
            } else {
                x[k].clamp(self.lo[k], self.hi[k])
            };
        }
        x
    }
}

/// Compass search for a local maximum of `f` starting at `x0`.
pub(crate) fn compass_max<F: Fn([f64; 2]) -> f64>(
    f: F,
    x0: [f64; 2],
    step: [f64; 2],
    bounds: SearchBox,
    tol: f64,
) -> ([f64; 2], f64) {
    let mut x = bounds.project(x0);
    let mut fx = f(x);
    let mut h = step;
    while h[0] > tol || h[1] > tol {
        let mut moved = false;
        for k in 0..2 {
            if h[k] <= tol {
                continue;
            }
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[k] += sign * h[k];
                let y = bounds.project(y);
                let fy = f(y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            h = [h[0] * 0.5, h[1] * 0.5];
        }
    }
    (x, fx)
}

/// Largest sample of `f` over a tensor grid followed by [`compass_max`].
pub(crate) fn grid_max<F: Fn([f64; 2]) -> f64 + Sync>(
    f: F,
    counts: [usize; 2],
    bounds: SearchBox,
    tol: f64,
) -> ([f64; 2], f64) {
    use rayon::prelude::*;
    let coord = |k: usize, i: usize| -> f64 {
        let n = counts[k];
        let span = bounds.hi[k] - bounds.lo[k];
        if bounds.periodic[k] {
            bounds.lo[k] + span * i as f64 / n as f64
        } else if n == 1 {
            bounds.lo[k] + 0.5 * span
        } else {
            bounds.lo[k] + span * i as f64 / (n - 1) as f64
        }
    };
    let (best, _) = (0..counts[0] * counts[1])
        .into_par_iter()
        .map(|idx| {
            let x = [coord(0, idx / counts[1]), coord(1, idx % counts[1])];
            (x, f(x))
        })
        .reduce(|| ([0.0, 0.0], f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let h = [
        (bounds.hi[0] - bounds.lo[0]) / counts[0].max(1) as f64,
        (bounds.hi[1] - bounds.lo[1]) / counts[1].max(1) as f64,
    ];
    compass_max(&f, best, h, bounds, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3).powi(2) + 2.0, -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6 && (fx - 2.0).abs() < 1e-12);
        // boundary maximum
        let (x, _) = golden_max(|x| x, 0.0, 1.0, 1e-12);
        assert!((x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compass_handles_periodic_coordinates() {
        let f = |x: [f64; 2]| (2.0 * std::f64::consts::PI * x[0]).cos() - (x[1] - 0.25).powi(2);
        let b = SearchBox {
            lo: [0.0, 0.0],
            hi: [1.0, 1.0],
            periodic: [true, false],
        };
        let (x, fx) = grid_max(f, [16, 16], b, 1e-12);
        assert!((fx - 1.0).abs() < 1e-12, "{x:?}");
        assert!((x[1] - 0.25).abs() < 1e-6);
    }
}
