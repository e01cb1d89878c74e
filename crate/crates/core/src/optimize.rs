//! Derivative-free minimization over the complex unit sphere.
//!
//! Each sweep rotates the current point `x` towards every basis direction
//! `e_k` and `i e_k` (projected orthogonal to `x`), minimizing along the great
//! circle `cos(t) x + sin(t) u` with Brent's method.

use crate::linalg::C64;

#[derive(Debug, Clone)]
pub struct SphereSearch {
    pub max_sweeps: usize,
    /// Stop once a full sweep improves the objective by less than this.
    pub sweep_tol: f64,
    /// Initial half-width of the angular bracket.
    pub bracket: f64,
    /// Angular tolerance of the line search.
    pub angle_tol: f64,
}

impl Default for SphereSearch {
    fn default() -> Self {
        Self {
            max_sweeps: 400,
            sweep_tol: 1e-13,
            bracket: 0.2,
            angle_tol: 1e-9,
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rotate(x: &[C64], u: &[C64], theta: f64) -> Vec<C64> {
    let (s, c) = theta.sin_cos();
    let mut y: Vec<C64> = x.iter().zip(u).map(|(a, b)| a * c + b * s).collect();
    let nrm = norm(&y);
    for z in &mut y {
        *z /= nrm;
    }
    y
}

/// Brent's minimizer on `[lo, hi]`, returning `(argmin, min)`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Minimizes `g` along the great circle through `x` in direction `u`.
/// Returns `(theta, value)` with `value <= g0` (falling back to `theta = 0`).
fn line_search<F: FnMut(f64) -> f64>(mut g: F, g0: f64, h: f64, tol: f64) -> (f64, f64) {
    let gp = g(h);
    let gm = g(-h);
    let (lo, hi) = if gp >= g0 && gm >= g0 {
        (-h, h)
    } else {
        let sign = if gp < gm { 1.0 } else { -1.0 };
        let (mut prev, mut cur, mut fcur): (f64, f64, f64) = (0.0, sign * h, gp.min(gm));
        let mut step = h;
        loop {
            step *= 2.0;
            let next = cur + sign * step;
            if next.abs() >= std::f64::consts::PI {
                break (prev.min(sign * std::f64::consts::PI), prev.max(sign * std::f64::consts::PI));
            }
            let fnext = g(next);
            if fnext >= fcur {
                break (prev.min(next), prev.max(next));
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    };
    let (theta, val) = brent(&mut g, lo, hi, tol, 100);
    if val < g0 {
        (theta, val)
    } else {
        (0.0, g0)
    }
}

/// Coordinate search on the unit sphere of `C^dim`; returns `(min, argmin)`.
pub fn minimize_on_sphere<F: Fn(&[C64]) -> f64>(objective: &F, start: Vec<C64>, search: &SphereSearch) -> (f64, Vec<C64>) {
    let dim = start.len();
    let nrm = norm(&start);
    let mut x: Vec<C64> = start.into_iter().map(|z| z / nrm).collect();
    let mut fx = objective(&x);
    let mut h = search.bracket;
    for _ in 0..search.max_sweeps {
        let f_start = fx;
        let mut largest_step = 0.0f64;
        for k in 0..2 * dim {
            let phase = if k < dim { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
            let idx = k % dim;
            // u = e - <x|e> x, where e = phase * e_idx
            let overlap = x[idx].conj() * phase;
            let mut u: Vec<C64> = x.iter().map(|z| -(z * overlap)).collect();
            u[idx] += phase;
            let un = norm(&u);
            if un < 1e-8 {
                continue;
            }
            for z in &mut u {
                *z /= un;
            }
            let (theta, val) = line_search(|t| objective(&rotate(&x, &u, t)), fx, h, search.angle_tol);
            if val < fx {
                x = rotate(&x, &u, theta);
                fx = val;
                largest_step = largest_step.max(theta.abs());
            }
        }
        if f_start - fx < search.sweep_tol {
            break;
        }
        h = (2.0 * largest_step).clamp(1e-4, search.bracket);
    }
    (fx, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let (x, fx) = brent(|t| (t - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_search_finds_smallest_rayleigh_quotient() {
        // minimize <x|H|x> for a Hermitian H: the answer is the lowest eigenvalue
        let h = crate::linalg::ComplexMatrix::from_real_rows(&[
            &[2.0, 0.5, 0.0, 0.1],
            &[0.5, 1.0, 0.3, 0.0],
            &[0.0, 0.3, -1.0, 0.2],
            &[0.1, 0.0, 0.2, 0.5],
        ])
        .unwrap();
        let lowest = crate::linalg::eigvals_hermitian(&h).unwrap()[0];
        let obj = |x: &[C64]| -> f64 {
            let hx = h.mul_vec(x);
            x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
        };
        let start = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.5, 0.0), C64::new(0.2, 0.1)];
        let (val, x) = minimize_on_sphere(&obj, start, &SphereSearch::default());
        assert!((val - lowest).abs() < 1e-10, "{val} vs {lowest}");
        assert!((norm(&x) - 1.0).abs() < 1e-14);
    }
}
