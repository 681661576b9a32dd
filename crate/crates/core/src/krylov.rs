//! Restarted GMRES for complex linear systems given as a matrix-free operator.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    /// Target for `||b - A x|| / ||b||`.
    pub tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            restart: 100,
            max_iterations: 2000,
            tolerance: 1e-11,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `A x = b` starting from `x = 0`.
pub fn gmres(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    opts: &GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if b_norm == 0.0 {
        return GmresOutcome {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        let ax = apply(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / b_norm;
        if rel <= opts.tolerance {
            return GmresOutcome {
                solution: x,
                iterations,
                relative_residual: rel,
                converged: true,
            };
        }

        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        // Hessenberg columns, rotated in place
        let mut h: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = vec![Complex64::new(beta, 0.0)];

        for j in 0..m {
            iterations += 1;
            let mut w = apply(&basis[j]);
            let mut col = Vec::with_capacity(j + 2);
            for v in &basis {
                let hij = dot(v, &w);
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
                col.push(hij);
            }
            let hnext = norm(&w);
            col.push(Complex64::new(hnext, 0.0));

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, Complex64::new(0.0, 0.0))
            } else if a.norm() == 0.0 {
                (0.0, bb.conj() / bb.norm())
            } else {
                let c = a.norm() / denom;
                (c, (a / a.norm()) * bb.conj() / denom)
            };
            col[j] = c * a + s * bb;
            col[j + 1] = Complex64::new(0.0, 0.0);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s.conj() * gj);
            cs.push(c);
            sn.push(s);
            h.push(col);

            let rel = g[j + 1].norm() / b_norm;
            let breakdown = hnext <= 1e-300;
            if rel <= opts.tolerance || breakdown || iterations >= opts.max_iterations || j + 1 == m {
                // back substitution on the (j+1)x(j+1) triangle
                let k = j + 1;
                let mut y = vec![Complex64::new(0.0, 0.0); k];
                for i in (0..k).rev() {
                    let mut acc = g[i];
                    for l in i + 1..k {
                        acc -= h[l][i] * y[l];
                    }
                    y[i] = acc / h[i][i];
                }
                for (yi, v) in y.iter().zip(&basis) {
                    for (xk, vk) in x.iter_mut().zip(v) {
                        *xk += yi * vk;
                    }
                }
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
    }

    let ax = apply(&x);
    let true_rel = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / b_norm;
    GmresOutcome {
        solution: x,
        iterations,
        relative_residual: true_rel,
        converged: true_rel <= opts.tolerance * 10.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_nonhermitian_system() {
        let a = [
            [c(4.0, 1.0), c(1.0, -0.5), c(0.0, 0.2)],
            [c(0.3, 0.0), c(3.0, -2.0), c(1.0, 1.0)],
            [c(0.0, -1.0), c(0.5, 0.5), c(2.0, 0.0)],
        ];
        let x_true = [c(1.0, 2.0), c(-0.5, 0.0), c(0.25, -1.0)];
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            a.iter().map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum()).collect()
        };
        let b = apply(&x_true);
        let out = gmres(apply, &b, &GmresOptions::default());
        assert!(out.converged);
        assert!(out.iterations <= 3);
        for (x, t) in out.solution.iter().zip(&x_true) {
            assert!((x - t).norm() < 1e-12);
        }
    }

    #[test]
    fn restarts_reach_tolerance() {
        let n = 60;
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|i| {
                    let left = if i > 0 { v[i - 1] } else { c(0.0, 0.0) };
                    let right = if i + 1 < n { v[i + 1] } else { c(0.0, 0.0) };
                    c(3.0, 0.5) * v[i] - left - c(0.0, 1.0) * right
                })
                .collect()
        };
        let b: Vec<Complex64> = (0..n).map(|i| c((i as f64).sin(), 1.0)).collect();
        let opts = GmresOptions {
            restart: 5,
            ..Default::default()
        };
        let out = gmres(apply, &b, &opts);
        assert!(out.converged, "{}", out.relative_residual);
        let r = apply(&out.solution);
        let err: f64 = r.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm(&b) < 1e-10);
    }

    #[test]
    fn zero_rhs() {
        let out = gmres(|v: &[Complex64]| v.to_vec(), &[c(0.0, 0.0); 4], &GmresOptions::default());
        assert!(out.converged && out.iterations == 0);
    }
}
