//! Independent numerical oracles for tests. Nothing here shares code with `optomech-core`.

/// Gradient-free simplex minimizer. Returns the best vertex and its value.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], step: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let scale = simplex[0].iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if spread <= tol * (vals[0].abs() + tol) && size <= tol * scale {
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                vals[n] = fe;
            } else {
                simplex[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            simplex[n] = xr;
            vals[n] = fr;
        } else {
            let xc = if fr < vals[n] { along(-0.5) } else { along(0.5) };
            let fc = f(&xc);
            if fc < vals[n].min(fr) {
                simplex[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let v: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    vals[i] = f(&v);
                    simplex[i] = v;
                }
            }
        }
    }
    let best = (0..=n).fold(0, |k, i| if vals[i] < vals[k] { i } else { k });
    (simplex[best].clone(), vals[best])
}

/// Best point of an `n x n` grid over a box, then repeated simplex polish.
pub fn grid_polish_2d<F: Fn(f64, f64) -> f64>(f: F, x_range: [f64; 2], y_range: [f64; 2], n: usize) -> ([f64; 2], f64) {
    let at = |r: [f64; 2], i: usize| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64;
    let mut best = ([at(x_range, 0), at(y_range, 0)], f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (at(x_range, i), at(y_range, j));
            let v = f(x, y);
            if v < best.1 {
                best = ([x, y], v);
            }
        }
    }
    let hx = (x_range[1] - x_range[0]) / (n - 1) as f64;
    let hy = (y_range[1] - y_range[0]) / (n - 1) as f64;
    let g = |v: &[f64]| f(v[0], v[1]);
    let mut x = best.0.to_vec();
    let mut step = [hx, hy];
    // restarts shake the simplex out of premature collapse
    for _ in 0..6 {
        let (nx, _) = nelder_mead(g, &x, &step, 1e-15, 20_000);
        x = nx;
        step = [step[0] * 0.1, step[1] * 0.1];
    }
    let v = g(&x);
    ([x[0], x[1]], v)
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Central-difference gradient.
pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenvalues of a real symmetric matrix (row-major), cyclic Jacobi, ascending.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i * n + j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Real dense matrices for naive reference operators, row-major `n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, a: vec![0.0; n * n] }
    }
    pub fn identity(n: usize) -> Self {
        let mut d = Self::zeros(n);
        for i in 0..n {
            d.a[i * n + i] = 1.0;
        }
        d
    }
    /// Truncated annihilation operator, `<k-1|a|k> = sqrt k`.
    pub fn annihilation(n: usize) -> Self {
        let mut d = Self::zeros(n);
        for k in 1..n {
            d.a[(k - 1) * n + k] = (k as f64).sqrt();
        }
        d
    }
    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut d = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                d.a[j * n + i] = self.a[i * n + j];
            }
        }
        d
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }
    pub fn mul(&self, o: &Dense) -> Dense {
        let n = self.n;
        let mut d = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * n + k];
                if x != 0.0 {
                    for j in 0..n {
                        d.a[i * n + j] += x * o.a[k * n + j];
                    }
                }
            }
        }
        d
    }
    pub fn add(&self, o: &Dense, c: f64) -> Dense {
        Dense { n: self.n, a: self.a.iter().zip(&o.a).map(|(x, y)| x + c * y).collect() }
    }
    pub fn scale(&self, c: f64) -> Dense {
        Dense { n: self.n, a: self.a.iter().map(|x| c * x).collect() }
    }
    /// Kronecker product, `self` as the slow index.
    pub fn kron(&self, o: &Dense) -> Dense {
        let (n, m) = (self.n, o.n);
        let mut d = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let x = self.a[i * n + j];
                if x == 0.0 {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        d.a[(i * m + k) * (n * m) + j * m + l] = x * o.a[k * m + l];
                    }
                }
            }
        }
        d
    }
    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi_eigenvalues(&self.a, self.n)
    }
}

/// Piecewise ground mean-field energy `(k^2 + k^-2 - 2)/4` above `k = 1`, zero below.
pub fn goldstone_energy(kappa: f64) -> f64 {
    if kappa > 1.0 {
        0.25 * (kappa * kappa + kappa.powi(-2) - 2.0)
    } else {
        0.0
    }
}

/// `d^2/dk^2` of the broken branch, `(2 + 6 k^-4)/4`.
pub fn goldstone_d2(kappa: f64) -> f64 {
    0.25 * (2.0 + 6.0 * kappa.powi(-4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_finds_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v) = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 1e-14, 50_000);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6 && v < 1e-12, "{x:?}");
    }

    #[test]
    fn grid_polish_quadratic() {
        let (x, _) = grid_polish_2d(|a, b| (a - 0.3).powi(2) + 2.0 * (b + 0.7).powi(2) + a * b, [-2.0, 2.0], [-2.0, 2.0], 50);
        let g = central_gradient(|v| (v[0] - 0.3).powi(2) + 2.0 * (v[1] + 0.7).powi(2) + v[0] * v[1], &x, 1e-6);
        assert!(norm(&g) < 1e-7, "{x:?}");
    }

    #[test]
    fn golden() {
        let x = golden_section(|x| (x - 0.25).powi(2), 0.0, 1.0, 1e-12);
        assert!((x - 0.25).abs() < 1e-10);
    }

    #[test]
    fn jacobi_oscillator() {
        let a = Dense::annihilation(12);
        let n = a.transpose().mul(&a);
        let e = n.eigenvalues();
        for (k, v) in e.iter().enumerate() {
            assert!((v - k as f64).abs() < 1e-12);
        }
        let m = Dense { n: 2, a: vec![2.0, 1.0, 1.0, 2.0] };
        let e = m.eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn goldstone_oracle() {
        assert_eq!(goldstone_energy(0.7), 0.0);
        assert!((goldstone_energy(2.0) - 0.5625).abs() < 1e-15);
        assert!((goldstone_d2(1.0) - 2.0).abs() < 1e-15);
    }
}
